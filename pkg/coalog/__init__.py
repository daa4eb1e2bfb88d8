"""Coalgebraic modal logic on finite sets and finite Boolean algebras."""

__version__ = '0.1.0'
