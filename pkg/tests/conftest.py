import random

from typing import Callable, Optional, Sequence

import pytest

from coalog.finstone import FinSet
from coalog.gkpf import Base, Coalgebra, FunctorExpr, Pow, SetOf, parse_functor
from coalog.suites import COVERING_FUNCTORS, size_cap


PowBuilder = Callable[..., Coalgebra]


@pytest.fixture(params=COVERING_FUNCTORS)
def covering_functor(request) -> FunctorExpr:
    return parse_functor(request.param)


@pytest.fixture
def small_size(covering_functor: FunctorExpr) -> int:
    """Largest carrier the quick run uses for the functor."""
    return size_cap(covering_functor, 3)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240601)


@pytest.fixture
def pow_coalgebra() -> PowBuilder:
    """Build a Pow-coalgebra from successor lists, e.g. pow_coalgebra([1], []) for 0 -> {1}, 1 -> {}."""
    def build(*successors: Sequence[int], names: Optional[Sequence[str]] = None) -> Coalgebra:
        carrier = FinSet.named(names) if names is not None else FinSet(len(successors))
        return Coalgebra(Pow(), carrier, tuple(SetOf.of(Base(y) for y in ys) for ys in successors))
    return build


@pytest.fixture
def two_state(pow_coalgebra: PowBuilder) -> Coalgebra:
    """0 -> {0, 1}, 1 -> {}"""
    return pow_coalgebra([0, 1], [])


@pytest.fixture
def loops(pow_coalgebra: PowBuilder) -> Coalgebra:
    """x -> {x}, y -> {y}"""
    return pow_coalgebra([0], [1], names=['x', 'y'])


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    monkeypatch.setenv('COALOG_CONFIG', str(tmp_path / 'config.json'))
    for key in ('COALOG_LIMIT', 'COALOG_SEED', 'COALOG_TRIALS', 'COALOG_WORKERS'):
        monkeypatch.delenv(key, raising=False)
    return tmp_path / 'config.json'
