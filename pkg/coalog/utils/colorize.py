"""Terminal colours for command output; text passes through unchanged when stdout is piped."""

import sys

from enum import Enum


class Color(Enum):
    BOLD = '1'
    GREEN = '0;32'
    RED = '0;31'
    YELLOW = '0;33'


def colorize(text: str, color: Color) -> str:
    if not sys.stdout.isatty():
        return text
    return f'\033[{color.value}m{text}\033[0m'


def bold(text: str) -> str:
    return colorize(text, Color.BOLD)


def warning(text: str) -> str:
    return colorize(text, Color.YELLOW)


def verdict(ok: bool, passed: str = 'PASS', failed: str = 'FAIL') -> str:
    """passed in green if ok, else failed in red."""
    return colorize(passed, Color.GREEN) if ok else colorize(failed, Color.RED)
