from typing import Optional


class CoalogError(Exception):
    pass


class ParseError(CoalogError, ValueError):

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        self.line = line
        self.column = column
        if line is not None and column is not None:
            message = f'{message} (line {line}, column {column})'
        elif column is not None:
            message = f'{message} (column {column})'
        super().__init__(message)


class ShapeError(CoalogError, ValueError):

    def __init__(self, message: str, operator: Optional[str] = None, layer: Optional[str] = None) -> None:
        self.operator = operator
        self.layer = layer
        super().__init__(message)


class FunctorMismatch(CoalogError, ValueError):
    pass


class DepthError(CoalogError, ValueError):
    pass


class ResourceLimit(CoalogError):

    def __init__(self, what: str, cardinality: int, limit: int) -> None:
        self.what = what
        self.cardinality = cardinality
        self.limit = limit
        super().__init__(f'{what}: projected size {describe_cardinality(cardinality)} exceeds limit {limit}')


class NotInvertible(CoalogError, RuntimeError):
    pass


def describe_cardinality(n: int) -> str:
    if n.bit_length() <= 64:
        return str(n)
    if n & (n - 1) == 0:
        return f'2^{n.bit_length() - 1}'
    return f'~2^{n.bit_length() - 1}'


def describe_power_of_two(exponent: int, at_least: bool = False) -> str:
    """2^exponent without building it."""
    if exponent <= 64:
        text = str(1 << exponent)
    elif exponent.bit_length() <= 64:
        text = f'2^{exponent}'
    else:
        text = f'2^({describe_cardinality(exponent)})'
    return f'at least {text}' if at_least else text
