"""Generalised Kripke polynomial functors on finite sets, their coalgebras and behavioural equivalence.

T-values are canonical: set-like constructors keep their members sorted by
the structural key below and free of duplicates, so structural equality is
semantic equality. Every enumeration apply_obj(T, X) is listed in key order.

Key order: Base < ConstVal < InL < InR < Pair < SetOf < NbhdOf; payloads
compare by state index or recursively, constants by name, sets by their
sorted member keys.
"""

import itertools
import logging
import random

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Callable, Dict, FrozenSet, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedInput, VisitError

from coalog.config import check_cardinality
from coalog.errors import FunctorMismatch, ParseError, ShapeError
from coalog.finstone import FinFn, FinSet
from coalog.utils.combinatorics import all_subsets


log = logging.getLogger(__name__)

Below = Tuple['FunctorExpr', ...]


class FunctorExpr:
    precedence = 4

    def __str__(self) -> str:
        return format_functor(self)


@dataclass(frozen=True)
class Id(FunctorExpr):
    pass


@dataclass(frozen=True)
class Const(FunctorExpr):
    names: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.names:
            raise ValueError('Constant functor needs at least one constant')
        if len(set(self.names)) != len(self.names):
            raise ValueError(f'Duplicate constant names in {self.names}')


@dataclass(frozen=True)
class Sum(FunctorExpr):
    left: FunctorExpr
    right: FunctorExpr
    precedence = 1


@dataclass(frozen=True)
class Prod(FunctorExpr):
    left: FunctorExpr
    right: FunctorExpr
    precedence = 2


@dataclass(frozen=True)
class Comp(FunctorExpr):
    outer: FunctorExpr
    inner: FunctorExpr
    precedence = 3


@dataclass(frozen=True)
class Pow(FunctorExpr):
    pass


@dataclass(frozen=True)
class Nbhd(FunctorExpr):
    pass


_INFIX = {Sum: '+', Prod: '*', Comp: '.'}


def format_functor(T: FunctorExpr) -> str:
    if isinstance(T, Id):
        return 'Id'
    if isinstance(T, Pow):
        return 'Pow'
    if isinstance(T, Nbhd):
        return 'Nbhd'
    if isinstance(T, Const):
        return 'Const{' + ','.join(T.names) + '}'
    left, right = (T.outer, T.inner) if isinstance(T, Comp) else (T.left, T.right)
    left_text = format_functor(left)
    right_text = format_functor(right)
    if left.precedence < T.precedence:
        left_text = f'({left_text})'
    if right.precedence <= T.precedence:
        right_text = f'({right_text})'
    return f'{left_text} {_INFIX[type(T)]} {right_text}'


def subexpressions(T: FunctorExpr) -> Iterator[FunctorExpr]:
    yield T
    if isinstance(T, (Sum, Prod)):
        yield from subexpressions(T.left)
        yield from subexpressions(T.right)
    elif isinstance(T, Comp):
        yield from subexpressions(T.outer)
        yield from subexpressions(T.inner)


def powerset_depth(T: FunctorExpr) -> int:
    """Largest number of Pow/Nbhd constructors on one nesting path."""
    if isinstance(T, (Pow, Nbhd)):
        return 1
    if isinstance(T, (Sum, Prod)):
        return max(powerset_depth(T.left), powerset_depth(T.right))
    if isinstance(T, Comp):
        return powerset_depth(T.outer) + powerset_depth(T.inner)
    return 0


FUNCTOR_GRAMMAR = r'''
    ?start: expr
    ?expr: term
         | expr "+" term            -> sum
    ?term: factor
         | term "*" factor          -> prod
    ?factor: atom
           | factor "." atom        -> comp
    ?atom: "Id"                     -> ident
         | "Pow"                    -> pow
         | "Nbhd"                   -> nbhd
         | "Const" "{" [NAME ("," NAME)*] "}"  -> const
         | "(" expr ")"
    NAME: /[A-Za-z_][A-Za-z_0-9]*/
    %import common.WS
    %ignore WS
'''


class _FunctorBuilder(Transformer):

    def ident(self, _: List[Any]) -> FunctorExpr:
        return Id()

    def pow(self, _: List[Any]) -> FunctorExpr:
        return Pow()

    def nbhd(self, _: List[Any]) -> FunctorExpr:
        return Nbhd()

    def const(self, children: List[Optional[Token]]) -> FunctorExpr:
        tokens = [token for token in children if token is not None]
        names = tuple(str(token) for token in tokens)
        if not names:
            raise ParseError('Empty constant set in Const{}')
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            token = next(token for token in tokens if str(token) == duplicates[0])
            raise ParseError(f'Duplicate constant name {duplicates[0]!r}', token.line, token.column)
        return Const(names)

    def sum(self, children: List[FunctorExpr]) -> FunctorExpr:
        return Sum(*children)

    def prod(self, children: List[FunctorExpr]) -> FunctorExpr:
        return Prod(*children)

    def comp(self, children: List[FunctorExpr]) -> FunctorExpr:
        return Comp(*children)


_functor_parser = Lark(FUNCTOR_GRAMMAR, parser='lalr')


def parse_functor(text: str) -> FunctorExpr:
    try:
        return _FunctorBuilder().transform(_functor_parser.parse(text))
    except UnexpectedInput as e:
        raise ParseError(f'Invalid functor expression {text!r}', e.line, e.column) from None
    except VisitError as e:
        if isinstance(e.orig_exc, ParseError):
            raise e.orig_exc from None
        raise


Payload = Union[int, 'TValue']


def payload_key(payload: Payload) -> Any:
    return payload if isinstance(payload, int) else payload.sort_key


class TValue:

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        raise NotImplementedError

    def __lt__(self, other: 'TValue') -> bool:
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        return format_value(self)


@dataclass(frozen=True)
class Base(TValue):
    value: Payload

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        return (0, payload_key(self.value))


@dataclass(frozen=True)
class ConstVal(TValue):
    name: str

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        return (1, self.name)


@dataclass(frozen=True)
class InL(TValue):
    value: TValue

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        return (2, self.value.sort_key)


@dataclass(frozen=True)
class InR(TValue):
    value: TValue

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        return (3, self.value.sort_key)


@dataclass(frozen=True)
class Pair(TValue):
    left: TValue
    right: TValue

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        return (4, self.left.sort_key, self.right.sort_key)


@dataclass(frozen=True)
class SetOf(TValue):
    members: Tuple[TValue, ...]

    @classmethod
    def of(cls, members: Iterable[TValue]) -> 'SetOf':
        return cls(tuple(sorted(set(members), key=lambda member: member.sort_key)))

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        return (5, tuple(member.sort_key for member in self.members))


@dataclass(frozen=True)
class NbhdOf(TValue):
    family: Tuple[Tuple[Payload, ...], ...]

    @classmethod
    def of(cls, family: Iterable[Iterable[Payload]]) -> 'NbhdOf':
        subsets = {tuple(sorted(set(subset), key=payload_key)) for subset in family}
        return cls(tuple(sorted(subsets, key=_subset_key)))

    @cached_property
    def sort_key(self) -> Tuple[Any, ...]:
        return (6, tuple(_subset_key(subset) for subset in self.family))

    @cached_property
    def members(self) -> FrozenSet[Tuple[Payload, ...]]:
        return frozenset(self.family)


def _subset_key(subset: Sequence[Payload]) -> Tuple[Any, ...]:
    return tuple(payload_key(p) for p in subset)


def format_value(value: Union[TValue, int], labels: Optional[Sequence[str]] = None) -> str:
    def payload(p: Payload) -> str:
        if isinstance(p, int):
            return labels[p] if labels is not None else str(p)
        return format_value(p, labels)

    if isinstance(value, int):
        return payload(value)
    if isinstance(value, Base):
        return payload(value.value)
    if isinstance(value, ConstVal):
        return f"'{value.name}"
    if isinstance(value, InL):
        return f'inl({format_value(value.value, labels)})'
    if isinstance(value, InR):
        return f'inr({format_value(value.value, labels)})'
    if isinstance(value, Pair):
        return f'({format_value(value.left, labels)}, {format_value(value.right, labels)})'
    if isinstance(value, SetOf):
        return '{' + ', '.join(format_value(member, labels) for member in value.members) + '}'
    if isinstance(value, NbhdOf):
        return '{' + ', '.join('{' + ', '.join(payload(p) for p in subset) + '}' for subset in value.family) + '}'
    raise TypeError(f'Not a T-value: {value!r}')


SATURATION_EXPONENT = 1 << 17


def exp2(exponent: int) -> int:
    # beyond this the number is only ever compared against a limit
    return 1 << min(exponent, SATURATION_EXPONENT)


def saturated(count: int) -> bool:
    """True if count came out of a capped exp2 and is only a lower bound."""
    return count.bit_length() > SATURATION_EXPONENT


def cardinality(T: FunctorExpr, n: int, below: Below = ()) -> int:
    """|T(X)| for |X| = n (with Id leaves resolved through below)."""
    if isinstance(T, Id):
        return cardinality(below[0], n, below[1:]) if below else n
    if isinstance(T, Const):
        return len(T.names)
    if isinstance(T, Sum):
        return cardinality(T.left, n, below) + cardinality(T.right, n, below)
    if isinstance(T, Prod):
        return cardinality(T.left, n, below) * cardinality(T.right, n, below)
    if isinstance(T, Comp):
        return cardinality(T.outer, n, (T.inner,) + below)
    base = cardinality(Id(), n, below)
    if isinstance(T, Pow):
        return exp2(base)
    if isinstance(T, Nbhd):
        return exp2(exp2(base))
    raise TypeError(f'Not a functor expression: {T!r}')


def points(n: int, below: Below = ()) -> Tuple[Payload, ...]:
    """The payloads an Id leaf ranges over: states, or values of the functors below."""
    if not below:
        return tuple(range(n))
    return _enumerate(below[0], n, below[1:])


@lru_cache(maxsize=512)
def _enumerate(T: FunctorExpr, n: int, below: Below) -> Tuple[TValue, ...]:
    if isinstance(T, Id):
        return tuple(Base(p) for p in points(n, below))
    if isinstance(T, Const):
        return tuple(ConstVal(name) for name in sorted(T.names))
    if isinstance(T, Sum):
        return tuple(InL(v) for v in _enumerate(T.left, n, below)) + tuple(InR(v) for v in _enumerate(T.right, n, below))
    if isinstance(T, Prod):
        rights = _enumerate(T.right, n, below)
        return tuple(Pair(left, right) for left in _enumerate(T.left, n, below) for right in rights)
    if isinstance(T, Comp):
        return _enumerate(T.outer, n, (T.inner,) + below)
    base = points(n, below)
    if isinstance(T, Pow):
        values = [SetOf(tuple(Base(p) for p in subset)) for subset in all_subsets(base)]
    elif isinstance(T, Nbhd):
        subsets = sorted(all_subsets(base), key=_subset_key)
        values = [NbhdOf(family) for family in all_subsets(subsets)]
    else:
        raise TypeError(f'Not a functor expression: {T!r}')
    return tuple(sorted(values, key=lambda value: value.sort_key))


def apply_obj(T: FunctorExpr, X: FinSet) -> FinSet:
    """T(X) as a finite set whose elements decode to T-values, in canonical order."""
    check_cardinality(cardinality(T, X.size), f'{T} on a set of size {X.size}')
    return _tset(T, X.size)


@lru_cache(maxsize=256)
def _tset(T: FunctorExpr, n: int) -> FinSet:
    values = _enumerate(T, n, ())
    log.debug('enumerated %s on %d points: %d values', T, n, len(values))
    return FinSet(len(values), None, values)


def enumerate_layer(T: FunctorExpr, n: int, below: Below = ()) -> Tuple[TValue, ...]:
    check_cardinality(cardinality(T, n, below), f'{T} layer on a set of size {n}')
    return _enumerate(T, n, below)


def _memo(f: Callable[[Payload], Payload]) -> Callable[[Payload], Payload]:
    cache: Dict[Payload, Payload] = {}

    def wrapper(p: Payload) -> Payload:
        if p not in cache:
            cache[p] = f(p)
        return cache[p]
    return wrapper


def _map(T: FunctorExpr, value: TValue, leaf: Callable[[Payload], Payload],
         n_dom: int, n_cod: int, below: Below) -> TValue:
    if isinstance(T, Id):
        return Base(leaf(value.value))
    if isinstance(T, Const):
        return value
    if isinstance(T, Sum):
        if isinstance(value, InL):
            return InL(_map(T.left, value.value, leaf, n_dom, n_cod, below))
        return InR(_map(T.right, value.value, leaf, n_dom, n_cod, below))
    if isinstance(T, Prod):
        return Pair(_map(T.left, value.left, leaf, n_dom, n_cod, below),
                    _map(T.right, value.right, leaf, n_dom, n_cod, below))
    if isinstance(T, Comp):
        inner = _memo(lambda u: _map(T.inner, u, leaf, n_dom, n_cod, below))
        return _map(T.outer, value, inner, n_dom, n_cod, (T.inner,) + below)
    if isinstance(T, Pow):
        return SetOf.of(Base(leaf(member.value)) for member in value.members)
    if isinstance(T, Nbhd):
        # Nbhd f (N) = { b | f^-1(b) in N }
        dom_points = points(n_dom, below)
        images = {p: leaf(p) for p in dom_points}
        family = value.members
        kept = []
        for subset in all_subsets(points(n_cod, below)):
            chosen = set(subset)
            if tuple(p for p in dom_points if images[p] in chosen) in family:
                kept.append(subset)
        return NbhdOf.of(kept)
    raise TypeError(f'Not a functor expression: {T!r}')


def map_value(T: FunctorExpr, value: TValue, f: FinFn) -> TValue:
    """T f applied to a single T-value over dom f."""
    return _map(T, value, f.table.__getitem__, f.dom.size, f.cod.size, ())


def apply_fn(T: FunctorExpr, f: FinFn) -> FinFn:
    dom = apply_obj(T, f.dom)
    cod = apply_obj(T, f.cod)
    table = tuple(cod.index(map_value(T, value, f)) for value in dom.elements)
    return FinFn(dom, cod, table)


def check_value(T: FunctorExpr, value: Any, n: int, below: Below = ()) -> None:
    """Raise ShapeError unless value is a canonical T-value over a set of size n."""
    def fail(expected: str) -> None:
        raise ShapeError(f'Value {value!r} does not fit {T}: expected {expected}', layer=str(T))

    def check_payload(p: Any) -> None:
        if below:
            check_value(below[0], p, n, below[1:])
        elif not isinstance(p, int) or isinstance(p, bool) or not 0 <= p < n:
            raise ShapeError(f'State index {p!r} outside carrier of size {n}')

    if isinstance(T, Id):
        if not isinstance(value, Base):
            fail('a state')
        check_payload(value.value)
    elif isinstance(T, Const):
        if not isinstance(value, ConstVal) or value.name not in T.names:
            fail('one of the constants ' + ', '.join(f"'{name}" for name in T.names))
    elif isinstance(T, Sum):
        if isinstance(value, InL):
            check_value(T.left, value.value, n, below)
        elif isinstance(value, InR):
            check_value(T.right, value.value, n, below)
        else:
            fail('inl(...) or inr(...)')
    elif isinstance(T, Prod):
        if not isinstance(value, Pair):
            fail('a pair')
        check_value(T.left, value.left, n, below)
        check_value(T.right, value.right, n, below)
    elif isinstance(T, Comp):
        check_value(T.outer, value, n, (T.inner,) + below)
    elif isinstance(T, Pow):
        if not isinstance(value, SetOf) or SetOf.of(value.members) != value:
            fail('a canonical set of states')
        for member in value.members:
            check_value(Id(), member, n, below)
    elif isinstance(T, Nbhd):
        if not isinstance(value, NbhdOf) or NbhdOf.of(value.family) != value:
            fail('a canonical set of sets of states')
        for subset in value.family:
            for p in subset:
                check_payload(p)
    else:
        raise TypeError(f'Not a functor expression: {T!r}')


VALUE_GRAMMAR = r'''
    ?value: NAME                        -> state
          | CONST                       -> const
          | INL "(" value ")"           -> inl
          | INR "(" value ")"           -> inr
          | "(" value "," value ")"     -> pair
          | "{" [value ("," value)*] "}" -> set
    INL.2: /inl(?=\s*\()/
    INR.2: /inr(?=\s*\()/
    CONST: /'[A-Za-z_][A-Za-z_0-9]*/
    NAME: /[A-Za-z_0-9][A-Za-z_0-9.]*/
    %import common.WS
    %ignore WS
'''


class _RawValueBuilder(Transformer):
    """Functor-agnostic reading of the value syntax; decode_value gives it a shape."""

    def state(self, children: List[Token]) -> Tuple[Any, ...]:
        return ('state', str(children[0]))

    def const(self, children: List[Token]) -> Tuple[Any, ...]:
        return ('const', str(children[0])[1:])

    def inl(self, children: List[Any]) -> Tuple[Any, ...]:
        return ('inl', children[-1])

    def inr(self, children: List[Any]) -> Tuple[Any, ...]:
        return ('inr', children[-1])

    def pair(self, children: List[Any]) -> Tuple[Any, ...]:
        return ('pair', children[0], children[1])

    def set(self, children: List[Any]) -> Tuple[Any, ...]:
        return ('set', tuple(child for child in children if child is not None))


_value_parser = Lark(VALUE_GRAMMAR, start='value', parser='lalr')


def parse_raw_value(text: str) -> Tuple[Any, ...]:
    try:
        return _RawValueBuilder().transform(_value_parser.parse(text))
    except UnexpectedInput as e:
        raise ParseError(f'Invalid value {text!r}', e.line, e.column) from None


def decode_value(T: FunctorExpr, raw: Tuple[Any, ...], states: Callable[[str], int], below: Below = ()) -> TValue:
    """Give a raw parsed value the shape of T; state names are resolved by states."""
    def payload(item: Tuple[Any, ...]) -> Payload:
        if below:
            return decode_value(below[0], item, states, below[1:])
        if item[0] != 'state':
            raise ShapeError(f'Expected a state name, got {_describe_raw(item)}', layer='state')
        return states(item[1])

    kind = raw[0]
    if isinstance(T, Id):
        return Base(payload(raw))
    if isinstance(T, Comp):
        return decode_value(T.outer, raw, states, (T.inner,) + below)
    if isinstance(T, Const):
        if kind != 'const' or raw[1] not in T.names:
            raise ShapeError(f'Expected a constant of {T}, got {_describe_raw(raw)}', layer=str(T))
        return ConstVal(raw[1])
    if isinstance(T, Sum):
        if kind == 'inl':
            return InL(decode_value(T.left, raw[1], states, below))
        if kind == 'inr':
            return InR(decode_value(T.right, raw[1], states, below))
        raise ShapeError(f'Expected inl(...) or inr(...) for {T}, got {_describe_raw(raw)}', layer=str(T))
    if isinstance(T, Prod):
        if kind != 'pair':
            raise ShapeError(f'Expected a pair for {T}, got {_describe_raw(raw)}', layer=str(T))
        return Pair(decode_value(T.left, raw[1], states, below), decode_value(T.right, raw[2], states, below))
    if isinstance(T, Pow):
        if kind != 'set':
            raise ShapeError(f'Expected a set for Pow, got {_describe_raw(raw)}', layer='Pow')
        return SetOf.of(Base(payload(item)) for item in raw[1])
    if isinstance(T, Nbhd):
        if kind != 'set' or any(item[0] != 'set' for item in raw[1]):
            raise ShapeError(f'Expected a set of sets for Nbhd, got {_describe_raw(raw)}', layer='Nbhd')
        return NbhdOf.of([payload(p) for p in item[1]] for item in raw[1])
    raise TypeError(f'Not a functor expression: {T!r}')


def _describe_raw(raw: Tuple[Any, ...]) -> str:
    kind = raw[0]
    if kind == 'state':
        return f'state {raw[1]}'
    if kind == 'const':
        return f"constant '{raw[1]}"
    return {'inl': 'inl(...)', 'inr': 'inr(...)', 'pair': 'a pair', 'set': 'a set'}[kind]


def parse_value(T: FunctorExpr, text: str, carrier: FinSet) -> TValue:
    def states(name: str) -> int:
        try:
            return carrier.index_of_label(name)
        except ValueError:
            raise ShapeError(f'Unknown state {name!r}', layer='state') from None
    return decode_value(T, parse_raw_value(text), states)


@dataclass(frozen=True)
class Coalgebra:
    functor: FunctorExpr
    carrier: FinSet
    structure: Tuple[TValue, ...]

    def __post_init__(self) -> None:
        if len(self.structure) != self.carrier.size:
            raise ValueError(f'Structure has {len(self.structure)} entries for {self.carrier.size} states')
        for value in self.structure:
            check_value(self.functor, value, self.carrier.size)

    @property
    def size(self) -> int:
        return self.carrier.size

    def structure_fn(self) -> FinFn:
        """xi as an arrow carrier -> T(carrier)."""
        tset = apply_obj(self.functor, self.carrier)
        return FinFn(self.carrier, tset, tuple(tset.index(value) for value in self.structure))

    def state_labels(self) -> List[str]:
        return [self.carrier.label(x) for x in range(self.size)]

    def describe(self, x: int) -> str:
        return format_value(self.structure[x], self.state_labels())


@dataclass(frozen=True)
class Partition:
    carrier: FinSet
    blocks: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.blocks) != self.carrier.size:
            raise ValueError('Partition must assign a block to every element')
        seen = -1
        for block in self.blocks:
            if block > seen + 1:
                raise ValueError('Partition block ids must be numbered in order of first appearance')
            seen = max(seen, block)

    @classmethod
    def from_keys(cls, carrier: FinSet, keys: Sequence[Hashable]) -> 'Partition':
        ids: Dict[Hashable, int] = {}
        return cls(carrier, tuple(ids.setdefault(key, len(ids)) for key in keys))

    @classmethod
    def from_sets(cls, carrier: FinSet, sets: Iterable[Iterable[int]]) -> 'Partition':
        owner = {x: i for i, block in enumerate(sets) for x in block}
        return cls.from_keys(carrier, [owner[x] for x in range(carrier.size)])

    @property
    def count(self) -> int:
        return len(set(self.blocks))

    def members(self, block: int) -> List[int]:
        return [x for x, b in enumerate(self.blocks) if b == block]

    def as_sets(self) -> List[FrozenSet[int]]:
        return [frozenset(self.members(block)) for block in range(self.count)]

    def same_block(self, x: int, y: int) -> bool:
        return self.blocks[x] == self.blocks[y]

    def refines(self, other: 'Partition') -> bool:
        """True if every block of self lies inside a block of other."""
        return all(other.same_block(x, y) for x in range(len(self.blocks)) for y in range(x)
                   if self.same_block(x, y))

    def quotient_set(self) -> FinSet:
        labels = tuple('{' + ','.join(self.carrier.label(x) for x in self.members(block)) + '}'
                       for block in range(self.count))
        return FinSet(self.count, labels)

    def quotient_map(self) -> FinFn:
        return FinFn(self.carrier, self.quotient_set(), self.blocks)


def coproduct_coalgebra(c1: Coalgebra, c2: Coalgebra) -> Tuple[Coalgebra, FinFn, FinFn]:
    if c1.functor != c2.functor:
        raise FunctorMismatch(f'Cannot combine a {c1.functor} coalgebra with a {c2.functor} coalgebra')
    m, n = c1.size, c2.size
    labels = tuple(f'1.{c1.carrier.label(x)}' for x in range(m)) + tuple(f'2.{c2.carrier.label(y)}' for y in range(n))
    carrier = FinSet(m + n, labels)
    inj1 = FinFn(c1.carrier, carrier, tuple(range(m)))
    inj2 = FinFn(c2.carrier, carrier, tuple(range(m, m + n)))
    structure = tuple(map_value(c1.functor, value, inj1) for value in c1.structure) + \
        tuple(map_value(c2.functor, value, inj2) for value in c2.structure)
    return Coalgebra(c1.functor, carrier, structure), inj1, inj2


def is_morphism(src: Coalgebra, dst: Coalgebra, f: FinFn) -> bool:
    """T f . xi_src = xi_dst . f"""
    if src.functor != dst.functor:
        raise FunctorMismatch(f'{src.functor} and {dst.functor} coalgebras cannot be related by a morphism')
    if f.dom.size != src.size or f.cod.size != dst.size:
        raise ShapeError(f'Function {f.dom.size} -> {f.cod.size} does not go between carriers of size '
                         f'{src.size} and {dst.size}')
    return all(map_value(src.functor, src.structure[x], f) == dst.structure[f(x)] for x in range(src.size))


def quotient_coalgebra(c: Coalgebra, partition: Partition) -> Tuple[Coalgebra, FinFn]:
    """Coalgebra on the blocks, read off from one representative per block.

    Only a coalgebra (and the projection a morphism) when partition is
    stable, e.g. the behavioural partition.
    """
    q = partition.quotient_map()
    structure = tuple(map_value(c.functor, c.structure[partition.members(block)[0]], q)
                      for block in range(partition.count))
    return Coalgebra(c.functor, q.cod, structure), q


def behavioural_quotient(c: Coalgebra) -> Tuple[Partition, Coalgebra, FinFn]:
    partition = Partition.from_keys(c.carrier, [0] * c.size)
    for round_number in itertools.count(1):
        q = partition.quotient_map()
        keys = [(partition.blocks[x], map_value(c.functor, c.structure[x], q)) for x in range(c.size)]
        refined = Partition.from_keys(c.carrier, keys)
        log.debug('refinement round %d: %d -> %d blocks', round_number, partition.count, refined.count)
        if refined.count == partition.count:
            break
        partition = refined
    quotient, projection = quotient_coalgebra(c, partition)
    return partition, quotient, projection


def behavioural_partition(c: Coalgebra) -> Partition:
    return behavioural_quotient(c)[0]


def random_value(T: FunctorExpr, n: int, rng: random.Random, below: Below = ()) -> TValue:
    """Sample a T-value structurally; only Id leaves and Nbhd need the points below."""
    if isinstance(T, Id):
        return Base(rng.choice(points(n, below)))
    if isinstance(T, Const):
        return ConstVal(rng.choice(T.names))
    if isinstance(T, Sum):
        if rng.random() < 0.5:
            return InL(random_value(T.left, n, rng, below))
        return InR(random_value(T.right, n, rng, below))
    if isinstance(T, Prod):
        return Pair(random_value(T.left, n, rng, below), random_value(T.right, n, rng, below))
    if isinstance(T, Comp):
        return random_value(T.outer, n, rng, (T.inner,) + below)
    if isinstance(T, Pow):
        return SetOf.of(Base(p) for p in points(n, below) if rng.random() < 0.5)
    if isinstance(T, Nbhd):
        return NbhdOf.of(subset for subset in all_subsets(points(n, below)) if rng.random() < 0.5)
    raise TypeError(f'Not a functor expression: {T!r}')


def random_coalgebra(T: FunctorExpr, size: int, rng: random.Random) -> Coalgebra:
    if size == 0:
        return Coalgebra(T, FinSet(0), ())
    return Coalgebra(T, FinSet(size), tuple(random_value(T, size, rng) for _ in range(size)))


def all_coalgebras(T: FunctorExpr, size: int) -> Iterator[Coalgebra]:
    """Every T-coalgebra on range(size), structures in lexicographic canonical order."""
    carrier = FinSet(size)
    tset = apply_obj(T, carrier)
    check_cardinality(tset.size ** size, f'{T}-coalgebras on {size} states')
    for structure in itertools.product(tset.elements, repeat=size):
        yield Coalgebra(T, carrier, structure)
