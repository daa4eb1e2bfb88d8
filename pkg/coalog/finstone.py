"""Finite Boolean algebras in powerset-of-atoms form and the finite P/S duality.

Every finite Boolean algebra is kept normalised as the powerset of its atoms,
so an element is a set of atom indices and a homomorphism is stored dually as
a map between atom sets whose preimage is the forward action.
"""

import itertools
import logging

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from coalog.config import check_cardinality
from coalog.errors import NotInvertible
from coalog.utils.combinatorics import all_functions


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FinSet:
    size: int
    labels: Optional[Tuple[str, ...]] = field(default=None, compare=False)
    elements: Optional[Tuple[Hashable, ...]] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.size < 0:
            raise ValueError(f'FinSet size must be non-negative, got {self.size}')
        if self.labels is not None:
            if len(self.labels) != self.size:
                raise ValueError(f'Expected {self.size} labels, got {len(self.labels)}')
            if len(set(self.labels)) != self.size:
                raise ValueError('FinSet labels must be pairwise distinct')
        if self.elements is not None and len(self.elements) != self.size:
            raise ValueError(f'Expected {self.size} decoded elements, got {len(self.elements)}')

    @classmethod
    def of(cls, elements: Sequence[Hashable], labels: Optional[Sequence[str]] = None) -> 'FinSet':
        elements = tuple(elements)
        if labels is None:
            labels = [str(element) for element in elements]
            if len(set(labels)) != len(labels):
                labels = None
        return cls(len(elements), tuple(labels) if labels is not None else None, elements)

    @classmethod
    def named(cls, names: Sequence[str]) -> 'FinSet':
        return cls(len(names), tuple(names))

    def label(self, i: int) -> str:
        if self.labels is not None:
            return self.labels[i]
        return str(self.elements[i]) if self.elements is not None else str(i)

    def element(self, i: int) -> Hashable:
        return self.elements[i] if self.elements is not None else i

    @cached_property
    def _positions(self) -> Dict[Hashable, int]:
        return {element: i for i, element in enumerate(self.elements or ())}

    def index(self, element: Hashable) -> int:
        if self.elements is None:
            if isinstance(element, int) and 0 <= element < self.size:
                return element
            raise KeyError(element)
        return self._positions[element]

    def index_of_label(self, label: str) -> int:
        if self.labels is None:
            index = int(label)
            if not 0 <= index < self.size:
                raise ValueError(f'No element labelled {label!r}')
            return index
        return self.labels.index(label)

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.size))

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class FinFn:
    dom: FinSet
    cod: FinSet
    table: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.table) != self.dom.size:
            raise ValueError(f'Function table has {len(self.table)} entries for a domain of size {self.dom.size}')
        for value in self.table:
            if not 0 <= value < self.cod.size:
                raise ValueError(f'Function value {value} outside codomain of size {self.cod.size}')

    @classmethod
    def identity(cls, X: FinSet) -> 'FinFn':
        return cls(X, X, tuple(range(X.size)))

    @classmethod
    def constant(cls, X: FinSet, Y: FinSet, value: int) -> 'FinFn':
        return cls(X, Y, (value,) * X.size)

    def __call__(self, x: int) -> int:
        return self.table[x]

    def compose(self, inner: 'FinFn') -> 'FinFn':
        """Return self after inner."""
        if inner.cod.size != self.dom.size:
            raise ValueError('Cannot compose functions with mismatched domain and codomain')
        return FinFn(inner.dom, self.cod, tuple(self.table[y] for y in inner.table))

    def preimage(self, subset: Iterable[int]) -> FrozenSet[int]:
        subset = frozenset(subset)
        return frozenset(x for x, y in enumerate(self.table) if y in subset)

    def image(self, subset: Iterable[int]) -> FrozenSet[int]:
        return frozenset(self.table[x] for x in subset)

    def is_injective(self) -> bool:
        return len(set(self.table)) == len(self.table)

    def is_surjective(self) -> bool:
        return len(set(self.table)) == self.cod.size

    def is_bijective(self) -> bool:
        return self.dom.size == self.cod.size and self.is_injective()

    def inverse(self) -> 'FinFn':
        if not self.is_bijective():
            raise NotInvertible(f'Function of size {self.dom.size} -> {self.cod.size} is not a bijection')
        table = [0] * self.cod.size
        for x, y in enumerate(self.table):
            table[y] = x
        return FinFn(self.cod, self.dom, tuple(table))


@dataclass(frozen=True)
class FinBA:
    atoms: FinSet

    @property
    def size(self) -> int:
        """Number of elements."""
        return 1 << self.atoms.size

    @property
    def top(self) -> 'BAElem':
        return BAElem(self, frozenset(range(self.atoms.size)))

    @property
    def bottom(self) -> 'BAElem':
        return BAElem(self, frozenset())

    def element(self, atomset: Iterable[int]) -> 'BAElem':
        return BAElem(self, frozenset(atomset))

    def atom(self, i: int) -> 'BAElem':
        return BAElem(self, frozenset((i,)))

    def atom_elements(self) -> List['BAElem']:
        return [self.atom(i) for i in range(self.atoms.size)]

    def elements(self) -> Iterator['BAElem']:
        """All elements, in bitmask order over the atoms."""
        check_cardinality(self.size, 'Boolean algebra elements')
        n = self.atoms.size
        for mask in range(1 << n):
            yield BAElem(self, frozenset(i for i in range(n) if mask >> i & 1))

    def describe(self, element: 'BAElem') -> str:
        return '{' + ', '.join(self.atoms.label(i) for i in sorted(element.atomset)) + '}'


@dataclass(frozen=True)
class BAElem:
    algebra: FinBA
    atomset: FrozenSet[int]

    def __post_init__(self) -> None:
        for i in self.atomset:
            if not 0 <= i < self.algebra.atoms.size:
                raise ValueError(f'Atom index {i} outside algebra with {self.algebra.atoms.size} atoms')

    def _check(self, other: 'BAElem') -> None:
        if other.algebra != self.algebra:
            raise ValueError('Elements belong to different algebras')

    def __and__(self, other: 'BAElem') -> 'BAElem':
        self._check(other)
        return BAElem(self.algebra, self.atomset & other.atomset)

    def __or__(self, other: 'BAElem') -> 'BAElem':
        self._check(other)
        return BAElem(self.algebra, self.atomset | other.atomset)

    def __invert__(self) -> 'BAElem':
        return BAElem(self.algebra, frozenset(range(self.algebra.atoms.size)) - self.atomset)

    def implies(self, other: 'BAElem') -> 'BAElem':
        return ~self | other

    def iff(self, other: 'BAElem') -> 'BAElem':
        return self.implies(other) & other.implies(self)

    def __le__(self, other: 'BAElem') -> bool:
        self._check(other)
        return self.atomset <= other.atomset

    @property
    def is_top(self) -> bool:
        return len(self.atomset) == self.algebra.atoms.size

    @property
    def is_bottom(self) -> bool:
        return not self.atomset


@dataclass(frozen=True)
class BAHom:
    src: FinBA
    dst: FinBA
    dual: FinFn

    def __post_init__(self) -> None:
        if self.dual.dom.size != self.dst.atoms.size or self.dual.cod.size != self.src.atoms.size:
            raise ValueError('Dual map of a homomorphism must go from atoms(dst) to atoms(src)')

    @classmethod
    def identity(cls, A: FinBA) -> 'BAHom':
        return cls(A, A, FinFn.identity(A.atoms))

    def apply(self, element: BAElem) -> BAElem:
        return BAElem(self.dst, self.dual.preimage(element.atomset))

    __call__ = apply

    def compose(self, inner: 'BAHom') -> 'BAHom':
        """Return self after inner."""
        return BAHom(inner.src, self.dst, inner.dual.compose(self.dual))

    def is_injective(self) -> bool:
        return self.dual.is_surjective()

    def is_surjective(self) -> bool:
        return self.dual.is_injective()

    def is_bijective(self) -> bool:
        return self.dual.is_bijective()


def powerset_algebra(X: FinSet) -> FinBA:
    return FinBA(X)


def powerset_hom(f: FinFn) -> BAHom:
    """P f : P(cod f) -> P(dom f), the contravariant powerset on arrows."""
    return BAHom(powerset_algebra(f.cod), powerset_algebra(f.dom), f)


def spec(A: FinBA) -> FinSet:
    """The ultrafilters of a finite algebra, i.e. its atoms."""
    return A.atoms


def spec_hom(h: BAHom) -> FinFn:
    return h.dual


def unit_iota(A: FinBA) -> BAHom:
    """iota_A : A -> P S A, sending an element to the ultrafilters containing it."""
    # the principal ultrafilter at atom i contains e iff i is in e
    return BAHom(A, powerset_algebra(spec(A)), FinFn(spec(A), A.atoms, tuple(range(A.atoms.size))))


def counit_eps(X: FinSet) -> FinFn:
    """eps_X : X -> S P X, sending a point to its principal ultrafilter."""
    return FinFn(X, spec(powerset_algebra(X)), tuple(range(X.size)))


def valuation_label(true_vars: FrozenSet[str], variables: Sequence[str]) -> str:
    if not variables:
        return '*'
    return ','.join(name if name in true_vars else f'~{name}' for name in variables)


def free_ba(variables: Sequence[str]) -> FinBA:
    """The free Boolean algebra on the given variables.

    Atoms are the valuations, enumerated as bitmasks with the first variable as
    the least significant bit; each atom decodes to the frozenset of its true
    variables.
    """
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise ValueError(f'Variable names must be distinct: {variables}')
    check_cardinality(1 << len(variables), 'free algebra atoms')
    valuations = [
        frozenset(name for i, name in enumerate(variables) if mask >> i & 1)
        for mask in range(1 << len(variables))
    ]
    labels = [valuation_label(valuation, variables) for valuation in valuations]
    return FinBA(FinSet(len(valuations), tuple(labels), tuple(valuations)))


def var_elem(A: FinBA, name: str) -> BAElem:
    """The element of a free algebra (or of an algebra whose atoms carry valuations) for a variable."""
    return BAElem(A, frozenset(i for i in range(A.atoms.size) if name in _valuation_of(A.atoms.element(i))))


def _valuation_of(element: Hashable) -> FrozenSet[str]:
    if isinstance(element, frozenset):
        return element
    if isinstance(element, tuple) and element and isinstance(element[0], frozenset):
        return element[0]
    raise ValueError(f'Atom {element!r} does not carry a valuation')


def ba_coproduct(A: FinBA, B: FinBA) -> Tuple[FinBA, BAHom, BAHom]:
    """A (+) B with atoms the pairs of atoms; the injections are dual to the projections."""
    size = A.atoms.size * B.atoms.size
    check_cardinality(size, 'coproduct atoms')
    pairs = list(itertools.product(range(A.atoms.size), range(B.atoms.size)))
    labels = tuple(f'({A.atoms.label(a)}, {B.atoms.label(b)})' for a, b in pairs)
    elements = tuple((A.atoms.element(a), B.atoms.element(b)) for a, b in pairs)
    C = FinBA(FinSet(size, labels, elements))
    inj_a = BAHom(A, C, FinFn(C.atoms, A.atoms, tuple(a for a, _ in pairs)))
    inj_b = BAHom(B, C, FinFn(C.atoms, B.atoms, tuple(b for _, b in pairs)))
    return C, inj_a, inj_b


def quotient_by(A: FinBA, pairs: Sequence[Tuple[BAElem, BAElem]]) -> Tuple[FinBA, BAHom]:
    """Quotient of A by the congruence generated by the given pairs.

    Filters of a finite algebra are principal, so the congruence is determined
    by the meet of the biconditionals and the quotient keeps the atoms below it.
    """
    for s, t in pairs:
        if s.algebra != A or t.algebra != A:
            raise ValueError('Quotient pairs must be elements of the algebra being quotiented')
    f = reduce(lambda acc, pair: acc & pair[0].iff(pair[1]), pairs, A.top)
    kept = sorted(f.atomset)
    atoms = FinSet(
        len(kept),
        tuple(A.atoms.label(i) for i in kept) if A.atoms.labels is not None else None,
        tuple(A.atoms.element(i) for i in kept) if A.atoms.elements is not None else None,
    )
    Q = FinBA(atoms)
    log.debug('quotient keeps %d of %d atoms', len(kept), A.atoms.size)
    return Q, BAHom(A, Q, FinFn(atoms, A.atoms, tuple(kept)))


def generated_partition(X: FinSet, subsets: Iterable[FrozenSet[int]]) -> List[FrozenSet[int]]:
    """Atoms of the subalgebra of P X generated by the given subsets, in order of least element."""
    keys: Dict[int, Tuple[bool, ...]] = {x: () for x in range(X.size)}
    for subset in subsets:
        for x in keys:
            keys[x] += (x in subset,)
    blocks: Dict[Tuple[bool, ...], List[int]] = {}
    for x in range(X.size):
        blocks.setdefault(keys[x], []).append(x)
    return sorted((frozenset(block) for block in blocks.values()), key=min)


def hom_from_table(src: FinBA, dst: FinBA, images: Mapping[FrozenSet[int], FrozenSet[int]]) -> BAHom:
    """Build the homomorphism with the given forward table (atom set -> atom set).

    The table must cover every element of src; a table that is not a
    homomorphism is rejected with ValueError.
    """
    dual: List[int] = []
    for b in range(dst.atoms.size):
        owners = [a for a in range(src.atoms.size) if b in images.get(frozenset((a,)), frozenset())]
        if len(owners) != 1:
            raise ValueError(f'Atom {dst.atoms.label(b)} of the target lies below {len(owners)} atom images')
        dual.append(owners[0])
    hom = BAHom(src, dst, FinFn(dst.atoms, src.atoms, tuple(dual)))
    for element in src.elements():
        image = images.get(element.atomset)
        if image is None:
            raise ValueError(f'Table does not cover element {src.describe(element)}')
        if frozenset(image) != hom.apply(element).atomset:
            raise ValueError(f'Table is not a homomorphism at element {src.describe(element)}')
    return hom


def all_homs(src: FinBA, dst: FinBA) -> Iterator[BAHom]:
    """Every homomorphism src -> dst, via their duals atoms(dst) -> atoms(src)."""
    check_cardinality(src.atoms.size ** dst.atoms.size, 'homomorphisms')
    for table in all_functions(dst.atoms.size, src.atoms.size):
        yield BAHom(src, dst, FinFn(dst.atoms, src.atoms, table))
