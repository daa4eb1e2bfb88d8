"""The logic functor on finite Boolean algebras, its transpose, and the Jonsson-Tarski construction.

On finite algebras L_T A = P T S A. The transpose delta* : T S A -> S L A
and its section h : S L A -> T S A are assembled from the finite
unit/counit isomorphisms and from delta, which is computed by evaluating
one-step terms, so the chains themselves are what gets checked.
"""

import logging
import random

from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple

from coalog.config import check_cardinality
from coalog.errors import FunctorMismatch, NotInvertible, ShapeError
from coalog.finstone import BAElem, BAHom, FinBA, FinFn, FinSet, counit_eps, powerset_algebra, spec, unit_iota
from coalog.gkpf import (
    Base, Coalgebra, Comp, FunctorExpr, Nbhd, NbhdOf, Pow, SetOf, apply_fn, apply_obj, exp2, is_morphism, map_value,
    random_value,
)
from coalog.logic import Box, Extent, Formula, Layer, Modal, Var, check_formula, modal_node
from coalog.semantics import OneStep, boolean_combination, one_step
from coalog.utils.combinatorics import all_functions, all_subsets


log = logging.getLogger(__name__)

ELEMENTWISE_LIMIT = 4096


def l_on_ba(T: FunctorExpr, A: FinBA) -> FinBA:
    return powerset_algebra(apply_obj(T, spec(A)))


def l_on_hom(T: FunctorExpr, f: BAHom) -> BAHom:
    """L_T f : L A -> L B for f : A -> B, dual to T applied to the dual of f."""
    return BAHom(l_on_ba(T, f.src), l_on_ba(T, f.dst), apply_fn(T, f.dual))


def _layer_functor(layer: Layer) -> FunctorExpr:
    """The functor whose values are the layer's values."""
    inner = None
    for G in reversed(layer.below):
        inner = G if inner is None else Comp(G, inner)
    return layer.functor if inner is None else Comp(layer.functor, inner)


def _move(layer: Layer, members: FrozenSet[Any], f: FinFn) -> FrozenSet[Any]:
    if layer.is_state:
        return frozenset(f(x) for x in members)
    G = _layer_functor(layer)
    return frozenset(map_value(G, value, f) for value in members)


def _one_step_terms(T: FunctorExpr, X: FinSet, f: FinFn) -> Iterator[Tuple[Tuple[str, FrozenSet[Any]], Formula]]:
    """The outermost operators applied to every subset of their argument layer over X, moved along f.

    Without an outermost operator the terms are the points of X themselves.
    Each term comes keyed by its operator and its argument over X.
    """
    top = Layer.enter(T)
    if top.is_state:
        for x in range(X.size):
            yield ('', frozenset({x})), Extent(frozenset({f(x)}))
        return
    for symbol in top.symbols():
        if symbol.startswith("'"):
            yield (symbol, frozenset()), modal_node(symbol)
            continue
        child = top.child(symbol)
        values = child.elements(X.size)
        check_cardinality(exp2(len(values)), f'one-step terms {symbol} a over {child}')
        for subset in all_subsets(values):
            members = frozenset(subset)
            yield (symbol, members), modal_node(symbol, Extent(_move(child, members, f)))


def _one_step_profiles(T: FunctorExpr, X: FinSet, f: FinFn) -> List[FrozenSet[Tuple[str, FrozenSet[Any]]]]:
    """For each value of T over cod f, the keys of the one-step terms it satisfies."""
    Y = f.cod
    profiles: List[set] = [set() for _ in range(apply_obj(T, Y).size)]
    for key, term in _one_step_terms(T, X, f):
        for i in one_step(T, Y, term):
            profiles[i].add(key)
    return [frozenset(profile) for profile in profiles]


def delta_nat(T: FunctorExpr, X: FinSet) -> BAHom:
    """delta_X : L P X -> P T X, sending each one-step term over P X to its extent in T X.

    Dually a value of T X goes to the atom of L P X = P T S P X satisfying
    the same one-step terms, S P X being reached from X through eps_X.
    """
    source = l_on_ba(T, powerset_algebra(X))
    tset = apply_obj(T, X)
    atoms: Dict[FrozenSet[Tuple[str, FrozenSet[Any]]], int] = {}
    for u, profile in enumerate(_one_step_profiles(T, X, counit_eps(X))):
        if profile in atoms:
            log.debug('one-step terms over %d points do not separate values %d and %d of %s',
                      X.size, atoms[profile], u, T)
        atoms.setdefault(profile, u)
    table = []
    for t, profile in enumerate(_one_step_profiles(T, X, FinFn.identity(X))):
        if profile not in atoms:
            raise NotInvertible(f'No atom of L P X satisfies the one-step terms of value {t} of {T} X')
        table.append(atoms[profile])
    return BAHom(source, powerset_algebra(tset), FinFn(tset, source.atoms, tuple(table)))


def _transpose_chain(T: FunctorExpr, A: FinBA) -> Tuple[FinFn, FinFn, FinFn]:
    tset = apply_obj(T, spec(A))
    eps = counit_eps(tset)
    s_delta = delta_nat(T, spec(A)).dual
    s_l_iota = l_on_hom(T, unit_iota(A)).dual
    return eps, s_delta, s_l_iota


def delta_star(T: FunctorExpr, A: FinBA) -> FinFn:
    """T S A -> S P T S A -> S L P S A -> S L A"""
    eps, s_delta, s_l_iota = _transpose_chain(T, A)
    return s_l_iota.compose(s_delta.compose(eps))


def h_generic(T: FunctorExpr, A: FinBA) -> FinFn:
    """S L A -> S L P S A -> S P T S A -> T S A, the inverses of the delta* chain."""
    eps, s_delta, s_l_iota = _transpose_chain(T, A)
    return eps.inverse().compose(s_delta.inverse().compose(s_l_iota.inverse()))


@dataclass(frozen=True)
class TransposeData:
    delta_star: FinFn
    h: FinFn

    def is_section(self) -> bool:
        """h . delta* = id"""
        return self.h.compose(self.delta_star) == FinFn.identity(self.delta_star.dom)

    def is_retraction(self) -> bool:
        """delta* . h = id"""
        return self.delta_star.compose(self.h) == FinFn.identity(self.h.dom)


def transpose_data(T: FunctorExpr, A: FinBA) -> TransposeData:
    return TransposeData(delta_star(T, A), h_generic(T, A))


def _box_extents(T: FunctorExpr, A: FinBA) -> List[Tuple[BAElem, FrozenSet[int]]]:
    """Each element a of A with box a as a set of atoms of L A."""
    X = spec(A)
    return [(a, one_step(T, X, Box(Extent(a.atomset)))) for a in A.elements()]


def h_explicit_pow(A: FinBA) -> FinFn:
    """v |-> {u in S A | box a in v implies a in u}"""
    T = Pow()
    X = spec(A)
    tset = apply_obj(T, X)
    boxes = _box_extents(T, A)
    table = []
    for v in range(tset.size):
        members = [u for u in range(X.size) if all(u in a.atomset for a, box in boxes if v in box)]
        table.append(tset.index(SetOf.of(Base(u) for u in members)))
    return FinFn(l_on_ba(T, A).atoms, tset, tuple(table))


def h_explicit_nbhd(A: FinBA) -> FinFn:
    """v |-> {a in 2^(S A) | box a in v}"""
    T = Nbhd()
    X = spec(A)
    tset = apply_obj(T, X)
    boxes = _box_extents(T, A)
    table = []
    for v in range(tset.size):
        family = [sorted(a.atomset) for a, box in boxes if v in box]
        table.append(tset.index(NbhdOf.of(family)))
    return FinFn(l_on_ba(T, A).atoms, tset, tuple(table))


@dataclass(frozen=True)
class LAlgebra:
    functor: FunctorExpr
    carrier: FinBA
    alpha: BAHom

    def __post_init__(self) -> None:
        source = l_on_ba(self.functor, self.carrier)
        if self.alpha.src != source or self.alpha.dst != self.carrier:
            raise ValueError(f'alpha must go from L A ({source.atoms.size} atoms) to A ({self.carrier.atoms.size} atoms)')

    def interpret(self, φ: Formula, args: Mapping[str, BAElem]) -> BAElem:
        """Evaluate a formula in the algebra: variables by args, each modal layer through alpha."""
        check_formula(self.functor, φ)
        X = spec(self.carrier)
        tset = apply_obj(self.functor, X)
        source = self.alpha.src
        step = OneStep(X.size, {name: a.atomset for name, a in args.items()}, lambda ψ: elem(ψ).atomset)

        def elem(ψ: Formula) -> BAElem:
            def leaf(χ: Formula) -> FrozenSet[int]:
                if isinstance(χ, Var):
                    if χ.name not in args:
                        raise ValueError(f'No element given for variable {χ.name}')
                    return args[χ.name].atomset
                if isinstance(χ, Extent):
                    return frozenset(χ.members)
                if isinstance(χ, Modal):
                    accepted = set()
                    for i, value in enumerate(tset.elements):
                        layer, inner = Layer.enter_value(self.functor, (), value)
                        if step.holds(layer, inner, χ):
                            accepted.add(i)
                    return self.alpha.apply(BAElem(source, frozenset(accepted))).atomset
                raise ShapeError(f'{χ} cannot be interpreted in an algebra')

            return BAElem(self.carrier, boolean_combination(ψ, frozenset(range(X.size)), leaf))

        return elem(φ)


def complex_algebra(c: Coalgebra) -> LAlgebra:
    """P X with alpha = P(xi) . delta_X, i.e. dually x |-> S delta_X (xi(x))."""
    A = powerset_algebra(c.carrier)
    dual = delta_nat(c.functor, c.carrier).dual.compose(c.structure_fn())
    return LAlgebra(c.functor, A, BAHom(l_on_ba(c.functor, A), A, dual))


def jt_coalgebra(alg: LAlgebra) -> Coalgebra:
    """The coalgebra on the ultrafilters of alg: xi = h . S alpha."""
    T = alg.functor
    xi = h_generic(T, alg.carrier).compose(alg.alpha.dual)
    tset = apply_obj(T, spec(alg.carrier))
    return Coalgebra(T, spec(alg.carrier), tuple(tset.element(xi(x)) for x in range(xi.dom.size)))


def r_box(alg: LAlgebra) -> FrozenSet[Tuple[int, int]]:
    """Accessibility of a Pow-algebra on its ultrafilters: x R y iff y in h(S alpha(x))."""
    if not isinstance(alg.functor, Pow):
        raise FunctorMismatch(f'r_box needs a Pow algebra, got {alg.functor}')
    successors = h_explicit_pow(alg.carrier).compose(alg.alpha.dual)
    tset = apply_obj(alg.functor, spec(alg.carrier))
    return frozenset((x, member.value) for x in range(successors.dom.size)
                     for member in tset.element(successors(x)).members)


def r_box_largest(alg: LAlgebra) -> FrozenSet[Tuple[int, int]]:
    """x R y iff for all a: box a in x implies y in a."""
    if not isinstance(alg.functor, Pow):
        raise FunctorMismatch(f'r_box needs a Pow algebra, got {alg.functor}')
    A = alg.carrier
    boxed = [(a, alg.alpha.apply(BAElem(alg.alpha.src, box))) for a, box in _box_extents(alg.functor, A)]
    n = A.atoms.size
    return frozenset((x, y) for x in range(n) for y in range(n)
                     if all(y in a.atomset for a, box_a in boxed if x in box_a.atomset))


@dataclass(frozen=True)
class EmbeddingReport:
    ok: bool
    checked: int
    iota_bijective: bool
    witness: Optional[str] = None


def verify_jt_embedding(alg: LAlgebra) -> EmbeddingReport:
    """iota . alpha = P(xi_jt) . delta . L(iota), pointwise, and iota is a bijection."""
    T, A = alg.functor, alg.carrier
    iota = unit_iota(A)
    try:
        c = jt_coalgebra(alg)
    except NotInvertible as e:
        return EmbeddingReport(False, 0, iota.is_bijective(), f'h is undefined: {e}')
    p_xi = BAHom(powerset_algebra(apply_obj(T, c.carrier)), powerset_algebra(c.carrier), c.structure_fn())
    right = p_xi.compose(delta_nat(T, spec(A)).compose(l_on_hom(T, iota)))
    left = iota.compose(alg.alpha)
    source = alg.alpha.src
    if source.size <= ELEMENTWISE_LIMIT:
        elements: Iterator[BAElem] = source.elements()
    else:
        log.info('L A has %d elements, checking the embedding on atoms only', source.size)
        elements = iter(source.atom_elements())
    checked = 0
    for e in elements:
        checked += 1
        if left.apply(e) != right.apply(e):
            return EmbeddingReport(False, checked, iota.is_bijective(), source.describe(e))
    return EmbeddingReport(iota.is_injective(), checked, iota.is_bijective(),
                           None if iota.is_injective() else 'iota is not injective')


def roundtrip_isomorphic(c: Coalgebra) -> bool:
    """jt_coalgebra(complex_algebra(c)) is isomorphic to c via the counit bijection."""
    back = jt_coalgebra(complex_algebra(c))
    eps = counit_eps(c.carrier)
    eps = FinFn(c.carrier, back.carrier, eps.table)
    return is_morphism(c, back, eps) and is_morphism(back, c, eps.inverse())


def lalgebra_from_dual(T: FunctorExpr, A: FinBA, table: Tuple[int, ...]) -> LAlgebra:
    """The L-algebra whose alpha is dual to the function spec(A) -> T(spec A) given by table."""
    source = l_on_ba(T, A)
    return LAlgebra(T, A, BAHom(source, A, FinFn(A.atoms, source.atoms, tuple(table))))


def all_lalgebras(T: FunctorExpr, A: FinBA) -> Iterator[LAlgebra]:
    width = apply_obj(T, spec(A)).size
    check_cardinality(width ** A.atoms.size, f'L-algebra structures on {A.atoms.size} atoms')
    for table in all_functions(A.atoms.size, width):
        yield lalgebra_from_dual(T, A, table)


def random_lalgebra(T: FunctorExpr, A: FinBA, rng: random.Random) -> LAlgebra:
    tset = apply_obj(T, spec(A))
    table = tuple(tset.index(random_value(T, A.atoms.size, rng)) for _ in range(A.atoms.size))
    return lalgebra_from_dual(T, A, table)
