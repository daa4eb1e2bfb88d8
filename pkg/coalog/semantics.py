"""One-step semantics of the derived logic, model checking, and the finite checks built on them."""

import itertools
import logging

from dataclasses import dataclass
from typing import Any, Callable, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from coalog.config import check_cardinality
from coalog.errors import ShapeError
from coalog.finstone import BAHom, FinBA, FinFn, FinSet, powerset_algebra
from coalog.gkpf import (
    Base, Coalgebra, Const, ConstVal, FunctorExpr, Id, InL, InR, Nbhd, Partition, Pow, Prod, Sum, apply_obj, exp2,
    map_value, points,
)
from coalog.logic import (
    And, Bot, CanonicalLifting, ConstAtom, Extent, Formula, Implies, InLF, InRF, Layer, Modal, Not, Or, Proj1, Proj2,
    Top, Var, _Group, check_formula, children, layer_axioms, modal_node, variables_of,
)
from coalog.utils.combinatorics import all_subsets


log = logging.getLogger(__name__)

Valuation = Mapping[str, FrozenSet[int]]


class OneStep:
    """Evaluate formulas on single values of a layer over a base set of size n.

    Variables denote subsets of the layer they stand at. Formulas reaching
    the state layer are handed to states (by default: Boolean combinations of
    variables and extents over range(n)).
    """

    def __init__(self, n: int, variables: Optional[Mapping[str, FrozenSet[Any]]] = None,
                 states: Optional[Callable[[Formula], FrozenSet[int]]] = None) -> None:
        self.n = n
        self.variables = dict(variables or {})
        self._states = states
        self._state_memo: Dict[Formula, FrozenSet[int]] = {}
        self._nbhd_memo: Dict[Tuple[Layer, Formula], Tuple[Any, ...]] = {}

    def variable(self, name: str) -> FrozenSet[Any]:
        try:
            return self.variables[name]
        except KeyError:
            raise ValueError(f'No interpretation given for variable {name}') from None

    def state_set(self, φ: Formula) -> FrozenSet[int]:
        if φ not in self._state_memo:
            if self._states is not None:
                self._state_memo[φ] = self._states(φ)
            else:
                self._state_memo[φ] = self._default_states(φ)
        return self._state_memo[φ]

    def _default_states(self, φ: Formula) -> FrozenSet[int]:
        everything = frozenset(range(self.n))
        if isinstance(φ, Top):
            return everything
        if isinstance(φ, Bot):
            return frozenset()
        if isinstance(φ, Var):
            return self.variable(φ.name)
        if isinstance(φ, Extent):
            return frozenset(φ.members)
        if isinstance(φ, (Not, And, Or, Implies, _Group)):
            return boolean_combination(φ, everything, self.state_set)
        raise ShapeError(f'Operator {φ.symbol} cannot nest at the state layer of a one-step term',
                         operator=φ.symbol, layer='state layer')

    def holds(self, layer: Layer, value: Any, φ: Formula) -> bool:
        if layer.is_state:
            return value in self.state_set(φ)
        if isinstance(φ, Top):
            return True
        if isinstance(φ, Bot):
            return False
        if isinstance(φ, Not):
            return not self.holds(layer, value, φ.arg)
        if isinstance(φ, And):
            return self.holds(layer, value, φ.left) and self.holds(layer, value, φ.right)
        if isinstance(φ, Or):
            return self.holds(layer, value, φ.left) or self.holds(layer, value, φ.right)
        if isinstance(φ, Implies):
            return not self.holds(layer, value, φ.left) or self.holds(layer, value, φ.right)
        if isinstance(φ, _Group):
            return self.holds(layer, value, φ.arg)
        if isinstance(φ, Var):
            return value in self.variable(φ.name)
        if isinstance(φ, Extent):
            return value in φ.members
        return self._holds_modal(layer, value, φ)

    def _inside(self, F: FunctorExpr, below: Tuple[FunctorExpr, ...], value: Any, φ: Formula) -> bool:
        layer, value = Layer.enter_value(F, below, value)
        return self.holds(layer, value, φ)

    def _holds_modal(self, layer: Layer, value: Any, φ: Formula) -> bool:
        F, below = layer.functor, layer.below
        if isinstance(φ, ConstAtom) and isinstance(F, Const):
            return value == ConstVal(φ.name)
        if isinstance(φ, (InLF, InRF)) and isinstance(F, Sum):
            if isinstance(φ, InLF):
                return isinstance(value, InL) and self._inside(F.left, below, value.value, φ.arg)
            return isinstance(value, InR) and self._inside(F.right, below, value.value, φ.arg)
        if isinstance(φ, (Proj1, Proj2)) and isinstance(F, Prod):
            if isinstance(φ, Proj1):
                return self._inside(F.left, below, value.left, φ.arg)
            return self._inside(F.right, below, value.right, φ.arg)
        if isinstance(φ, Modal) and φ.symbol == 'box' and isinstance(F, Pow):
            return all(self._inside(Id(), below, member, φ.arg) for member in value.members)
        if isinstance(φ, Modal) and φ.symbol == 'box' and isinstance(F, Nbhd):
            return self.neighbourhood_extent(layer, φ.arg) in value.members
        raise ShapeError(f'Operator {getattr(φ, "symbol", φ)} does not fit the {layer}',
                         operator=getattr(φ, 'symbol', None), layer=str(layer))

    def neighbourhood_extent(self, layer: Layer, arg: Formula) -> Tuple[Any, ...]:
        """The canonical subset of points below a Nbhd layer satisfying arg."""
        key = (layer, arg)
        if key not in self._nbhd_memo:
            self._nbhd_memo[key] = tuple(p for p in points(self.n, layer.below)
                                         if self._inside(Id(), layer.below, Base(p), arg))
        return self._nbhd_memo[key]

    def denote(self, layer: Layer, φ: Formula) -> FrozenSet[Any]:
        if layer.is_state:
            return self.state_set(φ)
        return frozenset(value for value in layer.elements(self.n) if self.holds(layer, value, φ))


def boolean_combination(φ: Formula, everything: FrozenSet[Any],
                        leaf: Callable[[Formula], FrozenSet[Any]]) -> FrozenSet[Any]:
    if isinstance(φ, Top):
        return everything
    if isinstance(φ, Bot):
        return frozenset()
    if isinstance(φ, Not):
        return everything - boolean_combination(φ.arg, everything, leaf)
    if isinstance(φ, And):
        return boolean_combination(φ.left, everything, leaf) & boolean_combination(φ.right, everything, leaf)
    if isinstance(φ, Or):
        return boolean_combination(φ.left, everything, leaf) | boolean_combination(φ.right, everything, leaf)
    if isinstance(φ, Implies):
        return (everything - boolean_combination(φ.left, everything, leaf)) | \
            boolean_combination(φ.right, everything, leaf)
    if isinstance(φ, _Group):
        return boolean_combination(φ.arg, everything, leaf)
    return leaf(φ)


def one_step(T: FunctorExpr, X: FinSet, term: Formula,
             variables: Optional[Mapping[str, FrozenSet[Any]]] = None) -> FrozenSet[int]:
    """The subset of T(X), as indices into apply_obj(T, X), denoted by a one-step term."""
    tset = apply_obj(T, X)
    step = OneStep(X.size, variables)
    result = set()
    for i, value in enumerate(tset.elements):
        layer, inner = Layer.enter_value(T, (), value)
        if step.holds(layer, inner, term):
            result.add(i)
    return frozenset(result)


def validate_valuation(c: Coalgebra, h: Valuation, names: Sequence[str] = ()) -> None:
    for name, members in h.items():
        for x in members:
            if not 0 <= x < c.size:
                raise ValueError(f'Valuation of {name} mentions state {x} outside the carrier')
    for name in names:
        if name not in h:
            raise ValueError(f'Valuation does not cover variable {name}')


class ModelChecker:
    """Extensions of state formulas in one coalgebra under one valuation, memoised per subformula."""

    def __init__(self, c: Coalgebra, h: Valuation) -> None:
        self.c = c
        self.h = h
        self.step = OneStep(c.size, {}, self.extension)
        self._memo: Dict[Formula, FrozenSet[int]] = {}

    def extension(self, φ: Formula) -> FrozenSet[int]:
        if φ in self._memo:
            return self._memo[φ]
        everything = frozenset(range(self.c.size))
        if isinstance(φ, Var):
            if φ.name not in self.h:
                raise ValueError(f'Valuation does not cover variable {φ.name}')
            result = frozenset(self.h[φ.name])
        elif isinstance(φ, Extent):
            result = frozenset(φ.members)
        elif isinstance(φ, Modal):
            result = frozenset(x for x in range(self.c.size) if self.holds_at(x, φ))
        else:
            result = boolean_combination(φ, everything, self.extension)
        self._memo[φ] = result
        return result

    def holds_at(self, x: int, φ: Modal) -> bool:
        layer, value = Layer.enter_value(self.c.functor, (), self.c.structure[x])
        return self.step.holds(layer, value, φ)


def model_check(c: Coalgebra, h: Valuation, φ: Formula) -> FrozenSet[int]:
    check_formula(c.functor, φ)
    validate_valuation(c, h, variables_of(φ))
    return ModelChecker(c, h).extension(φ)


def model_check_lifting(c: Coalgebra, h: Valuation, lifting: CanonicalLifting,
                        args: Sequence[Formula]) -> FrozenSet[int]:
    """States x with T(chi)(xi(x)) in the lifting's extent, chi the characteristic map of the arguments."""
    if lifting.functor != c.functor:
        raise ShapeError(f'Lifting for {lifting.functor} applied to a {c.functor} coalgebra')
    if len(args) != lifting.arity:
        raise ShapeError(f'Lifting of arity {lifting.arity} given {len(args)} arguments')
    checker = ModelChecker(c, h)
    extensions = []
    for φ in args:
        check_formula(c.functor, φ)
        validate_valuation(c, h, variables_of(φ))
        extensions.append(checker.extension(φ))
    chi = FinFn(c.carrier, FinSet(1 << lifting.arity),
                tuple(sum(1 << i for i, ext in enumerate(extensions) if x in ext) for x in range(c.size)))
    tset = apply_obj(c.functor, chi.cod)
    return frozenset(x for x in range(c.size) if tset.index(map_value(c.functor, c.structure[x], chi)) in lifting.extent)


def respects_morphism(f: FinFn, src: Coalgebra, dst: Coalgebra, h_dst: Valuation,
                      formulas: Sequence[Formula]) -> Optional[Formula]:
    """First formula whose extension in src is not the preimage of its extension in dst, if any.

    src is evaluated under the valuation pulled back along f.
    """
    h_src = {name: f.preimage(members) for name, members in h_dst.items()}
    src_checker = ModelChecker(src, h_src)
    dst_checker = ModelChecker(dst, h_dst)
    for φ in formulas:
        if src_checker.extension(φ) != f.preimage(dst_checker.extension(φ)):
            return φ
    return None


@dataclass
class _PresentedLayer:
    layer: Layer
    algebra: FinBA
    generators: List[Tuple[str, Optional[FrozenSet[int]]]]
    index: Dict[Tuple[str, Optional[FrozenSet[int]]], int]
    atom_of: Dict[int, int]


class _Presenter:
    """Presented algebras layer by layer: generators are operator instances, atoms their consistent valuations."""

    def __init__(self, T: FunctorExpr, base: FinBA) -> None:
        self.T = T
        self.base = base
        self.layers: Dict[Layer, _PresentedLayer] = {}
        self._duals: Dict[Tuple[Layer, Any], Optional[int]] = {}

    def algebra(self, layer: Layer) -> FinBA:
        if layer.is_state:
            return self.base
        return self.present(layer).algebra

    def present(self, layer: Layer) -> _PresentedLayer:
        if layer in self.layers:
            return self.layers[layer]
        generators: List[Tuple[str, Optional[FrozenSet[int]]]] = []
        for symbol in layer.symbols():
            if symbol.startswith("'"):
                generators.append((symbol, None))
            else:
                for element in self.algebra(layer.child(symbol)).elements():
                    generators.append((symbol, element.atomset))
        index = {generator: i for i, generator in enumerate(generators)}
        constraints = self._constraints(layer, index)
        valuations = _all_solutions(len(generators), constraints)
        check_cardinality(len(valuations), f'atoms of the presented algebra at the {layer}')
        atoms = FinSet(len(valuations), None, tuple(valuations))
        presented = _PresentedLayer(layer, FinBA(atoms), generators, index,
                                    {valuation: i for i, valuation in enumerate(valuations)})
        log.debug('presented %s: %d generators, %d atoms', layer, len(generators), len(valuations))
        self.layers[layer] = presented
        return presented

    def _constraints(self, layer: Layer, index: Mapping[Any, int]) -> List[Tuple[Any, Any]]:
        constraints = []
        for axiom in layer_axioms(layer):
            var_layers = check_formula(self.T, axiom.lhs, layer, layer_vars=True)
            var_layers.update(check_formula(self.T, axiom.rhs, layer, layer_vars=True))
            names = list(var_layers)
            choices = [[e.atomset for e in self.algebra(var_layers[name]).elements()] for name in names]
            for values in itertools.product(*choices):
                env = dict(zip(names, values))
                constraints.append((self._compile(layer, axiom.lhs, env, index),
                                    self._compile(layer, axiom.rhs, env, index)))
        return constraints

    def _compile(self, layer: Layer, φ: Formula, env: Mapping[str, FrozenSet[int]], index: Mapping[Any, int]) -> Any:
        if isinstance(φ, Top):
            return True
        if isinstance(φ, Bot):
            return False
        if isinstance(φ, (Not, And, Or, Implies)):
            return (type(φ).__name__,) + tuple(self._compile(layer, child, env, index) for child in children(φ))
        if isinstance(φ, ConstAtom):
            return index[(φ.symbol, None)]
        if isinstance(φ, Modal):
            child = layer.child(φ.symbol)
            algebra = self.algebra(child)
            everything = frozenset(range(algebra.atoms.size))
            return index[(φ.symbol, boolean_combination(φ.arg, everything, lambda v: env[v.name]))]
        raise ShapeError(f'Axiom term {φ} is not rank 1', layer=str(layer))

    def dual(self, layer: Layer, value: Any) -> Optional[int]:
        """The atom a value of the layer evaluates to, or None if its valuation violates an axiom instance."""
        if layer.is_state:
            return value
        if (layer, value) not in self._duals:
            presented = self.present(layer)
            child_dual = self._child_duals(layer)
            valuation = 0
            for i, (symbol, arg) in enumerate(presented.generators):
                if self._satisfies(layer, value, symbol, arg, child_dual):
                    valuation |= 1 << i
            self._duals[(layer, value)] = presented.atom_of.get(valuation)
        return self._duals[(layer, value)]

    def _child_duals(self, layer: Layer) -> Callable[[FunctorExpr, Any], Optional[int]]:
        def child_dual(F: FunctorExpr, value: Any) -> Optional[int]:
            child, inner = Layer.enter_value(F, layer.below, value)
            return self.dual(child, inner)
        return child_dual

    def _satisfies(self, layer: Layer, value: Any, symbol: str, arg: Optional[FrozenSet[int]],
                   child_dual: Callable[[FunctorExpr, Any], Optional[int]]) -> bool:
        F = layer.functor
        if symbol.startswith("'"):
            return value == ConstVal(symbol[1:])
        if symbol == '[k1]':
            return isinstance(value, InL) and child_dual(F.left, value.value) in arg
        if symbol == '[k2]':
            return isinstance(value, InR) and child_dual(F.right, value.value) in arg
        if symbol == '[p1]':
            return child_dual(F.left, value.left) in arg
        if symbol == '[p2]':
            return child_dual(F.right, value.right) in arg
        if isinstance(F, Pow):
            return all(child_dual(Id(), member) in arg for member in value.members)
        extent = tuple(p for p in points(self.base.atoms.size, layer.below) if child_dual(Id(), Base(p)) in arg)
        return extent in value.members


def _evaluate(expr: Any, valuation: int) -> bool:
    if expr is True or expr is False:
        return expr
    if isinstance(expr, int):
        return bool(valuation >> expr & 1)
    op = expr[0]
    if op == 'Not':
        return not _evaluate(expr[1], valuation)
    if op == 'And':
        return _evaluate(expr[1], valuation) and _evaluate(expr[2], valuation)
    if op == 'Or':
        return _evaluate(expr[1], valuation) or _evaluate(expr[2], valuation)
    return not _evaluate(expr[1], valuation) or _evaluate(expr[2], valuation)


def _generators_in(expr: Any) -> List[int]:
    if expr is True or expr is False:
        return []
    if isinstance(expr, int):
        return [expr]
    return [g for sub in expr[1:] for g in _generators_in(sub)]


def _all_solutions(count: int, constraints: Sequence[Tuple[Any, Any]]) -> List[int]:
    """Every valuation of count generators satisfying all constraints, in increasing order.

    Constraints are checked as soon as their last generator is assigned.
    """
    buckets: List[List[Tuple[Any, Any]]] = [[] for _ in range(count + 1)]
    for lhs, rhs in constraints:
        last = max(_generators_in(lhs) + _generators_in(rhs), default=-1)
        buckets[last + 1].append((lhs, rhs))
    if any(_evaluate(lhs, 0) != _evaluate(rhs, 0) for lhs, rhs in buckets[0]):
        return []
    solutions: List[int] = []
    nodes = 0

    def extend(i: int, valuation: int) -> None:
        nonlocal nodes
        nodes += 1
        if i == count:
            solutions.append(valuation)
            return
        for bit in (0, 1):
            candidate = valuation | bit << i
            if all(_evaluate(lhs, candidate) == _evaluate(rhs, candidate) for lhs, rhs in buckets[i + 1]):
                extend(i + 1, candidate)
    extend(0, 0)
    log.debug('solver visited %d nodes for %d generators', nodes, count)
    return sorted(solutions)


@dataclass(frozen=True)
class PresentedAlgebra:
    functor: FunctorExpr
    base: FinBA
    algebra: FinBA
    evaluation: Optional[BAHom]
    unmatched: Optional[Any] = None


def presented_algebra(T: FunctorExpr, A: FinBA) -> PresentedAlgebra:
    """L'_T(A) with its evaluation into the powerset of T(spec A).

    evaluation is None when some value of T(spec A) satisfies no atom, i.e.
    an axiom instance is unsound; unmatched then holds that value.
    """
    presenter = _Presenter(T, A)
    top = Layer.enter(T)
    algebra = presenter.algebra(top)
    tset = apply_obj(T, A.atoms)
    table = []
    for value in tset.elements:
        layer, inner = Layer.enter_value(T, (), value)
        atom = presenter.dual(layer, inner)
        if atom is None:
            return PresentedAlgebra(T, A, algebra, None, value)
        table.append(atom)
    evaluation = BAHom(algebra, powerset_algebra(tset), FinFn(tset, algebra.atoms, tuple(table)))
    return PresentedAlgebra(T, A, algebra, evaluation)


@dataclass(frozen=True)
class DeltaIsoReport:
    functor: FunctorExpr
    size: int
    presented_atoms: int
    tx_size: int
    ok: bool
    reason: str = ''


def check_delta_iso(T: FunctorExpr, X: FinSet) -> DeltaIsoReport:
    presented = presented_algebra(T, powerset_algebra(X))
    tx_size = apply_obj(T, X).size
    atoms = presented.algebra.atoms.size
    if presented.evaluation is None:
        return DeltaIsoReport(T, X.size, atoms, tx_size, False,
                              f'value {presented.unmatched} violates an axiom instance')
    if not presented.evaluation.is_bijective():
        return DeltaIsoReport(T, X.size, atoms, tx_size, False,
                              f'evaluation is not bijective: {atoms} presented atoms for {tx_size} values')
    return DeltaIsoReport(T, X.size, atoms, tx_size, True)


class _DefinableSets:
    """The subsets of each layer that formulas over a partition of the states define.

    A layer's formulas are generated by its operators applied to every
    definable subset of the argument layer. Its atoms group the values no
    generator separates, found by evaluating the generators one step.
    """

    def __init__(self, n: int, blocks: Sequence[FrozenSet[int]]) -> None:
        self.n = n
        self.blocks = list(blocks)
        self.step = OneStep(n)
        self._atoms: Dict[Layer, List[FrozenSet[Any]]] = {}

    def atoms(self, layer: Layer) -> List[FrozenSet[Any]]:
        if layer.is_state:
            return self.blocks
        if layer not in self._atoms:
            generators = list(self.generators(layer))
            groups: Dict[Tuple[bool, ...], set] = {}
            for value in layer.elements(self.n):
                signature = tuple(self.step.holds(layer, value, g) for g in generators)
                groups.setdefault(signature, set()).add(value)
            self._atoms[layer] = [frozenset(group) for group in groups.values()]
        return self._atoms[layer]

    def generators(self, layer: Layer) -> Iterator[Formula]:
        for symbol in layer.symbols():
            if symbol.startswith("'"):
                yield modal_node(symbol)
                continue
            child = layer.child(symbol)
            atoms = self.atoms(child)
            check_cardinality(exp2(len(atoms)), f'definable arguments of {symbol} in the {child}')
            for chosen in all_subsets(atoms):
                yield modal_node(symbol, Extent(frozenset().union(*chosen)))


def logical_partition(c: Coalgebra, seed: Optional[Valuation] = None) -> Partition:
    """States no formula distinguishes (variable-free, or over the seed's variables).

    Every round model-checks the outermost operators applied to each set the
    previous round could define, and splits blocks by the extents.
    """
    if seed:
        validate_valuation(c, seed)
        names = sorted(seed)
        partition = Partition.from_keys(c.carrier, [tuple(x in seed[name] for name in names) for x in range(c.size)])
    else:
        partition = Partition.from_keys(c.carrier, [0] * c.size)
    top = Layer.enter(c.functor)
    while True:
        checker = ModelChecker(c, {})
        definable = _DefinableSets(c.size, partition.as_sets())
        extents = [checker.extension(φ) for φ in definable.generators(top)]
        keys = [(partition.blocks[x], tuple(x in extent for extent in extents)) for x in range(c.size)]
        refined = Partition.from_keys(c.carrier, keys)
        log.debug('logical refinement over %d formulas: %d -> %d blocks', len(extents), partition.count, refined.count)
        if refined.count == partition.count:
            return refined
        partition = refined

