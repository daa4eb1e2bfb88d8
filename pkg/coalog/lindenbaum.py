"""Finite stages of the free algebra of the logic, and what they decide.

Stage Z_0 is the free Boolean algebra on the variables; Z_{n+1} is
free(V) (+) P(T(atoms Z_n)), so an atom of Z_{n+1} is a pair of a valuation
and a T-value over the atoms of Z_n. Every formula of modal depth at most n
has an element in Z_n, and two formulas are derivably equal exactly when
their elements in the deepest stage they both reach coincide.
"""

import itertools
import logging

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from coalog.errors import DepthError, ShapeError
from coalog.finstone import BAElem, BAHom, FinBA, FinFn, FinSet, ba_coproduct, free_ba, powerset_algebra, var_elem
from coalog.gkpf import Coalgebra, FunctorExpr, all_coalgebras, apply_fn, apply_obj
from coalog.logic import (
    And, Equation, Formula, Implies, Layer, Modal, Not, Or, RankOneEquation, Sequent, Var, all_layers, ba_axioms,
    check_formula, derive_axioms, layer_at, modal_depth, modal_node, variables_of,
)
from coalog.semantics import ModelChecker, OneStep, boolean_combination


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FreeStage:
    functor: FunctorExpr
    variables: Tuple[str, ...]
    index: int
    algebra: FinBA
    embedding: Optional[BAHom] = None
    previous: Optional['FreeStage'] = field(default=None, repr=False)
    _extensions: Dict[Formula, FrozenSet[int]] = field(default_factory=dict, compare=False, repr=False)

    @property
    def tset(self) -> FinSet:
        """T(atoms of the previous stage); atom (w, t) sits at w * |tset| + t."""
        return apply_obj(self.functor, self.previous.algebra.atoms)

    def describe(self) -> str:
        return f'Z_{self.index}: {self.algebra.atoms.size} atoms'


@lru_cache(maxsize=32)
def build_stage(T: FunctorExpr, variables: Tuple[str, ...], n: int) -> FreeStage:
    variables = tuple(variables)
    if n == 0:
        stage = FreeStage(T, variables, 0, free_ba(variables))
        log.debug('built %s', stage.describe())
        return stage
    previous = build_stage(T, variables, n - 1)
    tset = apply_obj(T, previous.algebra.atoms)
    algebra, inj_free, _ = ba_coproduct(free_ba(variables), powerset_algebra(tset))
    if n == 1:
        embedding = BAHom(previous.algebra, algebra, inj_free.dual)
    else:
        # j_n = id (+) L_T(j_{n-1}), dually (w, t) |-> (w, T(dual j_{n-1})(t))
        lower = apply_fn(T, previous.embedding.dual)
        width, lower_width = tset.size, lower.cod.size
        table = tuple(w * lower_width + lower(t) for w in range(1 << len(variables)) for t in range(width))
        embedding = BAHom(previous.algebra, algebra, FinFn(algebra.atoms, previous.algebra.atoms, table))
    stage = FreeStage(T, variables, n, algebra, embedding, previous)
    log.debug('built %s', stage.describe())
    return stage


def _stage_extension(stage: FreeStage, φ: Formula) -> FrozenSet[int]:
    if φ in stage._extensions:
        return stage._extensions[φ]
    atoms = stage.algebra.atoms
    everything = frozenset(range(atoms.size))

    def leaf(ψ: Formula) -> FrozenSet[int]:
        if isinstance(ψ, Var):
            if ψ.name not in stage.variables:
                raise ValueError(f'Variable {ψ.name} is not among the stage variables {", ".join(stage.variables)}')
            return var_elem(stage.algebra, ψ.name).atomset
        if isinstance(ψ, Modal):
            if stage.previous is None:
                raise DepthError(f'{ψ} needs a deeper stage than Z_0')
            return _modal_extension(stage, ψ)
        raise ShapeError(f'{ψ} cannot be evaluated in a free stage')

    result = boolean_combination(φ, everything, leaf)
    stage._extensions[φ] = result
    return result


def _modal_extension(stage: FreeStage, φ: Modal) -> FrozenSet[int]:
    previous = stage.previous
    tset = stage.tset
    step = OneStep(previous.algebra.atoms.size, {}, lambda ψ: _stage_extension(previous, ψ))
    accepted = []
    for t, value in enumerate(tset.elements):
        layer, inner = Layer.enter_value(stage.functor, (), value)
        if step.holds(layer, inner, φ):
            accepted.append(t)
    return frozenset(w * tset.size + t for w in range(1 << len(stage.variables)) for t in accepted)


def eval_in_stage(stage: FreeStage, φ: Formula) -> BAElem:
    check_formula(stage.functor, φ)
    depth = modal_depth(φ, stage.functor)
    if depth > stage.index:
        raise DepthError(f'Formula of modal depth {depth} does not fit stage Z_{stage.index}')
    return BAElem(stage.algebra, _stage_extension(stage, φ))


def stage_variables(variables: Optional[Sequence[str]], formulas: Sequence[Formula]) -> Tuple[str, ...]:
    used: List[str] = []
    for φ in formulas:
        used.extend(name for name in variables_of(φ) if name not in used)
    if variables is None:
        return tuple(used)
    missing = [name for name in used if name not in variables]
    if missing:
        raise ValueError(f'Variables {", ".join(missing)} are not declared')
    return tuple(variables)


def decide_equation(T: FunctorExpr, variables: Optional[Sequence[str]], lhs: Formula, rhs: Formula) -> bool:
    """True iff lhs = rhs is derivable from the Boolean and the derived axioms."""
    variables = stage_variables(variables, [lhs, rhs])
    n = max(modal_depth(lhs, T), modal_depth(rhs, T))
    stage = build_stage(T, variables, n)
    return eval_in_stage(stage, lhs) == eval_in_stage(stage, rhs)


def decide_sequent(T: FunctorExpr, variables: Optional[Sequence[str]], sequent: Sequent) -> bool:
    """phi <= psi as the equation phi & psi = phi."""
    return decide_equation(T, variables, And(sequent.lhs, sequent.rhs), sequent.lhs)


@dataclass(frozen=True)
class AxiomStep:
    label: int
    name: str
    substitution: Tuple[Tuple[str, Formula], ...] = ()
    claim: Optional[Equation] = None


@dataclass(frozen=True)
class ReflStep:
    label: int
    formula: Formula
    claim: Optional[Equation] = None


@dataclass(frozen=True)
class SymStep:
    label: int
    premise: int
    claim: Optional[Equation] = None


@dataclass(frozen=True)
class TransStep:
    label: int
    first: int
    second: int
    claim: Optional[Equation] = None


@dataclass(frozen=True)
class CongStep:
    label: int
    operator: str
    premises: Tuple[int, ...]
    claim: Optional[Equation] = None


@dataclass(frozen=True)
class SubstStep:
    label: int
    premise: int
    substitution: Tuple[Tuple[str, Formula], ...]
    claim: Optional[Equation] = None


Step = Union[AxiomStep, ReflStep, SymStep, TransStep, CongStep, SubstStep]

BOOLEAN_CONNECTIVES = {'~': (Not, 1), '&': (And, 2), '|': (Or, 2), '->': (Implies, 2)}


@dataclass(frozen=True)
class StepError:
    label: int
    reason: str


@dataclass(frozen=True)
class Conclusion:
    label: int
    equation: Equation
    layers: Tuple[Layer, ...]


@dataclass(frozen=True)
class DerivationResult:
    conclusions: Tuple[Conclusion, ...]
    error: Optional[StepError] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def final(self) -> Optional[Equation]:
        return self.conclusions[-1].equation if self.conclusions else None


class _StepFailure(Exception):
    pass


class DerivationChecker:
    """Equational logic over the layers of T.

    Every conclusion records the layers it is valid at; a derived axiom is
    valid at the layer of its occurrence, Boolean axioms at every layer, and
    anything valid at the top layer also holds at the state layer.
    """

    def __init__(self, T: FunctorExpr) -> None:
        self.T = T
        self.layers = all_layers(T)
        self.top = Layer.enter(T)
        self.axioms: Dict[str, RankOneEquation] = {axiom.name: axiom for axiom in ba_axioms() + derive_axioms(T)}

    def fits(self, equation: Equation, layer: Layer) -> Optional[Dict[str, Layer]]:
        try:
            var_layers = check_formula(self.T, equation.lhs, layer, layer_vars=True)
            for name, var_layer in check_formula(self.T, equation.rhs, layer, layer_vars=True).items():
                if var_layers.setdefault(name, var_layer) != var_layer:
                    return None
        except ShapeError:
            return None
        return var_layers

    def fitting(self, equation: Equation, candidates: Sequence[Layer]) -> Tuple[Layer, ...]:
        candidates = list(candidates)
        if self.top in candidates and Layer.state() not in candidates:
            candidates.append(Layer.state())
        return tuple(layer for layer in candidates if self.fits(equation, layer) is not None)

    def substituted(self, equation: Equation, layers: Sequence[Layer],
                    substitution: Mapping[str, Formula]) -> Tuple[Equation, Tuple[Layer, ...]]:
        result = equation.substitute(substitution)
        kept = []
        for layer in layers:
            var_layers = self.fits(equation, layer)
            if var_layers is None:
                continue
            if all(name not in var_layers or self._fits_formula(φ, var_layers[name])
                   for name, φ in substitution.items()):
                kept.append(layer)
        kept = [layer for layer in kept if self.fits(result, layer) is not None]
        return result, tuple(kept)

    def _fits_formula(self, φ: Formula, layer: Layer) -> bool:
        try:
            check_formula(self.T, φ, layer, layer_vars=True)
        except ShapeError:
            return False
        return True

    def conclude(self, step: Step, done: Mapping[int, Conclusion]) -> Tuple[Equation, Tuple[Layer, ...]]:
        def premise(label: int) -> Conclusion:
            if label not in done:
                raise _StepFailure(f'step {label} is not an earlier step')
            return done[label]

        if isinstance(step, AxiomStep):
            axiom = self.axioms.get(step.name)
            if axiom is None:
                raise _StepFailure(f'unknown axiom {step.name}')
            substitution = dict(step.substitution)
            unknown = [name for name in substitution if name not in axiom.variables]
            if unknown:
                raise _StepFailure(f'axiom {step.name} has no variable {unknown[0]}')
            candidates = self.layers if step.name in {a.name for a in ba_axioms()} else [layer_at(self.T, axiom.prefix)]
            return self.substituted(axiom.equation(), self.fitting(axiom.equation(), candidates), substitution)
        if isinstance(step, ReflStep):
            equation = Equation(step.formula, step.formula)
            return equation, self.fitting(equation, self.layers)
        if isinstance(step, SymStep):
            source = premise(step.premise)
            return source.equation.flipped(), source.layers
        if isinstance(step, TransStep):
            first, second = premise(step.first), premise(step.second)
            if first.equation.rhs != second.equation.lhs:
                raise _StepFailure(f'step {step.first} ends in {first.equation.rhs} '
                                   f'but step {step.second} starts from {second.equation.lhs}')
            equation = Equation(first.equation.lhs, second.equation.rhs)
            return equation, self.fitting(equation, [layer for layer in first.layers if layer in second.layers])
        if isinstance(step, CongStep):
            sources = [premise(label) for label in step.premises]
            if step.operator in BOOLEAN_CONNECTIVES:
                node, arity = BOOLEAN_CONNECTIVES[step.operator]
                if len(sources) != arity:
                    raise _StepFailure(f'{step.operator} takes {arity} premise(s), got {len(sources)}')
                layers = [layer for layer in sources[0].layers if all(layer in s.layers for s in sources)]
                equation = Equation(node(*[s.equation.lhs for s in sources]), node(*[s.equation.rhs for s in sources]))
                return equation, self.fitting(equation, layers)
            if len(sources) != 1:
                raise _StepFailure(f'{step.operator} takes 1 premise, got {len(sources)}')
            try:
                equation = Equation(modal_node(step.operator, sources[0].equation.lhs),
                                    modal_node(step.operator, sources[0].equation.rhs))
            except ShapeError as e:
                raise _StepFailure(str(e)) from None
            candidates = [layer for layer in self.layers if not layer.is_state and step.operator in layer.symbols()
                          and layer.child(step.operator) in sources[0].layers]
            return equation, self.fitting(equation, candidates)
        if isinstance(step, SubstStep):
            source = premise(step.premise)
            return self.substituted(source.equation, source.layers, dict(step.substitution))
        raise _StepFailure(f'unknown rule {type(step).__name__}')

    def check(self, steps: Sequence[Step]) -> DerivationResult:
        done: Dict[int, Conclusion] = {}
        conclusions: List[Conclusion] = []
        for step in steps:
            if step.label in done:
                return DerivationResult(tuple(conclusions), StepError(step.label, 'duplicate step label'))
            try:
                equation, layers = self.conclude(step, done)
            except _StepFailure as e:
                return DerivationResult(tuple(conclusions), StepError(step.label, str(e)))
            if not layers:
                return DerivationResult(tuple(conclusions),
                                        StepError(step.label, f'{equation} does not fit any layer of {self.T}'))
            if step.claim is not None and step.claim != equation:
                return DerivationResult(tuple(conclusions), StepError(
                    step.label, f'claimed {step.claim.format(self.T)} but the rule gives {equation.format(self.T)}'))
            conclusion = Conclusion(step.label, equation, layers)
            done[step.label] = conclusion
            conclusions.append(conclusion)
        return DerivationResult(tuple(conclusions))


def check_derivation(T: FunctorExpr, steps: Sequence[Step]) -> DerivationResult:
    return DerivationChecker(T).check(steps)


@dataclass(frozen=True)
class Countermodel:
    coalgebra: Coalgebra
    valuation: Mapping[str, FrozenSet[int]]
    state: int


def _sequent_holds(checker: ModelChecker, sequent: Sequent) -> bool:
    return checker.extension(sequent.lhs) <= checker.extension(sequent.rhs)


def _valuations(size: int, variables: Sequence[str], prune: bool) -> Iterator[Dict[str, FrozenSet[int]]]:
    """Valuations as per-state codes (bit i = variable i); pruned to non-decreasing codes."""
    codes = range(1 << len(variables))
    if prune:
        tables: Iterator[Tuple[int, ...]] = itertools.combinations_with_replacement(codes, size)
    else:
        tables = itertools.product(codes, repeat=size)
    for table in tables:
        yield {name: frozenset(x for x in range(size) if table[x] >> i & 1) for i, name in enumerate(variables)}


def countermodel_search(T: FunctorExpr, assumptions: Sequence[Sequent], goal: Sequent, max_size: int,
                        variables: Optional[Sequence[str]] = None, prune: bool = True) -> Optional[Countermodel]:
    """First model (smallest carrier, canonical order) satisfying every assumption globally and refuting goal.

    None means the search space up to max_size is exhausted.
    """
    for sequent in list(assumptions) + [goal]:
        check_formula(T, sequent.lhs)
        check_formula(T, sequent.rhs)
    formulas = [φ for sequent in list(assumptions) + [goal] for φ in (sequent.lhs, sequent.rhs)]
    variables = stage_variables(variables, formulas)
    checked = 0
    for size in range(1, max_size + 1):
        for valuation in _valuations(size, variables, prune):
            for c in all_coalgebras(T, size):
                checked += 1
                checker = ModelChecker(c, valuation)
                if not all(_sequent_holds(checker, sequent) for sequent in assumptions):
                    continue
                refuted = checker.extension(goal.lhs) - checker.extension(goal.rhs)
                if refuted:
                    log.debug('countermodel after %d models', checked)
                    return Countermodel(c, valuation, min(refuted))
        log.debug('no countermodel with %d states (%d models so far)', size, checked)
    return None
