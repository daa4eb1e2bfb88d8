"""Property suites behind `coalog verify`.

A suite expands into independent trials (functor, trial index, size) which
run in a thread pool; every trial seeds its own generator from the suite
seed, so a report depends on --seed alone and lists trials in the order
they were planned.
"""

import contextvars
import itertools
import logging
import random

from concurrent.futures import ThreadPoolExecutor as Pool
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from coalog.duality import (
    all_lalgebras, complex_algebra, h_explicit_nbhd, h_explicit_pow, h_generic, r_box, r_box_largest,
    roundtrip_isomorphic, transpose_data, verify_jt_embedding,
)
from coalog.errors import CoalogError
from coalog.finstone import FinBA, FinSet
from coalog.gkpf import (
    FunctorExpr, Nbhd, Pow, behavioural_partition, behavioural_quotient, format_functor, parse_functor,
    powerset_depth, random_coalgebra, subexpressions,
)
from coalog.logic import (
    TRUE, Formula, Not, Var, check_formula, check_soundness, complete_operators, derive_axioms, derive_signature,
)
from coalog.model import SuiteReport, TrialResult
from coalog.semantics import check_delta_iso as delta_iso_report, logical_partition, respects_morphism


log = logging.getLogger(__name__)

COVERING_FUNCTORS = (
    'Id', 'Const{a,b}', 'Id+Id', 'Const{a}*Id', 'Pow', 'Nbhd', 'Pow.(Const{a,b}*Id)', 'Pow.Pow',
)


def covering_functors() -> List[FunctorExpr]:
    return [parse_functor(text) for text in COVERING_FUNCTORS]


def is_heavy(T: FunctorExpr) -> bool:
    """Nbhd anywhere or Pow nested in Pow: the cases whose sizes are capped at 2."""
    return powerset_depth(T) > 1 or any(isinstance(F, Nbhd) for F in subexpressions(T))


def size_cap(T: FunctorExpr, max_size: int, heavy_cap: int = 2) -> int:
    return min(max_size, heavy_cap) if is_heavy(T) else max_size


@dataclass(frozen=True)
class Trial:
    suite: str
    functor: FunctorExpr
    index: int
    size: int
    seed: int

    def rng(self) -> random.Random:
        return random.Random(f'{self.seed}:{self.suite}:{format_functor(self.functor)}:{self.index}')


Check = Callable[[Trial], Optional[str]]


def _result(trial: Trial, failure: Optional[str]) -> TrialResult:
    return TrialResult(format_functor(trial.functor), trial.index, failure is None, failure or '', trial.size)


def check_delta_iso(trial: Trial) -> Optional[str]:
    report = delta_iso_report(trial.functor, FinSet(trial.size))
    return None if report.ok else report.reason


def check_h_section(trial: Trial) -> Optional[str]:
    data = transpose_data(trial.functor, FinBA(FinSet(trial.size)))
    if not data.is_section():
        return 'h . delta* is not the identity'
    if not data.is_retraction():
        return 'delta* . h is not the identity'
    return None


def check_h_explicit(trial: Trial) -> Optional[str]:
    A = FinBA(FinSet(trial.size))
    explicit = h_explicit_pow(A) if isinstance(trial.functor, Pow) else h_explicit_nbhd(A)
    generic = h_generic(trial.functor, A)
    for v in range(generic.dom.size):
        if explicit(v) != generic(v):
            return f'explicit and generic h disagree on ultrafilter {v}'
    return None


def check_jt_random(trial: Trial) -> Optional[str]:
    c = random_coalgebra(trial.functor, trial.size, trial.rng())
    alg = complex_algebra(c)
    report = verify_jt_embedding(alg)
    if not report.ok:
        return f'embedding fails at {report.witness}'
    if not report.iota_bijective:
        return 'iota is not bijective'
    if isinstance(trial.functor, Pow) and r_box(alg) != r_box_largest(alg):
        return 'accessibility from h differs from the largest relation'
    return None


def check_jt_exhaustive(trial: Trial) -> Optional[str]:
    for number, alg in enumerate(all_lalgebras(trial.functor, FinBA(FinSet(trial.size)))):
        report = verify_jt_embedding(alg)
        if not report.ok or not report.iota_bijective:
            return f'L-algebra #{number}: {report.witness or "iota is not bijective"}'
        if isinstance(trial.functor, Pow) and r_box(alg) != r_box_largest(alg):
            return f'L-algebra #{number}: accessibility from h differs from the largest relation'
    return None


def check_expressivity(trial: Trial) -> Optional[str]:
    c = random_coalgebra(trial.functor, trial.size, trial.rng())
    logical, behavioural = logical_partition(c), behavioural_partition(c)
    if logical != behavioural:
        return f'logical partition {logical.as_sets()} differs from behavioural {behavioural.as_sets()}'
    return None


def check_axiom_soundness(trial: Trial) -> Optional[str]:
    axiom = derive_axioms(trial.functor)[trial.index]
    counterexample = check_soundness(trial.functor, axiom, trial.size)
    if counterexample is not None:
        return f'{axiom.name}: {counterexample.describe()}'
    return None


def check_complex_algebra(trial: Trial) -> Optional[str]:
    """Every derived axiom whose variables sit at the state layer holds in a random complex algebra."""
    T = trial.functor
    alg = complex_algebra(random_coalgebra(T, trial.size, trial.rng()))
    elements = list(alg.carrier.elements())
    for axiom in derive_axioms(T):
        equation = axiom.wrapped()
        layers = check_formula(T, equation.lhs, layer_vars=True)
        layers.update(check_formula(T, equation.rhs, layer_vars=True))
        if not all(layer.is_state for layer in layers.values()):
            continue
        names = sorted(layers)
        for values in itertools.product(elements, repeat=len(names)):
            args = dict(zip(names, values))
            if alg.interpret(equation.lhs, args) != alg.interpret(equation.rhs, args):
                shown = ', '.join(f'{name} = {alg.carrier.describe(value)}' for name, value in args.items())
                return f'{axiom.name} fails in the complex algebra at {shown}'
    return None


def check_roundtrip(trial: Trial) -> Optional[str]:
    c = random_coalgebra(trial.functor, trial.size, trial.rng())
    return None if roundtrip_isomorphic(c) else 'the counit bijection is not an isomorphism'


def sample_formulas(T: FunctorExpr, variables: Sequence[str] = ('p', 'q')) -> List[Formula]:
    """Every complete operator over the variables, their negations and one further nesting."""
    operators = complete_operators(derive_signature(T))
    base: List[Formula] = [TRUE] + [Var(name) for name in variables]
    base += [Not(φ) for φ in base]
    depth_one = list(dict.fromkeys(op.apply(φ) for op in operators for φ in base))
    depth_two = list(dict.fromkeys(op.apply(ψ) for op in operators if op.arity for ψ in depth_one))
    return base + depth_one + depth_two


def check_invariance(trial: Trial) -> Optional[str]:
    rng = trial.rng()
    c = random_coalgebra(trial.functor, trial.size, rng)
    _, quotient, projection = behavioural_quotient(c)
    valuation = {name: frozenset(x for x in range(quotient.size) if rng.random() < 0.5) for name in ('p', 'q')}
    failure = respects_morphism(projection, c, quotient, valuation, sample_formulas(trial.functor))
    return None if failure is None else f'{failure} is not invariant under the quotient map'


def _sizes(T: FunctorExpr, max_size: int, heavy_cap: int = 2, start: int = 0) -> range:
    return range(start, size_cap(T, max_size, heavy_cap) + 1)


def plan(suite: str, functors: Sequence[FunctorExpr], max_size: int, trials: int,
         seed: int) -> List[Tuple[Trial, Check]]:
    """The trials of a suite in report order."""
    planned: List[Tuple[Trial, Check]] = []

    def add(T: FunctorExpr, index: int, size: int, check: Check) -> None:
        planned.append((Trial(suite, T, index, size, seed), check))

    for T in functors:
        if suite == 'delta-iso':
            for n in _sizes(T, max_size):
                add(T, n, n, check_delta_iso)
        elif suite == 'h-section':
            for n in _sizes(T, max_size):
                add(T, n, n, check_h_section)
        elif suite == 'h-explicit':
            if isinstance(T, (Pow, Nbhd)):
                for n in _sizes(T, max_size):
                    add(T, n, n, check_h_explicit)
        elif suite == 'jt':
            sizes = list(_sizes(T, max_size))
            for i in range(trials):
                add(T, i, sizes[i % len(sizes)], check_jt_random)
            for n in range(min(2, max_size) + 1):
                add(T, trials + n, n, check_jt_exhaustive)
        elif suite == 'expressivity':
            sizes = list(_sizes(T, max_size, heavy_cap=3, start=1)) or [0]
            for i in range(trials):
                add(T, i, sizes[i % len(sizes)], check_expressivity)
        elif suite == 'soundness':
            axioms = derive_axioms(T)
            for i in range(len(axioms)):
                add(T, i, size_cap(T, max_size), check_axiom_soundness)
            for i in range(trials):
                add(T, len(axioms) + i, min(size_cap(T, max_size), 3), check_complex_algebra)
        elif suite in ('roundtrip', 'invariance'):
            check = check_roundtrip if suite == 'roundtrip' else check_invariance
            sizes = list(_sizes(T, max_size))
            for i in range(trials):
                add(T, i, sizes[i % len(sizes)], check)
        else:
            raise ValueError(f'Unknown suite {suite!r}')
    return planned


SUITES = ('delta-iso', 'h-section', 'h-explicit', 'jt', 'expressivity', 'soundness', 'roundtrip', 'invariance')


def run_trial(planned: Tuple[Trial, Check]) -> TrialResult:
    trial, check = planned
    try:
        failure = check(trial)
    except CoalogError as e:
        failure = f'{type(e).__name__}: {e}'
    if failure is not None:
        log.info('%s trial %d on %s failed: %s', trial.suite, trial.index, format_functor(trial.functor), failure)
    return _result(trial, failure)


def run_suite(suite: str, functors: Sequence[FunctorExpr], max_size: int, trials: int = 20, seed: int = 0,
              workers: int = 1) -> SuiteReport:
    planned = plan(suite, functors, max_size, trials, seed)
    log.info('%s: %d trials on %d worker(s)', suite, len(planned), workers)
    if workers <= 1:
        results = [run_trial(item) for item in planned]
    else:
        # worker threads start from an empty context; carry the resource limit over
        context = contextvars.copy_context()
        with Pool(max_workers=workers) as pool:
            results = list(pool.map(lambda item: context.copy().run(run_trial, item), planned))
    return SuiteReport(suite, results)


def summarize(report: SuiteReport) -> Dict[str, Tuple[int, int]]:
    """passed/total per functor, in first-appearance order."""
    counts: Dict[str, Tuple[int, int]] = {}
    for result in report.results:
        passed, total = counts.get(result.functor, (0, 0))
        counts[result.functor] = (passed + result.ok, total + 1)
    return counts
