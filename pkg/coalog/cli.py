import argparse
import json
import os

from typing import Dict, FrozenSet, Optional

from coalog.config import check_cardinality
from coalog.duality import complex_algebra, jt_coalgebra, verify_jt_embedding
from coalog.errors import describe_power_of_two
from coalog.formats import (
    format_algebra, format_model, format_state_set, format_valuation, read_algebra, read_derivation, read_model,
    read_valuation,
)
from coalog.gkpf import (
    Coalgebra, behavioural_quotient, coproduct_coalgebra, format_functor, parse_functor, saturated,
)
from coalog.lindenbaum import check_derivation, countermodel_search, decide_equation
from coalog.logic import (
    TRUE, count_liftings, derive_axioms, derive_signature, iter_liftings, lifting_exponent, parse_formula,
    parse_sequent,
)
from coalog.model import CoalogConfig, SuiteReport
from coalog.semantics import model_check
from coalog.suites import covering_functors, run_suite, summarize
from coalog.utils.colorize import bold, verdict, warning


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


class CoalogCLI:
    """One method per subcommand; each prints its result and returns the exit code."""

    def __init__(self, config: CoalogConfig) -> None:
        self.config = config

    @staticmethod
    def cmd_derive(args: argparse.Namespace) -> int:
        T = parse_functor(args.functor)
        signature = derive_signature(T)
        axioms = derive_axioms(T)
        print(bold(f'operators ({len(signature.operators)}):'))
        for line in signature.describe():
            print(f'  {line}')
        print(bold(f'axioms ({len(axioms)}):'))
        for axiom in axioms:
            print(f'  {axiom.format(T)}')
        return 0

    @staticmethod
    def cmd_mc(args: argparse.Namespace) -> int:
        c = read_model(_read(args.model))
        valuation: Dict[str, FrozenSet[int]] = {}
        if args.valuation:
            valuation = read_valuation(_read(args.valuation), c.carrier)
        φ = parse_formula(c.functor, args.formula)
        print(format_state_set(c.carrier, model_check(c, valuation, φ)))
        return 0

    @staticmethod
    def cmd_bisim(args: argparse.Namespace) -> int:
        models = [read_model(_read(path)) for path in args.model]
        if len(models) > 2:
            raise ValueError('bisim compares at most two models')
        c: Coalgebra = models[0]
        if len(models) == 2:
            c, _, _ = coproduct_coalgebra(models[0], models[1])
        partition, quotient, _ = behavioural_quotient(c)
        for block in range(partition.count):
            print(format_state_set(c.carrier, partition.members(block)))
        if args.quotient:
            print()
            print(format_model(quotient), end='')
        return 0

    @staticmethod
    def cmd_decide(args: argparse.Namespace) -> int:
        T = parse_functor(args.functor)
        if args.formula is not None:
            if args.lhs is not None or args.rhs is not None:
                raise ValueError('--formula cannot be combined with --lhs/--rhs')
            lhs, rhs = parse_formula(T, args.formula), TRUE
        else:
            if args.lhs is None or args.rhs is None:
                raise ValueError('decide needs --lhs and --rhs, or --formula')
            lhs, rhs = parse_formula(T, args.lhs), parse_formula(T, args.rhs)
        variables = [name.strip() for name in args.vars.split(',') if name.strip()] if args.vars else None
        if decide_equation(T, variables, lhs, rhs):
            print(verdict(True, passed='derivable'))
            return 0
        print(verdict(False, failed='not derivable'))
        return 1

    def cmd_counter(self, args: argparse.Namespace) -> int:
        T = parse_functor(args.functor)
        assumptions = [parse_sequent(T, text) for text in args.assume or []]
        goal = parse_sequent(T, args.goal)
        found = countermodel_search(T, assumptions, goal, args.max_size, prune=not args.no_prune)
        if found is None:
            print(f'exhausted: no countermodel with at most {args.max_size} states')
            return 0
        print(format_model(found.coalgebra), end='')
        print(format_valuation(found.coalgebra.carrier, found.valuation), end='')
        print(f'refuted at: {found.coalgebra.carrier.label(found.state)}')
        return 1

    def cmd_verify(self, args: argparse.Namespace) -> int:
        if args.all:
            functors = covering_functors()
        elif args.functor:
            functors = [parse_functor(text) for text in args.functor]
        else:
            raise ValueError('verify needs --functor or --all')
        report = run_suite(args.suite, functors, args.max_size, self.config.trials, self.config.seed,
                           self.config.workers)
        if args.json:
            print(json.dumps(report.to_json(), indent=2, sort_keys=True))
        else:
            self.show_report(report)
        return 0 if report.ok else 1

    @staticmethod
    def show_report(report: SuiteReport) -> None:
        if not report.results:
            print(warning(f'{report.suite}: no trials apply'))
            return
        for result in report.results:
            if not result.ok:
                print(f'{verdict(False)} {result.functor} trial {result.trial} (size {result.size}): {result.detail}')
        for functor, (passed, total) in summarize(report).items():
            status = verdict(passed == total)
            print(f'{status} {report.suite} {functor}: {passed}/{total}')
        print(bold(f'{report.suite}: {report.passed} passed, {report.failed} failed'))

    @staticmethod
    def cmd_liftings(args: argparse.Namespace) -> int:
        T = parse_functor(args.functor)
        if args.count_only:
            exponent = lifting_exponent(T, args.arity)
            print(describe_power_of_two(exponent, at_least=saturated(exponent)))
            return 0
        total = count_liftings(T, args.arity)
        check_cardinality(total, f'{args.arity}-ary liftings of {format_functor(T)}')
        for lifting in iter_liftings(T, args.arity):
            print(lifting.describe())
        return 0

    @staticmethod
    def cmd_check(args: argparse.Namespace) -> int:
        T = parse_functor(args.functor)
        result = check_derivation(T, read_derivation(_read(args.derivation)))
        for conclusion in result.conclusions:
            print(f'{conclusion.label}: {conclusion.equation.format(T)}')
        if not result.ok:
            print(verdict(False, failed=f'step {result.error.label}: {result.error.reason}'))
            return 1
        return 0

    @staticmethod
    def cmd_jt(args: argparse.Namespace) -> int:
        if args.model:
            print(format_algebra(complex_algebra(read_model(_read(args.model)))), end='')
            return 0
        alg = read_algebra(_read(args.algebra))
        report = verify_jt_embedding(alg)
        if not report.ok:
            print(verdict(False, failed=f'not embedded: {report.witness}'))
            return 1
        print(format_model(jt_coalgebra(alg)), end='')
        print(verdict(True, passed=f'embedded: {report.checked} elements checked'))
        return 0

    def cmd_config(self, args: argparse.Namespace, path: Optional[str] = None) -> int:
        text = json.dumps(self.config.to_json(), sort_keys=True, indent=4)
        print(text)
        if args.save and path is not None:
            dirname = os.path.dirname(path)
            if dirname and not os.path.exists(dirname):
                os.makedirs(dirname)
            with open(path, 'w') as config_file:
                config_file.write(text + '\n')
            print(f'Saved config to {path}')
        return 0

