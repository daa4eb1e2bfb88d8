import argparse
import json
import logging
import os
import sys

from typing import Any, List, Optional

from coalog.cli import CoalogCLI
from coalog.config import DEFAULT_LIMIT, resource_limit
from coalog.errors import CoalogError, ResourceLimit
from coalog.model import CoalogConfig
from coalog.suites import SUITES


EXIT_USAGE = 2
EXIT_RESOURCE = 3


class CoalogMain:

    DEFAULT_CONFIG_FILEPATH = os.path.expanduser('~/.coalog/config.json')

    def __init__(self, args: List[str] = None) -> None:
        if args is None:
            args = sys.argv[1:]
        self.args = self.parse_args(args)
        self._limit = getattr(self.args, 'limit', None)
        self._seed = getattr(self.args, 'seed', None)
        self._trials = getattr(self.args, 'trials', None)
        self._workers = getattr(self.args, 'workers', None)
        self.config_filepath = os.getenv('COALOG_CONFIG') or self.DEFAULT_CONFIG_FILEPATH

        if os.path.exists(self.config_filepath):
            with open(self.config_filepath) as config_file:
                self._file_config = CoalogConfig.from_json(json.load(config_file))
        else:
            self._file_config = None

    @classmethod
    def parse_args(cls, args: List[str]) -> argparse.Namespace:
        parser = argparse.ArgumentParser(prog='coalog', description='Coalgebraic modal logic workbench')
        parser.add_argument('-v', '--verbose', action='count', default=0,
                            help='Log progress to stderr (-vv for debug output)')
        parser.add_argument('--limit', type=int,
                            help=f'Largest number of elements any enumeration may materialise (default {DEFAULT_LIMIT})')
        commands = parser.add_subparsers(dest='command', metavar='COMMAND')
        commands.required = True

        derive = commands.add_parser('derive', help='Print the signature and axioms derived from a functor')
        derive.add_argument('-f', '--functor', required=True, help='Functor expression, e.g. "Pow.(Const{a,b}*Id)"')

        mc = commands.add_parser('mc', help='Model-check a formula on a model file')
        mc.add_argument('-m', '--model', required=True, help='Model file')
        mc.add_argument('-V', '--valuation', help='Valuation file (lines "p = {x, y}")')
        mc.add_argument('-p', '--formula', required=True, help='Formula to check')

        bisim = commands.add_parser('bisim', help='Print the behavioural-equivalence classes of one or two models')
        bisim.add_argument('-m', '--model', required=True, action='append', help='Model file (give twice to compare)')
        bisim.add_argument('-q', '--quotient', action='store_true', help='Also print the minimal quotient model')

        decide = commands.add_parser('decide', help='Decide derivability of an equation')
        decide.add_argument('-f', '--functor', required=True)
        decide.add_argument('--vars', help='Comma-separated variables (default: those in the equation)')
        decide.add_argument('--lhs')
        decide.add_argument('--rhs')
        decide.add_argument('-p', '--formula', help='Shorthand for --lhs FORMULA --rhs true')

        counter = commands.add_parser('counter', help='Search for a countermodel to a global consequence')
        counter.add_argument('-f', '--functor', required=True)
        counter.add_argument('-a', '--assume', action='append', help='Assumed sequent (repeatable)')
        counter.add_argument('-g', '--goal', required=True, help='Goal sequent "PHI <= PSI" or "PSI"')
        counter.add_argument('-n', '--max-size', type=int, default=3, dest='max_size')
        counter.add_argument('--no-prune', action='store_true', dest='no_prune',
                             help='Enumerate every valuation instead of one per isomorphism class')

        verify = commands.add_parser('verify', help='Run a property suite')
        verify.add_argument('-s', '--suite', required=True, choices=SUITES)
        verify.add_argument('-f', '--functor', action='append', help='Functor expression (repeatable)')
        verify.add_argument('--all', action='store_true', help='Use the covering list of functors')
        verify.add_argument('-n', '--max-size', type=int, default=3, dest='max_size')
        verify.add_argument('--seed', type=int)
        verify.add_argument('--trials', type=int)
        verify.add_argument('--workers', type=int)
        verify.add_argument('--json', action='store_true', help='Print the report as JSON')

        liftings = commands.add_parser('liftings', help='Enumerate the canonical predicate liftings of a functor')
        liftings.add_argument('-f', '--functor', required=True)
        liftings.add_argument('-k', '--arity', type=int, required=True)
        liftings.add_argument('--count-only', action='store_true', dest='count_only')

        check = commands.add_parser('check', help='Check a derivation file')
        check.add_argument('-f', '--functor', required=True)
        check.add_argument('-d', '--derivation', required=True, help='Derivation file')

        jt = commands.add_parser('jt', help='Dual coalgebra of an algebra file, or complex algebra of a model')
        source = jt.add_mutually_exclusive_group(required=True)
        source.add_argument('-a', '--algebra', help='Algebra file; prints its dual coalgebra once the embedding checks')
        source.add_argument('-m', '--model', help='Model file; prints its complex algebra as an algebra file')

        config = commands.add_parser('config', help='Print the effective configuration')
        config.add_argument('--save', action='store_true', help='Write it to the config file')
        return parser.parse_args(args)

    @property
    def limit(self) -> int:
        if self._limit is None:
            limit = self.get_config_value('COALOG_LIMIT', 'limit')
            self._limit = DEFAULT_LIMIT if limit is None else int(limit)
        return self._limit

    @property
    def seed(self) -> int:
        if self._seed is None:
            seed = self.get_config_value('COALOG_SEED', 'seed')
            self._seed = 0 if seed is None else int(seed)
        return self._seed

    @property
    def trials(self) -> int:
        if self._trials is None:
            trials = self.get_config_value('COALOG_TRIALS', 'trials')
            self._trials = CoalogConfig.trials if trials is None else int(trials)
        return self._trials

    @property
    def workers(self) -> int:
        if self._workers is None:
            workers = self.get_config_value('COALOG_WORKERS', 'workers')
            self._workers = CoalogConfig.workers if workers is None else int(workers)
        return self._workers

    @property
    def config(self) -> CoalogConfig:
        return CoalogConfig(limit=self.limit, seed=self.seed, trials=self.trials, workers=self.workers)

    def get_config_value(self, env_key: str, config_key: Optional[str]) -> Any:
        env_value = os.getenv(env_key)
        if env_value is not None:
            return env_value
        if self._file_config is not None and config_key is not None:
            return getattr(self._file_config, config_key)
        return None

    def run(self) -> int:
        cli = CoalogCLI(self.config)
        if self.args.command == 'config':
            return cli.cmd_config(self.args, self.config_filepath)
        command = getattr(cli, f'cmd_{self.args.command}')
        with resource_limit(self.limit):
            return command(self.args)


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')


def main(args: List[str] = None) -> int:
    try:
        coalog_main = CoalogMain(args)
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except (OSError, ValueError) as e:
        print(f'coalog: bad config file: {e}', file=sys.stderr)
        return EXIT_USAGE
    configure_logging(coalog_main.args.verbose)
    try:
        return coalog_main.run()
    except ResourceLimit as e:
        print(f'coalog: resource limit exceeded: {e}', file=sys.stderr)
        return EXIT_RESOURCE
    except (OverflowError, MemoryError) as e:
        print(f'coalog: resource limit exceeded: {type(e).__name__}: {e}', file=sys.stderr)
        return EXIT_RESOURCE
    except (CoalogError, ValueError, OSError) as e:
        print(f'coalog: {e}', file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
