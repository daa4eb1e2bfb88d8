"""Readers and writers for the text files the command line works with.

Model files::

    functor: Pow
    states: x y
    x -> {y}
    y -> {}

Valuation files have one line ``p = {x, y}`` per variable; algebra files
give the structure map dually, one ``dual: a -> <value over atoms>`` line
per atom; derivation files have one ``k: <rule> ...`` line per step.
``#`` starts a comment everywhere.
"""

import re

from functools import partial
from typing import Any, Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from lark import Lark, Token
from lark.exceptions import UnexpectedInput

from coalog.errors import CoalogError, ParseError, ShapeError
from coalog.finstone import FinBA, FinSet
from coalog.duality import LAlgebra, l_on_ba, lalgebra_from_dual
from coalog.gkpf import Coalgebra, FunctorExpr, apply_obj, format_functor, format_value, parse_functor, parse_value
from coalog.lindenbaum import AxiomStep, CongStep, ReflStep, Step, SubstStep, SymStep, TransStep
from coalog.logic import FORMULA_GRAMMAR, Equation, Formula, _FormulaBuilder, strip_groups


STATE_NAME = re.compile(r'[A-Za-z_0-9][A-Za-z_0-9.]*$')


def _lines(text: str) -> Iterator[Tuple[int, str]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if line:
            yield lineno, line


def _column(e: UnexpectedInput) -> Optional[int]:
    column = getattr(e, 'column', -1)
    return column if column > 0 else None


def _at(lineno: int, e: CoalogError) -> CoalogError:
    if isinstance(e, ShapeError):
        return ShapeError(f'line {lineno}: {e}', e.operator, e.layer)
    return ParseError(f'line {lineno}: {e}')


def _header(lines: List[Tuple[int, str]], key: str) -> Tuple[int, str]:
    if not lines or not lines[0][1].startswith(f'{key}:'):
        lineno = lines[0][0] if lines else 1
        raise ParseError(f'line {lineno}: expected a "{key}:" line', lineno)
    lineno, line = lines.pop(0)
    return lineno, line[len(key) + 1:].strip()


def _names(lineno: int, text: str, what: str) -> List[str]:
    names = text.split()
    for name in names:
        if not STATE_NAME.match(name):
            raise ParseError(f'line {lineno}: invalid {what} name {name!r}')
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise ParseError(f'line {lineno}: {what} {duplicates[0]} is listed twice')
    return names


def _functor(lineno: int, text: str) -> FunctorExpr:
    try:
        return parse_functor(text)
    except ParseError as e:
        raise _at(lineno, e) from None


def _structure(lines: Sequence[Tuple[int, str]], T: FunctorExpr, carrier: FinSet,
               prefix: str = '') -> List[object]:
    """The value assigned to each element of carrier by `name -> value` lines."""
    values: Dict[int, object] = {}
    for lineno, line in lines:
        if prefix:
            if not line.startswith(prefix):
                raise ParseError(f'line {lineno}: expected "{prefix} <atom> -> <value>"')
            line = line[len(prefix):].strip()
        name, arrow, value = line.partition('->')
        name = name.strip()
        if not arrow:
            raise ParseError(f'line {lineno}: expected "<name> -> <value>"')
        try:
            x = carrier.index_of_label(name)
        except ValueError:
            raise ParseError(f'line {lineno}: unknown name {name!r}') from None
        if x in values:
            raise ParseError(f'line {lineno}: {name} is given a value twice')
        try:
            values[x] = parse_value(T, value.strip(), carrier)
        except (ParseError, ShapeError) as e:
            raise _at(lineno, e) from None
    missing = [carrier.label(x) for x in range(carrier.size) if x not in values]
    if missing:
        raise ParseError(f'No value given for {missing[0]}')
    return [values[x] for x in range(carrier.size)]


def read_model(text: str) -> Coalgebra:
    lines = list(_lines(text))
    lineno, functor = _header(lines, 'functor')
    T = _functor(lineno, functor)
    lineno, states = _header(lines, 'states')
    carrier = FinSet.named(_names(lineno, states, 'state'))
    return Coalgebra(T, carrier, tuple(_structure(lines, T, carrier)))


def _state_names(carrier: FinSet) -> List[str]:
    labels = [carrier.label(x) for x in range(carrier.size)]
    if all(STATE_NAME.match(label) for label in labels) and len(set(labels)) == len(labels):
        return labels
    return [f's{x}' for x in range(carrier.size)]


def format_model(c: Coalgebra) -> str:
    """Model file text; states whose labels are not valid names are renamed s0, s1, ..."""
    names = _state_names(c.carrier)
    lines = [f'functor: {format_functor(c.functor)}']
    for x, name in enumerate(names):
        if name != c.carrier.label(x):
            lines.append(f'# {name} = {c.carrier.label(x)}')
    lines.append(f'states: {" ".join(names)}')
    lines.extend(f'{name} -> {format_value(c.structure[x], names)}' for x, name in enumerate(names))
    return '\n'.join(lines) + '\n'


VALUATION_GRAMMAR = r'''
    assignment: NAME "=" "{" (STATE ("," STATE)*)? "}"

    NAME: /[A-Za-z_][A-Za-z_0-9]*/
    STATE: /[A-Za-z_0-9][A-Za-z_0-9.]*/
    %import common.WS
    %ignore WS
'''

_valuation_parser = Lark(VALUATION_GRAMMAR, start='assignment', parser='lalr')


def read_valuation(text: str, carrier: FinSet) -> Dict[str, FrozenSet[int]]:
    valuation: Dict[str, FrozenSet[int]] = {}
    for lineno, line in _lines(text):
        try:
            name, *members = (str(token) for token in _valuation_parser.parse(line).children)
        except UnexpectedInput as e:
            raise ParseError(f'line {lineno}: expected "<variable> = {{<state>, ...}}"', None, _column(e)) from None
        if name in valuation:
            raise ParseError(f'line {lineno}: variable {name} is given twice')
        states = set()
        for member in members:
            try:
                states.add(carrier.index_of_label(member))
            except ValueError:
                raise ParseError(f'line {lineno}: unknown state {member!r}') from None
        valuation[name] = frozenset(states)
    return valuation


def format_state_set(carrier: FinSet, states: Iterable[int]) -> str:
    return '{' + ', '.join(carrier.label(x) for x in sorted(states)) + '}'


def format_valuation(carrier: FinSet, valuation: Mapping[str, FrozenSet[int]]) -> str:
    names = _state_names(carrier)
    return ''.join(f'{name} = {{{", ".join(names[x] for x in sorted(states))}}}\n'
                   for name, states in sorted(valuation.items()))


def read_algebra(text: str) -> LAlgebra:
    lines = list(_lines(text))
    lineno, functor = _header(lines, 'functor')
    T = _functor(lineno, functor)
    lineno, atoms = _header(lines, 'atoms')
    A = FinBA(FinSet.named(_names(lineno, atoms, 'atom')))
    tset = apply_obj(T, A.atoms)
    values = _structure(lines, T, A.atoms, prefix='dual:')
    return lalgebra_from_dual(T, A, tuple(tset.index(value) for value in values))


def format_algebra(alg: LAlgebra) -> str:
    atoms = alg.carrier.atoms
    names = _state_names(atoms)
    tset = l_on_ba(alg.functor, alg.carrier).atoms
    lines = [f'functor: {format_functor(alg.functor)}', f'atoms: {" ".join(names)}']
    lines.extend(f'dual: {name} -> {format_value(tset.element(alg.alpha.dual(a)), names)}'
                 for a, name in enumerate(names))
    return '\n'.join(lines) + '\n'


STEP_GRAMMAR = r'''
    step: LABEL ":" rule claim?
    ?rule: "axiom" AXIOM_NAME ("with" substitution)?       -> axiom
         | "refl" formula                                  -> refl
         | "sym" LABEL                                     -> sym
         | "trans" LABEL LABEL                             -> trans
         | "cong" operator "(" LABEL ("," LABEL)* ")"      -> cong
         | "subst" LABEL "with" substitution               -> subst
    !operator: "~" | "&" | "|" | "->" | K1 | K2 | P1 | P2 | BOX
    substitution: binding ("," binding)*
    binding: NAME ":=" formula
    claim: ";" equation

    LABEL: /[0-9]+/
    AXIOM_NAME: /[A-Za-z_0-9][A-Za-z_0-9.\-]*/
''' + FORMULA_GRAMMAR


class _StepBuilder(_FormulaBuilder):
    """Each rule becomes a partial step still waiting for its label and claim."""

    def step(self, children: List[Any]) -> Step:
        label, build = int(children[0]), children[1]
        return build(label=label, claim=children[2] if len(children) > 2 else None)

    def axiom(self, children: List[Any]) -> Callable[..., Step]:
        substitution = children[1] if len(children) > 1 else ()
        return partial(AxiomStep, name=str(children[0]), substitution=substitution)

    def refl(self, children: List[Any]) -> Callable[..., Step]:
        return partial(ReflStep, formula=strip_groups(children[0]))

    def sym(self, children: List[Token]) -> Callable[..., Step]:
        return partial(SymStep, premise=int(children[0]))

    def trans(self, children: List[Token]) -> Callable[..., Step]:
        return partial(TransStep, first=int(children[0]), second=int(children[1]))

    def cong(self, children: List[Any]) -> Callable[..., Step]:
        return partial(CongStep, operator=children[0], premises=tuple(int(k) for k in children[1:]))

    def subst(self, children: List[Any]) -> Callable[..., Step]:
        return partial(SubstStep, premise=int(children[0]), substitution=children[1])

    def operator(self, children: List[Token]) -> str:
        return str(children[0])

    def substitution(self, children: List[Tuple[str, Formula]]) -> Tuple[Tuple[str, Formula], ...]:
        return tuple(children)

    def binding(self, children: List[Any]) -> Tuple[str, Formula]:
        return str(children[0]), strip_groups(children[1])

    def claim(self, children: List[Equation]) -> Equation:
        equation = children[0]
        return Equation(strip_groups(equation.lhs), strip_groups(equation.rhs))


_step_parser = Lark(STEP_GRAMMAR, start='step', parser='lalr')


def parse_step(lineno: int, line: str) -> Step:
    try:
        return _StepBuilder().transform(_step_parser.parse(line))
    except UnexpectedInput as e:
        raise ParseError(f'line {lineno}: expected "<k>: <rule> ...", got {line!r}', None, _column(e)) from None


def read_derivation(text: str) -> List[Step]:
    return [parse_step(lineno, line) for lineno, line in _lines(text)]
