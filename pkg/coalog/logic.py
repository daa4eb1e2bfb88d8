"""Modal syntax read off a functor expression: signature, rank-1 axioms, formulas and predicate liftings.

Formulas are stratified by the layers of the functor. A layer is the
constructor currently interpreted together with the stack of inner functors
its Id leaves stand for; Id layers are transparent and the bottom Id is the
state layer, where variables live and where a new modal layer of the whole
functor may start again (written in parentheses below a modal operator).
"""

import itertools
import logging

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedInput

from coalog.config import check_cardinality
from coalog.errors import ParseError, ShapeError
from coalog.finstone import FinSet
from coalog.gkpf import (
    Comp, Const, FunctorExpr, Id, Nbhd, Payload, Pow, Prod, Sum, apply_obj, cardinality, enumerate_layer, exp2,
    format_value,
)
from coalog.utils.combinatorics import all_subsets


log = logging.getLogger(__name__)


class Formula:

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Extent(Formula):
    """A subset of the current layer's set, given by its elements."""
    members: FrozenSet[Any]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


class Modal(Formula):
    symbol = ''


@dataclass(frozen=True)
class InLF(Modal):
    arg: Formula
    symbol = '[k1]'


@dataclass(frozen=True)
class InRF(Modal):
    arg: Formula
    symbol = '[k2]'


@dataclass(frozen=True)
class Proj1(Modal):
    arg: Formula
    symbol = '[p1]'


@dataclass(frozen=True)
class Proj2(Modal):
    arg: Formula
    symbol = '[p2]'


@dataclass(frozen=True)
class Box(Modal):
    arg: Formula
    symbol = 'box'


@dataclass(frozen=True)
class ConstAtom(Modal):
    name: str

    @property
    def symbol(self) -> str:
        return f"'{self.name}"


@dataclass(frozen=True)
class _Group(Formula):
    arg: Formula


UNARY_MODALS = {'[k1]': InLF, '[k2]': InRF, '[p1]': Proj1, '[p2]': Proj2, 'box': Box}

TRUE = Top()
FALSE = Bot()


def conj(formulas: Iterable[Formula]) -> Formula:
    formulas = list(formulas)
    if not formulas:
        return TRUE
    result = formulas[0]
    for φ in formulas[1:]:
        result = And(result, φ)
    return result


def disj(formulas: Iterable[Formula]) -> Formula:
    formulas = list(formulas)
    if not formulas:
        return FALSE
    result = formulas[0]
    for φ in formulas[1:]:
        result = Or(result, φ)
    return result


def iff(left: Formula, right: Formula) -> Formula:
    return And(Implies(left, right), Implies(right, left))


def children(φ: Formula) -> Tuple[Formula, ...]:
    if isinstance(φ, (And, Or, Implies)):
        return (φ.left, φ.right)
    if isinstance(φ, (Not, _Group, InLF, InRF, Proj1, Proj2, Box)):
        return (φ.arg,)
    return ()


def rebuild(φ: Formula, args: Sequence[Formula]) -> Formula:
    if isinstance(φ, (And, Or, Implies)):
        return type(φ)(args[0], args[1])
    if isinstance(φ, (Not, _Group, InLF, InRF, Proj1, Proj2, Box)):
        return type(φ)(args[0])
    return φ


def variables_of(φ: Formula) -> List[str]:
    """Variable names in order of first occurrence."""
    seen: Dict[str, None] = {}

    def walk(ψ: Formula) -> None:
        if isinstance(ψ, Var):
            seen.setdefault(ψ.name)
        for child in children(ψ):
            walk(child)
    walk(φ)
    return list(seen)


def substitute(φ: Formula, substitution: Mapping[str, Formula]) -> Formula:
    if isinstance(φ, Var):
        return substitution.get(φ.name, φ)
    args = children(φ)
    if not args:
        return φ
    return rebuild(φ, [substitute(arg, substitution) for arg in args])


def strip_groups(φ: Formula) -> Formula:
    if isinstance(φ, _Group):
        return strip_groups(φ.arg)
    args = children(φ)
    if not args:
        return φ
    return rebuild(φ, [strip_groups(arg) for arg in args])


def modal_node(symbol: str, arg: Formula = TRUE) -> Modal:
    if symbol.startswith("'"):
        return ConstAtom(symbol[1:])
    try:
        return UNARY_MODALS[symbol](arg)
    except KeyError:
        raise ShapeError(f'Unknown modal operator {symbol!r}', operator=symbol) from None


@dataclass(frozen=True)
class Layer:
    functor: Optional[FunctorExpr]
    below: Tuple[FunctorExpr, ...] = ()

    @classmethod
    def enter(cls, F: FunctorExpr, below: Tuple[FunctorExpr, ...] = ()) -> 'Layer':
        """The layer interpreting F over below, skipping transparent Id and Comp nodes."""
        while True:
            if isinstance(F, Id):
                if not below:
                    return cls(None, ())
                F, below = below[0], below[1:]
            elif isinstance(F, Comp):
                F, below = F.outer, (F.inner,) + below
            else:
                return cls(F, below)

    @classmethod
    def enter_value(cls, F: FunctorExpr, below: Tuple[FunctorExpr, ...], value: Any) -> Tuple['Layer', Any]:
        """As enter, carrying an F-value along (Id leaves unwrap their payload)."""
        while True:
            if isinstance(F, Id):
                value = value.value
                if not below:
                    return cls(None, ()), value
                F, below = below[0], below[1:]
            elif isinstance(F, Comp):
                F, below = F.outer, (F.inner,) + below
            else:
                return cls(F, below), value

    @classmethod
    def state(cls) -> 'Layer':
        return cls(None, ())

    @property
    def is_state(self) -> bool:
        return self.functor is None

    def symbols(self) -> List[str]:
        F = self.functor
        if isinstance(F, Sum):
            return ['[k1]', '[k2]']
        if isinstance(F, Prod):
            return ['[p1]', '[p2]']
        if isinstance(F, (Pow, Nbhd)):
            return ['box']
        if isinstance(F, Const):
            return [f"'{name}" for name in F.names]
        return []

    def child(self, symbol: str) -> 'Layer':
        """The layer an operator's argument lives in."""
        F = self.functor
        if symbol in ('[k1]', '[p1]'):
            return Layer.enter(F.left, self.below)
        if symbol in ('[k2]', '[p2]'):
            return Layer.enter(F.right, self.below)
        if symbol == 'box':
            return Layer.enter(Id(), self.below)
        raise ShapeError(f'Operator {symbol} takes no argument', operator=symbol)

    def elements(self, n: int) -> Tuple[Payload, ...]:
        if self.is_state:
            return tuple(range(n))
        return enumerate_layer(self.functor, n, self.below)

    def cardinality(self, n: int) -> int:
        return n if self.is_state else cardinality(self.functor, n, self.below)

    def __str__(self) -> str:
        if self.is_state:
            return 'state layer'
        return f'{self.functor} layer'


def layer_at(T: FunctorExpr, path: Sequence[str]) -> Layer:
    layer = Layer.enter(T)
    for symbol in path:
        if layer.is_state or symbol not in layer.symbols():
            raise ShapeError(f'Operator path {" ".join(path)} does not fit {T}', operator=symbol, layer=str(layer))
        layer = layer.child(symbol)
    return layer


def all_layers(T: FunctorExpr) -> List[Layer]:
    """Every layer reachable in T, top first, state layer last."""
    found: List[Layer] = []

    def walk(layer: Layer) -> None:
        if layer in found:
            return
        found.append(layer)
        for symbol in layer.symbols():
            if not symbol.startswith("'"):
                walk(layer.child(symbol))
    walk(Layer.enter(T))
    state = Layer.state()
    if state in found:
        found.remove(state)
    found.append(state)
    return found


class _Checker:

    def __init__(self, T: FunctorExpr, strict: bool, layer_vars: bool) -> None:
        self.T = T
        self.strict = strict
        self.layer_vars = layer_vars
        self.var_layers: Dict[str, Layer] = {}

    def visit(self, layer: Layer, φ: Formula, under_modal: bool) -> None:
        if isinstance(φ, _Group):
            self.visit(layer, φ.arg, under_modal and not layer.is_state)
        elif isinstance(φ, Var):
            if not layer.is_state and not self.layer_vars:
                raise ShapeError(f'Variable {φ.name} cannot stand at the {layer}; variables denote sets of states',
                                 operator=φ.name, layer=str(layer))
            previous = self.var_layers.setdefault(φ.name, layer)
            if previous != layer:
                raise ShapeError(f'Variable {φ.name} used at the {previous} and at the {layer}',
                                 operator=φ.name, layer=str(layer))
        elif isinstance(φ, Modal):
            self.visit_modal(layer, φ, under_modal)
        else:
            for child in children(φ):
                self.visit(layer, child, under_modal)

    def visit_modal(self, layer: Layer, φ: Modal, under_modal: bool) -> None:
        if layer.is_state:
            if self.strict and under_modal:
                raise ShapeError(f'Operator {φ.symbol} reached the state layer; parenthesise it to start a new modal layer',
                                 operator=φ.symbol, layer=str(layer))
            top = Layer.enter(self.T)
            if top.is_state:
                raise ShapeError(f'{self.T} has no modal operators, found {φ.symbol}', operator=φ.symbol, layer=str(layer))
            layer = top
        expected = layer.symbols()
        if φ.symbol not in expected:
            if isinstance(φ, ConstAtom) and isinstance(layer.functor, Const):
                raise ShapeError(f'Unknown constant {φ.symbol} at the {layer}', operator=φ.symbol, layer=str(layer))
            raise ShapeError(f'Operator {φ.symbol} does not fit the {layer}; expected one of {", ".join(expected)}',
                             operator=φ.symbol, layer=str(layer))
        if not isinstance(φ, ConstAtom):
            self.visit(layer.child(φ.symbol), φ.arg, True)


def check_formula(T: FunctorExpr, φ: Formula, layer: Optional[Layer] = None, *,
                  layer_vars: bool = False, strict: bool = False) -> Dict[str, Layer]:
    """Raise ShapeError unless φ fits layer (default the state layer); return the layer of every variable."""
    checker = _Checker(T, strict, layer_vars)
    checker.visit(layer or Layer.state(), φ, False)
    return checker.var_layers


def typecheck_formula(T: FunctorExpr, φ: Formula) -> bool:
    try:
        check_formula(T, φ)
    except ShapeError:
        return False
    return True


def modal_depth(φ: Formula, T: Optional[FunctorExpr] = None) -> int:
    """Number of complete T-layers crossed on the deepest branch.

    Without T every operator counts as a layer of its own: exact for Pow
    and Nbhd, an upper bound for the other functors.
    """
    if T is None:
        def nesting(ψ: Formula) -> int:
            inner = max((nesting(child) for child in children(ψ)), default=0)
            return 1 + inner if isinstance(ψ, Modal) else inner
        return nesting(φ)

    def depth(layer: Layer, ψ: Formula) -> int:
        if isinstance(ψ, Modal):
            if layer.is_state:
                return 1 + depth(Layer.enter(T), ψ)
            if isinstance(ψ, ConstAtom):
                return 0
            return depth(layer.child(ψ.symbol), ψ.arg)
        return max((depth(layer, child) for child in children(ψ)), default=0)
    return depth(Layer.state(), φ)


def _has_state_modal(φ: Formula) -> bool:
    if isinstance(φ, Modal):
        return True
    if isinstance(φ, (Not, And, Or, Implies, _Group)):
        return any(_has_state_modal(child) for child in children(φ))
    return False


_BINARY = {Implies: ('->', 1), Or: ('|', 2), And: ('&', 3)}


def format_formula(φ: Formula, T: Optional[FunctorExpr] = None) -> str:
    """Concrete syntax for φ; parse_formula reads it back to φ.

    Without T every compound modal argument that contains an operator is
    parenthesised, which reads back the same over any functor.
    """
    def fmt(ψ: Formula, layer: Optional[Layer]) -> Tuple[str, int]:
        if isinstance(ψ, Top):
            return 'true', 5
        if isinstance(ψ, Bot):
            return 'false', 5
        if isinstance(ψ, Var):
            return ψ.name, 5
        if isinstance(ψ, Extent):
            return '{' + ', '.join(sorted(str(m) for m in ψ.members)) + '}', 5
        if isinstance(ψ, _Group):
            return '(' + fmt(ψ.arg, layer)[0] + ')', 5
        if isinstance(ψ, ConstAtom):
            return ψ.symbol, 5
        if isinstance(ψ, Not):
            text, prec = fmt(ψ.arg, layer)
            return '~' + (text if prec >= 4 else f'({text})'), 4
        if isinstance(ψ, Modal):
            child = None
            if T is not None and layer is not None:
                if layer.is_state:
                    layer = Layer.enter(T)
                if ψ.symbol in layer.symbols():
                    child = layer.child(ψ.symbol)
            text, prec = fmt(ψ.arg, child)
            reentry = (child is None or child.is_state) and _has_state_modal(ψ.arg)
            if prec < 4 or (reentry and prec < 5):
                text = f'({text})'
            return f'{ψ.symbol} {text}', 4
        symbol, prec = _BINARY[type(ψ)]
        left, left_prec = fmt(ψ.left, layer)
        right, right_prec = fmt(ψ.right, layer)
        if isinstance(ψ, Implies):
            left = f'({left})' if left_prec <= prec else left
            right = f'({right})' if right_prec < prec else right
        else:
            left = f'({left})' if left_prec < prec else left
            right = f'({right})' if right_prec <= prec else right
        return f'{left} {symbol} {right}', prec

    return fmt(φ, Layer.state() if T is not None else None)[0]


FORMULA_GRAMMAR = r'''
    ?formula: disj
            | disj "->" formula         -> implies
    ?disj: conj
         | disj "|" conj                -> or_
    ?conj: unary
         | conj "&" unary               -> and_
    ?unary: "~" unary                   -> not_
          | K1 unary                    -> modal
          | K2 unary                    -> modal
          | P1 unary                    -> modal
          | P2 unary                    -> modal
          | BOX unary                   -> modal
          | atom
    ?atom: "true"                       -> top
         | "false"                      -> bot
         | CONST                        -> const
         | NAME                         -> var
         | "(" formula ")"              -> group

    sequent: formula "<=" formula       -> full_sequent
           | formula                    -> bare_sequent
    equation: formula "=" formula

    K1: "[k1]"
    K2: "[k2]"
    P1: "[p1]"
    P2: "[p2]"
    BOX: "box"
    CONST: /'[A-Za-z_][A-Za-z_0-9]*/
    NAME: /[A-Za-z_][A-Za-z_0-9]*/
    %import common.WS
    %ignore WS
'''


class _FormulaBuilder(Transformer):

    def implies(self, children: List[Formula]) -> Formula:
        return Implies(*children)

    def or_(self, children: List[Formula]) -> Formula:
        return Or(*children)

    def and_(self, children: List[Formula]) -> Formula:
        return And(*children)

    def not_(self, children: List[Formula]) -> Formula:
        return Not(children[0])

    def modal(self, children: List[Any]) -> Formula:
        return UNARY_MODALS[str(children[0])](children[1])

    def top(self, _: List[Any]) -> Formula:
        return TRUE

    def bot(self, _: List[Any]) -> Formula:
        return FALSE

    def const(self, children: List[Token]) -> Formula:
        return ConstAtom(str(children[0])[1:])

    def var(self, children: List[Token]) -> Formula:
        return Var(str(children[0]))

    def group(self, children: List[Formula]) -> Formula:
        return _Group(children[0])

    def full_sequent(self, children: List[Formula]) -> 'Sequent':
        return Sequent(children[0], children[1])

    def bare_sequent(self, children: List[Formula]) -> 'Sequent':
        return Sequent(TRUE, children[0])

    def equation(self, children: List[Formula]) -> 'Equation':
        return Equation(children[0], children[1])


_formula_parser = Lark(FORMULA_GRAMMAR, start=['formula', 'sequent', 'equation'], parser='lalr')


def _parse(text: str, start: str) -> Any:
    try:
        return _FormulaBuilder().transform(_formula_parser.parse(text, start=start))
    except UnexpectedInput as e:
        raise ParseError(f'Invalid {start} {text!r}', e.line, e.column) from None


def parse_formula_text(text: str) -> Formula:
    """Parse without shape checking (grouping parentheses dropped)."""
    return strip_groups(_parse(text, 'formula'))


@dataclass(frozen=True)
class Operator:
    """An operator occurrence: the operators leading to its layer, then its own symbol."""
    prefix: Tuple[str, ...]
    symbol: str

    @property
    def path(self) -> Tuple[str, ...]:
        return self.prefix + (self.symbol,)

    @property
    def arity(self) -> int:
        return 0 if self.symbol.startswith("'") else 1

    def apply(self, arg: Formula = TRUE) -> Formula:
        return wrap(self.prefix, modal_node(self.symbol, arg))

    def __str__(self) -> str:
        return ' '.join(self.path)


def wrap(prefix: Sequence[str], φ: Formula) -> Formula:
    for symbol in reversed(prefix):
        φ = modal_node(symbol, φ)
    return φ


@dataclass(frozen=True)
class Signature:
    functor: FunctorExpr
    operators: Tuple[Operator, ...]

    def constants(self) -> List[Operator]:
        return [op for op in self.operators if op.arity == 0]

    def find(self, text: str) -> Operator:
        path = tuple(text.split())
        for op in self.operators:
            if op.path == path:
                return op
        raise ShapeError(f'{text!r} is not an operator of {self.functor}', operator=text)

    def describe(self) -> List[str]:
        lines = []
        for op in self.operators:
            layer = layer_at(self.functor, op.prefix)
            kind = 'constant' if op.arity == 0 else f'unary, argument at the {layer.child(op.symbol)}'
            lines.append(f'{op}\t{kind}')
        return lines


def derive_signature(T: FunctorExpr) -> Signature:
    operators: List[Operator] = []

    def walk(layer: Layer, prefix: Tuple[str, ...]) -> None:
        if layer.is_state:
            return
        for symbol in layer.symbols():
            operators.append(Operator(prefix, symbol))
            if not symbol.startswith("'"):
                walk(layer.child(symbol), prefix + (symbol,))
    walk(Layer.enter(T), ())
    return Signature(T, tuple(operators))


def complete_operators(sig: Signature) -> List[Operator]:
    """Operator paths running down to a constant or to the state layer: the predicate liftings of T."""
    T = sig.functor
    return [op for op in sig.operators if op.arity == 0 or layer_at(T, op.prefix).child(op.symbol).is_state]


def parse_formula(sig: Union[Signature, FunctorExpr], text: str) -> Formula:
    T = sig.functor if isinstance(sig, Signature) else sig
    φ = _parse(text, 'formula')
    check_formula(T, φ, strict=True)
    return strip_groups(φ)


@dataclass(frozen=True)
class Sequent:
    """lhs <= rhs, read globally: every state satisfying lhs satisfies rhs."""
    lhs: Formula
    rhs: Formula

    def as_formula(self) -> Formula:
        return Implies(self.lhs, self.rhs)

    def format(self, T: Optional[FunctorExpr] = None) -> str:
        return f'{format_formula(self.lhs, T)} <= {format_formula(self.rhs, T)}'

    def __str__(self) -> str:
        return self.format()


@dataclass(frozen=True)
class Equation:
    lhs: Formula
    rhs: Formula

    def flipped(self) -> 'Equation':
        return Equation(self.rhs, self.lhs)

    def substitute(self, substitution: Mapping[str, Formula]) -> 'Equation':
        return Equation(substitute(self.lhs, substitution), substitute(self.rhs, substitution))

    def format(self, T: Optional[FunctorExpr] = None) -> str:
        return f'{format_formula(self.lhs, T)} = {format_formula(self.rhs, T)}'

    def __str__(self) -> str:
        return self.format()


def parse_sequent(sig: Union[Signature, FunctorExpr], text: str) -> Sequent:
    T = sig.functor if isinstance(sig, Signature) else sig
    sequent = _parse(text, 'sequent')
    check_formula(T, sequent.lhs, strict=True)
    check_formula(T, sequent.rhs, strict=True)
    return Sequent(strip_groups(sequent.lhs), strip_groups(sequent.rhs))


def parse_equation(sig: Union[Signature, FunctorExpr], text: str) -> Equation:
    T = sig.functor if isinstance(sig, Signature) else sig
    equation = _parse(text, 'equation')
    check_formula(T, equation.lhs, strict=True)
    check_formula(T, equation.rhs, strict=True)
    return Equation(strip_groups(equation.lhs), strip_groups(equation.rhs))


@dataclass(frozen=True)
class RankOneEquation:
    """An axiom living at the layer its operator occurrence is reached by prefix."""
    name: str
    lhs: Formula
    rhs: Formula
    prefix: Tuple[str, ...] = ()
    variables: Tuple[str, ...] = ()

    def equation(self) -> Equation:
        return Equation(self.lhs, self.rhs)

    def wrapped(self) -> Equation:
        return Equation(wrap(self.prefix, self.lhs), wrap(self.prefix, self.rhs))

    def format(self, T: Optional[FunctorExpr] = None) -> str:
        return f'{self.name}: {self.wrapped().format(T)}'

    def __str__(self) -> str:
        return self.format()


def _axiom(name: str, lhs: Formula, rhs: Formula, prefix: Tuple[str, ...]) -> RankOneEquation:
    variables = tuple(dict.fromkeys(variables_of(lhs) + variables_of(rhs)))
    qualified = '.'.join([symbol.strip('[]') for symbol in prefix] + [name])
    return RankOneEquation(qualified, lhs, rhs, prefix, variables)


def _constructor_axioms(layer: Layer, prefix: Tuple[str, ...]) -> List[RankOneEquation]:
    F = layer.functor
    a, b = Var('a'), Var('b')
    axioms = []
    if isinstance(F, Const):
        atoms = [ConstAtom(name) for name in F.names]
        for (i, c1), (j, c2) in itertools.combinations(enumerate(atoms), 2):
            axioms.append(_axiom(f'const-disjoint-{c1.name}-{c2.name}', And(c1, c2), FALSE, prefix))
        axioms.append(_axiom('const-cover', disj(atoms), TRUE, prefix))
    elif isinstance(F, Sum):
        for k, node in (('k1', InLF), ('k2', InRF)):
            axioms.append(_axiom(f'{k}-bot', node(FALSE), FALSE, prefix))
            axioms.append(_axiom(f'{k}-join', node(Or(a, b)), Or(node(a), node(b)), prefix))
            axioms.append(_axiom(f'{k}-meet', node(And(a, b)), And(node(a), node(b)), prefix))
        axioms.append(_axiom('sum-disjoint', And(InLF(a), InRF(b)), FALSE, prefix))
        axioms.append(_axiom('sum-cover', Or(InLF(TRUE), InRF(TRUE)), TRUE, prefix))
        axioms.append(_axiom('k1-neg', Not(InLF(a)), Or(InRF(TRUE), InLF(Not(a))), prefix))
        axioms.append(_axiom('k2-neg', Not(InRF(a)), Or(InLF(TRUE), InRF(Not(a))), prefix))
    elif isinstance(F, Prod):
        for p, node in (('p1', Proj1), ('p2', Proj2)):
            axioms.append(_axiom(f'{p}-top', node(TRUE), TRUE, prefix))
            axioms.append(_axiom(f'{p}-meet', node(And(a, b)), And(node(a), node(b)), prefix))
            axioms.append(_axiom(f'{p}-neg', node(Not(a)), Not(node(a)), prefix))
    elif isinstance(F, Pow):
        axioms.append(_axiom('box-top', Box(TRUE), TRUE, prefix))
        axioms.append(_axiom('box-meet', Box(And(a, b)), And(Box(a), Box(b)), prefix))
    return axioms


def layer_axioms(layer: Layer) -> List[RankOneEquation]:
    """The axiom scheme of one constructor, unprefixed."""
    if layer.is_state:
        return []
    return _constructor_axioms(layer, ())


def derive_axioms(T: FunctorExpr) -> List[RankOneEquation]:
    axioms: List[RankOneEquation] = []

    def walk(layer: Layer, prefix: Tuple[str, ...]) -> None:
        if layer.is_state:
            return
        axioms.extend(_constructor_axioms(layer, prefix))
        for symbol in layer.symbols():
            if not symbol.startswith("'"):
                walk(layer.child(symbol), prefix + (symbol,))
    walk(Layer.enter(T), ())
    return axioms


def ba_axioms() -> List[RankOneEquation]:
    """Equational axioms of Boolean algebra; they hold at every layer."""
    x, y, z = Var('x'), Var('y'), Var('z')
    return [
        _axiom('comm-and', And(x, y), And(y, x), ()),
        _axiom('comm-or', Or(x, y), Or(y, x), ()),
        _axiom('assoc-and', And(x, And(y, z)), And(And(x, y), z), ()),
        _axiom('assoc-or', Or(x, Or(y, z)), Or(Or(x, y), z), ()),
        _axiom('absorb-and', And(x, Or(x, y)), x, ()),
        _axiom('absorb-or', Or(x, And(x, y)), x, ()),
        _axiom('dist-and', And(x, Or(y, z)), Or(And(x, y), And(x, z)), ()),
        _axiom('dist-or', Or(x, And(y, z)), And(Or(x, y), Or(x, z)), ()),
        _axiom('compl-and', And(x, Not(x)), FALSE, ()),
        _axiom('compl-or', Or(x, Not(x)), TRUE, ()),
        _axiom('unit-and', And(x, TRUE), x, ()),
        _axiom('unit-or', Or(x, FALSE), x, ()),
        _axiom('imp-def', Implies(x, y), Or(Not(x), y), ()),
    ]


@dataclass(frozen=True)
class CanonicalLifting:
    """An n-ary predicate lifting, as the subset of T(2^n) it accepts (indices into apply_obj)."""
    functor: FunctorExpr
    arity: int
    extent: FrozenSet[int]

    def __post_init__(self) -> None:
        size = apply_obj(self.functor, FinSet(1 << self.arity)).size
        for i in self.extent:
            if not 0 <= i < size:
                raise ValueError(f'Extent index {i} outside T(2^{self.arity}) of size {size}')

    def values(self) -> List[Any]:
        tset = apply_obj(self.functor, FinSet(1 << self.arity))
        return [tset.element(i) for i in sorted(self.extent)]

    def describe(self) -> str:
        return '{' + ', '.join(format_value(value) for value in self.values()) + '}'


def lifting_exponent(T: FunctorExpr, n: int) -> int:
    """log2 of the number of n-ary liftings, i.e. |T(2^n)|; a lower bound once saturated."""
    return cardinality(T, exp2(n))


def count_liftings(T: FunctorExpr, n: int) -> int:
    exponent = check_cardinality(lifting_exponent(T, n), f'log2 of the number of {n}-ary liftings of {T}')
    return 1 << exponent



def iter_liftings(T: FunctorExpr, n: int) -> Iterator[CanonicalLifting]:
    tset = apply_obj(T, FinSet(1 << n))
    for subset in all_subsets(range(tset.size)):
        yield CanonicalLifting(T, n, frozenset(subset))


def canonical_liftings(T: FunctorExpr, n: int) -> List[CanonicalLifting]:
    check_cardinality(count_liftings(T, n), f'{n}-ary liftings of {T}')
    return list(iter_liftings(T, n))


def lifting_formula(T: FunctorExpr, op: Operator, arity: Optional[int] = None) -> Tuple[Formula, int]:
    """op applied to state variables a0..; arguments it cannot take are filled with true."""
    argument = layer_at(T, op.prefix).child(op.symbol) if op.arity else None
    natural = 1 if argument is not None and argument.is_state else 0
    arity = natural if arity is None else arity
    if arity > natural:
        raise ShapeError(f'Operator {op} takes {natural} state argument(s), not {arity}', operator=str(op))
    return op.apply(Var('a0') if arity else TRUE), arity


def operator_as_lifting(T: FunctorExpr, op: Operator, arity: Optional[int] = None) -> CanonicalLifting:
    from coalog.semantics import OneStep

    φ, arity = lifting_formula(T, op, arity)
    base = 1 << arity
    tset = apply_obj(T, FinSet(base))
    step = OneStep(base, {'a0': frozenset(w for w in range(base) if w & 1)})
    extent = step.denote(Layer.enter(T), φ)
    return CanonicalLifting(T, arity, frozenset(tset.index(value) for value in extent))


@dataclass(frozen=True)
class Counterexample:
    size: int
    assignment: Mapping[str, FrozenSet[Any]]
    witness: Any
    lhs_holds: bool

    def describe(self) -> str:
        def show(members: Iterable[Any]) -> str:
            return '{' + ', '.join(format_value(m) for m in members) + '}'
        assignment = ', '.join(f'{name} = {show(members)}' for name, members in self.assignment.items())
        side = 'left' if self.lhs_holds else 'right'
        return f'|X| = {self.size}, {assignment}: {format_value(self.witness)} satisfies only the {side} side'


def check_soundness(T: FunctorExpr, eq: Union[RankOneEquation, Equation], max_size: int) -> Optional[Counterexample]:
    """None if both sides agree on every base set up to max_size under every assignment."""
    from coalog.semantics import OneStep

    prefix = eq.prefix if isinstance(eq, RankOneEquation) else ()
    layer = layer_at(T, prefix)
    var_layers = check_formula(T, eq.lhs, layer, layer_vars=True)
    for name, var_layer in check_formula(T, eq.rhs, layer, layer_vars=True).items():
        if var_layers.setdefault(name, var_layer) != var_layer:
            raise ShapeError(f'Variable {name} used at two layers', operator=name)
    names = list(var_layers)
    for n in range(max_size + 1):
        choices = []
        for name in names:
            elements = var_layers[name].elements(n)
            choices.append([frozenset(subset) for subset in all_subsets(elements)])
        total = 1
        for options in choices:
            total *= len(options)
        check_cardinality(total, f'assignments for {eq} at size {n}')
        domain = layer.elements(n)
        for values in itertools.product(*choices):
            step = OneStep(n, dict(zip(names, values)))
            left = step.denote(layer, eq.lhs)
            right = step.denote(layer, eq.rhs)
            if left != right:
                witness = next(v for v in domain if (v in left) != (v in right))
                log.debug('%s fails at size %d', eq, n)
                return Counterexample(n, dict(zip(names, values)), witness, witness in left)
    return None
