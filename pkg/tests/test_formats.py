import pytest

from coalog.duality import jt_coalgebra
from coalog.errors import ParseError, ShapeError
from coalog.finstone import FinSet
from coalog.formats import (
    format_algebra, format_model, format_state_set, format_valuation, parse_step, read_algebra, read_derivation,
    read_model, read_valuation,
)
from coalog.gkpf import Base, InL, InR, Pow, SetOf, behavioural_quotient, parse_functor
from coalog.lindenbaum import AxiomStep, CongStep, ReflStep, SubstStep, SymStep, TransStep
from coalog.logic import TRUE, And, Box, Equation, Not, Var


p, q = Var('p'), Var('q')

LOOPS = '''\
functor: Pow
states: x y
x -> {x}
y -> {y}
'''

ALGEBRA = '''\
functor: Pow
atoms: u v
dual: u -> {v}
dual: v -> {}
'''


def test_read_model(loops):
    c = read_model(LOOPS)
    assert c == loops
    assert c.carrier.labels == ('x', 'y')


def test_read_model_skips_comments_and_blank_lines():
    text = '# two states\nfunctor: Id+Id\n\nstates: a b   # names\na -> inl(b)\nb -> inr(a)\n'
    c = read_model(text)
    assert c.functor == parse_functor('Id+Id')
    assert c.structure == (InL(Base(1)), InR(Base(0)))


def test_format_model(loops):
    assert format_model(loops) == LOOPS
    assert read_model(format_model(loops)) == loops


def test_format_model_renames_quotient_states(pow_coalgebra):
    _, quotient, _ = behavioural_quotient(pow_coalgebra([1], [], []))
    text = format_model(quotient)
    assert text == 'functor: Pow\n# s0 = {0}\n# s1 = {1,2}\nstates: s0 s1\ns0 -> {s1}\ns1 -> {}\n'
    assert read_model(text).structure == quotient.structure


@pytest.mark.parametrize('text, error', [
    ('states: x\nx -> {}\n', ParseError),
    ('functor: Pow\nx -> {}\n', ParseError),
    ('functor: Pow\nstates: x x\nx -> {}\n', ParseError),
    ('functor: Pow\nstates: x\ny -> {}\n', ParseError),
    ('functor: Pow\nstates: x y\nx -> {}\n', ParseError),
    ('functor: Pow\nstates: x\nx -> {}\nx -> {x}\n', ParseError),
    ('functor: Pow\nstates: x\nx -> {z}\n', ShapeError),
    ('functor: Pow\nstates: x\nx -> inl(x)\n', ShapeError),
    ('functor: Pow +\nstates: x\nx -> {}\n', ParseError),
    ('functor: Pow\nstates: x\nx {x}\n', ParseError),
])
def test_read_model_errors(text, error):
    with pytest.raises(error):
        read_model(text)


def test_read_model_errors_name_the_line():
    with pytest.raises(ParseError, match='line 4'):
        read_model('functor: Pow\nstates: x y\nx -> {}\ny -> {x\n')
    with pytest.raises(ShapeError, match='line 3'):
        read_model('functor: Pow\nstates: x\nx -> {z}\n')


def test_read_valuation():
    carrier = FinSet.named(['x', 'y'])
    assert read_valuation('p = {x}\nq = {}\n', carrier) == {'p': frozenset({0}), 'q': frozenset()}
    assert read_valuation('p = {y, x}', carrier) == {'p': frozenset({0, 1})}
    with pytest.raises(ParseError):
        read_valuation('p = {z}', carrier)
    with pytest.raises(ParseError):
        read_valuation('p = x', carrier)
    with pytest.raises(ParseError):
        read_valuation('p = {x}\np = {y}', carrier)


def test_format_valuation():
    carrier = FinSet.named(['x', 'y'])
    assert format_valuation(carrier, {'q': frozenset(), 'p': frozenset({1, 0})}) == 'p = {x, y}\nq = {}\n'
    assert format_state_set(carrier, [1]) == '{y}'


def test_read_algebra():
    alg = read_algebra(ALGEBRA)
    assert alg.functor == Pow()
    assert alg.carrier.atoms.labels == ('u', 'v')
    assert format_algebra(alg) == ALGEBRA
    assert jt_coalgebra(alg).structure == (SetOf((Base(1),)), SetOf(()))


def test_read_algebra_errors():
    with pytest.raises(ParseError):
        read_algebra('functor: Pow\natoms: u\nu -> {}\n')
    with pytest.raises(ParseError):
        read_algebra('functor: Pow\natoms: u v\ndual: u -> {}\n')
    with pytest.raises(ShapeError):
        read_algebra('functor: Pow\natoms: u\ndual: u -> {w}\n')


def test_parse_axiom_steps():
    assert parse_step(1, '1: axiom box-meet with a := p, b := q') == AxiomStep(
        1, 'box-meet', (('a', p), ('b', q)))
    assert parse_step(1, '1: axiom box-top ; box true = true') == AxiomStep(
        1, 'box-top', (), Equation(Box(TRUE), TRUE))


def test_parse_other_steps():
    assert parse_step(2, '2: sym 1') == SymStep(2, 1)
    assert parse_step(3, '3: trans 1 2') == TransStep(3, 1, 2)
    assert parse_step(4, '4: refl box (p & ~q)') == ReflStep(4, Box(And(p, Not(q))))
    assert parse_step(5, '5: cong box (1)') == CongStep(5, 'box', (1,))
    assert parse_step(6, '6: cong & (1, 2)') == CongStep(6, '&', (1, 2))
    assert parse_step(7, '7: subst 1 with a := ~p') == SubstStep(7, 1, (('a', Not(p)),))


@pytest.mark.parametrize('line', [
    '1: prove p',
    'axiom box-top',
    '1: sym',
    '1: trans 1',
    '1: cong diamond (1)',
    '1: cong box 1',
    '1: subst 1',
    '1: axiom box-meet with a = p',
    '1: axiom box-top ; box true',
    '1: refl (p',
])
def test_parse_step_errors(line):
    with pytest.raises(ParseError):
        parse_step(1, line)


def test_read_derivation():
    steps = read_derivation('# K\n1: axiom box-top\n\n2: sym 1   # flip\n')
    assert steps == [AxiomStep(1, 'box-top'), SymStep(2, 1)]


def test_parse_errors_point_at_the_column():
    with pytest.raises(ParseError) as step_error:
        parse_step(3, '1: cong diamond (1)')
    assert step_error.value.column == 9
    assert str(step_error.value).startswith('line 3:')
    with pytest.raises(ParseError) as valuation_error:
        read_valuation('p = x', FinSet.named(['x']))
    assert valuation_error.value.column == 5
