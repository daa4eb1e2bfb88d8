import random

import pytest

from coalog.config import resource_limit
from coalog.errors import ParseError, ResourceLimit, ShapeError
from coalog.gkpf import Base, Id, Nbhd, Pow, SetOf, parse_functor, random_coalgebra, saturated
from coalog.logic import (
    FALSE, TRUE, And, Box, ConstAtom, Equation, Implies, Not, Or, Proj1, Sequent, Var, ba_axioms, canonical_liftings,
    check_soundness, complete_operators, count_liftings, derive_axioms, derive_signature, format_formula,
    lifting_exponent, lifting_formula, modal_depth, operator_as_lifting, parse_equation, parse_formula, parse_sequent,
    typecheck_formula,
)
from coalog.semantics import model_check, model_check_lifting
from coalog.suites import size_cap


p, q, a, b = Var('p'), Var('q'), Var('a'), Var('b')


@pytest.mark.parametrize('functor, operators, axioms', [
    ('Pow', 1, 2),
    ('Nbhd', 1, 0),
    ('Const{a}', 1, 1),
    ('Const{a,b}', 2, 2),
    ('Id+Id', 2, 10),
    ('Const{a}*Id', 3, 7),
    ('Pow.Pow', 2, 4),
    ('Pow.(Const{a,b}*Id)', 5, 10),
    ('Id', 0, 0),
])
def test_signature_and_axiom_counts(functor, operators, axioms):
    T = parse_functor(functor)
    assert len(derive_signature(T).operators) == operators
    assert len(derive_axioms(T)) == axioms


def test_pow_axioms():
    axioms = derive_axioms(Pow())
    assert [axiom.name for axiom in axioms] == ['box-top', 'box-meet']
    assert axioms[1].equation() == Equation(Box(And(a, b)), And(Box(a), Box(b)))
    assert axioms[1].format(Pow()) == 'box-meet: box (a & b) = box a & box b'


def test_const_cover_axiom():
    (axiom,) = derive_axioms(parse_functor('Const{a}'))
    assert axiom.name == 'const-cover'
    assert axiom.equation() == Equation(ConstAtom('a'), TRUE)


def test_nested_axioms_are_prefixed():
    T = parse_functor('Pow.Pow')
    assert [axiom.name for axiom in derive_axioms(T)] == ['box-top', 'box-meet', 'box.box-top', 'box.box-meet']
    assert derive_axioms(T)[2].wrapped() == Equation(Box(Box(TRUE)), Box(TRUE))
    assert [str(op) for op in complete_operators(derive_signature(T))] == ['box box']


def test_complete_operators_of_product_composite():
    T = parse_functor('Pow.(Const{a,b}*Id)')
    complete = [str(op) for op in complete_operators(derive_signature(T))]
    assert complete == ["box [p1] 'a", "box [p1] 'b", 'box [p2]']


def test_parse_formula_layers():
    assert parse_formula(Pow(), 'box (box p)') == Box(Box(p))
    with pytest.raises(ShapeError):
        parse_formula(Pow(), 'box box p')
    T = parse_functor('Pow.Pow')
    assert parse_formula(T, 'box box p') == Box(Box(p))
    with pytest.raises(ShapeError):
        parse_formula(T, 'box p')


@pytest.mark.parametrize('text', ['[k1] p', "'a", 'box [p1] p'])
def test_parse_formula_rejects_foreign_operators(text):
    with pytest.raises(ShapeError):
        parse_formula(Pow(), text)


def test_parse_formula_rejects_unknown_constant():
    T = parse_functor('Const{a,b}')
    assert parse_formula(T, "'a | 'b") == Or(ConstAtom('a'), ConstAtom('b'))
    with pytest.raises(ShapeError):
        parse_formula(T, "'c")


@pytest.mark.parametrize('text', ['p &', 'box', '(p', 'p <= q'])
def test_parse_formula_syntax_errors(text):
    with pytest.raises(ParseError):
        parse_formula(Pow(), text)


def test_connective_precedence():
    assert parse_formula(Pow(), 'p | q & ~p -> q') == Implies(Or(p, And(q, Not(p))), q)
    assert parse_formula(Pow(), 'p -> q -> p') == Implies(p, Implies(q, p))


@pytest.mark.parametrize('functor, text', [
    ('Pow', '~(p & q) -> box (p | ~q)'),
    ('Pow', 'box (box p) & box false'),
    ('Pow', '(p -> q) -> p'),
    ('Pow.Pow', 'box box (box box p)'),
    ('Pow.(Const{a,b}*Id)', "box ([p1] 'a & [p2] (box [p2] q))"),
    ('Id+Id', '[k1] p | ~[k2] (q -> p)'),
])
def test_format_formula_reads_back(functor, text):
    T = parse_functor(functor)
    φ = parse_formula(T, text)
    assert parse_formula(T, format_formula(φ, T)) == φ


def test_format_formula_parenthesises_new_layers():
    assert format_formula(Box(Box(p)), Pow()) == 'box (box p)'
    assert format_formula(Box(Box(p)), parse_functor('Pow.Pow')) == 'box box p'


def test_modal_depth():
    assert modal_depth(Box(Box(p)), Pow()) == 2
    assert modal_depth(Box(Box(p)), parse_functor('Pow.Pow')) == 1
    assert modal_depth(And(p, Not(q)), Pow()) == 0


def test_modal_depth_without_functor():
    assert modal_depth(Box(Box(p))) == 2
    assert modal_depth(And(p, Not(Box(q)))) == 1
    assert modal_depth(TRUE) == 0
    T = parse_functor('Const{a}*Id')
    φ = parse_formula(T, "[p1] 'a & [p2] p")
    assert modal_depth(φ, T) == 1
    assert modal_depth(φ) == 2


def test_typecheck_formula():
    assert typecheck_formula(Pow(), Box(p))
    assert not typecheck_formula(Pow(), Proj1(p))


def test_parse_sequent_and_equation():
    assert parse_sequent(Pow(), 'box p <= p') == Sequent(Box(p), p)
    assert parse_sequent(Pow(), 'box true') == Sequent(TRUE, Box(TRUE))
    assert parse_equation(Pow(), 'box (p & q) = box p & box q') == Equation(Box(And(p, q)), And(Box(p), Box(q)))


def test_canonical_liftings_of_pow():
    liftings = canonical_liftings(Pow(), 1)
    assert len(liftings) == 16
    box = operator_as_lifting(Pow(), derive_signature(Pow()).operators[0])
    assert box.extent == frozenset({0, 3})
    assert box.values() == [SetOf(()), SetOf((Base(1),))]
    assert box in liftings


def test_count_liftings():
    assert count_liftings(Pow(), 1) == 16
    assert count_liftings(Id(), 0) == 2
    assert count_liftings(Nbhd(), 2) == 2 ** 65536


def test_lifting_exponent():
    assert lifting_exponent(Pow(), 1) == 4
    assert lifting_exponent(Pow(), 6) == 2 ** 64
    assert lifting_exponent(Nbhd(), 3) == 2 ** 256
    assert saturated(lifting_exponent(Nbhd(), 5))
    assert not saturated(lifting_exponent(Nbhd(), 3))


@pytest.mark.parametrize('functor, arity', [('Pow', 6), ('Nbhd', 3), ('Pow.Pow', 40)])
def test_count_liftings_stops_before_building_the_count(functor, arity):
    with pytest.raises(ResourceLimit) as info:
        count_liftings(parse_functor(functor), arity)
    assert info.value.cardinality == lifting_exponent(parse_functor(functor), arity)
    with pytest.raises(ResourceLimit):
        canonical_liftings(parse_functor(functor), arity)



def test_canonical_liftings_respect_limit():
    with pytest.raises(ResourceLimit):
        canonical_liftings(Nbhd(), 2)
    with resource_limit(8):
        with pytest.raises(ResourceLimit):
            canonical_liftings(Pow(), 1)


def test_lifting_formula_rejects_extra_arity():
    op = derive_signature(parse_functor('Const{a,b}')).operators[0]
    with pytest.raises(ShapeError):
        lifting_formula(parse_functor('Const{a,b}'), op, 1)


def test_operator_liftings_agree_with_model_checking(covering_functor, small_size):
    T = covering_functor
    rng = random.Random(str(T))
    for op in derive_signature(T).operators:
        φ, arity = lifting_formula(T, op)
        lifting = operator_as_lifting(T, op)
        for _ in range(5):
            c = random_coalgebra(T, rng.randint(0, small_size), rng)
            h = {'a0': frozenset(x for x in range(c.size) if rng.random() < 0.5)}
            args = [Var('a0')] * arity
            assert model_check_lifting(c, h, lifting, args) == model_check(c, h, φ)


def test_derived_axioms_are_sound(covering_functor):
    T = covering_functor
    for axiom in derive_axioms(T):
        assert check_soundness(T, axiom, size_cap(T, 2)) is None


@pytest.mark.slow
def test_derived_axioms_are_sound_at_full_size(covering_functor):
    T = covering_functor
    for axiom in derive_axioms(T):
        assert check_soundness(T, axiom, size_cap(T, 3)) is None


def test_unsound_equation_has_counterexample():
    counterexample = check_soundness(Pow(), Equation(Box(Or(a, b)), Or(Box(a), Box(b))), 3)
    assert counterexample is not None
    assert counterexample.size == 2
    assert counterexample.witness == SetOf((Base(0), Base(1)))
    assert counterexample.lhs_holds
    assert 'left side' in counterexample.describe()


def test_boolean_axioms_hold_at_modal_layer():
    for axiom in ba_axioms():
        assert check_soundness(Pow(), axiom.equation(), 2) is None


def test_false_is_not_true():
    assert check_soundness(Pow(), Equation(TRUE, FALSE), 0) is not None
