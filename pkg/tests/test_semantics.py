import random

import pytest

from coalog.errors import ShapeError
from coalog.finstone import FinBA, FinFn, FinSet
from coalog.gkpf import Const, Id, Nbhd, Pow, behavioural_partition, behavioural_quotient, parse_functor, random_coalgebra
from coalog.logic import (
    FALSE, TRUE, And, Box, CanonicalLifting, ConstAtom, Extent, InLF, Not, Proj1, Proj2, Var, derive_signature,
    operator_as_lifting,
)
from coalog.semantics import (
    check_delta_iso, logical_partition, model_check, model_check_lifting, one_step, presented_algebra,
    respects_morphism, validate_valuation,
)
from coalog.suites import sample_formulas, size_cap


p, a = Var('p'), Var('a')


def test_one_step_pow_box():
    assert one_step(Pow(), FinSet(2), Box(a), {'a': frozenset({0})}) == frozenset({0, 1})
    assert one_step(Pow(), FinSet(2), Box(Extent(frozenset({0})))) == frozenset({0, 1})


def test_one_step_constant():
    assert one_step(parse_functor('Const{a,b}'), FinSet(3), ConstAtom('a')) == frozenset({0})


def test_one_step_nbhd_box():
    assert len(one_step(Nbhd(), FinSet(1), Box(a), {'a': frozenset()})) == 2


def test_one_step_sum_and_product():
    assert one_step(parse_functor('Id+Id'), FinSet(2), InLF(a), {'a': frozenset({0})}) == frozenset({0})
    T = parse_functor('Const{a}*Id')
    assert one_step(T, FinSet(2), Proj2(Var('x')), {'x': frozenset({1})}) == frozenset({1})
    assert one_step(T, FinSet(2), Proj1(ConstAtom('a'))) == frozenset({0, 1})


def test_one_step_boolean_connectives():
    X = FinSet(2)
    everything = frozenset(range(4))
    assert one_step(Pow(), X, Not(Box(FALSE))) == everything - {0}
    assert one_step(Pow(), X, And(Box(a), Not(Box(FALSE))), {'a': frozenset({0})}) == frozenset({1})


def test_one_step_composite_resolves_inner_layer_first():
    T = parse_functor('Pow.Pow')
    # box box a holds of a family of sets when every member is a subset of a
    result = one_step(T, FinSet(1), Box(Box(a)), {'a': frozenset()})
    assert len(result) == 2


def test_model_check_two_state(two_state):
    h = {'p': frozenset({0})}
    assert model_check(two_state, h, Box(p)) == frozenset({1})
    assert model_check(two_state, h, Box(TRUE)) == frozenset({0, 1})
    assert model_check(two_state, h, And(p, Not(p))) == frozenset()
    assert model_check(two_state, h, Box(Box(FALSE))) == frozenset({1})


def test_model_check_errors(two_state):
    with pytest.raises(ValueError):
        model_check(two_state, {}, Box(p))
    with pytest.raises(ShapeError):
        model_check(two_state, {'p': frozenset()}, Proj1(p))
    with pytest.raises(ValueError):
        validate_valuation(two_state, {'p': frozenset({2})})


def test_model_check_lifting_extremes(two_state):
    tset_size = 4
    full = CanonicalLifting(Pow(), 1, frozenset(range(tset_size)))
    empty = CanonicalLifting(Pow(), 1, frozenset())
    h = {'p': frozenset({0})}
    assert model_check_lifting(two_state, h, full, [p]) == frozenset({0, 1})
    assert model_check_lifting(two_state, h, empty, [p]) == frozenset()
    with pytest.raises(ShapeError):
        model_check_lifting(two_state, h, full, [])


def test_box_lifting_agrees_with_model_check():
    box = operator_as_lifting(Pow(), derive_signature(Pow()).operators[0])
    rng = random.Random(7)
    for _ in range(30):
        c = random_coalgebra(Pow(), rng.randint(1, 3), rng)
        h = {'p': frozenset(x for x in range(c.size) if rng.random() < 0.5)}
        assert model_check_lifting(c, h, box, [p]) == model_check(c, h, Box(p))


@pytest.mark.parametrize('functor, size, atoms', [
    ('Pow', 2, 4),
    ('Id', 3, 3),
    ('Const{a,b}', 3, 2),
    ('Nbhd', 1, 4),
])
def test_presented_algebra_sizes(functor, size, atoms):
    presented = presented_algebra(parse_functor(functor), FinBA(FinSet(size)))
    assert presented.algebra.atoms.size == atoms
    assert presented.evaluation.is_bijective()


def test_delta_iso_on_covering_functors(covering_functor):
    for n in range(size_cap(covering_functor, 2) + 1):
        report = check_delta_iso(covering_functor, FinSet(n))
        assert report.ok, report.reason
        assert report.presented_atoms == report.tx_size


@pytest.mark.slow
def test_delta_iso_at_full_size(covering_functor):
    for n in range(size_cap(covering_functor, 3) + 1):
        assert check_delta_iso(covering_functor, FinSet(n)).ok


def test_logical_partition_examples(loops, pow_coalgebra):
    assert logical_partition(loops).count == 1
    dead_end = pow_coalgebra([0], [], names=['x', 'y'])
    assert logical_partition(dead_end).as_sets() == [frozenset({0}), frozenset({1})]
    assert logical_partition(loops, {'p': frozenset({0})}).count == 2


def test_logical_partition_blocks_are_formula_extents(pow_coalgebra):
    c = pow_coalgebra([1], [2], [])
    assert logical_partition(c).as_sets() == [frozenset({0}), frozenset({1}), frozenset({2})]
    assert model_check(c, {}, Box(FALSE)) == frozenset({2})
    assert model_check(c, {}, Box(Box(FALSE))) == frozenset({1, 2})


def test_logical_partition_comes_from_evaluating_formulas(monkeypatch, pow_coalgebra):
    dead_end = pow_coalgebra([0], [], names=['x', 'y'])
    monkeypatch.setattr('coalog.semantics.OneStep.holds', lambda self, layer, value, φ: False)
    assert logical_partition(dead_end).count == 1
    assert behavioural_partition(dead_end).count == 2


def test_logical_partition_with_invalid_seed(loops):
    with pytest.raises(ValueError):
        logical_partition(loops, {'p': frozenset({5})})


def test_logical_partition_matches_behavioural(covering_functor):
    T = covering_functor
    rng = random.Random(f'expressivity {T}')
    for _ in range(15):
        c = random_coalgebra(T, rng.randint(1, size_cap(T, 5, heavy_cap=3)), rng)
        assert logical_partition(c) == behavioural_partition(c)


@pytest.mark.slow
def test_logical_partition_matches_behavioural_corpus(covering_functor):
    T = covering_functor
    rng = random.Random(f'expressivity corpus {T}')
    for _ in range(100):
        c = random_coalgebra(T, rng.randint(1, size_cap(T, 5, heavy_cap=3)), rng)
        assert logical_partition(c) == behavioural_partition(c)


def test_formulas_are_invariant_under_quotient(covering_functor):
    T = covering_functor
    rng = random.Random(f'invariance {T}')
    formulas = sample_formulas(T)
    for _ in range(5):
        c = random_coalgebra(T, rng.randint(1, size_cap(T, 3)), rng)
        _, quotient, projection = behavioural_quotient(c)
        h = {'p': frozenset({0}), 'q': frozenset(range(quotient.size))}
        assert respects_morphism(projection, c, quotient, h, formulas) is None


def test_non_morphism_is_caught(pow_coalgebra):
    src = pow_coalgebra([0], [])
    dst = pow_coalgebra([0])
    f = FinFn.constant(src.carrier, dst.carrier, 0)
    assert respects_morphism(f, src, dst, {}, [TRUE, Box(FALSE)]) == Box(FALSE)


def test_identity_functor_has_no_modalities():
    assert len(derive_signature(Id()).operators) == 0
    assert check_delta_iso(Id(), FinSet(2)).ok
    assert check_delta_iso(Const(('a',)), FinSet(0)).ok
