import pytest

from coalog.config import resource_limit
from coalog.errors import NotInvertible, ResourceLimit, describe_cardinality, describe_power_of_two
from coalog.finstone import (
    BAHom, FinBA, FinFn, FinSet, all_homs, ba_coproduct, counit_eps, free_ba, generated_partition, hom_from_table,
    powerset_hom, quotient_by, unit_iota, var_elem,
)


def test_finset_rejects_bad_labels():
    with pytest.raises(ValueError):
        FinSet(-1)
    with pytest.raises(ValueError):
        FinSet(2, ('x',))
    with pytest.raises(ValueError):
        FinSet(2, ('x', 'x'))


def test_finset_labels_and_lookup():
    X = FinSet.named(['x', 'y'])
    assert X.label(1) == 'y'
    assert X.index_of_label('x') == 0
    assert FinSet(3).index_of_label('2') == 2
    with pytest.raises(ValueError):
        FinSet(3).index_of_label('3')


def test_finset_equality_ignores_labels():
    assert FinSet(2) == FinSet.named(['a', 'b'])


def test_finfn_compose_and_inverse():
    X, Y = FinSet(3), FinSet(2)
    f = FinFn(X, Y, (1, 0, 1))
    swap = FinFn(Y, Y, (1, 0))
    assert swap.compose(f).table == (0, 1, 0)
    assert swap.inverse() == swap
    assert f.preimage({1}) == frozenset({0, 2})
    assert f.image({0, 1}) == frozenset({0, 1})
    with pytest.raises(NotInvertible):
        f.inverse()


def test_finfn_validates_table():
    with pytest.raises(ValueError):
        FinFn(FinSet(2), FinSet(2), (0,))
    with pytest.raises(ValueError):
        FinFn(FinSet(1), FinSet(2), (2,))


def test_homomorphisms_preserve_operations():
    A, B = FinBA(FinSet(2)), FinBA(FinSet(3))
    homs = list(all_homs(A, B))
    assert len(homs) == 8
    elements = list(A.elements())
    for h in homs:
        assert h(A.top) == B.top
        assert h(A.bottom) == B.bottom
        for a in elements:
            assert h(~a) == ~h(a)
            for b in elements:
                assert h(a & b) == h(a) & h(b)
                assert h(a | b) == h(a) | h(b)


def test_all_homs_between_two_atom_algebras():
    A = FinBA(FinSet(2))
    assert len(list(all_homs(A, A))) == 4


def test_hom_injectivity_is_dual_surjectivity():
    A, B = FinBA(FinSet(1)), FinBA(FinSet(2))
    h = BAHom(A, B, FinFn(B.atoms, A.atoms, (0, 0)))
    assert h.is_injective()
    assert not h.is_surjective()


def test_free_ba_labels_and_variables():
    A = free_ba(['p', 'q'])
    assert A.atoms.labels == ('~p,~q', 'p,~q', '~p,q', 'p,q')
    assert var_elem(A, 'p').atomset == frozenset({1, 3})
    assert var_elem(A, 'q').atomset == frozenset({2, 3})
    with pytest.raises(ValueError):
        free_ba(['p', 'p'])


def test_quotient_identifies_pairs_and_is_universal():
    A = free_ba(['p', 'q'])
    p, q = var_elem(A, 'p'), var_elem(A, 'q')
    Q, surjection = quotient_by(A, [(p, q)])
    assert Q.atoms.size == 2
    assert surjection.is_surjective()
    assert surjection(p) == surjection(q)

    B = FinBA(FinSet(1))
    equalizing = [g for g in all_homs(A, B) if g(p) == g(q)]
    assert len(equalizing) == 2
    for g in equalizing:
        assert any(k.compose(surjection) == g for k in all_homs(Q, B))


def test_generated_partition():
    assert generated_partition(FinSet(4), [frozenset({0, 1}), frozenset({1, 2})]) == [
        frozenset({0}), frozenset({1}), frozenset({2}), frozenset({3})]
    assert generated_partition(FinSet(3), [frozenset({0, 1})]) == [frozenset({0, 1}), frozenset({2})]
    assert generated_partition(FinSet(2), []) == [frozenset({0, 1})]


def test_hom_from_table():
    A = FinBA(FinSet(2))
    identity = hom_from_table(A, A, {e.atomset: e.atomset for e in A.elements()})
    assert identity == BAHom.identity(A)
    with pytest.raises(ValueError):
        hom_from_table(A, A, {e.atomset: A.top.atomset for e in A.elements()})


def test_unit_and_counit_are_bijections():
    A = FinBA(FinSet(3))
    assert unit_iota(A).is_bijective()
    assert counit_eps(FinSet(3)).is_bijective()


def test_powerset_hom_is_preimage():
    f = FinFn(FinSet(3), FinSet(2), (0, 1, 1))
    h = powerset_hom(f)
    assert h(h.src.element({1})).atomset == frozenset({1, 2})


def test_coproduct_injections():
    A, B = free_ba(['p']), FinBA(FinSet(3))
    C, inj_a, inj_b = ba_coproduct(A, B)
    assert C.atoms.size == 6
    assert inj_a.is_injective() and inj_b.is_injective()
    assert var_elem(C, 'p') == inj_a(var_elem(A, 'p'))


def test_enumeration_respects_resource_limit():
    with resource_limit(4):
        with pytest.raises(ResourceLimit) as info:
            list(FinBA(FinSet(3)).elements())
    assert info.value.cardinality == 8
    assert info.value.limit == 4
    assert len(list(FinBA(FinSet(3)).elements())) == 8


def test_describe_cardinality():
    assert describe_cardinality(16) == '16'
    assert describe_cardinality(2 ** 70) == '2^70'
    assert describe_cardinality(2 ** 70 + 1) == '~2^70'


def test_describe_power_of_two():
    assert describe_power_of_two(4) == '16'
    assert describe_power_of_two(65536) == '2^65536'
    assert describe_power_of_two(2 ** 256) == '2^(2^256)'
    assert describe_power_of_two(3 * 2 ** 70, at_least=True) == 'at least 2^(~2^71)'
