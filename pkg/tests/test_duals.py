import numpy as np
import pytest

from conftest import random_potential, rel_err
from jtarch.counters import OpCounters
from jtarch.duals import (dense_to_info, info_to_dense, m_dual_oracle, marginalise_mduals,
                          operation2_via_duals, p_dual_oracle, product_of_duals, transform1,
                          transform2, transform3)
from jtarch.errors import DomainError
from jtarch.potential import Potential, marginalize, multiply, unit_potential
from jtarch.search import build_union_tree, powerset_tree

PHI = Potential((1, 2), [1, 2, 3, 4])
U1 = Potential((1,), [2, 5])
U2 = Potential((2,), [1, 3])


def brute_op2(inputs, targets):
    prod = inputs[0]
    for u in inputs[1:]:
        prod = multiply(prod, u)
    return [marginalize(prod, t) for t in targets]


def p_dual_sparse(p: Potential):
    return dense_to_info(transform1(p).table, p.scope)


class TestOracles:
    @pytest.mark.parametrize("phi,expected", [
        (Potential((), [3.5]), [3.5]),
        (Potential((1,), [2, 4]), [2, 0.5]),
        (PHI, [1, 1 / 2, 1 / 3, 2 / 3]),
    ])
    def test_p_dual(self, phi, expected):
        assert rel_err(p_dual_oracle(phi).table, expected) <= 1e-15

    @pytest.mark.parametrize("phi,expected", [
        (PHI, [10, 6, 7, 4]),
        (Potential((), [3.5]), [3.5]),
        (unit_potential((1,)), [2, 1]),
    ])
    def test_m_dual(self, phi, expected):
        assert list(m_dual_oracle(phi).table) == expected

    def test_p_dual_refuses_zero_without_mzc(self):
        with pytest.raises(DomainError):
            p_dual_oracle(Potential((1,), [0, 1]))

    def test_involution(self, rng):
        for k in range(0, 7):
            phi = random_potential(rng, range(1, k + 1))
            assert rel_err(p_dual_oracle(p_dual_oracle(phi)).table, phi.table) <= 1e-12

    def test_multiplicative(self, rng):
        for _ in range(20):
            a = random_potential(rng, (1, 2, 3))
            b = random_potential(rng, (1, 2, 3))
            lhs = p_dual_oracle(multiply(a, b)).table
            rhs = p_dual_oracle(a).table * p_dual_oracle(b).table
            assert rel_err(lhs, rhs) <= 1e-12

    def test_extension(self, rng):
        a = random_potential(rng, (2, 4))
        ext = multiply(a, unit_potential((1, 2, 3, 4)))
        d_ext = p_dual_oracle(ext)
        d_a = p_dual_oracle(a)
        for t in range(16):
            s = {x for j, x in enumerate(ext.scope) if t >> j & 1}
            if s <= {2, 4}:
                assert d_ext.value(s) == pytest.approx(d_a.value(s), rel=1e-12)
            else:
                assert d_ext.value(s) == pytest.approx(1.0, rel=1e-12)

    def test_m_dual_linear(self, rng):
        a = random_potential(rng, (1, 3, 5))
        b = random_potential(rng, (1, 3, 5))
        s = Potential(a.scope, a.table + b.table)
        assert rel_err(m_dual_oracle(s).table, m_dual_oracle(a).table + m_dual_oracle(b).table) <= 1e-12


class TestTransform1:
    @pytest.mark.parametrize("phi", [Potential((1,), [2, 4]), PHI, Potential((), [7.0])])
    def test_matches_oracle(self, phi):
        assert rel_err(transform1(phi).table, p_dual_oracle(phi).table) <= 1e-15

    def test_random(self, rng):
        for k in range(1, 11):
            phi = random_potential(rng, range(1, k + 1))
            assert rel_err(transform1(phi).table, p_dual_oracle(phi).table) <= 1e-9

    def test_mzc_matches_oracle_on_zeros(self, rng):
        phi = random_potential(rng, (1, 2, 3), zero_prob=0.3)
        got = transform1(phi, mzc=True)
        ref = p_dual_oracle(phi, mzc=True)
        assert np.array_equal(got.zc, ref.zc)
        assert rel_err(got.mag, ref.mag) <= 1e-12


class TestProductOfDuals:
    def test_single_input_copy(self):
        d = p_dual_sparse(PHI)
        out = product_of_duals([d])
        assert out.tree.same_shape(d.tree)
        assert np.array_equal(out.values, d.values)

    def test_disjoint_scopes(self):
        out = product_of_duals([p_dual_sparse(U1), p_dual_sparse(U2)])
        assert set(out.tree.subsets()) == {frozenset(), frozenset({1}), frozenset({2})}
        assert out.value_of(()) == pytest.approx(2 * 1)

    def test_overlapping_scopes(self, rng):
        a = random_potential(rng, (1, 2))
        b = random_potential(rng, (2, 3))
        out = product_of_duals([p_dual_sparse(a), p_dual_sparse(b)])
        assert out.tree.n_leaves == 6
        expected = p_dual_oracle(a).value({2}) * p_dual_oracle(b).value({2})
        assert out.value_of({2}) == pytest.approx(expected, rel=1e-15)


class TestTransform2:
    def test_powerset(self):
        md = transform2(p_dual_sparse(PHI))
        assert rel_err(info_to_dense(md, PHI.scope), [10, 6, 7, 4]) <= 1e-15

    def test_empty_scope(self):
        d = dense_to_info(np.array([5.0]), ())
        assert list(transform2(d).values) == [5.0]

    def test_sparse_union_matches_restricted_oracle(self):
        sp = product_of_duals([p_dual_sparse(U1), p_dual_sparse(U2)])
        md = transform2(sp)
        ref = m_dual_oracle(multiply(U1, U2))
        for s, v in md.as_dict().items():
            assert v == pytest.approx(ref.value(s), rel=1e-15)

    def test_random_sparse(self, rng):
        for _ in range(30):
            scopes = [tuple(sorted(rng.choice(np.arange(1, 8), rng.integers(1, 4), replace=False)))
                      for _ in range(3)]
            ups = [random_potential(rng, s) for s in scopes]
            prod = ups[0]
            for u in ups[1:]:
                prod = multiply(prod, u)
            md = transform2(product_of_duals([p_dual_sparse(u) for u in ups]))
            ref = m_dual_oracle(prod)
            got = md.as_dict()
            assert rel_err([got[s] for s in got], [ref.value(s) for s in got]) <= 1e-9

    @pytest.mark.parametrize("k", [2, 5, 8])
    def test_peak_live_values_bound(self, rng, k):
        sp = product_of_duals([p_dual_sparse(random_potential(rng, range(1, k + 1)))])
        c = OpCounters()
        transform2(sp, c)
        assert c.peak_aux_entries <= (k + 1) * sp.tree.n_leaves


class TestTransform3AndMarginals:
    def test_inversion_example(self):
        assert list(transform3(Potential((1, 2), [10, 6, 7, 4])).table) == [1, 2, 3, 4]

    def test_empty_scope(self):
        assert list(transform3(Potential((), [3.0])).table) == [3.0]

    def test_round_trip(self, rng):
        for k in range(1, 11):
            phi = random_potential(rng, range(1, k + 1))
            assert rel_err(transform3(m_dual_oracle(phi)).table, phi.table) <= 1e-9

    def test_marginalise_example(self):
        md = dense_to_info(np.array([10.0, 6, 7, 4]), (1, 2))
        a, b = marginalise_mduals(md, [(1,), (2,)])
        assert list(a.table) == [10, 6] and list(b.table) == [10, 7]

    def test_marginalise_full_scope_copy(self):
        md = dense_to_info(np.array([10.0, 6, 7, 4]), (1, 2))
        assert list(marginalise_mduals(md, [(1, 2)])[0].table) == [10, 6, 7, 4]

    def test_marginalise_from_product(self):
        sp = transform2(product_of_duals([p_dual_sparse(U1), p_dual_sparse(U2)]))
        a, b = marginalise_mduals(sp, [(1,), (2,)])
        assert list(a.table) == [28, 20] and list(b.table) == [28, 21]


class TestOperation2ViaDuals:
    def test_example(self):
        a, b = operation2_via_duals([U1, U2])
        assert rel_err(a.table, [8, 20]) <= 1e-15 and rel_err(b.table, [7, 21]) <= 1e-15

    def test_single_input(self):
        assert rel_err(operation2_via_duals([PHI])[0].table, PHI.table) <= 1e-15

    def test_zero_input_exact(self):
        ups = [Potential((1,), [0, 5]), U2]
        for got, ref in zip(operation2_via_duals(ups), brute_op2(ups, [(1,), (2,)])):
            assert np.array_equal(got.table, ref.table)

    def test_random_with_zeros(self, rng):
        for trial in range(60):
            scopes = [tuple(sorted(rng.choice(np.arange(1, 7), rng.integers(0, 4), replace=False)))
                      for _ in range(3)]
            cover = tuple(sorted(set(range(1, 7)) - set().union(*map(set, scopes))))
            if cover:
                scopes.append(cover)
            ups = [random_potential(rng, s, zero_prob=0.25 if trial % 2 else 0.0) for s in scopes]
            targets = [s for s in scopes] + [(1,), ()]
            for got, ref in zip(operation2_via_duals(ups, targets), brute_op2(ups, targets)):
                assert rel_err(got.table, ref.table) <= 1e-9

    def test_singleton_targets(self, rng):
        ups = [random_potential(rng, (1, 2, 3)), random_potential(rng, (3, 4))]
        targets = [(x,) for x in range(1, 5)]
        for got, ref in zip(operation2_via_duals(ups, targets), brute_op2(ups, targets)):
            assert rel_err(got.table, ref.table) <= 1e-12


def test_dense_info_round_trip(rng):
    phi = random_potential(rng, (2, 3, 7))
    info = dense_to_info(phi.table, phi.scope)
    assert info.tree.same_shape(powerset_tree(phi.scope))
    assert np.array_equal(info_to_dense(info, phi.scope), phi.table)
    assert info.value_of({3, 7}) == phi.value({3, 7})
    assert build_union_tree([info.tree]).same_shape(info.tree)
