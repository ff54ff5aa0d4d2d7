import numpy as np
import pytest

from jtarch.errors import ConstructionError, DomainError
from jtarch.generate import random_model, star
from jtarch.junction import (Factorisation, JunctionTree, assign_factors, construct, prepare,
                             root_tree, validate)
from jtarch.potential import Potential, unit_potential


def fact(*scopes, n=None):
    n = n or max(max(s) for s in scopes if s)
    return Factorisation(n, tuple(unit_potential(s) for s in scopes))


class TestFactorisation:
    def test_uncovered_variable(self):
        with pytest.raises(DomainError):
            fact((1, 2), n=3)

    def test_variable_out_of_range(self):
        with pytest.raises(DomainError):
            Factorisation(2, (unit_potential((1, 3)),))


class TestValidate:
    def test_chain_valid(self):
        jt = JunctionTree(((1, 2), (2, 3), (3, 4)), ((0, 1), (1, 2)))
        assert validate(jt, fact((1, 2), (2, 3), (3, 4))) == []

    def test_broken_path(self):
        jt = JunctionTree(((1, 2), (3,), (2, 4)), ((0, 1), (1, 2)))
        problems = validate(jt, fact((1, 2), (3,), (2, 4)))
        assert len(problems) == 1
        assert problems[0].startswith("running-intersection: variable 2 ")

    def test_coverage(self):
        jt = JunctionTree(((1, 2), (2, 3, 4)), ((0, 1),))
        problems = validate(jt, fact((1, 2), (3, 4, 5)))
        assert any(p.startswith("coverage: variable 5") for p in problems)

    def test_not_a_tree(self):
        jt = JunctionTree(((1,), (2,), (3,)), ((0, 1),))
        problems = validate(jt, fact((1,), (2,), (3,)))
        assert any(p.startswith("tree:") for p in problems)

    def test_bad_assignment(self):
        jt = JunctionTree(((1, 2), (2, 3)), ((0, 1),), {0: 1, 1: 1})
        problems = validate(jt, fact((1, 2), (2, 3)))
        assert any(p.startswith("assignment: factor 1") for p in problems)


class TestConstruct:
    def test_single_factor(self):
        jt = construct(fact((1, 2, 3)))
        assert jt.vertices == ((1, 2, 3),) and jt.edges == ()

    def test_two_factors(self):
        f = fact((1, 2), (2, 3))
        jt = construct(f)
        assert validate(jt, f) == []
        if len(jt) == 2:
            assert jt.separator(*jt.edges[0]) == (2,)
        else:
            assert jt.vertices == ((1, 2, 3),)

    def test_star_factors(self):
        f = fact((1, 2, 3, 4), (1, 5), (2, 6), (3, 4, 7))
        assert validate(construct(f), f) == []

    def test_disconnected_gets_empty_separator(self):
        f = fact((1, 2), (3, 4))
        jt = construct(f)
        assert validate(jt, f) == []
        assert jt.separator(*jt.edges[0]) == ()

    def test_deterministic(self):
        f = random_model(12, 8, 4, seed=3)
        assert construct(f) == construct(f)

    def test_random_always_valid(self):
        rng = np.random.default_rng(5)
        for seed in range(500):
            n = int(rng.integers(1, 15))
            m = int(rng.integers(max(1, -(-n // 5)), 11))
            f = random_model(n, m, 5, seed)
            jt = construct(f)
            assert validate(jt, f) == [], seed

    def test_connected_interaction_graph_gives_nonempty_separators(self):
        f = fact((1, 2), (2, 3), (3, 4), (4, 5), (2, 5))
        jt = construct(f)
        assert all(jt.separator(a, b) for a, b in jt.edges)


class TestAssign:
    def test_lowest_index(self):
        jt = JunctionTree(((1, 2), (2, 3)), ((0, 1),))
        assert assign_factors(jt, fact((2,), (1, 2), (2, 3), n=3)) == {0: 0, 1: 0, 2: 1}

    def test_no_containing_vertex(self):
        jt = JunctionTree(((1, 2), (2, 3)), ((0, 1),))
        with pytest.raises(ConstructionError):
            assign_factors(jt, fact((1, 3), (2,), n=3))


class TestRoot:
    def test_middle_root(self):
        jt = root_tree(JunctionTree(((1, 2), (2, 3), (3, 4)), ((0, 1), (1, 2))), 1)
        assert jt.children(1) == (0, 2)
        assert jt.parent == (1, -1, 1)

    def test_max_cardinality(self):
        jt = root_tree(JunctionTree(((1, 2), (2, 3, 4), (4, 5)), ((0, 1), (1, 2))))
        assert jt.root == 1

    def test_single_vertex(self):
        jt = root_tree(JunctionTree(((1, 2),), ()), 0)
        assert jt.root == 0 and jt.children(0) == ()

    def test_preserves_structure(self):
        f, jt = star(4, 2, 5, seed=1)
        r = root_tree(jt, 3)
        assert r.vertices == jt.vertices and r.edges == jt.edges
        assert sum(1 for p in r.parent if p == -1) == 1
        assert sorted(r.order) == list(range(len(jt)))

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            root_tree(JunctionTree(((1,),), ()), 3)


class TestPrepare:
    def test_rejects_invalid_tree(self):
        f = fact((1, 2), (3,), (2, 4))
        jt = JunctionTree(((1, 2), (3,), (2, 4)), ((0, 1), (1, 2)))
        with pytest.raises(ConstructionError, match="running-intersection"):
            prepare(f, jt)

    def test_builds_when_missing(self):
        f = fact((1, 2), (2, 3))
        jt = prepare(f)
        assert jt.root is not None and jt.assignment is not None
