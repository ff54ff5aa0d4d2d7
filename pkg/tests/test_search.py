import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jtarch.errors import DomainError, SearchContextError
from jtarch.search import (LEAF, InfoTree, SearchContext, StraddleTree, build_union_tree,
                           full_search, ghost_search, is_straddle_set, leaf_maps, mask_to_set,
                           powerset_tree, set_to_mask, slot_to_dense, straddle_tree,
                           synchronized_search)


def powerset(xs):
    xs = sorted(xs)
    return [frozenset(c) for r in range(len(xs) + 1) for c in itertools.combinations(xs, r)]


def union_of_powersets(scopes):
    out = set()
    for s in scopes:
        out.update(powerset(s))
    return out


def leaf_sequence(trees, search=full_search):
    """Per leaf-step: the current subset and the (tree, subset) pairs among the current leaves."""
    subsets = [t.subsets() for t in trees]
    seq = []

    def visit(ctx):
        seq.append((mask_to_set(ctx.subset),
                    sorted((j, tuple(sorted(subsets[j][trees[j].slot[v]]))) for j, v in ctx.leaves)))

    search(trees, visit)
    return seq


def check_shape(t: StraddleTree):
    """2|zeta|-1 vertices, increasing labels on every root-leaf path, tau a bijection."""
    assert len(t) == 2 * t.n_leaves - 1
    for v in range(len(t)):
        if t.is_leaf(v):
            continue
        for child in (t.left[v], t.right[v]):
            if not t.is_leaf(child):
                assert t.label[child] > t.label[v]
    assert len(set(t.subsets())) == t.n_leaves


class TestMasks:
    def test_round_trip(self):
        for s in powerset({1, 3, 6}):
            assert mask_to_set(set_to_mask(s)) == s


class TestStraddleSets:
    def test_unions_of_powersets_accepted(self):
        assert is_straddle_set(union_of_powersets([{1, 2}, {2, 3}]))
        assert is_straddle_set([set()])

    def test_not_downward_closed_rejected(self):
        assert not is_straddle_set([set(), {1, 2}])

    def test_straddle_tree_rejects_bad_set(self):
        with pytest.raises(DomainError):
            straddle_tree([set(), {1, 2}])


class TestPowersetTree:
    def test_empty_scope(self):
        t = powerset_tree(())
        assert len(t) == 1 and t.subsets() == [frozenset()]

    def test_two_variables(self):
        t = powerset_tree((1, 2))
        assert t.label[0] == 1
        assert t.label[t.left[0]] == 2 and t.label[t.right[0]] == 2
        assert t.subsets() == [frozenset(), {2}, {1}, {1, 2}]

    def test_singleton_vertex_count(self):
        assert len(powerset_tree((7,))) == 3

    @pytest.mark.parametrize("k", range(0, 8))
    def test_shape_invariants(self, k):
        check_shape(powerset_tree(tuple(range(1, k + 1))))

    def test_slot_to_dense_matches_tau(self):
        scope = (2, 5, 9)
        t = powerset_tree(scope)
        dense = slot_to_dense(scope)
        for slot, s in enumerate(t.subsets()):
            t_idx = sum(1 << j for j, x in enumerate(scope) if x in s)
            assert dense[slot] == t_idx


class TestStraddleTreeFromSet:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sets(st.integers(1, 7), max_size=4), min_size=1, max_size=4))
    def test_tau_image_and_shape(self, scopes):
        zeta = union_of_powersets(scopes)
        t = straddle_tree(zeta)
        check_shape(t)
        assert set(t.subsets()) == zeta

    def test_leaf_ranges_are_contiguous(self):
        t = straddle_tree(union_of_powersets([{1, 2}, {2, 3}]))
        for v in range(len(t)):
            lo, hi = t.leaf_range(v)
            below = sorted(t.slot[u] for u in range(len(t)) if t.is_leaf(u) and _under(t, u, v))
            assert below == list(range(lo, hi))


def _under(t, u, v):
    while u != LEAF:
        if u == v:
            return True
        u = t.parent[u]
    return False


class TestGhostSearch:
    def test_two_variables(self):
        seen = []
        stats = ghost_search([1, 2], lambda tok, z: seen.append(mask_to_set(z)) if tok == 0 else None)
        assert (stats.steps, stats.leaf_steps) == (13, 4)
        assert seen == [frozenset(), {2}, {1}, {1, 2}]

    def test_single_variable(self):
        stats = ghost_search([5])
        assert (stats.steps, stats.leaf_steps) == (5, 2)

    @pytest.mark.parametrize("k", range(1, 17))
    def test_step_count(self, k):
        stats = ghost_search(range(1, k + 1))
        assert stats.leaf_steps == 2 ** k
        assert stats.steps == 2 ** k + 3 * (2 ** k - 1)

    def test_enumerates_powerset_in_tree_order(self):
        xs = (2, 4, 5, 8)
        seen = []
        ghost_search(xs, lambda tok, z: seen.append(mask_to_set(z)) if tok == 0 else None)
        assert seen == powerset_tree(xs).subsets()

    def test_empty_set_refused(self):
        with pytest.raises(DomainError):
            ghost_search([])


class TestFullSearch:
    def test_two_singletons(self):
        seq = leaf_sequence([powerset_tree((1,)), powerset_tree((2,))])
        assert len(seq) == 4
        at_1 = dict((tuple(sorted(z)), l) for z, l in seq)[(1,)]
        assert at_1 == [(0, (1,)), (1, ())]

    def test_single_tree_one_leaf_per_step(self):
        t = powerset_tree((1, 2, 3))
        for z, l in leaf_sequence([t]):
            assert l == [(0, tuple(sorted(z)))]

    def test_overlapping_scopes(self):
        seq = leaf_sequence([powerset_tree((1, 2)), powerset_tree((2, 3))])
        assert len(seq) == 8
        for z, l in seq:
            assert l == [(0, tuple(sorted(z & {1, 2}))), (1, tuple(sorted(z & {2, 3})))]

    def test_lone_leaf_tree(self):
        seq = leaf_sequence([powerset_tree(()), powerset_tree((1,))])
        assert [l for _, l in seq] == [[(0, ()), (1, ())], [(0, ()), (1, (1,))]]

    def test_context_clean_and_reusable(self):
        ctx = SearchContext()
        trees = [powerset_tree((1, 3)), straddle_tree(union_of_powersets([{2, 3}, {1}]))]
        full_search(trees, ctx=ctx)
        assert ctx.is_clean()
        full_search(trees, ctx=ctx)
        assert ctx.is_clean()

    def test_dirty_context_refused(self):
        ctx = SearchContext(leaves={(0, 0): None})
        with pytest.raises(SearchContextError):
            full_search([powerset_tree((1,))], ctx=ctx)

    def test_info_trees_accepted(self):
        t = powerset_tree((1,))
        info = InfoTree(t, np.array([3.0, 4.0]))
        assert len(leaf_sequence([t])) == len(leaf_sequence([info.tree]))
        assert full_search([info]).leaf_steps == 2


class TestSynchronizedSearch:
    def test_single_tree_matches_full_search(self):
        t = powerset_tree((1, 2))
        assert leaf_sequence([t], synchronized_search) == leaf_sequence([t])

    def test_duplicates_both_present(self):
        t = powerset_tree((1,))
        seq = dict((tuple(sorted(z)), l) for z, l in leaf_sequence([t, t], synchronized_search))
        assert seq[(1,)] == [(0, (1,)), (1, (1,))]

    def test_no_leaf_for_missing_subset(self):
        a = straddle_tree([set(), {1}])
        b = straddle_tree([set(), {2}])
        seq = dict((tuple(sorted(z)), l) for z, l in
                   leaf_sequence([a, b], lambda ts, v: synchronized_search(ts, v, prune=False)))
        assert seq[(1, 2)] == []

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.sets(st.integers(1, 6), max_size=3), min_size=1, max_size=4),
           st.booleans())
    def test_exact_matches(self, scopes, prune):
        trees = [powerset_tree(tuple(sorted(s))) for s in scopes]
        ctx = SearchContext()
        seq = leaf_sequence(trees, lambda ts, v: synchronized_search(ts, v, prune=prune, ctx=ctx))
        assert ctx.is_clean()
        hits = {}
        for z, l in seq:
            for j, s in l:
                assert frozenset(s) == z
                hits.setdefault(j, []).append(frozenset(s))
        for j, t in enumerate(trees):
            assert sorted(hits.get(j, []), key=sorted) == sorted(t.subsets(), key=sorted)

    def test_pruning_skips_work(self):
        trees = [powerset_tree((1,)), powerset_tree((9,))]
        pruned = synchronized_search(trees, prune=True)
        full = synchronized_search(trees, prune=False)
        assert pruned.steps < full.steps
        assert pruned.leaf_steps <= full.leaf_steps


class TestUnionTree:
    def test_two_singletons(self):
        t = build_union_tree([powerset_tree((1,)), powerset_tree((2,))])
        assert len(t) == 5
        assert t.label[0] == 1
        left, right = t.left[0], t.right[0]
        assert t.label[left] == 2 and not t.is_leaf(left)
        assert t.is_leaf(right)
        assert t.subsets() == [frozenset(), {2}, {1}]

    def test_single_input_copy(self):
        src = straddle_tree(union_of_powersets([{1, 2}, {3}]))
        assert build_union_tree([src]).same_shape(src)

    def test_idempotent(self):
        p = powerset_tree((1, 2))
        assert build_union_tree([p, p]).same_shape(p)

    def test_overlapping_powersets(self):
        t = build_union_tree([powerset_tree((1, 2)), powerset_tree((2, 3))])
        assert (t.n_leaves, len(t)) == (6, 11)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sets(st.integers(1, 7), max_size=4), min_size=1, max_size=5))
    def test_image_is_union(self, scopes):
        trees = [powerset_tree(tuple(sorted(s))) for s in scopes]
        t = build_union_tree(trees)
        check_shape(t)
        assert set(t.subsets()) == union_of_powersets(scopes)
        assert t.same_shape(straddle_tree(union_of_powersets(scopes)))


class TestLeafMaps:
    def test_maps_equal_tau(self):
        srcs = [powerset_tree((1, 3)), powerset_tree((2,)), powerset_tree(())]
        target = build_union_tree(srcs)
        tsub = target.subsets()
        for src, m in zip(srcs, leaf_maps(target, srcs)):
            for slot, s in enumerate(src.subsets()):
                assert tsub[m[slot]] == s

    def test_missing_leaf_marked(self):
        m = leaf_maps(powerset_tree((1,)), [powerset_tree((2,))])[0]
        assert list(m) == [0, -1]
