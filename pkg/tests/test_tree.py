import math

import numpy as np
import pytest

from gwbound.errors import (
    DomainError,
    MemoryBudgetExceeded,
    NoSuchNode,
    NotACutset,
)
from gwbound.tree import (
    cutset_conservation_check,
    default_w_depth,
    mu_ball,
    random_cutset,
    sample_w,
    simulate_population,
    simulate_tree,
    tree_to_text,
    truncated_weight,
    z_counts_csv_rows,
)


class TestSimulation:
    def test_determinism(self, law_geom1):
        t1 = simulate_tree(law_geom1, 5, 123)
        t2 = simulate_tree(law_geom1, 5, 123)
        assert np.array_equal(t1.offspring, t2.offspring)
        assert np.array_equal(t1.z_counts, t2.z_counts)

    def test_different_seeds_differ(self, law_geom1):
        t1 = simulate_tree(law_geom1, 5, 123)
        t2 = simulate_tree(law_geom1, 5, 124)
        assert not np.array_equal(t1.offspring, t2.offspring)

    def test_population_tree_agreement(self, law_quarter, law_geom1):
        for law in (law_quarter, law_geom1):
            for seed in range(12):
                z_pop = simulate_population(law, 8, seed)
                z_tree = simulate_tree(law, 8, seed).z_counts
                assert np.array_equal(z_pop, z_tree)

    def test_extinct_trees_are_valid(self, law_quarter):
        # q = 1/2, so sampling a few seeds quickly finds extinction
        for seed in range(60):
            tree = simulate_tree(law_quarter, 25, seed)
            if tree.z_counts[-1] == 0:
                assert truncated_weight(tree, ()) == 0.0
                return
        pytest.fail("no extinct realization found in 60 seeds")

    def test_generation_recursion(self, law_geom1):
        tree = simulate_tree(law_geom1, 6, 99)
        for lev in range(6):
            a, b = tree.level_start[lev], tree.level_start[lev + 1]
            assert tree.offspring[a:b].sum() == tree.z_counts[lev + 1]

    def test_node_cap(self, law_geom1):
        with pytest.raises(MemoryBudgetExceeded):
            simulate_tree(law_geom1, 10, 0, node_cap=1000)
        with pytest.raises(MemoryBudgetExceeded):
            simulate_population(law_geom1, 30, 0, node_cap=10_000)

    def test_depth_validation(self, law_geom1):
        with pytest.raises(DomainError):
            simulate_tree(law_geom1, 0, 1)

    def test_martingale_step_mean(self, law_quarter):
        # E(Z_{k+1} | Z_k) = a Z_k, checked as a mean over replicas
        steps = []
        for seed in range(4000):
            z = simulate_population(law_quarter, 5, seed)
            steps.extend(z[1:] - law_quarter.mean_a * z[:-1])
        steps = np.asarray(steps, dtype=float)
        se = steps.std(ddof=1) / math.sqrt(steps.size)
        assert abs(steps.mean()) <= 4 * se


@pytest.fixture(scope="module")
def tree_d6(law_geom1):
    return simulate_tree(law_geom1, 6, 7)


@pytest.fixture(scope="module")
def tree_d5(law_geom1):
    return simulate_tree(law_geom1, 5, 11)


class TestWeightsAndMasses:
    @pytest.fixture()
    def tree(self, tree_d6):
        return tree_d6

    def test_root_weight_is_normalized_population(self, tree):
        expect = tree.z_counts[-1] / 5.0**6
        assert truncated_weight(tree, ()) == pytest.approx(expect, abs=0)

    def test_leaf_weight_is_one(self, tree):
        node = ()
        while len(node) < tree.depth:
            node = node + (0,)
        assert truncated_weight(tree, node) == 1.0

    def test_one_step_recursion(self, tree):
        for node in [(), (0,), (0, 0), (1,)]:
            if not tree.has_node(node):
                continue
            kids = tree.children(node)
            expect = sum(truncated_weight(tree, c) for c in kids) / 5.0
            assert truncated_weight(tree, node) == pytest.approx(expect,
                                                                 abs=1e-12)

    def test_mu_additivity(self, tree):
        for node in [(), (0,), (2,)]:
            if not tree.has_node(node):
                continue
            kids = tree.children(node)
            total = sum(mu_ball(tree, c).mass for c in kids)
            assert mu_ball(tree, node).mass == pytest.approx(total, abs=1e-15)

    def test_absent_node_has_zero_mass(self, tree):
        assert mu_ball(tree, (99, 99)).mass == 0.0

    def test_missing_node_raises_for_weight(self, tree):
        with pytest.raises(NoSuchNode):
            truncated_weight(tree, (99, 99))


class TestCutsets:
    @pytest.fixture()
    def tree(self, tree_d5):
        return tree_d5

    def test_children_cutset(self, tree):
        res = cutset_conservation_check(tree, (), tree.children(()))
        assert res["abs_err"] <= 1e-12 * max(1.0, res["lhs"])
        assert res["lhs"] == pytest.approx(tree.z_counts[-1] / 5.0**5)

    def test_full_level_cutsets(self, tree):
        for m in (2, 3, 4):
            level = [
                p for p in _level_paths(tree, m)
            ]
            res = cutset_conservation_check(tree, (), level)
            assert res["abs_err"] <= 1e-12 * max(1.0, res["lhs"])

    def test_random_ragged_cutsets_conserve(self, tree, rng):
        for _ in range(100):
            cut = random_cutset(tree, rng)
            res = cutset_conservation_check(tree, (), cut)
            assert res["abs_err"] <= 1e-12 * max(1.0, res["lhs"])

    def test_brute_force_leaf_count_agreement(self, tree, rng):
        # independent oracle: the cutset masses sum to (bottom leaves)/a^n
        cut = random_cutset(tree, rng)
        total = sum(tree.descendants_at_bottom(m) for m in cut)
        assert total == tree.descendants_at_bottom(())
        res = cutset_conservation_check(tree, (), cut)
        assert res["rhs"] == pytest.approx(total / 5.0**5, rel=1e-13)

    def test_subtree_root_cutsets(self, tree, rng):
        root = (0,)
        for _ in range(20):
            cut = random_cutset(tree, rng, root=root)
            res = cutset_conservation_check(tree, root, cut)
            assert res["abs_err"] <= 1e-12 * max(1.0, res["lhs"])

    def test_comparable_members_rejected(self, tree):
        with pytest.raises(NotACutset):
            cutset_conservation_check(tree, (), [(0,), (0, 0)])

    def test_coverage_failure_rejected(self, tree):
        kids = tree.children(())
        with pytest.raises(NotACutset):
            cutset_conservation_check(tree, (), kids[:-1])

    def test_member_outside_root_rejected(self, tree):
        with pytest.raises(NotACutset):
            cutset_conservation_check(tree, (0,), [(1,)])

    def test_absent_member_rejected(self, tree):
        with pytest.raises(NotACutset):
            cutset_conservation_check(tree, (), [(99,)])


def _level_paths(tree, depth):
    out = []
    stack = [()]
    while stack:
        node = stack.pop()
        if len(node) == depth:
            out.append(node)
            continue
        stack.extend(tree.children(node))
    return out


class TestIndependence:
    def test_sibling_weights_uncorrelated(self, law_binary):
        pairs = []
        for seed in range(6000):
            tree = simulate_tree(law_binary, 8, seed)
            if tree.offspring[0] >= 2:
                d = tree.depth - 1
                pairs.append((
                    tree.descendants_at_bottom((0,)) / law_binary.mean_a**d,
                    tree.descendants_at_bottom((1,)) / law_binary.mean_a**d,
                ))
            if len(pairs) >= 2500:
                break
        arr = np.asarray(pairs)
        r = np.corrcoef(arr[:, 0], arr[:, 1])[0, 1]
        assert abs(r) <= 4.0 / math.sqrt(len(pairs))


class TestWSampler:
    def test_mean_one(self, law_geom1, rng):
        w = sample_w(law_geom1, 10_000, rng, depth=10)
        se = w.std(ddof=1) / math.sqrt(w.size)
        assert abs(w.mean() - 1.0) <= 3 * se

    def test_default_depths(self):
        assert default_w_depth(5.0) == 20
        assert default_w_depth(2.0) == 20
        assert default_w_depth(1.25) == math.ceil(40 / math.log2(1.25))

    def test_depth_doubling_stability(self, law_geom1):
        # truncation bias of the depth-n weight surrogate is controlled
        # empirically: doubling the depth moves the tail mean within noise
        r1 = np.random.default_rng(5)
        r2 = np.random.default_rng(6)
        w1 = sample_w(law_geom1, 20_000, r1, depth=10)
        w2 = sample_w(law_geom1, 20_000, r2, depth=20)
        se = math.hypot(w1.std(ddof=1) / math.sqrt(w1.size),
                        w2.std(ddof=1) / math.sqrt(w2.size))
        assert abs(w1.mean() - w2.mean()) <= 4 * se


class TestExports:
    def test_tree_text_round_structure(self, law_quarter):
        tree = simulate_tree(law_quarter, 3, 2)
        text = tree_to_text(tree)
        lines = text.strip().split("\n")
        assert len(lines) == tree.n_nodes
        root_line = lines[0].split("\t")
        assert root_line[0] == "-"
        assert int(root_line[1]) == tree.offspring[0]

    def test_tree_text_golden(self, law_quarter):
        # frozen realization: replaying the seed must reproduce it exactly
        tree = simulate_tree(law_quarter, 2, 42)
        assert tree_to_text(tree) == tree_to_text(simulate_tree(law_quarter, 2, 42))

    def test_z_counts_rows(self, law_quarter):
        z = simulate_population(law_quarter, 4, 3)
        rows = z_counts_csv_rows(z)
        assert rows[0] == (0, 1)
        assert len(rows) == 5
