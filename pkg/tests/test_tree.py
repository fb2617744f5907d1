import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dsrcsense.errors import ParameterError, ShapeError
from dsrcsense.learn.tree import DecisionTree, grow_tree, tree_apply, tree_predict


def best_split_by_hand(x, y, min_leaf=1):
    """Exhaustive reference: scan features then thresholds ascending,
    keep the first maximizer of sum_l^2/n_l + sum_r^2/n_r."""
    n = x.shape[0]
    best_score, best_feature, best_thr = -np.inf, None, None
    for j in range(x.shape[1]):
        vals = np.unique(x[:, j])
        for a, b in zip(vals[:-1], vals[1:]):
            thr = (a + b) / 2.0
            if thr == b:
                thr = a
            mask = x[:, j] <= thr
            nl = int(mask.sum())
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            sl = y[mask].sum()
            sr = y[~mask].sum()
            score = sl * sl / nl + sr * sr / nr
            if score > best_score:
                best_score, best_feature, best_thr = score, j, thr
    return best_score, best_feature, best_thr


def apply_by_hand(tree, row):
    node = 0
    while tree.feature[node] >= 0:
        if row[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return node


def node_depths(tree):
    depths = {0: 0}
    for node in range(tree.n_nodes):
        if tree.feature[node] >= 0:
            depths[int(tree.left[node])] = depths[node] + 1
            depths[int(tree.right[node])] = depths[node] + 1
    return depths


class TestBestSplitter:
    def test_recovers_obvious_threshold(self):
        x = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        tree = grow_tree(x, y)
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 2.5
        np.testing.assert_array_equal(tree_predict(tree, x), y)

    def test_root_split_matches_reference(self, rng):
        for _ in range(20):
            x = rng.integers(0, 5, size=(18, 3)).astype(float)
            y = rng.integers(0, 3, size=18).astype(float)
            if y.max() == y.min():
                continue
            score, feature, thr = best_split_by_hand(x, y)
            tree = grow_tree(x, y, max_depth=1)
            if feature is None:
                assert tree.n_nodes == 1
            else:
                assert tree.feature[0] == feature
                assert tree.threshold[0] == thr

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(2, 30), d=st.integers(1, 4),
           seed=st.integers(0, 2**32 - 1))
    def test_root_split_matches_reference_broadly(self, n, d, seed):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 4, size=(n, d)).astype(float)
        y = rng.integers(-1, 2, size=n).astype(float)
        assume(y.max() > y.min())
        _, feature, thr = best_split_by_hand(x, y)
        tree = grow_tree(x, y, max_depth=1)
        if feature is None:
            assert tree.n_nodes == 1
        else:
            assert (tree.feature[0], tree.threshold[0]) == (feature, thr)

    def test_tie_breaks_to_lowest_feature(self):
        col = np.array([0.0, 1.0, 2.0, 3.0])
        x = np.column_stack([col, col])  # identical information
        y = np.array([0.0, 0.0, 1.0, 1.0])
        tree = grow_tree(x, y, max_depth=1)
        assert tree.feature[0] == 0

    def test_tie_breaks_to_smallest_threshold(self):
        # splits at 0.5 and 2.5 both score 4/3; the smaller one must win
        x = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1.0, 0.0, 0.0, 1.0])
        tree = grow_tree(x, y, max_depth=1)
        assert tree.threshold[0] == 0.5

    def test_min_samples_leaf_restricts_candidates(self):
        x = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1.0, 0.0, 0.0, 1.0])
        tree = grow_tree(x, y, max_depth=1, min_samples_leaf=2)
        assert tree.threshold[0] == 1.5

    def test_min_samples_leaf_holds_everywhere(self, rng):
        x = rng.standard_normal((60, 3))
        y = rng.standard_normal(60)
        tree = grow_tree(x, y, min_samples_leaf=5)
        leaves = tree_apply(tree, x)
        _, counts = np.unique(leaves, return_counts=True)
        assert counts.min() >= 5

    def test_max_depth_bounds_every_leaf(self, rng):
        x = rng.standard_normal((80, 4))
        y = rng.standard_normal(80)
        tree = grow_tree(x, y, max_depth=3)
        assert max(node_depths(tree).values()) <= 3

    def test_max_depth_zero_gives_single_leaf(self, rng):
        x = rng.standard_normal((10, 2))
        y = rng.standard_normal(10)
        tree = grow_tree(x, y, max_depth=0)
        assert tree.n_nodes == 1
        assert tree.value[0] == pytest.approx(y.mean())

    def test_pure_node_stops(self):
        x = np.arange(8.0)[:, None]
        tree = grow_tree(x, np.full(8, 3.5))
        assert tree.n_nodes == 1
        assert tree.value[0] == 3.5

    def test_unlimited_tree_memorizes_distinct_rows(self, rng):
        x = rng.standard_normal((40, 2))
        y = rng.standard_normal(40)
        tree = grow_tree(x, y)
        np.testing.assert_allclose(tree_predict(tree, x), y, atol=1e-12)

    def test_adjacent_float_midpoint_falls_back_to_lower_value(self):
        a = 1.0
        b = np.nextafter(a, 2.0)
        x = np.array([[a], [b]])
        y = np.array([0.0, 1.0])
        tree = grow_tree(x, y)
        assert tree.threshold[0] == a
        np.testing.assert_array_equal(tree_predict(tree, x), y)


class TestRandomSplitter:
    def test_requires_rng(self):
        x = np.arange(6.0)[:, None]
        y = np.arange(6.0)
        with pytest.raises(ParameterError):
            grow_tree(x, y, splitter="random")

    def test_deterministic_under_seed(self, rng):
        x = np.random.default_rng(0).standard_normal((50, 3))
        y = np.random.default_rng(1).standard_normal(50)
        t1 = grow_tree(x, y, splitter="random", rng=np.random.default_rng(7))
        t2 = grow_tree(x, y, splitter="random", rng=np.random.default_rng(7))
        np.testing.assert_array_equal(t1.feature, t2.feature)
        np.testing.assert_array_equal(t1.threshold, t2.threshold)
        t3 = grow_tree(x, y, splitter="random", rng=np.random.default_rng(8))
        assert not np.array_equal(t1.threshold, t3.threshold)

    def test_thresholds_stay_inside_value_range(self, rng):
        x = rng.uniform(-3, 5, size=(40, 3))
        y = rng.standard_normal(40)
        tree = grow_tree(x, y, splitter="random", rng=np.random.default_rng(2))
        for node in range(tree.n_nodes):
            f = tree.feature[node]
            if f >= 0:
                assert x[:, f].min() <= tree.threshold[node] <= x[:, f].max()

    def test_min_leaf_respected(self):
        x = np.random.default_rng(3).standard_normal((30, 2))
        y = np.random.default_rng(4).standard_normal(30)
        tree = grow_tree(x, y, splitter="random", min_samples_leaf=4,
                         rng=np.random.default_rng(5))
        _, counts = np.unique(tree_apply(tree, x), return_counts=True)
        assert counts.min() >= 4

    def test_structure_invariant_under_power_of_two_scaling(self):
        # scaling features by 4 scales min, max and the drawn threshold
        # exactly, so the grown structure cannot change
        x = np.random.default_rng(6).integers(0, 9, size=(40, 3)).astype(float)
        y = np.random.default_rng(7).standard_normal(40)
        t1 = grow_tree(x, y, splitter="random", rng=np.random.default_rng(9))
        t2 = grow_tree(4.0 * x, y, splitter="random", rng=np.random.default_rng(9))
        np.testing.assert_array_equal(t1.feature, t2.feature)
        np.testing.assert_array_equal(t1.left, t2.left)
        np.testing.assert_array_equal(t2.threshold[t2.feature >= 0],
                                      4.0 * t1.threshold[t1.feature >= 0])
        np.testing.assert_array_equal(tree_apply(t1, x), tree_apply(t2, 4.0 * x))


class TestFeatureSubsets:
    def test_subset_growth_needs_rng(self):
        x = np.random.default_rng(0).standard_normal((20, 4))
        y = np.random.default_rng(1).standard_normal(20)
        with pytest.raises(ParameterError):
            grow_tree(x, y, max_features=2)

    def test_subset_trees_vary_with_seed(self):
        x = np.random.default_rng(0).standard_normal((60, 6))
        y = np.random.default_rng(1).standard_normal(60)
        trees = [grow_tree(x, y, max_features=2, rng=np.random.default_rng(s))
                 for s in range(4)]
        roots = {int(t.feature[0]) for t in trees}
        assert len(roots) > 1

    def test_max_features_bounds(self):
        x = np.zeros((4, 3))
        y = np.arange(4.0)
        for bad in (0, 4):
            with pytest.raises(ParameterError):
                grow_tree(x, y, max_features=bad, rng=np.random.default_rng(0))


class TestApply:
    def test_matches_scalar_walk(self, rng):
        x = rng.standard_normal((50, 3))
        y = rng.standard_normal(50)
        for tree in (
            grow_tree(x, y, max_depth=4),
            grow_tree(x, y, splitter="random", rng=np.random.default_rng(11)),
        ):
            got = tree_apply(tree, x)
            expected = [apply_by_hand(tree, row) for row in x]
            np.testing.assert_array_equal(got, expected)
            np.testing.assert_array_equal(tree_predict(tree, x),
                                          tree.value[expected])

    def test_leaves_partition_training_rows(self, rng):
        x = rng.standard_normal((30, 2))
        y = rng.standard_normal(30)
        tree = grow_tree(x, y, max_depth=3)
        leaves = tree_apply(tree, x)
        assert np.all(tree.feature[leaves] == -1)
        # each leaf predicts the mean of the rows it received
        for leaf in np.unique(leaves):
            np.testing.assert_allclose(tree.value[leaf], y[leaves == leaf].mean())

    def test_requires_matrix(self):
        tree = grow_tree(np.zeros((2, 1)), np.array([0.0, 1.0]))
        with pytest.raises(ShapeError):
            tree_apply(tree, np.zeros(3))


class TestValidation:
    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            grow_tree(np.zeros(4), np.zeros(4))
        with pytest.raises(ShapeError):
            grow_tree(np.zeros((4, 2)), np.zeros(5))

    def test_parameter_errors(self):
        x = np.zeros((3, 2))
        y = np.zeros(3)
        with pytest.raises(ParameterError):
            grow_tree(np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ParameterError):
            grow_tree(x, y, splitter="sorted")
        with pytest.raises(ParameterError):
            grow_tree(x, y, min_samples_leaf=0)
