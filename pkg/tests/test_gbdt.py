"""Boosted trees: closed-form oracles, exhaustive small-case structure
checks, boosting behavior, and serialization."""

import numpy as np
import pytest

from subgrade import gbdt
from subgrade.errors import (
    DegenerateDenominator,
    DegenerateInput,
    DimensionMismatch,
)
from subgrade.gbdt import (
    AxisTree,
    BoostedEnsemble,
    BoostHyperParams,
    ObliviousTree,
    build_tree,
    grad_hess_squared,
    leaf_weight,
    split_gain,
)


def hyper(**kw):
    base = dict(n_estimators=1, learning_rate=1.0, max_depth=6,
                reg_lambda=0.0, gamma_complexity=0.0, subsample=1.0,
                colsample_bytree=1.0, min_child_weight=0.0,
                tree_shape="axis", seed=0)
    base.update(kw)
    return BoostHyperParams(**base)


def leaf_objective(w, g_sum, h_sum, lam):
    return g_sum * w + 0.5 * (h_sum + lam) * w * w


def brute_min(fn, lo=-120.0, hi=120.0, points=2001):
    """Brute-force minimizer: coarse grid scan, then the vertex of the
    parabola through the three best neighboring samples (exact for the
    quadratic leaf objective, up to rounding)."""
    grid = np.linspace(lo, hi, points)
    vals = np.array([fn(w) for w in grid])
    i = int(np.clip(np.argmin(vals), 1, points - 2))
    w1, w2, w3 = grid[i - 1], grid[i], grid[i + 1]
    f1, f2, f3 = vals[i - 1], vals[i], vals[i + 1]
    num = (w2 - w1) ** 2 * (f2 - f3) - (w2 - w3) ** 2 * (f2 - f1)
    den = (w2 - w1) * (f2 - f3) - (w2 - w3) * (f2 - f1)
    w = w2 - 0.5 * num / den
    return w, fn(w)


class TestGradHess:
    def test_zero_at_fit(self):
        y = np.array([1.0, 2.0])
        gh = grad_hess_squared(y, y.copy())
        assert np.all(gh.g == 0.0) and np.all(gh.h == 1.0)

    def test_direct(self):
        gh = grad_hess_squared([1.0, 3.0], [0.0, 0.0])
        np.testing.assert_array_equal(gh.g, [-1.0, -3.0])
        np.testing.assert_array_equal(gh.h, [1.0, 1.0])

    def test_finite_difference(self):
        rng = np.random.default_rng(0)
        y = rng.uniform(-5, 5, 20)
        pred = rng.uniform(-5, 5, 20)
        gh = grad_hess_squared(y, pred)
        eps = 1e-6
        for i in range(20):
            up = 0.5 * (y[i] - (pred[i] + eps)) ** 2
            dn = 0.5 * (y[i] - (pred[i] - eps)) ** 2
            assert gh.g[i] == pytest.approx((up - dn) / (2 * eps), abs=1e-4)


class TestClosedForms:
    def test_brute_force_1000_tuples(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            gl, gr = rng.uniform(-50, 50, 2)
            hl, hr = rng.uniform(0.5, 30, 2)
            lam = float(rng.uniform(0.0, 5.0))
            gam = float(rng.uniform(0.0, 2.0))
            w, val_l = brute_min(lambda w: leaf_objective(w, gl, hl, lam))
            assert leaf_weight(gl, hl, lam) == pytest.approx(w, abs=1e-10)
            _, val_r = brute_min(lambda w: leaf_objective(w, gr, hr, lam))
            _, val_p = brute_min(
                lambda w: leaf_objective(w, gl + gr, hl + hr, lam))
            oracle = val_p - (val_l + val_r) - gam
            assert split_gain(gl, hl, gr, hr, lam, gam) == pytest.approx(
                oracle, abs=1e-10)

    def test_leaf_weight_trivials(self):
        assert leaf_weight(0.0, 3.0, 1.0) == 0.0
        # residuals y - pred = [1, 3] => G = -4, H = 2 => mean residual 2
        assert leaf_weight(-4.0, 2.0, 0.0) == 2.0
        assert abs(leaf_weight(5.0, 1.0, 1e12)) < 1e-9

    def test_split_gain_hand_case(self):
        assert split_gain(-2.0, 1.0, 2.0, 1.0, 1.0, 0.0) == pytest.approx(2.0)

    def test_symmetric_split_is_minus_gamma(self):
        assert split_gain(3.0, 2.0, 3.0, 2.0, 0.0, 0.7) == -0.7

    def test_degenerate_denominators(self):
        with pytest.raises(DegenerateDenominator):
            leaf_weight(1.0, 0.0, 0.0)
        with pytest.raises(DegenerateDenominator):
            split_gain(1.0, 0.0, 1.0, 1.0, 0.0, 0.0)

    def test_leaf_weight_optimality(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            g, h, lam = rng.uniform(-10, 10), rng.uniform(0.5, 5), rng.uniform(0, 2)
            w = leaf_weight(g, h, lam)
            best = leaf_objective(w, g, h, lam)
            for d in (-1e-3, 1e-3):
                assert leaf_objective(w + d, g, h, lam) >= best


class TestBuildAxis:
    def test_step_data(self):
        x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.sign(x[:, 0])
        grad = grad_hess_squared(y, np.zeros(4))
        tree = build_tree(x, grad, hyper(max_depth=1))
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 0.0
        left_w = tree.values(np.array([[-1.5]]))[0]
        right_w = tree.values(np.array([[1.5]]))[0]
        assert (left_w, right_w) == (-1.0, 1.0)

    def test_equal_residuals_single_leaf(self):
        x = np.random.default_rng(0).uniform(0, 1, (5, 2))
        grad = grad_hess_squared(np.full(5, 2.0), np.zeros(5))
        tree = build_tree(x, grad, hyper(reg_lambda=1.0))
        assert tree.n_leaves == 1
        assert tree.weight[0] == leaf_weight(-10.0, 5.0, 1.0)

    def test_large_gamma_single_leaf(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, (30, 3))
        grad = grad_hess_squared(rng.uniform(0, 1, 30), np.zeros(30))
        tree = build_tree(x, grad, hyper(gamma_complexity=1e9))
        assert tree.n_leaves == 1

    def test_min_child_weight_blocks_split(self):
        x = np.array([[0.0], [1.0], [2.0], [3.0]])
        grad = grad_hess_squared(x[:, 0], np.zeros(4))
        tree = build_tree(x, grad, hyper(min_child_weight=3.0, max_depth=1))
        assert tree.n_leaves == 1

    def test_threshold_at_midpoint(self):
        x = np.array([[1.0], [3.0]])
        grad = grad_hess_squared(np.array([0.0, 10.0]), np.zeros(2))
        tree = build_tree(x, grad, hyper(max_depth=1))
        assert tree.threshold[0] == 2.0

    def test_tie_break_lowest_feature(self):
        # identical columns: feature 0 must win the tie
        x = np.array([[0.0, 0.0], [1.0, 1.0]])
        grad = grad_hess_squared(np.array([0.0, 4.0]), np.zeros(2))
        tree = build_tree(x, grad, hyper(max_depth=1))
        assert tree.feature[0] == 0


def oblivious_oracle(x, g, h, max_levels, lam, gam):
    """Independent level-by-level exhaustive search replicating the stated
    selection rule: scan features ascending, thresholds ascending, keep the
    first strictly-better total gain; stop when no level clears zero."""
    m, d = x.shape
    codes = np.zeros(m, dtype=int)
    levels = []
    for _ in range(max_levels):
        best = (0.0, None, None)
        for f in range(d):
            vals = np.sort(np.unique(x[:, f]))
            for v0, v1 in zip(vals[:-1], vals[1:]):
                t = 0.5 * (v0 + v1)
                total = 0.0
                for c in np.unique(codes):
                    mask = codes == c
                    left = mask & (x[:, f] <= t)
                    right = mask & (x[:, f] > t)
                    if left.sum() and right.sum():
                        total += split_gain(g[left].sum(), h[left].sum(),
                                            g[right].sum(), h[right].sum(),
                                            lam, gam)
                if total > best[0]:
                    best = (total, f, t)
        if best[1] is None:
            break
        f, t = best[1], best[2]
        levels.append((f, t))
        codes = codes * 2 + (x[:, f] > t).astype(int)
    weights = np.zeros(1 << len(levels))
    for c in np.unique(codes):
        mask = codes == c
        weights[c] = leaf_weight(g[mask].sum(), h[mask].sum(), lam)
    return levels, weights


class TestBuildOblivious:
    def test_exhaustive_oracle_6_samples(self):
        rng = np.random.default_rng(7)
        for trial in range(25):
            x = rng.uniform(0, 1, (6, 2))
            y = rng.uniform(-2, 2, 6)
            grad = grad_hess_squared(y, np.zeros(6))
            lam = float(rng.uniform(0.1, 2.0))
            tree = build_tree(x, grad, hyper(tree_shape="oblivious",
                                             max_depth=2, reg_lambda=lam))
            levels, weights = oblivious_oracle(x, grad.g, grad.h, 2, lam, 0.0)
            got = list(zip(tree.level_features.tolist(),
                           tree.level_thresholds.tolist()))
            assert got == pytest.approx(levels), trial
            np.testing.assert_allclose(tree.leaf_weights, weights, atol=1e-12)

    def test_structural_invariant(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(0, 1, (20, 3))
        grad = grad_hess_squared(rng.uniform(0, 1, 20), np.zeros(20))
        tree = build_tree(x, grad, hyper(tree_shape="oblivious", max_depth=3,
                                         reg_lambda=0.5))
        # leaf index must equal the bit pattern of the go-right decisions
        for r in range(20):
            code = 0
            for f, t in zip(tree.level_features, tree.level_thresholds):
                code = code * 2 + int(x[r, f] > t)
            assert tree.apply(x[r:r + 1])[0] == code

    def test_level_cap(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(0, 1, (50, 2))
        grad = grad_hess_squared(rng.uniform(0, 1, 50), np.zeros(50))
        tree = build_tree(x, grad, hyper(tree_shape="oblivious", max_depth=30,
                                         reg_lambda=0.5))
        assert tree.n_levels <= gbdt.OBLIVIOUS_LEVEL_CAP


class TestFit:
    def test_exact_fit_memorizing(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            n = int(rng.integers(4, 17))
            x = rng.uniform(0, 1, (n, int(rng.integers(1, 4))))
            y = rng.uniform(-3, 3, n)
            ens = gbdt.fit(x, y, hyper(max_depth=n, n_estimators=1))
            pred = gbdt.predict_batch(ens, x)
            ss_res = np.sum((y - pred) ** 2)
            ss_tot = np.sum((y - y.mean()) ** 2)
            assert 1.0 - ss_res / ss_tot >= 1.0 - 1e-9, trial

    def test_degenerate_tree_predicts_mean(self):
        rng = np.random.default_rng(12)
        x = rng.uniform(0, 1, (10, 2))
        y = rng.uniform(0, 1, 10)
        ens = gbdt.fit(x, y, hyper(gamma_complexity=1e9, n_estimators=1))
        np.testing.assert_allclose(gbdt.predict_batch(ens, x), y.mean(),
                                   atol=1e-12)

    def test_training_mse_non_increasing(self):
        rng = np.random.default_rng(13)
        x = rng.uniform(0, 1, (40, 3))
        y = np.sin(4 * x[:, 0]) + x[:, 1]
        for shape in ("axis", "oblivious"):
            ens = gbdt.fit(x, y, hyper(tree_shape=shape, n_estimators=50,
                                       learning_rate=0.3, max_depth=3,
                                       reg_lambda=1.0))
            assert np.all(np.diff(ens.training_mse) <= 1e-12)

    def test_deterministic_with_sampling(self):
        rng = np.random.default_rng(14)
        x = rng.uniform(0, 1, (30, 4))
        y = rng.uniform(0, 1, 30)
        h = hyper(n_estimators=20, learning_rate=0.2, max_depth=3,
                  subsample=0.7, colsample_bytree=0.5, reg_lambda=1.0, seed=5)
        a, b = gbdt.fit(x, y, h), gbdt.fit(x, y, h)
        assert a.to_dict() == b.to_dict()

    def test_colsample_restricts_features(self):
        rng = np.random.default_rng(15)
        x = rng.uniform(0, 1, (40, 7))
        y = x @ rng.uniform(0, 1, 7)
        ens = gbdt.fit(x, y, hyper(n_estimators=10, learning_rate=0.3,
                                   max_depth=3, colsample_bytree=1.0 / 7.0,
                                   reg_lambda=1.0))
        for tree in ens.trees:
            used = set(tree.feature[tree.feature >= 0].tolist())
            assert len(used) <= 1

    def test_needs_two_rows(self):
        with pytest.raises(DegenerateInput):
            gbdt.fit(np.ones((1, 2)), np.ones(1), hyper())


class TestPredict:
    def make_ensemble(self, shape):
        rng = np.random.default_rng(16)
        x = rng.uniform(0, 1, (30, 3))
        y = np.cos(3 * x[:, 0]) + x[:, 2]
        ens = gbdt.fit(x, y, hyper(tree_shape=shape, n_estimators=15,
                                   learning_rate=0.2, max_depth=3,
                                   reg_lambda=0.5))
        return ens, x

    def test_batch_equals_per_row(self):
        for shape in ("axis", "oblivious"):
            ens, x = self.make_ensemble(shape)
            batch = gbdt.predict_batch(ens, x)
            singles = np.array([gbdt.predict(ens, row) for row in x])
            np.testing.assert_array_equal(batch, singles)

    def test_empty_trees_returns_base(self):
        ens = BoostedEnsemble(base_score=2.5, trees=(), hyper=hyper())
        assert gbdt.predict(ens, np.zeros(3)) == 2.5

    def test_single_leaf_additive_form(self):
        tree = AxisTree(np.array([-1]), np.zeros(1), np.zeros(1, dtype=int),
                        np.zeros(1, dtype=int), np.array([3.0]))
        ens = BoostedEnsemble(base_score=1.0, trees=(tree,),
                              hyper=hyper(learning_rate=0.5))
        assert gbdt.predict(ens, np.zeros(2)) == 1.0 + 0.5 * 3.0

    def test_piecewise_constant(self):
        ens, x = self.make_ensemble("axis")
        thresholds = np.sort(np.concatenate(
            [t.threshold[t.feature >= 0] for t in ens.trees]))
        q = x[0].copy()
        base = gbdt.predict(ens, q)
        # nudge each coordinate by far less than any threshold gap
        gaps = np.diff(np.unique(thresholds))
        step = (gaps.min() if gaps.size else 1.0) * 1e-6
        for j in range(3):
            q2 = q.copy()
            near = np.abs(thresholds - q2[j]).min() if thresholds.size else 1.0
            if near > step:
                q2[j] += step / 2
                assert gbdt.predict(ens, q2) == base

    def test_dimension_mismatch(self):
        ens, _ = self.make_ensemble("axis")
        with pytest.raises(DimensionMismatch):
            gbdt.predict_batch(ens, np.zeros((2, 1)))


class TestSerialization:
    def test_round_trip_both_shapes(self):
        rng = np.random.default_rng(17)
        x = rng.uniform(0, 1, (25, 3))
        y = rng.uniform(0, 1, 25)
        q = rng.uniform(0, 1, (10, 3))
        for shape in ("axis", "oblivious"):
            ens = gbdt.fit(x, y, hyper(tree_shape=shape, n_estimators=8,
                                       learning_rate=0.3, max_depth=3,
                                       reg_lambda=0.7, subsample=0.8, seed=2))
            back = BoostedEnsemble.from_dict(ens.to_dict())
            assert back.hyper == ens.hyper
            assert back.base_score == ens.base_score
            np.testing.assert_array_equal(gbdt.predict_batch(back, q),
                                          gbdt.predict_batch(ens, q))
            assert back.to_dict() == ens.to_dict()


class TestHyperValidation:
    @pytest.mark.parametrize("kw", [
        {"n_estimators": 0}, {"n_estimators": 10_001},
        {"learning_rate": 0.0}, {"learning_rate": 1.5},
        {"max_depth": 0}, {"reg_lambda": -1.0}, {"subsample": 0.0},
        {"colsample_bytree": 1.2}, {"tree_shape": "leafwise"},
        {"min_child_weight": -0.5},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            hyper(**kw)
