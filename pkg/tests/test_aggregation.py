import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynseg.aggregation import (Window, aggregate, default_bandwidth, frame_labels_from_sliding,
                                null_action_windows, pool_sliding, segment_patterns, soft_assign)
from dynseg.core import ModelState, labels_to_boundaries
from dynseg.online import run_stream
from dynseg.spectral import init_model


def model_with_centers(centers, radius=1.0):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m = ModelState(dim=centers.shape[1], uncertainty=1.0)
    for c in centers:
        var = np.full(centers.shape[1], radius / centers.shape[1])
        m.add_cluster(c, c * c + var, var, 5)
    return m


def smooth_trace(a, sigma):
    # straight transcription of the smoothing rule, no numpy
    half = math.ceil(3 * sigma)
    out = []
    for t in range(len(a)):
        num = den = 0.0
        for o in range(-half, half + 1):
            if 0 <= t + o < len(a):
                w = math.exp(-0.5 * (o / sigma) ** 2)
                num += w * a[t + o]
                den += w
        out.append(num / den)
    return out


def windows_trace(labels, sigma):
    a = [0.0 if v == labels[0] else 1.0 for v in labels]
    s = smooth_trace(a, sigma)
    found = []
    for p in range(len(s)):
        left = s[p - 1] if p > 0 else -1.0
        right = s[p + 1] if p + 1 < len(s) else -1.0
        # plateau handling: only the left end of a run of equal values
        if s[p] > 0.5 and left < s[p] and right <= s[p]:
            q = p
            while q + 1 < len(s) and s[q + 1] == s[p]:
                q += 1
            if q + 1 < len(s) and s[q + 1] > s[p]:
                continue
            lo, hi = p, p
            while lo > 0 and s[lo - 1] > s[p] / 2:
                lo -= 1
            while hi + 1 < len(s) and s[hi + 1] > s[p] / 2:
                hi += 1
            found.append((lo, hi + 1))
    merged = []
    for lo, hi in sorted(found):
        if merged and lo < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return merged


class TestSoftAssign:
    def test_far_centers_give_hard_code(self):
        m = model_with_centers([[0.0, 0.0], [20.0, 0.0], [0.0, 25.0]])
        w = soft_assign([0.0, 0.0], m, bandwidth=1.0)
        assert w[0] >= 1 - 1e-6

    def test_equidistant(self):
        m = model_with_centers([[-1.0], [1.0]])
        np.testing.assert_allclose(soft_assign([0.0], m, bandwidth=0.7), [0.5, 0.5], atol=1e-15)

    def test_matches_extended_precision(self):
        rng = np.random.default_rng(0)
        centers = rng.normal(size=(5, 4)) * 3
        m = model_with_centers(centers)
        mpmath.mp.dps = 50
        for _ in range(20):
            x = rng.normal(size=4) * 3
            h = float(rng.uniform(0.3, 3))
            logits = [-sum((mpmath.mpf(float(a)) - mpmath.mpf(float(b))) ** 2 for a, b in zip(x, c))
                      / (2 * mpmath.mpf(h) ** 2) for c in centers]
            ex = [mpmath.exp(v) for v in logits]
            total = sum(ex)
            expected = [float(e / total) for e in ex]
            np.testing.assert_allclose(soft_assign(x, m, h), expected, rtol=1e-9, atol=1e-15)

    def test_duplicate_center_split_evenly(self):
        rng = np.random.default_rng(1)
        centers = rng.normal(size=(3, 2))
        base = soft_assign([0.3, -0.2], model_with_centers(centers), 1.0)
        dup = soft_assign([0.3, -0.2], model_with_centers(np.vstack([centers, centers[1]])), 1.0)
        assert dup[1] == pytest.approx(dup[3], abs=1e-15)
        expected = np.append(base, base[1]) / (1 + base[1])
        np.testing.assert_allclose(dup, expected, rtol=1e-12)

    def test_rows_sum_to_one(self):
        m = model_with_centers(np.random.default_rng(2).normal(size=(6, 3)))
        codes = soft_assign(np.random.default_rng(3).normal(size=(40, 3)) * 5, m, 0.5)
        np.testing.assert_allclose(codes.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(codes >= 0)

    def test_bad_bandwidth(self):
        with pytest.raises(ValueError):
            soft_assign([0.0], model_with_centers([[0.0]]), 0.0)

    def test_default_bandwidth(self):
        m = model_with_centers([[0.0, 0.0]], radius=8.0)
        assert default_bandwidth(m) == 2.0
        point = ModelState(dim=2, uncertainty=0.5)
        point.add_cluster([0, 0], [0, 0], [0, 0], 1)
        assert default_bandwidth(point) == math.sqrt(0.5)


class TestPoolSliding:
    def test_constant_codes(self):
        code = np.array([0.2, 0.5, 0.3])
        patterns, _ = pool_sliding(np.tile(code, (50, 1)), 10, 3)
        np.testing.assert_allclose(patterns, np.tile(code, (len(patterns), 1)), atol=1e-15)

    def test_half_and_half(self):
        codes = np.eye(2)[[0] * 15 + [1] * 15]
        patterns, windows = pool_sliding(codes, 30, 1)
        assert patterns.tolist() == [[0.5, 0.5]] and windows == [Window(0, 30)]

    def test_count(self):
        patterns, windows = pool_sliding(np.ones((100, 2)) / 2, 30, 1)
        assert len(patterns) == 71 == len(windows)
        patterns, _ = pool_sliding(np.ones((100, 2)) / 2, 30, 4)
        assert len(patterns) == (100 - 30) // 4 + 1

    def test_window_one_is_identity(self):
        codes = soft_assign(np.random.default_rng(4).normal(size=(25, 2)),
                            model_with_centers([[0, 0], [1, 1], [2, 0]]), 1.0)
        patterns, _ = pool_sliding(codes, 1, 1)
        np.testing.assert_allclose(patterns, codes, rtol=1e-15)

    def test_too_short(self):
        with pytest.raises(ValueError, match="shorter than window"):
            pool_sliding(np.ones((5, 2)), 30, 1)


class TestNullActionWindows:
    def test_all_null(self):
        assert null_action_windows([3] * 20, 1.0) == []

    def test_single_block(self):
        labels = [0, 0, 0, 1, 1, 1, 1, 0, 0, 0]
        windows = null_action_windows(labels, 1.0)
        assert windows == windows_trace(labels, 1.0) == [(3, 7)]
        (start, end), = windows
        assert abs(start - 3) <= 1 and abs((end - 1) - 6) <= 1

    def test_two_blocks(self):
        labels = [0, 0, 1, 1, 0, 0, 2, 2, 0, 0]
        windows = null_action_windows(labels, 0.5)
        assert windows == windows_trace(labels, 0.5)
        assert windows == [(2, 4), (6, 8)]

    def test_two_blocks_merge_at_wide_smoothing(self):
        # at sigma=1 the dip between blocks stays above half the peak
        assert null_action_windows([0, 0, 1, 1, 0, 0, 2, 2, 0, 0], 1.0) == [(2, 8)]

    def test_errors(self):
        with pytest.raises(ValueError):
            null_action_windows([], 1.0)
        with pytest.raises(ValueError):
            null_action_windows([0, 1], 0.0)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 2), min_size=1, max_size=120), st.floats(0.3, 6.0))
    def test_disjoint_sorted(self, labels, sigma):
        windows = null_action_windows(labels, sigma)
        assert windows == windows_trace(labels, sigma)
        for a, b in zip(windows, windows[1:]):
            assert a.end <= b.start
        for w in windows:
            assert 0 <= w.start < w.end <= len(labels)


class TestSegmentPatterns:
    def test_two_constant_phases(self):
        patterns = np.array([[0.9, 0.1]] * 20 + [[0.1, 0.9]] * 20)
        labels = segment_patterns(patterns, 2)
        assert labels.tolist() == [0] * 20 + [1] * 20

    def test_single_action(self):
        patterns = np.random.default_rng(5).dirichlet([1, 1, 1], size=30)
        assert set(segment_patterns(patterns, 1).tolist()) == {0}

    def test_planted_three_phases(self):
        rng = np.random.default_rng(6)
        base = np.eye(3) * 0.8 + 0.2 / 3
        patterns = np.vstack([base[p] + rng.normal(0, 0.01, (25, 3)) for p in (0, 1, 2)])
        labels = segment_patterns(patterns, 3, seed=3)
        truth = np.repeat([0, 1, 2], 25)
        assert len({(t, l) for t, l in zip(truth, labels)}) == 3

    def test_too_few(self):
        with pytest.raises(ValueError):
            segment_patterns(np.ones((2, 2)) / 2, 3)

    def test_frame_recovery_from_sliding(self):
        # windows of 4 frames, stride 1: window p is centered at p + 1.5
        assert frame_labels_from_sliding([0, 0, 1, 1], 7, 4, 1) == [0, 0, 0, 0, 1, 1, 1]


def test_pipeline_recovers_three_phases():
    rng = np.random.default_rng(7)
    d, lengths = 8, (150, 200, 180)
    means = [rng.normal(0, 15, d) for _ in lengths]
    X = np.vstack([m + rng.normal(size=(n, d)) for m, n in zip(means, lengths)])
    model = init_model(X[:60], uncertainty_c=4.0)
    run_stream(model, X[60:])
    labels = aggregate(X, model, k_actions=3, window=30, stride=1)
    found = labels_to_boundaries(labels)
    truth = [150, 350]
    assert len(found) == 2
    assert all(abs(f - t) <= 15 for f, t in zip(found, truth))


def test_peak_pooling_pipeline():
    rng = np.random.default_rng(8)
    d = 4
    null, a, b = rng.normal(0, 20, (3, d))
    plan = [(null, 80), (a, 60), (null, 70), (b, 50), (null, 60), (a, 40), (null, 40)]
    X = np.vstack([m + rng.normal(size=(n, d)) for m, n in plan])
    model = init_model(X[:50], uncertainty_c=4.0)
    online, _, _ = run_stream(model, X[50:])
    labels = aggregate(X, model, k_actions=2, pooling="peaks", smoothing_sigma=3.0,
                       online_labels=list(model.warmup_labels) + online)
    starts = np.cumsum([0] + [n for _, n in plan])
    blocks = [(starts[i], starts[i + 1]) for i in (1, 3, 5)]
    inside = [labels[s + 5 : e - 5] for s, e in blocks]
    assert all(len(set(v)) == 1 and v[0] != 0 for v in inside)
    assert inside[0][0] == inside[2][0] != inside[1][0]
    assert labels[:70] == [0] * 70
