"""Tests for pilot placement, the Wiener interpolator design, and
pilot-based channel estimation."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from stclab.chanest import (
    PilotMap,
    build_pilot_map,
    design_wiener,
    estimate_channel,
    raw_block_estimates,
)
from stclab.channel import ChannelParams, apply_channel, generate_fading
from stclab.errors import InvalidCount, ShapeMismatch
from stclab.mathcore import bessel_j0


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def pilot_frame(pmap, h, p, rng):
    """Transmit pilots only (zeros elsewhere) through the channel."""
    x = np.zeros((pmap.lt, pmap.nf), dtype=complex)
    for s in pmap.block_starts:
        x[:, s : s + pmap.lt] = pmap.pilot_matrix
    return apply_channel(x, h, p, rng)


class TestPilotMap:
    def test_standard_frame_layout(self):
        pm = build_pilot_map(300, 2, 72)
        assert pm.n_blocks == 36
        assert pm.n_pilot == 72
        # edge flush: the first block occupies uses 1..2, the last 299..300
        assert pm.block_starts[0] == 0
        assert pm.block_starts[-1] == 298
        assert pm.data_positions.size == 228
        assert pm.pilot_positions.size == 72

    def test_minimal_two_blocks(self):
        pm = build_pilot_map(10, 1, 2)
        np.testing.assert_array_equal(pm.block_starts, [0, 9])

    def test_positions_partition_frame(self):
        pm = build_pilot_map(120, 2, 24)
        both = np.concatenate([pm.pilot_positions, pm.data_positions])
        np.testing.assert_array_equal(np.sort(both), np.arange(120))

    def test_blocks_do_not_overlap(self):
        pm = build_pilot_map(300, 2, 72)
        assert np.all(np.diff(pm.block_starts) >= pm.lt)

    def test_near_uniform_interior(self):
        pm = build_pilot_map(300, 2, 72)
        gaps = np.diff(pm.block_starts)
        assert gaps.max() - gaps.min() <= 1

    def test_pilot_matrix_is_orthogonal(self):
        for lt in (1, 2, 3, 4):
            pm = build_pilot_map(40, lt, 4 * lt)
            gram = pm.pilot_matrix @ pm.pilot_matrix.conj().T
            assert_allclose(gram, np.eye(lt), atol=1e-12)

    def test_count_validation(self):
        with pytest.raises(InvalidCount):
            build_pilot_map(300, 2, 71)  # not a multiple of lt
        with pytest.raises(InvalidCount):
            build_pilot_map(300, 2, 300)  # no room for data
        with pytest.raises(InvalidCount):
            build_pilot_map(300, 2, 2)  # fewer than two blocks
        with pytest.raises(InvalidCount):
            build_pilot_map(8, 2, 8)

    def test_block_centers(self):
        pm = build_pilot_map(10, 2, 4)
        assert_allclose(pm.block_centers, [0.5, 8.5])


class TestWienerDesign:
    def test_weight_shapes(self):
        pm = build_pilot_map(300, 2, 72)
        w = design_wiener(pm, 0.01, 30.0, 12)
        assert w.weights.shape == (300, 12)
        assert w.block_idx.shape == (300, 12)
        assert w.mmse.shape == (300,)

    def test_taps_bounded_by_blocks(self):
        pm = build_pilot_map(300, 2, 72)
        with pytest.raises(InvalidCount):
            design_wiener(pm, 0.01, 30.0, 37)

    def test_mmse_range(self):
        pm = build_pilot_map(300, 2, 72)
        w = design_wiener(pm, 0.01, 30.0, 12)
        assert np.all(w.mmse > 0.0)
        assert np.all(w.mmse < 1.0)

    def test_mmse_decreases_with_design_snr(self):
        pm = build_pilot_map(300, 2, 72)
        means = [
            design_wiener(pm, 0.01, snr, 12).mmse.mean() for snr in (10.0, 20.0, 30.0)
        ]
        assert means[0] > means[1] > means[2]

    def test_dc_pass_through_weights(self):
        # a static channel observed without noise must pass through exactly
        pm = build_pilot_map(300, 2, 72)
        w = design_wiener(pm, 0.0, np.inf, 8)
        assert_allclose(w.weights.sum(axis=1), np.ones(300), atol=1e-6)
        assert np.all(w.mmse < 1e-6)

    def test_symmetric_positions_mirror_weights(self):
        pm = build_pilot_map(20, 2, 4)  # blocks at 0 and 18, centers 0.5 / 18.5
        w = design_wiener(pm, 0.01, 20.0, 2)
        assert_allclose(np.sort(w.weights[9]), np.sort(w.weights[10]), atol=1e-12)
        assert_allclose(w.weights[9].sum(), w.weights[10].sum(), atol=1e-12)

    def test_nearest_blocks_selected(self):
        pm = build_pilot_map(300, 2, 72)
        w = design_wiener(pm, 0.01, 30.0, 4)
        centers = pm.block_centers
        for k in (0, 150, 299):
            d = np.abs(centers - k)
            expect = np.sort(np.argsort(d, kind="stable")[:4])
            np.testing.assert_array_equal(w.block_idx[k], expect)

    def test_analytic_mmse_formula(self):
        # mmse = 1 - p^T w with w = R^-1 p, independently recomputed
        pm = build_pilot_map(60, 2, 8)
        fdt, snr, taps = 0.02, 15.0, 3
        w = design_wiener(pm, fdt, snr, taps)
        sigma2 = 10 ** (-snr / 10)
        centers = pm.block_centers
        for k in (0, 17, 31, 59):
            idx = w.block_idx[k]
            r = bessel_j0(2 * np.pi * fdt * np.abs(centers[idx, None] - centers[None, idx]))
            r = r + sigma2 * np.eye(taps)
            p = bessel_j0(2 * np.pi * fdt * np.abs(centers[idx] - k))
            wk = np.linalg.solve(r, p)
            assert_allclose(w.weights[k], wk, atol=1e-9)
            assert_allclose(w.mmse[k], 1 - p @ wk, atol=1e-9)


class TestEstimation:
    def test_raw_block_estimates_noiseless(self):
        pm = build_pilot_map(20, 2, 8)
        p = ChannelParams(lt=2, lr=3, fdT=0.0, es=4.0, n0=1e-20)
        h = generate_fading(20, p, np.eye(2), np.eye(3), make_rng(0))
        frame = pilot_frame(pm, h, p, make_rng(1))
        raw = raw_block_estimates(frame, pm)
        assert raw.shape == (pm.n_blocks, 3, 2)
        for b, s in enumerate(pm.block_starts):
            assert_allclose(raw[b], h[s], atol=1e-8)

    def test_static_noiseless_estimate_is_exact(self):
        pm = build_pilot_map(300, 2, 72)
        w = design_wiener(pm, 0.0, np.inf, 8)
        p = ChannelParams(lt=2, lr=2, fdT=0.0, es=1.0, n0=1e-20)
        h = generate_fading(300, p, np.eye(2), np.eye(2), make_rng(2))
        frame = pilot_frame(pm, h, p, make_rng(3))
        hh = estimate_channel(frame, pm, w)
        assert hh.shape == (300, 2, 2)
        assert_allclose(hh, h, atol=1e-6)

    def test_estimate_unbiased(self):
        pm = build_pilot_map(100, 2, 20)
        w = design_wiener(pm, 0.01, 20.0, 5)
        p = ChannelParams(lt=2, lr=1, fdT=0.01, es=100.0, n0=1.0)
        bias = np.zeros((100, 1, 2), dtype=complex)
        n = 400
        for f in range(n):
            h = generate_fading(100, p, np.eye(2), np.eye(1), make_rng(40000 + f))
            frame = pilot_frame(pm, h, p, make_rng(50000 + f))
            bias += estimate_channel(frame, pm, w) - h
        assert np.abs(bias / n).max() < 0.02

    def test_mse_tracks_analytic(self):
        # matched design: empirical MSE within 1.25x of 1 - p^T R^-1 p
        fdt, snr_db = 0.005, 20.0
        pm = build_pilot_map(300, 2, 72)
        w = design_wiener(pm, fdt, snr_db, 12)
        es = 10 ** (snr_db / 10)
        p = ChannelParams(lt=2, lr=2, fdT=fdt, es=es, n0=1.0)
        err2 = np.zeros(300)
        n = 250
        for f in range(n):
            h = generate_fading(300, p, np.eye(2), np.eye(2), make_rng(60000 + f))
            frame = pilot_frame(pm, h, p, make_rng(70000 + f))
            err2 += np.sum(np.abs(estimate_channel(frame, pm, w) - h) ** 2, axis=(1, 2))
        mse = err2 / (n * 4)
        d = pm.data_positions
        assert mse[d].mean() <= 1.25 * w.mmse[d].mean()
        assert mse[d].mean() >= 0.5 * w.mmse[d].mean()

    def test_antennas_estimated_separately(self):
        # orthogonal pilots decouple transmit antennas: zeroing one antenna's
        # rows must not disturb the other's estimate
        pm = build_pilot_map(40, 2, 8)
        w = design_wiener(pm, 0.0, np.inf, 4)
        p = ChannelParams(lt=2, lr=1, fdT=0.0, es=1.0, n0=1e-20)
        h = generate_fading(40, p, np.eye(2), np.eye(1), make_rng(4))
        h_masked = h.copy()
        h_masked[:, :, 1] = 0.0
        fa = pilot_frame(pm, h, p, make_rng(5))
        fb = pilot_frame(pm, h_masked, p, make_rng(5))
        ha = estimate_channel(fa, pm, w)
        hb = estimate_channel(fb, pm, w)
        assert_allclose(ha[:, :, 0], hb[:, :, 0], atol=1e-8)
        assert_allclose(hb[:, :, 1], np.zeros((40, 1)), atol=1e-8)

    def test_frame_length_check(self):
        pm = build_pilot_map(300, 2, 72)
        w = design_wiener(pm, 0.01, 20.0, 4)
        p = ChannelParams(lt=2, lr=1, fdT=0.0, es=1.0, n0=1.0)
        h = generate_fading(200, p, np.eye(2), np.eye(1), make_rng(6))
        frame = apply_channel(np.zeros((2, 200), dtype=complex), h, p, make_rng(7))
        with pytest.raises(ShapeMismatch):
            raw_block_estimates(frame, pm)
        with pytest.raises(ShapeMismatch):
            estimate_channel(frame, pm, w)
