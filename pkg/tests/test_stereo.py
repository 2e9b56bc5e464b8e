"""Stereo matching pipeline tests: census codes, cost volumes, path
aggregation, winner-take-all readout, left/right consistency, and the
composed block-matching / semi-global pipelines."""

import numpy as np
import pytest

from branchrange import (
    COST_INVALID,
    INVALID_DISPARITY,
    MatchParams,
    block_match,
    census_transform,
    lr_consistency,
    matching_cost,
    mirror_cost_volume,
    postprocess,
    sgbm,
    sgm_aggregate,
    wta_disparity,
)
from branchrange.errors import DimensionMismatch, WindowTooLarge

import oracles
from conftest import make_shifted_pair


class TestMatchParams:
    def test_census_default_penalties_unscaled(self):
        p = MatchParams(metric="census", window_radius=2)
        assert (p.p1, p.p2) == (8, 32)

    def test_sad_default_penalties_scale_with_window_area(self):
        p = MatchParams(metric="sad", window_radius=2)
        assert (p.p1, p.p2) == (8 * 25, 32 * 25)
        p = MatchParams(metric="sad", window_radius=1)
        assert (p.p1, p.p2) == (8 * 9, 32 * 9)

    def test_explicit_penalties_kept(self):
        p = MatchParams(metric="sad", p1=3, p2=7)
        assert (p.p1, p.p2) == (3, 7)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(d_max=0),
            dict(window_radius=0),
            dict(metric="ssd"),
            dict(p1=10, p2=5),
            dict(p1=-1, p2=5),
            dict(paths=5),
            dict(lr_tol=-0.1),
            dict(speckle_max_size=-1),
            dict(speckle_diff=-1.0),
        ],
    )
    def test_invalid_params_rejected(self, kwargs):
        with pytest.raises(ValueError):
            MatchParams(**kwargs)


class TestCensusTransform:
    def test_constant_image_all_zero_codes(self):
        img = np.full((9, 9), 77, dtype=np.uint8)
        for radius in (1, 2, 3):
            assert not census_transform(img, radius).any()

    def test_bright_center_sets_all_eight_bits(self):
        img = np.zeros((5, 5), dtype=np.uint8)
        img[2, 2] = 200
        codes = census_transform(img, 1)
        assert codes[2, 2] == 0xFF
        # Equal-valued neighborhoods (strict <) contribute nothing, and the
        # bright pixel never counts as darker than its neighbors.
        codes[2, 2] = 0
        assert not codes.any()

    def test_matches_brute_force(self):
        rng = np.random.default_rng(30)
        img = rng.integers(0, 256, (7, 7), dtype=np.uint8)
        got = census_transform(img, 1)
        assert np.array_equal(got, oracles.census_brute(img, 1))

    def test_codes_are_uint64(self):
        img = np.zeros((5, 5), dtype=np.uint8)
        assert census_transform(img, 1).dtype == np.uint64

    def test_window_limits(self):
        img = np.zeros((5, 5), dtype=np.uint8)
        with pytest.raises(WindowTooLarge):
            census_transform(img, 0)
        with pytest.raises(WindowTooLarge):
            census_transform(img, 3)  # 7x7 window does not fit 5x5
        with pytest.raises(WindowTooLarge):
            census_transform(np.zeros((9, 9), dtype=np.uint8), 4)


class TestMatchingCost:
    def test_shape_and_dtype(self):
        rng = np.random.default_rng(31)
        left, right = make_shifted_pair(rng, 8, 16, 2)
        cost = matching_cost(left, right, MatchParams(d_max=5, metric="sad"))
        assert cost.shape == (8, 16, 6)
        assert cost.dtype == np.uint16

    def test_sad_zero_plane_at_true_shift(self):
        rng = np.random.default_rng(32)
        left, right = make_shifted_pair(rng, 10, 24, 3)
        params = MatchParams(d_max=6, metric="sad", window_radius=2)
        cost = matching_cost(left, right, params)
        # Every window sample with both pixels in frame agrees, so the
        # truncated SAD is exactly zero at d = 3 for every column x >= 3.
        assert not cost[:, 3:, 3].any()
        assert (cost[:, :3, 3] == COST_INVALID).all()

    def test_census_zero_interior_at_true_shift(self):
        rng = np.random.default_rng(33)
        left, right = make_shifted_pair(rng, 12, 28, 3)
        r = 2
        params = MatchParams(d_max=6, metric="census", window_radius=r)
        cost = matching_cost(left, right, params)
        # Interior columns see identical census neighborhoods in both views.
        assert not cost[:, 3 + r : 28 - r, 3].any()

    def test_identical_pair_zero_at_d0(self):
        rng = np.random.default_rng(34)
        img = rng.integers(0, 256, (9, 13), dtype=np.uint8)
        for metric in ("sad", "census"):
            cost = matching_cost(img, img, MatchParams(d_max=4, metric=metric))
            assert not cost[:, :, 0].any()

    def test_out_of_frame_column_marked_invalid(self):
        rng = np.random.default_rng(35)
        left = rng.integers(0, 256, (7, 9), dtype=np.uint8)
        right = rng.integers(0, 256, (7, 9), dtype=np.uint8)
        for metric in ("sad", "census"):
            cost = matching_cost(left, right, MatchParams(d_max=5, metric=metric))
            for d in range(6):
                assert (cost[:, :d, d] == COST_INVALID).all()
                assert (cost[:, d:, d] < COST_INVALID).all()

    def test_matches_brute_oracle(self):
        rng = np.random.default_rng(36)
        left = rng.integers(0, 256, (8, 11), dtype=np.uint8)
        right = rng.integers(0, 256, (8, 11), dtype=np.uint8)
        got = matching_cost(
            left, right, MatchParams(d_max=4, metric="sad", window_radius=1)
        )
        assert np.array_equal(got, oracles.sad_volume_brute(left, right, 4, 1))

    def test_shape_mismatch_rejected(self):
        a = np.zeros((8, 8), dtype=np.uint8)
        b = np.zeros((8, 9), dtype=np.uint8)
        with pytest.raises(DimensionMismatch):
            matching_cost(a, b, MatchParams(d_max=4))
        with pytest.raises(DimensionMismatch):
            matching_cost(a.ravel(), a.ravel(), MatchParams(d_max=4))

    def test_window_too_large_rejected(self):
        a = np.zeros((4, 40), dtype=np.uint8)
        with pytest.raises(WindowTooLarge):
            matching_cost(a, a, MatchParams(d_max=4, window_radius=2, metric="sad"))


class TestSgmAggregate:
    def test_zero_penalties_collapse_to_scaled_volume(self):
        rng = np.random.default_rng(37)
        for paths in (4, 8):
            cost = rng.integers(0, 2000, (9, 12, 7)).astype(np.uint16)
            params = MatchParams(d_max=6, p1=0, p2=0, paths=paths)
            agg = sgm_aggregate(cost, params)
            # With zero penalties each directional pass returns the raw
            # volume, so the aggregate is exactly paths * C (no saturation
            # for these magnitudes) and the per-pixel argmin is unchanged.
            assert np.array_equal(agg, cost.astype(np.uint32) * paths)
            assert np.array_equal(np.argmin(agg, 2), np.argmin(cost, 2))

    def test_single_pixel_image(self):
        cost = np.array([[[7, 3, 9]]], dtype=np.uint16)
        for paths in (4, 8):
            params = MatchParams(d_max=2, p1=8, p2=32, paths=paths)
            agg = sgm_aggregate(cost, params)
            assert np.array_equal(agg, np.minimum(cost.astype(np.uint32) * paths, 65535))

    def test_matches_literal_recursion(self):
        rng = np.random.default_rng(38)
        cost = rng.integers(0, 65536, (8, 8, 8)).astype(np.uint16)
        for paths in (4, 8):
            params = MatchParams(d_max=7, p1=8, p2=32, paths=paths)
            got = sgm_aggregate(cost, params)
            assert np.array_equal(got, oracles.sgm_literal(cost, 8, 32, paths))

    def test_invalid_entries_stay_saturated(self):
        rng = np.random.default_rng(39)
        cost = rng.integers(0, 500, (6, 9, 5)).astype(np.uint16)
        cost[:, :2, 3] = COST_INVALID
        agg = sgm_aggregate(cost, MatchParams(d_max=4))
        assert (agg[:, :2, 3] == COST_INVALID).all()

    def test_rejects_non_volume(self):
        with pytest.raises(DimensionMismatch):
            sgm_aggregate(np.zeros((4, 4), dtype=np.uint16), MatchParams(d_max=3))


class TestWtaDisparity:
    def test_parabola_example(self):
        cost = np.array([[[5, 1, 7]]], dtype=np.uint16)
        assert wta_disparity(cost, subpixel=False)[0, 0] == 1.0
        # a = 5-1, b = 7-1 -> offset (4-6)/(2*10) = -0.1
        assert wta_disparity(cost, subpixel=True)[0, 0] == np.float32(0.9)

    def test_ties_take_lowest_index(self):
        cost = np.array([[[3, 3, 5]]], dtype=np.uint16)
        assert wta_disparity(cost)[0, 0] == 0.0

    def test_boundary_minima_get_no_offset(self):
        lo = np.array([[[1, 5, 9]]], dtype=np.uint16)
        hi = np.array([[[9, 5, 1]]], dtype=np.uint16)
        assert wta_disparity(lo, subpixel=True)[0, 0] == 0.0
        assert wta_disparity(hi, subpixel=True)[0, 0] == 2.0

    def test_offset_clamped_inside_open_interval(self):
        # a = 1, b = 0 gives a raw offset of exactly +0.5, which must be
        # pulled strictly inside so floor(d + 0.5) still rounds to d*.
        cost = np.array([[[5, 4, 4, 9]]], dtype=np.uint16)
        got = wta_disparity(cost, subpixel=True)[0, 0]
        assert 1.0 < got < 1.5
        assert np.floor(got + 0.5) == 1.0

    def test_invalid_minimum_propagates(self):
        cost = np.full((2, 3, 4), COST_INVALID, dtype=np.uint16)
        got = wta_disparity(cost)
        assert (got == INVALID_DISPARITY).all()
        cost[1, 1, 2] = 10
        got = wta_disparity(cost)
        assert got[1, 1] == 2.0
        assert (got == INVALID_DISPARITY).sum() == 5

    def test_matches_brute_force(self):
        rng = np.random.default_rng(40)
        cost = rng.integers(0, 400, (7, 9, 6)).astype(np.uint16)
        cost[rng.random((7, 9, 6)) < 0.05] = COST_INVALID
        for subpixel in (False, True):
            got = wta_disparity(cost, subpixel=subpixel)
            assert np.array_equal(got, oracles.wta_brute(cost, subpixel))

    def test_two_level_volume_has_no_interior(self):
        cost = np.array([[[4, 2]]], dtype=np.uint16)
        assert wta_disparity(cost, subpixel=True)[0, 0] == 1.0


class TestMirrorAndConsistency:
    def test_mirror_readout(self):
        rng = np.random.default_rng(41)
        cost = rng.integers(0, 100, (4, 6, 3)).astype(np.uint16)
        mirrored = mirror_cost_volume(cost)
        for y in range(4):
            for x in range(6):
                for d in range(3):
                    if x + d < 6:
                        assert mirrored[y, x, d] == cost[y, x + d, d]
                    else:
                        assert mirrored[y, x, d] == COST_INVALID

    def test_consistent_match_survives(self):
        dl = np.full((1, 16), INVALID_DISPARITY, dtype=np.float32)
        dr = np.full((1, 16), INVALID_DISPARITY, dtype=np.float32)
        dl[0, 10] = 5.0
        dr[0, 5] = 5.0
        out = lr_consistency(dl, dr, 1.0)
        assert out[0, 10] == 5.0

    def test_disagreement_beyond_tolerance_invalidated(self):
        dl = np.full((1, 16), INVALID_DISPARITY, dtype=np.float32)
        dr = np.full((1, 16), INVALID_DISPARITY, dtype=np.float32)
        dl[0, 10] = 5.0
        dr[0, 5] = 3.0
        out = lr_consistency(dl, dr, 1.0)
        assert out[0, 10] == INVALID_DISPARITY

    def test_out_of_frame_projection_invalidated(self):
        dl = np.full((1, 16), INVALID_DISPARITY, dtype=np.float32)
        dr = np.full((1, 16), 2.0, dtype=np.float32)
        dl[0, 1] = 5.0  # x - round(d) = -4
        out = lr_consistency(dl, dr, 10.0)
        assert out[0, 1] == INVALID_DISPARITY

    def test_invalid_right_disparity_rejects_even_within_tolerance(self):
        dl = np.zeros((1, 4), dtype=np.float32)  # d = 0 everywhere (valid)
        dr = np.full((1, 4), INVALID_DISPARITY, dtype=np.float32)
        out = lr_consistency(dl, dr, 1.0)  # |0 - (-1)| = 1 <= tol, but dr invalid
        assert (out == INVALID_DISPARITY).all()

    def test_fractional_disparity_rounds_half_up(self):
        dl = np.full((1, 16), INVALID_DISPARITY, dtype=np.float32)
        dr = np.full((1, 16), INVALID_DISPARITY, dtype=np.float32)
        dl[0, 10] = 2.5  # must probe x_r = 10 - 3 = 7, not 10 - 2 = 8
        dr[0, 7] = 2.5
        dr[0, 8] = 99.0
        out = lr_consistency(dl, dr, 1.0)
        assert out[0, 10] == np.float32(2.5)

    def test_invalid_left_pixels_stay_invalid(self):
        dl = np.full((2, 8), INVALID_DISPARITY, dtype=np.float32)
        dr = np.zeros((2, 8), dtype=np.float32)
        out = lr_consistency(dl, dr, 1.0)
        assert (out == INVALID_DISPARITY).all()

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            lr_consistency(np.zeros((2, 3)), np.zeros((3, 2)), 1.0)


class TestPostprocess:
    def test_constant_map_unchanged(self):
        disp = np.full((8, 8), 12.0, dtype=np.float32)
        out = postprocess(disp, MatchParams(d_max=16))
        assert np.array_equal(out, disp)

    def test_single_outlier_pulled_to_neighborhood_median(self):
        disp = np.full((7, 7), 10.0, dtype=np.float32)
        disp[3, 3] = 60.0
        out = postprocess(disp, MatchParams(d_max=64))
        assert out[3, 3] == 10.0

    def test_invalid_pixels_never_become_valid(self):
        rng = np.random.default_rng(42)
        disp = rng.uniform(0, 20, (10, 10)).astype(np.float32)
        disp[rng.random((10, 10)) < 0.4] = INVALID_DISPARITY
        out = postprocess(disp, MatchParams(d_max=32))
        assert ((disp == INVALID_DISPARITY) <= (out == INVALID_DISPARITY)).all()

    def test_small_mixed_component_removed(self):
        disp = np.full((9, 9), INVALID_DISPARITY, dtype=np.float32)
        disp[4, 4:8] = [2.0, 2.0, 30.0, 30.0]
        # The median keeps both plateaus, so the 4-pixel component still
        # spans a range of 28 > 1 and is small enough to be dropped.
        params = MatchParams(d_max=64, speckle_max_size=8, speckle_diff=1.0)
        out = postprocess(disp, params)
        assert (out == INVALID_DISPARITY).all()

    def test_small_flat_component_kept(self):
        disp = np.full((9, 9), INVALID_DISPARITY, dtype=np.float32)
        disp[4, 4] = 5.0
        disp[4, 5] = 5.0
        params = MatchParams(d_max=64, speckle_max_size=8, speckle_diff=1.0)
        out = postprocess(disp, params)
        assert out[4, 4] == 5.0 and out[4, 5] == 5.0

    def test_large_component_kept_despite_range(self):
        disp = np.tile(np.arange(20, dtype=np.float32), (20, 1))
        params = MatchParams(d_max=64, speckle_max_size=8, speckle_diff=1.0)
        out = postprocess(disp, params)
        assert (out != INVALID_DISPARITY).all()

    def test_corner_even_count_median(self):
        disp = np.full((3, 3), INVALID_DISPARITY, dtype=np.float32)
        disp[0, 0], disp[0, 1], disp[1, 0], disp[1, 1] = 1.0, 2.0, 4.0, 8.0
        params = MatchParams(d_max=64, speckle_max_size=0)
        out = postprocess(disp, params)
        assert out[0, 0] == np.float32(3.0)  # mean of middle pair (2, 4)

    def test_median_stage_matches_brute(self):
        rng = np.random.default_rng(43)
        disp = rng.uniform(0, 64, (11, 13)).astype(np.float32)
        disp[rng.random((11, 13)) < 0.3] = INVALID_DISPARITY
        params = MatchParams(d_max=64, speckle_max_size=0)
        out = postprocess(disp, params)
        assert np.array_equal(out, oracles.median3x3_brute(disp))


class TestBlockMatch:
    def test_recovers_integer_shift_exactly(self):
        rng = np.random.default_rng(44)
        left, right = make_shifted_pair(rng, 16, 48, 4)
        params = MatchParams(d_max=8, metric="sad", window_radius=2)
        disp = block_match(left, right, params, subpixel=False)
        assert (disp[:, 4:] == 4.0).all()

    def test_subpixel_recovery_within_half_pixel(self):
        rng = np.random.default_rng(45)
        left, right = make_shifted_pair(rng, 16, 48, 4)
        params = MatchParams(d_max=8, metric="sad", window_radius=2)
        disp = block_match(left, right, params, subpixel=True)
        assert np.abs(disp[:, 4:] - 4.0).max() < 0.5

    def test_identical_pair_gives_zero(self):
        rng = np.random.default_rng(46)
        img = rng.integers(0, 256, (12, 20), dtype=np.uint8)
        disp = block_match(img, img, MatchParams(d_max=6, metric="sad"))
        assert (disp == 0.0).all()

    def test_is_exactly_the_two_stage_composition(self):
        rng = np.random.default_rng(47)
        left, right = make_shifted_pair(rng, 10, 30, 3)
        params = MatchParams(d_max=6, metric="census", window_radius=2)
        direct = block_match(left, right, params)
        staged = wta_disparity(matching_cost(left, right, params))
        assert np.array_equal(direct, staged)


class TestSgbm:
    def test_recovers_shift_on_textured_pair(self):
        rng = np.random.default_rng(48)
        left, right = make_shifted_pair(rng, 64, 64, 6)
        disp = sgbm(left, right, MatchParams(d_max=16))
        region = disp[:, 6:]
        valid = region != INVALID_DISPARITY
        assert valid.mean() >= 0.95
        assert np.abs(region[valid] - 6.0).max() <= 0.5

    def test_uncorrelated_views_mostly_invalidated(self):
        rng = np.random.default_rng(49)
        base = np.full((64, 64), 128.0)
        left = np.clip(base + rng.normal(0, 30, (64, 64)), 0, 255).astype(np.uint8)
        right = np.clip(base + rng.normal(0, 30, (64, 64)), 0, 255).astype(np.uint8)
        disp = sgbm(left, right, MatchParams(d_max=16))
        assert (disp == INVALID_DISPARITY).mean() > 0.5

    def test_output_range_contract(self):
        rng = np.random.default_rng(50)
        left, right = make_shifted_pair(rng, 48, 48, 5)
        params = MatchParams(d_max=12)
        disp = sgbm(left, right, params)
        valid = disp != INVALID_DISPARITY
        assert valid.any()
        assert disp[valid].min() >= 0.0
        assert disp[valid].max() <= params.d_max
        frac = disp[valid] - np.floor(disp[valid] + 0.5)
        assert (np.abs(frac) < 0.5).all()

    def test_huge_penalties_saturate_without_wrapping(self):
        rng = np.random.default_rng(51)
        left, right = make_shifted_pair(rng, 24, 24, 3)
        params = MatchParams(d_max=8, p1=60000, p2=65000)
        disp = sgbm(left, right, params)
        valid = disp != INVALID_DISPARITY
        assert (disp[valid] >= 0.0).all() and (disp[valid] <= 8.0).all()

    def test_deterministic(self):
        rng = np.random.default_rng(52)
        left, right = make_shifted_pair(rng, 32, 32, 4)
        params = MatchParams(d_max=8)
        assert np.array_equal(sgbm(left, right, params), sgbm(left, right, params))
