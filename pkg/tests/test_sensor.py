import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.ndimage import convolve1d

from activescan.geometry import OutOfRangeError
from activescan.perception import PrototypeSegmenter
from activescan.controller import confidence_level
from activescan.sensor import (
    BlurLaw,
    CameraModel,
    apply_motion_blur,
    blur_axis,
    blur_kernel_length,
    capture,
    footprint_slices,
)

NORTH, EAST = (0.0, 1.0), (1.0, 0.0)


class TestCamera:
    def test_footprint_from_gsd(self, camera):
        assert camera.footprint_width == pytest.approx(12.8)
        assert camera.footprint_height == pytest.approx(9.6)

    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"image_width": 0}, {"gsd": 0.0}, {"gimbal_pitch": -45.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            CameraModel(**kw)


class TestCapture:
    def test_center_crop_is_exact(self, small_world, camera):
        img = capture(small_world, camera, (15.0, 12.0))
        # center pixel (750, 600); crop starts half an image before it
        assert np.array_equal(img, small_world.orthophoto[600 - 240:600 + 240, 750 - 320:750 + 320])

    def test_same_pose_same_image(self, small_world, camera):
        assert np.array_equal(capture(small_world, camera, (10.0, 9.0)), capture(small_world, camera, (10.0, 9.0)))

    def test_one_meter_is_fifty_pixels(self, small_world, camera):
        a = capture(small_world, camera, (10.0, 9.0))
        b = capture(small_world, camera, (11.0, 9.0))
        assert np.array_equal(a[:, 50:], b[:, :-50])

    def test_out_of_extent(self, small_world, camera):
        with pytest.raises(OutOfRangeError):
            capture(small_world, camera, (3.0, 12.0))

    def test_footprint_dims(self, small_world, camera):
        rows, cols = footprint_slices(small_world.frame, camera, (15.0, 12.0))
        assert rows.stop - rows.start == 480 and cols.stop - cols.start == 640


class TestBlurLaw:
    @pytest.mark.parametrize("s, k", [(2.0, 1), (4.0, 5), (6.0, 9), (1.0, 1), (0.0, 1), (2.999, 1), (3.0, 3), (7.0, 11)])
    def test_mapping(self, s, k):
        assert blur_kernel_length(s) == k

    def test_negative_speed(self):
        with pytest.raises(ValueError):
            blur_kernel_length(-1.0)

    def test_override(self):
        assert BlurLaw(threshold=1.0, step=0.5)(2.0) == 5

    @given(st.floats(0, 50))
    def test_odd_and_monotone(self, s):
        k = blur_kernel_length(s)
        assert k % 2 == 1 and k >= 1
        assert blur_kernel_length(s + 0.5) >= k


class TestMotionBlur:
    def test_identity(self, rng):
        img = rng.integers(0, 256, (20, 30, 3), dtype=np.uint8)
        out = apply_motion_blur(img, 1, NORTH)
        assert np.array_equal(out, img) and out is not img

    @pytest.mark.parametrize("k", [3, 5, 9])
    def test_constant_unchanged(self, k):
        img = np.full((20, 20, 3), 77, np.uint8)
        assert np.array_equal(apply_motion_blur(img, k, EAST), img)

    def test_line_spreads_horizontally(self):
        img = np.ones((5, 9), dtype=np.float64)
        img[:, 4] = 0.0
        out = apply_motion_blur(img, 3, EAST)
        expected_row = np.array([1, 1, 1, 2 / 3, 2 / 3, 2 / 3, 1, 1, 1])
        np.testing.assert_allclose(out, np.tile(expected_row, (5, 1)), atol=1e-6)

    def test_vertical_heading_blurs_rows(self):
        img = np.ones((9, 5), dtype=np.float64)
        img[4, :] = 0.0
        out = apply_motion_blur(img, 3, NORTH)
        np.testing.assert_allclose(out[3:6], 2 / 3, atol=1e-6)
        np.testing.assert_allclose(apply_motion_blur(img, 3, EAST), img)

    @pytest.mark.parametrize("k", [0, 2, -3, 4])
    def test_invalid_kernel(self, k):
        with pytest.raises(ValueError):
            apply_motion_blur(np.zeros((4, 4)), k, NORTH)

    def test_diagonal_heading_rejected(self):
        with pytest.raises(ValueError):
            blur_axis((0.6, 0.8))

    @pytest.mark.parametrize("k", [3, 7])
    def test_matches_reference_convolution(self, rng, k):
        img = rng.integers(0, 256, (40, 50, 3), dtype=np.uint8)
        ref = convolve1d(img.astype(np.float64), np.full(k, 1.0 / k), axis=1, mode="nearest")
        out = apply_motion_blur(img, k, EAST)
        assert np.max(np.abs(out.astype(np.float64) - ref)) <= 0.5 + 1e-3

    @given(st.sampled_from([3, 5, 7, 9]), st.integers(0, 2**31))
    def test_mean_preserved(self, k, seed):
        img = np.random.default_rng(seed).integers(0, 256, (60, 80, 3), dtype=np.uint8)
        out = apply_motion_blur(img, k, NORTH)
        assert abs(out.mean() - img.mean()) < 0.5

    def test_blur_commutes_with_crop_on_interior(self, small_world, camera):
        k = 7
        rows, cols = footprint_slices(small_world.frame, camera, (15.0, 12.0))
        big = apply_motion_blur(np.asarray(small_world.orthophoto), k, NORTH)[rows, cols]
        small = apply_motion_blur(small_world.orthophoto[rows, cols], k, NORTH)
        m = k // 2
        assert np.array_equal(big[m:-m], small[m:-m])

    def test_confidence_non_increasing_in_k(self, small_world, camera, segmenter):
        img = capture(small_world, camera, (8.0, 12.0))
        cls = [confidence_level(segmenter(apply_motion_blur(img, k, NORTH))) for k in (1, 3, 5, 7, 9)]
        assert all(b <= a for a, b in zip(cls, cls[1:]))
