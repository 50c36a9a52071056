import itertools
import math

import numpy as np
import pytest

from ecg_imagegen.models import CreaseSpec, ParameterError, QuiltSpec, RasterImage
from ecg_imagegen.services.crease_wrinkle import (
    BlockSizeError,
    CreaseParameterError,
    apply_creases,
    blend_wrinkles,
    crease_mask,
    cumulative_min_error,
    fractal_noise_texture,
    gaussian_kernel,
    generate_crease_lines,
    min_error_boundary_cut,
    quilt_texture,
    wrinkle_texture,
)


def gray_image(values: np.ndarray) -> RasterImage:
    values = np.asarray(values, dtype=np.uint8)
    return RasterImage(np.repeat(values[..., None], 3, axis=2))


def all_seams(n_rows: int, n_cols: int) -> np.ndarray:
    """Every path with one column per row and steps of at most one column"""
    moves = np.array(list(itertools.product((-1, 0, 1), repeat=n_rows - 1)), dtype=np.int64)
    moves = moves.reshape(3 ** (n_rows - 1), n_rows - 1)
    paths = []
    for start in range(n_cols):
        p = np.concatenate([np.full((len(moves), 1), start), start + np.cumsum(moves, axis=1)], axis=1)
        paths.append(p[np.all((p >= 0) & (p < n_cols), axis=1)])
    return np.vstack(paths)


class TestCreaseLines:
    def test_start_points(self):
        starts, _ = generate_crease_lines(3, 135.0, 2200, 1700)
        assert starts == [(975.0, 0.0), (1950.0, 0.0), (2200.0, 725.0)]

    def test_none(self):
        assert generate_crease_lines(0, 45.0, 100, 100) == ([], [])

    def test_end_point_on_slope(self):
        starts, ends = generate_crease_lines(1, 135.0, 2200, 1700)
        (sx, sy), (ex, ey) = starts[0], ends[0]
        assert (sx, sy) == (1950.0, 0.0)
        # slope tan(45 deg) = 1 through the start
        assert ey - sy == pytest.approx(ex - sx)
        assert (ex, ey) == pytest.approx((2200.0, 250.0))

    def test_vertical(self):
        starts, ends = generate_crease_lines(2, 90.0, 300, 200)
        for (sx, _), (ex, ey) in zip(starts, ends):
            assert ex == sx
            assert min(abs(ey), abs(ey - 200.0)) < 1e-9

    def test_end_points_stay_on_page(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            theta = float(rng.uniform(1.0, 179.0))
            w, h = int(rng.integers(50, 3000)), int(rng.integers(50, 3000))
            starts, ends = generate_crease_lines(n, theta, w, h)
            for x, y in starts + ends:
                assert 0.0 <= x <= w and 0.0 <= y <= h
            on_edge = [min(x, w - x, y, h - y) < 1e-6 for x, y in ends]
            assert all(on_edge)

    def test_start_gap_along_perimeter(self):
        starts, _ = generate_crease_lines(4, 60.0, 400, 300)
        arc = [x + y for x, y in starts]
        assert np.allclose(np.diff(arc), 700 / 5)

    @pytest.mark.parametrize("n, theta, w, h", [(-1, 45, 10, 10), (1, 0, 10, 10), (1, 180, 10, 10), (1, 45, 0, 10)])
    def test_invalid(self, n, theta, w, h):
        with pytest.raises(CreaseParameterError):
            generate_crease_lines(n, theta, w, h)


class TestGaussianKernel:
    def test_normalized(self):
        rng = np.random.default_rng(1)
        for sigma in rng.uniform(0.3, 8.0, 100):
            assert gaussian_kernel(float(sigma)).sum() == pytest.approx(1.0, abs=1e-12)

    def test_shape_and_falloff(self):
        k = gaussian_kernel(1.0, radius=3)
        assert k.shape == (7, 7)
        assert k[3, 3] / k[3, 6] == pytest.approx(math.exp(4.5))
        assert np.allclose(k, k.T) and np.allclose(k, k[::-1, ::-1])

    def test_default_radius(self):
        assert gaussian_kernel(2.0).shape == (13, 13)

    def test_invalid_sigma(self):
        with pytest.raises(CreaseParameterError):
            gaussian_kernel(0.0)


class TestApplyCreases:
    def test_zero_intensity_or_count(self):
        img = RasterImage.blank(60, 40, (200, 180, 160))
        assert apply_creases(img, CreaseSpec(n=3, intensity=0.0)) == img
        assert apply_creases(img, CreaseSpec(n=0, intensity=0.5)) == img

    def test_unblurred_full_intensity_is_black(self):
        img = RasterImage.blank(80, 60)
        spec = CreaseSpec(n=1, theta_deg=135.0, intensity=1.0, sigma_px=0.0, line_width_px=1)
        out = apply_creases(img, spec)
        line = crease_mask(80, 60, spec) == 1.0
        assert line.any()
        assert np.all(out.pixels[line] == 0)
        assert np.all(out.pixels[~line] == 255)

    def test_darkness_falls_off_with_distance(self):
        img = RasterImage.blank(200, 100)
        spec = CreaseSpec(n=1, theta_deg=90.0, intensity=0.8, sigma_px=3.0, line_width_px=2)
        out = apply_creases(img, spec)
        row = out.pixels[50, :, 0].astype(int)
        right = row[151:165]
        left = row[136:151][::-1]
        assert np.all(np.diff(right) >= 0)
        assert np.all(np.diff(left) >= 0)
        assert row[150] < 255 and row[180] == 255

    def test_lighten(self):
        img = RasterImage.blank(100, 100, (100, 100, 100))
        spec = CreaseSpec(n=2, theta_deg=45.0, intensity=0.6, sigma_px=2.0, lighten=True)
        out = apply_creases(img, spec)
        assert np.all(out.pixels >= img.pixels)
        assert np.any(out.pixels > img.pixels)

    def test_angle_changes_mask(self):
        a = crease_mask(120, 80, CreaseSpec(n=2, theta_deg=45.0))
        b = crease_mask(120, 80, CreaseSpec(n=2, theta_deg=120.0))
        assert not np.array_equal(a, b)

    def test_spec_validation(self):
        with pytest.raises(ParameterError):
            CreaseSpec(n=1, intensity=1.5)


class TestBoundaryCut:
    def test_cumulative_error(self):
        e = np.array([[1, 2, 3], [5, 2, 4], [5, 4, 3]], dtype=float)
        assert cumulative_min_error(e).tolist() == [[1, 2, 3], [6, 3, 6], [8, 7, 6]]

    def test_example_path(self):
        # ov2 = 0 so the error surface is ov1 squared
        e = np.array([[1, 2, 3], [5, 2, 4], [5, 4, 3]], dtype=float)
        cut = min_error_boundary_cut(np.sqrt(e), np.zeros((3, 3)))
        assert cut.path == [0, 1, 2]
        assert cut.cost == pytest.approx(6.0)

    def test_equal_blocks_cut_left(self):
        block = np.random.default_rng(0).random((6, 4))
        cut = min_error_boundary_cut(block, block)
        assert cut.path == [0] * 6
        assert cut.cost == 0.0

    def test_single_column(self):
        cut = min_error_boundary_cut(np.ones((5, 1)), np.zeros((5, 1)))
        assert cut.path == [0] * 5
        assert cut.cost == 5.0

    def test_shape_mismatch(self):
        with pytest.raises(BlockSizeError):
            min_error_boundary_cut(np.zeros((3, 2)), np.zeros((3, 3)))

    def test_color_blocks_sum_channels(self):
        rng = np.random.default_rng(2)
        a, b = rng.random((5, 3, 3)), rng.random((5, 3, 3))
        gray = min_error_boundary_cut(a, b)
        e = ((a - b) ** 2).sum(axis=2)
        assert gray.cost == pytest.approx(min(e[np.arange(5), p].sum() for p in all_seams(5, 3)))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n, k = int(rng.integers(1, 9)), int(rng.integers(1, 7))
            ov1, ov2 = rng.random((n, k)), rng.random((n, k))
            cut = min_error_boundary_cut(ov1, ov2)
            e = (ov1 - ov2) ** 2
            seams = all_seams(n, k)
            costs = e[np.arange(n), seams].sum(axis=1)
            assert cut.cost == pytest.approx(costs.min(), abs=1e-12)
            assert e[np.arange(n), cut.path].sum() == pytest.approx(cut.cost, abs=1e-12)
            assert all(abs(a - b) <= 1 for a, b in zip(cut.path, cut.path[1:]))
            assert all(0 <= c < k for c in cut.path)


class TestQuilting:
    def test_single_block_is_a_seed_patch(self):
        seed = np.random.default_rng(4).integers(0, 256, (16, 16))
        out = quilt_texture(QuiltSpec(block_px=6, out_w=6, out_h=6, seed_texture=gray_image(seed), rng_seed=1))
        patch = out.pixels[..., 0]
        assert out.size == (6, 6)
        assert any(np.array_equal(patch, seed[y:y + 6, x:x + 6]) for y in range(11) for x in range(11))

    def test_constant_seed(self):
        seed = gray_image(np.full((20, 20), 77))
        out = quilt_texture(QuiltSpec(block_px=8, out_w=50, out_h=30, seed_texture=seed, rng_seed=0))
        assert out.size == (50, 30)
        assert np.all(out.pixels == 77)

    def test_two_blocks_match_brute_force(self):
        seed = np.random.default_rng(5).integers(0, 256, (4, 4))
        spec = QuiltSpec(block_px=3, out_w=4, out_h=3, seed_texture=gray_image(seed),
                         rng_seed=2, overlap_px=2, candidates=4)
        out = quilt_texture(spec).pixels[..., 0].astype(int)

        positions = [(y, x) for y in range(2) for x in range(2)]
        expected = []
        for py, px in positions:
            first = seed[py:py + 3, px:px + 3].astype(float)
            if not np.array_equal(first[:, 0], out[:, 0]):
                continue
            ssd = [np.sum((seed[y:y + 3, x:x + 2] - first[:, 1:]) ** 2) for y, x in positions]
            for y, x in (positions[i] for i in np.flatnonzero(np.isclose(ssd, min(ssd)))):
                second = seed[y:y + 3, x:x + 3].astype(float)
                e = (first[:, 1:] - second[:, :2]) ** 2
                seams = all_seams(3, 2)
                costs = e[np.arange(3), seams].sum(axis=1)
                for seam in seams[np.isclose(costs, costs.min())]:
                    canvas = np.zeros((3, 4))
                    canvas[:, :3] = first
                    for r, c in enumerate(seam):
                        canvas[r, 1 + c:] = second[r, c:]
                    expected.append(canvas.astype(int))
        assert any(np.array_equal(out, candidate) for candidate in expected)

    def test_deterministic(self):
        seed = fractal_noise_texture(48, seed=3)
        spec = QuiltSpec(block_px=12, out_w=40, out_h=30, seed_texture=seed, rng_seed=8, candidates=5)
        assert quilt_texture(spec) == quilt_texture(spec)

    def test_seed_smaller_than_block(self):
        seed = gray_image(np.zeros((5, 5)))
        with pytest.raises(BlockSizeError):
            quilt_texture(QuiltSpec(block_px=6, out_w=10, out_h=10, seed_texture=seed))

    def test_spec_validation(self):
        seed = gray_image(np.zeros((10, 10)))
        with pytest.raises(ParameterError):
            QuiltSpec(block_px=4, out_w=10, out_h=10, seed_texture=seed, overlap_px=4)
        with pytest.raises(ParameterError):
            QuiltSpec(block_px=4, out_w=3, out_h=10, seed_texture=seed)


class TestWrinkles:
    def test_texture_size(self):
        texture = wrinkle_texture(300, 200, block_px=12, seed=1, candidates=4, seed_texture_px=40)
        assert texture.size == (300, 200)
        assert texture == wrinkle_texture(300, 200, block_px=12, seed=1, candidates=4, seed_texture_px=40)

    def test_blend_identity_cases(self):
        img = RasterImage.blank(40, 30, (200, 150, 100))
        texture = fractal_noise_texture(32, seed=0)
        assert blend_wrinkles(img, texture, 0.0) == img
        assert blend_wrinkles(img, gray_image(np.full((30, 40), 120)), 1.0) == img

    def test_blend_scales_by_relative_luminance(self):
        img = RasterImage.blank(2, 1, (200, 200, 200))
        texture = gray_image(np.array([[50, 150]]))
        out = blend_wrinkles(img, texture, 1.0)
        assert out.pixels[0, 0].tolist() == [100, 100, 100]
        assert out.pixels[0, 1].tolist() == [255, 255, 255]

    def test_blend_alpha_range(self):
        img = RasterImage.blank(4, 4)
        with pytest.raises(CreaseParameterError):
            blend_wrinkles(img, img, 1.5)
