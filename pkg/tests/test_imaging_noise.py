import numpy as np
import pytest

from ecg_imagegen.models import KelvinConvention, NoiseSpec, ParameterError, RasterImage
from ecg_imagegen.services.imaging_noise import (
    BAND_ROWS,
    MIN_CHANNEL_FACTOR,
    KelvinRangeError,
    add_gaussian_noise,
    add_poisson_noise,
    add_salt_pepper,
    apply_color_temperature,
    apply_noise_spec,
    kelvin_factors,
    kelvin_to_rgb,
)


@pytest.fixture
def gray():
    return RasterImage.blank(400, 300, (128, 128, 128))


class TestGaussian:
    def test_zero_is_identity(self, gray):
        assert add_gaussian_noise(gray, 0.0, seed=1) == gray

    def test_statistics(self, gray):
        out = add_gaussian_noise(gray, 10.0, seed=1).pixels.astype(float)
        for channel in range(3):
            assert 9.5 <= out[..., channel].std() <= 10.5
        assert abs(out.mean() - 128.0) < 0.2

    def test_deterministic(self, gray):
        assert add_gaussian_noise(gray, 5.0, 3) == add_gaussian_noise(gray, 5.0, 3)
        assert add_gaussian_noise(gray, 5.0, 3) != add_gaussian_noise(gray, 5.0, 4)

    def test_bands_do_not_depend_on_height(self):
        tall = RasterImage.blank(50, BAND_ROWS * 2 + 7, (100, 100, 100))
        short = RasterImage.blank(50, BAND_ROWS, (100, 100, 100))
        a = add_gaussian_noise(tall, 8.0, seed=2).pixels[:BAND_ROWS]
        b = add_gaussian_noise(short, 8.0, seed=2).pixels
        assert np.array_equal(a, b)


class TestPoisson:
    def test_literal_mean_shift(self):
        img = RasterImage.blank(400, 300, (100, 100, 100))
        out = add_poisson_noise(img, 5.0, centered=False, seed=0).pixels.astype(float)
        assert abs(out.mean() - 105.0) < 0.2

    def test_centered_keeps_mean(self):
        img = RasterImage.blank(400, 300, (100, 100, 100))
        out = add_poisson_noise(img, 5.0, centered=True, seed=0).pixels.astype(float)
        assert abs(out.mean() - 100.0) < 0.2

    def test_zero_is_identity(self, gray):
        assert add_poisson_noise(gray, 0.0, True, seed=0) == gray


class TestSaltPepper:
    def test_zero_is_identity(self, gray):
        assert add_salt_pepper(gray, 0.0, seed=0) == gray

    def test_full_probability(self, gray):
        px = add_salt_pepper(gray, 1.0, seed=0).pixels
        white = np.all(px == 255, axis=2)
        black = np.all(px == 0, axis=2)
        assert np.all(white | black)
        assert white.any() and black.any()

    def test_changed_fraction(self, gray):
        px = add_salt_pepper(gray, 0.1, seed=7).pixels
        changed = np.any(px != 128, axis=2)
        n = changed.size
        sigma = np.sqrt(0.1 * 0.9 / n)
        assert abs(changed.mean() - 0.1) <= 3 * sigma
        assert np.all(np.all(px[changed] == 0, axis=1) | np.all(px[changed] == 255, axis=1))


class TestColorTemperature:
    @pytest.mark.parametrize("convention", list(KelvinConvention))
    def test_neutral(self, convention):
        assert np.allclose(kelvin_factors(6600.0, convention), 1.0, atol=0.02)

    def test_inverted_low_is_bluish(self, gray):
        px = apply_color_temperature(gray, 1000.0).pixels.astype(float)
        assert px[..., 2].mean() > px[..., 0].mean()

    def test_inverted_high_is_orangish(self, gray):
        px = apply_color_temperature(gray, 40000.0).pixels.astype(float)
        assert px[..., 0].mean() > px[..., 2].mean()

    def test_physical_low_is_orangish(self, gray):
        px = apply_color_temperature(gray, 1500.0, KelvinConvention.PHYSICAL).pixels.astype(float)
        assert px[..., 0].mean() > px[..., 2].mean()

    def test_red_blue_ratio_is_monotone(self):
        previous = None
        for kelvin in np.linspace(1000.0, 40000.0, 200):
            r, _, b = kelvin_factors(float(kelvin))
            if previous is not None:
                pr, pb = previous
                # r / b never decreases (cross-multiplied since b may be 0)
                assert r * pb >= pr * b - 1e-12
            previous = (r, b)

    def test_factors_max_one(self):
        for kelvin in (1000.0, 3000.0, 6600.0, 12000.0, 40000.0):
            f = kelvin_factors(kelvin)
            assert f.max() == pytest.approx(1.0)
            assert np.all(f >= 0)

    def test_hot_tint_keeps_every_channel(self, gray):
        assert kelvin_factors(40000.0)[2] == pytest.approx(MIN_CHANNEL_FACTOR)
        px = apply_color_temperature(gray, 40000.0).pixels
        assert px[..., 2].min() > 0

    def test_blackbody_fit(self):
        assert kelvin_to_rgb(6600.0)[0] == 255.0
        assert kelvin_to_rgb(1000.0)[2] == 0.0

    @pytest.mark.parametrize("kelvin", [500.0, 50000.0, float('nan')])
    def test_out_of_range(self, kelvin):
        with pytest.raises(KelvinRangeError):
            kelvin_factors(kelvin)


class TestNoiseSpec:
    def test_default_is_identity(self, gray):
        assert apply_noise_spec(gray, NoiseSpec(), seed=0) == gray

    def test_combined_is_deterministic(self, gray):
        spec = NoiseSpec(gaussian_eta=4.0, poisson_lambda=2.0, sp_p=0.01, kelvin=4500.0)
        a = apply_noise_spec(gray, spec, seed=12)
        assert a == apply_noise_spec(gray, spec, seed=12)
        assert a != gray
        assert a.pixels.dtype == np.uint8

    @pytest.mark.parametrize("kwargs", [{'gaussian_eta': -1.0}, {'sp_p': 1.5}, {'kelvin': 200.0},
                                        {'kelvin_convention': 'sepia'}])
    def test_validation(self, kwargs):
        with pytest.raises(ParameterError):
            NoiseSpec(**kwargs)
