"""
Imaging Noise Service - Sensor noise models and colour-temperature tint

Every stochastic operation draws per row band from its own substream
(``SeedSequence([seed, band])``), so results do not depend on how bands
are scheduled.
"""
import logging
import math
from typing import Callable, Iterator, Tuple

import numpy as np

from ..core.utils import derive_seed
from ..models.distortions import KELVIN_MAX, KELVIN_MIN, KelvinConvention, NoiseSpec
from ..models.raster import RasterImage


logger = logging.getLogger(__name__)

BAND_ROWS = 64
NEUTRAL_KELVIN = 6600.0
# Lowest channel multiplier; the fit drops blue to 0 below 1900 K
MIN_CHANNEL_FACTOR = 0.1


class ImagingNoiseError(Exception):
    """Base exception for imaging noise"""
    pass


class KelvinRangeError(ImagingNoiseError, ValueError):
    """Colour temperature outside [1000, 40000] K"""
    pass


def _bands(height: int, seed: int) -> Iterator[Tuple[slice, np.random.Generator]]:
    for band, start in enumerate(range(0, height, BAND_ROWS)):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), band]))
        yield slice(start, min(height, start + BAND_ROWS)), rng


def _per_band(img: RasterImage, seed: int,
              fn: Callable[[np.ndarray, np.random.Generator], np.ndarray]) -> RasterImage:
    out = np.empty(img.pixels.shape, dtype=np.float64)
    for rows, rng in _bands(img.height, seed):
        out[rows] = fn(img.pixels[rows].astype(np.float64), rng)
    return RasterImage.from_float(out)


def add_gaussian_noise(img: RasterImage, eta: float, seed: int) -> RasterImage:
    """Add N(0, eta) per pixel and channel, then round and clamp"""
    if eta < 0:
        raise ImagingNoiseError(f"eta must be >= 0, got {eta}")
    if eta == 0:
        return img.copy()
    return _per_band(img, seed, lambda band, rng: band + rng.normal(0.0, eta, band.shape))


def add_poisson_noise(img: RasterImage, lam: float, centered: bool, seed: int) -> RasterImage:
    """
    Add Poisson(lam) counts per pixel and channel

    Args:
        img: Input image
        lam: Poisson rate (>= 0)
        centered: Subtract round(lam) so the mean brightness is kept
        seed: Noise seed

    Returns:
        Clamped 8-bit image
    """
    if lam < 0:
        raise ImagingNoiseError(f"lambda must be >= 0, got {lam}")
    if lam == 0:
        return img.copy()
    shift = float(round(lam)) if centered else 0.0
    return _per_band(img, seed, lambda band, rng: band + rng.poisson(lam, band.shape) - shift)


def add_salt_pepper(img: RasterImage, p: float, seed: int) -> RasterImage:
    """Set whole pixels to black or white, each with probability p / 2"""
    if not 0.0 <= p <= 1.0:
        raise ImagingNoiseError(f"p must be in [0, 1], got {p}")
    if p == 0:
        return img.copy()

    def salt_pepper(band: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(band.shape[:2])
        band[u < p / 2.0] = 0.0
        band[(u >= p / 2.0) & (u < p)] = 255.0
        return band

    return _per_band(img, seed, salt_pepper)


def kelvin_to_rgb(kelvin: float) -> Tuple[float, float, float]:
    """
    Blackbody colour of ``kelvin`` from the Tanner Helland piecewise fit

    ======== ================================================
    channel  fit of t = kelvin / 100
    ======== ================================================
    red      255 for t <= 66, else 329.699 * (t - 60)^-0.1332
    green    99.4708 * ln(t) - 161.1196 for t <= 66,
             else 288.1222 * (t - 60)^-0.0755
    blue     255 for t >= 66, 0 for t <= 19,
             else 138.5177 * ln(t - 10) - 305.0448
    ======== ================================================

    Returns:
        (r, g, b) clamped to [0, 255]
    """
    t = kelvin / 100.0
    if t <= 66:
        red = 255.0
        green = 99.4708025861 * math.log(t) - 161.1195681661
    else:
        red = 329.698727446 * (t - 60) ** -0.1332047592
        green = 288.1221695283 * (t - 60) ** -0.0755148492
    if t >= 66:
        blue = 255.0
    elif t <= 19:
        blue = 0.0
    else:
        blue = 138.5177312231 * math.log(t - 10) - 305.0447927307

    def clamp(v: float) -> float:
        return min(255.0, max(0.0, v))

    return clamp(red), clamp(green), clamp(blue)


def kelvin_factors(kelvin: float, convention: KelvinConvention = KelvinConvention.INVERTED) -> np.ndarray:
    """
    Per-channel multipliers for a colour temperature, max channel = 1

    No channel drops below ``MIN_CHANNEL_FACTOR``, so extreme tints never
    erase a channel.

    The inverted convention mirrors the temperature about 6600 K in log space
    (``6600^2 / K``, clamped to the valid range), so low values tint blue
    and high values tint orange.

    Raises:
        KelvinRangeError: If kelvin is outside [1000, 40000]
    """
    if not (np.isfinite(kelvin) and KELVIN_MIN <= kelvin <= KELVIN_MAX):
        raise KelvinRangeError(f"Colour temperature must be in [{KELVIN_MIN:g}, {KELVIN_MAX:g}] K, got {kelvin}")
    if KelvinConvention(convention) is KelvinConvention.INVERTED:
        kelvin = min(KELVIN_MAX, max(KELVIN_MIN, NEUTRAL_KELVIN ** 2 / kelvin))
    rgb = np.asarray(kelvin_to_rgb(kelvin))
    return np.maximum(rgb / rgb.max(), MIN_CHANNEL_FACTOR)


def apply_color_temperature(img: RasterImage, kelvin: float,
                            convention: KelvinConvention = KelvinConvention.INVERTED) -> RasterImage:
    """Multiply each channel by the normalized reference white of ``kelvin``"""
    factors = kelvin_factors(kelvin, convention)
    return RasterImage.from_float(img.pixels.astype(np.float64) * factors)


def apply_noise_spec(img: RasterImage, spec: NoiseSpec, seed: int) -> RasterImage:
    """
    Apply the whole imaging stage: Gaussian, Poisson, salt-and-pepper, then tint

    Args:
        img: Input image
        spec: Noise parameters
        seed: Stage seed; each operation gets derive_seed(seed, k)
    """
    out = add_gaussian_noise(img, spec.gaussian_eta, derive_seed(seed, 0))
    out = add_poisson_noise(out, spec.poisson_lambda, spec.poisson_centered, derive_seed(seed, 1))
    out = add_salt_pepper(out, spec.sp_p, derive_seed(seed, 2))
    if spec.kelvin is not None:
        out = apply_color_temperature(out, spec.kelvin, spec.kelvin_convention)
    return out
