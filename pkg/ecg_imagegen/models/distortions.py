"""
Distortion models - crease, wrinkle quilting and imaging noise parameters
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .raster import RasterImage
from .validation import ParameterError, require


KELVIN_MIN = 1000.0
KELVIN_MAX = 40000.0


@dataclass(frozen=True)
class CreaseSpec:
    """Fold-line artifacts: count, inclination and Gaussian shadow"""

    n: int = 0
    theta_deg: float = 135.0
    intensity: float = 0.35
    sigma_px: float = 4.0
    line_width_px: int = 2
    lighten: bool = False

    def __post_init__(self):
        require(self.n >= 0, 'n', f"must be >= 0, got {self.n}")
        require(0 < self.theta_deg < 180, 'theta_deg', f"must be in (0, 180), got {self.theta_deg}")
        require(0.0 <= self.intensity <= 1.0, 'intensity', f"must be in [0, 1], got {self.intensity}")
        require(self.sigma_px >= 0, 'sigma_px', f"must be >= 0, got {self.sigma_px}")
        require(self.line_width_px >= 1, 'line_width_px', f"must be >= 1, got {self.line_width_px}")


@dataclass(frozen=True, eq=False)
class QuiltSpec:
    """Patch geometry and seed texture for wrinkle synthesis

    ``overlap_px`` defaults to a sixth of the block when left at 0.
    """

    block_px: int
    out_w: int
    out_h: int
    seed_texture: RasterImage
    rng_seed: int = 0
    overlap_px: int = 0
    candidates: int = 20

    def __post_init__(self):
        if self.overlap_px == 0:
            object.__setattr__(self, 'overlap_px', max(1, self.block_px // 6))
        require(self.block_px >= 2, 'block_px', f"must be >= 2, got {self.block_px}")
        require(0 < self.overlap_px < self.block_px, 'overlap_px',
                f"must satisfy 0 < overlap ({self.overlap_px}) < block ({self.block_px})")
        require(self.out_w >= self.block_px and self.out_h >= self.block_px, 'out_w',
                f"output {self.out_w}x{self.out_h} smaller than block {self.block_px}")
        require(self.candidates >= 1, 'candidates', f"must be >= 1, got {self.candidates}")

    @property
    def stride(self) -> int:
        return self.block_px - self.overlap_px


class KelvinConvention(str, Enum):
    """Orientation of the Kelvin tint

    ``inverted``: low temperatures look bluish and high ones orangish.
    ``physical``: the blackbody locus as is (low = orange).
    """

    INVERTED = 'inverted'
    PHYSICAL = 'physical'


@dataclass(frozen=True)
class NoiseSpec:
    """Acquisition noise and colour temperature parameters (8-bit scale)"""

    gaussian_eta: float = 0.0
    poisson_lambda: float = 0.0
    poisson_centered: bool = True
    sp_p: float = 0.0
    kelvin: Optional[float] = None
    kelvin_convention: KelvinConvention = KelvinConvention.INVERTED

    def __post_init__(self):
        require(self.gaussian_eta >= 0, 'gaussian_eta', f"must be >= 0, got {self.gaussian_eta}")
        require(self.poisson_lambda >= 0, 'poisson_lambda', f"must be >= 0, got {self.poisson_lambda}")
        require(0.0 <= self.sp_p <= 1.0, 'sp_p', f"must be in [0, 1], got {self.sp_p}")
        if self.kelvin is not None:
            require(bool(np.isfinite(self.kelvin)) and KELVIN_MIN <= self.kelvin <= KELVIN_MAX, 'kelvin',
                    f"must be in [{KELVIN_MIN:g}, {KELVIN_MAX:g}], got {self.kelvin}")
        try:
            object.__setattr__(self, 'kelvin_convention', KelvinConvention(self.kelvin_convention))
        except ValueError:
            raise ParameterError('kelvin_convention', f"unknown convention {self.kelvin_convention!r}")
