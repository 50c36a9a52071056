"""
Paper models - physical ECG paper geometry, lead layout and rendered polylines
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .validation import require


RGB = Tuple[int, int, int]

MM_PER_INCH = 25.4

# Blank strip left of the traces holding the calibration pulse: stub, pulse, stub
CALIBRATION_ZONE_MM = 10.0


def _check_rgb(value, name: str) -> RGB:
    rgb = tuple(int(c) for c in value)
    require(len(rgb) == 3 and all(0 <= c <= 255 for c in rgb), name,
            f"expected an RGB triple in [0, 255], got {value!r}")
    return rgb


@dataclass(frozen=True)
class PaperSpec:
    """Physical-to-pixel mapping of a page of ECG paper

    Defaults describe a US-letter page (2200x1700 px at 200 dpi) with the
    standard 25 mm/s and 10 mm/mV scale.
    """

    dpi: float = 200.0
    width_px: int = 2200
    height_px: int = 1700
    mm_per_s: float = 25.0
    mm_per_mv: float = 10.0
    fine_grid_mm: float = 1.0
    coarse_grid_mm: float = 5.0
    bg_color: RGB = (255, 252, 248)
    fine_color: RGB = (250, 205, 190)
    coarse_color: RGB = (232, 118, 92)
    trace_color: RGB = (0, 0, 0)
    trace_width_px: int = 3
    antialias: bool = False

    def __post_init__(self):
        require(self.dpi > 0, 'dpi', f"must be positive, got {self.dpi}")
        require(self.width_px > 0, 'width_px', f"must be positive, got {self.width_px}")
        require(self.height_px > 0, 'height_px', f"must be positive, got {self.height_px}")
        require(self.mm_per_s > 0, 'mm_per_s', f"must be positive, got {self.mm_per_s}")
        require(self.mm_per_mv > 0, 'mm_per_mv', f"must be positive, got {self.mm_per_mv}")
        require(0 < self.fine_grid_mm < self.coarse_grid_mm, 'fine_grid_mm',
                f"must satisfy 0 < fine ({self.fine_grid_mm}) < coarse ({self.coarse_grid_mm})")
        ratio = self.coarse_grid_mm / self.fine_grid_mm
        require(abs(ratio - round(ratio)) < 1e-9, 'coarse_grid_mm',
                f"must be an integer multiple of fine_grid_mm ({self.fine_grid_mm})")
        require(self.trace_width_px >= 1, 'trace_width_px', f"must be >= 1, got {self.trace_width_px}")
        for name in ('bg_color', 'fine_color', 'coarse_color', 'trace_color'):
            object.__setattr__(self, name, _check_rgb(getattr(self, name), name))

    @property
    def px_per_mm(self) -> float:
        return self.dpi / MM_PER_INCH

    @property
    def width_mm(self) -> float:
        return self.width_px / self.px_per_mm

    @property
    def height_mm(self) -> float:
        return self.height_px / self.px_per_mm

    @property
    def px_per_s(self) -> float:
        return self.mm_per_s * self.px_per_mm

    @property
    def px_per_mv(self) -> float:
        return self.mm_per_mv * self.px_per_mm

    @property
    def fine_line_px(self) -> int:
        return max(1, int(round(self.dpi / 200.0)))

    @property
    def coarse_line_px(self) -> int:
        return max(2, int(round(2 * self.dpi / 200.0)))


@dataclass(frozen=True)
class LeadLayout:
    """Placement of leads on the page

    ``order`` is row-major over a ``rows`` x ``cols`` grid; every column shows a
    consecutive time segment of ``duration / cols`` seconds. The optional
    rhythm lead takes its own row below the grid and spans the whole record.
    """

    rows: int = 3
    cols: int = 4
    order: Tuple[str, ...] = ('I', 'aVR', 'V1', 'V4',
                              'II', 'aVL', 'V2', 'V5',
                              'III', 'aVF', 'V3', 'V6')
    rhythm_lead: Optional[str] = 'II'
    row_baselines_mm: Tuple[float, ...] = (65.0, 105.0, 145.0, 185.0)
    margins_mm: Tuple[float, float, float, float] = (10.0, 5.0, 10.0, 10.0)

    def __post_init__(self):
        object.__setattr__(self, 'order', tuple(self.order))
        object.__setattr__(self, 'row_baselines_mm', tuple(float(b) for b in self.row_baselines_mm))
        object.__setattr__(self, 'margins_mm', tuple(float(m) for m in self.margins_mm))
        require(self.rows >= 1 and self.cols >= 1, 'rows', "rows and cols must be >= 1")
        require(self.rows * self.cols >= len(self.order), 'order',
                f"{len(self.order)} leads do not fit a {self.rows}x{self.cols} grid")
        require(len(set(self.order)) == len(self.order), 'order', "lead names must be unique")
        require(len(self.margins_mm) == 4 and all(m >= 0 for m in self.margins_mm), 'margins_mm',
                "expected four non-negative margins (left, right, top, bottom)")
        require(len(self.row_baselines_mm) >= self.n_rows, 'row_baselines_mm',
                f"need {self.n_rows} baselines, got {len(self.row_baselines_mm)}")
        baselines = self.row_baselines_mm[:self.n_rows]
        require(all(b1 < b2 for b1, b2 in zip(baselines, baselines[1:])), 'row_baselines_mm',
                "baselines must be strictly increasing")
        require(baselines[0] > self.margins_mm[2], 'row_baselines_mm',
                "first baseline lies inside the top margin")

    @property
    def n_rows(self) -> int:
        """Rendered rows including the rhythm strip"""
        return self.rows + (1 if self.rhythm_lead else 0)

    @property
    def trace_x0_mm(self) -> float:
        return self.margins_mm[0] + CALIBRATION_ZONE_MM

    @property
    def leads(self) -> Tuple[str, ...]:
        if self.rhythm_lead and self.rhythm_lead not in self.order:
            return self.order + (self.rhythm_lead,)
        return self.order

    def cell_of(self, index: int) -> Tuple[int, int]:
        return divmod(index, self.cols)


@dataclass
class LeadPolyline:
    """Ground-truth pixel polyline of one rendered lead segment

    ``points`` holds (x, y) pixel vertices, one per sample. ``band_px`` is the
    vertical band (top, bottom) owned by the lead's row and ``x_range_px`` the
    horizontal extent reserved for the segment, both in page coordinates
    before any geometric distortion.
    """

    lead_name: str
    row: int
    col: int
    t0_s: float
    duration_s: float
    fs: float
    baseline_px: float
    x0_px: float
    points: np.ndarray
    band_px: Tuple[float, float] = (0.0, 0.0)
    x_range_px: Tuple[float, float] = (0.0, 0.0)
    kind: str = 'lead'
    clipped: bool = False

    @property
    def bbox(self) -> Optional[Tuple[float, float, float, float]]:
        """(x0, y0, x1, y1) of the vertices, None without vertices"""
        if len(self.points) == 0:
            return None
        xs, ys = self.points[:, 0], self.points[:, 1]
        return float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max())

    def to_dict(self, points: Optional[np.ndarray] = None) -> Dict[str, object]:
        pts = self.points if points is None else points
        return {
            'lead': self.lead_name,
            'kind': self.kind,
            'row': self.row,
            'col': self.col,
            't0_s': self.t0_s,
            'duration_s': self.duration_s,
            'fs': self.fs,
            'baseline_px': self.baseline_px,
            'x0_px': self.x0_px,
            'band_px': list(self.band_px),
            'x_range_px': list(self.x_range_px),
            'clipped': self.clipped,
            'points': np.asarray(pts, dtype=np.float64).tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "LeadPolyline":
        return cls(
            lead_name=data['lead'],
            row=int(data['row']),
            col=int(data['col']),
            t0_s=float(data['t0_s']),
            duration_s=float(data['duration_s']),
            fs=float(data['fs']),
            baseline_px=float(data['baseline_px']),
            x0_px=float(data['x0_px']),
            points=np.asarray(data['points'], dtype=np.float64).reshape(-1, 2),
            band_px=tuple(data.get('band_px', (0.0, 0.0))),
            x_range_px=tuple(data.get('x_range_px', (0.0, 0.0))),
            kind=data.get('kind', 'lead'),
            clipped=bool(data.get('clipped', False)),
        )
