"""
Grid Renderer - ECG paper grid, lead traces and calibration pulses at physical scale
"""
import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy import ndimage
from skimage.draw import line as draw_line

from ..models.ecg_record import EcgRecord
from ..models.paper import CALIBRATION_ZONE_MM, LeadLayout, LeadPolyline, PaperSpec
from ..models.raster import RasterImage


logger = logging.getLogger(__name__)

CALIBRATION_PULSE_S = 0.2
CALIBRATION_PULSE_MV = 1.0


class RenderError(Exception):
    """Base exception for paper and trace rendering"""
    pass


class PaperSizeError(RenderError):
    """Page smaller than one coarse grid cell"""
    pass


class LayoutError(RenderError):
    """Lead layout incompatible with the record or the page"""
    pass


def to_pixels(spec: PaperSpec, mm: float) -> float:
    """Convert millimetres on paper to pixels (``mm * dpi / 25.4``)"""
    return mm * spec.px_per_mm


def stroke_offsets(width: int) -> range:
    """Offsets of a ``width`` pixel stroke around its centre line"""
    return range(-((width - 1) // 2), width // 2 + 1)


def stroke_bias(width: int) -> float:
    """Mean offset of ``stroke_offsets`` (0.5 px for even widths)"""
    return 0.5 if width % 2 == 0 else 0.0


def grid_line_positions(spec: PaperSpec, pitch_mm: float, extent_px: int) -> np.ndarray:
    """Pixel positions round(to_pixels(k * pitch)) that fall on the page"""
    count = int(np.floor(extent_px / to_pixels(spec, pitch_mm))) + 1
    positions = np.rint(to_pixels(spec, pitch_mm) * np.arange(count)).astype(np.int64)
    return positions[positions < extent_px]


def _thick_lines(positions: np.ndarray, width: int, extent_px: int) -> np.ndarray:
    mask = np.zeros(extent_px, dtype=bool)
    for offset in stroke_offsets(width):
        idx = positions + offset
        mask[idx[(idx >= 0) & (idx < extent_px)]] = True
    return mask


def render_blank_paper(spec: PaperSpec) -> RasterImage:
    """
    Fill the page with the background and draw fine then coarse grid lines

    Raises:
        PaperSizeError: If the page is smaller than one coarse cell
    """
    coarse_px = to_pixels(spec, spec.coarse_grid_mm)
    if spec.width_px < coarse_px or spec.height_px < coarse_px:
        raise PaperSizeError(
            f"Page {spec.width_px}x{spec.height_px} px is smaller than one coarse cell ({coarse_px:.2f} px)"
        )

    image = RasterImage.blank(spec.width_px, spec.height_px, spec.bg_color)
    pixels = image.pixels
    for pitch, width, color in ((spec.fine_grid_mm, spec.fine_line_px, spec.fine_color),
                                (spec.coarse_grid_mm, spec.coarse_line_px, spec.coarse_color)):
        cols = _thick_lines(grid_line_positions(spec, pitch, spec.width_px), width, spec.width_px)
        rows = _thick_lines(grid_line_positions(spec, pitch, spec.height_px), width, spec.height_px)
        pixels[:, cols] = color
        pixels[rows, :] = color
    return image


def rasterize_polyline(points: np.ndarray, shape: Tuple[int, int], width: int) -> np.ndarray:
    """
    Boolean mask of a polyline drawn with Bresenham segments

    Vertices are rounded to the nearest pixel and clamped to the page; each
    centre-line pixel is thickened by a ``width`` x ``width`` square.

    Args:
        points: (N, 2) array of (x, y) vertices
        shape: (height, width) of the mask
        width: Stroke width in pixels

    Returns:
        Boolean array of ``shape``
    """
    height, page_w = shape
    mask = np.zeros(shape, dtype=bool)
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] == 0:
        return mask
    xs = np.clip(np.rint(pts[:, 0]), 0, page_w - 1).astype(np.int64)
    ys = np.clip(np.rint(pts[:, 1]), 0, height - 1).astype(np.int64)

    if pts.shape[0] == 1:
        rr, cc = ys, xs
    else:
        pieces = [draw_line(ys[i], xs[i], ys[i + 1], xs[i + 1]) for i in range(len(xs) - 1)]
        rr = np.concatenate([p[0] for p in pieces])
        cc = np.concatenate([p[1] for p in pieces])

    for dy in stroke_offsets(width):
        for dx in stroke_offsets(width):
            r, c = rr + dy, cc + dx
            keep = (r >= 0) & (r < height) & (c >= 0) & (c < page_w)
            mask[r[keep], c[keep]] = True
    return mask


def _composite(pixels: np.ndarray, mask: np.ndarray, color, antialias: bool) -> None:
    if not antialias:
        pixels[mask] = color
        return
    alpha = np.clip(ndimage.gaussian_filter(mask.astype(np.float64), 0.7) * 1.6, 0.0, 1.0)
    alpha[mask] = 1.0
    blended = pixels * (1.0 - alpha[..., None]) + np.asarray(color, dtype=np.float64) * alpha[..., None]
    pixels[...] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)


def _row_bands(baselines: Sequence[float], height_px: int) -> List[Tuple[float, float]]:
    if len(baselines) == 1:
        return [(0.0, float(height_px - 1))]
    bands = []
    for i, b in enumerate(baselines):
        up = (b - baselines[i - 1]) / 2.0 if i > 0 else (baselines[1] - b) / 2.0
        down = (baselines[i + 1] - b) / 2.0 if i + 1 < len(baselines) else up
        bands.append((max(0.0, b - up), min(float(height_px - 1), b + down)))
    return bands


def calibration_pulse(spec: PaperSpec, x_start_px: float, baseline_px: float) -> np.ndarray:
    """Vertices of a 1 mV x 0.2 s rectangular pulse centred in the calibration zone"""
    pulse_mm = CALIBRATION_PULSE_S * spec.mm_per_s
    stub = to_pixels(spec, max(0.0, (CALIBRATION_ZONE_MM - pulse_mm) / 2.0))
    pulse_w = to_pixels(spec, pulse_mm)
    top = baseline_px - to_pixels(spec, CALIBRATION_PULSE_MV * spec.mm_per_mv)
    x1 = x_start_px + stub
    x2 = x1 + pulse_w
    return np.array([
        [x_start_px, baseline_px],
        [x1, baseline_px],
        [x1, top],
        [x2, top],
        [x2, baseline_px],
        [x2 + stub, baseline_px],
    ])


def check_layout(rec: EcgRecord, layout: LeadLayout, spec: PaperSpec) -> None:
    """
    Verify that the record covers the layout and every segment fits the page

    Raises:
        LayoutError: On missing leads or segments wider than their cell
    """
    missing = [name for name in layout.leads if name not in rec.lead_names]
    if missing:
        raise LayoutError(f"Record {rec.record_id or '<unnamed>'} lacks layout leads: {', '.join(missing)}")

    left, right, top, bottom = layout.margins_mm
    baselines = layout.row_baselines_mm[:layout.n_rows]
    if baselines[-1] > spec.height_mm - bottom:
        raise LayoutError(f"Baseline at {baselines[-1]} mm lies below the bottom margin "
                          f"(page height {spec.height_mm:.1f} mm)")

    available_mm = spec.width_mm - right - layout.trace_x0_mm
    cell_mm = available_mm / layout.cols
    segment_mm = spec.mm_per_s * rec.duration_s / layout.cols
    if segment_mm > cell_mm + 1e-6:
        raise LayoutError(f"{rec.duration_s:g} s segments need {segment_mm:.1f} mm per column, "
                          f"only {cell_mm:.1f} mm available")
    if layout.rhythm_lead and spec.mm_per_s * rec.duration_s > available_mm + 1e-6:
        raise LayoutError(f"Rhythm strip of {rec.duration_s:g} s does not fit {available_mm:.1f} mm")


def plot_record(img: RasterImage, rec: EcgRecord, layout: LeadLayout, spec: PaperSpec,
                with_pulse: bool = True) -> Tuple[RasterImage, List[LeadPolyline]]:
    """
    Plot every layout lead (and the rhythm strip) onto a copy of ``img``

    Sample k of a lead is placed at x = x0 + px_per_s * k / fs and
    y = baseline - px_per_mv * v, where x0 is the trace origin after the
    calibration zone. Column c of the grid shows the c-th consecutive
    ``duration / cols`` slice of the record.

    Args:
        img: Page to draw on (not modified)
        rec: Record in millivolts
        layout: Lead placement
        spec: Paper geometry
        with_pulse: Draw a calibration pulse at the start of every row

    Returns:
        (new image, ground-truth polylines); clipped traces are flagged

    Raises:
        LayoutError: If the layout does not fit the record or page
    """
    check_layout(rec, layout, spec)
    out = img.copy()
    shape = (out.height, out.width)
    x0_px = float(np.rint(to_pixels(spec, layout.trace_x0_mm)))
    baselines = [float(np.rint(to_pixels(spec, b))) for b in layout.row_baselines_mm[:layout.n_rows]]
    bands = _row_bands(baselines, out.height)
    seg_dur = rec.duration_s / layout.cols

    jobs = []
    for index, name in enumerate(layout.order):
        row, col = layout.cell_of(index)
        jobs.append((name, row, col, col * seg_dur, seg_dur, 'lead'))
    if layout.rhythm_lead:
        jobs.append((layout.rhythm_lead, layout.rows, 0, 0.0, rec.duration_s, 'rhythm'))

    polylines: List[LeadPolyline] = []
    mask = np.zeros(shape, dtype=bool)
    for name, row, col, t0, dur, kind in jobs:
        first = int(round(t0 * rec.fs))
        last = min(rec.n_samples, int(round((t0 + dur) * rec.fs)))
        values = rec.lead(name)[first:last]
        t = np.arange(first, last) / rec.fs
        points = np.column_stack([x0_px + spec.px_per_s * t, baselines[row] - spec.px_per_mv * values])
        clipped = bool(np.any(points[:, 0] < 0) or np.any(points[:, 0] > out.width - 1)
                       or np.any(points[:, 1] < 0) or np.any(points[:, 1] > out.height - 1))
        if clipped:
            logger.warning("Trace of lead %s (row %d, col %d) exceeds the page and was clipped", name, row, col)
        mask |= rasterize_polyline(points, shape, spec.trace_width_px)
        polylines.append(LeadPolyline(
            lead_name=name, row=row, col=col, t0_s=t0, duration_s=dur, fs=rec.fs,
            baseline_px=baselines[row], x0_px=x0_px, points=points, band_px=bands[row],
            x_range_px=(x0_px + spec.px_per_s * t0, x0_px + spec.px_per_s * (t0 + dur)),
            kind=kind, clipped=clipped,
        ))

    if with_pulse:
        x_start = float(np.rint(to_pixels(spec, layout.margins_mm[0])))
        for row, baseline in enumerate(baselines):
            points = calibration_pulse(spec, x_start, baseline)
            mask |= rasterize_polyline(points, shape, spec.trace_width_px)
            polylines.append(LeadPolyline(
                lead_name='CAL', row=row, col=-1, t0_s=0.0, duration_s=CALIBRATION_PULSE_S, fs=0.0,
                baseline_px=baseline, x0_px=x_start, points=points, band_px=bands[row],
                x_range_px=(float(points[0, 0]), float(points[-1, 0])), kind='pulse',
            ))

    _composite(out.pixels, mask, spec.trace_color, spec.antialias)
    return out, polylines
