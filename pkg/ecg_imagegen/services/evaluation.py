"""
Evaluation Service - Classical round-trip digitizer and reconstruction metrics

Generated pages are unwarped with their sidecar matrix, the grid is removed
by nearest-colour classification, the stroke of every lead is fitted back to
samples and scored against the ground-truth CSV written next to the image.
"""
import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve
from tqdm import tqdm

from ..models.artifacts import ArtifactBox
from ..models.ground_truth import GroundTruthMeta
from ..models.paper import LeadPolyline, PaperSpec
from ..models.raster import RasterImage
from .ecg_io import RecordFormat, read_record
from .geometry import invert, warp_image
from .grid_renderer import stroke_bias, stroke_offsets


logger = logging.getLogger(__name__)

DEFAULT_BIN_WIDTH_DB = 1.0

# Stroke fit: curvature penalty, pull towards the first estimate, ranking passes
SMOOTHNESS_WEIGHT = 0.1
ANCHOR_WEIGHT = 1e-6
MAX_REFINEMENTS = 30


class EvaluationError(Exception):
    """Base exception for digitization and scoring"""
    pass


class EmptyTraceError(EvaluationError):
    """No trace pixel found inside a lead region"""
    pass


class SeriesSizeError(EvaluationError):
    """Reference and estimate differ in length or are empty"""
    pass


class UndefinedReferenceError(EvaluationError):
    """SNR against an all-zero reference"""
    pass


# Metrics

def _pair(ref: Sequence[float], est: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    r = np.asarray(ref, dtype=np.float64).ravel()
    e = np.asarray(est, dtype=np.float64).ravel()
    if r.size != e.size:
        raise SeriesSizeError(f"Series lengths differ: {r.size} vs {e.size}")
    if r.size == 0:
        raise SeriesSizeError("Series are empty")
    return r, e


def snr_db(ref: Sequence[float], est: Sequence[float]) -> float:
    """
    Reconstruction SNR: 10 log10(sum(ref^2) / sum((ref - est)^2))

    Returns:
        SNR in dB; ``inf`` when the estimate is exact

    Raises:
        SeriesSizeError: On length mismatch
        UndefinedReferenceError: If the reference is all zeros
    """
    r, e = _pair(ref, est)
    signal = float(np.sum(r ** 2))
    if signal == 0.0:
        raise UndefinedReferenceError("Reference series is all zeros")
    error = float(np.sum((r - e) ** 2))
    if error == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / error)


def mse(ref: Sequence[float], est: Sequence[float]) -> Tuple[float, float]:
    """Mean squared error (mV^2) and its root (mV)"""
    r, e = _pair(ref, est)
    value = float(np.mean((r - e) ** 2))
    return value, math.sqrt(value)


# Digitization

def remove_grid(img: RasterImage, spec: PaperSpec) -> np.ndarray:
    """
    Boolean trace mask by nearest-centroid colour classification

    A pixel is trace when it is strictly closer (in RGB) to the trace colour
    than to the background and both grid colours.
    """
    pixels = img.pixels.astype(np.float64)

    def dist2(color) -> np.ndarray:
        return np.sum((pixels - np.asarray(color, dtype=np.float64)) ** 2, axis=2)

    trace = dist2(spec.trace_color)
    others = np.minimum(np.minimum(dist2(spec.bg_color), dist2(spec.fine_color)), dist2(spec.coarse_color))
    return trace < others


def _column_runs(column: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Start and (inclusive) end rows of the true runs of a boolean column"""
    edges = np.diff(np.concatenate(([0], column.astype(np.int8), [0])))
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1


def _track_stroke(region: np.ndarray, usable: np.ndarray, anchor_row: float) -> np.ndarray:
    """
    Pick one run per column along the most continuous path through a region

    The path cost is the sum of vertical gaps between the runs chosen in
    consecutive usable columns; ties go to runs nearer ``anchor_row``. Strokes
    of neighbouring leads that reach into the region are left out this way.

    Returns:
        (n_cols, 2) inclusive (top, bottom) region rows, -1 for columns that
        are unusable or empty
    """
    chosen = np.full((region.shape[1], 2), -1, dtype=np.int64)
    steps = []
    cost = None
    previous = None
    for c in np.flatnonzero(usable):
        starts, ends = _column_runs(region[:, c])
        if starts.size == 0:
            continue
        local = 1e-6 * np.abs((starts + ends) / 2.0 - anchor_row)
        if previous is None:
            back = np.zeros(starts.size, dtype=np.int64)
            cost = local
        else:
            p_starts, p_ends = previous
            gap = np.maximum(0, np.maximum(starts[None, :] - p_ends[:, None] - 1,
                                           p_starts[:, None] - ends[None, :] - 1))
            total = cost[:, None] + gap
            back = np.argmin(total, axis=0)
            cost = total[back, np.arange(starts.size)] + local
        steps.append((c, starts, ends, back))
        previous = (starts, ends)

    if steps:
        k = int(np.argmin(cost))
        for c, starts, ends, back in reversed(steps):
            chosen[c] = (starts[k], ends[k])
            k = int(back[k])
    return chosen


def _stroke_points(sample_cols: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Points that can bound the centre-line rows of each drawn column

    A column holds its own vertices and the part of each connecting segment
    up to the column border, so its rows span the vertices and the segment
    values at both borders. Each point is ``(1 - w) * y[a] + w * y[b]``.

    Returns:
        (column, a, b, w) arrays
    """
    n = sample_cols.size
    step = np.diff(sample_cols)
    moves = np.flatnonzero(step > 0)
    span = step[moves]
    owner = np.repeat(moves, span)
    within = np.arange(int(span.sum())) - np.repeat(np.cumsum(span) - span, span)
    borders = sample_cols[owner] + within
    frac = (within + 0.5) / np.repeat(span, span)

    index = np.arange(n)
    columns = np.concatenate([sample_cols, borders, borders + 1])
    a = np.concatenate([index, owner, owner])
    b = np.concatenate([index, owner + 1, owner + 1])
    w = np.concatenate([np.zeros(n), frac, frac])
    return columns, a, b, w


def _window_table(columns: np.ndarray, point_cols: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
    """Indices of the points drawn into each mask column, padded with -1"""
    order = np.argsort(point_cols, kind='stable')
    keys = point_cols[order]
    groups = []
    for c in columns:
        parts = [order[np.searchsorted(keys, c - dx, 'left'):np.searchsorted(keys, c - dx, 'right')]
                 for dx in offsets]
        groups.append(np.concatenate(parts))
    table = np.full((len(groups), max(1, max(g.size for g in groups))), -1, dtype=np.int64)
    for i, g in enumerate(groups):
        table[i, :g.size] = g
    return table


def _fit_stroke(sample_cols: np.ndarray, columns: np.ndarray, top: np.ndarray, bottom: np.ndarray,
                offsets: Sequence[int], initial: np.ndarray) -> np.ndarray:
    """
    Sample rows whose drawn stroke matches the observed extent of each column

    Active-set least squares: every mask column pins its highest and its
    lowest point (as ranked by the current estimate) to the observed top and
    bottom centre-line rows, a second-difference penalty fills what the
    extents leave open, and the ranking is refreshed until it is stable.
    """
    n = sample_cols.size
    lo, hi = min(offsets), max(offsets)
    first, last = int(sample_cols[0]), int(sample_cols[-1])
    # mask columns fed only by this segment's own drawn columns
    inside = (columns - hi >= first) & (columns - lo <= last)
    if not inside.any():
        inside = np.ones(columns.size, dtype=bool)
    columns, top, bottom = columns[inside], top[inside], bottom[inside]

    point_cols, a, b, w = _stroke_points(sample_cols)
    table = _window_table(columns, point_cols, offsets)
    keep = table[:, 0] >= 0
    table, top, bottom = table[keep], top[keep], bottom[keep]
    m = table.shape[0]
    if m == 0:
        return initial
    present = table >= 0
    safe = np.where(present, table, 0)
    target = np.concatenate([top, bottom]).astype(np.float64)
    eq = np.arange(2 * m)

    prior = ANCHOR_WEIGHT * sparse.identity(n, format='csr')
    if n >= 3:
        d2 = sparse.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(n - 2, n), format='csr')
        prior = prior + SMOOTHNESS_WEIGHT ** 2 * (d2.T @ d2)

    y = initial.astype(np.float64)
    picked = None
    for _ in range(MAX_REFINEMENTS):
        values = ((1.0 - w) * y[a] + w * y[b])[safe]
        highest = table[np.arange(m), np.argmin(np.where(present, values, np.inf), axis=1)]
        lowest = table[np.arange(m), np.argmax(np.where(present, values, -np.inf), axis=1)]
        choice = np.concatenate([highest, lowest])
        if picked is not None and np.array_equal(choice, picked):
            break
        picked = choice
        design = sparse.csr_matrix(
            (np.concatenate([1.0 - w[choice], w[choice]]),
             (np.concatenate([eq, eq]), np.concatenate([a[choice], b[choice]]))),
            shape=(2 * m, n),
        )
        normal = (design.T @ design + prior).tocsc()
        y = spsolve(normal, design.T @ target + ANCHOR_WEIGHT * initial)
    return y


def extract_trace(mask: np.ndarray, lead_region: Tuple[float, float, float, float], baseline_px: float,
                  spec: PaperSpec, fs: float, duration_s: float,
                  occluded: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Read one lead segment back from a trace mask

    The lead's own stroke is tracked through the region (one run per pixel
    column), and the run centroids give a first estimate. Sample k was drawn
    at column rint(x_start + px_per_s * k / fs), so the stroke visible in a
    column is fixed by which samples and connecting segments fed it; the
    estimate is then refined until the drawn extent of every column matches
    the observed one (see ``_fit_stroke``). Columns without trace pixels, or
    flagged in ``occluded``, carry no constraint and are bridged smoothly.

    Args:
        mask: Trace mask from ``remove_grid``
        lead_region: (x_start, x_end, y_top, y_bottom) in pixels; x_start is
            where sample 0 was drawn
        baseline_px: Row of 0 mV
        spec: Paper geometry
        fs: Sampling rate of the output series
        duration_s: Segment duration
        occluded: Optional boolean array over page columns to ignore

    Returns:
        round(fs * duration_s) samples in mV

    Raises:
        EmptyTraceError: If the region holds no usable trace pixel
    """
    x_start, _, y_top, y_bottom = lead_region
    height, width = mask.shape
    n_out = int(round(fs * duration_s))
    if n_out < 1:
        raise EmptyTraceError(f"Lead region {lead_region} holds no sample")
    offsets = list(stroke_offsets(spec.trace_width_px))
    lo, hi = min(offsets), max(offsets)
    sample_x = x_start + spec.px_per_s * np.arange(n_out) / fs
    sample_cols = np.rint(sample_x).astype(np.int64)
    c0 = max(0, int(sample_cols[0]) + lo)
    c1 = min(width - 1, int(sample_cols[-1]) + hi)
    r0 = max(0, int(math.floor(y_top)) + lo)
    r1 = min(height - 1, int(math.ceil(y_bottom)) + hi)
    if c1 < c0 or r1 < r0:
        raise EmptyTraceError(f"Lead region {lead_region} is empty")

    region = mask[r0:r1 + 1, c0:c1 + 1]
    usable = region.any(axis=0)
    if occluded is not None:
        usable &= ~np.asarray(occluded[c0:c1 + 1], dtype=bool)
    if not usable.any():
        raise EmptyTraceError(f"No trace pixel in columns {c0}..{c1}, rows {r0}..{r1}")

    runs = _track_stroke(region, usable, baseline_px - r0)
    tracked = runs[:, 0] >= 0
    columns = np.flatnonzero(tracked) + c0
    run_top = runs[tracked, 0] + r0
    run_bottom = runs[tracked, 1] + r0
    centroid = (run_top + run_bottom) / 2.0 - stroke_bias(spec.trace_width_px)
    initial = np.interp(sample_x, columns, centroid)

    rows = _fit_stroke(sample_cols, columns, run_top - lo, run_bottom - hi, offsets, initial)
    return (baseline_px - rows) / spec.px_per_mv


def occluded_columns(boxes: Sequence[ArtifactBox], band_px: Tuple[float, float], width: int) -> np.ndarray:
    """Columns covered by artifact boxes that reach into a row band"""
    out = np.zeros(width, dtype=bool)
    top, bottom = band_px
    for box in boxes:
        x0, y0, x1, y1 = box.bbox_px
        if y1 < top or y0 > bottom:
            continue
        out[max(0, int(math.floor(x0))):min(width, int(math.ceil(x1)))] = True
    return out


# Reports

@dataclass
class LeadScore:
    """Score of one lead segment; ``error`` is set when it could not be read back"""

    record_id: str
    lead: str
    kind: str
    n_samples: int
    snr_db: Optional[float]
    mse_mv2: Optional[float]
    rmse_mv: Optional[float]
    error: Optional[str] = None


@dataclass
class EvalReport:
    """Per-lead scores of a directory of generated pages

    ``snr_db`` is None for all-zero references and for leads that could not
    be read back; those leads stay out of mean/std and are counted in the
    histogram's undefined bucket, so histogram counts sum to the number of
    scored leads. Exact reconstructions (``inf``) count in the histogram's
    last bin but not in mean/std.
    """

    leads: List[LeadScore] = field(default_factory=list)
    failures: List[Dict[str, str]] = field(default_factory=list)
    bin_width_db: float = DEFAULT_BIN_WIDTH_DB

    @property
    def snr_values(self) -> np.ndarray:
        return np.array([s.snr_db for s in self.leads if s.snr_db is not None], dtype=np.float64)

    @property
    def undefined_count(self) -> int:
        return sum(1 for s in self.leads if s.snr_db is None)

    @property
    def mean_snr_db(self) -> Optional[float]:
        finite = self.snr_values[np.isfinite(self.snr_values)]
        return float(finite.mean()) if finite.size else None

    @property
    def std_snr_db(self) -> Optional[float]:
        finite = self.snr_values[np.isfinite(self.snr_values)]
        return float(finite.std()) if finite.size else None

    def histogram(self, bin_width: Optional[float] = None) -> List[Tuple[Optional[float], Optional[float], int]]:
        """
        SNR counts in [low, high) bins of ``bin_width`` dB

        Leads without an SNR come last as a ``(None, None, count)`` bucket.
        """
        width = bin_width or self.bin_width_db
        values = self.snr_values
        bins: List[Tuple[Optional[float], Optional[float], int]] = []
        finite = values[np.isfinite(values)]
        if finite.size:
            lo = math.floor(finite.min() / width) * width
            n_bins = int(math.floor((finite.max() - lo) / width)) + 1
            counts = np.zeros(n_bins, dtype=np.int64)
            idx = np.clip(np.floor((finite - lo) / width).astype(np.int64), 0, n_bins - 1)
            np.add.at(counts, idx, 1)
            counts[-1] += int(np.sum(np.isposinf(values)))
            bins = [(lo + i * width, lo + (i + 1) * width, int(c)) for i, c in enumerate(counts)]
        elif values.size:
            bins = [(0.0, width, int(values.size))]
        if self.undefined_count:
            bins.append((None, None, self.undefined_count))
        return bins

    def summary(self) -> Dict[str, Any]:
        mse_values = [s.mse_mv2 for s in self.leads if s.mse_mv2 is not None]
        rmse_values = [s.rmse_mv for s in self.leads if s.rmse_mv is not None]
        return {
            'records': len({s.record_id for s in self.leads}),
            'leads': len(self.leads),
            'failures': len(self.failures),
            'lead_failures': sum(1 for s in self.leads if s.error),
            'snr_db_mean': self.mean_snr_db,
            'snr_db_std': self.std_snr_db,
            'snr_db_exact': int(np.sum(np.isposinf(self.snr_values))),
            'snr_db_undefined': self.undefined_count,
            'mse_mv2_mean': float(np.mean(mse_values)) if mse_values else None,
            'rmse_mv_mean': float(np.mean(rmse_values)) if rmse_values else None,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'summary': self.summary(),
            'bin_width_db': self.bin_width_db,
            'histogram': [{'bin_low': lo, 'bin_high': hi, 'count': c} for lo, hi, c in self.histogram()],
            'leads': [asdict(s) for s in self.leads],
            'failures': self.failures,
        }

    def save(self, path: Union[str, Path]) -> Path:
        """Write the JSON report and ``<stem>_snr_hist.csv`` next to it"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=1)
        self.save_histogram(path.with_name(f"{path.stem}_snr_hist.csv"))
        return path

    def save_histogram(self, path: Union[str, Path]) -> Path:
        """CSV of (bin_low, bin_high, count); the undefined bucket has both bounds ``undefined``"""
        path = Path(path)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['bin_low', 'bin_high', 'count'])
            for lo, hi, count in self.histogram():
                if lo is None:
                    writer.writerow(['undefined', 'undefined', count])
                else:
                    writer.writerow([f"{lo:g}", f"{hi:g}", count])
        return path


def _score_lead(mask: np.ndarray, poly: LeadPolyline, reference: np.ndarray, spec: PaperSpec,
                boxes: Sequence[ArtifactBox], record_id: str) -> LeadScore:
    region = (poly.x_range_px[0], poly.x_range_px[1], poly.band_px[0], poly.band_px[1])
    occluded = occluded_columns(boxes, poly.band_px, mask.shape[1]) if boxes else None
    try:
        estimate = extract_trace(mask, region, poly.baseline_px, spec, poly.fs, poly.duration_s, occluded)
    except EmptyTraceError as e:
        logger.warning("%s lead %s (row %d, col %d): %s", record_id, poly.lead_name, poly.row, poly.col, e)
        return LeadScore(record_id, poly.lead_name, poly.kind, 0, None, None, None, str(e))
    n = min(len(estimate), len(reference))
    ref, est = reference[:n], estimate[:n]
    try:
        snr = snr_db(ref, est)
    except UndefinedReferenceError:
        snr = None
    value, root = mse(ref, est)
    return LeadScore(record_id, poly.lead_name, poly.kind, n, snr, value, root)


def evaluate_record(image_path: Union[str, Path], sidecar_path: Union[str, Path],
                    truth_path: Union[str, Path]) -> List[LeadScore]:
    """
    Digitize one generated page and score every lead segment

    A lead whose region holds no trace is scored with ``error`` set and no
    SNR; the other leads of the page are still scored.

    Raises:
        EvaluationError: If the page cannot be digitized
    """
    meta = GroundTruthMeta.load(sidecar_path)
    spec = PaperSpec(**meta.paper)
    image = RasterImage.load(image_path)
    if not np.allclose(meta.matrix, np.eye(3)):
        image = warp_image(image, invert(meta.matrix), fill=spec.bg_color)
    mask = remove_grid(image, spec)

    leads = [p for p in meta.polylines if p.kind != 'pulse']
    fs = leads[0].fs if leads else 0.0
    truth = read_record(truth_path, RecordFormat.CSV, fs=fs)

    scores = []
    for poly in leads:
        first = int(round(poly.t0_s * poly.fs))
        last = min(truth.n_samples, int(round((poly.t0_s + poly.duration_s) * poly.fs)))
        reference = truth.lead(poly.lead_name)[first:last]
        scores.append(_score_lead(mask, poly, reference, spec, meta.boxes, meta.record_id))
    return scores


def _evaluate_job(sidecar: Path) -> Tuple[Path, List[LeadScore], Optional[str]]:
    stem = sidecar.stem
    try:
        scores = evaluate_record(sidecar.with_name(f"{stem}.png"), sidecar, sidecar.with_name(f"{stem}_gt.csv"))
        return sidecar, scores, None
    except Exception as e:
        logger.error("Evaluation of %s failed: %s", sidecar.name, e)
        return sidecar, [], f"{type(e).__name__}: {e}"


def evaluate_directory(images_dir: Union[str, Path], workers: int = 1,
                       bin_width: float = DEFAULT_BIN_WIDTH_DB) -> EvalReport:
    """
    Score every generated page of an output directory

    Each ``<stem>.json`` sidecar is paired with ``<stem>.png`` and
    ``<stem>_gt.csv``. Failed pages are listed in ``report.failures``.

    Raises:
        EvaluationError: If the directory holds no sidecar
    """
    images_dir = Path(images_dir)
    sidecars = sorted(p for p in images_dir.glob('*.json') if p.name != 'manifest.json')
    if not sidecars:
        raise EvaluationError(f"No sidecar files found in {images_dir}")

    results = []
    progress = tqdm(total=len(sidecars), desc="Evaluating", unit="image", disable=None)
    if workers <= 1:
        for sidecar in sidecars:
            results.append(_evaluate_job(sidecar))
            progress.update(1)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for future in as_completed([executor.submit(_evaluate_job, s) for s in sidecars]):
                results.append(future.result())
                progress.update(1)
    progress.close()

    report = EvalReport(bin_width_db=bin_width)
    for sidecar, scores, error in sorted(results, key=lambda r: r[0].name):
        report.leads.extend(scores)
        if error:
            report.failures.append({'sidecar': sidecar.name, 'error': error})
    summary = report.summary()
    logger.info("Evaluated %d lead(s) from %d page(s): mean SNR %s dB", summary['leads'], summary['records'],
                f"{summary['snr_db_mean']:.2f}" if summary['snr_db_mean'] is not None else "n/a")
    return report
