"""
Pipeline Service - Per-record stage sequence, batch generation and timing reports

Stages run in a fixed order: render, printed text, handwriting, creases,
wrinkles, perspective, imaging noise. Each stage draws from its own seed
``derive_seed(master_seed, record_index, stage_id)``, so switching one stage
off never changes what another stage draws.
"""
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from contextlib import contextmanager
from dataclasses import asdict, dataclass, replace
from enum import IntEnum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from .. import __version__
from ..core.config import Config, DistortionConfig
from ..core.utils import derive_seed, format_duration, make_rng
from ..models.distortions import CreaseSpec
from ..models.ecg_record import EcgRecord
from ..models.ground_truth import GroundTruthMeta
from ..models.paper import LeadPolyline
from ..models.raster import RasterImage
from .crease_wrinkle import apply_creases, blend_wrinkles, generate_crease_lines, wrinkle_texture
from .ecg_io import RecordFormat, add_signal_noise, read_record, segment_and_resample, write_record
from .geometry import random_perspective, transform_points, warp_image
from .grid_renderer import plot_record, render_blank_paper
from .handwriting import get_style, synthesize_handwriting
from .imaging_noise import apply_noise_spec
from .record_scanner import RecordScanner
from .text_artifacts import (
    StencilSizeError,
    lead_name_fields,
    load_lexicon,
    load_template,
    overlay_handwriting,
    overlay_printed_text,
    select_keywords,
    template_context,
)


logger = logging.getLogger(__name__)

MANIFEST_FILE_NAME = 'manifest.json'
MANIFEST_VERSION = 1

# Stage rows of the timing report and the reference timing rows they belong to
TIMING_STAGES: Tuple[Tuple[str, str], ...] = (
    ('render', 'Distortionless ECG'),
    ('printed_text', ''),
    ('handwriting', 'Handwritten text artifacts'),
    ('creases', 'Wrinkles and creases'),
    ('wrinkles', 'Wrinkles and creases'),
    ('wrinkles_quilt', ''),
    ('wrinkles_blend', ''),
    ('perspective', 'Perspective transformations'),
    ('imaging_noise', ''),
)
REFERENCE_ROWS = ('Distortionless ECG', 'Handwritten text artifacts', 'Wrinkles and creases',
                  'Perspective transformations')
# Timed parts of a stage; already included in the parent's time
SUB_STAGES: Dict[str, str] = {'wrinkles_quilt': 'wrinkles', 'wrinkles_blend': 'wrinkles'}


class PipelineError(Exception):
    """Base exception for pipeline orchestration"""
    pass


class StageError(PipelineError):
    """A stage failed while generating one record"""

    def __init__(self, stage: str, record_id: str, cause: BaseException):
        self.stage = stage
        self.record_id = record_id
        self.cause = cause
        super().__init__(f"Stage '{stage}' failed for record {record_id or '<unnamed>'}: "
                         f"{type(cause).__name__}: {cause}")


class EmptyReportError(PipelineError):
    """Timing report requested for a manifest without successful records"""
    pass


class Stage(IntEnum):
    """Fixed stage identifiers used for seed derivation"""

    SIGNAL_NOISE = 0
    RENDER = 1
    PRINTED_TEXT = 2
    HANDWRITING = 3
    CREASES = 4
    WRINKLES = 5
    PERSPECTIVE = 6
    IMAGING = 7


class GeneratedPage(NamedTuple):
    image: RasterImage
    meta: GroundTruthMeta
    record: EcgRecord


@dataclass
class _RecordRun:
    """Mutable state threaded through the stages of one record"""

    config: DistortionConfig
    record_index: int
    record: EcgRecord
    meta: GroundTruthMeta
    image: Optional[RasterImage] = None

    def seed(self, stage: Stage) -> int:
        return derive_seed(self.config.master_seed, self.record_index, int(stage))

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as e:
            raise StageError(name, self.record.record_id, e) from e
        finally:
            self.meta.timings[name] = self.meta.timings.get(name, 0.0) + time.perf_counter() - start

    def warn(self, message: str) -> None:
        logger.warning("%s: %s", self.record.record_id or '<unnamed>', message)
        self.meta.warnings.append(message)


# Single record

def prepare_record(rec: EcgRecord, cfg: DistortionConfig, record_index: int) -> EcgRecord:
    """
    Cut, resample and contaminate a record as configured in ``cfg.input`` and ``cfg.signal_noise``

    A duration longer than what remains after ``start_s`` is shortened to the
    remainder with a warning.
    """
    start = cfg.input.start_s
    remaining = rec.duration_s - start
    duration = cfg.input.duration_s if cfg.input.duration_s is not None else remaining
    if duration > remaining + 1e-9 and remaining > 0:
        logger.warning("Record %s lasts %g s; rendering %g s instead of %g s",
                       rec.record_id or '<unnamed>', rec.duration_s, remaining, duration)
        duration = remaining
    target_fs = cfg.input.target_fs or rec.fs
    out = segment_and_resample(rec, start, duration, target_fs)
    return add_signal_noise(out, cfg.signal_noise, derive_seed(cfg.master_seed, record_index, int(Stage.SIGNAL_NOISE)))


@lru_cache(maxsize=8)
def _lexicon(path: str) -> Tuple[str, ...]:
    return tuple(load_lexicon(path))


@lru_cache(maxsize=8)
def _corpus(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def _stage_render(run: _RecordRun) -> List[LeadPolyline]:
    cfg = run.config
    with run.stage('render'):
        run.record = prepare_record(run.record, cfg, run.record_index)
        page = render_blank_paper(cfg.paper)
        run.image, polylines = plot_record(page, run.record, cfg.layout, cfg.paper)
    for p in polylines:
        if p.clipped:
            run.meta.warnings.append(f"Trace of lead {p.lead_name} (row {p.row}, col {p.col}) was clipped")
    return polylines


def _stage_printed_text(run: _RecordRun, polylines: List[LeadPolyline]) -> None:
    cfg = run.config
    tpl_cfg = cfg.template
    with run.stage('printed_text'):
        context = template_context(run.record.record_id, run.record.fs, run.record.duration_s, cfg.paper,
                                   run.seed(Stage.PRINTED_TEXT))
        template = load_template(tpl_cfg.path or tpl_cfg.name, context, tpl_cfg.allow_overlap, tpl_cfg.font)
        if tpl_cfg.print_lead_names:
            template = template.with_fields(tuple(lead_name_fields(polylines, cfg.paper, tpl_cfg.lead_name_size_mm)))
        run.image, boxes, warnings = overlay_printed_text(run.image, template, polylines, cfg.paper)
    run.meta.boxes.extend(boxes)
    run.meta.warnings.extend(warnings)


def _stage_handwriting(run: _RecordRun) -> None:
    hw = run.config.handwriting
    seed = run.seed(Stage.HANDWRITING)
    with run.stage('handwriting'):
        rng = make_rng(seed)
        data_dir = Config.data_dir()
        lexicon = _lexicon(str(hw.lexicon_path or data_dir / 'ecg_lexicon.txt'))
        corpus = _corpus(str(hw.corpus_path or data_dir / 'ecg_corpus.txt'))
        count = int(rng.integers(hw.count_range[0], hw.count_range[1] + 1))
        keywords = select_keywords(corpus, lexicon, count, derive_seed(seed, 0), run.meta.warnings)
        for i, keyword in enumerate(keywords):
            style = get_style(int(rng.integers(hw.style_range[0], hw.style_range[1] + 1)))
            size_px = float(rng.uniform(*hw.size_px_range)) if hw.size_px_range[1] > hw.size_px_range[0] \
                else float(hw.size_px_range[0])
            stencil = synthesize_handwriting(keyword, style, size_px, derive_seed(seed, 1, i))
            try:
                run.image, box = overlay_handwriting(run.image, stencil, None, hw.ink_color,
                                                     derive_seed(seed, 2, i), hw.opacity)
            except StencilSizeError as e:
                run.warn(f"Handwritten keyword {keyword!r} skipped: {e}")
                continue
            box.extra.update({'style_id': style.style_id, 'size_px': round(size_px, 3)})
            run.meta.boxes.append(box)


def _stage_creases(run: _RecordRun) -> None:
    cc = run.config.creases
    with run.stage('creases'):
        rng = make_rng(run.seed(Stage.CREASES))
        n = int(rng.integers(cc.count_range[0], cc.count_range[1] + 1))
        lo, hi = cc.theta_range_deg
        theta = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
        spec = CreaseSpec(n=n, theta_deg=theta, intensity=cc.intensity, sigma_px=cc.sigma_px,
                          line_width_px=cc.line_width_px, lighten=cc.lighten)
        run.image = apply_creases(run.image, spec)
        starts, ends = generate_crease_lines(n, theta, run.image.width, run.image.height)
    run.meta.creases = {
        **asdict(spec),
        'start_points': [list(p) for p in starts],
        'end_points': [list(p) for p in ends],
    }


def _stage_wrinkles(run: _RecordRun) -> None:
    wc = run.config.wrinkles
    seed = run.seed(Stage.WRINKLES)
    with run.stage('wrinkles'):
        seed_texture = RasterImage.load(wc.seed_texture) if wc.seed_texture else None
        with run.stage('wrinkles_quilt'):
            texture = wrinkle_texture(run.image.width, run.image.height, wc.block_px, seed,
                                      texture_scale=wc.texture_scale, overlap_px=wc.overlap_px,
                                      candidates=wc.candidates, seed_texture=seed_texture,
                                      seed_texture_px=wc.seed_texture_px)
        with run.stage('wrinkles_blend'):
            run.image = blend_wrinkles(run.image, texture, wc.alpha)
    run.meta.wrinkles = {
        'alpha': wc.alpha,
        'block_px': wc.block_px,
        'overlap_px': wc.overlap_px or max(1, wc.block_px // 6),
        'candidates': wc.candidates,
        'texture_scale': wc.texture_scale,
        'seed_texture': wc.seed_texture or 'fractal',
        'texture_digest': texture.digest(),
    }


def _box_bounds(points: np.ndarray) -> Tuple[float, float, float, float]:
    return (float(points[:, 0].min()), float(points[:, 1].min()),
            float(points[:, 0].max()), float(points[:, 1].max()))


def _stage_perspective(run: _RecordRun, polylines: List[LeadPolyline]) -> List[LeadPolyline]:
    pc = run.config.perspective
    with run.stage('perspective'):
        rng = make_rng(run.seed(Stage.PERSPECTIVE))
        matrix = random_perspective(run.image.width, run.image.height, rng, pc.corner_jitter_frac,
                                    pc.rotate_deg_max, pc.scale_range, pc.shear_deg_max)
        run.image = warp_image(run.image, matrix, pc.fill)
        warped = [replace(p, points=transform_points(p.points, matrix)) for p in polylines]
        for box in run.meta.boxes:
            x0, y0, x1, y1 = box.bbox_px
            corners = transform_points([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], matrix)
            box.extra['warped_bbox_px'] = list(_box_bounds(corners))
    run.meta.matrix = matrix
    return warped


def _stage_imaging(run: _RecordRun) -> None:
    spec = run.config.imaging.noise_spec()
    with run.stage('imaging_noise'):
        run.image = apply_noise_spec(run.image, spec, run.seed(Stage.IMAGING))
    run.meta.imaging = {k: (v.value if hasattr(v, 'value') else v) for k, v in asdict(spec).items()}


def render_page(rec: EcgRecord, cfg: DistortionConfig, record_index: int) -> GeneratedPage:
    """
    Run every enabled stage on one record

    Returns:
        GeneratedPage with the final image, its ground truth and the record
        actually rendered (after segmenting, resampling and signal noise)

    Raises:
        StageError: Naming the stage that failed
    """
    meta = GroundTruthMeta(record_id=rec.record_id, record_index=record_index,
                           paper=Config.to_dict(cfg)['paper'])
    run = _RecordRun(cfg, record_index, rec, meta)
    start = time.perf_counter()

    polylines = _stage_render(run)
    if cfg.template.enabled:
        _stage_printed_text(run, polylines)
    if cfg.handwriting.enabled:
        _stage_handwriting(run)
    if cfg.creases.enabled:
        _stage_creases(run)
    if cfg.wrinkles.enabled:
        _stage_wrinkles(run)
    if cfg.perspective.enabled:
        polylines = _stage_perspective(run, polylines)
    if cfg.imaging.enabled:
        _stage_imaging(run)

    meta.polylines = polylines
    meta.timings['total'] = time.perf_counter() - start
    meta.image_digest = run.image.digest()
    return GeneratedPage(run.image, meta, run.record)


def generate_one(rec: EcgRecord, cfg: DistortionConfig, record_index: int) -> Tuple[RasterImage, GroundTruthMeta]:
    """
    Generate one synthetic paper ECG

    Args:
        rec: Input record in millivolts
        cfg: Distortion recipe
        record_index: Position of the record in its batch (part of every stage seed)

    Returns:
        (image, ground truth)

    Raises:
        StageError: Naming the stage that failed
    """
    page = render_page(rec, cfg, record_index)
    return page.image, page.meta


# Batch

def _output_stem(index: int, path: Path) -> str:
    return f"{index:05d}_{path.stem}"


def _process_record(index: int, path: Path, fmt: RecordFormat, cfg: DistortionConfig,
                    out_dir: Path) -> Dict[str, Any]:
    """Generate and write one record; never raises"""
    stage = 'read'
    try:
        rec = read_record(path, fmt, fs=cfg.input.csv_fs)
        stage = 'generate'
        page = render_page(rec, cfg, index)
        stage = 'write'
        stem = _output_stem(index, path)
        image_path = page.image.save(out_dir / f"{stem}.png", dpi=cfg.paper.dpi)
        truth_path = out_dir / f"{stem}_gt.csv"
        truth_path.write_bytes(write_record(page.record, RecordFormat.CSV))
        page.meta.save(out_dir / f"{stem}.json")
        return {
            'index': index,
            'record_id': page.meta.record_id,
            'source': str(path),
            'image': image_path.name,
            'sidecar': f"{stem}.json",
            'ground_truth': truth_path.name,
            'fs': page.record.fs,
            'digest': page.meta.image_digest,
            'timings': page.meta.timings,
            'warnings': page.meta.warnings,
        }
    except StageError as e:
        logger.error("Record %s failed: %s", path.name, e)
        return {'index': index, 'source': str(path), 'stage': e.stage, 'error': str(e)}
    except Exception as e:
        logger.error("Record %s failed during %s: %s", path.name, stage, e)
        return {'index': index, 'source': str(path), 'stage': stage, 'error': f"{type(e).__name__}: {e}"}


def _timing_summary(entries: List[Dict[str, Any]]) -> Dict[str, Dict[str, float]]:
    totals: Dict[str, float] = {}
    for entry in entries:
        for name, seconds in entry.get('timings', {}).items():
            totals[name] = totals.get(name, 0.0) + float(seconds)
    n = max(1, len(entries))
    return {'mean': {k: v / n for k, v in totals.items()}, 'total': totals}


def generate_batch(input_dir: Union[str, Path], out_dir: Union[str, Path], cfg: DistortionConfig,
                   workers: int = 1) -> Dict[str, Any]:
    """
    Generate one image, sidecar and ground-truth CSV per record in a directory

    Records are processed over ``workers`` processes (in-process for 1).
    Image bytes depend only on the record, its sorted position and the
    configuration, never on the worker count.

    Args:
        input_dir: Directory of ``.csv`` / ``.ecg`` records
        out_dir: Output directory (created if needed)
        cfg: Distortion recipe
        workers: Number of worker processes

    Returns:
        Manifest dictionary (also written to ``out_dir/manifest.json``)

    Raises:
        PipelineError: If the input directory holds no record
    """
    input_dir, out_dir = Path(input_dir), Path(out_dir)
    jobs = RecordScanner.scan_directory(input_dir)
    if not jobs:
        raise PipelineError(f"No record files (.csv, .ecg) found in {input_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = max(1, int(workers))
    logger.info("Generating %d record(s) from %s with %d worker(s)", len(jobs), input_dir, workers)

    results: List[Dict[str, Any]] = []
    progress = tqdm(total=len(jobs), desc="Generating", unit="image", disable=None)
    if workers == 1:
        for index, (path, fmt) in enumerate(jobs):
            results.append(_process_record(index, path, fmt, cfg, out_dir))
            progress.update(1)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_process_record, index, path, fmt, cfg, out_dir)
                       for index, (path, fmt) in enumerate(jobs)]
            for future in as_completed(futures):
                results.append(future.result())
                progress.update(1)
    progress.close()

    results.sort(key=lambda r: r['index'])
    records = [r for r in results if 'error' not in r]
    failures = [r for r in results if 'error' in r]
    manifest = {
        'manifest_version': MANIFEST_VERSION,
        'generator_version': __version__,
        'workers': workers,
        'master_seed': cfg.master_seed,
        'input_dir': str(input_dir),
        'config': Config.to_dict(cfg),
        'records': records,
        'failures': failures,
        'summary': {'requested': len(jobs), 'succeeded': len(records), 'failed': len(failures)},
        'timings': _timing_summary(records),
    }
    with open(out_dir / MANIFEST_FILE_NAME, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=1)

    mean_total = manifest['timings']['mean'].get('total')
    logger.info("Generated %d image(s), %d failure(s); mean %s per image",
                len(records), len(failures), format_duration(mean_total))
    return manifest


def load_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def report_timings(manifest: Union[Dict[str, Any], str, Path]) -> str:
    """
    Format per-stage mean seconds per image as a plain-text table

    Stage rows come first, each tagged with the reference timing row it
    belongs to (blank for stages the reference table has no row for).
    Sub-stages are indented under their parent and left out of the
    ``stage sum`` line, which therefore never exceeds the total. A grouped
    block then sums the stages of each reference row, followed by the total
    per image.

    Args:
        manifest: Manifest dictionary or path to ``manifest.json``

    Raises:
        EmptyReportError: If the manifest lists no successful record
    """
    if not isinstance(manifest, dict):
        manifest = load_manifest(manifest)
    entries = [r for r in manifest.get('records', []) if r.get('timings')]
    if not entries:
        raise EmptyReportError("Manifest holds no timed record")
    means = _timing_summary(entries)['mean']

    lines = [f"Mean time per image over {len(entries)} image(s) (seconds)", ""]
    header = f"{'stage':<16} {'mean_s':>12}  reference row"
    lines += [header, '-' * len(header)]
    for name, row in TIMING_STAGES:
        if name not in means:
            continue
        if name in SUB_STAGES:
            lines.append(f"{'  ' + name:<16} {means[name]:>12.6g}  (part of {SUB_STAGES[name]})")
        else:
            lines.append(f"{name:<16} {means[name]:>12.6g}  {row}".rstrip())
    for name in sorted(set(means) - {n for n, _ in TIMING_STAGES} - {'total'}):
        lines.append(f"{name:<16} {means[name]:>12.6g}")
    stage_sum = sum(v for n, v in means.items() if n != 'total' and n not in SUB_STAGES)
    lines.append(f"{'stage sum':<16} {stage_sum:>12.6g}")
    if 'total' in means:
        lines.append(f"{'total':<16} {means['total']:>12.6g}")

    grouped = []
    for row in REFERENCE_ROWS:
        stages = [n for n, r in TIMING_STAGES if r == row and n in means]
        if stages:
            grouped.append((row, sum(means[n] for n in stages)))
    if grouped:
        lines += ["", f"{'reference row':<30} {'mean_s':>12}"]
        for row, seconds in grouped:
            lines.append(f"{row:<30} {seconds:>12.6g}")
        if 'total' in means:
            lines.append(f"{'Total':<30} {means['total']:>12.6g}")
    return '\n'.join(lines) + '\n'
