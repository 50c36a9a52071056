"""Services for ECG ImageGen"""

from .ecg_io import (
    EcgIOError,
    RecordFormat,
    add_signal_noise,
    parse_record,
    read_record,
    segment_and_resample,
    write_record,
)
from .grid_renderer import RenderError, plot_record, render_blank_paper
from .handwriting import synthesize_handwriting
from .text_artifacts import TextArtifactError, overlay_handwriting, overlay_printed_text, select_keywords
from .crease_wrinkle import CreaseWrinkleError, apply_creases, blend_wrinkles, min_error_boundary_cut, quilt_texture
from .geometry import GeometryError, build_transform, transform_points, warp_image
from .imaging_noise import ImagingNoiseError, apply_noise_spec
from .record_scanner import RecordScanner
from .pipeline import PipelineError, StageError, generate_batch, generate_one, report_timings
from .evaluation import EvalReport, EvaluationError, evaluate_directory

__all__ = [
    'EcgIOError',
    'RecordFormat',
    'add_signal_noise',
    'parse_record',
    'read_record',
    'segment_and_resample',
    'write_record',
    'RenderError',
    'plot_record',
    'render_blank_paper',
    'synthesize_handwriting',
    'TextArtifactError',
    'overlay_handwriting',
    'overlay_printed_text',
    'select_keywords',
    'CreaseWrinkleError',
    'apply_creases',
    'blend_wrinkles',
    'min_error_boundary_cut',
    'quilt_texture',
    'GeometryError',
    'build_transform',
    'transform_points',
    'warp_image',
    'ImagingNoiseError',
    'apply_noise_spec',
    'RecordScanner',
    'PipelineError',
    'StageError',
    'generate_batch',
    'generate_one',
    'report_timings',
    'EvalReport',
    'EvaluationError',
    'evaluate_directory',
]
