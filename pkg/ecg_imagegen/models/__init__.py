"""Data models for ECG ImageGen"""

from .validation import ParameterError
from .ecg_record import EcgRecord, SignalNoiseKind, SignalNoiseSpec, STANDARD_LEADS
from .paper import PaperSpec, LeadLayout, LeadPolyline, MM_PER_INCH, CALIBRATION_ZONE_MM
from .raster import RasterImage
from .artifacts import ArtifactBox, ArtifactKind, HandwritingStyle, PrintedTemplate, TemplateField, TemplateFont
from .distortions import CreaseSpec, KelvinConvention, NoiseSpec, QuiltSpec
from .ground_truth import GroundTruthMeta, SCHEMA_VERSION

__all__ = [
    'ParameterError',
    'EcgRecord',
    'SignalNoiseKind',
    'SignalNoiseSpec',
    'STANDARD_LEADS',
    'PaperSpec',
    'LeadLayout',
    'LeadPolyline',
    'MM_PER_INCH',
    'CALIBRATION_ZONE_MM',
    'RasterImage',
    'ArtifactBox',
    'ArtifactKind',
    'HandwritingStyle',
    'PrintedTemplate',
    'TemplateField',
    'TemplateFont',
    'CreaseSpec',
    'KelvinConvention',
    'NoiseSpec',
    'QuiltSpec',
    'GroundTruthMeta',
    'SCHEMA_VERSION',
]
