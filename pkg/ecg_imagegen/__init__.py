"""
ECG ImageGen - Synthetic paper ECG images with ground truth
"""

__version__ = "1.0.0"

# Export main components for convenience
from .core import Config, DistortionConfig, load_config
from .models import EcgRecord, GroundTruthMeta, PaperSpec, RasterImage
from .services import generate_batch, generate_one, parse_record

__all__ = [
    'Config',
    'DistortionConfig',
    'load_config',
    'EcgRecord',
    'GroundTruthMeta',
    'PaperSpec',
    'RasterImage',
    'generate_batch',
    'generate_one',
    'parse_record',
    '__version__',
]
