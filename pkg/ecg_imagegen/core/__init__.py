"""Core utilities for ECG ImageGen"""

from .config import (
    Config,
    ConfigError,
    CreasesConfig,
    DistortionConfig,
    HandwritingConfig,
    ImagingConfig,
    InputConfig,
    PerspectiveConfig,
    TemplateConfig,
    WrinklesConfig,
    load_config,
)
from .utils import derive_seed, format_duration, make_rng

__all__ = [
    'Config',
    'ConfigError',
    'CreasesConfig',
    'DistortionConfig',
    'HandwritingConfig',
    'ImagingConfig',
    'InputConfig',
    'PerspectiveConfig',
    'TemplateConfig',
    'WrinklesConfig',
    'load_config',
    'derive_seed',
    'format_duration',
    'make_rng',
]
