"""Configuration management for ECG ImageGen - the seeded distortion recipe"""

import copy
import logging
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union, get_args, get_origin, get_type_hints

import yaml

from ..models.ecg_record import SignalNoiseSpec
from ..models.paper import LeadLayout, PaperSpec, RGB
from ..models.artifacts import TemplateFont
from ..models.distortions import NoiseSpec
from ..models.validation import ParameterError, require


logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Exception raised when a configuration file cannot be used

    Attributes:
        key: Dotted path of the offending key or field (e.g. ``imaging.sp_p``)
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
        self.message = message


@dataclass(frozen=True)
class InputConfig:
    """How records are read and cut before rendering

    ``duration_s`` of None keeps the record to its end; ``target_fs`` of
    None keeps the source rate.
    """

    csv_fs: float = 500.0
    start_s: float = 0.0
    duration_s: Optional[float] = 10.0
    target_fs: Optional[float] = None

    def __post_init__(self):
        require(self.csv_fs > 0, 'csv_fs', f"must be positive, got {self.csv_fs}")
        require(self.start_s >= 0, 'start_s', f"must be >= 0, got {self.start_s}")
        if self.duration_s is not None:
            require(self.duration_s > 0, 'duration_s', f"must be positive, got {self.duration_s}")
        if self.target_fs is not None:
            require(self.target_fs > 0, 'target_fs', f"must be positive, got {self.target_fs}")


@dataclass(frozen=True)
class TemplateConfig:
    """Printed text: bundled template name or a template file path

    ``allow_overlap`` and ``font`` override the template file when set.
    """

    enabled: bool = True
    name: str = 'standard'
    path: Optional[str] = None
    allow_overlap: Optional[bool] = None
    font: Optional[TemplateFont] = None
    print_lead_names: bool = True
    lead_name_size_mm: float = 3.5

    def __post_init__(self):
        require(self.lead_name_size_mm > 0, 'lead_name_size_mm', f"must be positive, got {self.lead_name_size_mm}")


@dataclass(frozen=True)
class HandwritingConfig:
    enabled: bool = True
    style_range: Tuple[int, int] = (1, 7)
    count_range: Tuple[int, int] = (1, 3)
    size_px_range: Tuple[float, float] = (28.0, 40.0)
    lexicon_path: Optional[str] = None
    corpus_path: Optional[str] = None
    ink_color: RGB = (24, 30, 72)
    opacity: float = 0.9

    def __post_init__(self):
        lo, hi = self.style_range
        require(1 <= lo <= hi <= 7, 'style_range', f"must satisfy 1 <= lo <= hi <= 7, got {self.style_range}")
        lo, hi = self.count_range
        require(0 <= lo <= hi, 'count_range', f"must satisfy 0 <= lo <= hi, got {self.count_range}")
        lo, hi = self.size_px_range
        require(8 <= lo <= hi, 'size_px_range', f"must satisfy 8 <= lo <= hi, got {self.size_px_range}")
        require(0.0 <= self.opacity <= 1.0, 'opacity', f"must be in [0, 1], got {self.opacity}")
        require(len(self.ink_color) == 3 and all(0 <= c <= 255 for c in self.ink_color), 'ink_color',
                f"expected an RGB triple, got {self.ink_color!r}")


@dataclass(frozen=True)
class CreasesConfig:
    """Crease recipe; count and angle are sampled per record"""

    enabled: bool = True
    count_range: Tuple[int, int] = (1, 4)
    theta_range_deg: Tuple[float, float] = (30.0, 150.0)
    intensity: float = 0.35
    sigma_px: float = 4.0
    line_width_px: int = 2
    lighten: bool = False

    def __post_init__(self):
        lo, hi = self.count_range
        require(0 <= lo <= hi, 'count_range', f"must satisfy 0 <= lo <= hi, got {self.count_range}")
        lo, hi = self.theta_range_deg
        require(0 < lo <= hi < 180, 'theta_range_deg', f"must lie inside (0, 180), got {self.theta_range_deg}")
        require(0.0 <= self.intensity <= 1.0, 'intensity', f"must be in [0, 1], got {self.intensity}")
        require(self.sigma_px >= 0, 'sigma_px', f"must be >= 0, got {self.sigma_px}")
        require(self.line_width_px >= 1, 'line_width_px', f"must be >= 1, got {self.line_width_px}")


@dataclass(frozen=True)
class WrinklesConfig:
    """Wrinkle recipe

    The texture is quilted at ``texture_scale`` times the page size and
    upscaled. ``seed_texture`` is an image path; None uses procedural noise.
    """

    enabled: bool = True
    alpha: float = 0.35
    block_px: int = 36
    overlap_px: int = 0
    candidates: int = 20
    texture_scale: float = 0.25
    seed_texture: Optional[str] = None
    seed_texture_px: int = 128

    def __post_init__(self):
        require(0.0 <= self.alpha <= 1.0, 'alpha', f"must be in [0, 1], got {self.alpha}")
        require(self.block_px >= 2, 'block_px', f"must be >= 2, got {self.block_px}")
        require(0 <= self.overlap_px < self.block_px, 'overlap_px',
                f"must be in [0, block_px), got {self.overlap_px}")
        require(self.candidates >= 1, 'candidates', f"must be >= 1, got {self.candidates}")
        require(0.0 < self.texture_scale <= 1.0, 'texture_scale', f"must be in (0, 1], got {self.texture_scale}")
        require(self.seed_texture_px >= self.block_px, 'seed_texture_px',
                f"must be >= block_px ({self.block_px}), got {self.seed_texture_px}")


@dataclass(frozen=True)
class PerspectiveConfig:
    """Random viewpoint: corner jitter composed with a small affine move"""

    enabled: bool = True
    corner_jitter_frac: float = 0.03
    rotate_deg_max: float = 2.0
    scale_range: Tuple[float, float] = (0.97, 1.03)
    shear_deg_max: float = 1.0
    fill: RGB = (255, 255, 255)

    def __post_init__(self):
        require(0.0 <= self.corner_jitter_frac < 0.25, 'corner_jitter_frac',
                f"must be in [0, 0.25), got {self.corner_jitter_frac}")
        require(0.0 <= self.rotate_deg_max <= 45.0, 'rotate_deg_max', f"must be in [0, 45], got {self.rotate_deg_max}")
        lo, hi = self.scale_range
        require(0 < lo <= hi, 'scale_range', f"must satisfy 0 < lo <= hi, got {self.scale_range}")
        require(0.0 <= self.shear_deg_max < 45.0, 'shear_deg_max', f"must be in [0, 45), got {self.shear_deg_max}")


@dataclass(frozen=True)
class ImagingConfig(NoiseSpec):
    """Imaging noise stage: NoiseSpec with pipeline defaults and an on/off switch"""

    gaussian_eta: float = 3.0
    poisson_lambda: float = 2.0
    sp_p: float = 0.001
    enabled: bool = True

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(self.gaussian_eta, self.poisson_lambda, self.poisson_centered,
                         self.sp_p, self.kelvin, self.kelvin_convention)


@dataclass(frozen=True)
class DistortionConfig:
    """Full seeded recipe of every pipeline stage"""

    master_seed: int = 0
    input: InputConfig = field(default_factory=InputConfig)
    paper: PaperSpec = field(default_factory=PaperSpec)
    layout: LeadLayout = field(default_factory=LeadLayout)
    template: TemplateConfig = field(default_factory=TemplateConfig)
    signal_noise: SignalNoiseSpec = field(default_factory=SignalNoiseSpec)
    handwriting: HandwritingConfig = field(default_factory=HandwritingConfig)
    creases: CreasesConfig = field(default_factory=CreasesConfig)
    wrinkles: WrinklesConfig = field(default_factory=WrinklesConfig)
    perspective: PerspectiveConfig = field(default_factory=PerspectiveConfig)
    imaging: ImagingConfig = field(default_factory=ImagingConfig)

    def __post_init__(self):
        require(self.master_seed >= 0, 'master_seed', f"must be >= 0, got {self.master_seed}")

    def with_seed(self, master_seed: int) -> "DistortionConfig":
        return replace(self, master_seed=master_seed)

    def without_distortions(self) -> "DistortionConfig":
        """Same paper and layout with every artifact stage switched off"""
        return replace(
            self,
            template=replace(self.template, enabled=False),
            handwriting=replace(self.handwriting, enabled=False),
            creases=replace(self.creases, enabled=False),
            wrinkles=replace(self.wrinkles, enabled=False),
            perspective=replace(self.perspective, enabled=False),
            imaging=replace(self.imaging, enabled=False),
        )


def _join(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


def _as_tuple(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return tuple(_as_tuple(v) for v in value)
    return value


def _convert(tp: Any, value: Any, key: str) -> Any:
    """Convert a YAML value to the annotated field type"""
    origin = get_origin(tp)
    if origin is Union:
        if value is None:
            return None
        inner = [a for a in get_args(tp) if a is not type(None)]
        return _convert(inner[0], value, key)
    if is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(key, f"expected a mapping, got {type(value).__name__}")
        return _build(tp, value, key)
    if isinstance(tp, type) and issubclass(tp, Enum):
        try:
            return tp(value)
        except ValueError:
            choices = ', '.join(m.value for m in tp)
            raise ConfigError(key, f"unknown value {value!r} (expected one of: {choices})")
    if origin in (tuple, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {type(value).__name__}")
        return _as_tuple(value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    return value


def _build(cls: type, data: Dict[str, Any], prefix: str) -> Any:
    """Instantiate a config dataclass, naming dotted keys in every error"""
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls) if f.init}
    for key in data:
        if key not in known:
            raise ConfigError(_join(prefix, str(key)), f"Unknown configuration key: {_join(prefix, str(key))}")
    kwargs = {name: _convert(hints[name], value, _join(prefix, name)) for name, value in data.items()}
    try:
        return cls(**kwargs)
    except ParameterError as e:
        raise ConfigError(_join(prefix, e.field), e.message)


def _plain(value: Any) -> Any:
    """Turn dataclass output into YAML-safe builtins"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class Config:
    """Loads, validates and saves the distortion recipe as YAML"""

    DEFAULT_FILE_NAME = 'ecg_imagegen.yaml'
    PACKAGE_DIR = Path(__file__).resolve().parent.parent

    @classmethod
    def load(cls, path: Union[str, Path]) -> DistortionConfig:
        """
        Load and validate a configuration file

        Args:
            path: YAML file; an empty file yields the defaults

        Returns:
            Validated DistortionConfig

        Raises:
            ConfigError: If the file is unreadable, malformed, has unknown keys
                or violates a field invariant
        """
        path = Path(path)
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
        except OSError as e:
            raise ConfigError('', f"Cannot read configuration {path}: {e}")
        except yaml.YAMLError as e:
            raise ConfigError('', f"Malformed configuration {path}: {e}")
        config = cls.from_dict(data or {})
        logger.debug("Loaded configuration from %s", path)
        return config

    @classmethod
    def save(cls, config: DistortionConfig, path: Union[str, Path]) -> None:
        """Save configuration to YAML file"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            yaml.safe_dump(cls.to_dict(config), f, default_flow_style=False, sort_keys=False)

    @classmethod
    def get_default(cls) -> DistortionConfig:
        """Return default configuration"""
        return DistortionConfig()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> DistortionConfig:
        if not isinstance(data, dict):
            raise ConfigError('', f"Configuration root must be a mapping, got {type(data).__name__}")
        return _build(DistortionConfig, copy.deepcopy(data), '')

    @classmethod
    def to_dict(cls, config: DistortionConfig) -> Dict[str, Any]:
        return _plain(asdict(config))

    @classmethod
    def data_dir(cls) -> Path:
        """Bundled data directory (inside the wheel, or the source checkout)"""
        packaged = cls.PACKAGE_DIR / 'data'
        if packaged.is_dir():
            return packaged
        return cls.PACKAGE_DIR.parent / 'data'


def load_config(path: Union[str, Path]) -> DistortionConfig:
    """Load a DistortionConfig from a YAML file (see ``Config.load``)"""
    return Config.load(path)
