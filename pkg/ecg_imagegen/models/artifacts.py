"""
Text artifact models - printed templates, handwriting styles and artifact boxes
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from .validation import ParameterError, require


class TemplateFont(str, Enum):
    SANS = 'sans'
    PIXEL = 'pixel'


@dataclass(frozen=True)
class TemplateField:
    """One printed text item

    ``bounds_mm`` optionally confines overlap-avoidance moves to a rectangle
    (x0, y0, x1, y1), e.g. the lead's grid cell.
    """

    key: str
    text: str
    pos_mm: Tuple[float, float]
    font_size_mm: float = 3.0
    bounds_mm: Optional[Tuple[float, float, float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, 'pos_mm', tuple(float(v) for v in self.pos_mm))
        require(len(self.pos_mm) == 2, 'pos_mm', f"expected (x, y), got {self.pos_mm!r}")
        require(self.pos_mm[0] >= 0 and self.pos_mm[1] >= 0, 'pos_mm', "position must be on the page")
        require(self.font_size_mm > 0, 'font_size_mm', f"must be positive, got {self.font_size_mm}")
        if self.bounds_mm is not None:
            object.__setattr__(self, 'bounds_mm', tuple(float(v) for v in self.bounds_mm))


@dataclass(frozen=True)
class PrintedTemplate:
    """Printed-text content of a page plus the overlap switch"""

    fields: Tuple[TemplateField, ...] = ()
    allow_overlap: bool = False
    font: TemplateFont = TemplateFont.SANS
    name: str = 'custom'

    def __post_init__(self):
        object.__setattr__(self, 'fields', tuple(self.fields))
        try:
            object.__setattr__(self, 'font', TemplateFont(self.font))
        except ValueError:
            raise ParameterError('font', f"unknown font {self.font!r}")

    def with_fields(self, extra: Tuple[TemplateField, ...]) -> "PrintedTemplate":
        return PrintedTemplate(self.fields + tuple(extra), self.allow_overlap, self.font, self.name)


@dataclass(frozen=True)
class HandwritingStyle:
    """Parameters of one procedural handwriting style"""

    style_id: int
    slant_deg: float = 0.0
    jitter_px: float = 0.0
    stroke_width_px: int = 2
    baseline_wobble_px: float = 0.0
    letter_spacing_scale: float = 1.0

    def __post_init__(self):
        require(1 <= self.style_id <= 7, 'style_id', f"must be in [1, 7], got {self.style_id}")
        require(self.jitter_px >= 0, 'jitter_px', f"must be >= 0, got {self.jitter_px}")
        require(self.stroke_width_px >= 1, 'stroke_width_px', f"must be >= 1, got {self.stroke_width_px}")
        require(self.baseline_wobble_px >= 0, 'baseline_wobble_px', "must be >= 0")
        require(self.letter_spacing_scale > 0, 'letter_spacing_scale', "must be positive")
        require(-60 < self.slant_deg < 60, 'slant_deg', f"must be within (-60, 60), got {self.slant_deg}")


class ArtifactKind(str, Enum):
    PRINTED = 'printed'
    HANDWRITTEN = 'handwritten'


@dataclass(frozen=True)
class ArtifactBox:
    """Bounding box (x0, y0, x1, y1) of an artifact drawn on the page

    Coordinates are half-open pixel bounds in page space.
    """

    kind: ArtifactKind
    bbox_px: Tuple[float, float, float, float]
    text: str
    extra: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'kind', ArtifactKind(self.kind))
        object.__setattr__(self, 'bbox_px', tuple(float(v) for v in self.bbox_px))
        x0, y0, x1, y1 = self.bbox_px
        require(x0 < x1 and y0 < y1, 'bbox_px', f"degenerate box {self.bbox_px}")

    def intersects(self, other: Tuple[float, float, float, float]) -> bool:
        return boxes_intersect(self.bbox_px, other)

    def to_dict(self) -> Dict[str, object]:
        data = {'kind': self.kind.value, 'bbox_px': list(self.bbox_px), 'text': self.text}
        data.update(self.extra)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "ArtifactBox":
        extra = {k: v for k, v in data.items() if k not in ('kind', 'bbox_px', 'text')}
        return cls(data['kind'], tuple(data['bbox_px']), data.get('text', ''), extra)


def boxes_intersect(a: Tuple[float, float, float, float], b: Tuple[float, float, float, float]) -> bool:
    """Closed-interval rectangle intersection test"""
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]
