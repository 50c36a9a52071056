"""
Handwriting Service - Procedural stroke-based handwriting stencils

Text is laid out from the glyph stroke table, perturbed per style (shear,
vertex jitter, baseline wobble), joined by quadratic ligatures inside
lowercase runs and stroked onto a grayscale alpha stencil with Pillow.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Protocol, Tuple

import numpy as np
from PIL import Image, ImageDraw

from ..models.artifacts import HandwritingStyle
from ..models.validation import ParameterError
from .glyph_strokes import CAP_HEIGHT, DESCENDER, GLYPH_GAP, GLYPHS, SQUIGGLE, Glyph, glyph_width


logger = logging.getLogger(__name__)

# slant_deg, jitter_px, stroke_width_px, baseline_wobble_px, letter_spacing_scale
HANDWRITING_STYLES: Dict[int, HandwritingStyle] = {
    1: HandwritingStyle(1, 8.0, 0.6, 2, 1.0, 1.0),
    2: HandwritingStyle(2, 15.0, 0.9, 2, 1.5, 1.1),
    3: HandwritingStyle(3, -5.0, 0.5, 3, 0.8, 0.95),
    4: HandwritingStyle(4, 0.0, 1.2, 2, 2.0, 1.2),
    5: HandwritingStyle(5, 20.0, 0.4, 1, 0.5, 0.9),
    6: HandwritingStyle(6, 10.0, 1.5, 3, 2.5, 1.05),
    7: HandwritingStyle(7, -12.0, 0.8, 2, 1.2, 1.15),
}

LIGATURE_SAMPLES = 8


def get_style(style_id: int) -> HandwritingStyle:
    """Look up one of the bundled styles (1..7)"""
    try:
        return HANDWRITING_STYLES[style_id]
    except KeyError:
        raise ParameterError('style_id', f"must be in [1, 7], got {style_id}")


@dataclass(frozen=True, eq=False)
class HandwritingStencil:
    """Alpha mask of rendered handwriting

    ``alpha`` is uint8 (0 transparent, 255 full ink). ``advances`` holds the
    pen advance of every character in pixels; ``unsupported`` lists the
    characters replaced by a squiggle.
    """

    text: str
    alpha: np.ndarray
    advances: Tuple[float, ...]
    unsupported: Tuple[str, ...] = ()

    @property
    def width(self) -> int:
        return int(self.alpha.shape[1])

    @property
    def height(self) -> int:
        return int(self.alpha.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, HandwritingStencil):
            return NotImplemented
        return (self.text == other.text and self.advances == other.advances
                and self.alpha.shape == other.alpha.shape and bool(np.array_equal(self.alpha, other.alpha)))


class HandwritingBackend(Protocol):
    """Anything that turns text into a handwriting stencil"""

    def synthesize(self, text: str, style: HandwritingStyle, size_px: float, seed: int) -> HandwritingStencil:
        ...


@dataclass
class _PlacedGlyph:
    char: str
    strokes: List[np.ndarray]
    units: List[np.ndarray]


class StrokeHandwritingBackend:
    """Deterministic stroke-template backend

    ``size_px`` is the distance from descender to cap height; glyph units are
    scaled so that this span fills it.
    """

    def synthesize(self, text: str, style: HandwritingStyle, size_px: float, seed: int) -> HandwritingStencil:
        glyphs, advances, unsupported = self._layout(text, style, size_px)
        if any(style_value != 0 for style_value in (style.slant_deg, style.jitter_px, style.baseline_wobble_px)):
            self._perturb(glyphs, style, size_px, np.random.default_rng(seed))
        strokes = self._with_ligatures(glyphs, size_px)
        alpha = self._render(strokes, style.stroke_width_px, size_px)
        return HandwritingStencil(text, alpha, tuple(advances), tuple(unsupported))

    def render_template(self, text: str, style: HandwritingStyle, size_px: float) -> HandwritingStencil:
        """Unperturbed rendering: layout, ligatures and stroking only"""
        glyphs, advances, unsupported = self._layout(text, style, size_px)
        alpha = self._render(self._with_ligatures(glyphs, size_px), style.stroke_width_px, size_px)
        return HandwritingStencil(text, alpha, tuple(advances), tuple(unsupported))

    @staticmethod
    def _unit_px(size_px: float) -> float:
        return size_px / (CAP_HEIGHT - DESCENDER)

    def _layout(self, text: str, style: HandwritingStyle,
                size_px: float) -> Tuple[List[_PlacedGlyph], List[float], List[str]]:
        unit = self._unit_px(size_px)
        pen = 0.0
        placed: List[_PlacedGlyph] = []
        advances: List[float] = []
        unsupported: List[str] = []
        for char in text:
            glyph: Optional[Glyph] = GLYPHS.get(char)
            if glyph is None:
                unsupported.append(char)
                glyph = SQUIGGLE
            units = [np.asarray(stroke, dtype=np.float64) for stroke in glyph]
            # image coordinates: x right, y down, baseline at y = 0
            strokes = [np.column_stack([pen + u[:, 0] * unit, -u[:, 1] * unit]) for u in units]
            placed.append(_PlacedGlyph(char, strokes, units))
            advance = (glyph_width(glyph) + GLYPH_GAP) * unit * style.letter_spacing_scale
            advances.append(advance)
            pen += advance
        if unsupported:
            logger.warning("Handwriting has no strokes for %r; drew squiggles instead", ''.join(unsupported))
        return placed, advances, unsupported

    def _perturb(self, glyphs: List[_PlacedGlyph], style: HandwritingStyle, size_px: float,
                 rng: np.random.Generator) -> None:
        shear = math.tan(math.radians(style.slant_deg))
        period = 4.0 * size_px
        phase = rng.uniform(0.0, 2.0 * math.pi)
        for glyph in glyphs:
            for i, stroke in enumerate(glyph.strokes):
                pts = stroke.copy()
                pts[:, 0] -= shear * pts[:, 1]
                if style.jitter_px > 0:
                    pts += rng.normal(0.0, style.jitter_px, pts.shape)
                if style.baseline_wobble_px > 0:
                    pts[:, 1] += style.baseline_wobble_px * np.sin(2.0 * math.pi * pts[:, 0] / period + phase)
                glyph.strokes[i] = pts

    @staticmethod
    def _exit_entry(glyph: _PlacedGlyph, exit_point: bool) -> Optional[np.ndarray]:
        """Lowest-rightmost stroke end (exit) or leftmost stroke start (entry)"""
        candidates = []
        for stroke, unit in zip(glyph.strokes, glyph.units):
            for end in (0, -1):
                x, y = unit[end]
                key = (y, -x) if exit_point else (x, y)
                candidates.append((key, stroke[end]))
        if not candidates:
            return None
        return min(candidates, key=lambda c: c[0])[1]

    def _with_ligatures(self, glyphs: List[_PlacedGlyph], size_px: float) -> List[np.ndarray]:
        strokes = [s for g in glyphs for s in g.strokes]
        t = np.linspace(0.0, 1.0, LIGATURE_SAMPLES)[:, None]
        for prev, nxt in zip(glyphs, glyphs[1:]):
            if not (prev.char.isalpha() and prev.char.islower() and nxt.char.isalpha() and nxt.char.islower()):
                continue
            p0 = self._exit_entry(prev, exit_point=True)
            p2 = self._exit_entry(nxt, exit_point=False)
            if p0 is None or p2 is None:
                continue
            # control point sits on the baseline between the two glyphs
            p1 = np.array([(p0[0] + p2[0]) / 2.0, max(p0[1], p2[1], 0.0)])
            strokes.append((1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t ** 2 * p2)
        return strokes

    def _render(self, strokes: List[np.ndarray], stroke_width: int, size_px: float) -> np.ndarray:
        pad = stroke_width + 2
        unit = self._unit_px(size_px)
        drawn = [s for s in strokes if len(s)]
        if drawn:
            allpts = np.vstack(drawn)
            min_x, max_x = float(allpts[:, 0].min()), float(allpts[:, 0].max())
            min_y, max_y = float(allpts[:, 1].min()), float(allpts[:, 1].max())
        else:
            min_x, max_x = 0.0, 0.0
            min_y, max_y = -CAP_HEIGHT * unit, -DESCENDER * unit
        min_y = min(min_y, -CAP_HEIGHT * unit)
        max_y = max(max_y, -DESCENDER * unit)
        width = int(math.ceil(max_x - min_x)) + 2 * pad
        height = int(math.ceil(max_y - min_y)) + 2 * pad

        canvas = Image.new('L', (width, height), 0)
        draw = ImageDraw.Draw(canvas)
        for stroke in drawn:
            pts = [(float(x - min_x + pad), float(y - min_y + pad)) for x, y in stroke]
            if len(pts) == 1:
                pts = pts * 2
            draw.line(pts, fill=255, width=stroke_width, joint='curve')
            if stroke_width > 2:
                r = stroke_width / 2.0
                for x, y in (pts[0], pts[-1]):
                    draw.ellipse((x - r, y - r, x + r, y + r), fill=255)
        return np.asarray(canvas, dtype=np.uint8).copy()


_DEFAULT_BACKEND = StrokeHandwritingBackend()


def synthesize_handwriting(text: str, style: HandwritingStyle, size_px: float, seed: int,
                           backend: Optional[HandwritingBackend] = None) -> HandwritingStencil:
    """
    Render ``text`` as a handwriting stencil

    Args:
        text: Non-empty text; characters outside the glyph table become squiggles
        style: Handwriting style parameters
        size_px: Descender-to-cap height in pixels (>= 8)
        seed: Seed of the perturbations
        backend: Alternative backend (defaults to the stroke-template backend)

    Returns:
        HandwritingStencil

    Raises:
        ParameterError: On empty text or size below 8 px
    """
    if not text:
        raise ParameterError('text', "must not be empty")
    if size_px < 8:
        raise ParameterError('size_px', f"must be >= 8, got {size_px}")
    return (backend or _DEFAULT_BACKEND).synthesize(text, style, size_px, seed)
