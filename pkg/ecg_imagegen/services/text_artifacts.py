"""
Text Artifacts Service - Printed template text, keyword selection and handwriting overlay
"""
import logging
import re
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from PIL import Image, ImageDraw, ImageFont

from ..core.config import Config
from ..models.artifacts import ArtifactBox, ArtifactKind, PrintedTemplate, TemplateField, TemplateFont, boxes_intersect
from ..models.paper import LeadPolyline, PaperSpec
from ..models.raster import RasterImage
from ..models.validation import ParameterError
from .handwriting import HandwritingStencil


logger = logging.getLogger(__name__)

SPIRAL_STEP_MM = 2.0
SPIRAL_MAX_CANDIDATES = 50
PRINTED_INK: Tuple[int, int, int] = (20, 20, 20)
DEFAULT_HANDWRITING_INK: Tuple[int, int, int] = (24, 30, 72)

_TOKEN = re.compile(r'[a-z0-9]+')

Box = Tuple[float, float, float, float]


class TextArtifactError(Exception):
    """Base exception for text artifacts"""
    pass


class StencilSizeError(TextArtifactError):
    """Handwriting stencil does not fit the page"""
    pass


class TemplateError(TextArtifactError):
    """Printed template file cannot be used"""
    pass


# Printed text

def render_text_mask(text: str, size_px: int, font: TemplateFont = TemplateFont.SANS) -> np.ndarray:
    """
    Rasterize ``text`` with a bundled Pillow font into a boolean ink mask

    ``sans`` uses Pillow's embedded scalable font; ``pixel`` blits the
    built-in bitmap font and scales it up with nearest-neighbour sampling.
    Either way the result is binary so printed text never blends.
    """
    size_px = max(6, int(round(size_px)))
    if font is TemplateFont.PIXEL:
        pil_font = ImageFont.load_default_imagefont()
    else:
        pil_font = ImageFont.load_default(size=size_px)
    left, top, right, bottom = pil_font.getbbox(text)
    width, height = max(1, right - left), max(1, bottom - top)
    canvas = Image.new('L', (width, height), 0)
    ImageDraw.Draw(canvas).text((-left, -top), text, fill=255, font=pil_font)
    if font is TemplateFont.PIXEL:
        factor = max(1, int(round(size_px / 11.0)))
        canvas = canvas.resize((width * factor, height * factor), Image.Resampling.NEAREST)
    return np.asarray(canvas) >= 128


def _spiral_offsets() -> List[Tuple[int, int]]:
    """8-neighbourhood rings ordered by distance, then angle"""
    reach = int(np.ceil(np.sqrt(SPIRAL_MAX_CANDIDATES))) + 1
    offsets = [(i, j) for i in range(-reach, reach + 1) for j in range(-reach, reach + 1) if (i, j) != (0, 0)]
    offsets.sort(key=lambda o: (o[0] ** 2 + o[1] ** 2, max(abs(o[0]), abs(o[1])), np.arctan2(o[1], o[0])))
    return offsets[:SPIRAL_MAX_CANDIDATES]


def _fits(box: Box, limits: Box) -> bool:
    return box[0] >= limits[0] and box[1] >= limits[1] and box[2] <= limits[2] and box[3] <= limits[3]


def _place_field(box: Box, obstacles: Sequence[Box], limits: Box, step_px: float) -> Optional[Box]:
    if _fits(box, limits) and not any(boxes_intersect(box, o) for o in obstacles):
        return box
    for i, j in _spiral_offsets():
        candidate = (box[0] + i * step_px, box[1] + j * step_px, box[2] + i * step_px, box[3] + j * step_px)
        if _fits(candidate, limits) and not any(boxes_intersect(candidate, o) for o in obstacles):
            return candidate
    return None


def overlay_printed_text(img: RasterImage, tpl: PrintedTemplate, lead_polylines: Sequence[LeadPolyline],
                         spec: Optional[PaperSpec] = None,
                         ink: Tuple[int, int, int] = PRINTED_INK) -> Tuple[RasterImage, List[ArtifactBox], List[str]]:
    """
    Draw every template field and report the boxes actually drawn

    With ``allow_overlap`` off, a field touching any polyline bounding box is
    moved to the nearest free spot of a 2 mm spiral (within ``bounds_mm``
    when set) or dropped with a warning.

    Args:
        img: Page to draw on (not modified)
        tpl: Printed template
        lead_polylines: Ground-truth polylines acting as obstacles
        spec: Paper geometry for mm to px conversion (defaults to 200 dpi paper)
        ink: Text colour

    Returns:
        (new image, drawn boxes, warnings)
    """
    spec = spec or PaperSpec(width_px=img.width, height_px=img.height)
    out = img.copy()
    boxes: List[ArtifactBox] = []
    warnings: List[str] = []
    if not tpl.fields:
        return out, boxes, warnings

    obstacles = [] if tpl.allow_overlap else [b for b in (p.bbox for p in lead_polylines) if b is not None]
    page: Box = (0.0, 0.0, float(img.width), float(img.height))
    step_px = SPIRAL_STEP_MM * spec.px_per_mm

    for fld in tpl.fields:
        mask = render_text_mask(fld.text, fld.font_size_mm * spec.px_per_mm, tpl.font)
        h, w = mask.shape
        x0 = float(np.rint(fld.pos_mm[0] * spec.px_per_mm))
        y0 = float(np.rint(fld.pos_mm[1] * spec.px_per_mm))
        limits = page
        if fld.bounds_mm is not None:
            bx0, by0, bx1, by1 = (v * spec.px_per_mm for v in fld.bounds_mm)
            limits = (max(0.0, bx0), max(0.0, by0), min(page[2], bx1), min(page[3], by1))

        placed = _place_field((x0, y0, x0 + w, y0 + h), obstacles, limits, step_px)
        if placed is None:
            message = f"Printed field {fld.key!r} ({fld.text!r}) dropped: no free position"
            logger.warning(message)
            warnings.append(message)
            continue

        px, py = int(np.floor(placed[0])), int(np.floor(placed[1]))
        region = out.pixels[py:py + h, px:px + w]
        ink_mask = mask[:region.shape[0], :region.shape[1]]
        if not ink_mask.any():
            continue
        region[ink_mask] = ink
        boxes.append(ArtifactBox(ArtifactKind.PRINTED, (px, py, px + w, py + h), fld.text, {'key': fld.key}))
    return out, boxes, warnings


def lead_name_fields(polylines: Iterable[LeadPolyline], spec: PaperSpec, size_mm: float = 3.5) -> List[TemplateField]:
    """One field per rendered lead, placed above the segment start and confined to its cell"""
    fields = []
    for p in polylines:
        if p.kind == 'pulse':
            continue
        x_mm = p.x_range_px[0] / spec.px_per_mm + 1.0
        top_mm = p.band_px[0] / spec.px_per_mm
        bottom_mm = p.band_px[1] / spec.px_per_mm
        x_end_mm = p.x_range_px[1] / spec.px_per_mm
        fields.append(TemplateField(
            key=f"lead_{p.lead_name}_{p.kind}",
            text=p.lead_name,
            pos_mm=(x_mm, top_mm + 1.0),
            font_size_mm=size_mm,
            bounds_mm=(max(0.0, x_mm - 3.0), top_mm, x_end_mm, bottom_mm),
        ))
    return fields


def template_context(record_id: str, fs: float, duration_s: float, spec: PaperSpec, seed: int) -> Dict[str, str]:
    """Placeholder values for template text; dates are synthetic and seeded"""
    rng = np.random.default_rng(seed)
    start = datetime(2000, 1, 1)
    stamp = start + timedelta(days=int(rng.integers(0, 8766)), seconds=int(rng.integers(0, 86400)))
    return {
        'record_id': record_id or 'unknown',
        'date': stamp.strftime('%Y-%m-%d'),
        'time': stamp.strftime('%H:%M:%S'),
        'fs': f"{fs:g}",
        'duration_s': f"{duration_s:g}",
        'mm_per_s': f"{spec.mm_per_s:g}",
        'mm_per_mv': f"{spec.mm_per_mv:g}",
    }


def load_template(source: Union[str, Path], context: Optional[Dict[str, str]] = None,
                  allow_overlap: Optional[bool] = None,
                  font: Optional[TemplateFont] = None) -> PrintedTemplate:
    """
    Load a printed template YAML file and fill its placeholders

    Args:
        source: Template file, or the name of a bundled template
        context: Placeholder values (see ``template_context``)
        allow_overlap: Overrides the file's setting when given
        font: Overrides the file's font when given

    Raises:
        TemplateError: If the file is missing, malformed or uses unknown placeholders
    """
    path = Path(source)
    if not path.suffix:
        path = Config.data_dir() / 'templates' / f"{source}.yaml"
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data: Dict[str, Any] = yaml.safe_load(f) or {}
    except OSError as e:
        raise TemplateError(f"Cannot read template {path}: {e}")
    except yaml.YAMLError as e:
        raise TemplateError(f"Malformed template {path}: {e}")

    context = context or {}
    fields = []
    for i, item in enumerate(data.get('fields', [])):
        try:
            text = str(item['text']).format(**context)
            fields.append(TemplateField(
                key=str(item.get('key', f"field_{i}")),
                text=text,
                pos_mm=tuple(item['pos_mm']),
                font_size_mm=float(item.get('font_size_mm', 3.0)),
                bounds_mm=tuple(item['bounds_mm']) if item.get('bounds_mm') else None,
            ))
        except KeyError as e:
            raise TemplateError(f"Template {path.name}, field {i}: missing key or placeholder {e}")
        except (ParameterError, TypeError, ValueError) as e:
            raise TemplateError(f"Template {path.name}, field {i}: {e}")

    try:
        return PrintedTemplate(
            fields=tuple(fields),
            allow_overlap=bool(data.get('allow_overlap', False)) if allow_overlap is None else allow_overlap,
            font=data.get('font', TemplateFont.SANS) if font is None else font,
            name=str(data.get('name', path.stem)),
        )
    except ParameterError as e:
        raise TemplateError(f"Template {path.name}: {e}")


# Keywords

def _tokens(text: str) -> List[str]:
    return _TOKEN.findall(text.lower())


def _contains(tokens: Sequence[str], phrase: Sequence[str]) -> bool:
    n = len(phrase)
    if n == 0 or n > len(tokens):
        return False
    return any(list(tokens[i:i + n]) == list(phrase) for i in range(len(tokens) - n + 1))


def load_lexicon(path: Union[str, Path]) -> List[str]:
    """Read a phrase list: UTF-8, one phrase per line, '#' starts a comment"""
    phrases = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            phrase = line.split('#', 1)[0].strip()
            if phrase:
                phrases.append(phrase)
    return phrases


def select_keywords(corpus: str, lexicon: Sequence[str], n: int, seed: int,
                    warnings: Optional[List[str]] = None) -> List[str]:
    """
    Pick ``n`` lexicon phrases that occur in the corpus

    Corpus and phrases are lowercased and split on anything that is not a
    letter or digit; a phrase matches when its tokens appear contiguously.
    Sampling is without replacement, or with replacement when fewer than
    ``n`` phrases match. An empty corpus or a corpus without matches falls
    back to the whole lexicon; the fallback is logged and appended to
    ``warnings`` when given.

    Raises:
        ParameterError: If n < 0 or the lexicon is empty
    """
    if n < 0:
        raise ParameterError('n', f"must be >= 0, got {n}")
    unique = list(dict.fromkeys(p.strip() for p in lexicon if p.strip()))
    if not unique:
        raise ParameterError('lexicon', "must not be empty")
    if n == 0:
        return []

    tokens = _tokens(corpus)
    pool = [p for p in unique if _contains(tokens, _tokens(p))]
    if not pool:
        message = ("Corpus is empty" if not tokens else "No lexicon phrase occurs in the corpus") + \
                  "; sampling keywords from the lexicon directly"
        logger.warning(message)
        if warnings is not None:
            warnings.append(message)
        pool = unique

    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pool), size=n, replace=len(pool) < n)
    return [pool[int(i)] for i in picks]


# Handwriting overlay

def overlay_handwriting(img: RasterImage, stencil: HandwritingStencil, pos_px: Optional[Tuple[int, int]] = None,
                        ink_color: Tuple[int, int, int] = DEFAULT_HANDWRITING_INK, seed: int = 0,
                        opacity: float = 0.9) -> Tuple[RasterImage, ArtifactBox]:
    """
    Alpha-composite handwriting ink through a stencil

    Args:
        img: Page (not modified)
        stencil: Stencil from ``synthesize_handwriting``
        pos_px: Top-left corner; sampled uniformly among on-page positions when None
        ink_color: Ink RGB
        seed: Seed of the position draw
        opacity: Ink opacity at full stencil alpha

    Returns:
        (new image, handwritten ArtifactBox at the stencil placement)

    Raises:
        StencilSizeError: If the stencil is larger than the page or leaves it at pos_px
    """
    h, w = stencil.alpha.shape
    if w > img.width or h > img.height:
        raise StencilSizeError(f"Stencil {w}x{h} px is larger than the page {img.width}x{img.height} px")
    if pos_px is None:
        rng = np.random.default_rng(seed)
        x = int(rng.integers(0, img.width - w + 1))
        y = int(rng.integers(0, img.height - h + 1))
    else:
        x, y = int(pos_px[0]), int(pos_px[1])
        if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
            raise StencilSizeError(f"Stencil {w}x{h} px at ({x}, {y}) leaves the {img.width}x{img.height} page")

    out = img.copy()
    alpha = stencil.alpha.astype(np.float64)[..., None] * (opacity / 255.0)
    if np.any(alpha > 0):
        region = out.pixels[y:y + h, x:x + w].astype(np.float64)
        blended = region * (1.0 - alpha) + np.asarray(ink_color, dtype=np.float64) * alpha
        out.pixels[y:y + h, x:x + w] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
    box = ArtifactBox(ArtifactKind.HANDWRITTEN, (x, y, x + w, y + h), stencil.text)
    return out, box
