"""
Crease & Wrinkle Service - Fold-line shadows and quilted wrinkle textures
"""
import logging
import math
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from PIL import Image
from scipy import ndimage
from scipy.signal import fftconvolve

from ..models.distortions import CreaseSpec, QuiltSpec
from ..models.raster import RasterImage
from .grid_renderer import rasterize_polyline


logger = logging.getLogger(__name__)

Point = Tuple[float, float]


class CreaseWrinkleError(Exception):
    """Base exception for crease and wrinkle synthesis"""
    pass


class CreaseParameterError(CreaseWrinkleError, ValueError):
    """Invalid crease or kernel parameter"""
    pass


class BlockSizeError(CreaseWrinkleError):
    """Blocks, overlaps or textures of incompatible size"""
    pass


class BoundaryCut(NamedTuple):
    path: List[int]
    cost: float


# Creases

def _crease_start(i: int, gap: float, w: int) -> Point:
    """i-th start point walking along the top edge, then down the right edge"""
    s = i * gap
    if s < w:
        return float(s), 0.0
    return float(w), float(s - w)


def _chord(start: Point, direction: Point, w: int, h: int) -> Tuple[Point, Point]:
    """Intersection of the infinite line through ``start`` with [0, w] x [0, h] (Liang-Barsky)"""
    t_lo, t_hi = -math.inf, math.inf
    for p, d, lo, hi in ((start[0], direction[0], 0.0, float(w)), (start[1], direction[1], 0.0, float(h))):
        if abs(d) < 1e-15:
            if p < lo - 1e-9 or p > hi + 1e-9:
                return start, start
            continue
        a, b = (lo - p) / d, (hi - p) / d
        t_lo, t_hi = max(t_lo, min(a, b)), min(t_hi, max(a, b))
    if t_lo > t_hi:
        return start, start

    def at(t: float) -> Point:
        return (min(max(start[0] + t * direction[0], 0.0), float(w)),
                min(max(start[1] + t * direction[1], 0.0), float(h)))

    return at(t_lo), at(t_hi)


def generate_crease_lines(n: int, theta_deg: float, w: int, h: int) -> Tuple[List[Point], List[Point]]:
    """
    Start and end points of ``n`` crease lines inclined at ``theta_deg``

    Starts are ``(w + h) / (n + 1)`` apart along the top edge then down the
    right edge. Each line has slope ``m = tan(pi - theta)`` through its start
    (vertical at 90 degrees) and ends where that line leaves the page; the
    x_e = 0 end point of the slope form is clipped onto the page boundary.

    Args:
        n: Number of creases
        theta_deg: Inclination in degrees, in (0, 180)
        w: Page width in pixels
        h: Page height in pixels

    Returns:
        (start_points, end_points), each a list of n (x, y) tuples

    Raises:
        CreaseParameterError: On negative n, non-positive size or angle outside (0, 180)
    """
    if n < 0:
        raise CreaseParameterError(f"Crease count must be >= 0, got {n}")
    if w <= 0 or h <= 0:
        raise CreaseParameterError(f"Page size must be positive, got {w}x{h}")
    if not 0 < theta_deg < 180:
        raise CreaseParameterError(f"Crease angle must be in (0, 180), got {theta_deg}")
    if n == 0:
        return [], []

    gap = (w + h) / (n + 1)
    vertical = abs(theta_deg - 90.0) < 1e-9
    m = 0.0 if vertical else math.tan(math.pi - math.radians(theta_deg))

    starts: List[Point] = []
    ends: List[Point] = []
    for i in range(1, n + 1):
        start = _crease_start(i, gap, w)
        if vertical:
            direction = (0.0, 1.0)
        else:
            # reference end point (x_e = 0, m * x_e + c) fixes the direction
            c = start[1] - m * start[0]
            direction = (0.0 - start[0], c - start[1])
            if abs(direction[0]) < 1e-12 and abs(direction[1]) < 1e-12:
                direction = (1.0, m)
        a, b = _chord(start, direction, w, h)
        end = a if math.dist(a, start) > math.dist(b, start) else b
        starts.append(start)
        ends.append(end)
    return starts, ends


def gaussian_kernel(sigma_px: float, radius: Optional[int] = None) -> np.ndarray:
    """
    Normalized 2-D Gaussian on a (2r+1) x (2r+1) grid

    Args:
        sigma_px: Standard deviation in pixels (> 0)
        radius: Half size; defaults to ceil(3 * sigma)

    Raises:
        CreaseParameterError: If sigma <= 0 or radius < 1
    """
    if not sigma_px > 0:
        raise CreaseParameterError(f"sigma must be positive, got {sigma_px}")
    if radius is None:
        radius = max(1, int(math.ceil(3.0 * sigma_px)))
    if radius < 1:
        raise CreaseParameterError(f"radius must be >= 1, got {radius}")
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma_px ** 2))
    return kernel / kernel.sum()


def crease_mask(width: int, height: int, spec: CreaseSpec) -> np.ndarray:
    """Blurred crease darkness in [0, 1] for a width x height page"""
    mask = np.zeros((height, width), dtype=np.float64)
    if spec.n == 0 or spec.intensity == 0:
        return mask
    starts, ends = generate_crease_lines(spec.n, spec.theta_deg, width, height)
    for start, end in zip(starts, ends):
        line = rasterize_polyline(np.array([start, end]), (height, width), spec.line_width_px)
        mask[line] = spec.intensity
    if spec.sigma_px > 0:
        mask = np.clip(fftconvolve(mask, gaussian_kernel(spec.sigma_px), mode='same'), 0.0, 1.0)
    return mask


def apply_creases(img: RasterImage, spec: CreaseSpec) -> RasterImage:
    """
    Darken (or, with ``lighten``, brighten) the page along blurred crease lines

    ``out = img * (1 - mask)``; the lighten variant blends toward white.
    """
    if spec.n == 0 or spec.intensity == 0:
        return img.copy()
    mask = crease_mask(img.width, img.height, spec)[..., None]
    pixels = img.pixels.astype(np.float64)
    if spec.lighten:
        out = pixels + (255.0 - pixels) * mask
    else:
        out = pixels * (1.0 - mask)
    return RasterImage.from_float(out)


# Minimum-error boundary cut

def cumulative_min_error(e: np.ndarray) -> np.ndarray:
    """E(i, j) = e(i, j) + min(E(i-1, j-1..j+1)) with clamped columns"""
    e = np.asarray(e, dtype=np.float64)
    cost = e.copy()
    for i in range(1, cost.shape[0]):
        prev = cost[i - 1]
        left = np.concatenate(([np.inf], prev[:-1]))
        right = np.concatenate((prev[1:], [np.inf]))
        cost[i] += np.minimum(np.minimum(left, prev), right)
    return cost


def min_error_boundary_cut(ov1: np.ndarray, ov2: np.ndarray) -> BoundaryCut:
    """
    Minimal vertical seam through the squared difference of two overlaps

    Args:
        ov1: Existing overlap block, (N, K) or (N, K, C)
        ov2: Incoming overlap block of the same shape

    Returns:
        BoundaryCut(path, cost): one column index per row, ties resolved to
        the smallest index, and the path's summed error

    Raises:
        BlockSizeError: If the blocks differ in shape or are empty
    """
    a = np.asarray(ov1, dtype=np.float64)
    b = np.asarray(ov2, dtype=np.float64)
    if a.shape != b.shape:
        raise BlockSizeError(f"Overlap blocks differ in shape: {a.shape} vs {b.shape}")
    if a.ndim < 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise BlockSizeError(f"Overlap blocks must be at least 1x1, got {a.shape}")
    e = (a - b) ** 2
    if e.ndim == 3:
        e = e.sum(axis=2)

    cost = cumulative_min_error(e)
    n_rows, n_cols = cost.shape
    path = [int(np.argmin(cost[-1]))]
    for i in range(n_rows - 2, -1, -1):
        j = path[-1]
        lo, hi = max(0, j - 1), min(n_cols - 1, j + 1)
        path.append(lo + int(np.argmin(cost[i, lo:hi + 1])))
    path.reverse()
    return BoundaryCut(path, float(cost[-1, path[-1]]))


# Quilting

def _patch_positions(src_h: int, src_w: int, block: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Candidate top-left corners; every position when ``count`` covers them all"""
    ny, nx = src_h - block + 1, src_w - block + 1
    if count >= ny * nx:
        return np.array([(y, x) for y in range(ny) for x in range(nx)], dtype=np.int64)
    return np.column_stack([rng.integers(0, ny, count), rng.integers(0, nx, count)])


def quilt_texture(spec: QuiltSpec) -> RasterImage:
    """
    Synthesize a grayscale texture by image quilting

    Patches are laid in raster order with stride ``block - overlap``. The
    first patch is random; each later one is the candidate with the lowest
    overlap SSD and is stitched along minimum-error boundary cuts (vertical
    for the left overlap, transposed for the top one, both for the corner).

    Raises:
        BlockSizeError: If the seed texture is smaller than a block
    """
    src = spec.seed_texture.luminance()
    block, overlap, stride = spec.block_px, spec.overlap_px, spec.stride
    if src.shape[0] < block or src.shape[1] < block:
        raise BlockSizeError(f"Seed texture {src.shape[1]}x{src.shape[0]} is smaller than block {block}")

    rng = np.random.default_rng(spec.rng_seed)
    n_x = max(1, int(math.ceil((spec.out_w - block) / stride)) + 1)
    n_y = max(1, int(math.ceil((spec.out_h - block) / stride)) + 1)
    canvas = np.zeros(((n_y - 1) * stride + block, (n_x - 1) * stride + block), dtype=np.float64)

    for by in range(n_y):
        for bx in range(n_x):
            y, x = by * stride, bx * stride
            if by == 0 and bx == 0:
                py = int(rng.integers(0, src.shape[0] - block + 1))
                px = int(rng.integers(0, src.shape[1] - block + 1))
                canvas[:block, :block] = src[py:py + block, px:px + block]
                continue

            region = canvas[y:y + block, x:x + block]
            weight = np.zeros((block, block), dtype=bool)
            if bx > 0:
                weight[:, :overlap] = True
            if by > 0:
                weight[:overlap, :] = True

            best, best_cost = None, math.inf
            for py, px in _patch_positions(src.shape[0], src.shape[1], block, spec.candidates, rng):
                patch = src[py:py + block, px:px + block]
                ssd = float(np.sum(((patch - region) ** 2)[weight]))
                if ssd < best_cost:
                    best, best_cost = patch, ssd

            take_new = np.ones((block, block), dtype=bool)
            if bx > 0:
                cut = min_error_boundary_cut(region[:, :overlap], best[:, :overlap])
                cols = np.arange(overlap)
                for r, c in enumerate(cut.path):
                    take_new[r, :overlap] &= cols >= c
            if by > 0:
                cut = min_error_boundary_cut(region[:overlap, :].T, best[:overlap, :].T)
                rows = np.arange(overlap)
                for c, r in enumerate(cut.path):
                    take_new[:overlap, c] &= rows >= r
            canvas[y:y + block, x:x + block] = np.where(take_new, best, region)

    out = canvas[:spec.out_h, :spec.out_w]
    return RasterImage.from_float(np.repeat(out[..., None], 3, axis=2))


def fractal_noise_texture(size_px: int, seed: int, octaves: int = 5) -> RasterImage:
    """
    Ridged multi-octave value noise used as the default wrinkle seed

    Fold ridges show up as thin bright lines over a mottled mid-gray ground.
    """
    rng = np.random.default_rng(seed)
    total = np.zeros((size_px, size_px), dtype=np.float64)
    amplitude, norm = 1.0, 0.0
    for octave in range(octaves):
        cells = 2 ** (octave + 2)
        grid = rng.random((cells + 1, cells + 1))
        layer = ndimage.zoom(grid, size_px / (cells + 1), order=1)[:size_px, :size_px]
        if layer.shape != total.shape:
            layer = np.pad(layer, ((0, size_px - layer.shape[0]), (0, size_px - layer.shape[1])), mode='edge')
        total += amplitude * (1.0 - np.abs(2.0 * layer - 1.0))
        norm += amplitude
        amplitude *= 0.5
    total /= norm
    lo, hi = total.min(), total.max()
    scaled = 90.0 + 140.0 * (total - lo) / (hi - lo if hi > lo else 1.0)
    return RasterImage.from_float(np.repeat(scaled[..., None], 3, axis=2))


def resize_texture(texture: RasterImage, width: int, height: int) -> RasterImage:
    """Bilinear resize with Pillow"""
    if texture.size == (width, height):
        return texture
    return RasterImage.from_pil(texture.to_pil().resize((width, height), Image.Resampling.BILINEAR))


def wrinkle_texture(width: int, height: int, block_px: int, seed: int, texture_scale: float = 0.25,
                    overlap_px: int = 0, candidates: int = 20,
                    seed_texture: Optional[RasterImage] = None, seed_texture_px: int = 128) -> RasterImage:
    """
    Quilt a wrinkle texture at ``texture_scale`` of the page and upscale it

    Args:
        width: Page width in pixels
        height: Page height in pixels
        block_px: Quilting block size at the reduced scale
        seed: Seed for the procedural seed texture and the quilting
        texture_scale: Fraction of page resolution to synthesize at
        overlap_px: Block overlap (0 selects block / 6)
        candidates: Candidate patches per block
        seed_texture: User texture; procedural fractal noise when None
        seed_texture_px: Side of the procedural seed texture

    Returns:
        Texture of exactly width x height
    """
    small_w = max(block_px, int(round(width * texture_scale)))
    small_h = max(block_px, int(round(height * texture_scale)))
    if seed_texture is None:
        seed_texture = fractal_noise_texture(seed_texture_px, seed)
    spec = QuiltSpec(block_px=block_px, out_w=small_w, out_h=small_h, seed_texture=seed_texture,
                     rng_seed=seed, overlap_px=overlap_px, candidates=candidates)
    logger.debug("Quilting %dx%d wrinkle texture (block %d, overlap %d)", small_w, small_h, block_px, spec.overlap_px)
    return resize_texture(quilt_texture(spec), width, height)


def blend_wrinkles(img: RasterImage, texture: RasterImage, alpha: float) -> RasterImage:
    """
    Modulate page luminance by a wrinkle texture

    ``out = (1 - alpha) * img + alpha * img * lum / mean(lum)``, so shading
    keeps the average brightness and never erases the trace.

    Raises:
        CreaseParameterError: If alpha is outside [0, 1]
        BlockSizeError: If the texture cannot be brought to the page size
    """
    if not 0.0 <= alpha <= 1.0:
        raise CreaseParameterError(f"alpha must be in [0, 1], got {alpha}")
    texture = resize_texture(texture, img.width, img.height)
    if texture.size != img.size:
        raise BlockSizeError(f"Texture {texture.size} does not match page {img.size}")
    if alpha == 0:
        return img.copy()
    lum = texture.luminance()
    mean = float(lum.mean())
    modulation = lum / mean if mean > 0 else np.ones_like(lum)
    out = img.pixels.astype(np.float64) * (1.0 + alpha * (modulation[..., None] - 1.0))
    return RasterImage.from_float(out)
