"""
Geometry Service - Affine and projective transforms for pages and ground truth
"""
import itertools
import logging
import math
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from ..models.raster import RasterImage


logger = logging.getLogger(__name__)

RGB = Tuple[int, int, int]
Point = Tuple[float, float]

DET_EPSILON = 1e-12


class GeometryError(Exception):
    """Base exception for geometric transforms"""
    pass


class DegenerateTransformError(GeometryError):
    """Singular matrix or collinear correspondence points"""
    pass


class PointAtInfinityError(GeometryError):
    """A point maps to the line at infinity (w' = 0)"""

    def __init__(self, index: int, point: Point):
        self.index = index
        self.point = point
        super().__init__(f"Point #{index} {point} maps to infinity")


class TransformKind(str, Enum):
    """Supported transform builders"""

    TRANSLATE = 'translate'
    SCALE = 'scale'
    ROTATE = 'rotate'
    SHEAR = 'shear'
    PROJECTIVE_CORNERS = 'projective_corners'


def _about(matrix: np.ndarray, center: Optional[Point]) -> np.ndarray:
    if center is None:
        return matrix
    cx, cy = center
    to_origin = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    back = np.array([[1.0, 0.0, cx], [0.0, 1.0, cy], [0.0, 0.0, 1.0]])
    return back @ matrix @ to_origin


def _check_not_collinear(points: np.ndarray, label: str) -> None:
    span = max(1.0, float(np.ptp(points, axis=0).max()))
    for a, b, c in itertools.combinations(range(4), 3):
        ab, ac = points[b] - points[a], points[c] - points[a]
        if abs(ab[0] * ac[1] - ab[1] * ac[0]) <= 1e-9 * span * span:
            raise DegenerateTransformError(f"{label} corners {a}, {b}, {c} are collinear")


def homography_from_corners(src: Sequence[Point], dst: Sequence[Point]) -> np.ndarray:
    """
    Solve the 8-unknown homography mapping four source corners onto four destinations

    Raises:
        DegenerateTransformError: If three corners are collinear or the system is singular
    """
    src_pts = np.asarray(src, dtype=np.float64)
    dst_pts = np.asarray(dst, dtype=np.float64)
    if src_pts.shape != (4, 2) or dst_pts.shape != (4, 2):
        raise DegenerateTransformError("projective_corners needs exactly 4 source and 4 destination points")
    _check_not_collinear(src_pts, "Source")
    _check_not_collinear(dst_pts, "Destination")

    a = np.zeros((8, 8))
    b = np.zeros(8)
    for k, ((x, y), (u, v)) in enumerate(zip(src_pts, dst_pts)):
        a[2 * k] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]
        a[2 * k + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]
        b[2 * k], b[2 * k + 1] = u, v
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as e:
        raise DegenerateTransformError(f"Homography system is singular: {e}")
    return np.append(h, 1.0).reshape(3, 3)


def build_transform(kind: Union[TransformKind, str], **params) -> np.ndarray:
    """
    Build a 3x3 row-major transform matrix

    Args:
        kind: One of translate, scale, rotate, shear, projective_corners
        **params: Per kind:
            translate: tx, ty
            scale: sx, sy (defaults to sx), center
            rotate: angle_deg (counter-clockwise on screen), center
            shear: shear_x_deg, shear_y_deg, center
            projective_corners: src, dst (four (x, y) points each)

    Returns:
        3x3 float64 matrix

    Raises:
        DegenerateTransformError: On singular results or collinear corners
        GeometryError: On unknown kinds or parameters
    """
    try:
        kind = TransformKind(kind)
    except ValueError:
        raise GeometryError(f"Unknown transform kind: {kind}")
    center = params.pop('center', None)

    try:
        if kind is TransformKind.TRANSLATE:
            matrix = np.array([[1.0, 0.0, params.pop('tx', 0.0)],
                               [0.0, 1.0, params.pop('ty', 0.0)],
                               [0.0, 0.0, 1.0]])
        elif kind is TransformKind.SCALE:
            sx = float(params.pop('sx', 1.0))
            sy = float(params.pop('sy', sx))
            matrix = _about(np.diag([sx, sy, 1.0]), center)
        elif kind is TransformKind.ROTATE:
            # y points down, so a positive angle turns the page counter-clockwise on screen
            t = math.radians(params.pop('angle_deg', 0.0))
            matrix = _about(np.array([[math.cos(t), math.sin(t), 0.0],
                                      [-math.sin(t), math.cos(t), 0.0],
                                      [0.0, 0.0, 1.0]]), center)
        elif kind is TransformKind.SHEAR:
            kx = math.tan(math.radians(params.pop('shear_x_deg', 0.0)))
            ky = math.tan(math.radians(params.pop('shear_y_deg', 0.0)))
            matrix = _about(np.array([[1.0, kx, 0.0], [ky, 1.0, 0.0], [0.0, 0.0, 1.0]]), center)
        else:
            matrix = homography_from_corners(params.pop('src'), params.pop('dst'))
    except KeyError as e:
        raise GeometryError(f"{kind.value} requires parameter {e}")
    if params:
        raise GeometryError(f"Unexpected parameters for {kind.value}: {', '.join(sorted(params))}")

    check_invertible(matrix)
    return matrix


def check_invertible(matrix: np.ndarray) -> None:
    """Raise DegenerateTransformError unless |det| > 1e-12"""
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise DegenerateTransformError(f"Expected a finite 3x3 matrix, got shape {m.shape}")
    det = float(np.linalg.det(m))
    if abs(det) <= DET_EPSILON:
        raise DegenerateTransformError(f"Transform is singular (det = {det:.3g})")


def is_affine(matrix: np.ndarray) -> bool:
    m = np.asarray(matrix, dtype=np.float64)
    return bool(m[2, 0] == 0.0 and m[2, 1] == 0.0 and m[2, 2] == 1.0)


def invert(matrix: np.ndarray) -> np.ndarray:
    check_invertible(matrix)
    inverse = np.linalg.inv(np.asarray(matrix, dtype=np.float64))
    return inverse / inverse[2, 2] if abs(inverse[2, 2]) > DET_EPSILON else inverse


def compose(*matrices: np.ndarray) -> np.ndarray:
    """Matrix applied first goes first: compose(m1, m2) == m2 @ m1"""
    out = np.eye(3)
    for m in matrices:
        out = np.asarray(m, dtype=np.float64) @ out
    return out


def transform_points(points: Union[Sequence[Point], np.ndarray], matrix: np.ndarray) -> np.ndarray:
    """
    Map (x, y) points through a 3x3 transform with the homogeneous divide

    Args:
        points: (N, 2) points
        matrix: 3x3 transform

    Returns:
        (N, 2) float64 array

    Raises:
        PointAtInfinityError: If w' = g*x + h*y + i vanishes for a point
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    m = np.asarray(matrix, dtype=np.float64)
    homogeneous = np.column_stack([pts, np.ones(len(pts))]) @ m.T
    w = homogeneous[:, 2]
    bad = np.flatnonzero(np.abs(w) < DET_EPSILON)
    if bad.size:
        i = int(bad[0])
        raise PointAtInfinityError(i, (float(pts[i, 0]), float(pts[i, 1])))
    if is_affine(m):
        return homogeneous[:, :2].copy()
    return homogeneous[:, :2] / w[:, None]


def warp_image(img: RasterImage, matrix: np.ndarray, fill: RGB = (255, 255, 255)) -> RasterImage:
    """
    Warp an image by inverse mapping with bilinear interpolation

    Output pixel (x, y) samples the source at M^-1 (x, y). Samples outside
    the source take ``fill``; the canvas keeps the source dimensions.

    Raises:
        DegenerateTransformError: If the matrix is singular
    """
    check_invertible(matrix)
    inverse = np.linalg.inv(np.asarray(matrix, dtype=np.float64))
    h, w = img.height, img.width
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    src = np.stack([xs.ravel(), ys.ravel(), np.ones(h * w)])
    mapped = inverse @ src
    with np.errstate(divide='ignore', invalid='ignore'):
        sx = mapped[0] / mapped[2]
        sy = mapped[1] / mapped[2]
    tol = 1e-9
    inside = (np.isfinite(sx) & np.isfinite(sy) & (sx >= -tol) & (sx <= w - 1 + tol)
              & (sy >= -tol) & (sy <= h - 1 + tol))
    sx = np.where(inside, np.clip(sx, 0, w - 1), 0.0)
    sy = np.where(inside, np.clip(sy, 0, h - 1), 0.0)

    out = np.empty((h, w, 3), dtype=np.float64)
    source = img.pixels.astype(np.float64)
    for channel in range(3):
        sampled = ndimage.map_coordinates(source[..., channel], [sy, sx], order=1, mode='nearest')
        out[..., channel] = np.where(inside, sampled, fill[channel]).reshape(h, w)
    return RasterImage.from_float(out)


def random_perspective(width: int, height: int, rng: np.random.Generator, corner_jitter_frac: float = 0.03,
                       rotate_deg_max: float = 0.0, scale_range: Tuple[float, float] = (1.0, 1.0),
                       shear_deg_max: float = 0.0) -> np.ndarray:
    """
    Sample a camera-like page transform

    Each page corner moves uniformly within +/- ``corner_jitter_frac`` of the
    page diagonal, then a rotation, isotropic scale and shear about the page
    centre are composed on top.

    Returns:
        Invertible 3x3 matrix (page pixels to warped pixels)
    """
    corners = np.array([(0.0, 0.0), (width - 1.0, 0.0), (width - 1.0, height - 1.0), (0.0, height - 1.0)])
    jitter = corner_jitter_frac * math.hypot(width, height)
    matrix = np.eye(3)
    if jitter > 0:
        moved = corners + rng.uniform(-jitter, jitter, corners.shape)
        matrix = homography_from_corners(corners, moved)

    center = ((width - 1) / 2.0, (height - 1) / 2.0)
    angle = rng.uniform(-rotate_deg_max, rotate_deg_max) if rotate_deg_max > 0 else 0.0
    lo, hi = scale_range
    scale = rng.uniform(lo, hi) if hi > lo else float(lo)
    shear = rng.uniform(-shear_deg_max, shear_deg_max) if shear_deg_max > 0 else 0.0
    affine = compose(
        build_transform(TransformKind.SHEAR, shear_x_deg=shear, center=center),
        build_transform(TransformKind.SCALE, sx=scale, center=center),
        build_transform(TransformKind.ROTATE, angle_deg=angle, center=center),
    )
    matrix = compose(matrix, affine)
    check_invertible(matrix)
    logger.debug("Sampled perspective: jitter %.1f px, rotate %.2f deg, scale %.3f, shear %.2f deg",
                 jitter, angle, scale, shear)
    return matrix / matrix[2, 2]
