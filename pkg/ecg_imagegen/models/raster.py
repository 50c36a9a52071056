"""
Raster image model - 8-bit RGB pixel buffer shared by every rendering stage
"""
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from PIL import Image

from .validation import require


@dataclass(eq=False)
class RasterImage:
    """Row-major RGB image, 8 bits per channel

    ``pixels`` has shape (height, width, 3) and dtype uint8. Stages never
    mutate their input; they return a new RasterImage.
    """

    pixels: np.ndarray

    def __post_init__(self):
        require(isinstance(self.pixels, np.ndarray) and self.pixels.dtype == np.uint8, 'pixels',
                "expected a uint8 numpy array")
        require(self.pixels.ndim == 3 and self.pixels.shape[2] == 3, 'pixels',
                f"expected shape (height, width, 3), got {self.pixels.shape}")
        require(self.pixels.shape[0] > 0 and self.pixels.shape[1] > 0, 'pixels', "image must not be empty")
        self.pixels = np.ascontiguousarray(self.pixels)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    @classmethod
    def blank(cls, width: int, height: int, color: Tuple[int, int, int] = (255, 255, 255)) -> "RasterImage":
        pixels = np.empty((height, width, 3), dtype=np.uint8)
        pixels[:, :] = np.asarray(color, dtype=np.uint8)
        return cls(pixels)

    @classmethod
    def from_float(cls, values: np.ndarray) -> "RasterImage":
        """Round and clamp a float array into a valid 8-bit image"""
        return cls(np.clip(np.rint(values), 0, 255).astype(np.uint8))

    def copy(self) -> "RasterImage":
        return RasterImage(self.pixels.copy())

    def luminance(self) -> np.ndarray:
        """Rec. 601 luma as float64"""
        rgb = self.pixels.astype(np.float64)
        return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]

    def to_pil(self) -> Image.Image:
        return Image.fromarray(self.pixels)

    @classmethod
    def from_pil(cls, image: Image.Image) -> "RasterImage":
        return cls(np.array(image.convert('RGB'), dtype=np.uint8))

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def digest(self) -> str:
        """SHA-256 over the raw pixel bytes (format independent)"""
        return hashlib.sha256(self.tobytes()).hexdigest()

    def save(self, path: Union[str, Path], dpi: Optional[float] = None) -> Path:
        """Write the image as PNG or PPM depending on the suffix

        Args:
            path: Output path (``.png`` or ``.ppm``)
            dpi: Resolution stored in the file where the format allows it

        Returns:
            The written path
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        suffix = path.suffix.lower()
        image = self.to_pil()
        if suffix == '.png':
            kwargs = {'dpi': (dpi, dpi)} if dpi else {}
            image.save(path, format='PNG', **kwargs)
        elif suffix in ('.ppm', '.pnm'):
            image.save(path, format='PPM')
        else:
            raise ValueError(f"Unsupported image format: {path.suffix}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RasterImage":
        with Image.open(path) as image:
            return cls.from_pil(image)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))
