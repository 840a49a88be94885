"""Image decoding, grayscale conversion, smoothing, and gradient fields.

Everything here is a pure function on immutable inputs; images are plain
numpy-backed value objects and may be shared freely across threads.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import ndimage

MNIST_IMAGE_MAGIC = 0x00000803
MNIST_LABEL_MAGIC = 0x00000801

CIFAR10_RECORD_LEN = 1 + 3 * 1024
CIFAR10_SIDE = 32


class DatasetFormatError(ValueError):
    """A dataset byte stream does not follow its declared format."""


class IdxMagicError(DatasetFormatError):
    """IDX payload starts with the wrong magic number."""


class IdxTruncatedError(DatasetFormatError):
    """IDX payload ends before the declared record count."""


class IdxCountMismatchError(DatasetFormatError):
    """Image and label files declare different record counts."""


class Cifar10FormatError(DatasetFormatError):
    """CIFAR-10 binary payload is malformed."""


@dataclass(frozen=True)
class GrayImage:
    """Single-channel image, row-major.

    ``values`` has shape (height, width).  Raw images are uint8 in
    [0, 255]; the real-valued variant (float64) holds smoothed
    intensities.
    """

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected a 2D image with positive dims, got shape {v.shape}")
        if v.dtype not in (np.uint8, np.float64):
            raise ValueError(f"expected uint8 or float64 values, got {v.dtype}")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def pixel_count(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class RgbImage:
    """Three-channel image; ``values`` has shape (height, width, 3), uint8."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 3 or v.shape[2] != 3 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"expected shape (h, w, 3), got {v.shape}")
        if v.dtype != np.uint8:
            raise ValueError(f"expected uint8 channels, got {v.dtype}")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GradientMap:
    """Per-pixel gradient magnitude, same dimensions as the source image."""

    magnitudes: np.ndarray

    def __post_init__(self):
        m = self.magnitudes
        if m.ndim != 2 or m.dtype != np.float64:
            raise ValueError(f"expected a 2D float64 field, got {m.shape} {m.dtype}")

    @property
    def width(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def height(self) -> int:
        return self.magnitudes.shape[0]


class GradientOp(Enum):
    SOBEL = "sobel"
    SCHARR = "scharr"


def _maybe_gunzip(data: bytes) -> bytes:
    if data[:2] == b"\x1f\x8b":
        return gzip.decompress(data)
    return data


def decode_mnist_idx(image_bytes: bytes, label_bytes: bytes) -> list[tuple[GrayImage, int]]:
    """Decode the classic IDX image/label pair into (image, label) records.

    Accepts raw or gzip-compressed payloads.  Raises IdxMagicError,
    IdxTruncatedError, or IdxCountMismatchError for the three failure
    modes.
    """
    image_bytes = _maybe_gunzip(image_bytes)
    label_bytes = _maybe_gunzip(label_bytes)

    if len(image_bytes) < 16:
        raise IdxTruncatedError("image payload shorter than the 16-byte IDX header")
    magic, count, rows, cols = struct.unpack(">IIII", image_bytes[:16])
    if magic != MNIST_IMAGE_MAGIC:
        raise IdxMagicError(f"image magic 0x{magic:08x}, expected 0x{MNIST_IMAGE_MAGIC:08x}")

    if len(label_bytes) < 8:
        raise IdxTruncatedError("label payload shorter than the 8-byte IDX header")
    lmagic, lcount = struct.unpack(">II", label_bytes[:8])
    if lmagic != MNIST_LABEL_MAGIC:
        raise IdxMagicError(f"label magic 0x{lmagic:08x}, expected 0x{MNIST_LABEL_MAGIC:08x}")

    if count != lcount:
        raise IdxCountMismatchError(f"{count} images but {lcount} labels")

    need = 16 + count * rows * cols
    if len(image_bytes) < need:
        raise IdxTruncatedError(f"image payload holds {len(image_bytes)} bytes, need {need}")
    if len(label_bytes) < 8 + count:
        raise IdxTruncatedError(f"label payload holds {len(label_bytes)} bytes, need {8 + count}")

    pixels = np.frombuffer(image_bytes, dtype=np.uint8, count=count * rows * cols, offset=16)
    labels = np.frombuffer(label_bytes, dtype=np.uint8, count=count, offset=8)
    images = pixels.reshape(count, rows, cols)
    return [(GrayImage(images[i].copy()), int(labels[i])) for i in range(count)]


def encode_mnist_idx(images: list[GrayImage], labels: list[int]) -> tuple[bytes, bytes]:
    """Inverse of decode_mnist_idx; all images must share one shape."""
    if len(images) != len(labels):
        raise IdxCountMismatchError(f"{len(images)} images but {len(labels)} labels")
    if images:
        rows, cols = images[0].height, images[0].width
    else:
        rows, cols = 0, 0
    image_out = bytearray(struct.pack(">IIII", MNIST_IMAGE_MAGIC, len(images), rows, cols))
    for img in images:
        if (img.height, img.width) != (rows, cols):
            raise ValueError("all images in one IDX file must share a shape")
        image_out += np.ascontiguousarray(img.values, dtype=np.uint8).tobytes()
    label_out = struct.pack(">II", MNIST_LABEL_MAGIC, len(labels))
    label_out += bytes(int(l) for l in labels)
    return bytes(image_out), label_out


def decode_cifar10(data: bytes) -> list[tuple[RgbImage, int]]:
    """Decode CIFAR-10 binary records (1 label byte + 3072 planar channel bytes)."""
    data = _maybe_gunzip(data)
    if len(data) % CIFAR10_RECORD_LEN != 0:
        raise Cifar10FormatError(
            f"payload of {len(data)} bytes is not a multiple of the {CIFAR10_RECORD_LEN}-byte record"
        )
    out = []
    side = CIFAR10_SIDE
    for off in range(0, len(data), CIFAR10_RECORD_LEN):
        label = data[off]
        if label > 9:
            raise Cifar10FormatError(f"record at byte {off} has label {label}, expected 0..9")
        planes = np.frombuffer(data, dtype=np.uint8, count=3 * 1024, offset=off + 1)
        rgb = planes.reshape(3, side, side).transpose(1, 2, 0)
        out.append((RgbImage(np.ascontiguousarray(rgb)), int(label)))
    return out


def load_labeled_image_dir(root: str | Path) -> tuple[list[tuple[GrayImage, int]], list[str]]:
    """Read PNG/PGM files from ``root/<class-name>/``, labels from subdirectory names.

    Class indices follow the sorted subdirectory names; files are visited
    in sorted order so the record sequence is deterministic.
    """
    from PIL import Image

    root = Path(root)
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise DatasetFormatError(f"no class subdirectories under {root}")
    records = []
    for label, name in enumerate(classes):
        for path in sorted((root / name).iterdir()):
            if path.suffix.lower() not in (".png", ".pgm"):
                continue
            with Image.open(path) as im:
                if im.mode in ("L", "I;16", "I"):
                    arr = np.asarray(im.convert("L"), dtype=np.uint8)
                    gray = GrayImage(arr)
                else:
                    rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
                    gray = to_grayscale(RgbImage(rgb))
            records.append((gray, label))
    return records, classes


def to_grayscale(img: RgbImage) -> GrayImage:
    """Luminance conversion: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255]."""
    v = img.values.astype(np.float64)
    lum = 0.299 * v[:, :, 0] + 0.587 * v[:, :, 1] + 0.114 * v[:, :, 2]
    out = np.clip(np.rint(lum), 0, 255).astype(np.uint8)
    return GrayImage(out)


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian taps with radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_smooth(img: GrayImage, sigma: float) -> GrayImage:
    """Separable Gaussian smoothing with edge replication; returns a float64 image."""
    k = gaussian_kernel_1d(sigma)
    v = img.values.astype(np.float64)
    v = ndimage.correlate1d(v, k, axis=1, mode="nearest")
    v = ndimage.correlate1d(v, k, axis=0, mode="nearest")
    return GrayImage(v)


_SMOOTH_TAPS = {GradientOp.SOBEL: np.array([1.0, 2.0, 1.0]), GradientOp.SCHARR: np.array([3.0, 10.0, 3.0])}
_DIFF_TAPS = np.array([-1.0, 0.0, 1.0])


def gradient_magnitude(img: GrayImage, operator: GradientOp = GradientOp.SOBEL) -> GradientMap:
    """L2 magnitude of the 3x3 derivative responses, borders edge-replicated."""
    v = img.values.astype(np.float64)
    smooth = _SMOOTH_TAPS[operator]
    gx = ndimage.correlate1d(v, _DIFF_TAPS, axis=1, mode="nearest")
    gx = ndimage.correlate1d(gx, smooth, axis=0, mode="nearest")
    gy = ndimage.correlate1d(v, _DIFF_TAPS, axis=0, mode="nearest")
    gy = ndimage.correlate1d(gy, smooth, axis=1, mode="nearest")
    return GradientMap(np.hypot(gx, gy))
