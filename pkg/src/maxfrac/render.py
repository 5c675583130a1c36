"""Binary PGM (P5) previews of clouds and measures.

Pixel value is proportional to the mass in the pixel, scaled so the
heaviest pixel is 255; any pixel holding mass is at least 1, empty pixels
are 0. One-dimensional input renders as a strip: every row is the same
histogram over x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .measure import DiscreteMeasure
from .metric import PointCloud


@dataclass(frozen=True)
class ImageConfig:
    width: int = 512
    height: int = 512
    pad: float = 0.05       # fraction of the bounding-box extent added on each side
    bbox: tuple | None = None   # ((xmin, xmax),) or ((xmin, xmax), (ymin, ymax))

    @classmethod
    def from_json(cls, spec: dict | None) -> "ImageConfig":
        spec = spec or {}
        bbox = spec.get("bbox")
        return cls(int(spec.get("width", 512)), int(spec.get("height", 512)),
                   float(spec.get("pad", 0.05)),
                   None if bbox is None else tuple(tuple(map(float, b)) for b in bbox))


def _points_weights(obj):
    if isinstance(obj, DiscreteMeasure):
        return obj.points, obj.weights
    if isinstance(obj, PointCloud):
        return obj.points, np.full(len(obj), 1.0 / len(obj))
    raise TypeError("render expects a PointCloud or a DiscreteMeasure")


def bounding_box(points: np.ndarray, pad: float) -> list[tuple[float, float]]:
    out = []
    for k in range(points.shape[1]):
        lo, hi = float(points[:, k].min()), float(points[:, k].max())
        span = hi - lo
        margin = pad * span if span > 0 else 0.5
        out.append((lo - margin, hi + margin))
    return out


def pixel_index(values: np.ndarray, lo: float, hi: float, n: int) -> np.ndarray:
    """Half-open binning of ``[lo, hi)`` into ``n`` pixels, clipped at the ends."""
    idx = np.floor((values - lo) / (hi - lo) * n).astype(np.int64)
    return np.clip(idx, 0, n - 1)


def raster(obj, config: ImageConfig = ImageConfig()) -> np.ndarray:
    """``(height, width)`` uint8 image, row 0 at the top."""
    pts, w = _points_weights(obj)
    d = pts.shape[1]
    if d > 2:
        raise DimensionError("only 1D and 2D inputs can be rendered")
    box = list(config.bbox) if config.bbox else bounding_box(pts, config.pad)
    W, H = config.width, config.height
    col = pixel_index(pts[:, 0], *box[0], W)
    if d == 1:
        hist = np.bincount(col, weights=w, minlength=W)[None, :].repeat(H, axis=0)
    else:
        row = (H - 1) - pixel_index(pts[:, 1], *box[1], H)
        hist = np.bincount(row * W + col, weights=w, minlength=W * H).reshape(H, W)
    img = np.zeros((H, W), dtype=np.uint8)
    peak = hist.max()
    if peak > 0:
        scaled = np.rint(hist / peak * 255.0)
        img = np.where(hist > 0, np.maximum(scaled, 1), 0).astype(np.uint8)
    return img


def encode_pgm(img: np.ndarray) -> bytes:
    H, W = img.shape
    return f"P5\n{W} {H}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    W, H = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(H, W)


def render(obj, config: ImageConfig = ImageConfig()) -> bytes:
    return encode_pgm(raster(obj, config))


def write_pgm(path, obj, config: ImageConfig = ImageConfig()):
    with open(path, "wb") as fh:
        fh.write(render(obj, config))
