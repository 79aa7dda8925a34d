"""Image carrier type and binary PPM dump/load."""

from dataclasses import dataclass

import numpy as np


class ShapeMismatch(ValueError):
    """Two images that must share dimensions do not."""


@dataclass(frozen=True)
class Image:
    """H x W x 3 intensity grid with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected HxWx3 pixels, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValueError("non-finite intensities")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("intensities outside [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


def check_same_shape(a: Image, b: Image):
    if a.pixels.shape != b.pixels.shape:
        raise ShapeMismatch(f"{a.pixels.shape} vs {b.pixels.shape}")


def quantize_u8(values):
    """Round-half-up quantization of [0,1] floats to uint8."""
    return np.clip(np.floor(np.asarray(values) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save_ppm(img: Image, destination):
    """Write a binary PPM (P6, maxval 255)."""
    data = quantize_u8(img.pixels)
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    if hasattr(destination, "write"):
        destination.write(header + data.tobytes())
    else:
        with open(destination, "wb") as f:
            f.write(header + data.tobytes())


def load_ppm(source) -> Image:
    if hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as f:
            raw = f.read()
    if not raw.startswith(b"P6"):
        raise ValueError("not a binary PPM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    data = np.frombuffer(raw, dtype=np.uint8, count=w * h * 3, offset=pos)
    return Image(data.reshape(h, w, 3).astype(np.float64) / 255.0)
