"""Block-DCT residual/image codec with deterministic entropy coding.

Stream layout ("RDC1"): magic, mode byte (0 lossy / 1 lossless), quality
byte, width and height as unsigned 16-bit little-endian, then exactly three
per-plane bit streams, byte-aligned between planes.

Lossy path per plane: level shift by 128, 8x8 orthonormal DCT-II, divide by
the standard JPEG luminance table scaled by the usual quality rule, zigzag,
then (zero-run, signed level) tokens in Exp-Golomb codes with a level of 0
acting as end-of-block.  Lossless path: left-predictor byte differences with
the same run/level token scheme; decode(encode(x)) is exact.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

MAGIC = b"RDC1"
BLOCK = 8
NUM_PLANES = 3

# standard JPEG luminance quantization table
BASE_QUANT = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)


class CodecError(ValueError):
    pass


class DomainError(CodecError):
    pass


class CodecParseError(CodecError):
    def __init__(self, message, byte_offset):
        super().__init__(f"{message} (at byte {byte_offset})")
        self.byte_offset = byte_offset


@dataclass(frozen=True)
class CodecParams:
    quality: int = 75
    mode: str = "lossy"  # "lossy" | "lossless"

    def __post_init__(self):
        if not (1 <= self.quality <= 100):
            raise ValueError("quality must be in 1..100")
        if self.mode not in ("lossy", "lossless"):
            raise ValueError(f"unknown mode {self.mode!r}")


def quant_table(quality):
    """JPEG quality scaling of the base table, entries clamped to [1, 255]."""
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    t = np.floor((BASE_QUANT * scale + 50.0) / 100.0)
    return np.clip(t, 1.0, 255.0)


def _zigzag_order():
    idx = np.arange(64).reshape(8, 8)
    order = []
    for s in range(15):
        diag = [(i, s - i) for i in range(8) if 0 <= s - i < 8]
        if s % 2 == 0:
            diag.reverse()
        order.extend(idx[i, j] for i, j in diag)
    return np.array(order)


ZIGZAG = _zigzag_order()
UNZIGZAG = np.argsort(ZIGZAG)


# --------------------------------------------------------------------------
# bit I/O and Exp-Golomb codes


class BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self._acc = 0
        self._nbits = 0

    def write_bits(self, value, count):
        self._acc = (self._acc << count) | (value & ((1 << count) - 1))
        self._nbits += count
        while self._nbits >= 8:
            self._nbits -= 8
            self.buf.append((self._acc >> self._nbits) & 0xFF)
        self._acc &= (1 << self._nbits) - 1

    def write_ue(self, v):
        code = v + 1
        n = code.bit_length()
        self.write_bits(0, n - 1)
        self.write_bits(code, n)

    def write_se(self, v):
        self.write_ue(2 * v - 1 if v > 0 else -2 * v)

    def align(self):
        if self._nbits:
            self.write_bits(0, 8 - self._nbits)

    def getvalue(self):
        assert self._nbits == 0
        return bytes(self.buf)


class BitReader:
    def __init__(self, data, offset=0):
        self.data = data
        self.pos = offset      # byte position
        self._acc = 0
        self._nbits = 0

    def read_bit(self):
        if self._nbits == 0:
            if self.pos >= len(self.data):
                raise CodecParseError("bitstream exhausted", self.pos)
            self._acc = self.data[self.pos]
            self.pos += 1
            self._nbits = 8
        self._nbits -= 1
        return (self._acc >> self._nbits) & 1

    def read_ue(self):
        zeros = 0
        while self.read_bit() == 0:
            zeros += 1
            if zeros > 40:
                raise CodecParseError("runaway Exp-Golomb prefix", self.pos)
        v = 1
        for _ in range(zeros):
            v = (v << 1) | self.read_bit()
        return v - 1

    def read_se(self):
        u = self.read_ue()
        if u == 0:
            return 0
        return (u + 1) // 2 if u % 2 else -(u // 2)

    def align(self):
        self._nbits = 0


def _write_run_level_tokens(w: BitWriter, values, terminate):
    """(zero-run, nonzero level) tokens; level 0 terminates early."""
    nz = np.nonzero(values)[0]
    pos = 0
    for j in nz:
        w.write_ue(int(j - pos))
        w.write_se(int(values[j]))
        pos = j + 1
    if pos < len(values) and terminate:
        w.write_ue(0)
        w.write_se(0)


def _read_run_level_tokens(r: BitReader, count):
    out = np.zeros(count, dtype=np.int64)
    pos = 0
    while pos < count:
        run = r.read_ue()
        level = r.read_se()
        if level == 0:
            break
        pos += run
        if pos >= count:
            raise CodecParseError("run past end of segment", r.pos)
        out[pos] = level
        pos += 1
    return out


# --------------------------------------------------------------------------
# residual sample mapping


def residual_quantize(samples):
    """Map signed residual values in [-1, 1] to uint8 (round half up)."""
    s = np.asarray(samples, dtype=np.float64)
    if not np.all(np.isfinite(s)) or s.min() < -1.0 or s.max() > 1.0:
        raise DomainError("residual samples must be finite in [-1, 1]")
    return np.clip(np.floor((s + 1.0) * 127.5 + 0.5), 0, 255).astype(np.uint8)


def residual_dequantize(plane):
    return np.asarray(plane, dtype=np.float64) / 127.5 - 1.0


# --------------------------------------------------------------------------
# plane transforms


def _pad_to_blocks(plane):
    h, w = plane.shape
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


def _to_blocks(padded):
    h, w = padded.shape
    return (padded.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK)
            .transpose(0, 2, 1, 3).reshape(-1, BLOCK, BLOCK))


def _from_blocks(blocks, h, w):
    bh, bw = h // BLOCK, w // BLOCK
    return (blocks.reshape(bh, bw, BLOCK, BLOCK)
            .transpose(0, 2, 1, 3).reshape(h, w))


def _encode_plane_lossy(w: BitWriter, plane, table):
    padded = _pad_to_blocks(plane.astype(np.float64) - 128.0)
    blocks = _to_blocks(padded)
    coefs = dctn(blocks, axes=(1, 2), norm="ortho")
    q = np.rint(coefs / table).astype(np.int64)
    zz = q.reshape(-1, 64)[:, ZIGZAG]
    for row in zz:
        _write_run_level_tokens(w, row, terminate=True)
    w.align()


def _decode_plane_lossy(r: BitReader, h, w_, table):
    ph, pw = h + (-h) % BLOCK, w_ + (-w_) % BLOCK
    nblocks = (ph // BLOCK) * (pw // BLOCK)
    zz = np.empty((nblocks, 64), dtype=np.int64)
    for b in range(nblocks):
        zz[b] = _read_run_level_tokens(r, 64)
    r.align()
    q = zz[:, UNZIGZAG].reshape(-1, BLOCK, BLOCK).astype(np.float64)
    blocks = idctn(q * table, axes=(1, 2), norm="ortho")
    padded = _from_blocks(blocks, ph, pw) + 128.0
    return np.clip(np.rint(padded[:h, :w_]), 0, 255).astype(np.uint8)


def _encode_plane_lossless(w: BitWriter, plane):
    flat = plane.astype(np.int64).ravel()
    diffs = np.empty_like(flat)
    diffs[0] = flat[0]
    diffs[1:] = flat[1:] - flat[:-1]
    diffs = np.mod(diffs, 256)
    diffs = np.where(diffs >= 128, diffs - 256, diffs)
    _write_run_level_tokens(w, diffs, terminate=True)
    w.align()


def _decode_plane_lossless(r: BitReader, h, w_):
    diffs = _read_run_level_tokens(r, h * w_)
    r.align()
    flat = np.mod(np.cumsum(diffs), 256)
    return flat.astype(np.uint8).reshape(h, w_)


# --------------------------------------------------------------------------
# public codec API


def encode(planes, params: CodecParams) -> bytes:
    """Encode exactly three uint8 planes of identical shape."""
    planes = [np.asarray(p, dtype=np.uint8) for p in planes]
    if len(planes) != NUM_PLANES:
        raise CodecError(f"expected {NUM_PLANES} planes, got {len(planes)}")
    h, w_ = planes[0].shape
    if h < 1 or w_ < 1:
        raise CodecError("empty plane")
    for p in planes:
        if p.shape != (h, w_):
            raise CodecError("plane shapes differ")
    if h > 0xFFFF or w_ > 0xFFFF:
        raise CodecError("dimensions exceed 16 bits")
    header = MAGIC + struct.pack("<BBHH", 0 if params.mode == "lossy" else 1,
                                 params.quality, w_, h)
    w = BitWriter()
    if params.mode == "lossy":
        table = quant_table(params.quality)
        for p in planes:
            _encode_plane_lossy(w, p, table)
    else:
        for p in planes:
            _encode_plane_lossless(w, p)
    return header + w.getvalue()


def decode(data):
    """Decode a codec stream to ([plane0, plane1, plane2], CodecParams)."""
    if len(data) < 10:
        raise CodecParseError("stream shorter than header", len(data))
    if data[:4] != MAGIC:
        raise CodecParseError(f"bad magic {data[:4]!r}", 0)
    mode_b, quality, w_, h = struct.unpack_from("<BBHH", data, 4)
    if mode_b not in (0, 1):
        raise CodecParseError(f"unknown mode byte {mode_b}", 4)
    params = CodecParams(quality=quality, mode="lossy" if mode_b == 0 else "lossless")
    r = BitReader(data, offset=10)
    planes = []
    if params.mode == "lossy":
        table = quant_table(quality)
        for _ in range(NUM_PLANES):
            planes.append(_decode_plane_lossy(r, h, w_, table))
    else:
        for _ in range(NUM_PLANES):
            planes.append(_decode_plane_lossless(r, h, w_))
    return planes, params


# --------------------------------------------------------------------------
# image and residual front ends


def encode_image_direct(img, params: CodecParams) -> bytes:
    """Classical baseline path: quantize an Image to 8 bit and encode."""
    from .image import quantize_u8
    u8 = quantize_u8(img.pixels)
    return encode([u8[:, :, c] for c in range(3)], params)


def decode_image_direct(data):
    from .image import Image
    planes, _ = decode(data)
    return Image(np.stack(planes, axis=-1).astype(np.float64) / 255.0)


def encode_residual(residual, params: CodecParams) -> bytes:
    """Encode a signed HxWx3 residual in [-1, 1]."""
    u8 = residual_quantize(residual)
    return encode([u8[:, :, c] for c in range(3)], params)


def decode_residual(data):
    planes, _ = decode(data)
    return residual_dequantize(np.stack(planes, axis=-1))
