"""Frame packet wire format, decoder-side reconstruction, link simulation.

Packet layout (little-endian, CRC-32 IEEE over all preceding bytes):

    magic "NV" | version 0x01 | frame_id u32 | pose 6 x f32 (se(3) log)
    | flags u8 | residual length u32 | residual bytes | crc u32

A header-only packet (no residual) is exactly 40 bytes.
"""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .codec import decode_residual
from .geometry import Intrinsics, se3_exp
from .image import Image
from .renderer import render
from .scene import Scene

MAGIC = b"NV"
VERSION = 1

FLAG_RESIDUAL = 0x01
FLAG_LOSSLESS = 0x02

HEADER_FMT = "<2sBI24sBI"  # magic, version, frame_id, pose, flags, residual len


class PacketError(ValueError):
    pass


class UnsupportedPacket(PacketError):
    """Bad magic or version."""


class CorruptPacket(PacketError):
    """CRC mismatch."""


class TruncatedPacket(PacketError):
    """Buffer shorter (or longer) than the declared layout."""


@dataclass(frozen=True)
class FramePacket:
    frame_id: int
    pose_twist: np.ndarray          # 6 x float32 se(3) log of the absolute pose
    residual_present: bool = True
    lossless: bool = False
    residual: bytes = b""

    def __post_init__(self):
        t = np.asarray(self.pose_twist, dtype=np.float32).reshape(6)
        object.__setattr__(self, "pose_twist", t)

    @property
    def pose(self):
        return se3_exp(self.pose_twist.astype(np.float64))


def serialize_packet(p: FramePacket) -> bytes:
    if len(p.residual) >= 1 << 32:
        raise PacketError("residual too large")
    flags = (FLAG_RESIDUAL if p.residual_present else 0) \
        | (FLAG_LOSSLESS if p.lossless else 0)
    body = struct.pack(HEADER_FMT, MAGIC, VERSION, p.frame_id,
                       p.pose_twist.astype("<f4").tobytes(), flags,
                       len(p.residual)) + p.residual
    return body + struct.pack("<I", zlib.crc32(body))


def parse_packet(data: bytes) -> FramePacket:
    head_len = struct.calcsize(HEADER_FMT)
    if len(data) < head_len + 4:
        raise TruncatedPacket(f"{len(data)} bytes < minimum {head_len + 4}")
    magic, version, frame_id, pose_raw, flags, res_len = \
        struct.unpack_from(HEADER_FMT, data, 0)
    if magic != MAGIC or version != VERSION:
        raise UnsupportedPacket(f"magic {magic!r} version {version}")
    total = head_len + res_len + 4
    if len(data) != total:
        raise TruncatedPacket(f"{len(data)} bytes, layout says {total}")
    body = data[:head_len + res_len]
    (crc,) = struct.unpack_from("<I", data, head_len + res_len)
    if crc != zlib.crc32(body):
        raise CorruptPacket("CRC mismatch")
    twist = np.frombuffer(pose_raw, dtype="<f4").copy()
    return FramePacket(frame_id, twist,
                       residual_present=bool(flags & FLAG_RESIDUAL),
                       lossless=bool(flags & FLAG_LOSSLESS),
                       residual=data[head_len:head_len + res_len])


def decode_frame(p: FramePacket, prior: Scene, intr: Intrinsics) -> Image:
    """Reconstruct the camera image: render at the packet pose, add residual."""
    rendered = render(prior, p.pose, intr)
    if not p.residual_present:
        return rendered
    residual = decode_residual(p.residual)
    if residual.shape != rendered.pixels.shape:
        raise PacketError("residual dimensions do not match intrinsics")
    return Image(np.clip(rendered.pixels + residual, 0.0, 1.0))


# --------------------------------------------------------------------------
# link simulation


@dataclass(frozen=True)
class LinkReport:
    transmit_times: np.ndarray   # seconds per packet
    delivery_times: np.ndarray   # cumulative seconds
    fps: float
    total_bytes: int


def simulate_link(packet_sizes, bitrate, per_packet_overhead=0) -> LinkReport:
    """Serial transmission accounting: 8*(size+overhead)/bitrate per packet."""
    if bitrate <= 0:
        raise ValueError("bitrate must be > 0")
    sizes = np.asarray(list(packet_sizes), dtype=np.float64)
    if sizes.size == 0:
        return LinkReport(np.zeros(0), np.zeros(0), 0.0, 0)
    times = 8.0 * (sizes + per_packet_overhead) / bitrate
    delivery = np.cumsum(times)
    total_time = 8.0 * (sizes.sum() + per_packet_overhead * sizes.size) / bitrate
    fps = sizes.size / total_time
    return LinkReport(times, delivery, float(fps), int(sizes.sum()))


def link_report_csv(packet_sizes, report: LinkReport) -> str:
    sizes = list(packet_sizes)
    lines = ["frame_id,bytes,tx_time_s,cumulative_s"]
    for i, (s, t, c) in enumerate(zip(sizes, report.transmit_times,
                                      report.delivery_times)):
        lines.append(f"{i},{int(s)},{float(t)!r},{float(c)!r}")
    return "\n".join(lines) + "\n"
