"""File formats: the ``ACSK`` k-space container, CSV tables, PGM images, metrics.

``ACSK`` layout (little-endian)::

    magic  b"ACSK"
    u32    version (1)
    u32    n1, n2, L, C, k
    u8     flags (bit 0: basis B present)
    u32    Omega[L]
    c128   Y[L * C]      column-major, (re, im) interleaved
    c128   B[N * k]      column-major, only if flags & 1
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .transforms import GridShape, SamplingPattern

MAGIC = b"ACSK"
VERSION = 1
_HEADER = struct.Struct("<4s6IB")
FLAG_BASIS = 0x01


class KSpaceFormatError(ValueError):
    """Malformed or inconsistent k-space container."""


@dataclass(frozen=True)
class KSpaceData:
    shape: GridShape
    omega: SamplingPattern
    Y: np.ndarray
    k: int
    B: np.ndarray | None = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=np.complex128)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape[0] != self.omega.L:
            raise ValueError(f"Y has {Y.shape[0]} rows but the pattern has L={self.omega.L}")
        if self.omega.N != self.shape.N:
            raise ValueError(f"pattern is for N={self.omega.N}, grid has N={self.shape.N}")
        if self.k < 1:
            raise ValueError("k must be positive")
        object.__setattr__(self, "Y", Y)
        if self.B is not None:
            B = np.asarray(self.B, dtype=np.complex128)
            if B.shape != (self.shape.N, self.k):
                raise ValueError(f"B must be {self.shape.N}x{self.k}, got {B.shape}")
            object.__setattr__(self, "B", B)

    @property
    def L(self) -> int:
        return self.omega.L

    @property
    def C(self) -> int:
        return self.Y.shape[1]


def encode_kspace(data: KSpaceData) -> bytes:
    s = data.shape
    if np.any(data.omega.indices > 0xFFFFFFFF):
        raise ValueError("sampling indices do not fit in u32")
    flags = FLAG_BASIS if data.B is not None else 0
    parts = [
        _HEADER.pack(MAGIC, VERSION, s.n1, s.n2, data.L, data.C, data.k, flags),
        data.omega.indices.astype("<u4").tobytes(),
        data.Y.astype("<c16").tobytes(order="F"),
    ]
    if data.B is not None:
        parts.append(data.B.astype("<c16").tobytes(order="F"))
    return b"".join(parts)


def decode_kspace(buf: bytes, source: str = "<bytes>") -> KSpaceData:
    """Parse a container; errors name the section and byte offset that failed."""
    if len(buf) < _HEADER.size:
        raise KSpaceFormatError(f"{source}: truncated header: need {_HEADER.size} bytes, "
                                f"file has {len(buf)}")
    magic, version, n1, n2, L, C, k, flags = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise KSpaceFormatError(f"{source}: bad magic {magic!r} at offset 0, expected {MAGIC!r}")
    if version != VERSION:
        raise KSpaceFormatError(f"{source}: unsupported version {version} at offset 4")
    if min(n1, n2, L, C, k) < 1:
        raise KSpaceFormatError(f"{source}: header dimensions must be positive "
                                f"(n1={n1}, n2={n2}, L={L}, C={C}, k={k})")
    if flags & ~FLAG_BASIS:
        raise KSpaceFormatError(f"{source}: unknown flag bits 0x{flags:02x} at offset 28")
    N = n1 * n2
    if L > N or k > N:
        raise KSpaceFormatError(f"{source}: L={L} and k={k} must not exceed N={N}")
    sections = [("Omega", "<u4", L), ("Y", "<c16", L * C)]
    if flags & FLAG_BASIS:
        sections.append(("B", "<c16", N * k))
    pos = _HEADER.size
    arrays = {}
    for name, dt, count in sections:
        nbytes = np.dtype(dt).itemsize * count
        if len(buf) - pos < nbytes:
            raise KSpaceFormatError(f"{source}: truncated section {name}: need {nbytes} bytes at "
                                    f"offset {pos}, only {len(buf) - pos} available")
        arrays[name] = np.frombuffer(buf, dtype=dt, count=count, offset=pos)
        pos += nbytes
    if pos != len(buf):
        raise KSpaceFormatError(f"{source}: {len(buf) - pos} trailing bytes after offset {pos}")
    try:
        omega = SamplingPattern(arrays["Omega"].astype(np.int64), N)
    except ValueError as exc:
        raise KSpaceFormatError(f"{source}: section Omega at offset {_HEADER.size}: {exc}") from exc
    Y = arrays["Y"].astype(np.complex128).reshape((L, C), order="F")
    B = arrays["B"].astype(np.complex128).reshape((N, k), order="F") if "B" in arrays else None
    return KSpaceData(GridShape(n1, n2), omega, Y, k, B)


def write_kspace(path: str | Path, data: KSpaceData) -> None:
    Path(path).write_bytes(encode_kspace(data))


def read_kspace(path: str | Path) -> KSpaceData:
    p = Path(path)
    return decode_kspace(p.read_bytes(), str(p))


# ---------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path, columns: list[str], rows: list[dict]) -> None:
    """Header row plus one line per dict, in the given column order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            missing = [c for c in columns if c not in row]
            if missing:
                raise KeyError(f"row is missing columns {missing}")
            w.writerow([_fmt(row[c]) for c in columns])


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# PGM


class PGMFormatError(ValueError):
    """Malformed PGM file."""


PGM_MAXVAL = 65535


def encode_pgm(img: np.ndarray, maxval: int = PGM_MAXVAL) -> bytes:
    """Binary ``P5`` of ``|img|`` linearly scaled from ``[0, max|img|]`` to ``[0, maxval]``.

    Rows of the array are image rows. An all-zero image maps to all zeros.
    """
    a = np.abs(np.asarray(img))
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a nonempty 2-D image, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains non-finite values")
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be in [1, 65535]")
    peak = a.max()
    q = np.zeros(a.shape) if peak == 0 else np.rint(a / peak * maxval)
    dt = ">u2" if maxval > 255 else "u1"
    h, w = a.shape
    return f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + q.astype(dt).tobytes()


def write_pgm(path: str | Path, img: np.ndarray, maxval: int = PGM_MAXVAL) -> None:
    Path(path).write_bytes(encode_pgm(img, maxval))


def decode_pgm(buf: bytes, source: str = "<bytes>") -> np.ndarray:
    """Parse a binary ``P5`` image into a float array in ``[0, 1]`` (value / maxval)."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PGMFormatError(f"{source}: truncated header at offset {pos}")
        tokens.append(buf[start:pos])
    if tokens[0] != b"P5":
        raise PGMFormatError(f"{source}: bad magic {tokens[0]!r} at offset 0, expected b'P5'")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise PGMFormatError(f"{source}: non-numeric header field: {exc}") from exc
    if w < 1 or h < 1 or not 1 <= maxval <= 65535:
        raise PGMFormatError(f"{source}: invalid header width={w} height={h} maxval={maxval}")
    pos += 1  # single whitespace after maxval
    dt = np.dtype(">u2" if maxval > 255 else "u1")
    nbytes = w * h * dt.itemsize
    if len(buf) - pos < nbytes:
        raise PGMFormatError(f"{source}: truncated pixel data: need {nbytes} bytes at offset "
                             f"{pos}, only {len(buf) - pos} available")
    px = np.frombuffer(buf, dtype=dt, count=w * h, offset=pos).reshape(h, w)
    return px.astype(np.float64) / maxval


def read_pgm(path: str | Path) -> np.ndarray:
    p = Path(path)
    return decode_pgm(p.read_bytes(), str(p))


# ---------------------------------------------------------------------------
# metrics


def format_metrics(metrics: dict) -> str:
    return "".join(f"{key}={_fmt(val)}\n" for key, val in metrics.items())


def write_metrics(path: str | Path, metrics: dict) -> None:
    Path(path).write_text(format_metrics(metrics), encoding="utf-8")


def read_metrics(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out
