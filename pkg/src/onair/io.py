"""Binary tensor files and metric/diagnostic tables.

Tensor file layout (all little-endian)::

    bytes 0-3    magic  b"OATF"
    u32          version (1)
    u32          dtype   0 = float64, 1 = complex128 as interleaved (re, im)
    u32          ndim
    u64 * ndim   dims
    payload      row-major scalars

Booleans (masks) are written as float64 0/1.
"""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .dictlearn import Dictionary
from .errors import TensorFormatError

MAGIC = b"OATF"
VERSION = 1
REAL64 = 0
COMPLEX128 = 1
_DTYPES = {REAL64: np.dtype("<f8"), COMPLEX128: np.dtype("<c16")}

DIAGNOSTIC_COLUMNS = ("window_index", "objective_pre", "objective_post", "code_sparsity", "wall_ms")
SUMMARY_KEYS = ("psnr_3d", "nrmse_percent")


def encode_tensor(array) -> bytes:
    a = np.asarray(array)
    code = COMPLEX128 if np.iscomplexobj(a) else REAL64
    payload = np.ascontiguousarray(a, dtype=_DTYPES[code])
    header = MAGIC + struct.pack("<III", VERSION, code, a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return header + payload.tobytes()


def decode_tensor(buf: bytes) -> np.ndarray:
    if len(buf) < 16:
        raise TensorFormatError(f"truncated header: {len(buf)} bytes, need at least 16", len(buf))
    if buf[:4] != MAGIC:
        raise TensorFormatError(f"bad magic {buf[:4]!r}", 0)
    version, code, ndim = struct.unpack_from("<III", buf, 4)
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}", 4)
    if code not in _DTYPES:
        raise TensorFormatError(f"unknown dtype code {code}", 8)
    dims_end = 16 + 8 * ndim
    if len(buf) < dims_end:
        raise TensorFormatError(f"truncated dims: expected {dims_end} header bytes, got {len(buf)}", len(buf))
    dims = struct.unpack_from(f"<{ndim}Q", buf, 16)
    dtype = _DTYPES[code]
    expected = math.prod(dims) * dtype.itemsize
    actual = len(buf) - dims_end
    if actual != expected:
        raise TensorFormatError(
            f"payload length mismatch: expected {expected} bytes, got {actual}", dims_end
        )
    out = np.frombuffer(buf, dtype=dtype, offset=dims_end).reshape(dims)
    return out.astype(np.complex128 if code == COMPLEX128 else np.float64)


def write_tensor(path, array) -> None:
    Path(path).write_bytes(encode_tensor(array))


def read_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


def _meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta")


def write_dictionary(path, dictionary: Dictionary) -> None:
    """Atoms as a tensor file plus ``<path>.meta`` with the constraint."""
    write_tensor(path, dictionary.atoms)
    n1, n2 = dictionary.reshape_dims
    lines = [
        f"constraint={dictionary.constraint}",
        f"rank={dictionary.effective_rank}",
        f"reshape_dims={n1}x{n2}",
    ]
    _meta_path(path).write_text("\n".join(lines) + "\n")


def read_dictionary(path) -> Dictionary:
    atoms = read_tensor(path)
    meta = {}
    mp = _meta_path(path)
    if mp.exists():
        for line in mp.read_text().splitlines():
            if line.strip():
                k, _, v = line.partition("=")
                meta[k.strip()] = v.strip()
    constraint = meta.get("constraint", "full")
    rank = int(meta["rank"]) if "rank" in meta else None
    dims = tuple(int(v) for v in meta["reshape_dims"].split("x")) if "reshape_dims" in meta else None
    return Dictionary(atoms, constraint, rank, dims)


def emit_metrics(report, diagnostics, path) -> None:
    """Write the per-window table followed by a summary block.

    ``report`` may be ``None`` (no reference available); the summary then
    holds ``nan``.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        for d in diagnostics:
            w.writerow([d.window_index, repr(float(d.objective_pre)), repr(float(d.objective_post)),
                        repr(float(d.code_sparsity)), repr(float(d.wall_ms))])
        w.writerow([])
        w.writerow(("metric", "value"))
        for key in SUMMARY_KEYS:
            value = getattr(report, key) if report is not None else float("nan")
            w.writerow((key, repr(float(value))))


def read_metrics(path) -> tuple[list[dict], dict]:
    rows, summary = [], {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            if not row:
                break
            rows.append({k: (int(v) if k == "window_index" else float(v)) for k, v in zip(header, row)})
        next(reader, None)
        for row in reader:
            if row:
                summary[row[0]] = float(row[1])
    return rows, summary
