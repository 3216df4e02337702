"""On-disk containers: volumes (.tvol) and measurement sets (.tcm).

Both formats are a single-line JSON header (UTF-8, terminated by a
newline) followed by a raw little-endian payload.  Volume payloads are
stored in canonical (first-index-fastest) order.  Round trips are
bit-exact.
"""

import json
from dataclasses import dataclass

import numpy as np

FORMAT_VERSION = 1

_DTYPES = {"f64le": "<f8", "u8": "u1"}


def _write(path, header, payload):
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def _read(path):
    with open(path, "rb") as fh:
        line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed header") from exc
    if not isinstance(header, dict):
        raise ValueError(f"{path}: malformed header")
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported format_version {header.get('format_version')}"
        )
    return header, payload


def save_volume(path, vol, dtype="f64le", extra=None):
    """Write a volume; `extra` lets callers record e.g. the seed used."""
    vol = np.asarray(vol)
    if vol.ndim != 3:
        raise ValueError(f"expected an order-3 volume, got order {vol.ndim}")
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported dtype {dtype!r}")
    h, w, d = vol.shape
    header = {"format_version": FORMAT_VERSION, "H": h, "W": w, "D": d,
              "dtype": dtype}
    if extra:
        header.update(extra)
    payload = vol.astype(_DTYPES[dtype]).ravel(order="F").tobytes()
    _write(path, header, payload)


def load_volume(path):
    """Read a volume; returns (array of shape (H, W, D), header dict)."""
    header, payload = _read(path)
    try:
        shape = (int(header["H"]), int(header["W"]), int(header["D"]))
        dtype = _DTYPES[header["dtype"]]
    except KeyError as exc:
        raise ValueError(f"{path}: missing header field {exc}") from exc
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype=dtype)
    vol = data.reshape(shape, order="F")
    if header["dtype"] == "u8":
        return vol.copy(), header
    return np.ascontiguousarray(vol, dtype=np.float64), header


def save_mask(path, mask, extra=None):
    """Write a boolean mask volume as u8 zeros and ones."""
    mask = np.asarray(mask)
    save_volume(path, mask.astype(np.uint8), dtype="u8", extra=extra)


def load_mask(path):
    vol, header = load_volume(path)
    return vol.astype(bool), header


@dataclass
class MeasurementSet:
    """Measurement values plus everything needed to rebuild the operator."""

    y: np.ndarray
    mode: str
    dims: tuple
    ratio: float
    seed: int


def save_measurements(path, y, op):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size != op.n_measurements:
        raise ValueError(
            f"measurement vector size {y.size} != operator's {op.n_measurements}"
        )
    h, w, d = op.dims
    header = {
        "format_version": FORMAT_VERSION,
        "mode": op.mode,
        "H": h, "W": w, "D": d,
        "ratio": op.ratio,
        "seed": op.seed,
        "M": int(op.n_measurements),
    }
    _write(path, header, y.astype("<f8").tobytes())


def load_measurements(path):
    header, payload = _read(path)
    try:
        dims = (int(header["H"]), int(header["W"]), int(header["D"]))
        mode = header["mode"]
        ratio = float(header["ratio"])
        seed = int(header["seed"])
        m = int(header["M"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing header field {exc}") from exc
    if len(payload) != m * 8:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, expected {m * 8}"
        )
    y = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return MeasurementSet(y=y, mode=mode, dims=dims, ratio=ratio, seed=seed)
