"""File formats and run configuration.

Grid data travels as a raw little-endian binary payload plus a plain-text
sidecar (``<path>.hdr``, key=value lines) describing dims and dtype. 2D
images can alternatively be stored as binary portable greymaps (magic
``P5``), chosen by the ``.pgm`` extension on save and detected by magic
on load. Round-trips are bit-exact for both u8 and f64 payloads.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .grid import GridShape, MaskField, ScalarField

_DTYPES = {"u8": np.dtype("uint8"), "f64": np.dtype("<f8")}
_DTYPE_NAMES = {np.dtype("uint8"): "u8", np.dtype("<f8"): "f64", np.dtype("float64"): "f64"}


@dataclass(frozen=True)
class VolumeHeader:
    """Sidecar metadata of a raw payload."""

    dims: tuple[int, ...]
    dtype: str  # "u8" or "f64"

    def __post_init__(self):
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype must be one of {sorted(_DTYPES)}, got {self.dtype!r}")
        if len(self.dims) not in (2, 3) or any(n < 1 for n in self.dims):
            raise ValueError(f"bad dims {self.dims}")

    @property
    def npoints(self) -> int:
        total = 1
        for n in self.dims:
            total *= n
        return total

    @property
    def nbytes(self) -> int:
        return self.npoints * _DTYPES[self.dtype].itemsize


def _header_path(path) -> Path:
    return Path(str(path) + ".hdr")


def _write_header(path, header: VolumeHeader) -> None:
    text = (
        f"dims={','.join(str(n) for n in header.dims)}\n"
        f"dtype={header.dtype}\n"
        "byteorder=little\n"
    )
    _header_path(path).write_text(text)


def _read_header(path) -> VolumeHeader:
    hdr = _header_path(path)
    if not hdr.exists():
        raise FileNotFoundError(f"missing sidecar header {hdr}")
    entries = {}
    for line in hdr.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{hdr}: malformed line {line!r}")
        entries[key.strip()] = value.strip()
    unknown = set(entries) - {"dims", "dtype", "byteorder"}
    if unknown:
        raise ValueError(f"{hdr}: unknown header keys {sorted(unknown)}")
    if entries.get("byteorder", "little") != "little":
        raise ValueError(f"{hdr}: only little-endian payloads are supported")
    try:
        dims = tuple(int(part) for part in entries["dims"].split(","))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{hdr}: bad or missing dims") from exc
    return VolumeHeader(dims=dims, dtype=entries.get("dtype", "u8"))


def save_array(path, array: np.ndarray) -> None:
    """Raw payload + sidecar for a 2D/3D u8 or f64 array."""
    arr = np.ascontiguousarray(array)
    if arr.dtype not in _DTYPE_NAMES:
        raise ValueError(f"unsupported dtype {arr.dtype}; use uint8 or float64")
    header = VolumeHeader(dims=arr.shape, dtype=_DTYPE_NAMES[arr.dtype])
    Path(path).write_bytes(arr.astype(arr.dtype.newbyteorder("<")).tobytes())
    _write_header(path, header)


def load_array(path) -> np.ndarray:
    """Inverse of :func:`save_array`; validates the payload length."""
    header = _read_header(path)
    payload = Path(path).read_bytes()
    if len(payload) != header.nbytes:
        raise ValueError(
            f"{path}: payload is {len(payload)} bytes, header implies {header.nbytes}"
        )
    arr = np.frombuffer(payload, dtype=_DTYPES[header.dtype]).reshape(header.dims)
    return arr.astype(arr.dtype, copy=True)


def _save_pgm(path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    if arr.dtype != np.uint8:
        raise ValueError("PGM supports u8 images only")
    if arr.ndim != 2:
        raise ValueError("PGM supports 2D images only")
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def _load_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM")
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # possibly interleaved with '#' comments, then a single whitespace byte
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    cols, rows, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    payload = data[pos : pos + rows * cols]
    if len(payload) != rows * cols:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, expected {rows * cols}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(rows, cols).copy()


def save_image(path, array: np.ndarray) -> None:
    """2D image, raw+sidecar by default, PGM when the path ends in .pgm."""
    arr = np.asarray(array)
    if arr.ndim != 2:
        raise ValueError(f"save_image expects 2D data, got shape {arr.shape}")
    if str(path).endswith(".pgm"):
        _save_pgm(path, arr)
    else:
        save_array(path, arr)


def load_image(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(2)
    arr = _load_pgm(path) if magic == b"P5" else load_array(path)
    if arr.ndim != 2:
        raise ValueError(f"{path}: expected a 2D image, got shape {arr.shape}")
    return arr


def save_volume(path, array: np.ndarray) -> None:
    arr = np.asarray(array)
    if arr.ndim != 3:
        raise ValueError(f"save_volume expects 3D data, got shape {arr.shape}")
    save_array(path, arr)


def load_volume(path) -> np.ndarray:
    arr = load_array(path)
    if arr.ndim != 3:
        raise ValueError(f"{path}: expected a 3D volume, got shape {arr.shape}")
    return arr


def load_grid_data(path) -> np.ndarray:
    """2D or 3D payload, format detected automatically."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    return _load_pgm(path) if magic == b"P5" else load_array(path)


def save_mask(path, mask: MaskField) -> None:
    save_array(path, mask.values.astype(np.uint8))


def load_mask(path) -> MaskField:
    arr = load_grid_data(path)
    return MaskField(GridShape(arr.shape), arr != 0)


def load_labels(path):
    """Label raster -> (background labels, foreground labels).

    Value 0 marks unlabeled cells, 1 the background class, 2 the foreground
    class; anything else is rejected with its coordinate.
    """
    arr = load_grid_data(path)
    bad = (arr != 0) & (arr != 1) & (arr != 2)
    if bad.any():
        where = tuple(int(c) for c in np.argwhere(bad)[0])
        raise ValueError(f"{path}: label value {int(arr[where])} at {where} not in {{0,1,2}}")
    shape = GridShape(arr.shape)
    return MaskField(shape, arr == 1), MaskField(shape, arr == 2)


def to_unit_interval(array: np.ndarray) -> ScalarField:
    """Image intensities rescaled into [0, 1] for the similarity terms.

    u8 data is divided by 255; float data already inside [0, 1] is kept
    verbatim, anything else is min-max rescaled.
    """
    arr = np.asarray(array)
    if arr.dtype == np.uint8:
        values = arr.astype(np.float64) / 255.0
    else:
        values = arr.astype(np.float64)
        lo, hi = float(values.min()), float(values.max())
        if lo < 0.0 or hi > 1.0:
            values = np.zeros_like(values) if hi == lo else (values - lo) / (hi - lo)
    return ScalarField(GridShape(arr.shape), values)


DIAGNOSTIC_COLUMNS = ("iter", "objective", "res_p", "res_Q", "res_z", "dphi")


def write_diagnostics(path, history) -> None:
    """Per-iteration solver records as a CSV, shortest-round-trip floats."""
    lines = [",".join(DIAGNOSTIC_COLUMNS)]
    for rec in history:
        lines.append(
            ",".join(
                [
                    str(rec.iteration),
                    repr(rec.objective),
                    repr(rec.res_p),
                    repr(rec.res_q),
                    repr(rec.res_z),
                    repr(rec.dphi),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_diagnostics(path):
    """CSV back into a list of per-iteration dict records."""
    lines = Path(path).read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != DIAGNOSTIC_COLUMNS:
        raise ValueError(f"{path}: not a diagnostics CSV")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        rec = dict(zip(DIAGNOSTIC_COLUMNS, parts))
        out.append(
            {
                "iter": int(rec["iter"]),
                "objective": float(rec["objective"]),
                "res_p": float(rec["res_p"]),
                "res_Q": float(rec["res_Q"]),
                "res_z": float(rec["res_z"]),
                "dphi": float(rec["dphi"]),
            }
        )
    return out


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one CLI solve, as flat typed fields."""

    model: str
    input: str | None = None
    image: str | None = None
    labels: str | None = None
    init: str | None = None
    out: str | None = None
    diag: str | None = None
    figures: str | None = None
    seed: int = 0
    # segmentation weights
    a: float = 1.0
    b: float = 10.0
    mu: float = 1.0
    alpha_h: float = 1.5
    g_alpha: float = 1.0
    g_beta: float = 10.0
    sigma: float = 1.5
    # hull penalty
    lam: float = 800.0
    softplus_t: float | None = 5.0
    # solver controls
    rho1: float | None = None
    rho2: float = 2000.0
    rho3: float = 10.0
    epsilon: float = 10.0
    max_iters: int = 500
    tol: float = 1e-4
    band_refresh: int = 1


_CONFIG_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_FLOAT_FIELDS = {
    "a", "b", "mu", "alpha_h", "g_alpha", "g_beta", "sigma",
    "lam", "rho2", "rho3", "epsilon", "tol",
}
_OPT_FLOAT_FIELDS = {"softplus_t", "rho1"}
_INT_FIELDS = {"seed", "max_iters", "band_refresh"}


def render_config(config: RunConfig) -> str:
    """key=value text; None-valued fields are omitted."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        lines.append(f"{f.name}={value!r}" if isinstance(value, str) else f"{f.name}={value}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Inverse of :func:`render_config`; unknown keys are rejected."""
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not sep:
            raise ValueError(f"malformed config line {line!r}")
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        if key in _FLOAT_FIELDS or key in _OPT_FLOAT_FIELDS:
            values[key] = float(raw)
        elif key in _INT_FIELDS:
            values[key] = int(raw)
        else:
            values[key] = raw[1:-1] if raw[:1] in "'\"" and raw[-1:] == raw[:1] else raw
    return RunConfig(**values)
