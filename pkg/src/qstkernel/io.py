"""File formats.

Symbol container
    One line of JSON (the header), a newline, then a payload.  Grid symbols
    have ``{"kind": "grid", "dim", "domain", "axes": [{"extent", "points"}]}``
    and a payload of ``points**dim`` little-endian complex doubles in C order.
    Gaussian-class symbols have ``{"kind": "gaussian", "dim", "terms": [...]}``
    with each term's ``c``, ``A`` and ``b`` stored as ``[re, im]`` pairs and an
    empty payload.

Matrix container
    Header ``{"kind": "matrix", "dim", "hermitian"}`` and ``dim**2`` complex
    doubles (C order).

Generalized-symbol manifest
    JSON ``{"orbit", "weights", "fibers": [{"sigma", "frame", "symbol" |
    "central"}]}``; ``sigma``/``frame`` use the ``{dim, rows}`` matrix form
    and ``symbol`` is a path relative to the manifest.

Spectra
    CSV with columns ``eigenvalue,multiplicity``.

Every writer goes through :func:`atomic_write` (temporary file + rename).
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import matrix_from_json, matrix_to_json
from .star.gaussian import GaussianSum, GaussianSymbol
from .star.grid import Grid, GridSymbol

_DTYPE = np.dtype("<c16")


def atomic_write(path, data):
    """Write ``data`` (bytes or str) to ``path`` via a temporary file and rename."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def _pairs(arr):
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _unpair(obj):
    arr = np.asarray(obj, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def _split(blob):
    nl = blob.index(b"\n")
    header = json.loads(blob[:nl].decode())
    return header, blob[nl + 1:]


# ---------------------------------------------------------------- symbols


def encode_symbol(sym):
    if isinstance(sym, GridSymbol):
        header = {
            "kind": "grid",
            "dim": sym.dim,
            "domain": sym.domain,
            "axes": [{"extent": sym.grid.extent, "points": sym.grid.n}] * sym.dim,
        }
        payload = np.ascontiguousarray(sym.values, dtype=_DTYPE).tobytes()
    elif isinstance(sym, (GaussianSymbol, GaussianSum)):
        terms = sym.terms if isinstance(sym, GaussianSum) else (sym,)
        if not all(isinstance(t, GaussianSymbol) for t in terms):
            raise TypeError("only plain Gaussian terms can be stored")
        header = {
            "kind": "gaussian",
            "dim": sym.dim,
            "terms": [{"c": _pair(t.c), "A": _pairs(t.A), "b": _pairs(t.b)} for t in terms],
        }
        payload = b""
    else:
        raise TypeError(f"cannot store {type(sym).__name__}")
    return json.dumps(header, sort_keys=True).encode() + b"\n" + payload


def decode_symbol(blob):
    header, payload = _split(blob)
    kind = header.get("kind")
    dim = int(header["dim"])
    if kind == "grid":
        axes = header["axes"]
        if len(axes) != dim:
            raise ValueError("axis count does not match dimension")
        n = {int(a["points"]) for a in axes}
        extent = {float(a["extent"]) for a in axes}
        if len(n) != 1 or len(extent) != 1:
            raise ValueError("only cubic grids are supported")
        n, extent = n.pop(), extent.pop()
        values = np.frombuffer(payload, dtype=_DTYPE)
        if values.size != n**dim:
            raise ValueError(f"payload has {values.size} values, expected {n**dim}")
        grid = Grid.from_extent(n, extent, dim)
        return GridSymbol(grid, values.reshape((n,) * dim).astype(complex), header.get("domain", "x"))
    if kind == "gaussian":
        terms = [
            GaussianSymbol(complex(*t["c"]), _unpair(t["A"]), _unpair(t["b"]))
            for t in header["terms"]
        ]
        if any(t.dim != dim for t in terms):
            raise ValueError("term dimension does not match header")
        return terms[0] if len(terms) == 1 else GaussianSum(terms)
    raise ValueError(f"unknown symbol kind {kind!r}")


def write_symbol(path, sym):
    atomic_write(path, encode_symbol(sym))


def read_symbol(path):
    return decode_symbol(Path(path).read_bytes())


# --------------------------------------------------------------- matrices


def encode_matrix(M, hermitian=None):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if hermitian is None:
        hermitian = bool(np.allclose(M, M.conj().T, atol=1e-12))
    header = {"kind": "matrix", "dim": M.shape[0], "hermitian": bool(hermitian)}
    return json.dumps(header, sort_keys=True).encode() + b"\n" + np.ascontiguousarray(M, dtype=_DTYPE).tobytes()


def decode_matrix(blob):
    header, payload = _split(blob)
    if header.get("kind", "matrix") != "matrix":
        raise ValueError("not a matrix container")
    dim = int(header["dim"])
    values = np.frombuffer(payload, dtype=_DTYPE)
    if values.size != dim * dim:
        raise ValueError(f"payload has {values.size} values, expected {dim * dim}")
    return values.reshape(dim, dim).astype(complex), bool(header["hermitian"])


def write_matrix(path, M, hermitian=None):
    atomic_write(path, encode_matrix(M, hermitian))


def read_matrix(path):
    return decode_matrix(Path(path).read_bytes())


# ---------------------------------------------------- generalized symbols


def write_manifest(path, gsym, symbol_dir=None):
    """Store a generalized symbol as a manifest plus one symbol file per fiber."""
    path = Path(path)
    symbol_dir = path.parent if symbol_dir is None else Path(symbol_dir)
    symbol_dir.mkdir(parents=True, exist_ok=True)
    sample = gsym.sample
    entries = []
    for i, (sigma, fiber) in enumerate(zip(sample.points, gsym.fibers)):
        entry = {"sigma": matrix_to_json(sigma)}
        if sample.frames is not None:
            entry["frame"] = matrix_to_json(sample.frames[i])
        if isinstance(fiber, (int, float, complex)):
            entry["central"] = _pair(fiber)
        else:
            fpath = symbol_dir / f"{path.stem}_fiber{i:04d}.sym"
            write_symbol(fpath, fiber)
            entry["symbol"] = os.path.relpath(fpath, path.parent)
        entries.append(entry)
    doc = {"orbit": sample.orbit, "weights": sample.weights.tolist(), "fibers": entries}
    atomic_write(path, json.dumps(doc, indent=1, sort_keys=True))


def read_manifest(path):
    from .bundle import GeneralizedSymbol, SigmaSample

    path = Path(path)
    doc = json.loads(path.read_text())
    entries = doc["fibers"]
    points = np.array([matrix_from_json(e["sigma"]) for e in entries])
    frames = None
    if all("frame" in e for e in entries):
        frames = np.array([matrix_from_json(e["frame"]) for e in entries])
    sample = SigmaSample(points, np.asarray(doc["weights"], float), doc["orbit"], frames)
    fibers = []
    for e in entries:
        if "central" in e:
            fibers.append(complex(*e["central"]))
        else:
            fibers.append(read_symbol(path.parent / e["symbol"]))
    return GeneralizedSymbol(sample, fibers)


# ---------------------------------------------------------------- spectra


def spectrum_csv(levels):
    """CSV text for ``(eigenvalue, multiplicity)`` rows."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eigenvalue", "multiplicity"])
    for value, mult in levels:
        w.writerow([repr(float(value)), int(mult)])
    return buf.getvalue()


def write_spectrum(path, levels):
    atomic_write(path, spectrum_csv(levels))


def read_spectrum(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(float(r["eigenvalue"]), int(r["multiplicity"])) for r in rows]


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
