"""Ensemble serialization: CSV and a compact binary dump.

CSV: one metadata comment line, a header, then one row per path x grid point
(path_id, t, x_1..x_d). Floats use repr, the shortest round-trip form, so
identical ensembles serialize to identical bytes.

Binary layout (all little-endian), header then payload:

    offset  size  field
    0       4     magic b"MHJE"
    4       2     format version (u16, currently 1)
    6       1     kind code (u8: 0 m1, 1 m2, 2 mix, 3 langevin)
    7       1     pad (0)
    8       4     d_star (u32)
    12      8     n_paths (u64)
    20      8     n_grid (u64)
    28      8     scale (f64: proposal variance, or dt for langevin)
    36      8     alpha (f64, NaN when absent)
    44      8     seed (u64)
    52      -     obs grid, n_grid f64
    -       -     samples, n_paths * n_grid * d_star f64, C order
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .errors import ConfigurationError
from .jump import ObservedEnsemble

_MAGIC = b"MHJE"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBIQQddQ")
_KIND_CODES = {"m1": 0, "m2": 1, "mix": 2, "langevin": 3}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


def _meta_line(ens):
    alpha = "nan" if ens.alpha is None else repr(float(ens.alpha))
    return (
        f"# mhjump-ensemble kind={ens.kind} alpha={alpha} epsilon={float(ens.epsilon)!r} "
        f"seed={ens.seed} n_paths={ens.n_paths} n_grid={ens.obs_grid.size} d={ens.d_star}"
    )


def write_csv(ens, path):
    d = ens.d_star
    header = "path_id,t," + ",".join(f"x_{j + 1}" for j in range(d))
    lines = [_meta_line(ens), header]
    grid = ens.obs_grid
    for p in range(ens.n_paths):
        for k in range(grid.size):
            coords = ",".join(repr(float(v)) for v in ens.samples[p, k])
            lines.append(f"{p},{float(grid[k])!r},{coords}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    with open(path, "r", encoding="ascii") as fh:
        meta = fh.readline().strip()
        fh.readline()
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    if not meta.startswith("# mhjump-ensemble "):
        raise ConfigurationError(f"{path} is not an ensemble CSV")
    fields = dict(tok.split("=", 1) for tok in meta[2:].split()[1:])
    n_paths = int(fields["n_paths"])
    n_grid = int(fields["n_grid"])
    d = int(fields["d"])
    if body.shape != (n_paths * n_grid, 2 + d):
        raise ConfigurationError(f"{path}: body shape {body.shape} does not match metadata")
    alpha = float(fields["alpha"])
    return ObservedEnsemble(
        obs_grid=body[:n_grid, 1].copy(),
        samples=body[:, 2:].reshape(n_paths, n_grid, d),
        epsilon=float(fields["epsilon"]),
        kind=fields["kind"],
        seed=int(fields["seed"]),
        alpha=None if math.isnan(alpha) else alpha,
    )


def write_binary(ens, path):
    if ens.kind not in _KIND_CODES:
        raise ConfigurationError(f"unknown ensemble kind {ens.kind!r}")
    alpha = math.nan if ens.alpha is None else float(ens.alpha)
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        _KIND_CODES[ens.kind],
        0,
        ens.d_star,
        ens.n_paths,
        ens.obs_grid.size,
        float(ens.epsilon),
        alpha,
        int(ens.seed),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ens.obs_grid, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(ens.samples, dtype="<f8").tobytes())


def read_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:4] != _MAGIC:
        raise ConfigurationError(f"{path} is not an ensemble dump")
    magic, version, code, _, d, n_paths, n_grid, scale, alpha, seed = _HEADER.unpack_from(raw)
    if version != _VERSION:
        raise ConfigurationError(f"{path}: unsupported format version {version}")
    if code not in _CODE_KINDS:
        raise ConfigurationError(f"{path}: unknown kind code {code}")
    need = _HEADER.size + 8 * (n_grid + n_paths * n_grid * d)
    if len(raw) != need:
        raise ConfigurationError(f"{path}: expected {need} bytes, got {len(raw)}")
    grid = np.frombuffer(raw, dtype="<f8", count=n_grid, offset=_HEADER.size).astype(float)
    samples = np.frombuffer(
        raw, dtype="<f8", count=n_paths * n_grid * d, offset=_HEADER.size + 8 * n_grid
    ).astype(float).reshape(n_paths, n_grid, d)
    return ObservedEnsemble(
        obs_grid=grid,
        samples=samples,
        epsilon=scale,
        kind=_CODE_KINDS[code],
        seed=seed,
        alpha=None if math.isnan(alpha) else alpha,
    )
