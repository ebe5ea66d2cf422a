"""
File emission: CSV tables, binary PPM heatmaps, and the run manifest.

CSVs carry a header row, '.' decimal separator, and 17 significant digits
so every float round-trips exactly.  Heatmaps are binary P6 portable
pixmaps, row-major with k_z horizontal and k_rho vertical (largest k_rho
at the top row); the colormap is the fixed anchor table below, linearly
interpolated, with log scaling clamped at 1e-6 of the maximum.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .analysis import AngularCut, MomentumMap, PartialWaveAmplitudes, RingSpec
from .ctmc import TrajectoryEnsemble

__all__ = [
    "write_csv",
    "write_amplitudes_csv",
    "write_map_csv",
    "write_angular_csv",
    "write_rings_csv",
    "write_partial_wave_csv",
    "write_records_csv",
    "write_histogram_csv",
    "write_kepler_axes_csv",
    "render_heatmap",
    "Manifest",
]

_FMT = "{:.17g}"

# black -> violet -> crimson -> orange -> pale yellow anchors (position, RGB)
_COLORMAP = (
    (0.00, (0, 0, 4)),
    (0.17, (40, 11, 84)),
    (0.34, (101, 21, 110)),
    (0.51, (159, 42, 99)),
    (0.68, (212, 72, 66)),
    (0.85, (245, 125, 21)),
    (1.00, (252, 255, 164)),
)


def write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    """Column-oriented CSV writer with full round-trip precision."""
    rows = len(columns[0])
    cols = []
    fmts = []
    for c in columns:
        c = np.asarray(c)
        if len(c) != rows:
            raise ValueError("CSV columns must share length")
        if np.issubdtype(c.dtype, np.integer):
            fmts.append("%d")
        else:
            fmts.append("%.17g")
        cols.append(c.astype(float))
    table = np.column_stack(cols) if cols else np.empty((0, 0))
    np.savetxt(path, table, fmt=fmts, delimiter=",",
               header=",".join(header), comments="")


def write_amplitudes_csv(amps: PartialWaveAmplitudes, path) -> None:
    """(k, l, Re a, Im a), one row per (k, l)."""
    nk = len(amps.k)
    L1 = amps.l_max + 1
    kcol = np.repeat(amps.k, L1)
    lcol = np.tile(np.arange(L1), nk)
    a = amps.a.T.reshape(-1)
    write_csv(path, ["k", "l", "re_a", "im_a"],
              [kcol, lcol, a.real, a.imag])


def write_map_csv(mmap: MomentumMap, path) -> None:
    """(k_z, k_rho, density), row-major over the mesh."""
    KZ, KR = np.meshgrid(mmap.k_z, mmap.k_rho)
    write_csv(path, ["k_z", "k_rho", "density"],
              [KZ.ravel(), KR.ravel(), mmap.density.ravel()])


def write_angular_csv(cut: AngularCut, path) -> None:
    """(cos_theta, density, fit)."""
    write_csv(path, ["cos_theta", "density", "fit"],
              [cut.cos_theta, cut.density, cut.fit])


def write_rings_csv(rings: list[RingSpec], path) -> None:
    write_csv(path, ["index", "k_lo", "k_peak", "k_hi", "energy"],
              [np.array([r.index for r in rings]),
               np.array([r.k_lo for r in rings]),
               np.array([r.k_peak for r in rings]),
               np.array([r.k_hi for r in rings]),
               np.array([r.energy for r in rings])])


def write_partial_wave_csv(ring_pl: dict[int, np.ndarray], path) -> None:
    """(ring, l, p_l) stacked over rings."""
    rows_ring, rows_l, rows_p = [], [], []
    for idx in sorted(ring_pl):
        pl = ring_pl[idx]
        rows_ring.append(np.full(len(pl), idx))
        rows_l.append(np.arange(len(pl)))
        rows_p.append(pl)
    write_csv(path, ["ring", "l", "p_l"],
              [np.concatenate(rows_ring), np.concatenate(rows_l),
               np.concatenate(rows_p)])


def write_records_csv(records: TrajectoryEnsemble, path,
                      max_rows: int | None = None) -> None:
    """(t_i, z_exit, v_perp, E, L, k_z, k_rho, r_min, flag) per trajectory."""
    n = len(records) if max_rows is None else min(len(records), max_rows)
    sl = slice(0, n)
    write_csv(path,
              ["t_i", "z_exit", "v_perp", "E", "L", "k_z", "k_rho",
               "r_min", "flag"],
              [records.events.t_release[sl], records.events.z_exit[sl],
               records.events.v_perp[sl], records.energy[sl],
               records.angular_momentum[sl], records.k_z[sl],
               records.k_rho[sl], records.r_min[sl],
               records.flags[sl].astype(int)])


def write_histogram_csv(l_values: np.ndarray, weights: np.ndarray,
                        path) -> None:
    write_csv(path, ["l", "weight"], [l_values.astype(int), weights])


def write_kepler_axes_csv(records: TrajectoryEnsemble, path,
                          max_rows: int | None = None) -> None:
    """
    Raw (major-axis angle, asymptote opening angle) scatter data of the
    open orbits, enabling interference-family analysis downstream.
    """
    sel = np.nonzero(records.good() & (records.energy > 0))[0]
    if max_rows is not None:
        sel = sel[:max_rows]
    write_csv(path, ["theta_major", "nu_inf", "E", "L"],
              [records.theta_major[sel], records.nu_inf[sel],
               records.energy[sel], records.angular_momentum[sel]])


# ---------------------------------------------------------------------------
# heatmaps
# ---------------------------------------------------------------------------

def _colormap(v: np.ndarray) -> np.ndarray:
    """v in [0,1] -> uint8 RGB via the anchor table."""
    pos = np.array([p for p, _ in _COLORMAP])
    rgb = np.array([c for _, c in _COLORMAP], dtype=float)
    out = np.empty(v.shape + (3,), dtype=np.uint8)
    for ch in range(3):
        out[..., ch] = np.clip(np.interp(v, pos, rgb[:, ch]), 0, 255) \
            .astype(np.uint8)
    return out


def render_heatmap(mmap: MomentumMap, scale: str, path) -> None:
    """
    Write a binary PPM (P6) of the density.  scale is "linear" or "log";
    log clamps at 1e-6 of the maximum.  k_z runs horizontally, k_rho
    vertically with the largest k_rho at the top.
    """
    if scale not in ("linear", "log"):
        raise ValueError("scale must be 'linear' or 'log'")
    dens = np.asarray(mmap.density, dtype=float)
    if dens.size == 0:
        raise ValueError("empty momentum map")
    vmax = float(dens.max())
    if vmax <= 0:
        v = np.zeros_like(dens)
    elif scale == "linear":
        v = dens / vmax
    else:
        floor = 1e-6 * vmax
        v = (np.log10(np.clip(dens, floor, vmax)) - np.log10(floor)) / 6.0
    img = _colormap(v[::-1, :])  # top row = largest k_rho
    h, w = img.shape[:2]
    try:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            fh.write(img.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write heatmap {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# run manifest
# ---------------------------------------------------------------------------

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Collects config, versions, results, timings, and output hashes."""

    def __init__(self, config_text: str):
        import numpy
        import scipy

        from . import __version__

        self.data = {
            "package": {"name": "strongfield", "version": __version__},
            "versions": {"numpy": numpy.__version__,
                         "scipy": scipy.__version__},
            "config": config_text,
            "results": {},
            "timings": {},
            "outputs": [],
        }
        self._t0 = time.perf_counter()

    def record(self, key: str, value) -> None:
        self.data["results"][key] = value

    def time_block(self, key: str, seconds: float) -> None:
        self.data["timings"][key] = seconds

    def add_output(self, path) -> None:
        self.data["outputs"].append({
            "path": str(Path(path).name),
            "sha256": _sha256(path),
        })

    def write(self, path) -> None:
        self.data["timings"]["total"] = time.perf_counter() - self._t0
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
