"""
Command-line front end.

Subcommands:
    tdse run          propagate the configured pulse, write checkpoint +
                      diagnostics
    ctmc run          classical ensemble: per-record CSV, l histogram,
                      pericenter summary
    analyze           project a checkpoint and emit spectra/maps/cuts
    preset <name>     regenerate the data behind one paper figure
                      (fig1a fig1b fig1c fig2a fig2b fig3a fig3b fig4a)

Flags override config keys via repeated --set section.key=value.  Exit is
0 on success; on failure one line `strongfield-error: <category>: ...`
goes to stderr and the exit code encodes the category (config-error 2,
io-error 3, numerics-error 4, unknown-preset 5, internal 1).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, RunConfig, parse_config, \
    preset_config, write_config

__all__ = ["main"]


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise ConfigError("--threads must be >= 1")
    try:
        import numba
        numba.set_num_threads(n)
    except (ImportError, ValueError):
        pass
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=n)
    except ImportError:
        pass


def _parse_overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got '{item}'")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _load_config(args) -> RunConfig:
    overrides = _parse_overrides(getattr(args, "set", None))
    cfg = parse_config(path=getattr(args, "config", None),
                       overrides=overrides)
    if getattr(args, "out", None):
        cfg.outputs.directory = args.out
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.outputs.directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# pipeline pieces
# ---------------------------------------------------------------------------

def _run_tdse(cfg: RunConfig, out: Path, manifest):
    from .output import write_csv
    from .propagator import AtomBasis, ground_state, propagate, \
        save_checkpoint

    pulse = cfg.pulse()
    up, gamma, alpha = pulse.keldysh_parameters()
    manifest.record("gamma", gamma)
    manifest.record("ponderomotive_energy", up)
    manifest.record("quiver_amplitude", alpha)

    t0 = time.perf_counter()
    basis = AtomBasis.build(cfg.grid.n, cfg.grid.r_max, cfg.grid.map_param,
                            cfg.grid.l_max)
    manifest.time_block("basis", time.perf_counter() - t0)

    psi0 = ground_state(basis)
    t0 = time.perf_counter()
    result = propagate(psi0, basis, pulse, cfg.propagation.dt,
                       mask=cfg.propagation.mask, record_every=20)
    manifest.time_block("propagation", time.perf_counter() - t0)
    manifest.record("final_norm", result.psi.norm())
    manifest.record("max_wall_population", float(result.wall_fraction.max()))
    manifest.record("top_channel_max", result.top_channel_max)

    ckpt = out / "checkpoint.npz"
    save_checkpoint(result.psi, ckpt)
    manifest.add_output(ckpt)
    if "csv" in cfg.outputs.formats:
        diag = out / "diagnostics.csv"
        write_csv(diag, ["t", "norm", "z_mean", "wall_population"],
                  [result.times, result.norms, result.z_mean,
                   result.wall_fraction])
        manifest.add_output(diag)
    return basis, result


def _run_analysis(cfg: RunConfig, psi, basis, out: Path, manifest,
                  actions=("map", "rings")):
    from .analysis import angular_cut, detect_rings, momentum_map, project, \
        ring_partial_probability
    from .output import render_heatmap, write_amplitudes_csv, \
        write_angular_csv, write_map_csv, write_partial_wave_csv, \
        write_rings_csv

    t0 = time.perf_counter()
    amps = project(psi, basis, cfg.k_grid(), l_max=cfg.grid.l_max)
    manifest.time_block("projection", time.perf_counter() - t0)
    manifest.record("bound_population", amps.bound_population)
    manifest.record("continuum_probability", amps.continuum_probability())

    if "csv" in cfg.outputs.formats:
        path = out / "amplitudes.csv"
        write_amplitudes_csv(amps, path)
        manifest.add_output(path)

    if "map" in actions:
        mmap = momentum_map(amps, step=cfg.analysis.map_step)
        manifest.record("map_integral", mmap.integral())
        if "csv" in cfg.outputs.formats:
            path = out / "momentum_map.csv"
            write_map_csv(mmap, path)
            manifest.add_output(path)
        if "ppm" in cfg.outputs.formats:
            for scale in ("linear", "log"):
                path = out / f"momentum_map_{scale}.ppm"
                render_heatmap(mmap, scale, path)
                manifest.add_output(path)

    if "rings" in actions:
        rings = detect_rings(amps, smooth_window=cfg.analysis.smoothing)
        manifest.record("n_rings", len(rings))
        ring_pl = {}
        for ring in rings:
            pl = ring_partial_probability(amps, ring)
            ring_pl[ring.index] = pl
            manifest.record(f"ring{ring.index}_k_peak", ring.k_peak)
            manifest.record(f"ring{ring.index}_argmax_l",
                            int(np.argmax(pl)))
        if "csv" in cfg.outputs.formats and rings:
            path = out / "rings.csv"
            write_rings_csv(rings, path)
            manifest.add_output(path)
            path = out / "partial_waves.csv"
            write_partial_wave_csv(ring_pl, path)
            manifest.add_output(path)

    if "cut" in actions:
        if cfg.analysis.cut_k is None:
            raise ConfigError("analysis.cut_k required for an angular cut")
        cut = angular_cut(amps, cfg.analysis.cut_k)
        manifest.record("cut_k", cut.k)
        manifest.record("best_l0", cut.best_l0)
        if "csv" in cfg.outputs.formats:
            path = out / "angular_cut.csv"
            write_angular_csv(cut, path)
            manifest.add_output(path)
    return amps


def _run_ctmc(cfg: RunConfig, out: Path, manifest):
    from .ctmc import integrate_events, l_distribution, pericenter_check, \
        sample_events
    from .output import write_histogram_csv, write_kepler_axes_csv, \
        write_records_csv

    pulse = cfg.pulse()
    manifest.record("gamma", pulse.keldysh_gamma)
    manifest.record("quiver_amplitude", pulse.quiver_amplitude)
    t0 = time.perf_counter()
    events = sample_events(pulse, cfg.ctmc.n_events, cfg.ctmc.seed)
    records = integrate_events(events, pulse)
    manifest.time_block("trajectories", time.perf_counter() - t0)
    manifest.record("flagged_fraction", records.flagged_fraction)

    ls, hist = l_distribution(records, k_max=cfg.ctmc.k_select)
    peri = pericenter_check(records, pulse, k_max=cfg.ctmc.k_select)
    manifest.record("l_histogram_argmax",
                    int(ls[np.argmax(hist)]) if len(hist) else None)
    manifest.record("pericenter_median", peri.median_r_min)
    manifest.record("pericenter_ratio", peri.ratio)
    manifest.record("pericenter_status", peri.status)

    if "csv" in cfg.outputs.formats:
        path = out / "l_histogram.csv"
        write_histogram_csv(ls, hist, path)
        manifest.add_output(path)
        path = out / "records.csv"
        write_records_csv(records, path)
        manifest.add_output(path)
        path = out / "kepler_axes.csv"
        write_kepler_axes_csv(records, path)
        manifest.add_output(path)
    return records


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_tdse(args) -> int:
    from .output import Manifest

    cfg = _load_config(args)
    out = _out_dir(cfg)
    manifest = Manifest(write_config(cfg))
    basis, result = _run_tdse(cfg, out, manifest)
    manifest.write(out / "run_manifest.json")
    print(f"tdse run complete: norm={result.psi.norm():.9f} -> {out}")
    return 0


def _cmd_ctmc(args) -> int:
    from .output import Manifest

    cfg = _load_config(args)
    out = _out_dir(cfg)
    manifest = Manifest(write_config(cfg))
    _run_ctmc(cfg, out, manifest)
    manifest.write(out / "run_manifest.json")
    print(f"ctmc run complete -> {out}")
    return 0


def _cmd_analyze(args) -> int:
    from .output import Manifest
    from .propagator import AtomBasis, load_checkpoint

    cfg = _load_config(args)
    out = _out_dir(cfg)
    manifest = Manifest(write_config(cfg))
    psi = load_checkpoint(args.checkpoint)
    basis = AtomBasis.build(psi.grid.n, psi.grid.r_max, psi.grid.map_param,
                            psi.l_max)
    actions = ["map", "rings"]
    if cfg.analysis.cut_k is not None:
        actions.append("cut")
    _run_analysis(cfg, psi, basis, out, manifest, actions=tuple(actions))
    manifest.write(out / "run_manifest.json")
    print(f"analysis complete -> {out}")
    return 0


def _cmd_preset(args) -> int:
    from .output import Manifest

    name = args.name
    try:
        cfg, actions = preset_config(name)
    except KeyError:
        valid = " ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset '{name}'; valid names: {valid}")
    overrides = _parse_overrides(getattr(args, "set", None))
    if overrides:
        cfg = parse_config(text=write_config(cfg), overrides=overrides)
    if getattr(args, "out", None):
        cfg.outputs.directory = args.out
    out = _out_dir(cfg)
    manifest = Manifest(write_config(cfg))
    manifest.record("preset", name)

    if actions == ("ctmc",):
        _run_ctmc(cfg, out, manifest)
    else:
        basis, result = _run_tdse(cfg, out, manifest)
        _run_analysis(cfg, result.psi, basis, out, manifest,
                      actions=actions + ("rings",)
                      if "rings" not in actions else actions)
    manifest.write(out / "run_manifest.json")
    print(f"preset {name} complete -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strongfield",
        description="TDSE and CTMC-T photoelectron spectra for hydrogen in "
                    "few-cycle pulses",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for numba/BLAS")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="config file path")
    common.add_argument("--set", action="append", metavar="SEC.KEY=VAL",
                        help="override a config key")
    common.add_argument("--out", default=None, help="output directory")

    p_tdse = sub.add_parser("tdse", parents=[common],
                            help="time-dependent propagation")
    p_tdse.add_argument("action", choices=["run"])
    p_tdse.set_defaults(func=_cmd_tdse)

    p_ctmc = sub.add_parser("ctmc", parents=[common],
                            help="classical trajectory ensemble")
    p_ctmc.add_argument("action", choices=["run"])
    p_ctmc.set_defaults(func=_cmd_ctmc)

    p_an = sub.add_parser("analyze", parents=[common],
                          help="project a checkpoint and emit spectra")
    p_an.add_argument("--checkpoint", required=True)
    p_an.set_defaults(func=_cmd_analyze)

    p_pre = sub.add_parser("preset", parents=[common],
                           help="regenerate a paper figure's data")
    p_pre.add_argument("name")
    p_pre.set_defaults(func=_cmd_preset)
    return parser


_CATEGORIES = {
    "config-error": 2,
    "io-error": 3,
    "numerics-error": 4,
    "unknown-preset": 5,
    "internal": 1,
}


def _categorize(exc: BaseException) -> str:
    from .propagator import PropagationError

    if isinstance(exc, ConfigError):
        return "config-error"
    if isinstance(exc, KeyError) and "preset" in str(exc):
        return "unknown-preset"
    if isinstance(exc, (PropagationError, ArithmeticError, ValueError)):
        return "numerics-error"
    if isinstance(exc, OSError):
        return "io-error"
    return "internal"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _set_threads(args.threads)
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        category = _categorize(exc)
        msg = str(exc).strip("'\"")
        print(f"strongfield-error: {category}: {msg}", file=sys.stderr)
        return _CATEGORIES[category]


if __name__ == "__main__":
    sys.exit(main())
