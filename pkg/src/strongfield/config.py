"""
Run configuration: a flat `key = value` file with section headers.

Grammar (INI subset, parsed with configparser):

    [pulse]
    F0 = 0.075          # peak field (a.u.)
    omega = 0.05        # carrier frequency (a.u.)
    tau = 1005.0        # total duration (a.u.)
    phi = 0.0           # carrier-envelope phase (rad)
    cycles = 8          # optional; if present, tau must equal cycles*2pi/omega

    [grid]
    n = 800
    r_max = 600.0
    map_param = 0.4
    l_max = 60

    [propagation]
    dt = 0.05
    mask = off          # on | off: cos^(1/8) absorber over the outer 10%

    [analysis]
    k_min = 0.01
    k_max = 1.6
    k_step = 0.005
    smoothing = 5       # ring-detection moving-average window (grid points)
    map_step = 0.01     # momentum-map pixel size
    cut_k =             # optional: angular-cut momentum

    [ctmc]
    n_events = 1000000
    seed = 20260810
    k_select = 0.25     # near-threshold selection k <= k_select

    [outputs]
    directory = out
    formats = csv,ppm

No nesting; values round-trip losslessly (floats written with 17
significant digits).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

import numpy as np

from .pulse import LaserPulse

__all__ = ["RunConfig", "ConfigError", "parse_config", "write_config",
           "PRESETS", "preset_config"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class GridSection:
    n: int = 800
    r_max: float = 600.0
    map_param: float = 0.4
    l_max: int = 60


@dataclass
class PropagationSection:
    dt: float = 0.05
    mask: bool = False


@dataclass
class AnalysisSection:
    k_min: float = 0.01
    k_max: float = 1.6
    k_step: float = 0.005
    smoothing: int = 5
    map_step: float = 0.01
    cut_k: float | None = None


@dataclass
class CtmcSection:
    n_events: int = 1_000_000
    seed: int = 20260810
    k_select: float = 0.25


@dataclass
class OutputSection:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "ppm")


@dataclass
class RunConfig:
    F0: float = 0.075
    omega: float = 0.05
    tau: float = 1005.0
    phi: float = 0.0
    cycles: float | None = None
    grid: GridSection = field(default_factory=GridSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    ctmc: CtmcSection = field(default_factory=CtmcSection)
    outputs: OutputSection = field(default_factory=OutputSection)

    def pulse(self) -> LaserPulse:
        return LaserPulse(F0=self.F0, omega=self.omega, tau=self.tau,
                          phi=self.phi)

    def k_grid(self) -> np.ndarray:
        a = self.analysis
        n = int(round((a.k_max - a.k_min) / a.k_step))
        return a.k_min + a.k_step * np.arange(n + 1)

    def validate(self) -> None:
        if self.F0 <= 0 or self.omega <= 0 or self.tau <= 0:
            raise ConfigError("pulse F0, omega, tau must be positive")
        if self.cycles is not None:
            expect = self.cycles * 2.0 * np.pi / self.omega
            if abs(self.tau - expect) > 1e-9 * max(1.0, abs(self.tau)):
                raise ConfigError(
                    f"tau={self.tau} inconsistent with cycles={self.cycles} "
                    f"(expected {expect:.6f})"
                )
        g = self.grid
        if g.n < 16 or g.r_max <= 0 or g.map_param <= 0 or g.l_max < 1:
            raise ConfigError("invalid grid section")
        if self.propagation.dt <= 0:
            raise ConfigError("dt must be positive")
        a = self.analysis
        if not (0 < a.k_min < a.k_max) or a.k_step <= 0:
            raise ConfigError("invalid analysis momentum grid")
        if a.smoothing < 1 or a.map_step <= 0:
            raise ConfigError("invalid analysis section")
        if self.ctmc.n_events < 1 or self.ctmc.k_select <= 0:
            raise ConfigError("invalid ctmc section")
        for f in self.outputs.formats:
            if f not in ("csv", "ppm"):
                raise ConfigError(f"unknown output format '{f}'")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, tuple):
        return ",".join(v)
    return str(v)


def write_config(cfg: RunConfig, path=None) -> str:
    """Serialize; returns the text and optionally writes it to path."""
    cp = configparser.ConfigParser()
    cp["pulse"] = {"F0": _fmt(cfg.F0), "omega": _fmt(cfg.omega),
                   "tau": _fmt(cfg.tau), "phi": _fmt(cfg.phi)}
    if cfg.cycles is not None:
        cp["pulse"]["cycles"] = _fmt(cfg.cycles)
    for name in ("grid", "propagation", "analysis", "ctmc", "outputs"):
        section = getattr(cfg, name)
        cp[name] = {}
        for f in fields(section):
            v = getattr(section, f.name)
            if v is None:
                continue
            cp[name][f.name] = _fmt(v)
    buf = io.StringIO()
    cp.write(buf)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key).strip()
    if raw == "":
        return default
    try:
        if conv is bool:
            if raw.lower() in ("on", "true", "1", "yes"):
                return True
            if raw.lower() in ("off", "false", "0", "no"):
                return False
            raise ValueError(raw)
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse '{raw}'") from exc


def parse_config(text: str | None = None, path=None,
                 overrides: dict[str, str] | None = None) -> RunConfig:
    """
    Parse a config from text or a file; overrides is a mapping of
    "section.key" -> raw value applied on top (CLI flags).
    """
    cp = configparser.ConfigParser()
    if path is not None:
        read = cp.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
    elif text is not None:
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
    if overrides:
        for dotted, value in overrides.items():
            if "." not in dotted:
                raise ConfigError(
                    f"override '{dotted}' must look like section.key=value")
            sec, key = dotted.split(".", 1)
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, key, value)

    cfg = RunConfig()
    cfg.F0 = _get(cp, "pulse", "F0", float, cfg.F0)
    cfg.omega = _get(cp, "pulse", "omega", float, cfg.omega)
    cfg.tau = _get(cp, "pulse", "tau", float, cfg.tau)
    cfg.phi = _get(cp, "pulse", "phi", float, cfg.phi)
    cfg.cycles = _get(cp, "pulse", "cycles", float, None)
    g = cfg.grid
    g.n = _get(cp, "grid", "n", int, g.n)
    g.r_max = _get(cp, "grid", "r_max", float, g.r_max)
    g.map_param = _get(cp, "grid", "map_param", float, g.map_param)
    g.l_max = _get(cp, "grid", "l_max", int, g.l_max)
    p = cfg.propagation
    p.dt = _get(cp, "propagation", "dt", float, p.dt)
    p.mask = _get(cp, "propagation", "mask", bool, p.mask)
    a = cfg.analysis
    a.k_min = _get(cp, "analysis", "k_min", float, a.k_min)
    a.k_max = _get(cp, "analysis", "k_max", float, a.k_max)
    a.k_step = _get(cp, "analysis", "k_step", float, a.k_step)
    a.smoothing = _get(cp, "analysis", "smoothing", int, a.smoothing)
    a.map_step = _get(cp, "analysis", "map_step", float, a.map_step)
    a.cut_k = _get(cp, "analysis", "cut_k", float, None)
    c = cfg.ctmc
    c.n_events = _get(cp, "ctmc", "n_events", int, c.n_events)
    c.seed = _get(cp, "ctmc", "seed", int, c.seed)
    c.k_select = _get(cp, "ctmc", "k_select", float, c.k_select)
    o = cfg.outputs
    o.directory = _get(cp, "outputs", "directory", str, o.directory)
    fmts = _get(cp, "outputs", "formats", str, ",".join(o.formats))
    o.formats = tuple(s.strip() for s in fmts.split(",") if s.strip())
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# paper-figure presets
# ---------------------------------------------------------------------------

# all figures share omega = 0.05, tau = 1005, phi = 0
_F_WEAK, _F_MID, _F_STRONG = 0.0377, 0.0533, 0.075

PRESETS: dict[str, dict] = {
    "fig1a": {"F0": _F_WEAK, "actions": ("map",)},
    "fig1b": {"F0": _F_MID, "actions": ("map",)},
    "fig1c": {"F0": _F_STRONG, "actions": ("map",)},
    "fig2a": {"F0": _F_WEAK, "actions": ("cut",), "cut_k": 0.34},
    "fig2b": {"F0": _F_STRONG, "actions": ("cut",), "cut_k": 0.19},
    "fig3a": {"F0": _F_WEAK, "actions": ("rings",)},
    "fig3b": {"F0": _F_STRONG, "actions": ("rings",)},
    "fig4a": {"F0": _F_STRONG, "actions": ("ctmc",)},
}


def preset_config(name: str) -> tuple[RunConfig, tuple[str, ...]]:
    """RunConfig and pipeline actions for a paper-figure preset."""
    if name not in PRESETS:
        raise KeyError(name)
    spec = PRESETS[name]
    cfg = RunConfig()
    cfg.F0 = spec["F0"]
    cfg.omega = 0.05
    cfg.tau = 1005.0
    cfg.phi = 0.0
    if "cut_k" in spec:
        cfg.analysis.cut_k = spec["cut_k"]
    cfg.outputs.directory = name
    cfg.validate()
    return cfg, spec["actions"]
