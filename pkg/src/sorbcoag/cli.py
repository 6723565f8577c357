"""Config-driven entry points: run, stability, curve.

The configuration is a sectioned key = value text file with sections
[grid], [time], [rates], [kernel], [initial], [output].  Unknown sections
or keys are rejected, every run echoes its fully-resolved configuration
next to the outputs, and deterministic reruns are byte-identical.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 I/O failure.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import coagulation, stepper
from .diagnostics import column_profile, nullcline
from .errors import CflError, ConfigError, DomainError, NumericalError, SimulationError, ValidationError
from .mesh import GridSpec, TimeSpec, build_grid
from .rates import (
    BilinearRates,
    ConstantKernel,
    ConstantRates,
    KernelModel,
    LangmuirRates,
    RateModel,
    StabilityReport,
    stability_bounds,
)

logger = logging.getLogger(__name__)

_RATE_KINDS = ("constant", "bilinear", "langmuir")
_INITIAL_KINDS = ("log-gaussian", "table")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class GridSection:
    P: float
    J: int
    I: int


@dataclass(frozen=True)
class TimeSection:
    T: float
    dt: float | None = None        # None selects the CFL-gated automatic step
    safety: float = 0.95


@dataclass(frozen=True)
class RatesSection:
    kind: str = "bilinear"
    k0: float = 4.0
    l0: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0


@dataclass(frozen=True)
class KernelSection:
    kind: str = "constant"
    value: float = 1.0
    policy: str = "clamp"
    targets: str = "auto"


@dataclass(frozen=True)
class InitialSection:
    kind: str = "log-gaussian"
    u_in: float = 0.9
    target_mrp: float | None = 0.1
    floor: float | None = 1e-10   # relative floor zeroing negligible tails
    logp_mean: float = -2.0
    logp_sigma: float = 0.4
    r_mean: float = 0.2
    r_sigma: float = 0.05
    path: str | None = None


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    snapshots: tuple[float, ...] = ()
    deterministic: bool = True


@dataclass(frozen=True)
class SimConfig:
    grid: GridSection
    time: TimeSection
    rates: RatesSection
    kernel: KernelSection
    initial: InitialSection
    output: OutputSection


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_SCHEMA: dict[str, dict[str, str]] = {
    "grid": {"P": "positive real", "J": "integer >= 0", "I": "integer >= 0"},
    "time": {"T": "positive real", "dt": "positive real or 'auto'", "safety": "real in (0, 1]"},
    "rates": {
        "kind": "one of " + ", ".join(_RATE_KINDS),
        "k0": "real >= 0",
        "l0": "real >= 0",
        "alpha": "real > 0",
        "beta": "real > 0",
    },
    "kernel": {
        "kind": "'constant'",
        "value": "real >= 0",
        "policy": "'clamp' or 'drop'",
        "targets": "'auto', 'always' or 'never'",
    },
    "initial": {
        "kind": "one of " + ", ".join(_INITIAL_KINDS),
        "u_in": "real >= 0",
        "target_mrp": "positive real or 'none'",
        "floor": "relative floor in [0, 1) or 'none'",
        "logp_mean": "real",
        "logp_sigma": "positive real",
        "r_mean": "real in [0, 1]",
        "r_sigma": "positive real",
        "path": "readable snapshot file",
    },
    "output": {
        "directory": "path",
        "snapshots": "comma-separated times in [0, T]",
        "deterministic": "true or false",
    },
}

_REQUIRED: dict[str, tuple[str, ...]] = {
    "grid": ("P", "J", "I"),
    "time": ("T",),
    "rates": (),
    "kernel": (),
    "initial": ("u_in",),
    "output": (),
}


class _Section:
    """Typed accessors over one raw section with unknown-key tracking."""

    def __init__(self, name: str, raw: dict[str, str]):
        self.name = name
        self.raw = raw
        self.seen: set[str] = set()

    def _get(self, key: str):
        self.seen.add(key)
        return self.raw.get(key)

    def _domain(self, key: str) -> str:
        return _SCHEMA[self.name].get(key, "?")

    def _fail(self, key: str, value: str):
        raise ConfigError(f"[{self.name}] {key} = {value!r}: expected {self._domain(key)}")

    def str_choice(self, key: str, choices, default=None):
        v = self._get(key)
        if v is None:
            return default
        if v not in choices:
            self._fail(key, v)
        return v

    def real(self, key: str, default=None, minimum=None, maximum=None, strict_min=False, sentinel=None):
        v = self._get(key)
        if v is None:
            return default
        if sentinel is not None and v == sentinel:
            return None
        try:
            x = float(v)
        except ValueError:
            self._fail(key, v)
        if not math.isfinite(x):
            self._fail(key, v)
        if minimum is not None and (x < minimum or (strict_min and x == minimum)):
            self._fail(key, v)
        if maximum is not None and x > maximum:
            self._fail(key, v)
        return x

    def integer(self, key: str, default=None, minimum=None):
        v = self._get(key)
        if v is None:
            return default
        try:
            x = int(v)
        except ValueError:
            self._fail(key, v)
        if minimum is not None and x < minimum:
            self._fail(key, v)
        return x

    def boolean(self, key: str, default: bool) -> bool:
        v = self._get(key)
        if v is None:
            return default
        if v.lower() in ("true", "yes", "1", "on"):
            return True
        if v.lower() in ("false", "no", "0", "off"):
            return False
        self._fail(key, v)

    def string(self, key: str, default=None):
        v = self._get(key)
        return default if v is None else v

    def float_list(self, key: str) -> tuple[float, ...]:
        v = self._get(key)
        if v is None or v.strip() == "":
            return ()
        try:
            return tuple(float(tok) for tok in v.split(","))
        except ValueError:
            self._fail(key, v)

    def reject_unknown(self):
        extra = set(self.raw) - self.seen
        if extra:
            raise ConfigError(f"unknown key(s) in [{self.name}]: {', '.join(sorted(extra))}")


def parse_config(path: str) -> SimConfig:
    """Read, type-check and cross-validate a configuration file."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # keys are case-sensitive (P, J, I, T)
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    known = set(_SCHEMA)
    present = set(cp.sections())
    if present - known:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(present - known))}")
    for name, keys in _REQUIRED.items():
        if keys and name not in present:
            raise ConfigError(f"missing required section [{name}]")
        for key in keys:
            if not cp.has_option(name, key):
                raise ConfigError(f"missing key {key} in [{name}]: expected {_SCHEMA[name][key]}")

    def section(name: str) -> _Section:
        return _Section(name, dict(cp[name]) if cp.has_section(name) else {})

    g = section("grid")
    grid = GridSection(P=g.real("P", minimum=0.0, strict_min=True), J=g.integer("J", minimum=0), I=g.integer("I", minimum=0))
    g.reject_unknown()

    t = section("time")
    dt_raw = t.raw.get("dt")
    if dt_raw is not None and dt_raw.strip() == "auto":
        t.seen.add("dt")
        dt_val = None
    else:
        dt_val = t.real("dt", default=None, minimum=0.0, strict_min=True)
    time_sec = TimeSection(
        T=t.real("T", minimum=0.0, strict_min=True),
        dt=dt_val,
        safety=t.real("safety", default=0.95, minimum=0.0, maximum=1.0, strict_min=True),
    )
    t.reject_unknown()
    if time_sec.dt is not None and time_sec.dt > time_sec.T:
        raise ConfigError(f"[time] dt = {time_sec.dt} exceeds T = {time_sec.T}")

    r = section("rates")
    kind = r.str_choice("kind", _RATE_KINDS, default="bilinear")
    defaults = {"constant": (0.0, 0.0), "bilinear": (4.0, 1.0), "langmuir": (1.0, 1.0)}[kind]
    rates = RatesSection(
        kind=kind,
        k0=r.real("k0", default=defaults[0], minimum=0.0),
        l0=r.real("l0", default=defaults[1], minimum=0.0),
        alpha=r.real("alpha", default=1.0, minimum=0.0, strict_min=True),
        beta=r.real("beta", default=1.0, minimum=0.0, strict_min=True),
    )
    r.reject_unknown()

    k = section("kernel")
    kernel = KernelSection(
        kind=k.str_choice("kind", ("constant",), default="constant"),
        value=k.real("value", default=1.0, minimum=0.0),
        policy=k.str_choice("policy", (coagulation.CLAMP, coagulation.DROP), default=coagulation.CLAMP),
        targets=k.str_choice("targets", ("auto", "always", "never"), default="auto"),
    )
    k.reject_unknown()

    ini = section("initial")
    initial = InitialSection(
        kind=ini.str_choice("kind", _INITIAL_KINDS, default="log-gaussian"),
        u_in=ini.real("u_in", minimum=0.0),
        target_mrp=ini.real("target_mrp", default=0.1, minimum=0.0, strict_min=True, sentinel="none"),
        floor=ini.real("floor", default=1e-10, minimum=0.0, maximum=1.0, sentinel="none"),
        logp_mean=ini.real("logp_mean", default=-2.0),
        logp_sigma=ini.real("logp_sigma", default=0.4, minimum=0.0, strict_min=True),
        r_mean=ini.real("r_mean", default=0.2, minimum=0.0, maximum=1.0),
        r_sigma=ini.real("r_sigma", default=0.05, minimum=0.0, strict_min=True),
        path=ini.string("path"),
    )
    ini.reject_unknown()
    if initial.kind == "table" and initial.path is None:
        raise ConfigError("missing key path in [initial]: expected readable snapshot file")

    o = section("output")
    output = OutputSection(
        directory=o.string("directory", default="out"),
        snapshots=o.float_list("snapshots"),
        deterministic=o.boolean("deterministic", default=True),
    )
    o.reject_unknown()
    for ts in output.snapshots:
        if ts < 0.0 or ts > time_sec.T:
            raise ConfigError(f"[output] snapshot time {ts} outside [0, T = {time_sec.T}]")

    return SimConfig(grid=grid, time=time_sec, rates=rates, kernel=kernel, initial=initial, output=output)


def write_effective_config(cfg: SimConfig, path: str, resolved: dict | None = None) -> None:
    """Echo the configuration with every default materialized.

    The echo reparses to an identical SimConfig; resolved run parameters
    are appended as comments so they never perturb the round trip.
    """
    lines = ["# effective configuration (defaults materialized)"]
    lines += ["[grid]", f"P = {_fmt(cfg.grid.P)}", f"J = {cfg.grid.J}", f"I = {cfg.grid.I}", ""]
    dt_txt = "auto" if cfg.time.dt is None else _fmt(cfg.time.dt)
    lines += ["[time]", f"T = {_fmt(cfg.time.T)}", f"dt = {dt_txt}", f"safety = {_fmt(cfg.time.safety)}", ""]
    lines += [
        "[rates]",
        f"kind = {cfg.rates.kind}",
        f"k0 = {_fmt(cfg.rates.k0)}",
        f"l0 = {_fmt(cfg.rates.l0)}",
        f"alpha = {_fmt(cfg.rates.alpha)}",
        f"beta = {_fmt(cfg.rates.beta)}",
        "",
    ]
    lines += [
        "[kernel]",
        f"kind = {cfg.kernel.kind}",
        f"value = {_fmt(cfg.kernel.value)}",
        f"policy = {cfg.kernel.policy}",
        f"targets = {cfg.kernel.targets}",
        "",
    ]
    lines += ["[initial]", f"kind = {cfg.initial.kind}", f"u_in = {_fmt(cfg.initial.u_in)}"]
    lines.append("target_mrp = none" if cfg.initial.target_mrp is None else f"target_mrp = {_fmt(cfg.initial.target_mrp)}")
    lines.append("floor = none" if cfg.initial.floor is None else f"floor = {_fmt(cfg.initial.floor)}")
    lines += [
        f"logp_mean = {_fmt(cfg.initial.logp_mean)}",
        f"logp_sigma = {_fmt(cfg.initial.logp_sigma)}",
        f"r_mean = {_fmt(cfg.initial.r_mean)}",
        f"r_sigma = {_fmt(cfg.initial.r_sigma)}",
    ]
    if cfg.initial.path is not None:
        lines.append(f"path = {cfg.initial.path}")
    lines.append("")
    snaps = ", ".join(_fmt(x) for x in cfg.output.snapshots)
    lines += [
        "[output]",
        f"directory = {cfg.output.directory}",
        f"snapshots = {snaps}",
        f"deterministic = {'true' if cfg.output.deterministic else 'false'}",
        "",
    ]
    if resolved:
        lines.append("# resolved run parameters:")
        for key, val in resolved.items():
            lines.append(f"#   {key} = {val}")
        lines.append("")
    _write_text(path, "\n".join(lines))


# ---------------------------------------------------------------------------
# model wiring
# ---------------------------------------------------------------------------

def make_rate_model(cfg: SimConfig) -> RateModel:
    r = cfg.rates
    if r.kind == "constant":
        return ConstantRates(k0=r.k0, l0=r.l0, p_max=cfg.grid.P)
    if r.kind == "bilinear":
        return BilinearRates(k0=r.k0, l0=r.l0, p_max=cfg.grid.P)
    return LangmuirRates(k0=r.k0, alpha=r.alpha, l0=r.l0, beta=r.beta, p_max=cfg.grid.P)


def make_kernel(cfg: SimConfig) -> KernelModel:
    return ConstantKernel(value=cfg.kernel.value)


def log_gaussian_density(cfg: SimConfig):
    """Bump in (log p, r): exp of minus the two squared deviations."""
    ini = cfg.initial

    def f_in(p, r):
        zp = (np.log(p) - ini.logp_mean) / ini.logp_sigma
        zr = (np.asarray(r) - ini.r_mean) / ini.r_sigma
        return np.exp(-0.5 * zp**2 - 0.5 * zr**2)

    return f_in


def make_initial(cfg: SimConfig, grid: GridSpec) -> tuple[np.ndarray, float, float]:
    """Initial cell averages, u_in, and the normalization factor applied."""
    if cfg.initial.kind == "log-gaussian":
        f0 = stepper.discretize_initial(log_gaussian_density(cfg), grid)
    else:
        _, J, I, dp, dr, f0 = read_snapshot(cfg.initial.path)
        if (J, I) != (grid.J, grid.I):
            raise ConfigError(f"initial table grid {J}x{I} does not match configured {grid.J}x{grid.I}")
        if not (math.isclose(dp, grid.dp, rel_tol=1e-12) and math.isclose(dr, grid.dr, rel_tol=1e-12)):
            raise ConfigError("initial table cell sizes do not match the configured grid")
        f0 = stepper.validate_field(f0, grid)
    if cfg.initial.floor is not None:
        f0 = stepper.floor_field(f0, cfg.initial.floor)
    scale = 1.0
    if cfg.initial.target_mrp is not None:
        f0, scale = stepper.normalize_to_target(f0, grid, cfg.initial.target_mrp)
    return f0, cfg.initial.u_in, scale


def resolve_time(cfg: SimConfig, report: StabilityReport) -> TimeSpec:
    """Fix dt: the configured value (gated strictly) or safety * dt_max."""
    T = cfg.time.T
    if cfg.time.dt is not None:
        ts = TimeSpec.from_dt(T, cfg.time.dt)
        if not (ts.dt < report.dt_max_transport and ts.dt < report.dt_max_coag):
            raise ConfigError(
                f"dt = {_fmt(ts.dt)} fails the stability gate: "
                f"dt_max_transport = {_fmt(report.dt_max_transport)}, "
                f"dt_max_coag = {_fmt(report.dt_max_coag)}"
            )
        return ts
    dt = min(cfg.time.safety * report.dt_max, 0.9 * report.dt_max_column)
    if math.isinf(dt):
        return TimeSpec(T=T, N=1)
    return TimeSpec(T=T, N=max(1, math.ceil(T / dt)))


def snapshot_steps_for(cfg: SimConfig, time: TimeSpec, stride: int | None) -> tuple[int, ...]:
    """Map requested snapshot times to steps (nearest), or apply a stride."""
    if stride is not None:
        if stride <= 0:
            raise ConfigError(f"snapshot stride must be positive, got {stride}")
        return tuple(range(0, time.N + 1, stride))
    steps = []
    for ts in cfg.output.snapshots:
        n = round(ts / time.dt) if time.N > 0 else 0
        n = min(max(n, 0), time.N)
        if not math.isclose(n * time.dt, ts, rel_tol=1e-9, abs_tol=1e-12):
            logger.info("snapshot time %g rounded to step %d (t = %g)", ts, n, n * time.dt)
        steps.append(n)
    return tuple(sorted(set(steps)))


# ---------------------------------------------------------------------------
# writers (17 significant digits, flushed and fsynced)
# ---------------------------------------------------------------------------

def _write_text(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())


def write_snapshot(path: str, t: float, grid: GridSpec, f: np.ndarray) -> None:
    lines = [
        f"# t = {_fmt(t)}",
        f"# J = {grid.J}, I = {grid.I}, dp = {_fmt(grid.dp)}, dr = {_fmt(grid.dr)}",
    ]
    pc, rc = grid.p_centers, grid.r_centers
    for j in range(grid.J + 1):
        for i in range(grid.I + 1):
            lines.append(f"{j} {i} {_fmt(pc[j])} {_fmt(rc[i])} {_fmt(f[j, i])}")
    _write_text(path, "\n".join(lines) + "\n")


def read_snapshot(path: str) -> tuple[float, int, int, float, float, np.ndarray]:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read snapshot file {path!r}: {exc}") from exc
    try:
        t = float(lines[0].split("=", 1)[1])
        meta = dict(tok.strip().split(" = ") for tok in lines[1].lstrip("# ").split(", "))
        J, I = int(meta["J"]), int(meta["I"])
        dp, dr = float(meta["dp"]), float(meta["dr"])
        f = np.zeros((J + 1, I + 1))
        for line in lines[2:]:
            if not line.strip():
                continue
            j_s, i_s, _, _, val = line.split()
            f[int(j_s), int(i_s)] = float(val)
    except (IndexError, KeyError, ValueError) as exc:
        raise ConfigError(f"malformed snapshot file {path!r}: {exc}") from exc
    return t, J, I, dp, dr, f


def write_series(path: str, records) -> None:
    lines = ["# n t u M0 M1 Mrp rho drift clamp_count"]
    for rec in records:
        lines.append(
            f"{rec.n} {_fmt(rec.t)} {_fmt(rec.u)} {_fmt(rec.m0)} {_fmt(rec.m1)} "
            f"{_fmt(rec.mrp)} {_fmt(rec.rho)} {_fmt(rec.drift)} {rec.clamp_count}"
        )
    _write_text(path, "\n".join(lines) + "\n")


def write_profile(path: str, grid: GridSpec, profile) -> None:
    lines = ["# j p_center mass rbar rstd r_null"]
    for j in range(grid.J + 1):
        lines.append(
            f"{j} {_fmt(grid.p_centers[j])} {_fmt(profile.mass[j])} "
            f"{_fmt(profile.rbar[j])} {_fmt(profile.rstd[j])} {_fmt(profile.r_null[j])}"
        )
    _write_text(path, "\n".join(lines) + "\n")


def write_curve(path: str, grid: GridSpec, r_null: np.ndarray, u: float) -> None:
    lines = [f"# u = {_fmt(u)}", "# p_center r_null"]
    for j in range(grid.J + 1):
        lines.append(f"{_fmt(grid.p_centers[j])} {_fmt(r_null[j])}")
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _prepare(cfg: SimConfig):
    grid = build_grid(cfg.grid.P, cfg.grid.J, cfg.grid.I)
    model = make_rate_model(cfg)
    kernel = make_kernel(cfg)
    f0, u0, scale = make_initial(cfg, grid)
    return grid, model, kernel, f0, u0, scale


def cmd_run(cfg: SimConfig, out_dir: str, stride: int | None = None) -> int:
    grid, model, kernel, f0, u0, _scale = _prepare(cfg)
    probe = stability_bounds(model, kernel, f0, u0, TimeSpec(T=cfg.time.T, N=1), grid)
    time = resolve_time(cfg, probe)
    report = stability_bounds(model, kernel, f0, u0, time, grid)
    precompute = {"auto": "auto", "always": True, "never": False}[cfg.kernel.targets]
    tables = coagulation.build_coag_tables(kernel, grid, cfg.kernel.policy, precompute=precompute)
    snap_steps = snapshot_steps_for(cfg, time, stride)

    os.makedirs(out_dir, exist_ok=True)
    write_effective_config(
        cfg,
        os.path.join(out_dir, "effective_config.cfg"),
        resolved={
            "dt": _fmt(time.dt),
            "N": time.N,
            "dt_max_transport": _fmt(report.dt_max_transport),
            "dt_max_coag": _fmt(report.dt_max_coag),
            "snapshot_steps": ",".join(str(s) for s in snap_steps),
        },
    )
    logger.info("running %d steps of dt = %g on a %dx%d grid", time.N, time.dt, grid.J + 1, grid.I + 1)
    result = stepper.run(model, tables, grid, time, f0, u0, snapshot_steps=snap_steps, report=report)

    write_series(os.path.join(out_dir, "series.txt"), result.series)
    for n, snap in sorted(result.snapshots.items()):
        write_snapshot(os.path.join(out_dir, f"snapshot_{n:08d}.txt"), n * time.dt, grid, snap)
    r_null = nullcline(model, result.final.u, grid)
    write_profile(os.path.join(out_dir, "profile.txt"), grid, column_profile(result.final.f, grid, r_null))
    logger.info("final state: t = %g, u = %g", result.final.t, result.final.u)
    return 0


def cmd_stability(cfg: SimConfig) -> int:
    grid, model, kernel, f0, u0, _scale = _prepare(cfg)
    probe = stability_bounds(model, kernel, f0, u0, TimeSpec(T=cfg.time.T, N=1), grid)
    if cfg.time.dt is not None:
        time = TimeSpec.from_dt(cfg.time.T, cfg.time.dt)
    else:
        dt_auto = min(cfg.time.safety * probe.dt_max, 0.9 * probe.dt_max_column)
        time = TimeSpec(T=cfg.time.T, N=1) if math.isinf(dt_auto) else TimeSpec(
            T=cfg.time.T, N=max(1, math.ceil(cfg.time.T / dt_auto))
        )
    rep = stability_bounds(model, kernel, f0, u0, time, grid)
    print(f"M_in              = {_fmt(rep.m_in)}")
    print(f"rho0              = {_fmt(rep.rho0)}")
    print(f"U_T (growth)      = {_fmt(rep.u_growth_bound)}")
    print(f"u_bound (gate)    = {_fmt(rep.u_bound)}")
    print(f"V_sup             = {_fmt(rep.v_sup)}")
    print(f"dt_max_transport  = {_fmt(rep.dt_max_transport)}")
    print(f"dt_max_coag       = {_fmt(rep.dt_max_coag)}")
    print(f"dt_max            = {_fmt(rep.dt_max)}")
    print(f"dt_max_column     = {_fmt(rep.dt_max_column)}")
    origin = "configured" if cfg.time.dt is not None else "auto"
    print(f"dt ({origin})   = {_fmt(rep.dt)}")
    print(f"transport margin  = {_fmt(rep.dt / rep.dt_max_transport) if math.isfinite(rep.dt_max_transport) else '0'}  (must be < 1)")
    print(f"coagulation margin = {_fmt(rep.dt / rep.dt_max_coag) if math.isfinite(rep.dt_max_coag) else '0'}  (must be < 1)")
    print(f"verdict           = {'OK' if rep.cfl_ok else 'VIOLATED'}")
    return 0


def cmd_curve(cfg: SimConfig, u: float, out_dir: str) -> int:
    if u < 0.0:
        raise ConfigError(f"curve evaluation needs u >= 0, got {u}")
    grid = build_grid(cfg.grid.P, cfg.grid.J, cfg.grid.I)
    model = make_rate_model(cfg)
    r_null = nullcline(model, u, grid)
    os.makedirs(out_dir, exist_ok=True)
    write_curve(os.path.join(out_dir, "curve.txt"), grid, r_null, u)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sorbcoag", description="Finite-volume polymer/ion sorption-coagulation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured simulation")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
    p_run.add_argument("--deterministic", action="store_true", help="force deterministic evaluation order")
    p_run.add_argument("--snapshot-stride", type=int, default=None, help="snapshot every Nth step instead of listed times")

    p_st = sub.add_parser("stability", help="print the stability report for a config")
    p_st.add_argument("--config", required=True)

    p_cv = sub.add_parser("curve", help="write the sorption-equilibrium curve r(p) at a given u")
    p_cv.add_argument("--config", required=True)
    p_cv.add_argument("--u", type=float, required=True)
    p_cv.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.command == "run":
            out = args.out if args.out is not None else cfg.output.directory
            return cmd_run(cfg, out, stride=args.snapshot_stride)
        if args.command == "stability":
            return cmd_stability(cfg)
        out = args.out if args.out is not None else cfg.output.directory
        return cmd_curve(cfg, args.u, out)
    except (ConfigError, DomainError, ValidationError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except (CflError, NumericalError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
