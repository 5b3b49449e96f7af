"""Case, sweep and convergence orchestration with CSV and checkpoint output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .benchmarks import (
    TaylorVortexSpec,
    cell_velocity,
    fit_decay_viscosity,
    relative_l2_error,
    t_half,
    taylor_analytic,
)
from .checkpoint import checkpoint_read, checkpoint_write
from .grid import DistributionField, UniformPeriodicGrid
from .kinetics import MacroState, NonPhysicalFieldError, RelaxationModel, equilibrium, init_ce
from .scheme import Reconstruction, SchemeConfig, step
from .velocity_set import build_d1q3, build_d2q9, moments

SUMMARY_VERSION = "dugks-summary v1"
PROFILE_VERSION = "dugks-profile v1"
DECAY_VERSION = "dugks-decay v1"
SUMMARY_COLUMNS = (
    "scheme", "epsilon", "n", "delta_x", "delta_t",
    "l2_error", "nu_fit", "nu_expected", "wall_time", "status",
)
BENCHMARKS = ("taylor", "advection1d")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class SolverDivergenceError(FloatingPointError):
    """The solution left the physical range during a run."""


class OutputError(OSError):
    """Failure to write or read a harness output file."""


@dataclass(frozen=True)
class BenchmarkConfig:
    name: str = "taylor"
    u0: float = 0.01
    rt0: float = 0.5
    tau: float = 1.0
    amplitude: float = 0.1  # density wave amplitude, advection1d only

    def __post_init__(self):
        if self.name not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {self.name!r}; expected one of {BENCHMARKS}")
        for key in ("u0", "rt0", "tau"):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"benchmark.{key} must be a positive number, got {value!r}")
        if not 0 <= self.amplitude < 1:
            raise ConfigError(f"benchmark.amplitude must lie in [0, 1), got {self.amplitude}")


@dataclass(frozen=True)
class RunConfig:
    """One case. Exactly one of ``n`` and ``beta`` sets the mesh.

    ``beta`` derives ``n = round(epsilon ** -beta)`` cells per axis.
    ``end_time`` and the sampling interval are in units of the benchmark's
    reference time (the half-decay time for the vortex, one crossing at
    speed ``c`` for 1-D advection). ``checkpoint_every`` counts steps;
    0 disables checkpoints.
    """

    scheme: str = "dugks"
    epsilon: float = 1.6e-3
    n: int | None = None
    beta: float | None = None
    eta: float = 0.5
    benchmark: BenchmarkConfig = dc_field(default_factory=BenchmarkConfig)
    end_time: float = 1.0
    samples_per_tc: int = 20
    checkpoint_every: int = 0
    out: str = "out"
    case_id: str | None = None
    plot: bool = False
    backend: str = "numba"
    time_derivatives: str = "euler"

    def __post_init__(self):
        try:
            Reconstruction.parse(self.scheme)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be a positive number, got {self.epsilon!r}")
        if (self.n is None) == (self.beta is None):
            raise ConfigError("give exactly one of mesh size n and scaling exponent beta")
        if self.n is not None and (int(self.n) != self.n or self.n < 4):
            raise ConfigError(f"mesh size must be an integer >= 4, got {self.n!r}")
        if self.beta is not None:
            if not (isinstance(self.beta, (int, float)) and self.beta > 0):
                raise ConfigError(f"beta must be positive, got {self.beta!r}")
            if self.mesh < 4:
                raise ConfigError(f"beta={self.beta} gives n={self.mesh} < 4 cells")
        if not (isinstance(self.eta, (int, float)) and 0 < self.eta < 1):
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta!r}")
        if not self.end_time > 0:
            raise ConfigError(f"end_time must be positive, got {self.end_time}")
        if int(self.samples_per_tc) != self.samples_per_tc or self.samples_per_tc < 1:
            raise ConfigError(f"samples_per_tc must be a positive integer, got {self.samples_per_tc}")
        if int(self.checkpoint_every) != self.checkpoint_every or self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be a non-negative integer, got {self.checkpoint_every}")
        if self.backend not in ("numba", "numpy"):
            raise ConfigError(f"backend must be numba or numpy, got {self.backend!r}")
        if self.time_derivatives not in ("euler", "analytic"):
            raise ConfigError(f"time_derivatives must be euler or analytic, got {self.time_derivatives!r}")
        if not isinstance(self.benchmark, BenchmarkConfig):
            raise ConfigError("benchmark must be a BenchmarkConfig")

    @property
    def mesh(self) -> int:
        if self.n is not None:
            return int(self.n)
        return int(round(self.epsilon ** (-self.beta)))

    @property
    def reconstruction(self) -> Reconstruction:
        return Reconstruction.parse(self.scheme)

    @property
    def ident(self) -> str:
        if self.case_id:
            return self.case_id
        return f"{self.reconstruction.value}_eps{self.epsilon:g}_n{self.mesh}"

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class CaseReport:
    case_id: str
    scheme: str
    epsilon: float
    n: int
    dx: float
    dt: float
    steps: int
    l2_error: float
    nu_fit: float
    nu_expected: float
    mass_drift: float
    momentum_drift: float
    wall_time: float
    status: str = "ok"

    @property
    def delta_x(self) -> float:
        return self.dx / self.epsilon

    @property
    def delta_t(self) -> float:
        return self.dt / self.epsilon

    @property
    def conserved(self) -> bool:
        return self.mass_drift <= 1e-12 and self.momentum_drift <= 1e-12

    @property
    def ok(self) -> bool:
        return self.status == "ok"


# -- benchmark adapters -----------------------------------------------------


class _Taylor:
    def __init__(self, cfg: RunConfig):
        bench = cfg.benchmark
        self.spec = TaylorVortexSpec.for_epsilon(cfg.epsilon, bench.tau, u0=bench.u0, rt0=bench.rt0)
        self.vset = build_d2q9(bench.rt0)
        self.grid = UniformPeriodicGrid(2, cfg.mesh)
        self.t_ref = t_half(self.spec)
        self.nu_expected = self.spec.nu

    def initialize(self, fld, model, cfg):
        init_ce(fld, self.spec, model, cfg.time_derivatives)

    def error(self, fld, t):
        return relative_l2_error(fld, self.spec, t)

    def fit(self, times, samples):
        return fit_decay_viscosity(times, samples, self.spec.alpha)

    def profiles(self, fld, t):
        n = self.grid.n
        x = self.grid.coords()
        mid = n // 2
        u = cell_velocity(fld)
        ref, _ = taylor_analytic(self.spec, *np.moveaxis(self.grid.centers(), -1, 0), t)
        return [
            (f"u_x along the vertical line x = {x[mid]:.17g}", x, u[mid, :, 0], ref[mid, :, 0]),
            (f"u_y along the horizontal line y = {x[mid]:.17g}", x, u[:, mid, 1], ref[:, mid, 1]),
        ]


class _Advection1D:
    """Free transport of an equilibrium density wave on D1Q3.

    Without collisions every population moves rigidly, so the reference
    is ``f_k(x - xi_k t, 0)``. The reference time is one crossing ``1/c``.
    """

    def __init__(self, cfg: RunConfig):
        bench = cfg.benchmark
        self.bench = bench
        self.vset = build_d1q3(bench.rt0)
        self.grid = UniformPeriodicGrid(1, cfg.mesh)
        self.t_ref = 1.0 / self.vset.c
        self.nu_expected = cfg.epsilon * bench.tau * bench.rt0

    def _initial(self, x):
        s = np.sin(2 * np.pi * x)
        state = MacroState(1.0 + self.bench.amplitude * s, (self.bench.u0 * s)[..., None])
        return equilibrium(self.vset, state)

    def exact(self, t):
        x = self.grid.coords()
        xi = self.vset.velocities[:, 0]
        out = np.empty((x.size, self.vset.q))
        for k in range(self.vset.q):
            out[:, k] = self._initial(x - xi[k] * t)[:, k]
        return out

    def initialize(self, fld, model, cfg):
        fld.values[...] = self._initial(self.grid.coords())

    def error(self, fld, t):
        rho_num = fld.values.sum(axis=-1)
        rho_ref = self.exact(t).sum(axis=-1) - 1.0
        return float(np.linalg.norm(rho_num - 1.0 - rho_ref) / np.linalg.norm(rho_ref))

    def fit(self, times, samples):
        return float("nan")

    def profiles(self, fld, t):
        x = self.grid.coords()
        return [("density along x", x, fld.values.sum(axis=-1), self.exact(t).sum(axis=-1))]


def _benchmark(cfg: RunConfig):
    if cfg.benchmark.name == "taylor":
        return _Taylor(cfg)
    return _Advection1D(cfg)


# -- output helpers -----------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text)
        tmp.replace(path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_decay_csv(path, times, samples):
    buf = io.StringIO()
    buf.write(f"# {DECAY_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "max_u"])
    for t, s in zip(times, samples):
        w.writerow([_fmt(t), _fmt(s)])
    _atomic_write(Path(path), buf.getvalue())


def read_decay_csv(path):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not lines or lines[0] != f"# {DECAY_VERSION}":
        raise OutputError(f"{path}: missing '{DECAY_VERSION}' header")
    rows = list(csv.reader(lines[2:]))
    return [float(r[0]) for r in rows], [float(r[1]) for r in rows]


def write_profile_csv(path, blocks):
    """Gnuplot-ready blocks separated by two blank lines (``index`` selects one)."""
    buf = io.StringIO()
    buf.write(f"# {PROFILE_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    for i, (title, coord, num, ref) in enumerate(blocks):
        if i:
            buf.write("\n\n")
        buf.write(f"# {title}\n")
        w.writerow(["coordinate", "u_numeric", "u_analytic"])
        for row in zip(coord, num, ref):
            w.writerow([_fmt(v) for v in row])
    _atomic_write(Path(path), buf.getvalue())


def write_profile_svg(path, blocks):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "dugks"
    fig, axes = plt.subplots(1, len(blocks), figsize=(5 * len(blocks), 4), squeeze=False)
    for ax, (title, coord, num, ref) in zip(axes[0], blocks):
        ax.plot(coord, ref, "-", color="black", label="analytic")
        ax.plot(coord, num, "o", markersize=3, label="numeric")
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("coordinate")
        ax.legend(fontsize=8)
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)


def write_summary_csv(path, reports):
    buf = io.StringIO()
    buf.write(f"# {SUMMARY_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in reports:
        w.writerow([
            r.scheme, _fmt(r.epsilon), r.n, _fmt(r.delta_x), _fmt(r.delta_t),
            _fmt(r.l2_error), _fmt(r.nu_fit), _fmt(r.nu_expected),
            f"{r.wall_time:.3f}", r.status,
        ])
    _atomic_write(Path(path), buf.getvalue())


# -- single case --------------------------------------------------------------


def _paths(cfg: RunConfig):
    out = Path(cfg.out)
    ident = cfg.ident
    return {
        "profile": out / f"profile_{ident}.csv",
        "svg": out / f"profile_{ident}.svg",
        "decay": out / f"decay_{ident}.csv",
        "checkpoint": out / f"checkpoint_{ident}.bin",
        "state": out / f"state_{ident}.json",
    }


def _totals(fld):
    rho, mom = moments(fld.vset, fld.values)
    return float(rho.sum()), mom.reshape(-1, fld.vset.dim).sum(axis=0), float(np.abs(mom).sum())


def _max_speed(fld):
    rho, mom = moments(fld.vset, fld.values)
    if not np.all(np.isfinite(rho)) or not np.all(rho > 0):
        raise SolverDivergenceError(f"non-physical density at t = {fld.time:.6g}")
    u = mom / rho[..., None]
    speed = float(np.sqrt(np.max(np.sum(u * u, axis=-1))))
    if not math.isfinite(speed):
        raise SolverDivergenceError(f"non-finite velocity at t = {fld.time:.6g}")
    return speed


def run_case(cfg: RunConfig, resume: bool = False) -> CaseReport:
    """Initialize, advance to ``end_time`` and write this case's outputs.

    The l2 error and the profile are taken at step ``round(t_ref/dt)``
    against the reference at ``steps * dt``. With ``resume=True`` the run
    continues from the case's checkpoint and previously flushed samples.
    """
    bench = _benchmark(cfg)
    model = RelaxationModel(cfg.epsilon, cfg.benchmark.tau)
    scheme = SchemeConfig(model, cfg.eta, cfg.reconstruction)
    grid, vset = bench.grid, bench.vset
    dt = scheme.dt(grid, vset)
    n_ref = max(1, round(bench.t_ref / dt))
    n_end = max(n_ref, round(cfg.end_time * bench.t_ref / dt))
    every = max(1, round(bench.t_ref / cfg.samples_per_tc / dt))
    paths = _paths(cfg)
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc

    started = time.perf_counter()
    if resume:
        fld, state = _load_resume(cfg, paths, grid, vset)
        times, samples = read_decay_csv(paths["decay"])
        keep = [i for i, t in enumerate(times) if t <= fld.time]
        times, samples = [times[i] for i in keep], [samples[i] for i in keep]
    else:
        fld = DistributionField(grid, vset)
        bench.initialize(fld, model, cfg)
        state = {"l2_error": None, "mass0": None, "mom0": None, "absmom0": None,
                 "mass_drift": 0.0, "momentum_drift": 0.0}
        m0, p0, a0 = _totals(fld)
        state.update(mass0=m0, mom0=p0.tolist(), absmom0=a0)
        times, samples = [], []

    def record():
        times.append(fld.time)
        samples.append(_max_speed(fld))
        m, p, _ = _totals(fld)
        mass_drift = abs(m - state["mass0"]) / state["mass0"]
        scale = state["absmom0"] if state["absmom0"] > 0 else state["mass0"] * vset.xi_max
        mom_drift = float(np.max(np.abs(p - np.asarray(state["mom0"])))) / scale
        state["mass_drift"] = max(state["mass_drift"], mass_drift)
        state["momentum_drift"] = max(state["momentum_drift"], mom_drift)

    if not resume:
        record()
    while fld.steps < n_end:
        try:
            step(fld, scheme, dt, cfg.backend)
        except NonPhysicalFieldError as exc:
            raise SolverDivergenceError(f"{cfg.ident}: {exc} (step {fld.steps + 1})") from exc
        if fld.steps % every == 0 or fld.steps == n_end:
            record()
        if fld.steps == n_ref:
            t = fld.steps * dt
            state["l2_error"] = bench.error(fld, t)
            blocks = bench.profiles(fld, t)
            write_profile_csv(paths["profile"], blocks)
            if cfg.plot:
                write_profile_svg(paths["svg"], blocks)
        if cfg.checkpoint_every and fld.steps % cfg.checkpoint_every == 0:
            _save_resume(cfg, paths, fld, state, times, samples)

    if cfg.checkpoint_every:
        _save_resume(cfg, paths, fld, state, times, samples)
    else:
        write_decay_csv(paths["decay"], times, samples)
    try:
        nu_fit = bench.fit(times, samples)
    except ValueError:
        nu_fit = float("nan")
    return CaseReport(
        case_id=cfg.ident,
        scheme=cfg.reconstruction.value,
        epsilon=cfg.epsilon,
        n=grid.n,
        dx=grid.dx,
        dt=dt,
        steps=fld.steps,
        l2_error=state["l2_error"],
        nu_fit=nu_fit,
        nu_expected=bench.nu_expected,
        mass_drift=state["mass_drift"],
        momentum_drift=state["momentum_drift"],
        wall_time=time.perf_counter() - started,
    )


def _save_resume(cfg, paths, fld, state, times, samples):
    write_decay_csv(paths["decay"], times, samples)
    _atomic_write(paths["state"], json.dumps(state, sort_keys=True))
    try:
        checkpoint_write(fld, paths["checkpoint"], cfg.epsilon, cfg.benchmark.tau)
    except OSError as exc:
        raise OutputError(f"cannot write {paths['checkpoint']}: {exc}") from exc


def _load_resume(cfg, paths, grid, vset):
    fld, eps, tau = checkpoint_read(paths["checkpoint"])
    if (fld.grid.n, fld.grid.dim, fld.vset.name) != (grid.n, grid.dim, vset.name):
        raise ConfigError(
            f"{paths['checkpoint']} holds a {fld.vset.name} n={fld.grid.n} field, "
            f"config asks for {vset.name} n={grid.n}"
        )
    if eps != cfg.epsilon or tau != cfg.benchmark.tau or fld.vset.rt0 != vset.rt0:
        raise ConfigError(f"{paths['checkpoint']} was written with different eps/tau/rt0")
    try:
        state = json.loads(paths["state"].read_text())
    except OSError as exc:
        raise OutputError(f"cannot read {paths['state']}: {exc.strerror or exc}") from exc
    return fld, state


# -- sweeps and convergence ----------------------------------------------------


def _failed(cfg: RunConfig, exc: Exception) -> CaseReport:
    nan = float("nan")
    n = cfg.mesh
    dx = 1.0 / n
    dt = cfg.eta * dx / math.sqrt(3 * cfg.benchmark.rt0)  # xi_max of both sets
    msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return CaseReport(cfg.ident, cfg.reconstruction.value, cfg.epsilon, n, dx, dt, 0,
                      nan, nan, cfg.epsilon * cfg.benchmark.tau * cfg.benchmark.rt0,
                      nan, nan, 0.0, status=msg)


def _run_guarded(cfg: RunConfig) -> CaseReport:
    try:
        return run_case(cfg)
    except (SolverDivergenceError, OutputError, ConfigError, ArithmeticError) as exc:
        return _failed(cfg, exc)


def unique_ids(configs):
    """Give repeated case ids a numeric suffix so outputs never collide."""
    seen: dict[str, int] = {}
    out = []
    for cfg in configs:
        ident = cfg.ident
        count = seen.get(ident, 0)
        seen[ident] = count + 1
        out.append(cfg if count == 0 else cfg.replace(case_id=f"{ident}_{count}"))
    return out


def run_sweep(configs, out=None, workers: int = 1):
    """Run every case and write ``summary.csv``; failures become rows.

    Cases are independent, so ``workers > 1`` runs them in separate
    processes. Row order always follows ``configs``.
    """
    configs = list(configs)
    if not configs:
        raise ConfigError("sweep has no cases to run")
    if out is not None:
        configs = [c.replace(out=str(out)) for c in configs]
    configs = unique_ids(configs)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            reports = list(pool.map(_run_guarded, configs))
    else:
        reports = [_run_guarded(c) for c in configs]
    summary = Path(out if out is not None else configs[0].out) / "summary.csv"
    try:
        summary.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {summary.parent}: {exc.strerror or exc}") from exc
    write_summary_csv(summary, reports)
    return reports, summary


@dataclass
class ConvergenceReport:
    n: list
    dx: list
    errors: list
    order: float | None
    monotone: bool
    reports: list = dc_field(default_factory=list)

    @property
    def message(self) -> str:
        if self.order is None:
            return "errors do not decrease monotonically; no order reported"
        return f"observed order {self.order:.3f}"


def observed_order(h, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    h = np.asarray(h, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if h.shape != errors.shape or h.size < 2:
        raise ValueError("need at least two (h, error) pairs")
    if np.any(~(h > 0)) or np.any(~(errors > 0)):
        raise ValueError("step sizes and errors must be positive")
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


def run_convergence(base: RunConfig, levels, workers: int = 1) -> ConvergenceReport:
    """Run ``base`` on each mesh in ``levels`` (at least 3, each doubling)."""
    levels = [int(n) for n in levels]
    if len(levels) < 3:
        raise ConfigError(f"convergence needs at least 3 levels, got {len(levels)}")
    if any(b != 2 * a for a, b in zip(levels, levels[1:])):
        raise ConfigError(f"levels must double at each refinement, got {levels}")
    configs = [base.replace(n=n, beta=None, case_id=None) for n in levels]
    reports, _ = run_sweep(configs, workers=workers)
    bad = [r for r in reports if not r.ok]
    if bad:
        raise SolverDivergenceError(f"convergence level n={bad[0].n} failed: {bad[0].status}")
    errors = [r.l2_error for r in reports]
    dx = [r.dx for r in reports]
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    order = observed_order(dx, errors) if monotone else None
    return ConvergenceReport(levels, dx, errors, order, monotone, reports)


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))
