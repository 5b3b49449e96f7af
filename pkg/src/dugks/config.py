"""YAML run configuration.

Top-level keys (all optional)::

    scheme: dugks            # dugks | clr | lw
    schemes: [dugks, clr]    # sweep only, defaults to [scheme]
    eps: 1.6e-3
    n: 25                    # or beta: 0.5, giving n = round(eps ** -beta)
    eta: 0.5
    end_time: 1.0            # in half-decay times
    samples_per_tc: 20
    checkpoint_every: 0      # steps, 0 disables
    plot: false
    backend: numba           # numba | numpy
    time_derivatives: euler  # euler | analytic
    workers: 1
    out: out
    benchmark: {name: taylor, u0: 0.01, rt0: 0.5, tau: 1.0}
    cases:                   # sweep entries, each may override eps/n/beta/eta/scheme
      - {eps: 1.6e-3, n: 25}
    convergence: {levels: [32, 64, 128]}
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .harness import BenchmarkConfig, ConfigError, OutputError, RunConfig

_TOP = {
    "scheme", "schemes", "eps", "n", "beta", "eta", "end_time", "samples_per_tc",
    "checkpoint_every", "plot", "backend", "time_derivatives", "workers", "out",
    "benchmark", "cases", "convergence",
}
_CASE = {"eps", "n", "beta", "eta", "scheme", "id"}
_BENCH = {"name", "u0", "rt0", "tau", "amplitude"}
_RUN_FIELDS = {
    "eta": "eta", "end_time": "end_time", "samples_per_tc": "samples_per_tc",
    "checkpoint_every": "checkpoint_every", "plot": "plot", "backend": "backend",
    "time_derivatives": "time_derivatives", "out": "out",
}


def load_config(path) -> dict:
    """Parse and shape-check a config file; returns the raw mapping."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _check_keys(data, _TOP, "config")
    bench = data.get("benchmark", {})
    if not isinstance(bench, dict):
        raise ConfigError("benchmark must be a mapping")
    _check_keys(bench, _BENCH, "benchmark")
    cases = data.get("cases", [])
    if not isinstance(cases, list) or not all(isinstance(c, dict) for c in cases):
        raise ConfigError("cases must be a list of mappings")
    for case in cases:
        _check_keys(case, _CASE, "case")
    conv = data.get("convergence", {})
    if not isinstance(conv, dict):
        raise ConfigError("convergence must be a mapping")
    _check_keys(conv, {"levels"}, "convergence")
    return data


def _check_keys(mapping, allowed, where):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(map(str, unknown))}")


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return value


def _make(base: dict, case: dict | None = None) -> RunConfig:
    case = case or {}
    kw = {}
    for key, name in _RUN_FIELDS.items():
        if key in base:
            kw[name] = base[key]
    kw["scheme"] = case.get("scheme", base.get("scheme", "dugks"))
    if "eta" in case:
        kw["eta"] = case["eta"]
    eps = case.get("eps", base.get("eps", 1.6e-3))
    kw["epsilon"] = float(_number(eps, "eps"))
    if "n" in case or "beta" in case:
        kw["n"], kw["beta"] = case.get("n"), case.get("beta")
    else:
        kw["n"], kw["beta"] = base.get("n"), base.get("beta")
    if kw["n"] is None and kw["beta"] is None:
        kw["n"] = 25
    if kw["n"] is not None and (isinstance(kw["n"], bool) or not isinstance(kw["n"], int)):
        raise ConfigError(f"n must be an integer, got {kw['n']!r}")
    if "id" in case:
        kw["case_id"] = str(case["id"])
    try:
        kw["benchmark"] = BenchmarkConfig(**base.get("benchmark", {}))
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def apply_overrides(data: dict, scheme=None, eps=None, mesh=None, eta=None, out=None) -> dict:
    """Command-line values replace the file's top-level entries."""
    data = dict(data)
    if scheme is not None:
        data["scheme"] = scheme
    if eps is not None:
        data["eps"] = eps
    if mesh is not None:
        data["n"] = mesh
        data.pop("beta", None)
    if eta is not None:
        data["eta"] = eta
    if out is not None:
        data["out"] = out
    return data


def run_config(data: dict) -> RunConfig:
    return _make(data)


def sweep_configs(data: dict, scheme=None, eps=None, mesh=None) -> list[RunConfig]:
    """Cross ``cases`` with ``schemes``; command-line values act as filters."""
    schemes = data.get("schemes") or [data.get("scheme", "dugks")]
    cases = data.get("cases") or [{}]
    configs = [
        _make(data, {**case, "scheme": s}) for s in schemes for case in cases if "scheme" not in case
    ]
    configs += [_make(data, case) for case in cases if "scheme" in case]
    if scheme is not None:
        configs = [c for c in configs if c.reconstruction.value == scheme]
    if eps is not None:
        configs = [c for c in configs if c.epsilon == eps]
    if mesh is not None:
        configs = [c for c in configs if c.mesh == mesh]
    if not configs:
        raise ConfigError("no sweep cases remain after applying --scheme/--eps/--mesh")
    return configs


def convergence_levels(data: dict, mesh=None) -> list[int]:
    if mesh is not None:
        return [mesh, 2 * mesh, 4 * mesh]
    levels = data.get("convergence", {}).get("levels", [32, 64, 128])
    if not isinstance(levels, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in levels):
        raise ConfigError(f"convergence.levels must be a list of integers, got {levels!r}")
    return levels


def workers(data: dict) -> int:
    value = data.get("workers", 1)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"workers must be a positive integer, got {value!r}")
    return value
