import math
from pathlib import Path

import numpy as np
import pytest

import dugks.harness as harness
from dugks.harness import (
    BenchmarkConfig,
    CaseReport,
    ConfigError,
    RunConfig,
    SolverDivergenceError,
    observed_order,
    read_decay_csv,
    run_case,
    run_convergence,
    run_sweep,
)
from dugks.kinetics import NonPhysicalFieldError


def _cfg(tmp_path, **kw):
    base = dict(scheme="dugks", epsilon=1.6e-3, n=16, out=str(tmp_path))
    base.update(kw)
    return RunConfig(**base)


def _files(out):
    return {p.name: p.read_bytes() for p in sorted(Path(out).iterdir()) if p.suffix in (".csv", ".bin", ".json")}


def _strip_wall(text: bytes):
    lines = text.decode().splitlines()
    return [",".join(line.split(",")[:8] + line.split(",")[9:]) for line in lines]


def test_paper_style_case_reports_cell_reynolds_diagnostics(tmp_path):
    r = run_case(_cfg(tmp_path, n=25))
    assert r.ok and r.n == 25
    assert r.delta_x == pytest.approx(25.0, rel=1e-14)
    assert r.delta_x * r.epsilon == pytest.approx(r.dx, rel=1e-15)
    assert r.delta_t * r.epsilon == pytest.approx(r.dt, rel=1e-15)
    assert r.l2_error < 0.05
    assert r.nu_fit == pytest.approx(r.nu_expected, rel=0.1)
    assert r.conserved
    profile = (tmp_path / "profile_dugks_eps0.0016_n25.csv").read_text().splitlines()
    assert profile[0] == "# dugks-profile v1"
    assert profile[2] == "coordinate,u_numeric,u_analytic"
    assert profile.count("coordinate,u_numeric,u_analytic") == 2
    t, m = read_decay_csv(tmp_path / "decay_dugks_eps0.0016_n25.csv")
    assert len(t) == 21 and t[0] == 0.0 and m[-1] < m[0]


def test_identical_configs_give_identical_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_case(_cfg(a, plot=True))
    run_case(_cfg(b, plot=True))
    assert _files(a) == _files(b)
    assert (a / "profile_dugks_eps0.0016_n16.svg").read_bytes() == (b / "profile_dugks_eps0.0016_n16.svg").read_bytes()
    assert (a / "profile_dugks_eps0.0016_n16.svg").read_text().lstrip().startswith("<?xml")


def test_resume_equals_uninterrupted_run(tmp_path, monkeypatch):
    full, cut = tmp_path / "full", tmp_path / "cut"
    ref = run_case(_cfg(full, checkpoint_every=50, end_time=1.5))

    real_step = harness.step
    calls = {"n": 0}

    def interrupted(*args, **kw):
        calls["n"] += 1
        if calls["n"] > 230:
            raise KeyboardInterrupt
        return real_step(*args, **kw)

    monkeypatch.setattr(harness, "step", interrupted)
    with pytest.raises(KeyboardInterrupt):
        run_case(_cfg(cut, checkpoint_every=50, end_time=1.5))
    monkeypatch.setattr(harness, "step", real_step)
    resumed = run_case(_cfg(cut, checkpoint_every=50, end_time=1.5), resume=True)
    assert _files(full) == _files(cut)
    assert (resumed.l2_error, resumed.nu_fit, resumed.steps) == (ref.l2_error, ref.nu_fit, ref.steps)


def test_resume_rejects_other_mesh(tmp_path):
    run_case(_cfg(tmp_path, checkpoint_every=100, case_id="c"))
    with pytest.raises(ConfigError, match="n=16"):
        run_case(_cfg(tmp_path, n=20, checkpoint_every=100, case_id="c"), resume=True)


def test_resume_without_checkpoint_is_io_error(tmp_path):
    with pytest.raises(OSError):
        run_case(_cfg(tmp_path), resume=True)


def test_lw_advection_case_conserves(tmp_path):
    cfg = RunConfig(scheme="lw", epsilon=1.0, n=64, out=str(tmp_path),
                    benchmark=BenchmarkConfig(name="advection1d"))
    r = run_case(cfg)
    assert r.ok and r.conserved
    assert r.mass_drift <= 1e-14
    assert r.l2_error < 2e-3
    assert math.isnan(r.nu_fit)


def test_lw_advection_error_is_second_order(tmp_path):
    errs = []
    for n in (32, 64, 128):
        cfg = RunConfig(scheme="lw", epsilon=1.0, n=n, out=str(tmp_path),
                        benchmark=BenchmarkConfig(name="advection1d"))
        errs.append(run_case(cfg).l2_error)
    assert observed_order([1 / 32, 1 / 64, 1 / 128], errs) == pytest.approx(2.0, abs=0.1)


def test_sweep_rows_follow_configs_and_keep_failures(tmp_path, monkeypatch):
    real = harness.run_case

    def flaky(cfg, resume=False):
        if cfg.mesh == 12:
            raise SolverDivergenceError("density went negative")
        return real(cfg, resume)

    monkeypatch.setattr(harness, "run_case", flaky)
    configs = [_cfg(tmp_path, n=8), _cfg(tmp_path, n=12), _cfg(tmp_path, scheme="clr", n=8)]
    reports, summary = run_sweep(configs)
    assert [r.n for r in reports] == [8, 12, 8]
    assert [r.ok for r in reports] == [True, False, True]
    lines = summary.read_text().splitlines()
    assert lines[0] == "# dugks-summary v1"
    assert lines[1] == "scheme,epsilon,n,delta_x,delta_t,l2_error,nu_fit,nu_expected,wall_time,status"
    assert len(lines) == 2 + 3
    assert "SolverDivergenceError: density went negative" in lines[3]
    assert ",nan,nan," in lines[3]


def test_sweep_duplicate_cases_get_distinct_ids(tmp_path):
    reports, _ = run_sweep([_cfg(tmp_path, n=8), _cfg(tmp_path, n=8)])
    assert [r.case_id for r in reports] == ["dugks_eps0.0016_n8", "dugks_eps0.0016_n8_1"]
    assert (tmp_path / "profile_dugks_eps0.0016_n8_1.csv").exists()


def test_parallel_sweep_matches_serial(tmp_path):
    configs = [_cfg(tmp_path, n=8), _cfg(tmp_path, n=12), _cfg(tmp_path, scheme="clr", n=10)]
    _, s1 = run_sweep(configs, out=tmp_path / "serial", workers=1)
    _, s2 = run_sweep(configs, out=tmp_path / "parallel", workers=2)
    assert _strip_wall(s1.read_bytes()) == _strip_wall(s2.read_bytes())
    f1 = {k: v for k, v in _files(tmp_path / "serial").items() if k != "summary.csv"}
    f2 = {k: v for k, v in _files(tmp_path / "parallel").items() if k != "summary.csv"}
    assert f1 == f2


def test_empty_sweep_is_an_error():
    with pytest.raises(ConfigError, match="no cases"):
        run_sweep([])


def test_observed_order_of_exact_power_law():
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    assert observed_order(h, 3.7 * h**2) == pytest.approx(2.0, abs=1e-12)
    assert observed_order(h, 0.2 * h) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        observed_order([0.1], [0.2])
    with pytest.raises(ValueError):
        observed_order([0.1, 0.05], [0.2, 0.0])


def _fake_reports(errors):
    return [
        CaseReport(f"c{i}", "dugks", 1e-3, n, 1 / n, 0.1 / n, 10, e, 0.0, 0.0, 0.0, 0.0, 0.0)
        for i, (n, e) in enumerate(zip((8, 16, 32), errors))
    ]


def test_convergence_flags_non_monotone_errors(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "run_sweep", lambda cfgs, workers=1: (_fake_reports([0.1, 0.2, 0.05]), None))
    res = run_convergence(_cfg(tmp_path), [8, 16, 32])
    assert not res.monotone and res.order is None
    assert "no order" in res.message


def test_convergence_reports_slope(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "run_sweep", lambda cfgs, workers=1: (_fake_reports([0.16, 0.04, 0.01]), None))
    res = run_convergence(_cfg(tmp_path), [8, 16, 32])
    assert res.order == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("levels", [[8, 16], [8, 16, 24], [8, 8, 16]])
def test_convergence_level_validation(tmp_path, levels):
    with pytest.raises(ConfigError):
        run_convergence(_cfg(tmp_path), levels)


def test_scaling_exponent_derives_mesh(tmp_path):
    cfg = RunConfig(epsilon=1e-2, beta=0.5, out=str(tmp_path))
    assert cfg.mesh == 10 and cfg.ident == "dugks_eps0.01_n10"


@pytest.mark.parametrize("kw", [
    dict(n=16, beta=0.5),
    dict(n=None),
    dict(n=3),
    dict(beta=0.1),
    dict(eta=1.0),
    dict(epsilon=0.0),
    dict(scheme="upwind"),
    dict(end_time=0),
    dict(samples_per_tc=0),
    dict(checkpoint_every=-1),
    dict(backend="gpu"),
])
def test_run_config_validation(kw):
    base = dict(epsilon=1e-3, n=16)
    base.update(kw)
    with pytest.raises(ConfigError):
        RunConfig(**base)


def test_benchmark_config_validation():
    with pytest.raises(ConfigError):
        BenchmarkConfig(name="cavity")
    with pytest.raises(ConfigError):
        BenchmarkConfig(u0=-1.0)


def test_divergence_surfaces_with_case_context(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NonPhysicalFieldError("non-physical density at cell")

    monkeypatch.setattr(harness, "step", boom)
    with pytest.raises(SolverDivergenceError, match="dugks_eps0.0016_n16"):
        run_case(_cfg(tmp_path))


def test_unwritable_output_is_output_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(harness.OutputError, match="file"):
        run_case(_cfg(blocker / "sub"))
