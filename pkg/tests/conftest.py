import numpy as np
import pytest

from dugks.benchmarks import TaylorVortexSpec
from dugks.grid import DistributionField, UniformPeriodicGrid
from dugks.kinetics import RelaxationModel, init_ce
from dugks.velocity_set import build_d1q3, build_d2q9

_CRITERIA = []


def record_criterion(number, passed, detail):
    """``number`` is ``(criterion, sort key)`` so sub-cases list in order."""
    _CRITERIA.append((number, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number[0]:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def d2q9():
    return build_d2q9(0.5)


@pytest.fixture
def d1q3():
    return build_d1q3(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def taylor_field(n, eps, rt0=0.5):
    vset = build_d2q9(rt0)
    fld = DistributionField(UniformPeriodicGrid(2, n), vset)
    model = RelaxationModel(eps)
    spec = TaylorVortexSpec.for_epsilon(eps, rt0=rt0)
    init_ce(fld, spec, model)
    return fld, model, spec


def random_kinetic_state(rng, vset, shape, eps):
    """Equilibrium of a random macro state plus an O(eps) non-equilibrium part."""
    rho = 1 + 0.05 * rng.standard_normal(shape)
    u = 0.02 * rng.standard_normal(shape + (vset.dim,))
    from dugks.kinetics import MacroState, equilibrium

    feq = equilibrium(vset, MacroState(rho, u))
    return feq * (1 + 0.05 * min(eps, 1.0) * rng.standard_normal(feq.shape))
