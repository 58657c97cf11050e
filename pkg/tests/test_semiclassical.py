
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quartic_rabi.errors import ConfigError, InstabilityError
from quartic_rabi.model import ModelParams
from quartic_rabi.semiclassical import (
    critical_ratio_exact,
    critical_ratio_large,
    critical_ratio_numeric,
    critical_ratio_small,
    hx_matrix,
    lower_branch,
    minimize_branch,
    phase_diagram,
    scaled_lower_branch,
    sigma_x_at,
)

# closed form evaluated once with 50-digit mpmath arithmetic
EXACT = {
    0.01: 1.5370163112982544,
    0.02: 1.748302367682491,
    0.14: 2.877418850921864,
    1.0: 5.718449542991709,
}


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 7.0])
@pytest.mark.parametrize("ratio,a4", [(0.5, 0.0), (1.0, 0.0), (1.2, 1e-3), (2.0, 0.05)])
def test_branch_is_lower_eigenvalue(x, ratio, a4):
    p = ModelParams(1.0, 1.0, ratio * 0.25, a4=a4)
    lowest = np.linalg.eigvalsh(hx_matrix(p, x))[0]
    assert lower_branch(p, x) == pytest.approx(lowest, abs=1e-12 * max(1.0, abs(lowest)))


def test_branch_origin():
    assert lower_branch(ModelParams(0.3, 1.7, 0.1, a4=0.2), 0.0) == pytest.approx(-0.85)


def test_symmetric_phase_below_collapse():
    for a4 in (0.0, 1e-3, 0.1):
        sol = minimize_branch(ModelParams(1.0, 1.0, 0.2, a4=a4))
        assert sol.symmetric_phase and sol.x_min == 0.0
        assert sol.sigma_x_at_min == pytest.approx(-1.0)


def test_broken_phase_above_boundary():
    p = ModelParams(0.05, 1.0, 0.0, a4=5e-5)
    sol = minimize_branch(p.with_(g2=1.2 * EXACT[0.02] * p.g_t))
    assert sol.x_min > 0 and not sol.symmetric_phase
    assert sol.energy_min < sol.energy_origin
    assert -1.0 <= sol.sigma_x_at_min <= 0.0


def test_unbounded_without_quartic():
    with pytest.raises(InstabilityError):
        minimize_branch(ModelParams(1.0, 1.0, 0.3))


@pytest.mark.parametrize("ratio,a4", [(1.5, 0.01), (3.0, 0.2)])
def test_zero_splitting_minimum(ratio, a4):
    p = ModelParams(1.0, 0.0, ratio * 0.25, a4=a4)
    sol = minimize_branch(p)
    assert sol.x_min**2 == pytest.approx((ratio - 1) / (16 * a4), rel=1e-8)


def test_critical_ratio_values():
    assert critical_ratio_exact(0.0) == pytest.approx(1.0, abs=1e-9)
    for alpha, value in EXACT.items():
        assert critical_ratio_exact(alpha) == pytest.approx(value, rel=1e-9)
    assert critical_ratio_small(0.0) == 1.0


def test_critical_ratio_rejects_negative():
    with pytest.raises(ConfigError):
        critical_ratio_exact(-1e-3)
    with pytest.raises(ConfigError):
        critical_ratio_large(0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, 10.0), st.floats(1.0001, 1.5))
def test_critical_ratio_monotone(alpha, factor):
    assert critical_ratio_exact(alpha * factor) > critical_ratio_exact(alpha) >= 1.0


@pytest.mark.parametrize("alpha", [1e-4, 3e-3, 0.14, 1.0])
def test_numeric_boundary_matches_closed_form(alpha):
    assert critical_ratio_numeric(alpha) == pytest.approx(critical_ratio_exact(alpha), rel=1e-6)


def test_scaled_branch_consistent():
    p = ModelParams(0.2, 1.0, 0.08, a4=1e-3)
    x = 1.7
    u = p.omega / p.Omega * x * x
    assert scaled_lower_branch(p.alpha4, p.ratio, u) * p.Omega / 2 == pytest.approx(lower_branch(p, x))


def test_sigma_x_bounds():
    p = ModelParams(1.0, 1.0, 0.3, a4=1e-3)
    values = [sigma_x_at(p, x) for x in np.linspace(0, 5, 11)]
    assert values[0] == -1.0
    assert all(-1.0 <= v <= 0.0 for v in values)


def test_phase_diagram_boundary():
    omega = 0.05
    pd = phase_diagram(omega, 1.0, [5e-5], np.linspace(0.5, 2.5, 81) * omega / 4)
    g_t = omega / 4
    assert pd.boundary_g2[0] == pytest.approx(EXACT[0.02] * g_t)
    broken = pd.g2_grid[pd.x_min[0] > 0]
    symmetric = pd.g2_grid[pd.x_min[0] == 0]
    assert symmetric.max() < pd.boundary_g2[0] < broken.min()
    assert np.all(pd.sigma_x[0, pd.x_min[0] == 0] == pytest.approx(-1.0))


def test_phase_diagram_records_failures():
    pd = phase_diagram(1.0, 1.0, [0.0], [0.1, 0.3])
    assert np.isnan(pd.sigma_x[0, 1])
    assert pd.failures[0]["g2"] == 0.3
