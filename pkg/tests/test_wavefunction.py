import logging
import math

import numpy as np
import pytest
from scipy.special import eval_hermite

from quartic_rabi.model import SPIN_DOWN, SPIN_UP, FockSpinBasis, ModelParams
from quartic_rabi.spectrum import converged_spectrum
from quartic_rabi.wavefunction import (
    default_grid,
    hermite_functions,
    observable_sigma_x,
    observable_x2,
    to_position,
)


def test_hermite_functions_match_polynomials():
    x = np.linspace(-5, 5, 41)
    phi = hermite_functions(20, x)
    for n in (0, 1, 7, 20):
        ref = eval_hermite(n, x) * np.exp(-x * x / 2) / math.sqrt(2.0**n * math.factorial(n) * math.sqrt(math.pi))
        assert np.allclose(phi[n], ref, atol=1e-12)


def test_hermite_functions_stable_at_high_order():
    x = np.linspace(-70, 70, 20001)
    phi = hermite_functions(2000, x)
    assert np.all(np.isfinite(phi))
    norms = np.trapezoid(phi[[0, 500, 2000]] ** 2, x, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-6)


def test_vacuum_gaussian():
    b = FockSpinBasis(8)
    wf = to_position(b.fock_state(0, SPIN_DOWN), b)
    assert np.all(wf.psi_plus == 0)
    assert np.allclose(wf.psi_minus, math.pi**-0.25 * np.exp(-wf.x_grid**2 / 2), atol=1e-14)
    assert wf.norm_check == pytest.approx(1.0, abs=1e-4)


def test_fock_observables():
    b = FockSpinBasis(8)
    assert observable_x2(b.fock_state(0, SPIN_UP), b) == pytest.approx(0.5)
    assert observable_x2(b.fock_state(1, SPIN_UP), b) == pytest.approx(1.5)
    assert to_position(b.fock_state(1, SPIN_UP), b).moment(2) == pytest.approx(1.5, abs=1e-4)


def test_narrow_grid_rejected():
    b = FockSpinBasis(8)
    with pytest.raises(ValueError):
        to_position(b.fock_state(0, SPIN_UP), b, np.linspace(0.5, 1.0, 50))


def test_decoupled_sigma_x():
    res = converged_spectrum(ModelParams(1.0, 1.0, 0.0), 2)
    assert observable_sigma_x(res.ground_state, res.basis) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("ratio,a4", [(0.6, 0.0), (0.97, 0.0), (1.2, 3e-4)])
def test_ground_state_position_checks(ratio, a4):
    res = converged_spectrum(ModelParams(1.0, 1.0, ratio * 0.25, a4=a4), 2, 1e-10)
    wf = to_position(res.ground_state, res.basis, default_grid(res.cutoff_used, 4097))
    assert wf.norm_check == pytest.approx(1.0, abs=1e-4)
    assert wf.moment(2) == pytest.approx(observable_x2(res.ground_state, res.basis), rel=1e-4)
    assert np.max(np.abs(wf.psi_plus - wf.psi_plus[::-1])) < 1e-8
    assert np.max(np.abs(wf.psi_minus - wf.psi_minus[::-1])) < 1e-8
    assert -1.0 <= observable_sigma_x(res.ground_state, res.basis) <= 1.0


def test_components_change_width_toward_collapse():
    # psi_plus narrows only slightly, so compare well below g_T
    widths = []
    for ratio in (0.3, 0.8):
        res = converged_spectrum(ModelParams(1.0, 1.0, ratio * 0.25), 2, 1e-10)
        wf = to_position(res.ground_state, res.basis)
        w = [np.trapezoid(wf.x_grid**2 * c**2, wf.x_grid) / np.trapezoid(c**2, wf.x_grid)
             for c in (wf.psi_plus, wf.psi_minus)]
        widths.append(w)
    assert widths[1][0] < widths[0][0]
    assert widths[1][1] > widths[0][1]


def test_bifurcation_past_transition():
    res = converged_spectrum(ModelParams(1.0, 1.0, 1.3 * 0.25, a4=3e-4), 2, 1e-10)
    wf = to_position(res.ground_state, res.basis)
    density = wf.density
    centre = np.argmin(np.abs(wf.x_grid))
    assert wf.x_grid[np.argmax(density)] != 0.0
    assert density.max() > 5 * density[centre]


def test_boundary_weight_warning(caplog):
    b = FockSpinBasis(8)
    state = np.zeros(b.dim)
    state[b.index(0, SPIN_UP)] = state[b.index(8, SPIN_UP)] = math.sqrt(0.5)
    with caplog.at_level(logging.WARNING):
        observable_x2(state, b)
    assert "unreliable" in caplog.text
