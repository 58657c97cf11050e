"""Acceptance criteria 1-10, each printing one PASS/FAIL line."""

import numpy as np
import pytest

from quartic_rabi.cli import main
from quartic_rabi.metrology import fidelity_susceptibility, find_qfi_peak, qfi_at
from quartic_rabi.model import ModelParams, parity_expectation
from quartic_rabi.ptps import ptps
from quartic_rabi.semiclassical import (
    critical_ratio_exact,
    critical_ratio_large,
    critical_ratio_numeric,
    critical_ratio_small,
)
from quartic_rabi.spectrum import converged_spectrum, spectrum_at
from quartic_rabi.wavefunction import default_grid, observable_x2, to_position

_peaks = {}


def peak(omega, a4):
    key = (omega, a4)
    if key not in _peaks:
        _peaks[key] = find_qfi_peak(ModelParams(omega, 1.0, 0.0, a4=a4))
    return _peaks[key]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_criterion_01_oscillator_oracle(report):
    worst = 0.0
    for ratio in (0.0, 0.2, 0.8):
        res = spectrum_at(ModelParams(1.0, 0.0, ratio * 0.25), 200, 10)
        levels = []
        for sign in (1, -1):
            w = np.sqrt(1 + sign * ratio)
            levels.extend(w * (np.arange(10) + 0.5) - 0.5)
        worst = max(worst, np.max(np.abs(res.eigenvalues - np.sort(levels)[:10])))
    report(1, worst < 1e-8, f"max level error {worst:.2e} at cutoff 200")


def test_criterion_02_critical_ratio_limit(report):
    at_zero = critical_ratio_exact(0.0)
    values = np.array([critical_ratio_exact(a) for a in np.logspace(-6, 1, 400)])
    ok = abs(at_zero - 1.0) < 1e-9 and np.all(np.diff(values) > 0)
    report(2, ok, f"g2c(0) = {at_zero:.12f}, monotone over 400 points: {np.all(np.diff(values) > 0)}")


def test_criterion_03_boundary_cross_validation(report):
    alphas = np.logspace(-4, 0, 20)
    rel = [abs(critical_ratio_numeric(a) / critical_ratio_exact(a) - 1) for a in alphas]
    report(3, max(rel) < 1e-6, f"max relative deviation {max(rel):.2e} over 20 alpha4")


def test_criterion_04_expansion_regimes(report):
    small_grid = np.linspace(0.0, 0.01, 101)
    large_grid = np.linspace(0.05, 1.0, 96)
    small_dev = max(abs(critical_ratio_small(a) / critical_ratio_exact(a) - 1) for a in small_grid)
    large_dev = [abs(critical_ratio_large(a) / critical_ratio_exact(a) - 1) for a in large_grid]
    small_there = [abs(critical_ratio_small(a) / critical_ratio_exact(a) - 1) for a in large_grid]
    ok = small_dev < 0.01 and max(large_dev) < 0.01 and max(small_there) > max(large_dev)
    report(4, ok, f"small form {small_dev:.2e} on [0,0.01]; on [0.05,1] large {max(large_dev):.2e}, "
                  f"small {max(small_there):.2e}")


def test_criterion_05_qfi_fidelity_identity(report):
    base = ModelParams(1.0, 1.0, 0.0, a4=3e-4)
    worst, cutoffs = 0.0, []
    for ratio in np.linspace(0.9, 1.3, 10):
        p = base.with_(g2=ratio * base.g_t)
        cutoffs.append(converged_spectrum(p, 4, 1e-10, track=1).cutoff_used)
        fq = qfi_at(p)
        worst = max(worst, abs(4 * fidelity_susceptibility(p) - fq) / fq)
    ok = worst < 1e-3 and max(cutoffs) <= 1024
    report(5, ok, f"max |4 chi_F - F_Q| / F_Q = {worst:.2e}, largest cutoff {max(cutoffs)}")


def test_criterion_06_peak_ordering(report):
    bare = peak(1.0, 0.0).fq
    quartic = [peak(1.0, a4).fq for a4 in (1e-4, 3e-4)]
    slow_q, fast_q = peak(0.5, 3e-4).fq, peak(1.0, 3e-4).fq
    slow_b = peak(0.5, 0.0).fq
    ok = min(quartic) > bare and slow_q > fast_q and slow_b < bare
    report(6, ok, f"omega=1: A4=0 {bare:.4g}, A4=1e-4 {quartic[0]:.4g}, A4=3e-4 {quartic[1]:.4g}; "
                  f"omega=0.5: A4=3e-4 {slow_q:.4g}, A4=0 {slow_b:.4g}")


def test_criterion_07_slow_mode_peak_position(report):
    omega = 0.05
    rel = []
    for a4 in (0.001 * omega, 0.007 * omega):
        p = ModelParams(omega, 1.0, 0.0, a4=a4)
        analytic = critical_ratio_exact(p.alpha4) * p.g_t
        rel.append(abs(peak(omega, a4).g2 / analytic - 1))
    report(7, max(rel) < 0.03, f"relative offsets {rel[0]:.3%}, {rel[1]:.3%}")


def test_criterion_08_gap_and_ptps(report):
    gaps = {}
    for a4 in (0.0, 1e-4, 3e-4, 1e-3):
        pk = peak(1.0, a4)
        gaps[a4] = converged_spectrum(ModelParams(1.0, 1.0, pk.g2, a4=a4), 4, 1e-8, track=2).gap
    times = {}
    for omega, a4 in ((1.0, 0.0), (1.0, 1e-3), (0.5, 3e-4), (1.0, 3e-4), (2.0, 3e-4)):
        pk = peak(omega, a4)
        times[omega, a4] = ptps(ModelParams(omega, 1.0, 0.0, a4=a4), pk.g2, tol=1e-5).time
    same_order = max(times[1.0, 0.0], times[1.0, 1e-3]) < 10 * min(times[1.0, 0.0], times[1.0, 1e-3])
    trend = [times[w, 3e-4] for w in (0.5, 1.0, 2.0)]
    ok = min(gaps.values()) > 0 and same_order and trend[0] > trend[1] > trend[2]
    report(8, ok, "gaps at peak " + ", ".join(f"{g:.3g}" for g in gaps.values())
           + f"; T(A4=0) {times[1.0, 0.0]:.4g}, T(A4=1e-3) {times[1.0, 1e-3]:.4g}; "
           + "T over omega 0.5,1,2: " + ", ".join(f"{t:.4g}" for t in trend))


def test_criterion_09_stability(report, tmp_path):
    base = ModelParams(1.0, 1.0, 0.0, a4=1e-4)
    ok, worst = True, 0.0
    for ratio in np.linspace(0.0, 1.5, 7):
        res = converged_spectrum(base.with_(g2=ratio * base.g_t), 10, 1e-8)
        ok &= res.converged
        worst = max(worst, res.convergence_delta)
    code = main(["spectrum", "--a4", "0", "--g2-ratio-grid", "1.2", "--out", str(tmp_path)])
    ok = ok and code == 4 and not (tmp_path / "spectrum.csv").read_text().strip().count("\n")
    report(9, ok, f"A4=1e-4 converged to 1.5 g_T (max delta {worst:.1e}); A4=0 at 1.2 g_T exit code {code}")


def test_criterion_10_parity_and_symmetry(report):
    parity_worst, sym_worst, norm_worst, x2_worst = 0.0, 0.0, 0.0, 0.0
    cases = [(1.0, 0.1, 0.0), (1.0, 0.24, 0.0), (1.0, 0.27, 3e-4), (1.0, 0.3, 1e-3), (0.5, 0.2, 3e-4)]
    for omega, g2, a4 in cases:
        res = converged_spectrum(ModelParams(omega, 1.0, g2, a4=a4), 6, 1e-8)
        for i in range(6):
            p = abs(parity_expectation(res.eigenvectors[:, i], res.basis))
            parity_worst = max(parity_worst, 1 - p)
        wf = to_position(res.ground_state, res.basis, default_grid(res.cutoff_used, 4097))
        sym_worst = max(sym_worst, np.max(np.abs(wf.psi_plus - wf.psi_plus[::-1])),
                        np.max(np.abs(wf.psi_minus - wf.psi_minus[::-1])))
        norm_worst = max(norm_worst, abs(wf.norm_check - 1))
        x2 = observable_x2(res.ground_state, res.basis)
        x2_worst = max(x2_worst, abs(wf.moment(2) - x2) / x2)
    ok = parity_worst < 1e-8 and sym_worst < 1e-8 and norm_worst < 1e-4 and x2_worst < 1e-4
    report(10, ok, f"1-|<P2>| {parity_worst:.1e}, symmetry {sym_worst:.1e}, "
                   f"Parseval {norm_worst:.1e}, <x^2> {x2_worst:.1e}")
