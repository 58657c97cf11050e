"""Slow-mode (kinetic-energy-free) picture of the quartic two-photon model.

With the kinetic term dropped, each displacement ``x`` carries a 2x2 spin
Hamiltonian ``[[e+(x), Omega/2], [Omega/2, e-(x)]]`` with
``e+-(x) = omega/2 (1 +- g2/g_T) x^2 + 4 A4 x^4``.  Its lower eigenvalue
``eps(x)`` is minimized over ``x``; the ground state leaves ``x = 0`` once
a second minimum drops to ``eps(0) = -Omega/2``.

Writing ``u = (omega/Omega) x^2`` gives
``eps = (Omega/2) [u + 8 alpha4 u^2 - sqrt(1 + r^2 u^2)]`` with
``r = g2/g_T``, so the phase boundary depends on ``alpha4`` alone.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InstabilityError
from .model import ModelParams

SCAN_POINTS = 2000
BISECTION_STEPS = 40
BROKEN_X_MIN = 1e-6
BRANCH_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class SemiclassicalSolution:
    x_min: float
    energy_min: float
    energy_origin: float
    sigma_x_at_min: float

    @property
    def symmetric_phase(self) -> bool:
        return self.x_min == 0.0


def spin_energies(params: ModelParams, x):
    """Diagonal entries ``(e+(x), e-(x))`` of the 2x2 Hamiltonian."""
    x2 = np.asarray(x, dtype=float) ** 2
    quartic = 4.0 * params.a4 * x2 * x2
    half = 0.5 * params.omega * x2
    return half * (1.0 + params.ratio) + quartic, half * (1.0 - params.ratio) + quartic


def hx_matrix(params: ModelParams, x: float) -> np.ndarray:
    e_plus, e_minus = spin_energies(params, x)
    off = 0.5 * params.Omega
    return np.array([[float(e_plus), off], [off, float(e_minus)]])


def lower_branch(params: ModelParams, x):
    """Lower eigenvalue ``eps(x)`` of the 2x2 slow-mode Hamiltonian."""
    x2 = np.asarray(x, dtype=float) ** 2
    w = params.omega
    root = np.sqrt(params.Omega**2 + (params.ratio * w * x2) ** 2)
    eps = 0.5 * (w * x2 + 8.0 * params.a4 * x2 * x2 - root)
    return float(eps) if eps.ndim == 0 else eps


def branch_slope(params: ModelParams, x):
    """Derivative of :func:`lower_branch` with respect to ``x``."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    w = params.omega
    r2w2 = (params.ratio * w) ** 2
    root = np.sqrt(params.Omega**2 + r2w2 * x2 * x2)
    pull = r2w2 * x2 * x / np.where(root > 0, root, 1.0)
    return w * x + 16.0 * params.a4 * x2 * x - pull


def scaled_lower_branch(alpha4: float, ratio: float, u):
    """``eps / (Omega/2)`` as a function of ``u = (omega/Omega) x^2``.

    This is the slow-mode limit form: only ``alpha4`` and ``g2/g_T`` enter.
    """
    u = np.asarray(u, dtype=float)
    return u + 8.0 * alpha4 * u * u - np.sqrt(1.0 + (ratio * u) ** 2)


def sigma_x_at(params: ModelParams, x: float) -> float:
    """``<sigma_x>`` in the lower eigenvector of the 2x2 Hamiltonian at ``x``."""
    split = params.ratio * params.omega * x * x
    denom = math.hypot(params.Omega, split)
    if denom == 0.0:
        return 0.0
    return -params.Omega / denom


def _refine(params, lo, hi):
    """Bisect on the slope over ``[lo, hi]``, where it goes from - to +."""
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if branch_slope(params, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def minimize_branch(params: ModelParams) -> SemiclassicalSolution:
    """Global minimum of ``eps(x)`` over ``x >= 0``.

    Raises
    ------
    InstabilityError
        For ``A4 = 0`` and ``g2 > g_T``, where ``eps`` is unbounded below.
    """
    e0 = lower_branch(params, 0.0)
    ratio = params.ratio
    symmetric = SemiclassicalSolution(0.0, e0, e0, sigma_x_at(params, 0.0))
    if params.a4 == 0.0:
        if ratio > 1.0:
            raise InstabilityError(
                f"eps(x) unbounded below: A4 = 0 and g2/g_T = {ratio:.6g} > 1", g2=params.g2
            )
        return symmetric
    # the slope exceeds omega x (1 - ratio) + 16 A4 x^3, so nothing below zero for ratio <= 1
    if ratio <= 1.0:
        return symmetric

    x_max = 3.0 * math.sqrt(params.omega * (ratio - 1.0) / (16.0 * params.a4))
    xs = np.linspace(0.0, x_max, SCAN_POINTS)
    eps = lower_branch(params, xs)
    interior = np.flatnonzero((eps[1:-1] <= eps[:-2]) & (eps[1:-1] <= eps[2:])) + 1

    best_x, best_e = 0.0, e0
    for i in interior:
        x = _refine(params, xs[i - 1], xs[i + 1])
        e = lower_branch(params, x)
        if e < best_e:
            best_x, best_e = x, e
    if best_x <= BROKEN_X_MIN or not best_e < e0:
        return symmetric
    return SemiclassicalSolution(best_x, best_e, e0, sigma_x_at(params, best_x))


def critical_ratio_exact(alpha4: float) -> float:
    """Closed-form phase-boundary coupling ``g2c / g_T`` for quartic strength ``alpha4``.

    For ``alpha4 < 1/54`` the inner square root is imaginary; the formula is
    evaluated in complex arithmetic with the principal cube root, and the
    result is real to rounding.
    """
    a = float(alpha4)
    if a < 0 or not math.isfinite(a):
        raise ConfigError(f"alpha4 must be finite and non-negative, got {alpha4!r}")
    f = 1080.0 * a - 1.0 + 24.0 * (972.0 * a * a + cmath.sqrt(6.0 * a * (54.0 * a - 1.0) ** 3))
    cube = f ** (1.0 / 3.0)
    val = cmath.sqrt(2.0 / 3.0 + (1.0 + 432.0 * a) / (3.0 * cube) + cube / 3.0 + 16.0 * a)
    if abs(val.imag) > BRANCH_IMAG_TOL * max(1.0, abs(val.real)):
        raise ArithmeticError(f"complex residue {val.imag:.3e} at alpha4 = {a}")
    return val.real


def critical_ratio_small(alpha4: float) -> float:
    """Small-``alpha4`` expansion ``sqrt(1 + 8 sqrt(2 alpha4) + 24 alpha4)``."""
    a = float(alpha4)
    if a < 0:
        raise ConfigError(f"alpha4 must be non-negative, got {alpha4!r}")
    return math.sqrt(1.0 + 8.0 * math.sqrt(2.0 * a) + 24.0 * a)


def critical_ratio_large(alpha4: float) -> float:
    """Large-``alpha4`` expansion; has ``alpha4**(-1/3)`` terms so needs ``alpha4 > 0``."""
    a = float(alpha4)
    if not a > 0:
        raise ConfigError(f"large-alpha4 form needs alpha4 > 0, got {alpha4!r}")
    c = a ** (1.0 / 3.0)
    return math.sqrt(2.0 / 3.0 + 16.0 * a + 12.0 * c * c + 4.0 * c + 1.0 / (27.0 * c) - 1.0 / (324.0 * c * c))


def critical_ratio_numeric(alpha4: float, rtol: float = 1e-9, omega: float = 1.0, Omega: float = 1.0) -> float:
    """Phase boundary by bisection on :func:`minimize_branch` over ``g2``.

    Independent of the closed form: only the symmetric/broken verdict of the
    numeric minimizer is used.
    """
    if not alpha4 > 0:
        return 1.0
    base = ModelParams(omega=omega, Omega=Omega, g2=0.0, a4=alpha4 * omega**2 / Omega)
    g_t = base.g_t

    def broken(r):
        return not minimize_branch(base.with_(g2=r * g_t)).symmetric_phase

    lo, hi = 1.0, 2.0
    while not broken(hi):
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if broken(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass
class PhaseDiagram:
    a4_grid: np.ndarray
    g2_grid: np.ndarray
    sigma_x: np.ndarray  # shape (len(a4_grid), len(g2_grid))
    x_min: np.ndarray
    boundary_g2: np.ndarray  # analytic g2c for each A4
    failures: list


def phase_diagram(omega: float, Omega: float, a4_grid, g2_grid, chi: float = 1.0) -> PhaseDiagram:
    """``<sigma_x>`` at the slow-mode minimum over an ``(A4, g2)`` grid.

    Cells that cannot be evaluated are left as NaN and listed in
    ``failures`` with their coordinates.
    """
    a4_grid = np.asarray(a4_grid, dtype=float)
    g2_grid = np.asarray(g2_grid, dtype=float)
    if a4_grid.size == 0 or g2_grid.size == 0:
        raise ConfigError("phase diagram needs non-empty grids")
    for name, grid in (("a4", a4_grid), ("g2", g2_grid)):
        if np.any(np.diff(grid) <= 0):
            raise ConfigError(f"{name} grid must be strictly ascending")

    sx = np.full((a4_grid.size, g2_grid.size), np.nan)
    xm = np.full_like(sx, np.nan)
    boundary = np.empty(a4_grid.size)
    failures = []
    for i, a4 in enumerate(a4_grid):
        base = ModelParams(omega=omega, Omega=Omega, g2=0.0, chi=chi, a4=a4)
        boundary[i] = critical_ratio_exact(base.alpha4) * base.g_t
        for j, g2 in enumerate(g2_grid):
            try:
                sol = minimize_branch(base.with_(g2=g2))
            except InstabilityError as exc:
                failures.append({"a4": float(a4), "g2": float(g2), "error": str(exc)})
                continue
            sx[i, j] = sol.sigma_x_at_min
            xm[i, j] = sol.x_min
    return PhaseDiagram(a4_grid, g2_grid, sx, xm, boundary, failures)
