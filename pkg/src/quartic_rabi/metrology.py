"""Quantum Fisher information of the ground state and its peak.

``F_Q = 4 (<psi'|psi'> - |<psi'|psi>|^2)`` is evaluated from a central
difference of sign-aligned ground states.  The fidelity susceptibility is
computed on a separate path (forward overlap) and must agree with
``F_Q / 4``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ConfigError, ConvergenceError, DegeneracyError
from .model import ModelParams
from .spectrum import converged_spectrum, require_converged, spectrum_at

log = logging.getLogger(__name__)

PARAMETERS = ("g2", "omega", "Omega", "a4")
DEFAULT_STEP = 1e-5  # in units of g_T
DEGENERACY_FACTOR = 100.0
LEVELS = 4


def default_delta(params: ModelParams) -> float:
    return DEFAULT_STEP * params.g_t


def _shift(params: ModelParams, name: str, value: float) -> ModelParams:
    if name not in PARAMETERS:
        raise ConfigError(f"unknown parameter {name!r}; choose from {PARAMETERS}")
    return params.with_(**{name: value})


@dataclass
class _Triplet:
    """Ground states at ``lambda - delta``, ``lambda``, ``lambda + delta``."""

    minus: np.ndarray
    center: np.ndarray
    plus: np.ndarray
    cutoff: int
    sector_gap: float
    gap: float


def _align(vec, ref):
    return vec if np.dot(vec, ref) >= 0 else -vec


def _ground_triplet(params, name, delta, tol, **kwargs) -> _Triplet:
    if not delta > 0:
        raise ConfigError(f"finite-difference step must be positive, got {delta!r}")
    lam = getattr(params, name)
    if lam - delta < 0 and name in ("g2", "a4", "Omega"):
        raise ConfigError(f"{name} = {lam} is closer than one step to its lower bound")
    center = _converged(params, tol, **kwargs)
    sector = center.parities[0]
    sector_gap = center.sector_gap(0)
    if sector_gap < DEGENERACY_FACTOR * delta * params.omega:
        raise DegeneracyError(
            f"ground state nearly degenerate within its parity sector "
            f"(gap {sector_gap:.3e}) at {name} = {lam}",
            g2=params.g2,
        )
    n = center.cutoff_used
    ref = center.ground_state
    side = []
    for s in (-1, 1):
        res = spectrum_at(_shift(params, name, lam + s * delta), n, LEVELS)
        side.append(_align(_sector_ground(res, sector), ref))
    return _Triplet(
        minus=side[0],
        center=ref,
        plus=side[1],
        cutoff=n,
        sector_gap=sector_gap,
        gap=center.gap,
    )


def _converged(params, tol, **kwargs):
    kwargs.setdefault("track", 1)
    return require_converged(converged_spectrum(params, LEVELS, tol, **kwargs))


def _sector_ground(result, sector) -> np.ndarray:
    """Lowest eigenvector of ``result`` with photon parity ``sector``.

    Past the transition the even and odd ground levels become degenerate to
    rounding; following one sector keeps the probe state continuous.
    """
    idx = np.flatnonzero(result.parities == sector)
    if idx.size == 0:
        raise DegeneracyError("no level in the ground-state parity sector", g2=result.params.g2)
    return result.eigenvectors[:, idx[0]]


def qfi_from_states(minus, center, plus, delta) -> tuple[float, float]:
    """QFI from three sign-aligned states; also returns the overlap term.

    For real states the overlap term ``|<psi'|psi>|^2`` is second order in
    ``delta`` and should be negligible next to ``<psi'|psi'>``.
    """
    tangent = (np.asarray(plus) - np.asarray(minus)) / (2.0 * delta)
    norm2 = float(np.dot(tangent, tangent))
    overlap = float(np.dot(tangent, center))
    return 4.0 * (norm2 - overlap * overlap), overlap * overlap


def fidelity_from_states(center, shifted, delta) -> float:
    """``2 (1 - |<psi|psi_shift>|) / delta^2`` for real unit vectors.

    ``2 (1 - |<a|b>|) = |a - s b|^2`` with ``s = sign <a|b>`` avoids the
    cancellation in ``1 - |<a|b>|``.
    """
    center = np.asarray(center)
    shifted = _align(np.asarray(shifted), center)
    diff = center - shifted
    return float(np.dot(diff, diff)) / delta**2


def qfi_at(
    params: ModelParams,
    name: str = "g2",
    delta: float | None = None,
    tol: float = 1e-10,
    **kwargs,
) -> float:
    """Ground-state QFI with respect to parameter ``name`` at ``params``.

    Raises
    ------
    DegeneracyError
        The ground state has a same-parity neighbour closer than
        ``100 delta omega``.
    ConvergenceError
        The spectrum did not converge under cutoff doubling.
    """
    delta = default_delta(params) if delta is None else delta
    t = _ground_triplet(params, name, delta, tol, **kwargs)
    fq, overlap_term = qfi_from_states(t.minus, t.center, t.plus, delta)
    if overlap_term > 1e-6 * fq / 4.0 and fq > 0:
        log.warning("overlap term %.3e not negligible at %s=%g", overlap_term, name, getattr(params, name))
    return fq


def fidelity_susceptibility(
    params: ModelParams,
    delta: float | None = None,
    name: str = "g2",
    tol: float = 1e-10,
    **kwargs,
) -> float:
    """Fidelity susceptibility from the overlap of ground states at ``lambda`` and ``lambda + delta``."""
    delta = default_delta(params) if delta is None else delta
    lam = getattr(params, name)
    center = _converged(params, tol, **kwargs)
    shifted = spectrum_at(_shift(params, name, lam + delta), center.cutoff_used, LEVELS)
    return fidelity_from_states(center.ground_state, _sector_ground(shifted, center.parities[0]), delta)


@dataclass
class QfiCurve:
    g2_grid: np.ndarray
    fq: np.ndarray
    chi_f: np.ndarray
    peak_g2: float
    peak_fq: float
    delta_lambda: float
    gap: np.ndarray = field(default=None)
    cutoff: np.ndarray = field(default=None)

    @property
    def e_cr(self) -> np.ndarray:
        """Cramer-Rao error bound ``F_Q ** -1/2``."""
        with np.errstate(divide="ignore"):
            return 1.0 / np.sqrt(self.fq)

    @property
    def ln_fq(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.fq)

    @property
    def g2_over_peak(self) -> np.ndarray:
        return self.g2_grid / self.peak_g2


@dataclass
class _Point:
    fq: float
    chi_f: float
    gap: float
    cutoff: int


def _point(params, delta, tol, **kwargs) -> _Point:
    t = _ground_triplet(params, "g2", delta, tol, **kwargs)
    fq, _ = qfi_from_states(t.minus, t.center, t.plus, delta)
    chi = fidelity_from_states(t.center, t.plus, delta)
    return _Point(fq, chi, t.gap, t.cutoff)


def locate_peak(fq_func, g2_grid, fq_values, xtol: float = 1e-7) -> tuple[float, float]:
    """Refine the discrete maximum of ``fq_values`` by golden-section search.

    Raises ConfigError when the discrete maximum sits at a grid endpoint.
    """
    g2_grid = np.asarray(g2_grid, dtype=float)
    fq_values = np.asarray(fq_values, dtype=float)
    i = int(np.nanargmax(fq_values))
    if i == 0 or i == g2_grid.size - 1:
        raise ConfigError(
            f"QFI maximum at grid endpoint g2 = {g2_grid[i]:.6g}; widen the g2 grid"
        )
    a, b, c = g2_grid[i - 1], g2_grid[i], g2_grid[i + 1]
    res = optimize.minimize_scalar(
        lambda g: -fq_func(g), bracket=(a, b, c), method="golden", options={"xtol": xtol}
    )
    x, fx = float(res.x), float(-res.fun)
    if fx < fq_values[i]:
        return float(b), float(fq_values[i])
    return x, fx


def qfi_curve(
    params: ModelParams,
    g2_grid,
    delta: float | None = None,
    tol: float = 1e-10,
    refine: bool = True,
    **kwargs,
) -> QfiCurve:
    """QFI, fidelity susceptibility and gap over ``g2_grid`` plus the refined peak.

    ``params`` supplies everything except ``g2``.
    """
    grid = np.asarray(g2_grid, dtype=float)
    if grid.size < 3:
        raise ConfigError("QFI curve needs at least three grid points")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("g2 grid must be strictly ascending")
    delta = default_delta(params) if delta is None else delta

    points = [_point(params.with_(g2=float(g)), delta, tol, **kwargs) for g in grid]
    fq = np.array([p.fq for p in points])
    chi = np.array([p.chi_f for p in points])

    def f(g):
        return qfi_at(params.with_(g2=float(g)), "g2", delta, tol, **kwargs)

    if refine:
        peak_g2, peak_fq = locate_peak(f, grid, fq)
    else:
        i = int(np.argmax(fq))
        if i in (0, grid.size - 1):
            raise ConfigError(f"QFI maximum at grid endpoint g2 = {grid[i]:.6g}; widen the g2 grid")
        peak_g2, peak_fq = float(grid[i]), float(fq[i])
    return QfiCurve(
        g2_grid=grid,
        fq=fq,
        chi_f=chi,
        peak_g2=peak_g2,
        peak_fq=peak_fq,
        delta_lambda=delta,
        gap=np.array([p.gap for p in points]),
        cutoff=np.array([p.cutoff for p in points]),
    )


@dataclass(frozen=True)
class QfiPeak:
    g2: float
    fq: float
    at_stability_edge: bool = False


def find_qfi_peak(
    params: ModelParams,
    lo_ratio: float = 0.5,
    hi_ratio: float | None = None,
    points: int = 41,
    delta: float | None = None,
    tol: float = 1e-10,
    **kwargs,
) -> QfiPeak:
    """Locate ``g_{2c,omega}``, the coupling of maximal ground-state QFI.

    The search window is given in units of ``g_T``.  With ``A4 > 0`` it
    defaults to ``[0.5, 1.5 * g2c/g_T]`` using the slow-mode boundary.  With
    ``A4 = 0`` nothing beyond ``g_T`` is stable; if the QFI is still rising
    at ``g_T - 2 delta`` that edge point is returned with
    ``at_stability_edge`` set.
    """
    delta = default_delta(params) if delta is None else delta
    g_t = params.g_t
    edge = None
    if params.a4 == 0:
        edge = g_t - 2.0 * delta
        hi_g2 = edge if hi_ratio is None else min(hi_ratio * g_t, edge)
    else:
        from .semiclassical import critical_ratio_exact

        if hi_ratio is None:
            hi_ratio = max(1.5, 1.5 * critical_ratio_exact(params.alpha4))
        hi_g2 = hi_ratio * g_t
    grid = np.linspace(lo_ratio * g_t, hi_g2, points)

    def f(g):
        return qfi_at(params.with_(g2=float(g)), "g2", delta, tol, **kwargs)

    def scan(gs):
        out = []
        for g in gs:
            try:
                out.append(f(g))
            except (DegeneracyError, ConvergenceError) as exc:
                log.info("skipping g2=%g: %s", g, exc)
                out.append(np.nan)
        return np.array(out)

    fq = scan(grid)
    if np.all(np.isnan(fq)):
        raise ConvergenceError("no QFI point could be evaluated in the search window")
    i = int(np.nanargmax(fq))
    if edge is not None and i == grid.size - 1 and grid[-1] == edge:
        return QfiPeak(float(edge), float(fq[-1]), at_stability_edge=True)
    for _ in range(2):
        i = int(np.nanargmax(fq))
        if i == 0 or i == grid.size - 1:
            break
        grid = np.linspace(grid[i - 1], grid[i + 1], 11)
        fq = scan(grid)
    g, val = locate_peak(f, grid, fq)
    return QfiPeak(g, val)


def cramer_rao_bound(fq):
    fq = np.asarray(fq, dtype=float)
    if np.any(fq < 0):
        raise ValueError("QFI must be non-negative")
    with np.errstate(divide="ignore"):
        out = 1.0 / np.sqrt(fq)
    return float(out) if out.ndim == 0 else out


