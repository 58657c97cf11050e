"""Probe-state preparation time ``T = int_0^1 dg / Delta(g * g2c)``."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import ConfigError, ConvergenceError
from .model import ModelParams
from .spectrum import converged_spectrum, require_converged

log = logging.getLogger(__name__)

GAP_FLOOR = 1e-10
MAX_DEPTH = 30


@dataclass
class PtpsResult:
    time: float
    g2c_omega: float
    quadrature_points: int
    estimated_error: float
    nodes: list = field(default_factory=list)  # (g_bar, gap, sector_gap, excited_parity)
    parity_crossing: bool = False


def adaptive_simpson(func, a: float, b: float, tol: float, *, relative: bool = False,
                     min_depth: int = 2, max_depth: int = MAX_DEPTH):
    """Adaptive Simpson quadrature of ``func`` over ``[a, b]``.

    Each abscissa is evaluated once.  With ``relative`` the tolerance is
    scaled by the magnitude of the first Simpson estimate.  Returns
    ``(integral, error_estimate, evaluations)``; the error estimate sums the
    local Richardson terms ``|S2 - S1| / 15``.
    """
    cache = {}

    def f(x):
        if x not in cache:
            cache[x] = float(func(x))
        return cache[x]

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        flm, frm = f(0.5 * (lo + mid)), f(0.5 * (mid + hi))
        left = simpson(lo, mid, flo, flm, fmid)
        right = simpson(mid, hi, fmid, frm, fhi)
        diff = left + right - whole
        if depth >= min_depth and abs(diff) <= 15.0 * eps:
            return left + right + diff / 15.0, abs(diff) / 15.0
        if depth >= max_depth:
            raise ConvergenceError(f"adaptive Simpson did not converge on [{lo}, {hi}]")
        lv, le = recurse(lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1)
        rv, re = recurse(mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1)
        return lv + rv, le + re

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, fa, fm, fb)
    eps = tol * abs(whole) if relative else tol
    value, err = recurse(a, b, fa, fm, fb, whole, eps, 0)
    return value, err, len(cache)


def integrate_inverse_gap(gap_func, tol: float = 1e-6) -> tuple[float, float, int]:
    """``int_0^1 dg / gap_func(g)`` to relative tolerance ``tol``.

    ``gap_func`` is any callable of the rescaled coupling, so synthetic gaps
    can be integrated as well.
    """
    if not tol > 0:
        raise ConfigError(f"tol must be positive, got {tol!r}")

    def inverse(g):
        d = gap_func(g)
        if not d > GAP_FLOOR:
            raise ConvergenceError(f"gap {d:.3e} below floor at rescaled coupling {g:.6g}")
        return 1.0 / d

    return adaptive_simpson(inverse, 0.0, 1.0, tol, relative=True)


def ptps(
    params: ModelParams,
    g2c_omega: float | None = None,
    tol: float = 1e-6,
    gap_tol: float = 1e-8,
    **kwargs,
) -> PtpsResult:
    """Preparation time for the probe state at coupling ``g2c_omega``.

    ``params`` supplies ``omega``, ``Omega``, ``chi`` and ``A4``; its ``g2``
    is ignored.  When ``g2c_omega`` is omitted it is located as the QFI peak.
    The integrand uses the global gap ``E1 - E0``; the same-parity gap and
    the first excited state's parity are kept per node, and a change of that
    parity along the ramp sets ``parity_crossing``.
    """
    if g2c_omega is None:
        from .metrology import find_qfi_peak

        g2c_omega = find_qfi_peak(params.with_(g2=0.0)).g2
    if not g2c_omega > 0:
        raise ConfigError(f"g2c_omega must be positive, got {g2c_omega!r}")
    kwargs.setdefault("track", 2)

    nodes = {}

    def gap(g_bar):
        res = converged_spectrum(params.with_(g2=g_bar * g2c_omega), 4, gap_tol, **kwargs)
        require_converged(res)
        nodes[g_bar] = (g_bar, res.gap, res.sector_gap(0), int(res.parities[1]))
        return res.gap

    value, err, n = integrate_inverse_gap(gap, tol)
    ordered = [nodes[k] for k in sorted(nodes)]
    crossing = len({node[3] for node in ordered}) > 1
    if crossing:
        log.warning("first excited state changes parity along the ramp")
    return PtpsResult(
        time=value,
        g2c_omega=float(g2c_omega),
        quadrature_points=n,
        estimated_error=err,
        nodes=ordered,
        parity_crossing=crossing,
    )
