"""Position-space spin components and ground-state observables."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .model import FockSpinBasis, check_normalized

log = logging.getLogger(__name__)

DEFAULT_POINTS = 1024
TAIL_MARGIN = 4.0
CAPTURE_MIN = 0.999
BOUNDARY_WEIGHT_WARN = 1e-8

_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


@dataclass
class PositionWavefunction:
    x_grid: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return self.psi_plus**2 + self.psi_minus**2

    @property
    def norm_check(self) -> float:
        return float(np.trapezoid(self.density, self.x_grid))

    def moment(self, power: int = 2) -> float:
        return float(np.trapezoid(self.x_grid**power * self.density, self.x_grid))


def default_grid(cutoff: int, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Uniform grid reaching past the turning point of Fock state ``cutoff``."""
    half = math.sqrt(2 * cutoff + 1) + TAIL_MARGIN
    return np.linspace(-half, half, points)


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``phi_0 .. phi_{n_max}`` on ``x``.

    Uses ``phi_{n+1} = x sqrt(2/(n+1)) phi_n - sqrt(n/(n+1)) phi_{n-1}``.  The
    Gaussian factor is applied at the end, with a running log-scale so that
    neither it nor the polynomial part over- or underflows for large ``n``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    for n, (vals, logs) in enumerate(_recurrence(n_max, x)):
        out[n] = vals * np.exp(logs - 0.5 * x * x)
    return out


def _recurrence(n_max, x):
    prev = np.zeros_like(x)
    cur = np.full_like(x, math.pi**-0.25)
    logs = np.zeros_like(x)
    yield cur, logs
    for n in range(n_max):
        nxt = x * math.sqrt(2.0 / (n + 1)) * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            prev = np.where(big, prev / _RESCALE, prev)
            cur = np.where(big, cur / _RESCALE, cur)
            logs = logs + np.where(big, _LOG_RESCALE, 0.0)
        yield cur, logs


def to_position(state, basis: FockSpinBasis, x_grid=None) -> PositionWavefunction:
    """Expand a Fock-spin state into ``psi_+(x)`` and ``psi_-(x)``.

    Raises ValueError if the grid captures less than 99.9% of the norm.
    """
    state = check_normalized(state)
    up, down = basis.split(state)
    x = default_grid(basis.cutoff) if x_grid is None else np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("x grid must be one-dimensional and strictly ascending")

    psi_up = np.zeros_like(x)
    psi_down = np.zeros_like(x)
    for n, (vals, logs) in enumerate(_recurrence(basis.cutoff, x)):
        if up[n] == 0.0 and down[n] == 0.0:
            continue
        phi = vals * np.exp(logs - 0.5 * x * x)
        psi_up += up[n] * phi
        psi_down += down[n] * phi

    wf = PositionWavefunction(x, psi_up, psi_down)
    if wf.norm_check < CAPTURE_MIN:
        raise ValueError(f"x grid captures only {wf.norm_check:.6f} of the norm; widen it")
    return wf


def observable_sigma_x(state, basis: FockSpinBasis) -> float:
    """``<sigma_x> = 2 sum_n c_{n,+} c_{n,-}``."""
    state = check_normalized(state)
    up, down = basis.split(state)
    return float(2.0 * np.dot(up, down))


def x2_operator(cutoff: int) -> np.ndarray:
    """Fock matrix of ``x^2 = (a + a^dag)^2 / 2``."""
    n = np.arange(cutoff + 1, dtype=float)
    off = 0.5 * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    return np.diag(n + 0.5) + np.diag(off, 2) + np.diag(off, -2)


def observable_x2(state, basis: FockSpinBasis) -> float:
    """``<x^2>`` summed over both spin components.

    Logs a warning when the top Fock state carries weight above 1e-8, since
    the truncation then contaminates the result.
    """
    state = check_normalized(state)
    up, down = basis.split(state)
    edge = up[-1] ** 2 + down[-1] ** 2
    if edge > BOUNDARY_WEIGHT_WARN:
        log.warning("Fock cutoff %d carries weight %.3e; <x^2> unreliable", basis.cutoff, edge)
    n = np.arange(basis.n_fock, dtype=float)
    diag = n + 0.5
    off = 0.5 * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    total = 0.0
    for c in (up, down):
        total += np.dot(diag, c * c) + 2.0 * np.dot(off, c[:-2] * c[2:])
    return float(total)
