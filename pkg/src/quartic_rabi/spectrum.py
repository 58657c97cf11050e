"""Diagonalization, cutoff convergence and gap curves."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigError, ConvergenceError, InstabilityError, SolverError
from .model import FockSpinBasis, HamiltonianMatrix, ModelParams, build_hamiltonian

log = logging.getLogger(__name__)

INITIAL_CUTOFF = 64
CEILING_CUTOFF = 4096
RESIDUAL_TOL = 1e-8
BANDED_MIN_SIZE = 600


@dataclass
class SpectrumResult:
    """Lowest eigenpairs of a Hamiltonian matrix.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``; ``parities[i]`` is
    the photon parity (+1 or -1) of that eigenvector.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    parities: np.ndarray
    basis: FockSpinBasis
    params: ModelParams | None = None
    converged: bool = True
    convergence_delta: float = 0.0
    history: list = field(default_factory=list)

    @property
    def cutoff_used(self) -> int:
        return self.basis.cutoff

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def sector_gap(self, level: int = 0) -> float:
        """Distance from ``level`` to the nearest level of the same parity.

        Returns ``inf`` when no other level of that parity was computed.
        """
        same = np.flatnonzero(self.parities == self.parities[level])
        others = self.eigenvalues[same[same != level]]
        if others.size == 0:
            return float("inf")
        return float(np.min(np.abs(others - self.eigenvalues[level])))

    def boundary_weight(self, level: int = 0) -> float:
        """Probability carried by the two highest Fock states of ``level``."""
        vec = self.eigenvectors[:, level]
        return float(np.sum(vec[-4:] ** 2))


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _bandwidth(block) -> int:
    coo = block.tocoo()
    return int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0


def _banded_lowest(block, m: int, bw: int):
    """Lowest ``m`` eigenpairs of a symmetric banded block.

    Eigenvalues come from the LAPACK banded solver; eigenvectors from
    inverse iteration with a banded LU, orthogonalized within clusters.
    """
    size = block.shape[0]
    upper = np.zeros((bw + 1, size))
    for d in range(bw + 1):
        upper[bw - d, d:] = block.diagonal(d)
    w = scipy.linalg.eig_banded(upper, eigvals_only=True, select="i", select_range=(0, m - 1))

    full = np.zeros((2 * bw + 1, size))
    for d in range(-bw, bw + 1):
        full[bw - d, max(d, 0):size + min(d, 0)] = block.diagonal(d)
    scale = max(1.0, float(abs(block).sum(axis=1).max()))
    rng = np.random.default_rng(0)
    vecs = np.empty((size, m))
    for i, lam in enumerate(w):
        shifted = full.copy()
        shifted[bw] -= lam + 1e-13 * scale
        x = rng.standard_normal(size)
        close = [j for j in range(i) if abs(w[j] - lam) < 1e-6 * scale]
        for _ in range(3):
            x = scipy.linalg.solve_banded((bw, bw), shifted, x, check_finite=False)
            for j in close:
                x -= np.dot(vecs[:, j], x) * vecs[:, j]
            x /= np.linalg.norm(x)
        vecs[:, i] = x
    return w, vecs


def solve_spectrum(hamiltonian: HamiltonianMatrix, k: int) -> SpectrumResult:
    """Lowest ``k`` eigenpairs of ``hamiltonian``.

    The photon-parity blocks are diagonalized separately, which halves the
    work and gives every eigenvector a definite parity even when an even and
    an odd level are nearly degenerate.  Large blocks are narrow-banded (the
    quartic term reaches four photons) and go through a banded solver.
    """
    h = hamiltonian.entries
    basis = hamiltonian.basis
    dim = h.shape[0]
    if k < 1 or k > dim:
        raise ConfigError(f"requested {k} levels from a matrix of dimension {dim}")

    parity = basis.parity_diagonal()
    values, vectors, labels = [], [], []
    for p in (1.0, -1.0):
        sel = np.flatnonzero(parity == p)
        block = h[sel][:, sel]
        m = min(k, sel.size)
        bw = _bandwidth(block)
        try:
            if sel.size >= BANDED_MIN_SIZE and 4 * bw < sel.size:
                w, v = _banded_lowest(block, m, bw)
            else:
                w, v = scipy.linalg.eigh(block.toarray(), subset_by_index=[0, m - 1], check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"eigensolver failed: {exc}") from exc
        full = np.zeros((dim, m))
        full[sel, :] = v
        values.append(w)
        vectors.append(full)
        labels.append(np.full(m, p))

    values = np.concatenate(values)
    vectors = np.concatenate(vectors, axis=1)
    labels = np.concatenate(labels)
    order = np.argsort(values, kind="stable")[:k]
    values, vectors, labels = values[order], fix_signs(vectors[:, order]), labels[order]

    # infinity norm bounds the spectral radius
    scale = max(1.0, float(abs(h).sum(axis=1).max()))
    resid = np.linalg.norm(h @ vectors - vectors * values, axis=0)
    if np.any(resid > RESIDUAL_TOL * scale):
        raise SolverError(f"eigenpair residual {resid.max():.3e} too large")

    return SpectrumResult(
        eigenvalues=values,
        eigenvectors=vectors,
        parities=labels.astype(int),
        basis=basis,
        params=hamiltonian.params,
    )


def spectrum_at(params: ModelParams, cutoff: int, k: int) -> SpectrumResult:
    """Build and solve at a fixed cutoff."""
    basis = FockSpinBasis(cutoff)
    return solve_spectrum(build_hamiltonian(params, basis), min(k, basis.dim))


def converged_spectrum(
    params: ModelParams,
    k: int,
    tol: float = 1e-8,
    *,
    initial_cutoff: int = INITIAL_CUTOFF,
    ceiling: int = CEILING_CUTOFF,
    track: int | None = None,
) -> SpectrumResult:
    """Double the cutoff until the lowest ``k`` levels stop moving.

    ``track`` restricts the convergence test to the lowest ``track`` levels
    (default: all ``k``).

    Returns the result at the last cutoff.  ``converged`` is False when the
    ceiling is reached first.  Parameters in the unbounded regime (A4 = 0,
    g2 > g_T) raise :class:`InstabilityError` instead of returning numbers
    that only reflect the truncation.
    """
    if not tol > 0:
        raise ConfigError(f"tol must be positive, got {tol!r}")
    if params.is_unstable():
        raise InstabilityError(
            f"A4 = 0 and g2/g_T = {params.ratio:.6g} > 1: spectrum unbounded below",
            g2=params.g2,
        )
    cutoff = max(int(initial_cutoff), 4)
    prev = spectrum_at(params, cutoff, k)
    history = [(cutoff, prev.ground_energy)]
    while True:
        nxt_cutoff = 2 * cutoff
        if nxt_cutoff > ceiling:
            prev.converged = False
            prev.convergence_delta = float("inf") if len(history) == 1 else prev.convergence_delta
            prev.history = history
            log.warning("cutoff ceiling %d reached at g2=%g", ceiling, params.g2)
            return prev
        cur = spectrum_at(params, nxt_cutoff, k)
        history.append((nxt_cutoff, cur.ground_energy))
        m = k if track is None else min(track, k)
        delta = float(np.max(np.abs(cur.eigenvalues[:m] - prev.eigenvalues[:m])))
        cur.convergence_delta = delta
        cur.history = history
        if delta < tol:
            cur.converged = True
            return cur
        prev, cutoff = cur, nxt_cutoff


def require_converged(result: SpectrumResult) -> SpectrumResult:
    if not result.converged:
        g2 = result.params.g2 if result.params is not None else None
        raise ConvergenceError(
            f"spectrum not converged at cutoff {result.cutoff_used} "
            f"(delta = {result.convergence_delta:.3e}, g2 = {g2})",
            g2=g2,
            delta=result.convergence_delta,
        )
    return result


def gap_curve(params: ModelParams, g2_grid, tol: float = 1e-8, **kwargs) -> list[tuple[float, float]]:
    """Excitation gap ``E1 - E0`` at every coupling in ``g2_grid``.

    ``params`` supplies everything except ``g2``.  A point that fails to
    converge raises :class:`ConvergenceError` naming its ``g2``.
    """
    grid = np.asarray(g2_grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("empty g2 grid")
    out = []
    for g2 in grid:
        res = converged_spectrum(params.with_(g2=float(g2)), 2, tol, **kwargs)
        require_converged(res)
        out.append((float(g2), res.gap))
    return out
