"""Model parameters, the Fock-spin basis and the Hamiltonian matrix.

The Hamiltonian is

    H = omega a^dag a + (Omega/2) sigma_x
        + g2 sigma_z [a^dag^2 + a^2 + chi (2 a^dag a + 1)]
        + A4 (a^dag + a)^4

in a truncated Fock space tensored with a spin-1/2.  Basis states are
ordered ``(n, sigma_z)`` with ``n`` major and ``sigma_z = +, -`` minor, so
state ``|n, +>`` has index ``2n`` and ``|n, ->`` has index ``2n + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

MIN_CUTOFF = 4
AUX_MARGIN = 4
NORM_TOL = 1e-8

SPIN_UP = +1
SPIN_DOWN = -1


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the stabilized two-photon Rabi model.

    Energies are in arbitrary but common units; the CLI uses ``Omega = 1``.
    """

    omega: float
    Omega: float
    g2: float
    chi: float = 1.0
    a4: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigError(f"omega must be positive, got {self.omega!r}")
        if self.Omega < 0:
            raise ConfigError(f"Omega must be non-negative, got {self.Omega!r}")
        if self.g2 < 0:
            raise ConfigError(f"g2 must be non-negative, got {self.g2!r}")
        if self.a4 < 0:
            raise ConfigError(f"a4 must be non-negative, got {self.a4!r}")
        if self.chi <= -1:
            raise ConfigError(f"chi must exceed -1, got {self.chi!r}")

    @property
    def g_t(self) -> float:
        """Spectral-collapse coupling ``omega / (2 (1 + chi))``."""
        return self.omega / (2.0 * (1.0 + self.chi))

    @property
    def alpha4(self) -> float:
        """Dimensionless quartic strength ``A4 Omega / omega**2``."""
        return self.a4 * self.Omega / self.omega**2

    @property
    def ratio(self) -> float:
        """Coupling in units of the collapse point, ``g2 / g_T``."""
        return self.g2 / self.g_t

    def effective_mass(self, sigma: int) -> float:
        """Effective mass of the spin-``sigma`` oscillator (1 at ``chi = 1``)."""
        _check_sigma(sigma)
        return 1.0 / (1.0 - sigma * (1.0 - self.chi) / (1.0 + self.chi) * self.ratio)

    def is_unstable(self) -> bool:
        """True when the spectrum is unbounded below (A4 = 0 past g_T)."""
        return self.a4 == 0.0 and self.g2 > self.g_t

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "Omega": self.Omega,
            "g2": self.g2,
            "chi": self.chi,
            "a4": self.a4,
        }


@dataclass(frozen=True)
class FockSpinBasis:
    """Fock states ``0..cutoff`` tensored with a two-level spin."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < MIN_CUTOFF:
            raise ConfigError(
                f"cutoff must be an integer >= {MIN_CUTOFF}, got {self.cutoff!r}"
            )

    @property
    def aux_cutoff(self) -> int:
        return self.cutoff + AUX_MARGIN

    @property
    def n_fock(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return 2 * self.n_fock

    def index(self, n: int, sigma: int) -> int:
        _check_sigma(sigma)
        if not 0 <= n <= self.cutoff:
            raise IndexError(f"photon number {n} outside 0..{self.cutoff}")
        return 2 * n + (0 if sigma == SPIN_UP else 1)

    def photon_numbers(self) -> np.ndarray:
        """Photon number of every basis state, in basis order."""
        return np.repeat(np.arange(self.n_fock), 2)

    def spin_values(self) -> np.ndarray:
        """``sigma_z`` eigenvalue of every basis state, in basis order."""
        return np.tile(np.array([SPIN_UP, SPIN_DOWN]), self.n_fock)

    def parity_diagonal(self) -> np.ndarray:
        """Diagonal of the photon parity operator ``exp(i pi a^dag a)``."""
        return np.where(self.photon_numbers() % 2 == 0, 1.0, -1.0)

    def fock_state(self, n: int, sigma: int) -> np.ndarray:
        state = np.zeros(self.dim)
        state[self.index(n, sigma)] = 1.0
        return state

    def split(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return the spin-up and spin-down Fock amplitude columns."""
        state = np.asarray(state)
        if state.shape != (self.dim,):
            raise ValueError(f"state has shape {state.shape}, expected ({self.dim},)")
        return state[0::2], state[1::2]


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Sparse real symmetric Hamiltonian in the ``(n, sigma_z)`` basis."""

    entries: sp.csr_matrix
    basis: FockSpinBasis
    params: ModelParams = field(repr=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def toarray(self) -> np.ndarray:
        return self.entries.toarray()


def _check_sigma(sigma):
    if sigma not in (SPIN_UP, SPIN_DOWN):
        raise ValueError(f"spin sign must be +1 or -1, got {sigma!r}")


def annihilation(n_fock: int) -> sp.csr_matrix:
    """Matrix of ``a`` on Fock states ``0..n_fock-1``."""
    return sp.diags(np.sqrt(np.arange(1, n_fock, dtype=float)), offsets=1, format="csr")


def quadrature_powers(cutoff: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Exact matrices of ``(a^dag + a)^2`` and ``(a^dag + a)^4`` up to ``cutoff``.

    Powers are taken in a basis enlarged by ``AUX_MARGIN`` states and then
    truncated, so every retained element equals the untruncated operator's.
    """
    n_aux = cutoff + AUX_MARGIN + 1
    a = annihilation(n_aux)
    x = a + a.T
    x2 = x @ x
    x4 = x2 @ x2
    keep = cutoff + 1
    return x2[:keep, :keep].tocsr(), x4[:keep, :keep].tocsr()


def coupling_operator(cutoff: int, chi: float = 1.0) -> sp.csr_matrix:
    """Fock matrix of ``a^dag^2 + a^2 + chi (2 a^dag a + 1)``."""
    n_aux = cutoff + AUX_MARGIN + 1
    a = annihilation(n_aux)
    keep = cutoff + 1
    pair = (a.T @ a.T + a @ a)[:keep, :keep]
    number = np.arange(keep, dtype=float)
    return (pair + chi * sp.diags(2.0 * number + 1.0)).tocsr()


def build_hamiltonian(params: ModelParams, basis: FockSpinBasis) -> HamiltonianMatrix:
    """Assemble the Hamiltonian matrix in the ``(n, sigma_z)`` basis.

    Parameters
    ----------
    params : ModelParams
        Physical parameters; ``chi = 1`` gives ``g2 sigma_z (a^dag + a)^2``.
    basis : FockSpinBasis
        Truncated basis. Operator powers are formed at ``basis.aux_cutoff``.

    Returns
    -------
    HamiltonianMatrix
        Real symmetric matrix of dimension ``2 (cutoff + 1)``.
    """
    if not isinstance(basis, FockSpinBasis):
        basis = FockSpinBasis(int(basis))
    keep = basis.n_fock
    number = sp.diags(np.arange(keep, dtype=float))
    _, x4 = quadrature_powers(basis.cutoff)
    coupling = coupling_operator(basis.cutoff, params.chi)

    sigma_z = sp.diags([1.0, -1.0])
    sigma_x = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    eye_f = sp.identity(keep)
    eye_s = sp.identity(2)

    # n major, spin minor: kron(fock, spin)
    h = params.omega * sp.kron(number, eye_s)
    h = h + 0.5 * params.Omega * sp.kron(eye_f, sigma_x)
    h = h + params.g2 * sp.kron(coupling, sigma_z)
    if params.a4:
        h = h + params.a4 * sp.kron(x4, eye_s)
    h = (0.5 * (h + h.T)).tocsr()
    h.eliminate_zeros()
    return HamiltonianMatrix(entries=h, basis=basis, params=params)


def effective_potential(params: ModelParams, sigma: int, x):
    """Spin-resolved potential ``v(x) = omega/2 (1 + sigma g2/g_T) x^2 + 4 A4 x^4``.

    This is the diagonal part of the ``Omega = 0`` problem in position
    representation, with ``a^dag = (x - i p)/sqrt(2)``.
    """
    _check_sigma(sigma)
    x = np.asarray(x, dtype=float)
    x2 = x * x
    v = 0.5 * params.omega * (1.0 + sigma * params.ratio) * x2 + 4.0 * params.a4 * x2 * x2
    return float(v) if v.ndim == 0 else v


def check_normalized(state: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm = {norm:.12g})")
    return state


def parity_expectation(state: np.ndarray, basis: FockSpinBasis) -> float:
    """Expectation value of photon parity, ``sum (-1)^n |c_{n,s}|^2``."""
    state = check_normalized(state)
    if state.shape != (basis.dim,):
        raise ValueError(f"state has shape {state.shape}, expected ({basis.dim},)")
    return float(np.dot(basis.parity_diagonal(), state * state))
