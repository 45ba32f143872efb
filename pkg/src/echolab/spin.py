"""Angular-momentum matrices, spin coherent states, and kicked-top maps.

Basis convention used throughout the package: the jz ladder is stored from
m = +J down to m = -J, so index 0 is the top of the ladder and diagonal
observables can be read straight off ``SpinOperators.m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import gammaln

__all__ = [
    "SpinOperators",
    "TopParams",
    "CoherentSpec",
    "m_values",
    "angular_momentum_matrices",
    "coherent_state",
    "top_propagator",
    "heisenberg_correlations",
]


def _spin_dimension(J: float) -> int:
    two_j = 2.0 * J
    if not np.isfinite(two_j) or round(two_j) != two_j or J < 0.5:
        raise ValueError(f"J must be a half-integer >= 1/2, got {J!r}")
    return int(round(two_j)) + 1


def m_values(J: float) -> np.ndarray:
    """jz eigenvalues ordered m = +J, J-1, ..., -J."""
    dim = _spin_dimension(J)
    return J - np.arange(dim, dtype=float)


@dataclass(frozen=True)
class SpinOperators:
    """Dense spin-J matrices in the descending-m basis.

    jplus/jminus carry the ladder elements sqrt(J(J+1) - m(m +- 1));
    jx = (jplus + jminus)/2 and jy = (jplus - jminus)/(2i) are Hermitian.
    """

    J: float
    dim: int
    m: np.ndarray
    jz: np.ndarray
    jplus: np.ndarray
    jminus: np.ndarray
    jx: np.ndarray
    jy: np.ndarray


def angular_momentum_matrices(J: float) -> SpinOperators:
    """Build the dense angular-momentum matrices for spin J."""
    dim = _spin_dimension(J)
    m = m_values(J)
    # raising element out of |m> lands one index earlier (descending order)
    c = np.sqrt(J * (J + 1.0) - m[1:] * (m[1:] + 1.0))
    jplus = np.zeros((dim, dim))
    jplus[np.arange(dim - 1), np.arange(1, dim)] = c
    jminus = jplus.T.copy()
    ops = SpinOperators(
        J=float(J),
        dim=dim,
        m=m,
        jz=np.diag(m),
        jplus=jplus,
        jminus=jminus,
        jx=(jplus + jminus) / 2.0,
        jy=(jplus - jminus) / 2.0j,
    )
    for arr in (ops.m, ops.jz, ops.jplus, ops.jminus, ops.jx, ops.jy):
        arr.setflags(write=False)
    return ops


@dataclass(frozen=True)
class CoherentSpec:
    """Direction (theta, phi) of a spin coherent state on the unit sphere."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(self.phi)):
            raise ValueError("coherent-state angles must be finite")
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta!r}")

    def direction(self) -> np.ndarray:
        """Unit vector (sin t cos p, sin t sin p, cos t)."""
        st = np.sin(self.theta)
        return np.array(
            [st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)]
        )


def coherent_state(J: float, spec: CoherentSpec) -> np.ndarray:
    """Spin coherent state pointing along ``spec``, over the descending-m basis.

    The amplitude on |m> is
    binom(2J, J+m)^(1/2) cos(theta/2)^(J+m) sin(theta/2)^(J-m) e^(-i m phi).
    Magnitudes are accumulated in log space, so binomials at J of a few
    hundred do not overflow; the result is normalized to remove rounding.
    """
    m = m_values(J)
    kp = np.round(J + m).astype(int)
    km = np.round(J - m).astype(int)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_cos = np.log(np.cos(spec.theta / 2.0))
        log_sin = np.log(np.sin(spec.theta / 2.0))
        log_mag = (
            0.5 * (gammaln(2.0 * J + 1.0) - gammaln(kp + 1.0) - gammaln(km + 1.0))
            + np.where(kp == 0, 0.0, kp * log_cos)
            + np.where(km == 0, 0.0, km * log_sin)
        )
    amp = np.exp(log_mag) * np.exp(-1j * m * spec.phi)
    return amp / np.linalg.norm(amp)


@dataclass(frozen=True)
class TopParams:
    """One kicked top: torsion strength alpha, rotation angle gamma, spin J.

    The effective Planck constant is tied to the spin size, hbar_eff = 1/J,
    and is exposed as a derived property so the two can never drift apart.
    """

    alpha: float
    gamma: float
    J: float

    def __post_init__(self):
        _spin_dimension(self.J)
        if not (np.isfinite(self.alpha) and np.isfinite(self.gamma)):
            raise ValueError("alpha and gamma must be finite")

    @property
    def dim(self) -> int:
        return _spin_dimension(self.J)

    @property
    def hbar_eff(self) -> float:
        return 1.0 / self.J


def top_propagator(p: TopParams) -> np.ndarray:
    """One-kick map: torsion exp(-i alpha jz^2 / 2J), then rotation by gamma
    about y.

    The rotation factor comes from the eigendecomposition of jy, exact to
    machine precision and computed once per parameter set.
    """
    ops = angular_momentum_matrices(p.J)
    w, q = np.linalg.eigh(ops.jy)
    rotation = (q * np.exp(-1j * p.gamma * w)) @ q.conj().T
    torsion = np.exp(-1j * p.alpha * ops.m**2 / (2.0 * p.J))
    return rotation * torsion[np.newaxis, :]


def heisenberg_correlations(
    U: np.ndarray, V: np.ndarray, psi0: np.ndarray, tmax: int
) -> tuple[np.ndarray, np.ndarray]:
    """Two-time correlation table of a Heisenberg-evolved observable.

    Returns ``(corr, mean)`` with

        corr[xi, zeta] = <psi0| V(xi) V(zeta) |psi0>,
        mean[xi]       = <psi0| V(xi) |psi0>,

    where V(t) = U^(-t) V U^t and xi, zeta run over 0 .. tmax-1.  corr is
    Hermitian as a matrix in (xi, zeta).

    Works in the eigenbasis of U obtained from a complex Schur factorization
    (diagonal for unitary input), so the cost is one factorization plus one
    matrix-vector product per time step instead of repeated back-evolution.
    """
    U = np.asarray(U)
    V = np.asarray(V)
    psi0 = np.asarray(psi0, dtype=complex)
    n = U.shape[0]
    if U.shape != (n, n) or V.shape != (n, n) or psi0.shape != (n,):
        raise ValueError("dimension mismatch between propagator, observable, and state")
    if tmax < 1:
        raise ValueError("tmax must be at least 1")
    T, S = scipy.linalg.schur(U, output="complex")
    lam = np.diag(T).copy()
    off = float(np.abs(T - np.diag(lam)).max())
    if off > 1e-8 or float(np.abs(np.abs(lam) - 1.0).max()) > 1e-8:
        raise ValueError("propagator is not unitary (Schur form is not diagonal)")
    v_eig = S.conj().T @ V @ S
    psi_eig = S.conj().T @ psi0
    block = np.empty((n, tmax), dtype=complex)
    phases = np.ones(n, dtype=complex)
    for t in range(tmax):
        block[:, t] = np.conj(phases) * (v_eig @ (phases * psi_eig))
        phases = phases * lam
    corr = block.conj().T @ block
    mean = psi_eig.conj() @ block
    return corr, mean
