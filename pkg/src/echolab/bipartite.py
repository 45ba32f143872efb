"""Composite pure states on a system x environment product space.

Amplitudes live in an (N_s, N_e) matrix with the row index addressing the
system, so a reduction over the environment is the row Gram matrix and a
separable unitary acts as a left/right matrix product.  No operation here
materializes the N_s N_e x N_s N_e composite operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CompositeState",
    "ReducedDensity",
    "product_state",
    "apply_separable",
    "apply_diagonal_coupling",
    "apply_product_coupling",
    "partial_trace_env",
    "partial_trace_sys",
    "purity",
    "reduced_purity",
    "overlap",
]

_NORM_TOL = 1e-10


@dataclass
class CompositeState:
    """Pure state of system + environment, amplitudes indexed (i, nu)."""

    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.ascontiguousarray(self.amps, dtype=complex)
        if self.amps.ndim != 2:
            raise ValueError("amplitudes must form a 2-d system x environment array")

    @property
    def dims(self) -> tuple[int, int]:
        return self.amps.shape

    @property
    def vector(self) -> np.ndarray:
        """Flat view, contiguous by environment index."""
        return self.amps.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "CompositeState":
        return CompositeState(self.amps.copy())

    def swap_subsystems(self) -> "CompositeState":
        """Same state with the roles of system and environment exchanged."""
        return CompositeState(self.amps.T.copy())


@dataclass
class ReducedDensity:
    """Reduced density matrix of one subsystem."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (self.dim, self.dim):
            raise ValueError("density matrix shape does not match dim")

    def validate(self, herm_tol=1e-12, trace_tol=1e-10, eig_tol=1e-10) -> None:
        """Raise if not numerically Hermitian, unit trace, positive."""
        herm = float(np.abs(self.matrix - self.matrix.conj().T).max())
        if herm > herm_tol:
            raise ValueError(f"matrix not Hermitian: max deviation {herm:.3e}")
        tr = complex(np.trace(self.matrix))
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace is {tr}, expected 1")
        lo = float(np.linalg.eigvalsh(self.matrix).min())
        if lo < -eig_tol:
            raise ValueError(f"negative eigenvalue {lo:.3e}")


def product_state(psi_s: np.ndarray, psi_e: np.ndarray) -> CompositeState:
    """Unentangled state psi_s (x) psi_e from normalized factors."""
    psi_s = np.asarray(psi_s, dtype=complex)
    psi_e = np.asarray(psi_e, dtype=complex)
    for name, v in (("system", psi_s), ("environment", psi_e)):
        if v.ndim != 1:
            raise ValueError(f"{name} factor must be a vector")
        if abs(np.linalg.norm(v) - 1.0) > _NORM_TOL:
            raise ValueError(f"{name} factor is not normalized")
    return CompositeState(np.outer(psi_s, psi_e))


def apply_separable(Us: np.ndarray, Ue: np.ndarray, state: CompositeState) -> CompositeState:
    """Act with Us (x) Ue: the amplitude matrix A becomes Us A Ue^T."""
    ns, ne = state.dims
    Us = np.asarray(Us)
    Ue = np.asarray(Ue)
    if Us.shape != (ns, ns) or Ue.shape != (ne, ne):
        raise ValueError("operator dimensions do not match the state")
    return CompositeState(Us @ state.amps @ Ue.T)


def apply_diagonal_coupling(
    phase_s: np.ndarray, phase_e: np.ndarray, strength: float, state: CompositeState
) -> CompositeState:
    """Act with exp(-i strength Vs (x) Ve) for diagonal factors.

    phase_s and phase_e hold the diagonal values of Vs and Ve; each amplitude
    (i, nu) picks up exp(-i strength phase_s[i] phase_e[nu]).
    """
    ns, ne = state.dims
    phase_s = np.asarray(phase_s, dtype=float)
    phase_e = np.asarray(phase_e, dtype=float)
    if phase_s.shape != (ns,) or phase_e.shape != (ne,):
        raise ValueError("phase vectors do not match the state dimensions")
    phases = np.exp(-1j * strength * np.outer(phase_s, phase_e))
    return CompositeState(phases * state.amps)


def apply_product_coupling(
    Vs: np.ndarray, Ve: np.ndarray, strength: float, state: CompositeState
) -> CompositeState:
    """exp(-i strength Vs (x) Ve) for general Hermitian factors.

    Each factor is diagonalized once and the diagonal path runs in the shared
    eigenbasis.
    """
    ns, ne = state.dims
    Vs = np.asarray(Vs)
    Ve = np.asarray(Ve)
    if Vs.shape != (ns, ns) or Ve.shape != (ne, ne):
        raise ValueError("operator dimensions do not match the state")
    ws, qs = np.linalg.eigh(Vs)
    we, qe = np.linalg.eigh(Ve)
    rotated = CompositeState(qs.conj().T @ state.amps @ qe.conj())
    coupled = apply_diagonal_coupling(ws, we, strength, rotated)
    return CompositeState(qs @ coupled.amps @ qe.T)


def partial_trace_env(state: CompositeState) -> ReducedDensity:
    """Trace out the environment: rho_s = A A^dagger."""
    return ReducedDensity(dim=state.dims[0], matrix=state.amps @ state.amps.conj().T)


def partial_trace_sys(state: CompositeState) -> ReducedDensity:
    """Trace out the system; same code path over the swapped layout."""
    return partial_trace_env(state.swap_subsystems())


def purity(rho: ReducedDensity) -> float:
    """tr(rho^2), which for Hermitian rho is the squared Frobenius norm."""
    m = rho.matrix
    return float(np.sum(m.real**2 + m.imag**2))


def reduced_purity(state: CompositeState) -> float:
    """Purity of the environment-traced state via singular values.

    Equals sum_k s_k^4 over the singular values of the amplitude matrix; no
    density matrix is formed.
    """
    sv = np.linalg.svd(state.amps, compute_uv=False)
    return float(np.sum(sv**4))


def overlap(a: CompositeState, b: CompositeState) -> complex:
    """Inner product <a|b>; its squared modulus is the pure-state fidelity."""
    if a.dims != b.dims:
        raise ValueError("states have different dimensions")
    return complex(np.vdot(a.amps, b.amps))
