"""Paired evolutions of two coupled kicked tops and their stability measures.

One kick of the coupled map applies the coupling phase first and the two
single-top kicks second.  The uncoupled reference evolution stays a product
state and is kept in factored form, which makes the reduced fidelity a single
quadratic form: with G = rho_s,delta the coupled reduction,

    F[t]  = |<psi(t)|psi_delta(t)>|^2
    FR[t] = <psi_s(t)| G |psi_s(t)>          (tr of rho_s rho_s,delta, rho_s pure)
    I[t]  = ||G||_F^2                        (tr G^2)
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .bipartite import CompositeState
from .spin import CoherentSpec, TopParams, coherent_state, m_values, top_propagator

__all__ = [
    "Perturbation",
    "CoupledConfig",
    "StabilitySeries",
    "SaturationEstimate",
    "evolve_pair",
    "echo_state",
    "saturation_estimate",
]


class Perturbation(Enum):
    """Coupling generator on one side, diagonal in the jz ladder."""

    JZ_OVER_J = "jz/J"
    JZ2_OVER_J2 = "jz2/J2"

    def diagonal_values(self, J: float) -> np.ndarray:
        scaled = m_values(J) / J
        if self is Perturbation.JZ_OVER_J:
            return scaled
        return scaled**2

    def matrix(self, J: float) -> np.ndarray:
        return np.diag(self.diagonal_values(J))


@dataclass(frozen=True)
class CoupledConfig:
    """Two kicked tops, a product coupling Vs (x) Ve, and an initial packet.

    The coupling phase per kick is exp(-i (delta/hbar) Vs Ve) with
    hbar = 1/J of the system top; equal spins on both sides keep one hbar,
    unequal spins are allowed but flagged.
    """

    sys: TopParams
    env: TopParams
    v_sys: Perturbation
    v_env: Perturbation
    delta: float
    init_sys: CoherentSpec
    init_env: CoherentSpec
    tmax: int

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta < 0.0:
            raise ValueError("delta must be finite and non-negative")
        if self.tmax < 1:
            raise ValueError("tmax must be at least 1")
        if self.sys.J != self.env.J:
            warnings.warn(
                "subsystems have unequal J; the coupling phase uses hbar = 1/J_sys",
                stacklevel=2,
            )

    @property
    def hbar(self) -> float:
        return self.sys.hbar_eff

    @property
    def coupling_strength(self) -> float:
        """delta / hbar = delta * J_sys."""
        return self.delta * self.sys.J

    def param_dict(self) -> dict:
        """Physical parameters in a fixed order, for hashing and manifests."""
        return {
            "J_sys": self.sys.J,
            "alpha_sys": self.sys.alpha,
            "gamma_sys": self.sys.gamma,
            "J_env": self.env.J,
            "alpha_env": self.env.alpha,
            "gamma_env": self.env.gamma,
            "v_sys": self.v_sys.value,
            "v_env": self.v_env.value,
            "delta": self.delta,
            "theta_sys": self.init_sys.theta,
            "phi_sys": self.init_sys.phi,
            "theta_env": self.init_env.theta,
            "phi_env": self.init_env.phi,
            "tmax": self.tmax,
        }

    def config_hash(self) -> str:
        text = ";".join(
            f"{k}={v:.17g}" if isinstance(v, float) else f"{k}={v}"
            for k, v in self.param_dict().items()
        )
        return hashlib.sha1(text.encode()).hexdigest()[:12]


@dataclass
class StabilitySeries:
    """Per-kick stability measures for t = 0 .. tmax.

    F is the squared overlap of the coupled and uncoupled states, FR the
    Hilbert-Schmidt product of the two reduced density matrices, I the purity
    of the coupled reduction.
    """

    t: np.ndarray
    F: np.ndarray
    FR: np.ndarray
    I: np.ndarray
    config_hash: str = ""

    @property
    def F2(self) -> np.ndarray:
        return self.F**2

    @property
    def FR2(self) -> np.ndarray:
        return self.FR**2

    def __len__(self) -> int:
        return len(self.t)


class SaturationEstimate(NamedTuple):
    f2: float
    fr2: float
    i: float


def _propagators_and_state(cfg: CoupledConfig):
    Us = top_propagator(cfg.sys)
    Ue = top_propagator(cfg.env)
    psi_s = coherent_state(cfg.sys.J, cfg.init_sys)
    psi_e = coherent_state(cfg.env.J, cfg.init_env)
    phases = np.exp(
        -1j
        * cfg.coupling_strength
        * np.outer(
            cfg.v_sys.diagonal_values(cfg.sys.J),
            cfg.v_env.diagonal_values(cfg.env.J),
        )
    )
    return Us, Ue, psi_s, psi_e, phases


def evolve_pair(cfg: CoupledConfig) -> StabilitySeries:
    """Run the coupled and uncoupled maps side by side and record F, FR, I.

    Both evolutions start from the same coherent product state, so all three
    measures are exactly 1 at t = 0.
    """
    Us, Ue, psi_s, psi_e, phases = _propagators_and_state(cfg)
    A = np.outer(psi_s, psi_e)
    n = cfg.tmax
    F = np.ones(n + 1)
    FR = np.ones(n + 1)
    I = np.ones(n + 1)
    for t in range(1, n + 1):
        A = Us @ (phases * A) @ Ue.T
        psi_s = Us @ psi_s
        psi_e = Ue @ psi_e
        amp = psi_s.conj() @ A @ psi_e.conj()
        F[t] = amp.real**2 + amp.imag**2
        gram = A @ A.conj().T
        FR[t] = (psi_s.conj() @ gram @ psi_s).real
        I[t] = float(np.sum(gram.real**2 + gram.imag**2))
    return StabilitySeries(
        t=np.arange(n + 1), F=F, FR=FR, I=I, config_hash=cfg.config_hash()
    )


def echo_state(cfg: CoupledConfig, t: int) -> CompositeState:
    """State after t coupled kicks followed by t inverse uncoupled kicks.

    The squared overlap of the result with the initial state reproduces F[t],
    and the purity of its environment trace reproduces I[t], because the
    uncoupled map is separable.
    """
    if not 0 <= t <= cfg.tmax:
        raise ValueError(f"t must lie in [0, tmax], got {t}")
    Us, Ue, psi_s, psi_e, phases = _propagators_and_state(cfg)
    A = np.outer(psi_s, psi_e)
    for _ in range(t):
        A = Us @ (phases * A) @ Ue.T
    for _ in range(t):
        A = Us.conj().T @ A @ Ue.conj()
    return CompositeState(A)


def saturation_estimate(
    series: StabilitySeries, tail_fraction: float
) -> SaturationEstimate:
    """Tail means of F^2, FR^2, I over the last ``tail_fraction`` of the run.

    The caller is responsible for the tail lying past the decay.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    n = len(series)
    k = int(round(n * tail_fraction))
    if k < 1:
        raise ValueError("tail window is empty")
    tail = slice(n - k, n)
    return SaturationEstimate(
        f2=float(np.mean(series.F2[tail])),
        fr2=float(np.mean(series.FR2[tail])),
        i=float(np.mean(series.I[tail])),
    )
