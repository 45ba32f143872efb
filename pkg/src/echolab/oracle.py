"""Brute-force reference routes on the full product space.

Everything here materializes the composite Hilbert space and uses generic
dense linear algebra: explicit Kronecker products, scipy's matrix
exponential, full density matrices, and einsum partial traces.  It is slow
and simple on purpose, serving as the independent side of every dual-route
check in the test suite and behind ``echolab oracle``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .echo import CoupledConfig, StabilitySeries
from .spin import coherent_state, top_propagator

__all__ = [
    "EquivalenceCheck",
    "coupling_unitary",
    "full_space_sums",
    "full_space_evolution",
    "run_equivalence_suite",
]


def coupling_unitary(phase_s, phase_e, strength: float) -> np.ndarray:
    """Dense exp(-i strength Vs (x) Ve) for diagonal factors, via expm."""
    v_full = np.diag(np.kron(np.asarray(phase_s, float), np.asarray(phase_e, float)))
    return scipy.linalg.expm(-1j * strength * v_full.astype(complex))


def _trace_out_env(rho_full: np.ndarray, ns: int, ne: int) -> np.ndarray:
    return np.einsum("aibi->ab", rho_full.reshape(ns, ne, ns, ne))


def full_space_sums(cfg: CoupledConfig, tmax: int):
    """C, D, E from the accumulated interaction-picture generator.

    Builds Sigma(t) = sum_{tau < t} V(tau) as an explicit matrix on the full
    space and takes the three variance-like expectations directly:

        C[t] = <Sigma^2> - <Sigma>^2
        D[t] = <Sigma (P_s (x) 1) Sigma> - <Sigma>^2
        E[t] = <Sigma (1 (x) P_e) Sigma> - <Sigma>^2

    with P_s, P_e the projectors on the initial factors.
    """
    Us = top_propagator(cfg.sys)
    Ue = top_propagator(cfg.env)
    psi_s = coherent_state(cfg.sys.J, cfg.init_sys)
    psi_e = coherent_state(cfg.env.J, cfg.init_env)
    ns, ne = len(psi_s), len(psi_e)
    u_full = np.kron(Us, Ue)
    v_now = np.kron(cfg.v_sys.matrix(cfg.sys.J), cfg.v_env.matrix(cfg.env.J)).astype(
        complex
    )
    psi = np.kron(psi_s, psi_e)
    proj_s = np.kron(np.outer(psi_s, psi_s.conj()), np.eye(ne))
    proj_e = np.kron(np.eye(ns), np.outer(psi_e, psi_e.conj()))
    C = np.zeros(tmax + 1)
    D = np.zeros(tmax + 1)
    E = np.zeros(tmax + 1)
    sigma = np.zeros_like(v_now)
    for t in range(1, tmax + 1):
        sigma = sigma + v_now
        v_now = u_full.conj().T @ v_now @ u_full
        sv = sigma @ psi
        mean_sq = abs(np.vdot(psi, sv)) ** 2
        C[t] = (np.vdot(sv, sv) - mean_sq).real
        D[t] = (np.vdot(sv, proj_s @ sv) - mean_sq).real
        E[t] = (np.vdot(sv, proj_e @ sv) - mean_sq).real
    return C, D, E


def full_space_evolution(cfg: CoupledConfig) -> StabilitySeries:
    """F, FR, I from dense full-space propagation and density matrices."""
    Us = top_propagator(cfg.sys)
    Ue = top_propagator(cfg.env)
    psi_s = coherent_state(cfg.sys.J, cfg.init_sys)
    psi_e = coherent_state(cfg.env.J, cfg.init_env)
    ns, ne = len(psi_s), len(psi_e)
    u_free = np.kron(Us, Ue)
    u_coupled = u_free @ coupling_unitary(
        cfg.v_sys.diagonal_values(cfg.sys.J),
        cfg.v_env.diagonal_values(cfg.env.J),
        cfg.coupling_strength,
    )
    psi = np.kron(psi_s, psi_e)
    psi_d = psi.copy()
    n = cfg.tmax
    F = np.ones(n + 1)
    FR = np.ones(n + 1)
    I = np.ones(n + 1)
    for t in range(1, n + 1):
        psi = u_free @ psi
        psi_d = u_coupled @ psi_d
        F[t] = abs(np.vdot(psi, psi_d)) ** 2
        rho_s = _trace_out_env(np.outer(psi, psi.conj()), ns, ne)
        rho_sd = _trace_out_env(np.outer(psi_d, psi_d.conj()), ns, ne)
        FR[t] = np.trace(rho_s @ rho_sd).real
        I[t] = np.trace(rho_sd @ rho_sd).real
    return StabilitySeries(
        t=np.arange(n + 1), F=F, FR=FR, I=I, config_hash=cfg.config_hash() + ":dense"
    )


@dataclass(frozen=True)
class EquivalenceCheck:
    name: str
    error: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.error < self.tol


def _random_unitary(rng, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _random_state(rng, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def run_equivalence_suite(
    J: float = 3, seed: int = 0, trials: int = 3, tmax: int = 12
) -> list[EquivalenceCheck]:
    """Small-spin dual-route checks of every composite operation.

    Each check compares a fast path against its dense full-space counterpart
    and reports the worst error over ``trials`` random draws.
    """
    from . import bipartite
    from .echo import CoherentSpec, Perturbation, TopParams, echo_state, evolve_pair
    from .response import correlation_sums

    rng = np.random.default_rng(seed)
    checks: dict[str, float] = {}

    def record(name: str, err: float) -> None:
        checks[name] = max(checks.get(name, 0.0), float(err))

    for _ in range(trials):
        ns, ne = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        state = bipartite.CompositeState(
            (_random_state(rng, ns * ne)).reshape(ns, ne)
        )
        Us, Ue = _random_unitary(rng, ns), _random_unitary(rng, ne)
        got = bipartite.apply_separable(Us, Ue, state).vector
        want = np.kron(Us, Ue) @ state.vector
        record("separable apply vs dense Kronecker", np.abs(got - want).max())

        ps, pe = rng.standard_normal(ns), rng.standard_normal(ne)
        strength = float(rng.uniform(0.1, 2.0))
        got = bipartite.apply_diagonal_coupling(ps, pe, strength, state).vector
        want = coupling_unitary(ps, pe, strength) @ state.vector
        record("diagonal coupling vs dense expm", np.abs(got - want).max())

        hs = rng.standard_normal((ns, ns)) + 1j * rng.standard_normal((ns, ns))
        he = rng.standard_normal((ne, ne)) + 1j * rng.standard_normal((ne, ne))
        hs = hs + hs.conj().T
        he = he + he.conj().T
        got = bipartite.apply_product_coupling(hs, he, strength, state).vector
        want = scipy.linalg.expm(-1j * strength * np.kron(hs, he)) @ state.vector
        record("product coupling vs dense expm", np.abs(got - want).max())

        rho = bipartite.partial_trace_env(state).matrix
        rho_ref = _trace_out_env(np.outer(state.vector, state.vector.conj()), ns, ne)
        record("partial trace vs einsum on the density matrix", np.abs(rho - rho_ref).max())

        p_sv = bipartite.reduced_purity(state)
        p_tr = np.trace(rho_ref @ rho_ref).real
        record("singular-value purity vs tr(rho^2)", abs(p_sv - p_tr))

    for _ in range(trials):
        cfg = CoupledConfig(
            sys=TopParams(float(rng.uniform(0, 30)), float(rng.uniform(0.1, 3.0)), J),
            env=TopParams(float(rng.uniform(0, 30)), float(rng.uniform(0.1, 3.0)), J),
            v_sys=Perturbation.JZ_OVER_J,
            v_env=rng.choice([Perturbation.JZ_OVER_J, Perturbation.JZ2_OVER_J2]),
            delta=float(rng.uniform(1e-3, 3e-2)),
            init_sys=CoherentSpec(float(rng.uniform(0.2, 2.9)), float(rng.uniform(0, 6.2))),
            init_env=CoherentSpec(float(rng.uniform(0.2, 2.9)), float(rng.uniform(0, 6.2))),
            tmax=tmax,
        )
        ledger = correlation_sums(cfg, tmax=tmax)
        C, D, E = full_space_sums(cfg, tmax)
        record("factorized C vs full-space generator", np.abs(ledger.C - C).max())
        record("factorized D vs full-space generator", np.abs(ledger.D - D).max())
        record("factorized E vs full-space generator", np.abs(ledger.E - E).max())

        series = evolve_pair(cfg)
        dense = full_space_evolution(cfg)
        record("paired evolution F vs dense route", np.abs(series.F - dense.F).max())
        record("paired evolution FR vs dense route", np.abs(series.FR - dense.FR).max())
        record("paired evolution I vs dense route", np.abs(series.I - dense.I).max())

        mid = tmax // 2
        echoed = echo_state(cfg, mid)
        psi0 = bipartite.product_state(
            coherent_state(cfg.sys.J, cfg.init_sys),
            coherent_state(cfg.env.J, cfg.init_env),
        )
        f_echo = abs(bipartite.overlap(psi0, echoed)) ** 2
        record("echo-route fidelity vs forward route", abs(f_echo - series.F[mid]))
        i_echo = bipartite.reduced_purity(echoed)
        record("echo-route purity vs forward purity", abs(i_echo - series.I[mid]))

    tols = {
        "separable apply vs dense Kronecker": 1e-12,
        "diagonal coupling vs dense expm": 1e-12,
        "product coupling vs dense expm": 1e-11,
        "partial trace vs einsum on the density matrix": 1e-12,
        "singular-value purity vs tr(rho^2)": 1e-12,
        "factorized C vs full-space generator": 1e-10,
        "factorized D vs full-space generator": 1e-10,
        "factorized E vs full-space generator": 1e-10,
        "paired evolution F vs dense route": 1e-10,
        "paired evolution FR vs dense route": 1e-10,
        "paired evolution I vs dense route": 1e-10,
        "echo-route fidelity vs forward route": 1e-10,
        "echo-route purity vs forward purity": 1e-10,
    }
    return [EquivalenceCheck(name, err, tols[name]) for name, err in checks.items()]
