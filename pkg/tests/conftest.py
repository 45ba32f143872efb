import numpy as np
import pytest

from echolab import CoherentSpec, CoupledConfig, Perturbation, TopParams


def random_config(rng, J=None, tmax=12, delta=None) -> CoupledConfig:
    """A random small-spin coupled configuration for property tests."""
    if J is None:
        J = int(rng.integers(2, 6))
    pert = [Perturbation.JZ_OVER_J, Perturbation.JZ2_OVER_J2]
    return CoupledConfig(
        sys=TopParams(
            alpha=float(rng.uniform(0.0, 30.0)),
            gamma=float(rng.uniform(0.05, np.pi - 0.05)),
            J=J,
        ),
        env=TopParams(
            alpha=float(rng.uniform(0.0, 30.0)),
            gamma=float(rng.uniform(0.05, np.pi - 0.05)),
            J=J,
        ),
        v_sys=pert[int(rng.integers(0, 2))],
        v_env=pert[int(rng.integers(0, 2))],
        delta=float(rng.uniform(1e-3, 5e-2)) if delta is None else delta,
        init_sys=CoherentSpec(
            float(rng.uniform(0.1, np.pi - 0.1)), float(rng.uniform(0.0, 2 * np.pi))
        ),
        init_env=CoherentSpec(
            float(rng.uniform(0.1, np.pi - 0.1)), float(rng.uniform(0.0, 2 * np.pi))
        ),
        tmax=tmax,
    )


def random_state(rng, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_unitary(rng, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
