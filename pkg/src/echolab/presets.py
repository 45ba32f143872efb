"""Built-in experiment presets covering the four dynamical regimes.

Each preset fixes both tops, the coupling generators and strength, and the
initial packet directions; J, delta, and tmax can be overridden when scaling
an experiment down or scanning.  Delta scans conventionally run at J = 100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .echo import CoupledConfig, Perturbation
from .response import Regime
from .spin import CoherentSpec, TopParams

__all__ = ["RegimePreset", "PRESETS", "build_preset_config", "default_tmax"]

_THETA = np.pi / np.sqrt(3.0)
_PHI = np.pi / np.sqrt(2.0)
_PHI_ENV_REGULAR = 3.0 * np.pi / np.sqrt(7.0)

# name -> (alpha_s, gamma_s, alpha_e, gamma_e, delta, v_sys, v_env,
#          theta_s, phi_s, theta_e, phi_e, regime, expected law)
_TABLE = {
    "mixing": (
        30.0,
        np.pi / 2.1,
        30.0,
        np.pi / 2.1,
        8e-4,
        Perturbation.JZ_OVER_J,
        Perturbation.JZ_OVER_J,
        _THETA,
        _PHI,
        _THETA,
        _PHI,
        Regime.MIXING,
        "exponential",
    ),
    "regular": (
        0.0,
        np.pi / 2.1,
        0.0,
        np.pi / 2.1,
        5e-3,
        Perturbation.JZ_OVER_J,
        Perturbation.JZ_OVER_J,
        _THETA,
        _PHI,
        _THETA,
        _PHI_ENV_REGULAR,
        Regime.REGULAR,
        "gaussian",
    ),
    "fast_mixing_env": (
        0.0,
        np.pi / 50.0,
        30.0,
        np.pi / 2.1,
        1.5e-3,
        Perturbation.JZ_OVER_J,
        Perturbation.JZ_OVER_J,
        _THETA,
        _PHI,
        _THETA,
        _PHI,
        Regime.FAST_MIXING_ENV,
        "exponential F, slower FR and I",
    ),
    "fast_regular_env": (
        30.0,
        np.pi / 7.0,
        0.0,
        np.pi / 2.1,
        6e-4,
        Perturbation.JZ_OVER_J,
        Perturbation.JZ2_OVER_J2,
        _THETA,
        _PHI,
        _THETA,
        _PHI,
        Regime.FAST_REGULAR_ENV,
        "exponential F and FR, slower I",
    ),
}

_DEFAULT_J = 200


def default_tmax(name: str, delta: float) -> int:
    """Horizon long enough for the decay to reach saturation.

    The regular horizon scales with 1/delta because the Gaussian and the
    purity tail both stretch that way; the others are fixed.
    """
    if name == "mixing":
        return 2000
    if name == "regular":
        return int(np.clip(round(2000.0 * (5e-3 / delta)), 200, 40000))
    return 5000


@dataclass(frozen=True)
class RegimePreset:
    """A named experiment: configuration plus its expected decay law."""

    name: str
    regime: Regime
    expected_law: str
    config: CoupledConfig


def build_preset_config(
    name: str,
    J: int | None = None,
    delta: float | None = None,
    tmax: int | None = None,
) -> CoupledConfig:
    """Configuration for a preset, with optional J / delta / tmax overrides.

    Presets are defined for integer spins only.
    """
    if name not in _TABLE:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(_TABLE)}")
    (
        alpha_s,
        gamma_s,
        alpha_e,
        gamma_e,
        delta0,
        v_sys,
        v_env,
        theta_s,
        phi_s,
        theta_e,
        phi_e,
        _regime,
        _law,
    ) = _TABLE[name]
    spin = _DEFAULT_J if J is None else J
    if spin != int(spin) or spin < 1:
        raise ValueError(f"preset J must be a positive integer, got {J!r}")
    spin = int(spin)
    coupling = delta0 if delta is None else float(delta)
    horizon = default_tmax(name, coupling) if tmax is None else int(tmax)
    return CoupledConfig(
        sys=TopParams(alpha=alpha_s, gamma=gamma_s, J=spin),
        env=TopParams(alpha=alpha_e, gamma=gamma_e, J=spin),
        v_sys=v_sys,
        v_env=v_env,
        delta=coupling,
        init_sys=CoherentSpec(theta=theta_s, phi=phi_s),
        init_env=CoherentSpec(theta=theta_e, phi=phi_e),
        tmax=horizon,
    )


def _build_registry() -> dict[str, RegimePreset]:
    out = {}
    for name, row in _TABLE.items():
        out[name] = RegimePreset(
            name=name,
            regime=row[11],
            expected_law=row[12],
            config=build_preset_config(name),
        )
    return out


PRESETS: dict[str, RegimePreset] = _build_registry()
