"""Second-order response of the stability measures to a weak coupling.

For a product coupling Vs (x) Ve with strength delta, the short-time decay of
fidelity F, reduced fidelity FR, and purity I is controlled by three double
sums over two-time correlation functions of the coupling generator taken in
each subsystem separately:

    1 - F(t)  ~ (delta/hbar)^2 C(t)
    1 - FR(t) ~ (delta/hbar)^2 (C(t) - D(t))
    1 - I(t)  ~ 2 (delta/hbar)^2 (C(t) - D(t) - E(t))

with all time integrals replaced by sums over kicks.  D and E are sums of
squared matrix elements and hence non-negative, which makes the chain
F^2 <= FR^2 <= I automatic at this order.

The module also fits the regime coefficients (transport sigma when the sums
grow linearly, plateau cbar when they grow quadratically), evaluates closed
forms for solvable pi/2 rotations, generates predicted decay curves for all
four regimes, and integrates the dephasing master equation valid for a fast
chaotic environment.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from math import isfinite, log, sqrt

import numpy as np

from .bipartite import ReducedDensity
from .echo import CoupledConfig, StabilitySeries
from .spin import coherent_state, heisenberg_correlations, top_propagator

__all__ = [
    "Regime",
    "CorrelationLedger",
    "DecayCoefficients",
    "FitResult",
    "TimescaleReport",
    "IntegrationError",
    "correlation_sums",
    "fit_sigma",
    "fit_sigma_sys",
    "fit_sigma_env",
    "fit_cbar",
    "fit_linear_growth",
    "time_averages",
    "closed_form_regular",
    "closed_form_fast_mixing",
    "closed_form_fast_regular",
    "predict_series",
    "predicted_tau",
    "heisenberg_operator_series",
    "heisenberg_operator_iter",
    "master_equation_steps",
    "master_equation_evolve",
    "classify_timescales",
    "correlation_decay_time",
]


class Regime(Enum):
    MIXING = "mixing"
    REGULAR = "regular"
    FAST_MIXING_ENV = "fast_mixing_env"
    FAST_REGULAR_ENV = "fast_regular_env"


class IntegrationError(RuntimeError):
    """A master-equation step violated one of its structural guarantees."""


def _growing_square_sums(M: np.ndarray) -> np.ndarray:
    """s[t] = sum of M[xi, zeta] over xi, zeta < t, for t = 0 .. tmax."""
    c = M.cumsum(axis=0).cumsum(axis=1)
    out = np.zeros(M.shape[0] + 1, dtype=c.dtype)
    out[1:] = np.diagonal(c)
    return out


@dataclass
class CorrelationLedger:
    """Correlation tables of both subsystems and the assembled sums.

    C, D, E have length tmax + 1 with entry t holding the double sum over
    0 .. t-1; corr_s/corr_e are the tmax x tmax two-time tables and
    mean_s/mean_e the one-time expectations.  imag_residue records the worst
    imaginary part dropped when the sums were taken real.
    """

    tmax: int
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    corr_s: np.ndarray
    corr_e: np.ndarray
    mean_s: np.ndarray
    mean_e: np.ndarray
    imag_residue: float

    def sum_sq_sys(self) -> np.ndarray:
        """<Sigma_s(t)^2> where Sigma_s accumulates Vs over kicks."""
        return _growing_square_sums(self.corr_s).real

    def sum_sq_env(self) -> np.ndarray:
        return _growing_square_sums(self.corr_e).real


def correlation_sums(cfg: CoupledConfig, tmax: int | None = None) -> CorrelationLedger:
    """Build the per-subsystem tables and assemble C, D, E.

    The tables use the uncoupled single-top dynamics of each side alone; the
    coupling strength never enters.  Each assembled sum is real up to
    rounding; the worst imaginary residue is kept on the ledger.
    """
    horizon = cfg.tmax if tmax is None else int(tmax)
    if horizon < 1:
        raise ValueError("tmax must be at least 1")
    corr_s, mean_s = heisenberg_correlations(
        top_propagator(cfg.sys),
        cfg.v_sys.matrix(cfg.sys.J),
        coherent_state(cfg.sys.J, cfg.init_sys),
        horizon,
    )
    corr_e, mean_e = heisenberg_correlations(
        top_propagator(cfg.env),
        cfg.v_env.matrix(cfg.env.J),
        coherent_state(cfg.env.J, cfg.init_env),
        horizon,
    )
    prod_mean = mean_s * mean_e
    c_mat = corr_s * corr_e - np.outer(prod_mean, prod_mean)
    d_mat = np.outer(mean_s, mean_s) * (corr_e - np.outer(mean_e, mean_e))
    e_mat = (corr_s - np.outer(mean_s, mean_s)) * np.outer(mean_e, mean_e)
    C = _growing_square_sums(c_mat)
    D = _growing_square_sums(d_mat)
    E = _growing_square_sums(e_mat)
    residue = max(float(np.abs(s.imag).max()) for s in (C, D, E))
    if residue > 1e-6:
        raise ValueError(f"assembled sums are not real: residue {residue:.3e}")
    return CorrelationLedger(
        tmax=horizon,
        C=C.real.copy(),
        D=D.real.copy(),
        E=E.real.copy(),
        corr_s=corr_s,
        corr_e=corr_e,
        mean_s=mean_s,
        mean_e=mean_e,
        imag_residue=residue,
    )


# ---------------------------------------------------------------------------
# coefficient fits


@dataclass(frozen=True)
class FitResult:
    """A fitted coefficient plus its rms misfit over the window."""

    value: float
    residual: float
    window: tuple[int, int]
    model: str


def _window_times(length: int, window: tuple[int, int]) -> np.ndarray:
    lo, hi = int(window[0]), int(window[1])
    if lo < 1 or hi > length - 1 or lo > hi:
        raise ValueError(f"degenerate fit window {window} for series of length {length}")
    return np.arange(lo, hi + 1)


def fit_linear_growth(series, window: tuple[int, int]) -> FitResult:
    """Least-squares fit of s(t) = 2 sigma t over the window."""
    s = np.asarray(series, dtype=float)
    ts = _window_times(len(s), window)
    vals = s[ts]
    sigma = float((ts @ vals) / (2.0 * float(ts @ ts)))
    resid = float(np.sqrt(np.mean((vals - 2.0 * sigma * ts) ** 2)))
    return FitResult(sigma, resid, (int(window[0]), int(window[1])), "2*sigma*t")


def fit_sigma(ledger: CorrelationLedger, window: tuple[int, int] = (10, 100)) -> FitResult:
    """Transport coefficient sigma from C(t) ~ 2 sigma t."""
    return fit_linear_growth(ledger.C, window)


def _warn_if_mean_persists(corr, mean, label: str) -> None:
    # the t-linear fit of <Sigma^2> assumes the time-averaged mean vanishes
    avg = float(np.mean(mean.real))
    var = float(np.mean(np.diagonal(corr).real - mean.real**2))
    if abs(avg) > 0.05 * sqrt(max(var, 0.0)):
        warnings.warn(
            f"time-averaged <V_{label}> = {avg:.3g} is not negligible against the "
            f"fluctuation scale; the fitted transport coefficient absorbs it",
            stacklevel=3,
        )


def fit_sigma_sys(ledger: CorrelationLedger, window=(10, 100)) -> FitResult:
    """Transport coefficient of the system generator alone."""
    _warn_if_mean_persists(ledger.corr_s, ledger.mean_s, "sys")
    return fit_linear_growth(ledger.sum_sq_sys(), window)


def fit_sigma_env(ledger: CorrelationLedger, window=(10, 100)) -> FitResult:
    """Transport coefficient of the environment generator alone."""
    _warn_if_mean_persists(ledger.corr_e, ledger.mean_e, "env")
    return fit_linear_growth(ledger.sum_sq_env(), window)


def fit_cbar(series, window: tuple[int, int] = (10, 50)) -> FitResult:
    """Least-squares fit of s(t) = cbar t^2 over the window.

    Apply to C for cbar_F, to C - D for cbar_R, and to C - D - E for cbar_I.
    """
    s = np.asarray(series, dtype=float)
    ts = _window_times(len(s), window)
    vals = s[ts]
    t2 = ts.astype(float) ** 2
    cbar = float((t2 @ vals) / float(t2 @ t2))
    resid = float(np.sqrt(np.mean((vals - cbar * t2) ** 2)))
    return FitResult(cbar, resid, (int(window[0]), int(window[1])), "cbar*t^2")


def time_averages(
    ledger: CorrelationLedger, side: str = "sys", window: tuple[int, int] | None = None
) -> tuple[float, float, float]:
    """Time averages of <V^2(t)>, <V(t)>^2, and <V(t)> over [lo, hi)."""
    if side == "sys":
        corr, mean = ledger.corr_s, ledger.mean_s
    elif side == "env":
        corr, mean = ledger.corr_e, ledger.mean_e
    else:
        raise ValueError("side must be 'sys' or 'env'")
    lo, hi = (0, ledger.tmax) if window is None else (int(window[0]), int(window[1]))
    if not 0 <= lo < hi <= ledger.tmax:
        raise ValueError(f"averaging window {window} out of range")
    diag = np.diagonal(corr).real[lo:hi]
    m = mean.real[lo:hi]
    return float(diag.mean()), float((m**2).mean()), float(m.mean())


# ---------------------------------------------------------------------------
# closed forms for solvable rotations


def closed_form_regular(n_s, n_e, J: float) -> tuple[float, float, float]:
    """Plateau coefficients (cbar_F, cbar_R, cbar_I) for two torsion-free
    tops rotating by pi/2 with jz/J coupling on both sides.

    n_s, n_e are the unit direction vectors of the initial packets; only the
    rotation-axis components y and the relative orientation enter, since they
    are the invariants of the motion.
    """
    n_s = np.asarray(n_s, dtype=float)
    n_e = np.asarray(n_e, dtype=float)
    for v in (n_s, n_e):
        if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError("initial directions must be unit 3-vectors")
    if J < 1:
        raise ValueError("J must be at least 1")
    ys, ye = float(n_s[1]), float(n_e[1])
    cross = float(n_s @ n_e) - ys * ye
    tail = ((ys - ye) ** 2 + cross**2) / (16.0 * J**2)
    cbar_f = (2.0 - ys**2 - ye**2 - 2.0 * cross**2) / (8.0 * J) + tail
    cbar_r = (1.0 - ye**2 - cross**2) / (8.0 * J) + tail
    return cbar_f, cbar_r, tail


def closed_form_fast_mixing(y_s: float, J: float) -> tuple[float, float]:
    """Time averages (avg <Vs^2>, avg <Vs^2> - avg <Vs>^2) for a torsion-free
    slowly rotating system top with Vs = jz/J.

    The second entry is smaller by one power of J, which is what separates
    the fidelity time scale from the reduced-fidelity and purity ones.
    """
    if abs(y_s) > 1.0:
        raise ValueError("y_s must lie in [-1, 1]")
    if J < 1:
        raise ValueError("J must be at least 1")
    centered = (1.0 + y_s**2) / (4.0 * J)
    return 0.5 * (1.0 - y_s**2) + centered, centered


def closed_form_fast_regular(y_e: float, J: float) -> tuple[float, float]:
    """Environment averages (cbar_e, cbar_e - avg<Ve>^2) for a torsion-free
    pi/2-rotating environment top with Ve = jz^2/J^2.

    The pair is returned together because the difference is one to two powers
    of J below cbar_e and cannot be recovered by subtracting independently
    estimated terms.
    """
    if abs(y_e) > 1.0:
        raise ValueError("y_e must lie in [-1, 1]")
    if J < 1:
        raise ValueError("J must be at least 1")
    y2 = y_e**2
    cbar_e = 0.25 * (1.0 - y2) ** 2 + (-3.0 * y2**2 + 2.0 * y2 + 1.0) / (4.0 * J)
    cbar_e_var = y2 * (1.0 - y2) / (2.0 * J) + (11.0 * y2**2 - 11.0 * y2 + 2.0) / (
        16.0 * J**2
    )
    return cbar_e, cbar_e_var


# ---------------------------------------------------------------------------
# regime coefficients and predicted decay curves


@dataclass
class DecayCoefficients:
    """Coefficients controlling the predicted decay in one regime.

    Only the fields relevant to ``regime`` need to be set: sigma (mixing);
    cbar_F/R/I (regular); sigma_e with the system time averages (fast mixing
    environment); sigma_s with the environment plateau pair (fast regular
    environment).  residuals carries the rms misfit of each fitted entry.
    """

    regime: Regime
    sigma: float | None = None
    cbar_F: float | None = None
    cbar_R: float | None = None
    cbar_I: float | None = None
    sigma_e: float | None = None
    sigma_s: float | None = None
    cbar_e: float | None = None
    cbar_e_var: float | None = None
    avg_vs2: float | None = None
    avg_vs_var: float | None = None
    fit_window: tuple[int, int] | None = None
    residuals: dict = field(default_factory=dict)


def _require(coeffs: DecayCoefficients, *names: str) -> list[float]:
    out = []
    for name in names:
        value = getattr(coeffs, name)
        if value is None or not isfinite(value):
            raise ValueError(
                f"coefficient {name!r} is required for regime {coeffs.regime.value}"
            )
        out.append(float(value))
    return out


def predict_series(
    coeffs: DecayCoefficients, cfg: CoupledConfig, tmax: int | None = None
) -> StabilitySeries:
    """Decay curves implied by the regime coefficients.

    mixing: one exponential, F^2 = FR^2 = I = exp(-2t/tau_m) with
    tau_m = hbar^2 / (2 delta^2 sigma).  regular: Gaussians for F and FR with
    tau = hbar/(delta sqrt(cbar)); for I only the quadratic onset is emitted,
    since its long-time shape is neither Gaussian nor exponential.  Fast
    regimes: exponential where the full variance drives the measure, linear
    onset where only the small centered part does.
    """
    n = cfg.tmax if tmax is None else int(tmax)
    t = np.arange(n + 1, dtype=float)
    r2 = cfg.coupling_strength**2  # (delta/hbar)^2
    if coeffs.regime is Regime.MIXING:
        (sigma,) = _require(coeffs, "sigma")
        tau_m = 1.0 / (2.0 * r2 * sigma)
        F = np.exp(-t / tau_m)
        FR = F.copy()
        I = np.exp(-2.0 * t / tau_m)
    elif coeffs.regime is Regime.REGULAR:
        cbar_f, cbar_r, cbar_i = _require(coeffs, "cbar_F", "cbar_R", "cbar_I")
        F = np.exp(-(r2 * cbar_f) * t**2)
        FR = np.exp(-(r2 * cbar_r) * t**2)
        I = np.clip(1.0 - 2.0 * r2 * cbar_i * t**2, 0.0, None)
    elif coeffs.regime is Regime.FAST_MIXING_ENV:
        sigma_e, avg_vs2, avg_vs_var = _require(
            coeffs, "sigma_e", "avg_vs2", "avg_vs_var"
        )
        F = np.exp(-r2 * 2.0 * sigma_e * avg_vs2 * t)
        onset = r2 * 2.0 * sigma_e * avg_vs_var * t
        FR = np.clip(1.0 - onset, 0.0, None)
        I = np.clip(1.0 - 2.0 * onset, 0.0, None)
    elif coeffs.regime is Regime.FAST_REGULAR_ENV:
        sigma_s, cbar_e, cbar_e_var = _require(
            coeffs, "sigma_s", "cbar_e", "cbar_e_var"
        )
        F = np.exp(-r2 * 2.0 * sigma_s * cbar_e * t)
        FR = F.copy()
        I = np.clip(1.0 - 2.0 * r2 * 2.0 * sigma_s * cbar_e_var * t, 0.0, None)
    else:  # pragma: no cover
        raise ValueError(f"unknown regime {coeffs.regime!r}")
    return StabilitySeries(
        t=np.arange(n + 1),
        F=F,
        FR=FR,
        I=I,
        config_hash=cfg.config_hash() + ":predicted",
    )


def predicted_tau(
    coeffs: DecayCoefficients, cfg: CoupledConfig, level: float, measure: str
) -> float:
    """Closed-form level crossing of the predicted curve.

    measure is one of 'F2', 'FR2', 'I'; the returned time is where that
    predicted measure falls to ``level``.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if measure not in ("F2", "FR2", "I"):
        raise ValueError(f"unknown measure {measure!r}")
    r2 = cfg.coupling_strength**2
    if coeffs.regime is Regime.MIXING:
        (sigma,) = _require(coeffs, "sigma")
        tau_m = 1.0 / (2.0 * r2 * sigma)
        return -log(level) * tau_m / 2.0
    if coeffs.regime is Regime.REGULAR:
        cbar_f, cbar_r, cbar_i = _require(coeffs, "cbar_F", "cbar_R", "cbar_I")
        if measure == "F2":
            return sqrt(-log(level) / (2.0 * r2 * cbar_f))
        if measure == "FR2":
            return sqrt(-log(level) / (2.0 * r2 * cbar_r))
        return sqrt((1.0 - level) / (2.0 * r2 * cbar_i))
    if coeffs.regime is Regime.FAST_MIXING_ENV:
        sigma_e, avg_vs2, avg_vs_var = _require(
            coeffs, "sigma_e", "avg_vs2", "avg_vs_var"
        )
        if measure == "F2":
            return -log(level) / (2.0 * r2 * 2.0 * sigma_e * avg_vs2)
        slow = r2 * 2.0 * sigma_e * avg_vs_var
        if measure == "FR2":
            return (1.0 - sqrt(level)) / slow
        return (1.0 - level) / (2.0 * slow)
    sigma_s, cbar_e, cbar_e_var = _require(coeffs, "sigma_s", "cbar_e", "cbar_e_var")
    if measure in ("F2", "FR2"):
        return -log(level) / (2.0 * r2 * 2.0 * sigma_s * cbar_e)
    return (1.0 - level) / (2.0 * r2 * 2.0 * sigma_s * cbar_e_var)


# ---------------------------------------------------------------------------
# master equation for a fast chaotic environment


def heisenberg_operator_series(U, V, tmax: int) -> list[np.ndarray]:
    """V(t) = U^(-t) V U^t for t = 0 .. tmax-1, as explicit matrices."""
    return list(heisenberg_operator_iter(U, V, tmax))


def heisenberg_operator_iter(U, V, tmax: int):
    """Same operators one at a time, for long runs at large dimension."""
    U = np.asarray(U)
    W = np.asarray(V, dtype=complex)
    for _ in range(tmax):
        yield W
        W = U.conj().T @ W @ U


def master_equation_steps(
    vs_series,
    sigma_e: float,
    delta: float,
    hbar: float,
    rho0: ReducedDensity,
    tmax: int | None = None,
):
    """Integrate d rho/dt = -(delta^2 sigma_e / hbar^2) [Vs(t), [Vs(t), rho]]
    one kick per step, exactly for the Vs(t) frozen over that step, yielding
    the state after every step (the initial state first).

    In the eigenbasis of Vs(t) the step multiplies rho_ij by
    exp(-kappa (w_i - w_j)^2), so the trace is conserved, Hermiticity is
    preserved, and the purity cannot grow.  Purity monotonicity is checked
    each step; a violation raises IntegrationError.

    vs_series may be any iterable of Hermitian matrices; pass ``tmax`` when
    it has no length.
    """
    if tmax is None:
        try:
            steps = len(vs_series)
        except TypeError:
            raise ValueError("tmax is required when vs_series has no length") from None
    else:
        steps = int(tmax)
    kappa = (delta / hbar) ** 2 * sigma_e
    rho = np.array(rho0.matrix, dtype=complex)
    dim = rho0.dim
    yield ReducedDensity(dim, rho.copy())
    last_purity = float(np.sum(rho.real**2 + rho.imag**2))
    source = iter(vs_series)
    for step in range(steps):
        try:
            W = np.asarray(next(source))
        except StopIteration:
            raise ValueError("vs_series is shorter than the requested tmax") from None
        if W.shape != (dim, dim):
            raise ValueError(
                f"vs_series[{step}] has shape {W.shape}, expected {(dim, dim)}"
            )
        w, q = np.linalg.eigh(W)
        in_basis = q.conj().T @ rho @ q
        in_basis *= np.exp(-kappa * np.subtract.outer(w, w) ** 2)
        rho = q @ in_basis @ q.conj().T
        p = float(np.sum(rho.real**2 + rho.imag**2))
        if p > last_purity + 1e-8:
            raise IntegrationError(
                f"purity grew from {last_purity:.12g} to {p:.12g} at step {step}"
            )
        last_purity = p
        yield ReducedDensity(dim, rho.copy())


def master_equation_evolve(
    vs_series,
    sigma_e: float,
    delta: float,
    hbar: float,
    rho0: ReducedDensity,
    tmax: int | None = None,
) -> list[ReducedDensity]:
    """All states of ``master_equation_steps`` as a list; fine for small
    dimensions or short runs."""
    return list(
        master_equation_steps(vs_series, sigma_e, delta, hbar, rho0, tmax=tmax)
    )


# ---------------------------------------------------------------------------
# subsystem time scales


@dataclass(frozen=True)
class TimescaleReport:
    """Correlation-decay steps of each subsystem and the fast-environment call.

    ratio = t_sys / t_env; the environment counts as fast when its
    correlation time is at least ``fast_ratio`` times shorter.
    """

    t_sys: float
    t_env: float
    ratio: float
    fast_environment: bool


def correlation_decay_time(corr, mean, drop: float = 0.1) -> float:
    """Steps for the mean connected autocorrelation to fall below ``drop`` of
    its equal-time value; inf if it never does within the table."""
    n = corr.shape[0]
    auto = np.empty(n)
    for d in range(n):
        two_time = np.diagonal(corr, offset=d).real
        mean_prod = (mean[: n - d] * mean[d:]).real
        auto[d] = float(np.mean(two_time - mean_prod))
    if auto[0] == 0.0:
        return 0.0
    below = np.nonzero(np.abs(auto) <= drop * abs(auto[0]))[0]
    below = below[below >= 1]
    return float(below[0]) if below.size else float("inf")


def classify_timescales(
    ledger: CorrelationLedger, drop: float = 0.1, fast_ratio: float = 5.0
) -> TimescaleReport:
    """Report both subsystem correlation-decay scales; threshold configurable."""
    t_sys = correlation_decay_time(ledger.corr_s, ledger.mean_s, drop)
    t_env = correlation_decay_time(ledger.corr_e, ledger.mean_e, drop)
    if t_env == 0.0 or (np.isinf(t_sys) and np.isinf(t_env)):
        ratio = float("nan") if np.isinf(t_sys) else float("inf")
    else:
        ratio = t_sys / t_env
    fast = bool(np.isfinite(t_env) and t_env * fast_ratio <= t_sys)
    return TimescaleReport(t_sys=t_sys, t_env=t_env, ratio=ratio, fast_environment=fast)
