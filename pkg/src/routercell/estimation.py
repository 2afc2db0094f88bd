"""Parameter estimation for the basic cell.

Fits fall into three families:

* steady state -- a simultaneous complex least-squares fit of all four
  calibrated transmission channels against the closed-form model (they
  share one parameter set), dephasing reconstruction from the transfer
  efficiency, flux-noise and thermal fits of the reconstructed rates, and
  drive-saturation fits;
* time domain -- exponential energy-relaxation and damped-Rabi fits plus
  the rate budget that splits the measured decay into coupling, bath and
  pure-dephasing contributions;
* readout -- principal-component projection of IQ clouds onto a single
  population axis anchored by the zero-drive reference.

Every fit is deterministic given its inputs and uses damped least squares
(max 200 iterations, relative step tolerance 1e-10) with uncertainties
from the linearized covariance at the optimum.  Parameters whose Jacobian
column vanishes are flagged ``unidentifiable:<name>`` instead of being
reported with a meaningless uncertainty.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .calibration import ChannelSpectrum, REFERENCE_FLOOR
from .model import (
    CHANNELS,
    CellParams,
    FluxModel,
    SaturationParams,
    ThermalCoefficients,
    n_thermal,
    resonant_efficiency,
)

__all__ = [
    "FitReport",
    "PopulationTrace",
    "RateBudget",
    "FitError",
    "four_channel_model",
    "initial_guess_from_spectrum",
    "fit_four_channel",
    "efficiency_trace",
    "fit_E_polynomial",
    "gamma_phi_from_E",
    "fit_flux_noise",
    "fit_thermal",
    "as_thermal_coefficients",
    "fit_saturation",
    "as_saturation_params",
    "fit_T1",
    "fit_rabi_decay",
    "rate_budget",
    "coupling_limited_t1",
    "pi_amplitude_consistency",
    "pca_populations",
]

MAX_ITER = 200
STEP_TOL = 1e-10
#: Worst-case slack on reconstructed populations outside [0, 1].
POPULATION_SLACK = 0.15


class FitError(RuntimeError):
    """Raised when a fit cannot be set up (degenerate or insufficient data)."""


@dataclass(frozen=True)
class FitReport:
    """Result of one fit: values, uncertainties and convergence metadata."""

    params: dict[str, float]
    sigma: dict[str, float]
    residual_norm: float
    n_iter: int
    converged: bool
    seed: int | None = None
    flags: tuple[str, ...] = ()

    def value(self, name: str) -> float:
        return self.params[name]


@dataclass(frozen=True)
class PopulationTrace:
    """Excited-state populations reconstructed from IQ clouds.

    ``residuals`` is the per-setting distance of the cloud mean from the
    population axis, normalized to the ground-to-excited scale.  ``i_g``
    and ``i_e`` are the ground and excited references on the axis.
    """

    times: np.ndarray
    p: np.ndarray
    residuals: np.ndarray
    i_g: float
    i_e: float


@dataclass(frozen=True)
class RateBudget:
    """Decay-rate decomposition from time-domain fits (all rad/s).

    ``gamma_phi_range`` and ``gamma_bath_range`` are worst-case endpoint
    intervals propagated from the decay-time uncertainties; the central
    ``gamma_bath`` is clipped at zero when the raw value is negative
    within its uncertainty.
    """

    gamma_1: float
    gamma_r: float
    gamma_phi: float
    gamma_phi_range: tuple[float, float]
    gamma_bath: float
    gamma_bath_range: tuple[float, float]


# ---------------------------------------------------------------------------
# generic least-squares plumbing


def _finish_report(names, result, seed=None) -> FitReport:
    """Covariance-based uncertainties plus identifiability flags.

    Parameters carry wildly different units (rad/s versus rad), so the
    normal equations are formed on unit-norm Jacobian columns and the
    covariance is rescaled afterwards; this keeps the inversion
    well-conditioned regardless of parameter scales.
    """
    jac = np.atleast_2d(result.jac)
    residuals = np.asarray(result.fun)
    m, n = jac.shape
    col_norms = np.linalg.norm(jac, axis=0)
    ref = float(col_norms.max()) if col_norms.size else 0.0
    flags: list[str] = []
    dead = col_norms <= 1e-12 * max(ref, 1.0)
    for i in np.flatnonzero(dead):
        flags.append(f"unidentifiable:{names[i]}")

    dof = max(m - n, 1)
    s2 = float(residuals @ residuals) / dof
    sig = np.full(n, np.inf)
    alive = ~dead
    if np.any(alive):
        jn = jac[:, alive] / col_norms[alive]
        gram = jn.T @ jn
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e10:
            flags.append("ill-conditioned")
        cov_scaled = s2 * np.linalg.pinv(gram)
        sig[alive] = np.sqrt(np.clip(np.diag(cov_scaled), 0.0, None)) / col_norms[alive]

    return FitReport(
        params=dict(zip(names, (float(v) for v in result.x))),
        sigma=dict(zip(names, (float(v) for v in sig))),
        residual_norm=float(np.linalg.norm(residuals)),
        n_iter=int(result.nfev),
        converged=bool(result.success),
        seed=seed,
        flags=tuple(flags),
    )


def _linear_report(names, design, target, seed=None) -> FitReport:
    """FitReport for a plain linear least-squares solve (column-scaled)."""
    col_norms = np.linalg.norm(design, axis=0)
    if np.any(col_norms == 0):
        raise FitError("rank-deficient design matrix; parameters not identifiable")
    scaled = design / col_norms
    sol_scaled, _, rank, _ = np.linalg.lstsq(scaled, target, rcond=None)
    if rank < design.shape[1]:
        raise FitError("rank-deficient design matrix; parameters not identifiable")
    sol = sol_scaled / col_norms
    residuals = design @ sol - target
    dof = max(design.shape[0] - design.shape[1], 1)
    s2 = float(residuals @ residuals) / dof
    cov_scaled = s2 * np.linalg.inv(scaled.T @ scaled)
    sig = np.sqrt(np.clip(np.diag(cov_scaled), 0.0, None)) / col_norms
    return FitReport(
        params=dict(zip(names, (float(v) for v in sol))),
        sigma=dict(zip(names, (float(v) for v in sig))),
        residual_norm=float(np.linalg.norm(residuals)),
        n_iter=1,
        converged=True,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# simultaneous four-channel fit

_FOUR_CHANNEL_NAMES = ("gamma_a", "gamma_b", "omega_ge", "phi_a", "phi_b")


def four_channel_model(omega, gamma_a, gamma_b, omega_ge, phi_a, phi_b,
                       coherence_rate: float = 0.0) -> dict[str, np.ndarray]:
    """All four channel coefficients for explicit parameter values."""
    d = np.asarray(omega, dtype=float) - omega_ge + 1j * (coherence_rate + gamma_a + gamma_b)
    n_a = 1j * gamma_a * np.exp(1j * phi_a)
    n_b = 1j * gamma_b * np.exp(1j * phi_b)
    n_x = 1j * math.sqrt(gamma_a * gamma_b) * np.exp(0.5j * (phi_a + phi_b))
    cross = n_x / d
    return {"AA": 1.0 - n_a / d, "BB": 1.0 - n_b / d, "AB": cross, "BA": cross}


def _stack_complex(values: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([
        np.concatenate([values[ch].real, values[ch].imag]) for ch in CHANNELS
    ])


def _four_channel_derivatives(omega, x, coherence_rate):
    """Analytic channel derivatives w.r.t. the five fit parameters."""
    gamma_a, gamma_b, omega_ge, phi_a, phi_b = x
    d = omega - omega_ge + 1j * (coherence_rate + gamma_a + gamma_b)
    d2 = d * d
    n_a = 1j * gamma_a * np.exp(1j * phi_a)
    n_b = 1j * gamma_b * np.exp(1j * phi_b)
    n_x = 1j * math.sqrt(gamma_a * gamma_b) * np.exp(0.5j * (phi_a + phi_b))

    da = {
        "AA": -(1j * np.exp(1j * phi_a)) / d + 1j * n_a / d2,
        "BB": 1j * n_b / d2,
        "X": n_x / (2.0 * gamma_a * d) - 1j * n_x / d2,
    }
    db = {
        "AA": 1j * n_a / d2,
        "BB": -(1j * np.exp(1j * phi_b)) / d + 1j * n_b / d2,
        "X": n_x / (2.0 * gamma_b * d) - 1j * n_x / d2,
    }
    dw = {"AA": -n_a / d2, "BB": -n_b / d2, "X": n_x / d2}
    dpa = {"AA": -1j * n_a / d, "BB": np.zeros_like(d), "X": 0.5j * n_x / d}
    dpb = {"AA": np.zeros_like(d), "BB": -1j * n_b / d, "X": 0.5j * n_x / d}

    out = []
    for deriv in (da, db, dw, dpa, dpb):
        out.append({"AA": deriv["AA"], "BB": deriv["BB"],
                    "AB": deriv["X"], "BA": deriv["X"]})
    return out


def _four_channel_jacobian(omega, x, coherence_rate) -> np.ndarray:
    cols = []
    for deriv in _four_channel_derivatives(omega, x, coherence_rate):
        cols.append(_stack_complex(deriv))
    return np.column_stack(cols)


def initial_guess_from_spectrum(calibrated: ChannelSpectrum) -> CellParams:
    """Data-driven starting point for the four-channel fit.

    The resonance sits at the through-dip minimum; the dip depths give the
    coupling split (``1 - |t_xx|`` at resonance is ``gamma_x`` over the
    total) and the FWHM of the AA dip sets the total linewidth.
    """
    f = calibrated.freqs
    mag_aa = np.abs(calibrated.channel("AA"))
    mag_bb = np.abs(calibrated.channel("BB"))
    i0 = int(np.argmin(mag_aa))
    depth_a = float(np.clip(1.0 - mag_aa[i0], 0.05, 0.95))
    depth_b = float(np.clip(1.0 - mag_bb[int(np.argmin(mag_bb))], 0.05, 0.95))

    half = 1.0 - 0.5 * depth_a
    above = mag_aa > half
    left = np.flatnonzero(above[:i0])
    right = np.flatnonzero(above[i0:])
    if left.size and right.size:
        fwhm = f[i0 + right[0]] - f[left[-1]]
    else:
        fwhm = (f[-1] - f[0]) / 5.0
    total = math.pi * float(fwhm)  # half width sum gamma_a + gamma_b, rad/s
    return CellParams(
        gamma_a=depth_a * total,
        gamma_b=depth_b * total,
        omega_ge=2.0 * math.pi * float(f[i0]),
    )


def fit_four_channel(calibrated: ChannelSpectrum, init: CellParams,
                     seed: int | None = None) -> FitReport:
    """Simultaneous complex fit of all four calibrated channels.

    Free parameters are ``gamma_a``, ``gamma_b``, ``omega_ge``, ``phi_a``
    and ``phi_b``; the residual stacks real and imaginary parts of every
    channel.  Dephasing and bath rates are held at their ``init`` values.
    Deterministic given the data and starting point; non-convergence is
    reported through ``converged=False`` rather than raised.
    """
    omega = 2.0 * np.pi * calibrated.freqs
    data = _stack_complex({ch: calibrated.channel(ch) for ch in CHANNELS})
    coherence = init.coherence_rate
    scale = init.gamma_sum

    def residual(x):
        return _stack_complex(four_channel_model(omega, *x, coherence)) - data

    def jacobian(x):
        return _four_channel_jacobian(omega, x, coherence)

    x0 = np.array([init.gamma_a, init.gamma_b, init.omega_ge, init.phi_a, init.phi_b])
    eps = 1e-6
    lower = [1e-3 * scale, 1e-3 * scale, -np.inf, -np.pi / 2 + eps, -np.pi / 2 + eps]
    upper = [np.inf, np.inf, np.inf, np.pi / 2 - eps, np.pi / 2 - eps]
    result = least_squares(
        residual, x0, jac=jacobian, bounds=(lower, upper), method="trf",
        x_scale=[scale, scale, scale, 1.0, 1.0],
        xtol=STEP_TOL, ftol=STEP_TOL, gtol=None, max_nfev=MAX_ITER,
    )
    return _finish_report(_FOUR_CHANNEL_NAMES, result, seed)


# ---------------------------------------------------------------------------
# efficiency and dephasing reconstruction


def efficiency_trace(raw: ChannelSpectrum, floor: float = REFERENCE_FLOOR) -> np.ndarray:
    """Transfer efficiency ``(t_AB t_BA) / (t_AA t_BB)`` from raw traces.

    Needs no calibration: the line transmissions cancel in the ratio, so
    raw measured channels can be used directly (the residual isolation
    contributes only small additive corrections).
    """
    denom = raw.channel("AA") * raw.channel("BB")
    low = np.abs(denom) < floor**2
    if np.any(low):
        raise FitError(
            f"through channels below division floor at {int(low.sum())} points"
        )
    return raw.channel("AB") * raw.channel("BA") / denom


def fit_E_polynomial(e_values, ib_ma, seed: int | None = None) -> FitReport:
    """Quadratic fit of resonant efficiency versus bias current (mA).

    Returns coefficients ``c2`` (per mA^2), ``c1`` (per mA) and ``c0``.
    """
    ib = np.asarray(ib_ma, dtype=float)
    e = np.asarray(e_values, dtype=float)
    if ib.size < 3:
        raise FitError("need at least 3 bias points for a quadratic fit")
    design = np.column_stack([ib**2, ib, np.ones_like(ib)])
    return _linear_report(("c2", "c1", "c0"), design, e, seed)


def gamma_phi_from_E(e: float, gamma_a: float, gamma_b: float,
                     clamp: bool = True) -> float:
    """Pure dephasing rate implied by a resonant efficiency value.

    Inverts the resonant efficiency for the positive root of
    ``r^2/(gamma_a gamma_b) + r (1/gamma_a + 1/gamma_b) + 1 - 1/E = 0``.
    Values slightly above 1 occur in normalized noisy data; by default
    they are clamped to 1 (zero dephasing) with a warning.
    """
    if gamma_a <= 0 or gamma_b <= 0:
        raise ValueError("couplings must be > 0")
    if not np.isfinite(e) or e <= 0:
        raise ValueError(f"efficiency must be in (0, 1], got {e}")
    if e > 1.0:
        if not clamp:
            raise ValueError(f"efficiency {e} > 1 has no real dephasing solution")
        warnings.warn(f"efficiency {e:.4f} > 1 clamped to 1", stacklevel=2)
        e = 1.0
    qa = 1.0 / (gamma_a * gamma_b)
    qb = 1.0 / gamma_a + 1.0 / gamma_b
    qc = 1.0 - 1.0 / e
    disc = qb * qb - 4.0 * qa * qc
    return float((-qb + math.sqrt(disc)) / (2.0 * qa))


def fit_flux_noise(gamma_phi, ib_ma, flux: FluxModel,
                   seed: int | None = None) -> FitReport:
    """Bias-current noise density from dephasing versus flux bias.

    Linear least squares of ``gamma_phi = pi (d omega/d I)^2 s_i +
    gamma_phi_0`` with the frequency slope supplied by the flux model
    (converted to rad/s per ampere).  Returns ``s_i`` in A^2/Hz and
    ``gamma_phi_0`` in rad/s.
    """
    ib = np.asarray(ib_ma, dtype=float)
    gp = np.asarray(gamma_phi, dtype=float)
    if ib.size < 3:
        raise FitError("need at least 3 bias points")
    slopes = flux.slope(ib) * 1e3  # rad/s per mA -> rad/s per A
    if np.allclose(slopes, 0.0):
        raise FitError("all frequency slopes vanish (sweet-spot-only data); s_i unidentifiable")
    design = np.column_stack([np.pi * slopes**2, np.ones_like(slopes)])
    return _linear_report(("s_i", "gamma_phi_0"), design, gp, seed)


def fit_thermal(e_values, temps_k, gamma_a: float, gamma_b: float,
                omega_ge: float, seed: int | None = None) -> FitReport:
    """Zero-temperature relaxation/dephasing rates from efficiency vs temperature.

    Each temperature maps to a thermal photon number; the combined
    coherence rate grows linearly with it.  Starting values come from
    inverting the efficiency pointwise and fitting the implied rate
    linearly in the photon number, then the rates are polished with a
    bounded nonlinear fit.  Returns ``gamma1_zero`` and ``gamma_phi_zero``
    (rad/s).
    """
    temps = np.asarray(temps_k, dtype=float)
    e = np.asarray(e_values, dtype=float)
    if np.any(temps <= 0):
        raise ValueError("temperatures must be > 0")
    n_th = n_thermal(temps, omega_ge)

    rates = np.array([
        gamma_phi_from_E(min(float(v), 1.0), gamma_a, gamma_b) for v in e
    ])
    design = np.column_stack([n_th, np.ones_like(n_th)])
    (slope, intercept), *_ = np.linalg.lstsq(design, rates, rcond=None)
    g1_init = max(2.0 * intercept, 1e-6 * max(slope, 1.0))
    gphi_init = max(slope - g1_init, 1e-6 * max(slope, 1.0))

    def residual(x):
        g1, gphi = x
        rate = n_th * (g1 + gphi) + 0.5 * g1
        return resonant_efficiency(gamma_a, gamma_b, rate) - e

    result = least_squares(
        residual, [g1_init, gphi_init], bounds=([0.0, 0.0], [np.inf, np.inf]),
        method="trf", x_scale=[max(g1_init, 1.0), max(gphi_init, 1.0)],
        xtol=STEP_TOL, ftol=STEP_TOL, max_nfev=MAX_ITER,
    )
    return _finish_report(("gamma1_zero", "gamma_phi_zero"), result, seed)


def as_thermal_coefficients(report: FitReport) -> ThermalCoefficients:
    return ThermalCoefficients(report.value("gamma1_zero"),
                               report.value("gamma_phi_zero"))


def fit_saturation(magnitudes, n_avg, seed: int | None = None) -> FitReport:
    """Fit the drive-saturation curve ``a - b / (1 + n^c / d)``.

    Requires at least 4 photon numbers spanning two decades.  Starting
    values take the low- and high-drive plateaus from the data edges and
    the half-response point for the scale ``d``.
    """
    n = np.asarray(n_avg, dtype=float)
    y = np.asarray(magnitudes, dtype=float)
    pos = n[n > 0]
    if n.size < 4 or pos.size == 0 or pos.max() / pos.min() < 100.0:
        raise FitError("need >= 4 photon numbers spanning at least two decades")
    order = np.argsort(n)
    n, y = n[order], y[order]

    lo = float(np.mean(y[:2]))
    hi = float(np.mean(y[-2:]))
    a0, b0 = hi, hi - lo
    half = 0.5 * (lo + hi)
    d0 = float(n[int(np.argmin(np.abs(y - half)))])
    d0 = max(d0, float(pos.min()))

    def residual(x):
        a, b, c, d = x
        return a - b / (1.0 + n**c / d) - y

    result = least_squares(
        residual, [a0, b0, 1.0, d0],
        bounds=([-np.inf, -np.inf, 1e-3, 1e-12], [np.inf, np.inf, 10.0, np.inf]),
        method="trf", x_scale=[1.0, 1.0, 1.0, max(d0, 1e-6)],
        xtol=STEP_TOL, ftol=STEP_TOL, max_nfev=MAX_ITER,
    )
    return _finish_report(("a", "b", "c", "d"), result, seed)


def as_saturation_params(report: FitReport) -> SaturationParams:
    return SaturationParams(report.value("a"), report.value("b"),
                            report.value("c"), report.value("d"))


# ---------------------------------------------------------------------------
# time-domain fits


def fit_T1(populations, delays_s, seed: int | None = None) -> FitReport:
    """Exponential energy-relaxation fit ``p0 exp(-t/T1) + p_inf``.

    Returns ``t1`` (s), ``p0`` and ``p_inf``.  A vanishing initial
    population makes ``t1`` unidentifiable and is flagged.
    """
    t = np.asarray(delays_s, dtype=float)
    p = np.asarray(populations, dtype=float)
    if t.size < 5:
        raise FitError("need at least 5 delay points")
    p_inf0 = float(np.mean(p[-max(2, t.size // 5):]))
    p00 = float(p[0] - p_inf0)
    t10 = float((t[-1] - t[0]) / 3.0)

    def residual(x):
        p0, t1, p_inf = x
        return p0 * np.exp(-t / t1) + p_inf - p

    result = least_squares(
        residual, [p00, max(t10, 1e-12), p_inf0],
        bounds=([-np.inf, 1e-15, -np.inf], [np.inf, np.inf, np.inf]),
        method="trf", x_scale=[max(abs(p00), 0.1), max(t10, 1e-12), 0.1],
        xtol=STEP_TOL, ftol=STEP_TOL, max_nfev=MAX_ITER,
    )
    report = _finish_report(("p0", "t1", "p_inf"), result, seed)
    if abs(report.value("p0")) < 1e-6:
        report = FitReport(report.params, report.sigma, report.residual_norm,
                           report.n_iter, report.converged, report.seed,
                           report.flags + ("unidentifiable:t1",))
    if (t[-1] - t[0]) < 2.0 * report.value("t1"):
        warnings.warn("delay span is below twice the fitted T1", stacklevel=2)
    return report


def _dominant_period(t: np.ndarray, p: np.ndarray) -> float:
    """Oscillation period estimate from the FFT of a detrended trace."""
    uniform = np.linspace(t[0], t[-1], t.size)
    resampled = np.interp(uniform, t, p)
    spectrum = np.abs(np.fft.rfft(resampled - resampled.mean()))
    freqs = np.fft.rfftfreq(t.size, d=(uniform[1] - uniform[0]))
    k = int(np.argmax(spectrum[1:])) + 1
    return 1.0 / float(freqs[k])


def fit_rabi_decay(populations, durations_s, seed: int | None = None) -> FitReport:
    """Damped Rabi-oscillation fit.

    Model ``(p_max sin^2(pi t / (2 t_pi)) - p_inf) exp(-t/T_R) + p_inf``;
    returns ``t_r`` (s), ``p_max``, ``t_pi`` (s) and ``p_inf``.  The
    oscillation period starting value comes from the trace's FFT.
    """
    t = np.asarray(durations_s, dtype=float)
    p = np.asarray(populations, dtype=float)
    if t.size < 8:
        raise FitError("need at least 8 duration points")
    period = _dominant_period(t, p)
    t_pi0 = period / 2.0
    if (t[-1] - t[0]) < 3.0 * period:
        warnings.warn("fewer than 3 oscillation periods sampled", stacklevel=2)
    p_inf0 = float(np.mean(p[-max(2, t.size // 5):]))
    p_max0 = float(np.max(p))
    t_r0 = float((t[-1] - t[0]) / 3.0)

    def residual(x):
        p_max, t_pi, p_inf, t_r = x
        osc = p_max * np.sin(np.pi * t / (2.0 * t_pi)) ** 2 - p_inf
        return osc * np.exp(-t / t_r) + p_inf - p

    result = least_squares(
        residual, [p_max0, t_pi0, p_inf0, max(t_r0, 1e-12)],
        bounds=([0.0, 1e-15, -np.inf, 1e-15], [np.inf, np.inf, np.inf, np.inf]),
        method="trf", x_scale=[max(p_max0, 0.1), t_pi0, 0.1, max(t_r0, 1e-12)],
        xtol=STEP_TOL, ftol=STEP_TOL, max_nfev=MAX_ITER,
    )
    return _finish_report(("p_max", "t_pi", "p_inf", "t_r"), result, seed)


def coupling_limited_t1(gamma_a: float, gamma_b: float) -> float:
    """Relaxation time if decay went only into the two waveguides (s)."""
    return 1.0 / (2.0 * (gamma_a + gamma_b))


def pi_amplitude_consistency(pi_amp_a: float, pi_amp_b: float,
                             gamma_a: float, gamma_b: float) -> tuple[float, float]:
    """Cross-check of the pi-pulse amplitude ratio against the coupling ratio.

    A pi rotation through the weaker-coupled waveguide needs a larger
    amplitude, so ``pi_a / pi_b`` should track ``gamma_b / gamma_a``.
    Returns ``(amplitude_ratio, coupling_ratio)`` for reporting.
    """
    return pi_amp_a / pi_amp_b, gamma_b / gamma_a


def rate_budget(t1_s: float, t_r_s: float, gamma_a: float, gamma_b: float,
                t1_unc_s: float = 0.0, t_r_unc_s: float = 0.0) -> RateBudget:
    """Decompose measured decay times into coupling, bath and dephasing.

    ``gamma_1 = 1/T1`` feeds the bath rate ``gamma_1 - 2 gamma_a -
    2 gamma_b`` and the Rabi decay gives ``gamma_phi = 2 (gamma_R -
    3 gamma_1 / 4)``.  Intervals use worst-case endpoints of ``T1 +-
    unc`` and ``T_R +- unc`` (clipped at zero: rates are nonnegative).
    """
    if t1_s <= 0 or t_r_s <= 0:
        raise ValueError("decay times must be positive")
    if t1_unc_s >= t1_s or t_r_unc_s >= t_r_s:
        raise ValueError("uncertainties must be smaller than the decay times")
    gamma_1 = 1.0 / t1_s
    gamma_r = 1.0 / t_r_s

    def phi(t1, tr):
        return 2.0 * (1.0 / tr - 0.75 / t1)

    gamma_phi = phi(t1_s, t_r_s)
    phi_lo = phi(t1_s - t1_unc_s, t_r_s + t_r_unc_s)
    phi_hi = phi(t1_s + t1_unc_s, t_r_s - t_r_unc_s)
    phi_range = (max(0.0, min(phi_lo, phi_hi)), max(0.0, phi_lo, phi_hi))

    coupling = 2.0 * (gamma_a + gamma_b)
    bath_raw = gamma_1 - coupling
    bath_lo = 1.0 / (t1_s + t1_unc_s) - coupling
    bath_hi = 1.0 / (t1_s - t1_unc_s) - coupling
    if bath_hi < 0:
        warnings.warn(
            "measured T1 exceeds the coupling limit beyond its uncertainty",
            stacklevel=2,
        )
    return RateBudget(
        gamma_1=gamma_1,
        gamma_r=gamma_r,
        gamma_phi=max(0.0, gamma_phi),
        gamma_phi_range=phi_range,
        gamma_bath=max(0.0, bath_raw),
        gamma_bath_range=(bath_lo, bath_hi),
    )


# ---------------------------------------------------------------------------
# IQ population decomposition


def pca_populations(iq_clouds, zero_drive_key,
                    slack: float = POPULATION_SLACK) -> PopulationTrace:
    """Reconstruct excited-state populations from per-setting IQ clouds.

    The per-setting cloud means are projected onto their maximum-variance
    axis; the ground reference is anchored by the zero-drive setting and
    the excited reference is found by a one-dimensional search minimizing
    the worst-case violation of ``p in [0, 1]`` within the allowed slack,
    tie-broken toward a unit maximum population.  The result is invariant
    under global rotation and rescaling of the IQ plane.

    Parameters
    ----------
    iq_clouds : mapping
        Setting value (e.g. drive duration) -> complex sample array.
    zero_drive_key
        Key of the zero-drive (ground state) setting.
    slack : float
        Worst-case allowed excursion of populations outside [0, 1].
    """
    if zero_drive_key not in iq_clouds:
        raise ValueError("zero-drive setting missing from the clouds")
    keys = sorted(iq_clouds)
    if len(keys) < 2:
        raise ValueError("need at least 2 distinct settings")
    means = np.array([np.mean(np.asarray(iq_clouds[k], dtype=complex)) for k in keys])
    points = np.column_stack([means.real, means.imag])

    centered = points - points.mean(axis=0)
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    spread = math.sqrt(max(float(evals[-1]), 0.0))
    if spread <= 1e-12 * max(1.0, float(np.abs(means).max())):
        raise ValueError("degenerate clouds: settings are indistinguishable")
    axis = evecs[:, -1]

    proj = points @ axis
    x_g = float(proj[keys.index(zero_drive_key)])
    d = proj - x_g
    if d[int(np.argmax(np.abs(d)))] < 0:
        axis = -axis
        d = -d
    d_max = float(d.max())
    d_min = float(d.min())

    candidates = list(np.geomspace(0.25 * d_max, 4.0 * d_max, 801))
    candidates.append(d_max)
    candidates.append(d_max / (1.0 + slack))
    if d_min < 0:
        candidates.append(-d_min / slack)

    def violation(scale):
        p = d / scale
        over = max(0.0, float(p.max()) - (1.0 + slack))
        under = max(0.0, -slack - float(p.min()))
        return max(over, under)

    best = min(candidates,
               key=lambda s: (round(violation(s) / 1e-12), abs(d_max / s - 1.0)))
    p = d / best

    perp = centered - np.outer(centered @ axis, axis)
    residuals = np.linalg.norm(perp, axis=1) / best
    if np.any(p < -slack - 1e-9) or np.any(p > 1.0 + slack + 1e-9):
        warnings.warn("populations exceed the worst-case tolerance band", stacklevel=2)
    return PopulationTrace(
        times=np.asarray(keys, dtype=float),
        p=p,
        residuals=residuals,
        i_g=x_g,
        i_e=x_g + best,
    )
