"""Closed-form response model of a two-waveguide emitter cell.

A single two-level emitter couples to two open waveguides A and B with
rates ``gamma_a`` and ``gamma_b`` (half widths, rad/s).  Weak-probe
scattering splits into four channels: through transmission within each
waveguide (``AA``, ``BB``) and emitter-mediated transfer between the
waveguides (``AB``, ``BA``).  On resonance the emitter back-reflects and
re-emits, producing the characteristic through dip and cross peak.

Dephasing and relaxation into a thermal bath enter as an imaginary shift
of the transition frequency, ``omega_ge -> omega_ge - i (gamma_phi +
gamma_bath / 2)``, applied uniformly in every coefficient denominator.
Small complex coupling phases ``phi_a``, ``phi_b`` multiply only the
numerator couplings (Fano-type corrections from imperfect lines); the
total linewidth in the denominator stays ``gamma_a + gamma_b`` so the
pole remains physical.

All rates and frequencies in this package are angular (rad/s).  Files and
the CLI use linear Hz; the conversion happens exactly once at the IO
boundary (:mod:`routercell.io`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.constants import hbar, k as k_B

from .network import PortMatrix

__all__ = [
    "CHANNELS",
    "THROUGH_CHANNELS",
    "CROSS_CHANNELS",
    "CellParams",
    "FluxModel",
    "ThermalCoefficients",
    "SaturationParams",
    "DressedModel",
    "DressedLines",
    "t_through",
    "t_cross",
    "cell_coefficients",
    "cell_smatrix",
    "efficiency",
    "resonant_efficiency",
    "omega_ge_of_bias",
    "n_thermal",
    "efficiency_thermal",
    "photons_in_pulse",
    "saturation_curve",
    "dressed_lines",
]

THROUGH_CHANNELS = ("AA", "BB")
CROSS_CHANNELS = ("AB", "BA")
#: Canonical channel order used throughout the package (AA means A -> A').
CHANNELS = ("AA", "BB", "AB", "BA")


def _check_finite(name: str, value) -> None:
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class CellParams:
    """Physical parameters of the basic cell.

    Parameters
    ----------
    gamma_a, gamma_b : float
        Emitter-waveguide coupling rates (rad/s), strictly positive.
    phi_a, phi_b : float
        Small phenomenological coupling phases (rad), |phi| < pi/2.
    omega_ge : float
        Ground to first-excited transition frequency (rad/s).
    omega_ef : float, optional
        First to second excited transition frequency (rad/s).
    gamma_phi : float
        Pure dephasing rate (rad/s), >= 0.
    gamma_bath : float
        Relaxation rate into the thermal bath (rad/s), >= 0.
    """

    gamma_a: float
    gamma_b: float
    omega_ge: float
    phi_a: float = 0.0
    phi_b: float = 0.0
    omega_ef: float | None = None
    gamma_phi: float = 0.0
    gamma_bath: float = 0.0

    def __post_init__(self):
        for name in ("gamma_a", "gamma_b", "omega_ge", "phi_a", "phi_b",
                     "gamma_phi", "gamma_bath"):
            _check_finite(name, getattr(self, name))
        if self.gamma_a <= 0 or self.gamma_b <= 0:
            raise ValueError("coupling rates gamma_a, gamma_b must be > 0")
        if abs(self.phi_a) >= math.pi / 2 or abs(self.phi_b) >= math.pi / 2:
            raise ValueError("coupling phases must satisfy |phi| < pi/2")
        if self.gamma_phi < 0 or self.gamma_bath < 0:
            raise ValueError("gamma_phi and gamma_bath must be >= 0")
        if self.omega_ef is not None:
            _check_finite("omega_ef", self.omega_ef)

    @property
    def gamma_sum(self) -> float:
        return self.gamma_a + self.gamma_b

    @property
    def coherence_rate(self) -> float:
        """Effective imaginary shift of the transition, gamma_phi + gamma_bath/2."""
        return self.gamma_phi + 0.5 * self.gamma_bath


@dataclass(frozen=True)
class FluxModel:
    """Quadratic transition-frequency dependence on bias current.

    ``curvature`` is in rad/s per mA^2 (non-positive for a transmon biased
    around its upper sweet spot), ``linear`` in rad/s per mA, and
    ``sweet_spot_omega`` is the transition frequency at zero bias (rad/s).
    """

    curvature: float
    sweet_spot_omega: float
    linear: float = 0.0

    def __post_init__(self):
        _check_finite("curvature", self.curvature)
        _check_finite("linear", self.linear)
        _check_finite("sweet_spot_omega", self.sweet_spot_omega)
        if self.curvature > 0:
            raise ValueError("curvature must be <= 0 around an upper sweet spot")

    def slope(self, ib_ma):
        """d(omega_ge)/d(I_b) in rad/s per mA."""
        return self.linear + 2.0 * self.curvature * np.asarray(ib_ma, dtype=float)


@dataclass(frozen=True)
class ThermalCoefficients:
    """Per-photon growth of relaxation and dephasing with bath occupation.

    ``gamma_bath = (2 n_th + 1) gamma1_zero`` and ``gamma_phi = n_th *
    gamma_phi_zero_per_photon``; both zero-temperature rates in rad/s.
    """

    gamma1_zero: float
    gamma_phi_zero_per_photon: float

    def __post_init__(self):
        if self.gamma1_zero < 0 or self.gamma_phi_zero_per_photon < 0:
            raise ValueError("thermal rate coefficients must be >= 0")

    def gamma_bath(self, n_th):
        return (2.0 * np.asarray(n_th, dtype=float) + 1.0) * self.gamma1_zero

    def gamma_phi(self, n_th):
        return np.asarray(n_th, dtype=float) * self.gamma_phi_zero_per_photon

    def coherence_rate(self, n_th):
        """Combined rate gamma_phi + gamma_bath/2 entering the efficiency."""
        n = np.asarray(n_th, dtype=float)
        return n * (self.gamma1_zero + self.gamma_phi_zero_per_photon) + 0.5 * self.gamma1_zero


@dataclass(frozen=True)
class SaturationParams:
    """Phenomenological drive-saturation curve ``a - b / (1 + n^c / d)``.

    ``a`` is the strong-drive asymptote, ``a - b`` the weak-drive limit,
    ``c`` the power-law exponent and ``d`` the photon-number scale.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("photon-number scale d must be > 0")
        if self.c <= 0:
            raise ValueError("exponent c must be > 0")


@dataclass(frozen=True)
class DressedModel:
    """Drive-field coupling strengths for the dressed transition lines."""

    lambda_red: float
    lambda_blue: float
    omega_ge: float
    omega_ef: float

    def __post_init__(self):
        if self.lambda_red <= 0 or self.lambda_blue <= 0:
            raise ValueError("dressed coupling strengths must be > 0")


class DressedLines(NamedTuple):
    """Red/blue shifted transition frequencies for both manifolds (rad/s)."""

    ge_red: float | np.ndarray
    ge_blue: float | np.ndarray
    ef_red: float | np.ndarray
    ef_blue: float | np.ndarray


def _denominator(omega, p: CellParams):
    """Common resonance denominator with the complex frequency shift."""
    delta = np.asarray(omega, dtype=float) - p.omega_ge
    return delta + 1j * (p.coherence_rate + p.gamma_sum)


def _numerator_through(channel: str, p: CellParams) -> complex:
    if channel == "AA":
        return 1j * p.gamma_a * np.exp(1j * p.phi_a)
    if channel == "BB":
        return 1j * p.gamma_b * np.exp(1j * p.phi_b)
    raise ValueError(f"unknown through channel {channel!r}; expected 'AA' or 'BB'")


def _numerator_cross(p: CellParams) -> complex:
    return 1j * math.sqrt(p.gamma_a * p.gamma_b) * np.exp(1j * (p.phi_a + p.phi_b) / 2.0)


def t_through(channel: str, omega, p: CellParams):
    """Through-transmission coefficient of waveguide A (``AA``) or B (``BB``).

    Returns ``1 - i gamma_x e^{i phi_x} / (delta + i (gamma_a + gamma_b))``
    with the complex detuning ``delta = omega - (omega_ge - i (gamma_phi +
    gamma_bath/2))``.  At resonance with real couplings this reduces to
    ``gamma_other / (gamma_a + gamma_b)``.

    Parameters
    ----------
    channel : {'AA', 'BB'}
        Driven waveguide.
    omega : float or ndarray
        Probe frequency (rad/s).
    p : CellParams

    Returns
    -------
    complex or ndarray
    """
    _check_finite("omega", omega)
    out = 1.0 - _numerator_through(channel, p) / _denominator(omega, p)
    return complex(out) if np.ndim(out) == 0 else out


def t_cross(direction: str, omega, p: CellParams):
    """Cross-transmission coefficient between the waveguides.

    Returns ``i sqrt(gamma_a gamma_b) e^{i (phi_a + phi_b)/2} / (delta +
    i (gamma_a + gamma_b))``; identical for both directions (the model is
    reciprocal).
    """
    if direction not in CROSS_CHANNELS:
        raise ValueError(f"unknown cross direction {direction!r}; expected 'AB' or 'BA'")
    _check_finite("omega", omega)
    out = _numerator_cross(p) / _denominator(omega, p)
    return complex(out) if np.ndim(out) == 0 else out


def cell_coefficients(omega, p: CellParams) -> dict[str, complex | np.ndarray]:
    """All four channel coefficients at once, keyed by channel name."""
    return {
        "AA": t_through("AA", omega, p),
        "BB": t_through("BB", omega, p),
        "AB": t_cross("AB", omega, p),
        "BA": t_cross("BA", omega, p),
    }


def cell_smatrix(omega: float, p: CellParams) -> PortMatrix:
    """Full 4x4 cell S-matrix in port order (A-in, A-out, B-in, B-out).

    Transmission entries come from :func:`t_through` / :func:`t_cross`;
    reflections use the point-scatterer form ``-i gamma_x e^{i phi_x} /
    (delta + i (gamma_a + gamma_b))`` so that the lossless real-coupling
    matrix is exactly unitary.
    """
    _check_finite("omega", omega)
    d = _denominator(float(omega), p)
    r_a = -_numerator_through("AA", p) / d
    r_b = -_numerator_through("BB", p) / d
    t_a = 1.0 + r_a
    t_b = 1.0 + r_b
    x = _numerator_cross(p) / d
    s = np.array(
        [
            [r_a, t_a, x, x],
            [t_a, r_a, x, x],
            [x, x, r_b, t_b],
            [x, x, t_b, r_b],
        ],
        dtype=complex,
    )
    return PortMatrix(s)


def efficiency(delta, p: CellParams):
    """Calibration-free transfer efficiency ``(t_AB t_BA) / (t_AA t_BB)``.

    Evaluated in closed form as ``n_x^2 / ((D - n_a)(D - n_b))`` with the
    same numerators and denominator as the transmission coefficients, so
    it equals the four-coefficient ratio to machine precision.  At
    ``delta = 0`` with real couplings this is the real quantity
    ``1 / (1 + r (1/gamma_a + 1/gamma_b) + r^2/(gamma_a gamma_b))`` with
    ``r = gamma_phi + gamma_bath/2``, equal to 1 for a fully coherent cell.

    Parameters
    ----------
    delta : float or ndarray
        Detuning ``omega - omega_ge`` (rad/s).
    p : CellParams
    """
    if p.gamma_a == 0 or p.gamma_b == 0:
        raise ValueError("efficiency requires nonzero couplings")
    _check_finite("delta", delta)
    d = np.asarray(delta, dtype=float) + 1j * (p.coherence_rate + p.gamma_sum)
    n_a = _numerator_through("AA", p)
    n_b = _numerator_through("BB", p)
    n_x = _numerator_cross(p)
    out = n_x**2 / ((d - n_a) * (d - n_b))
    return complex(out) if np.ndim(out) == 0 else out


def resonant_efficiency(gamma_a: float, gamma_b: float, rate):
    """Resonant efficiency for a combined coherence rate (rad/s).

    ``E = 1 / (1 + rate (1/gamma_a + 1/gamma_b) + rate^2 / (gamma_a
    gamma_b))`` -- the closed resonant form of :func:`efficiency` with
    ``rate = gamma_phi + gamma_bath / 2``.
    """
    if gamma_a <= 0 or gamma_b <= 0:
        raise ValueError("couplings must be > 0")
    r = np.asarray(rate, dtype=float)
    out = 1.0 / (1.0 + r * (1.0 / gamma_a + 1.0 / gamma_b) + r**2 / (gamma_a * gamma_b))
    return float(out) if np.ndim(out) == 0 else out


def omega_ge_of_bias(ib_ma, f: FluxModel):
    """Transition frequency at bias current ``ib_ma`` (mA), in rad/s."""
    ib = np.asarray(ib_ma, dtype=float)
    out = f.sweet_spot_omega + f.linear * ib + f.curvature * ib**2
    return float(out) if np.ndim(out) == 0 else out


def n_thermal(temperature, omega):
    """Bose-Einstein mean photon number at ``temperature`` (K) and ``omega`` (rad/s)."""
    t = np.asarray(temperature, dtype=float)
    w = np.asarray(omega, dtype=float)
    if np.any(t <= 0):
        raise ValueError("temperature must be > 0")
    if np.any(w <= 0):
        raise ValueError("omega must be > 0")
    with np.errstate(over="ignore"):  # expm1 -> inf -> occupation 0 at T -> 0
        out = 1.0 / np.expm1(hbar * w / (k_B * t))
    return float(out) if np.ndim(out) == 0 else out


def efficiency_thermal(n_th, gamma_a: float, gamma_b: float,
                       tc: ThermalCoefficients):
    """Resonant efficiency versus thermal photon number.

    The bath heats both relaxation and dephasing linearly in ``n_th``;
    the combined rate ``n_th (gamma1_zero + gamma_phi_zero) + gamma1_zero/2``
    replaces the pure dephasing rate in the resonant efficiency.
    """
    if np.any(np.asarray(n_th) < 0):
        raise ValueError("n_th must be >= 0")
    return resonant_efficiency(gamma_a, gamma_b, tc.coherence_rate(n_th))


def photons_in_pulse(amplitude, impedance, duration, omega):
    """Mean photon number in a rectangular pulse.

    Pulse power ``A^2 / (2 Z)`` times duration, divided by the photon
    energy ``hbar omega``.
    """
    a = np.asarray(amplitude, dtype=float)
    if np.any(a < 0) or impedance <= 0 or duration <= 0 or np.any(np.asarray(omega) <= 0):
        raise ValueError("photons_in_pulse requires nonnegative amplitude and positive Z, duration, omega")
    out = (a**2 / (2.0 * impedance)) * duration / (hbar * np.asarray(omega, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def saturation_curve(n_avg, s: SaturationParams):
    """Transmission magnitude versus mean photon number, ``a - b/(1 + n^c/d)``."""
    n = np.asarray(n_avg, dtype=float)
    if np.any(n < 0):
        raise ValueError("n_avg must be >= 0")
    out = s.a - s.b / (1.0 + n**s.c / s.d)
    return float(out) if np.ndim(out) == 0 else out


def dressed_lines(omega_drive, n_photons, m: DressedModel) -> DressedLines:
    """Red/blue shifted transition lines under a strong dressing field.

    The drive splits each transition by ``sqrt((omega - omega_ge)^2 +
    4 lambda^2 N)``; red lines shift down by half the splitting evaluated
    with ``lambda_red`` and blue lines up by half the splitting with
    ``lambda_blue``, for both the ge and ef manifolds.
    """
    n = np.asarray(n_photons, dtype=float)
    if np.any(n < 0):
        raise ValueError("n_photons must be >= 0")
    det2 = (np.asarray(omega_drive, dtype=float) - m.omega_ge) ** 2
    half_red = 0.5 * np.sqrt(det2 + 4.0 * m.lambda_red**2 * n)
    half_blue = 0.5 * np.sqrt(det2 + 4.0 * m.lambda_blue**2 * n)
    return DressedLines(
        ge_red=m.omega_ge - half_red,
        ge_blue=m.omega_ge + half_blue,
        ef_red=m.omega_ef - half_red,
        ef_blue=m.omega_ef + half_blue,
    )
