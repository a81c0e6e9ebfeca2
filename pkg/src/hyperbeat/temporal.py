"""Biphoton waveform model and two-photon beating correlation functions.

tau is the detection-time difference in ns within one time-ordering sector
(Stokes photon first, so the waveform vanishes for tau < 0). The envelope
G0(tau) = |psi0(tau)|^2 integrates to amplitude_scale; with unit scale it
is a normalized probability density over tau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ENVELOPE_SHAPES = ("exponential", "damped_oscillation")
BEAT_SIGNS = ("minus_cos", "plus_cos_shifted")

# default time grid: 1 ns bins spanning both ordering sectors
DEFAULT_TAU_MIN = -200.0
DEFAULT_TAU_MAX = 200.0
DEFAULT_TAU_STEP = 1.0


def tau_grid(tau_min: float = DEFAULT_TAU_MIN, tau_max: float = DEFAULT_TAU_MAX,
             step: float = DEFAULT_TAU_STEP) -> np.ndarray:
    """Bin centers in ns, inclusive of both endpoints."""
    n = int(round((tau_max - tau_min) / step))
    return tau_min + step * np.arange(n + 1)


@dataclass(frozen=True)
class BiphotonEnvelope:
    """Parametric stand-in for the source waveform psi0(tau).

    shape            "exponential" or "damped_oscillation"
    decay_time       1/e time of |psi0|^2, ns
    rise_time        smooth turn-on time constant, ns (0 for a sharp edge)
    osc_freq         oscillation angular frequency, rad/ns (damped shape only)
    amplitude_scale  integral of G0 over tau; carries the pair flux
    """

    shape: str = "exponential"
    decay_time: float = 50.0
    rise_time: float = 1.0
    osc_freq: float = 0.0
    amplitude_scale: float = 1.0

    def __post_init__(self):
        if self.shape not in ENVELOPE_SHAPES:
            raise ValueError(f"shape must be one of {ENVELOPE_SHAPES}")
        if self.decay_time <= 0:
            raise ValueError("decay_time must be positive")
        if self.rise_time < 0:
            raise ValueError("rise_time must be >= 0")
        if self.amplitude_scale <= 0:
            raise ValueError("amplitude_scale must be positive")
        if self.shape == "exponential" and self.osc_freq:
            raise ValueError("osc_freq is only meaningful for damped_oscillation")


def _unnormalized_g2(env: BiphotonEnvelope, tau: np.ndarray) -> np.ndarray:
    t = np.maximum(tau, 0.0)
    prof = np.exp(-t / env.decay_time)
    if env.rise_time > 0:
        prof = prof * (1.0 - np.exp(-t / env.rise_time)) ** 2
    if env.shape == "damped_oscillation" and env.osc_freq:
        prof = prof * np.cos(0.5 * env.osc_freq * t) ** 2
    return prof * (tau >= 0)


def _exp_cos_integral(a: float, omega: float) -> float:
    # int_0^inf exp(-a t) cos(omega t) dt
    return a / (a * a + omega * omega)


def _norm_integral(env: BiphotonEnvelope) -> float:
    """Analytic integral of the unnormalized profile over tau >= 0."""
    a = 1.0 / env.decay_time
    if env.rise_time > 0:
        r = 1.0 / env.rise_time
        rates = [(1.0, a), (-2.0, a + r), (1.0, a + 2 * r)]
    else:
        rates = [(1.0, a)]
    if env.shape == "damped_oscillation" and env.osc_freq:
        # cos^2(w t / 2) = (1 + cos(w t)) / 2
        return sum(0.5 * c * (1.0 / b + _exp_cos_integral(b, env.osc_freq))
                   for c, b in rates)
    return sum(c / b for c, b in rates)


def envelope_eval(env: BiphotonEnvelope, tau) -> np.ndarray | float:
    """G0(tau) = |psi0(tau)|^2; zero for tau < 0.

    Normalized so the integral over tau equals amplitude_scale.
    """
    t = np.asarray(tau, dtype=float)
    vals = _unnormalized_g2(env, t) * (env.amplitude_scale / _norm_integral(env))
    return float(vals) if np.isscalar(tau) or t.ndim == 0 else vals


def envelope_amplitude(env: BiphotonEnvelope, tau) -> np.ndarray | float:
    """psi0(tau) = sqrt(G0(tau)), real and non-negative by convention."""
    return np.sqrt(envelope_eval(env, tau))


def spectral_bandwidth(env: BiphotonEnvelope, dt: float = 0.25,
                       t_max: float = 8192.0) -> float:
    """FWHM of the biphoton power spectrum |FT{psi0}|^2 in MHz.

    Computed from an FFT of the sampled amplitude; the FWHM crossing points
    are refined by linear interpolation. A pure exponential gives the
    Lorentzian width 1/(2 pi decay_time).
    """
    n = int(t_max / dt)
    t = dt * np.arange(n)
    psi = envelope_amplitude(env, t)
    spec = np.abs(np.fft.rfft(psi)) ** 2
    freq = np.fft.rfftfreq(n, d=dt)  # cycles/ns = GHz
    peak = spec.argmax()
    half = spec[peak] / 2.0
    # walk right from the peak to the half-power crossing
    above = np.flatnonzero(spec[peak:] < half)
    if above.size == 0:
        raise ValueError("spectrum does not fall to half maximum; enlarge t_max")
    hi = peak + above[0]
    f_hi = np.interp(half, [spec[hi], spec[hi - 1]], [freq[hi], freq[hi - 1]])
    if peak == 0:
        # spectrum symmetric around zero frequency
        width = 2.0 * f_hi
    else:
        below = np.flatnonzero(spec[peak::-1] < half)
        lo = peak - below[0]
        f_lo = np.interp(half, [spec[lo], spec[lo + 1]], [freq[lo], freq[lo + 1]])
        width = f_hi - f_lo
    return float(width * 1e3)  # GHz -> MHz


@dataclass(frozen=True)
class BeatingParams:
    """Shape of a beating correlation prefactor * G0 * [1 -/+ cos(delta tau - theta)].

    sign "minus_cos" gives the destructive-at-zero form, "plus_cos_shifted"
    the phase-tunable form.
    """

    delta: float
    theta: float = 0.0
    prefactor: float = 0.5
    sign: str = "minus_cos"

    def __post_init__(self):
        if self.prefactor <= 0:
            raise ValueError("prefactor must be positive")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.sign not in BEAT_SIGNS:
            raise ValueError(f"sign must be one of {BEAT_SIGNS}")

    @classmethod
    def from_freq_amplitudes(cls, amps, delta: float,
                             sector_weight: float = 0.5) -> "BeatingParams":
        """Beating parameters of a projected frequency qubit.

        Requires balanced branch amplitudes |a0| = |a1| (the unbalanced case
        is not a pure sinusoidal beat; use two_branch_g2 for it directly).
        """
        a0, a1 = np.asarray(amps, dtype=complex).reshape(2)
        if abs(abs(a0) - abs(a1)) > 1e-9:
            raise ValueError("branch amplitudes are unbalanced; no pure beat")
        theta = float(np.angle(a1) - np.angle(a0)) % (2 * np.pi)
        return cls(delta=delta, theta=theta,
                   prefactor=sector_weight * 2.0 * abs(a0) * abs(a1),
                   sign="plus_cos_shifted")


def beating_g2(env: BiphotonEnvelope, p: BeatingParams, tau) -> np.ndarray | float:
    """Beating correlation function at delay tau (ns)."""
    t = np.asarray(tau, dtype=float)
    osc = np.cos(p.delta * t - p.theta)
    mod = (1.0 - osc) if p.sign == "minus_cos" else (1.0 + osc)
    vals = p.prefactor * envelope_eval(env, t) * mod
    return float(vals) if np.isscalar(tau) or t.ndim == 0 else vals


def beating_wavefunction(env: BiphotonEnvelope, delta: float, tau) -> np.ndarray | complex:
    """Two-photon time-domain amplitude i psi0(tau) sin(delta tau / 2).

    Carrier phases are dropped; |result|^2 reproduces the minus_cos beating
    correlation with prefactor 1/2.
    """
    t = np.asarray(tau, dtype=float)
    vals = 1j * envelope_amplitude(env, t) * np.sin(0.5 * delta * t)
    return complex(vals) if np.isscalar(tau) or t.ndim == 0 else vals


def two_branch_g2(env: BiphotonEnvelope, amps, delta: float, tau,
                  sector_weight: float = 0.5) -> np.ndarray | float:
    """Correlation of a general (possibly unbalanced) frequency qubit.

    G(tau) = sector_weight * G0(tau) * |a0 + a1 exp(-i delta tau)|^2, where
    (a0, a1) come from project_analyzers and carry the projection losses.
    The sector weight accounts for the beam-splitter cross-port
    post-selection of one time ordering.
    """
    a0, a1 = np.asarray(amps, dtype=complex).reshape(2)
    t = np.asarray(tau, dtype=float)
    interference = np.abs(a0 + a1 * np.exp(-1j * delta * t)) ** 2
    vals = sector_weight * envelope_eval(env, t) * interference
    return float(vals) if np.isscalar(tau) or t.ndim == 0 else vals
