"""Fringe and beat analysis: weighted sinusoid fits, envelope normalization,
phase extraction.

Visibility is amplitude/offset of the fitted sinusoid, the standard
(max - min)/(max + min) of an interference fringe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .detection import CoincidenceHistogram


class FitError(RuntimeError):
    """A fit failed to converge or the model is not identifiable."""


@dataclass(frozen=True)
class SinusoidFit:
    """Result of fitting y = offset + amplitude * cos(2 pi x / period - phase).

    ``period`` is in the units of x (ns for beat fits, degrees or radians
    for polarizer scans). visibility = amplitude / offset.
    """

    amplitude: float
    offset: float
    phase: float
    period: float
    visibility: float
    visibility_std: float
    chi2: float
    dof: int

    def __post_init__(self):
        if self.offset <= 0:
            raise FitError("fitted offset must be positive")
        if not 0 <= self.visibility <= 1 + 3 * self.visibility_std:
            raise FitError(
                f"unphysical visibility {self.visibility:.3f} "
                f"+/- {self.visibility_std:.3f}")

    def to_json(self) -> str:
        return json.dumps({
            "amplitude": self.amplitude,
            "offset": self.offset,
            "phase": self.phase,
            "period": self.period,
            "visibility": self.visibility,
            "visibility_std": self.visibility_std,
            "chi2": self.chi2,
            "dof": self.dof,
        }, sort_keys=True, indent=1) + "\n"


def _linear_presolve(x, y, sigma, omega):
    """Weighted linear LSQ of y = c0 + a cos(wx) + b sin(wx)."""
    design = np.column_stack([np.ones_like(x), np.cos(omega * x), np.sin(omega * x)])
    wd = design / sigma[:, None]
    coef, *_ = np.linalg.lstsq(wd, y / sigma, rcond=None)
    return coef  # offset, a, b


def fit_sinusoid(x, y, fixed_period: float | None = None,
                 sigma=None) -> SinusoidFit:
    """Weighted least-squares sinusoid fit.

    Parameters
    ----------
    x, y : array_like
        Sample positions and values; at least 8 points spanning a period.
    fixed_period : float, optional
        Pin the period (e.g. 2 pi / delta when the beat frequency is known).
        When omitted the period is fitted, seeded by an FFT estimate.
    sigma : array_like, optional
        Per-point standard deviations. Defaults to Poisson counting errors
        sqrt(max(y, 1)).

    Raises FitError when the fit cannot converge or the period cannot be
    identified from the data span.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length 1-D arrays")
    if x.size < 8:
        raise FitError("need at least 8 points for a sinusoid fit")
    sigma = (np.sqrt(np.maximum(y, 1.0)) if sigma is None
             else np.asarray(sigma, dtype=float))
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")

    span = x.max() - x.min()
    if fixed_period is None:
        # seed the period from the dominant FFT bin of the detrended signal
        grid = np.linspace(x.min(), x.max(), 4 * x.size)
        resampled = np.interp(grid, np.sort(x), y[np.argsort(x)])
        spec = np.abs(np.fft.rfft(resampled - resampled.mean()))
        freqs = np.fft.rfftfreq(grid.size, d=grid[1] - grid[0])
        k = spec[1:].argmax() + 1
        if spec[k] < 1e-12 or freqs[k] <= 0:
            raise FitError("period is not identifiable from the data")
        period0 = 1.0 / freqs[k]
    else:
        period0 = float(fixed_period)
    if span < period0:
        raise FitError("data span less than one period")

    omega0 = 2 * np.pi / period0
    off0, a0, b0 = _linear_presolve(x, y, sigma, omega0)
    amp0 = float(np.hypot(a0, b0))
    ph0 = float(np.arctan2(b0, a0))

    try:
        if fixed_period is None:
            def model(t, off, amp, ph, period):
                return off + amp * np.cos(2 * np.pi * t / period - ph)

            popt, pcov = curve_fit(model, x, y, p0=(off0, amp0, ph0, period0),
                                   sigma=sigma, absolute_sigma=True,
                                   maxfev=20000)
            off, amp, ph, period = popt
        else:
            def model(t, off, amp, ph):
                return off + amp * np.cos(omega0 * t - ph)

            popt, pcov = curve_fit(model, x, y, p0=(off0, amp0, ph0),
                                   sigma=sigma, absolute_sigma=True,
                                   maxfev=20000)
            off, amp, ph = popt
            period = period0
    except RuntimeError as exc:
        raise FitError(f"sinusoid fit did not converge: {exc}") from exc

    resid = (y - model(x, *popt)) / sigma
    chi2 = float(resid @ resid)
    # visibility error by the delta method on (offset, amplitude), using the
    # raw fitted sign so the covariance cross-term is oriented correctly
    jac = np.zeros(len(popt))
    jac[0] = -abs(amp) / off**2
    jac[1] = np.sign(amp) / off if amp != 0 else 1.0 / off
    v_var = float(jac @ pcov @ jac)

    if amp < 0:
        amp, ph = -amp, ph + np.pi
    ph = float(ph) % (2 * np.pi)
    return SinusoidFit(
        amplitude=float(amp), offset=float(off), phase=ph,
        period=float(period), visibility=float(amp / off),
        visibility_std=float(np.sqrt(max(v_var, 0.0))),
        chi2=chi2, dof=int(x.size - len(popt)),
    )


MIN_ENVELOPE_COUNTS = 10.0


def normalize_beating(hist: CoincidenceHistogram,
                      envelope_hist: CoincidenceHistogram,
                      prefactor: float = 0.5):
    """Normalize a beating histogram by its envelope measurement.

    The ratio counts / (prefactor * envelope) maps the noiseless beat onto
    the band [0, 2]. Bins whose envelope is below 10 counts are dropped;
    the returned errors are the propagated Poisson counting errors.

    Returns (tau, ratio, ratio_std) arrays.
    """
    if prefactor <= 0:
        raise ValueError("prefactor must be positive")
    if (hist.tau_centers.shape != envelope_hist.tau_centers.shape
            or np.any(hist.tau_centers != envelope_hist.tau_centers)):
        raise ValueError("histograms are on different tau grids")
    s = np.asarray(hist.counts, dtype=float)
    e = np.asarray(envelope_hist.counts, dtype=float)
    keep = e >= MIN_ENVELOPE_COUNTS
    s, e, tau = s[keep], e[keep], hist.tau_centers[keep]
    ratio = s / (prefactor * e)
    var = np.maximum(s, 1.0) / (prefactor * e) ** 2 + (s / (prefactor * e * e)) ** 2 * e
    return tau, ratio, np.sqrt(var)


@dataclass(frozen=True)
class BeatPhaseFit:
    """Fit of a normalized beat to 1 + V cos(delta tau - theta)."""

    theta: float
    theta_std: float
    visibility: float
    visibility_std: float
    chi2: float
    dof: int


def beat_phase_extract(tau, ratio, ratio_std, delta: float) -> BeatPhaseFit:
    """Extract the beat phase from a normalized beating series.

    Fits 1 + V cos(delta tau - theta) with the offset pinned at the
    noiseless value 1; needs at least two beat periods of data. theta is
    reported modulo 2 pi.
    """
    tau = np.asarray(tau, dtype=float)
    ratio = np.asarray(ratio, dtype=float)
    ratio_std = np.asarray(ratio_std, dtype=float)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if tau.max() - tau.min() < 2 * (2 * np.pi / delta):
        raise FitError("need at least two beat periods to extract a phase")

    def model(t, v, th):
        return 1.0 + v * np.cos(delta * t - th)

    # linear seed: ratio - 1 = v cos(th) cos(dt) + v sin(th) sin(dt)
    design = np.column_stack([np.cos(delta * tau), np.sin(delta * tau)])
    coef, *_ = np.linalg.lstsq(design / ratio_std[:, None],
                               (ratio - 1.0) / ratio_std, rcond=None)
    v0 = float(np.hypot(*coef))
    th0 = float(np.arctan2(coef[1], coef[0]))
    try:
        popt, pcov = curve_fit(model, tau, ratio, p0=(v0, th0),
                               sigma=ratio_std, absolute_sigma=True,
                               maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"phase fit did not converge: {exc}") from exc
    v, th = popt
    if v < 0:
        v, th = -v, th + np.pi
    resid = (ratio - model(tau, v, th)) / ratio_std
    return BeatPhaseFit(
        theta=float(th % (2 * np.pi)),
        theta_std=float(np.sqrt(pcov[1, 1])),
        visibility=float(v),
        visibility_std=float(np.sqrt(pcov[0, 0])),
        chi2=float(resid @ resid),
        dof=int(tau.size - 2),
    )
