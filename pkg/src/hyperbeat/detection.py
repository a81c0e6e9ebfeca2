"""Coincidence counting: expected histograms, Poisson sampling, noise model.

Counts follow C(tau) = g2(tau) * eta * bin_width * duration + background.
Sampling uses one Philox stream per bin, keyed by (seed, bin index), so a
histogram is reproducible regardless of evaluation order or parallelism.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

_KEY_MASK = (1 << 64) - 1


def poisson_counts(means, seed: int) -> np.ndarray:
    """Independent Poisson draws, one counter-based substream per entry."""
    means = np.asarray(means, dtype=float)
    if np.any(means < 0) or not np.all(np.isfinite(means)):
        raise ValueError("Poisson means must be finite and >= 0")
    flat = means.ravel()
    out = np.empty(flat.shape, dtype=np.int64)
    for i, m in enumerate(flat):
        key = ((int(seed) & _KEY_MASK) << 64) | (i & _KEY_MASK)
        out[i] = np.random.Generator(np.random.Philox(key=key)).poisson(m)
    return out.reshape(means.shape)


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit subseed for a named substream of a run."""
    import hashlib

    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class DetectionConfig:
    """Joint detection efficiency, binning, exposure and accidental floor.

    eta              joint detection efficiency, in (0, 1]
    bin_width        time bin, ns
    duration         total measurement time, s
    background_rate  uniform accidental floor, counts per bin
    seed             sampling seed
    """

    eta: float = 1e-2
    bin_width: float = 1.0
    duration: float = 3900.0
    background_rate: float = 0.0
    seed: int = 20150923

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.background_rate < 0:
            raise ValueError("background_rate must be >= 0")

    @property
    def gain(self) -> float:
        """eta * bin_width * duration, the counts per unit g2."""
        return self.eta * self.bin_width * self.duration


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Binned coincidence counts with the detection settings that made them."""

    tau_centers: np.ndarray
    counts: np.ndarray
    config: DetectionConfig

    def __post_init__(self):
        tau = np.asarray(self.tau_centers, dtype=float)
        cts = np.asarray(self.counts)
        if tau.shape != cts.shape or tau.ndim != 1:
            raise ValueError("tau_centers and counts must be equal-length 1-D arrays")
        if np.any(cts < 0):
            raise ValueError("counts must be >= 0")
        tau.setflags(write=False)
        cts.setflags(write=False)
        object.__setattr__(self, "tau_centers", tau)
        object.__setattr__(self, "counts", cts)

    def to_csv(self) -> str:
        lines = ["tau_ns,counts"]
        for t, c in zip(self.tau_centers, self.counts):
            c_str = str(int(c)) if float(c).is_integer() else repr(float(c))
            lines.append(f"{repr(float(t))},{c_str}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, config: DetectionConfig) -> "CoincidenceHistogram":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "tau_ns,counts":
            raise ValueError("expected header 'tau_ns,counts'")
        tau, cts = [], []
        for ln in lines[1:]:
            t, c = ln.split(",")
            tau.append(float(t))
            cts.append(float(c))
        counts = np.array(cts)
        if np.all(counts == np.round(counts)):
            counts = counts.astype(np.int64)
        return cls(np.array(tau), counts, config)

    def to_json(self) -> str:
        payload = {
            "config": {
                "eta": self.config.eta,
                "bin_width": self.config.bin_width,
                "duration": self.config.duration,
                "background_rate": self.config.background_rate,
                "seed": self.config.seed,
            },
            "tau_ns": [float(t) for t in self.tau_centers],
            "counts": [int(c) if float(c).is_integer() else float(c)
                       for c in self.counts],
        }
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CoincidenceHistogram":
        payload = json.loads(text)
        cfg = DetectionConfig(**payload["config"])
        counts = np.array(payload["counts"])
        if counts.dtype.kind != "f":
            counts = counts.astype(np.int64)
        return cls(np.array(payload["tau_ns"], dtype=float), counts, cfg)


def expected_counts(g2, tau_centers, cfg: DetectionConfig) -> CoincidenceHistogram:
    """Expected (real-valued) histogram of a correlation curve.

    g2 may be a callable over tau or an array matching tau_centers.
    """
    tau = np.asarray(tau_centers, dtype=float)
    vals = np.asarray(g2(tau) if callable(g2) else g2, dtype=float)
    if vals.shape != tau.shape:
        raise ValueError("g2 values do not match the tau grid")
    if np.any(vals < 0):
        raise ValueError("g2 must be >= 0")
    counts = vals * cfg.gain + cfg.background_rate
    return CoincidenceHistogram(tau, counts, cfg)


def sample_histogram(expected: CoincidenceHistogram,
                     seed: int | None = None) -> CoincidenceHistogram:
    """Poisson-sample an expected histogram; deterministic for a fixed seed."""
    if seed is None:
        seed = expected.config.seed
    counts = poisson_counts(np.asarray(expected.counts, dtype=float), seed)
    cfg = replace(expected.config, seed=seed)
    return CoincidenceHistogram(expected.tau_centers, counts, cfg)


def visibility_degradation(v_signal: float, signal_peak: float,
                           background: float) -> float:
    """Visibility of a sinusoid of peak ``signal_peak`` on a uniform floor."""
    if v_signal < 0 or signal_peak < 0 or background < 0:
        raise ValueError("inputs must be >= 0")
    if signal_peak == 0:
        return 0.0
    return v_signal * signal_peak / (signal_peak + 2.0 * background)


def background_for_visibility(target_v: float, signal_peak: float,
                              v_signal: float = 1.0) -> float:
    """Uniform floor that degrades ``v_signal`` to ``target_v``."""
    if not 0 < target_v <= v_signal:
        raise ValueError("need 0 < target_v <= v_signal")
    return signal_peak * (v_signal - target_v) / (2.0 * target_v)
