"""Quasi-static Rayleigh fading links with path-loss gains and AWGN.

One real dimension carries one antipodal symbol ``s = 2*bit - 1``:
``y = alpha * sqrt(gain) * s + n`` with ``n ~ N(0, n0/2)``.  4-QAM is two
such dimensions.  The reference source-destination link has unit gain, so
``SNR = 1/n0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# spectral efficiency of the scheme with K=32 and 4-QAM, bits per complex dimension
SPECTRAL_EFFICIENCY = 4 / 9

# SNR advantage of the relay-destination link over the source-destination links
SCENARIOS = {"A": 0.0, "B": 4.4, "C": 10.0}


@dataclass(frozen=True)
class LinkRealization:
    alpha: float
    gain_db: float = 0.0
    n0: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("fading amplitude must be nonnegative")
        if not math.isfinite(self.gain_db):
            raise ValueError("gain_db must be finite")
        if not self.n0 > 0:
            raise ValueError("n0 must be positive")

    @property
    def amplitude(self) -> float:
        """Received amplitude ``alpha * sqrt(gain)``."""
        return self.alpha * 10 ** (self.gain_db / 20)


@dataclass(frozen=True)
class ScenarioGeometry:
    relay_gain_db: float
    source_gain_db: float = 0.0

    @classmethod
    def named(cls, name: str) -> "ScenarioGeometry":
        try:
            return cls(SCENARIOS[name])
        except KeyError:
            raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


def snr_to_n0(snr_db):
    return 10.0 ** (-np.asarray(snr_db, dtype=float) / 10)


def ebn0_db(snr_db, rho: float = SPECTRAL_EFFICIENCY):
    return np.asarray(snr_db, dtype=float) - 10 * np.log10(rho)


def draw_fading(rng: np.random.Generator, size=None):
    """Rayleigh amplitude with ``E[alpha^2] = 1``."""
    shape = () if size is None else tuple(np.atleast_1d(size))
    g = rng.standard_normal((2,) + shape)
    out = np.hypot(g[0], g[1]) / np.sqrt(2.0)
    return float(out) if size is None else out


def transmit(s, link: LinkRealization, rng: np.random.Generator) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if not np.all(np.abs(s) == 1):
        raise ValueError("channel symbols must be +1 or -1")
    noise = rng.standard_normal(s.shape) * math.sqrt(link.n0 / 2)
    return link.amplitude * s + noise


def bit_llr(y, amplitude, n0):
    """``ln p(y|s=+1) / p(y|s=-1)`` for the Gaussian link."""
    return 4.0 * np.asarray(amplitude) * np.asarray(y) / np.asarray(n0)


def bit_likelihood(y, link: LinkRealization) -> np.ndarray:
    """Normalised pair ``(p(y|s=-1), p(y|s=+1))`` on the last axis."""
    y = np.asarray(y, dtype=float)
    a = link.amplitude
    logp = np.stack([-(y + a) ** 2, -(y - a) ** 2], axis=-1) / link.n0
    logp -= logp.max(axis=-1, keepdims=True)
    p = np.exp(logp)
    return p / p.sum(axis=-1, keepdims=True)
