"""Photon-counting observation model for a single-pixel SPAD.

Pipeline per pulse: the target impulse response is blurred by the combined
laser-pulse/system-jitter Gaussian, scaled into per-bin mean detected photon
numbers (plus a uniform noise floor), converted to per-bin Poisson detection
probabilities, corrected for detector dead time by a recursive suppression
over the preceding dead window, and finally accumulated over many pulses as
independent per-bin Bernoulli trials.

Dead time is non-extendable (the countdown starts only on a detection) and
resets between pulses; afterpulsing, crosstalk and cross-period carryover
are out of scope.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .scene import ImpulseResponse

log = logging.getLogger(__name__)

# FWHM of a Gaussian = 2*sqrt(2*ln 2) * sigma
FWHM_TO_SIGMA = 1.0 / 2.3548200450309493


@dataclass(frozen=True)
class PulseModel:
    """Laser pulse and system-jitter widths (FWHM, seconds) plus rep rate."""

    fwhm_pulse: float
    fwhm_jitter: float
    repetition_rate: float = 1e6

    def __post_init__(self):
        if self.fwhm_pulse < 0 or self.fwhm_jitter < 0:
            raise ConfigError("FWHM values must be >= 0")
        if not self.repetition_rate > 0:
            raise ConfigError("repetition_rate must be > 0")

    @property
    def combined_sigma(self):
        """Std dev of the convolved pulse*jitter kernel, seconds."""
        return np.hypot(self.fwhm_pulse, self.fwhm_jitter) * FWHM_TO_SIGMA


@dataclass(frozen=True)
class DetectorModel:
    """SPAD parameters: efficiency, dead time, bin width, mean noise per bin.

    noise_per_bin lumps background and dark counts as a mean photon count
    per bin per pulse (uniform in time).
    """

    efficiency: float
    dead_time: float
    bin_width: float
    noise_per_bin: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError("efficiency must be in [0, 1]")
        if self.dead_time < 0:
            raise ConfigError("dead_time must be >= 0")
        if not self.bin_width > 0:
            raise ConfigError("bin_width must be > 0")
        if self.noise_per_bin < 0:
            raise ConfigError("noise_per_bin must be >= 0")

    @property
    def dead_bins(self) -> int:
        return int(round(self.dead_time / self.bin_width))


@dataclass(frozen=True, eq=False)
class FluxProfile:
    """Per-bin mean detected photon number per pulse."""

    means: np.ndarray

    def __post_init__(self):
        m = np.array(self.means, dtype=float)
        if m.ndim != 1 or m.shape[0] == 0:
            raise ConfigError("means must be a non-empty 1D array")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ConfigError("means must be finite and >= 0")
        m.setflags(write=False)
        object.__setattr__(self, "means", m)


@dataclass(frozen=True, eq=False)
class DetectionProfile:
    """Per-bin per-pulse detection probabilities after dead-time correction."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.shape[0] == 0:
            raise ConfigError("probs must be a non-empty 1D array")
        if np.any(p < 0) or np.any(p > 1):
            raise ConfigError("probabilities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.shape[0]


@dataclass(frozen=True, eq=False)
class Histogram:
    """Accumulated photon counts per bin over n_pulses laser shots."""

    counts: np.ndarray
    bin_width: float
    n_pulses: int

    def __post_init__(self):
        c = np.asarray(self.counts)
        if not np.issubdtype(c.dtype, np.integer):
            raise ConfigError("counts must be integers")
        c = c.astype(np.int64)
        if c.ndim != 1 or c.shape[0] == 0:
            raise ConfigError("counts must be a non-empty 1D array")
        if np.any(c < 0) or np.any(c > self.n_pulses):
            raise ConfigError("counts must lie in [0, n_pulses]")
        if not self.bin_width > 0 or self.n_pulses < 1:
            raise ConfigError("bin_width must be > 0 and n_pulses >= 1")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def __len__(self):
        return self.counts.shape[0]


def gaussian_kernel(sigma_bins: float, num_bins: int) -> np.ndarray:
    """Unit-mass Gaussian kernel sampled at bin centers, truncated at 5 sigma."""
    half = int(np.ceil(5.0 * sigma_bins))
    if half >= num_bins:
        raise ConfigError(
            f"blur kernel half-width {half} bins does not fit a {num_bins}-bin window")
    if half == 0:
        return np.ones(1)
    x = np.arange(-half, half + 1)
    k = np.exp(-0.5 * (x / sigma_bins) ** 2)
    return k / k.sum()


def gaussian_blur(h: ImpulseResponse, pulse: PulseModel) -> ImpulseResponse:
    """Convolve the impulse response with the combined pulse/jitter Gaussian.

    Both the laser shape and the jitter are Gaussian, so their convolution
    is a single Gaussian with sigma = sqrt(sigma_pulse^2 + sigma_jitter^2).
    Mass leaking past the window edges is logged when it exceeds 1e-6
    relative; interior signals lose nothing.
    """
    sigma_bins = pulse.combined_sigma / h.bin_width
    kernel = gaussian_kernel(sigma_bins, len(h))
    if kernel.shape[0] == 1:
        return h
    half = kernel.shape[0] // 2
    full = np.convolve(h.bins, kernel)
    out = full[half:half + len(h)]
    lost = 1.0 - out.sum() / h.bins.sum()
    if lost > 1e-6:
        log.warning("gaussian_blur: %.3g relative mass lost at window edges", lost)
    return ImpulseResponse(out, h.bin_width, origin_time=h.origin_time)


def flux_profile(e: ImpulseResponse, det: DetectorModel,
                 signal_scale: float) -> FluxProfile:
    """Per-bin mean detected photons: efficiency*scale*e_k + noise floor."""
    if signal_scale < 0:
        raise ConfigError("signal_scale must be >= 0")
    return FluxProfile(det.efficiency * signal_scale * e.bins + det.noise_per_bin)


def poisson_prob(flux: FluxProfile) -> np.ndarray:
    """Probability of at least one detection per bin: 1 - exp(-N_k)."""
    return -np.expm1(-flux.means)


def deadtime_correct(p0: np.ndarray, dead_bins: int) -> DetectionProfile:
    """Suppress per-bin detection probabilities by the preceding dead window.

    Recursively, P(k) = p0(k) * (1 - sum of P over the previous dead_bins
    bins), clipped at the record start; dead_bins = 0 reduces to P = p0.
    Computed in O(K) with a sliding window sum.
    """
    p0 = np.asarray(p0, dtype=float)
    if np.any(p0 < 0) or np.any(p0 > 1):
        raise ConfigError("p0 values must lie in [0, 1]")
    if dead_bins < 0:
        raise ConfigError("dead_bins must be >= 0")
    out = np.empty_like(p0)
    window = 0.0
    for k in range(p0.shape[0]):
        out[k] = p0[k] * (1.0 - window)
        window += out[k]
        if k >= dead_bins:
            window -= out[k - dead_bins]
    # guard against tiny negative values from float cancellation
    np.clip(out, 0.0, 1.0, out=out)
    return DetectionProfile(out)


def sample_histogram(profile: DetectionProfile, n_pulses: int,
                     rng: np.random.Generator, bin_width: float = 1.0) -> Histogram:
    """Draw one accumulated histogram: per-bin Binomial(n_pulses, P(k)).

    The per-pulse detections are independent Bernoulli trials, so the
    n_pulses-shot total per bin is binomial. Deterministic given the
    generator state.
    """
    if n_pulses < 1:
        raise ConfigError("n_pulses must be >= 1")
    counts = rng.binomial(n_pulses, profile.probs)
    return Histogram(counts, bin_width, n_pulses)


def mc_detector_oracle(p0: np.ndarray, dead_bins: int, trials: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Brute-force dead-time detector: empirical P(k) over simulated pulses.

    Each trial walks the bins with a countdown state machine: a live
    detector fires with probability p0(k); a detection at bin k blocks bins
    k+1 .. k+dead_bins. Test oracle only; vectorized across trials.
    """
    p0 = np.asarray(p0, dtype=float)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if dead_bins < 0:
        raise ConfigError("dead_bins must be >= 0")
    countdown = np.zeros(trials, dtype=np.int32)
    hits = np.zeros(p0.shape[0], dtype=np.int64)
    for k in range(p0.shape[0]):
        blocked = countdown > 0
        fired = ~blocked & (rng.random(trials, dtype=np.float32) < p0[k])
        hits[k] = np.count_nonzero(fired)
        np.subtract(countdown, 1, out=countdown, where=blocked)
        countdown[fired] = dead_bins
    return hits / trials
