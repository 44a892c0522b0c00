"""Radiometric bookkeeping: emitted photons -> detected signal photons.

The chain is N_e -> N_t (photons reaching the target, geometry-limited) ->
N_s (detected signal photons, inverse-square in range under the diffuse
assumption). A single lumped coefficient can stand in for the factored
path, and in practice configurations carry an anchor (known N_s at a known
range) so absolute coefficients never need to be trusted.

Noise is specified either as a signal-to-noise ratio N_s/N_n or as a mean
noise photon count per pulse; both reduce to a per-bin per-pulse mean that
feeds the detector model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class LinkBudget:
    """Factored link coefficients (SI units) with an optional lumped override.

    lambda_t covers transmitter + outbound atmosphere; lambda_r covers
    receiver, return atmosphere and target albedo. If lumped_a is set it
    supersedes the factored coefficients: N_s = lumped_a * N_e / d^2.
    """

    emitted_photons: float
    area_target: float = 1.0
    area_illuminated: float = 1.0
    area_receiver: float = 1.0
    lambda_t: float = 1.0
    lambda_r: float = 1.0
    efficiency: float = 1.0
    solid_angle: float = math.pi
    lumped_a: float | None = None

    def __post_init__(self):
        fields = (self.emitted_photons, self.area_target, self.area_illuminated,
                  self.area_receiver, self.lambda_t, self.lambda_r, self.efficiency)
        if any(v < 0 for v in fields):
            raise ConfigError("link-budget coefficients must be >= 0")
        if not self.solid_angle > 0:
            raise ConfigError("solid_angle must be > 0")
        if self.lumped_a is not None and self.lumped_a < 0:
            raise ConfigError("lumped_a must be >= 0")


def photons_at_target(lb: LinkBudget) -> float:
    """Mean photon number reaching the target: lambda_t * N_e * A_t / A_l."""
    if lb.area_illuminated == 0:
        raise ConfigError("area_illuminated must be > 0")
    return lb.lambda_t * lb.emitted_photons * lb.area_target / lb.area_illuminated


def signal_photons(lb: LinkBudget, distance: float) -> float:
    """Mean detected signal photons at the given range (same units as areas).

    Uses the lumped form a*N_e/d^2 when lumped_a is set, otherwise the
    factored form efficiency*lambda_r*N_t*A_r/(solid_angle*d^2).
    """
    if not distance > 0:
        raise ConfigError("distance must be > 0")
    if lb.lumped_a is not None:
        return lb.lumped_a * lb.emitted_photons / distance**2
    n_t = photons_at_target(lb)
    return lb.efficiency * lb.lambda_r * n_t * lb.area_receiver / (
        lb.solid_angle * distance**2)


@dataclass(frozen=True)
class SignalAnchor:
    """Known mean signal photon count at a reference range and pulse count.

    Anchors sidestep absolute-coefficient unit traps: scaling to another
    range is pure inverse-square, and n_pulses_ref pins the per-pulse rate.
    """

    n_s: float
    d_km: float
    n_pulses: int = 1_000_000

    def __post_init__(self):
        if not (self.n_s > 0 and self.d_km > 0 and self.n_pulses >= 1):
            raise ConfigError("anchor values must be positive")

    def signal_at(self, d_km: float) -> float:
        """Per-acquisition signal photons at range d_km (at n_pulses pulses)."""
        if not d_km > 0:
            raise ConfigError("distance must be > 0")
        return self.n_s * (self.d_km / d_km) ** 2

    @property
    def per_pulse(self) -> float:
        return self.n_s / self.n_pulses


@dataclass(frozen=True)
class NoiseSpec:
    """Noise in exactly one of two modes: 'snr' (N_s/N_n) or 'noise_level'
    (mean noise photons per pulse)."""

    mode: str
    value: float

    def __post_init__(self):
        if self.mode not in ("snr", "noise_level"):
            raise ConfigError(f"unknown noise mode {self.mode!r}")
        if not self.value > 0:
            raise ConfigError("noise value must be > 0")

    @classmethod
    def from_snr(cls, snr: float) -> "NoiseSpec":
        return cls("snr", snr)

    @classmethod
    def from_noise_level(cls, photons_per_pulse: float) -> "NoiseSpec":
        return cls("noise_level", photons_per_pulse)


def noise_photons(spec: NoiseSpec, n_s: float, n_pulses: int,
                  num_bins: int) -> tuple[float, float]:
    """Total noise photons N_n and the per-bin per-pulse mean B.

    snr mode: N_n = N_s / snr. noise_level mode: N_n = N_np * n_pulses.
    B spreads N_n uniformly over the window: N_n / (n_pulses * num_bins).
    """
    if n_pulses < 1 or num_bins < 1:
        raise ConfigError("n_pulses and num_bins must be >= 1")
    if spec.mode == "snr":
        n_n = n_s / spec.value
    else:
        n_n = spec.value * n_pulses
    return n_n, n_n / (n_pulses * num_bins)


def required_pulse_energy(target_n_s: float, distance: float,
                          reference: tuple[float, float, float]) -> float:
    """Pulse energy needed for target_n_s at the given range.

    reference is (n_s_ref, d_ref, e_ref): a known operating point. Energy
    scales linearly with the wanted photon count and quadratically with
    range; distance units must match d_ref.
    """
    n_s_ref, d_ref, e_ref = reference
    if not (n_s_ref > 0 and d_ref > 0 and e_ref > 0):
        raise ConfigError("reference values must be > 0")
    if not (target_n_s > 0 and distance > 0):
        raise ConfigError("target_n_s and distance must be > 0")
    return e_ref * (target_n_s / n_s_ref) * (distance / d_ref) ** 2
