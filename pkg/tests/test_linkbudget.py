import math

import numpy as np
import pytest

from tof_forge.errors import ConfigError
from tof_forge.linkbudget import (LinkBudget, NoiseSpec, SignalAnchor,
                                  noise_photons, photons_at_target,
                                  required_pulse_energy, signal_photons)


# -------------------------------------------------------- photons at target

def test_full_interception():
    lb = LinkBudget(emitted_photons=1000.0, lambda_t=1.0,
                    area_target=2.0, area_illuminated=2.0)
    assert photons_at_target(lb) == 1000.0


def test_opaque_transmitter():
    lb = LinkBudget(emitted_photons=1000.0, lambda_t=0.0)
    assert photons_at_target(lb) == 0.0


def test_partial_interception():
    lb = LinkBudget(emitted_photons=1e6, lambda_t=0.5,
                    area_target=0.01, area_illuminated=1.0)
    assert photons_at_target(lb) == pytest.approx(5000.0, rel=1e-12)


def test_zero_illuminated_area_rejected():
    lb = LinkBudget(emitted_photons=1.0, area_illuminated=0.0)
    with pytest.raises(ConfigError):
        photons_at_target(lb)


# ------------------------------------------------------------ signal photons

def test_anchor_reproduces_reference_point():
    anchor = SignalAnchor(5000.0, 5.0)
    assert anchor.signal_at(5.0) == 5000.0


def test_anchor_inverse_square_values():
    # oracle: n_s(d) = 5000 * (5/d)^2
    anchor = SignalAnchor(5000.0, 5.0)
    assert anchor.signal_at(10.0) == pytest.approx(1250.0, rel=1e-9)
    assert anchor.signal_at(1.0) == pytest.approx(125000.0, rel=1e-9)
    assert anchor.signal_at(3.0) == pytest.approx(125000.0 / 9.0, rel=1e-9)
    assert round(anchor.signal_at(3.0), 1) == 13888.9


def test_signal_times_distance_squared_constant():
    anchor = SignalAnchor(5000.0, 5.0)
    ref = anchor.signal_at(5.0) * 5.0**2
    for d in (0.3, 1.0, 2.7, 5.0, 8.75, 10.0, 123.0):
        assert anchor.signal_at(d) * d * d == pytest.approx(ref, rel=1e-12)


def test_lumped_equals_factored():
    eta, lr, lt = 0.25, 0.4, 0.8
    at, al, ar = 0.05, 1.3, 0.01
    a = eta * lr * lt * (at / al) * (ar / math.pi)
    factored = LinkBudget(emitted_photons=1e9, lambda_t=lt, lambda_r=lr,
                          efficiency=eta, area_target=at, area_illuminated=al,
                          area_receiver=ar)
    lumped = LinkBudget(emitted_photons=1e9, lumped_a=a)
    for d in (100.0, 5000.0, 1e4):
        assert signal_photons(lumped, d) == pytest.approx(
            signal_photons(factored, d), rel=1e-12)


def test_signal_rejects_nonpositive_distance():
    lb = LinkBudget(emitted_photons=1.0, lumped_a=1.0)
    with pytest.raises(ConfigError):
        signal_photons(lb, 0.0)


# ------------------------------------------------------------------- noise

def test_noise_snr_unity():
    n_n, b = noise_photons(NoiseSpec.from_snr(1.0), 5000.0, 1_000_000, 1024)
    assert n_n == 5000.0
    assert b == pytest.approx(5000.0 / (1_000_000 * 1024), rel=1e-12)


def test_noise_level_per_pulse():
    n_n, _ = noise_photons(NoiseSpec.from_noise_level(0.005), 5000.0,
                           1_000_000, 1024)
    assert n_n == pytest.approx(5000.0, rel=1e-12)


def test_noise_snr_tiny():
    n_n, _ = noise_photons(NoiseSpec.from_snr(0.001), 5000.0, 1_000_000, 1024)
    assert n_n == pytest.approx(5e6, rel=1e-12)


def test_noise_modes_agree():
    snr, n_pulses, n_s = 0.37, 250_000, 1234.5
    by_snr = noise_photons(NoiseSpec.from_snr(snr), n_s, n_pulses, 1024)
    npp = n_s / (snr * n_pulses)
    by_level = noise_photons(NoiseSpec.from_noise_level(npp), n_s, n_pulses, 1024)
    assert by_snr[0] == pytest.approx(by_level[0], rel=1e-12)
    assert by_snr[1] == pytest.approx(by_level[1], rel=1e-12)


def test_zero_snr_rejected():
    with pytest.raises(ConfigError):
        NoiseSpec.from_snr(0.0)


# ------------------------------------------------------------------- energy

def test_energy_identity():
    ref = (5000.0, 5.0, 400e-9)
    assert required_pulse_energy(5000.0, 5.0, ref) == pytest.approx(400e-9, rel=1e-15)


def test_energy_space_borne_extrapolation():
    # 400 nJ at 5 km -> 4 mJ at 500 km and 5.76 mJ at 600 km (same N_s)
    ref = (5000.0, 5.0, 400e-9)
    assert required_pulse_energy(5000.0, 500.0, ref) == pytest.approx(4e-3, rel=1e-12)
    assert required_pulse_energy(5000.0, 600.0, ref) == pytest.approx(5.76e-3, rel=1e-12)


def test_energy_scales_with_photon_count():
    ref = (1000.0, 1.0, 1e-9)
    assert required_pulse_energy(3000.0, 1.0, ref) == pytest.approx(3e-9, rel=1e-12)
