"""Propagation, link quality and rate models.

All public signatures state their units. dBm/dB quantities stay logarithmic
until a formula needs linear power; the two helpers below are the only
conversion points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

MIN_DISTANCE_M = 0.1   # zero/near-zero distances clamp here


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0.0:
        raise ValueError(f"power must be > 0 mW, got {mw}")
    return 10.0 * math.log10(mw)


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss: PL(d) = pl0_db + 10 * exponent * log10(d / 1 m)."""

    pl0_db: float = 46.67
    exponent: float = 4.0
    noise_floor_dbm: float = -101.0
    shadowing_sigma_db: float = 0.0

    def __post_init__(self) -> None:
        if self.exponent <= 0:
            raise ValueError(f"path loss exponent must be > 0, got {self.exponent}")

    def loss_db(self, distance_m: float) -> float:
        d = max(distance_m, MIN_DISTANCE_M)
        return self.pl0_db + 10.0 * self.exponent * math.log10(d)


@dataclass(frozen=True)
class LinkQuality:
    rssi_dbm: float
    snr_db: float
    gain_linear: float
    noise_dbm: float

    def __post_init__(self) -> None:
        if abs(self.snr_db - (self.rssi_dbm - self.noise_dbm)) > 1e-9:
            raise ValueError("snr_db must equal rssi_dbm - noise_dbm")
        if self.gain_linear <= 0:
            raise ValueError("channel gain must be > 0")


@dataclass(frozen=True)
class RateEstimate:
    payload_bits: float
    slot_seconds: float
    throughput_bps: float
    shannon_cap_bps: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.throughput_bps <= self.shannon_cap_bps + 1e-9):
            raise ValueError("throughput must lie in [0, shannon cap]")


def rssi_at(tx_power_dbm: float, distance_m: float, model: PathLossModel,
            rng: Optional[np.random.Generator] = None) -> float:
    """Received power in dBm at the given distance; optional seeded shadowing."""
    rssi = tx_power_dbm - model.loss_db(distance_m)
    if model.shadowing_sigma_db > 0.0 and rng is not None:
        rssi += model.shadowing_sigma_db * rng.standard_normal()
    return rssi


def snr_at(rssi_dbm: float, noise_dbm: float) -> float:
    """SNR in dB against the noise-plus-interference floor (both dBm)."""
    return rssi_dbm - noise_dbm


def channel_gain(rssi_dbm: float, tx_power_dbm: float) -> float:
    """Linear gain recovered from transmit power and measured RSSI."""
    return dbm_to_mw(rssi_dbm) / dbm_to_mw(tx_power_dbm)


def link_quality(tx_power_dbm: float, distance_m: float, model: PathLossModel,
                 rng: Optional[np.random.Generator] = None) -> LinkQuality:
    rssi = rssi_at(tx_power_dbm, distance_m, model, rng)
    return LinkQuality(
        rssi_dbm=rssi,
        snr_db=snr_at(rssi, model.noise_floor_dbm),
        gain_linear=channel_gain(rssi, tx_power_dbm),
        noise_dbm=model.noise_floor_dbm,
    )


def shannon_cap(selected: int, tx_power_mw: float, gain_linear: float,
                noise_mw: float, bandwidth_hz: float) -> float:
    """Capacity bound in bits/s; exactly 0 for an unselected channel.

    Inputs are linear powers (mW); `selected` is the 0/1 channel indicator.
    """
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth_hz}")
    if noise_mw <= 0:
        raise ValueError(f"noise power must be > 0, got {noise_mw}")
    if gain_linear < 0:
        raise ValueError(f"gain must be >= 0, got {gain_linear}")
    if selected not in (0, 1):
        raise ValueError(f"channel indicator must be 0 or 1, got {selected}")
    return bandwidth_hz * math.log2(1.0 + selected * tx_power_mw * gain_linear / noise_mw)


def shannon_cap_from_snr_db(snr_db: float, bandwidth_hz: float) -> float:
    return shannon_cap(1, dbm_to_mw(snr_db), 1.0, 1.0, bandwidth_hz)


def throughput_estimate(payload_bits: float, slot_seconds: float, cap_bps: float) -> float:
    """Expected payload per expected slot, clamped to the capacity bound."""
    if slot_seconds <= 0:
        raise ValueError(f"slot length must be > 0 s, got {slot_seconds}")
    return min(payload_bits / slot_seconds, cap_bps)


def rate_estimate(payload_bits: float, slot_seconds: float, cap_bps: float) -> RateEstimate:
    return RateEstimate(
        payload_bits=payload_bits,
        slot_seconds=slot_seconds,
        throughput_bps=throughput_estimate(payload_bits, slot_seconds, cap_bps),
        shannon_cap_bps=cap_bps,
    )


def per_from_snr(snr_db: float, k: float = 1.0, gamma0_db: float = 5.0) -> float:
    """Logistic packet error rate, monotone non-increasing in SNR."""
    x = k * (snr_db - gamma0_db)
    # Stable logistic: avoid overflow for very poor/very good links.
    if x >= 0:
        return math.exp(-x) / (1.0 + math.exp(-x))
    return 1.0 / (1.0 + math.exp(x))
