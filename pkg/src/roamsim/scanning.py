"""Active scanning over N channels with MinChannelTime/MaxChannelTime timers.

Two accounting modes exist because the probe-timer rules and the printed
per-channel sum disagree: the FSM rules end an empty channel's dwell at
MinChannelTime, while the literal sum charges MinChannelTime plus
MaxChannelTime on every channel. `fsm` is the default; `eq3-literal`
reproduces the summed form verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import ScanAccounting
from .radio import LinkQuality, PathLossModel, link_quality, shannon_cap_from_snr_db
from .topology import ApNode


@dataclass(frozen=True)
class ScanTiming:
    t_pb_s: float = 0.001    # probe request tx time
    t_min_s: float = 0.010   # MinChannelTime
    t_max_s: float = 0.100   # MaxChannelTime
    t_sw_s: float = 0.005    # channel switch time

    def __post_init__(self) -> None:
        if not (self.t_min_s < self.t_max_s):
            raise ValueError("t_min must be < t_max")
        if min(self.t_pb_s, self.t_min_s, self.t_sw_s) < 0:
            raise ValueError("scan timers must be >= 0")


@dataclass(frozen=True)
class ScanRow:
    """One responding AP: the (throughput, RSSI, SNR) observation triple."""
    ap_id: int
    channel: int
    rssi_dbm: float
    snr_db: float
    throughput_bps: float
    tx_power_dbm: float


@dataclass
class ScanResult:
    channel: int
    rows: list[ScanRow]
    dwell_s: float


@dataclass
class StateTable:
    """Observation matrix over candidate APs, one row per discovered AP."""
    rows: list[ScanRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __bool__(self) -> bool:
        return bool(self.rows)

    def row_for(self, ap_id: int) -> Optional[ScanRow]:
        for row in self.rows:
            if row.ap_id == ap_id:
                return row
        return None

    def best_rssi_row(self) -> ScanRow:
        if not self.rows:
            raise ValueError("state table is empty")
        # Ties break toward the lowest AP id.
        return min(self.rows, key=lambda r: (-r.rssi_dbm, r.ap_id))


@dataclass
class ScanReport:
    t_cs_s: float
    table: StateTable
    per_channel: list[ScanResult]


RateFn = Callable[[ApNode, LinkQuality], float]


def _default_rate_fn(bandwidth_hz: float) -> RateFn:
    def rate(ap: ApNode, link: LinkQuality) -> float:
        return shannon_cap_from_snr_db(link.snr_db, bandwidth_hz)
    return rate


def scan_channel(channel: int,
                 aps: list[ApNode],
                 sta_xy: tuple[float, float],
                 model: PathLossModel,
                 timing: ScanTiming,
                 *,
                 sensitivity_dbm: float = -94.0,
                 max_range_m: float = math.inf,
                 accounting: ScanAccounting = ScanAccounting.FSM,
                 rate_fn: Optional[RateFn] = None,
                 bandwidth_hz: float = 20e6,
                 rng: Optional[np.random.Generator] = None) -> ScanResult:
    """Probe one channel; dwell depends on whether any AP responded."""
    if rate_fn is None:
        rate_fn = _default_rate_fn(bandwidth_hz)
    rows = []
    for ap in aps:
        if ap.channel != channel:
            continue
        distance = math.hypot(ap.x - sta_xy[0], ap.y - sta_xy[1])
        if distance > max_range_m:
            continue
        link = link_quality(ap.tx_power_dbm, distance, model, rng)
        if link.rssi_dbm < sensitivity_dbm:
            continue
        rows.append(ScanRow(
            ap_id=ap.ap_id,
            channel=channel,
            rssi_dbm=link.rssi_dbm,
            snr_db=link.snr_db,
            throughput_bps=rate_fn(ap, link),
            tx_power_dbm=ap.tx_power_dbm,
        ))
    rows.sort(key=lambda r: r.ap_id)
    if accounting is ScanAccounting.EQ3_LITERAL or rows:
        dwell = timing.t_pb_s + timing.t_min_s + timing.t_max_s + timing.t_sw_s
    else:
        dwell = timing.t_pb_s + timing.t_min_s + timing.t_sw_s
    return ScanResult(channel=channel, rows=rows, dwell_s=dwell)


def scan_order(num_channels: int, start_channel: int) -> list[int]:
    """Channels visited sequentially from the current operating channel."""
    if not (1 <= start_channel <= num_channels):
        start_channel = 1
    return [(start_channel - 1 + i) % num_channels + 1 for i in range(num_channels)]


def full_scan(num_channels: int,
              start_channel: int,
              aps: list[ApNode],
              sta_xy: tuple[float, float],
              model: PathLossModel,
              timing: ScanTiming,
              **channel_kwargs) -> ScanReport:
    """Scan every channel once; the total is exactly the sum of the dwells."""
    results = []
    rows = []
    t_cs = 0.0
    for channel in scan_order(num_channels, start_channel):
        result = scan_channel(channel, aps, sta_xy, model, timing, **channel_kwargs)
        results.append(result)
        rows.extend(result.rows)
        t_cs += result.dwell_s
    return ScanReport(t_cs_s=t_cs, table=StateTable(rows=rows), per_channel=results)
