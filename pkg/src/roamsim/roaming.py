"""Handoff trigger, constraint filtering, and the association exchange.

A handoff's latency decomposes into scan time, roam time and the medium
access delay of the first data frame on the new channel; the three parts are
kept separate on every record and their sum is the total by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .contention import ContentionSample, UoraParams, sample_access_attempt
from .radio import per_from_snr
from .scanning import ScanRow, StateTable


@dataclass(frozen=True)
class RoamTiming:
    t_au_s: float = 0.005        # association exchange
    t_as_s: float = 0.005        # authentication exchange
    timeout_s: float = 0.100     # association timeout charged per lost attempt
    max_retries: int = 3

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError(f"association timeout must be > 0, got {self.timeout_s}")
        if self.t_au_s < 0 or self.t_as_s < 0:
            raise ValueError("association/authentication delays must be >= 0")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")


@dataclass(frozen=True)
class ConstraintSet:
    rate_thr_bps: float = 0.0
    rssi_thr_dbm: float = -85.0
    per_delta: float = 0.001
    p_max_dbm: float = 20.0

    def __post_init__(self) -> None:
        if not (0.0 < self.per_delta < 1.0):
            raise ValueError(f"per_delta must lie in (0, 1), got {self.per_delta}")


@dataclass(frozen=True)
class HandoffRecord:
    sta_id: int
    ap_id: int
    channel: int
    t_cs_s: float
    t_ro_s: float
    t_cont_s: float
    t_total_s: float
    retries: int
    timestamp_s: float
    policy: str
    branch: str = "exploit"       # "explore" or "exploit"
    infeasible: bool = False      # constraint filter came back empty; best-RSSI fallback
    rssi_dbm: float = 0.0         # link quality of the chosen AP at selection time
    snr_db: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.t_total_s - (self.t_cs_s + self.t_ro_s + self.t_cont_s)) > 1e-12:
            raise ValueError("t_total_s must equal t_cs_s + t_ro_s + t_cont_s")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


class EmptyFeasibleSet(Exception):
    """All scanned candidates violate the selection constraints."""


class AssociationOutcome(NamedTuple):
    success: bool
    t_ro_s: float
    retries: int


PerFn = Callable[[float], float]


def handoff_needed(current_rssi_dbm: Optional[float], threshold_dbm: float) -> bool:
    """True when unassociated or strictly below the handoff threshold."""
    if current_rssi_dbm is None:
        return True
    return current_rssi_dbm < threshold_dbm


def feasible_candidates(table: StateTable, constraints: ConstraintSet,
                        per_fn: PerFn = per_from_snr) -> StateTable:
    """Rows passing the rate, signal, error-rate and power constraints."""
    kept = [
        row for row in table.rows
        if row.throughput_bps >= constraints.rate_thr_bps
        and row.rssi_dbm >= constraints.rssi_thr_dbm
        and per_fn(row.snr_db) <= constraints.per_delta
        and 0.0 <= row.tx_power_dbm <= constraints.p_max_dbm
    ]
    return StateTable(rows=kept)


def row_satisfies(row: ScanRow, constraints: ConstraintSet,
                  per_fn: PerFn = per_from_snr) -> bool:
    return len(feasible_candidates(StateTable(rows=[row]), constraints, per_fn)) == 1


def associate(per: float,
              cont_params: UoraParams,
              timing: RoamTiming,
              rng: np.random.Generator,
              *,
              channel_idle: bool = False,
              stage_limit: Optional[int] = None) -> AssociationOutcome:
    """Run the association exchange against one AP.

    Every attempt pays one medium-access draw (the station's own frame
    contending on the target channel) plus the association and
    authentication exchanges; a lost attempt (frame error, or contention
    dropped at the stage limit) instead pays its draw plus the full
    association timeout. Gives up after `max_retries` retries.
    """
    if not (0.0 <= per <= 1.0):
        raise ValueError(f"per must lie in [0, 1], got {per}")
    t_ro = 0.0
    for attempt in range(timing.max_retries + 1):
        if channel_idle:
            draw = ContentionSample(stages=0, backoff_slots=0,
                                    delay_s=cont_params.t_ifs_s, delivered=True)
        else:
            draw = sample_access_attempt(cont_params, rng, stage_limit)
        lost = (not draw.delivered) or (per > 0.0 and rng.random() < per)
        if not lost:
            t_ro += draw.delay_s + timing.t_au_s + timing.t_as_s
            return AssociationOutcome(success=True, t_ro_s=t_ro, retries=attempt)
        t_ro += draw.delay_s + timing.timeout_s
    return AssociationOutcome(success=False, t_ro_s=t_ro, retries=timing.max_retries)


def total_latency(record: HandoffRecord) -> float:
    return record.t_cs_s + record.t_ro_s + record.t_cont_s


def reward_from_latency(t_total_s: float, t_norm_s: float = 1.0) -> float:
    """Negated, normalized handoff latency: the learning signal."""
    if t_norm_s <= 0:
        raise ValueError(f"t_norm_s must be > 0, got {t_norm_s}")
    return -t_total_s / t_norm_s
