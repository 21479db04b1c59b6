"""Uplink random-access contention analytics and a Monte-Carlo cross-check.

The closed forms give the per-station success probability, the expected
number of contention stages, the expected accumulated backoff (in slots,
the exponential window doubling stops contributing past the maximum stage)
and the resulting delay in seconds. `mc_contention_oracle` re-derives the
stage/backoff means by direct simulation and is kept independent of the
closed forms on purpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class ContentionError(ValueError):
    """Raised when the configured probabilities make success impossible."""


@dataclass(frozen=True)
class UoraParams:
    tau: float = 0.25          # per-station transmit probability
    p_c: float = 0.0           # collision probability in the chosen RU
    k_sta: int = 1             # stations contending on the channel
    w0: int = 16               # minimum contention window, slots
    max_stage: int = 6         # backoff stages before the window stops growing
    t_ifs_s: float = 16e-6
    slot_s: float = 9e-6

    def __post_init__(self) -> None:
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if not (0.0 <= self.p_c <= 1.0):
            raise ValueError(f"p_c must lie in [0, 1], got {self.p_c}")
        if self.k_sta < 1:
            raise ValueError(f"k_sta must be >= 1, got {self.k_sta}")
        if self.w0 < 1:
            raise ValueError(f"w0 must be >= 1, got {self.w0}")
        if self.max_stage < 0:
            raise ValueError(f"max_stage must be >= 0, got {self.max_stage}")


class ContentionResult(NamedTuple):
    p_s: float
    expected_stages: float
    expected_backoff_slots: float
    delay_s: float


class OracleResult(NamedTuple):
    mean_stages: float
    mean_backoff_slots: float
    se_stages: float
    se_backoff_slots: float


class ContentionSample(NamedTuple):
    stages: int
    backoff_slots: int
    delay_s: float
    delivered: bool


def collision_prob(tau: float, k_sta: int) -> float:
    """Chance that at least one of the other k_sta-1 stations also transmits."""
    return 1.0 - (1.0 - tau) ** (k_sta - 1)


def success_prob(tau: float, p_c: float, k_sta: int) -> float:
    """Probability that a contention stage ends in a successful transmission."""
    p_s = 1.0 - (1.0 - tau * (1.0 - p_c)) ** k_sta
    if p_s <= 0.0:
        raise ContentionError(
            f"contention never succeeds (tau={tau}, p_c={p_c}, k_sta={k_sta})")
    return p_s


def expected_stages(p_s: float) -> float:
    if not (0.0 < p_s <= 1.0):
        raise ContentionError(f"success probability must lie in (0, 1], got {p_s}")
    return 1.0 / p_s


def expected_backoff(w0: int, max_stage: int, p_s: float) -> float:
    """Mean accumulated backoff in slots: initial window plus doubled retries."""
    if not (0.0 < p_s <= 1.0):
        raise ContentionError(f"success probability must lie in (0, 1], got {p_s}")
    total = (w0 - 1) / 2.0
    for i in range(1, max_stage + 1):
        total += (1.0 - p_s) ** i * (w0 * 2 ** i - 1) / 2.0
    return total


def contention_delay(channel_idle: bool, params: UoraParams) -> float:
    """Mean medium-access delay in seconds for one frame."""
    if channel_idle:
        return params.t_ifs_s
    p_s = success_prob(params.tau, params.p_c, params.k_sta)
    stages = expected_stages(p_s)
    backoff = expected_backoff(params.w0, params.max_stage, p_s)
    return stages * params.t_ifs_s + backoff * params.slot_s


def contention_metrics(params: UoraParams, channel_idle: bool = False) -> ContentionResult:
    p_s = success_prob(params.tau, params.p_c, params.k_sta)
    stages = expected_stages(p_s)
    backoff = expected_backoff(params.w0, params.max_stage, p_s)
    delay = params.t_ifs_s if channel_idle else stages * params.t_ifs_s + backoff * params.slot_s
    return ContentionResult(p_s, stages, backoff, delay)


def params_for_load(k_sta: int, tau: float = 0.25, w0: int = 16, max_stage: int = 6,
                    t_ifs_s: float = 16e-6, slot_s: float = 9e-6) -> UoraParams:
    """Parameters for a channel with k_sta contenders; p_c derived from tau."""
    return UoraParams(tau=tau, p_c=collision_prob(tau, max(k_sta, 1)),
                      k_sta=max(k_sta, 1), w0=w0, max_stage=max_stage,
                      t_ifs_s=t_ifs_s, slot_s=slot_s)


def sample_contention(params: UoraParams, rng: np.random.Generator,
                      stage_limit: Optional[int] = None) -> ContentionSample:
    """Draw one contention outcome: geometric stage count, per-stage backoff.

    With `stage_limit` set, a frame still unserved after that many stages is
    dropped (802.11-style retry limit); its delay covers the stages actually
    spent. Without a limit the draw always delivers and its mean matches the
    closed forms.
    """
    p_s = success_prob(params.tau, params.p_c, params.k_sta)
    return _sample_stages(p_s, params, rng, stage_limit)


def own_success_prob(tau: float, p_c: float) -> float:
    """Per-stage success of one particular station: it transmits and no
    other contender hits the same RU."""
    p = tau * (1.0 - p_c)
    if p <= 0.0:
        raise ContentionError(
            f"station never wins contention (tau={tau}, p_c={p_c})")
    return p


def sample_access_attempt(params: UoraParams, rng: np.random.Generator,
                          stage_limit: Optional[int] = None) -> ContentionSample:
    """Medium-access draw for one station's own frame (management exchanges).

    Unlike the channel-level draw above, each stage succeeds only when this
    station transmits collision-free, so crowded channels climb through the
    doubling backoff windows much faster and frames are dropped at the stage
    limit far more often.
    """
    return _sample_stages(own_success_prob(params.tau, params.p_c),
                          params, rng, stage_limit)


def _sample_stages(p_stage: float, params: UoraParams, rng: np.random.Generator,
                   stage_limit: Optional[int]) -> ContentionSample:
    stages = int(rng.geometric(p_stage))
    delivered = stage_limit is None or stages <= stage_limit
    stages_spent = stages if delivered else stage_limit
    backoff = int(rng.integers(0, params.w0))
    for i in range(1, min(stages_spent - 1, params.max_stage) + 1):
        backoff += int(rng.integers(0, params.w0 * 2 ** i))
    delay = stages_spent * params.t_ifs_s + backoff * params.slot_s
    return ContentionSample(stages=stages_spent, backoff_slots=backoff,
                            delay_s=delay, delivered=delivered)


def mc_contention_oracle(params: UoraParams, trials: int, seed: int) -> OracleResult:
    """Empirical stage/backoff means over `trials` independent draws.

    Vectorized re-simulation used to validate the closed forms; failures past
    the maximum stage keep contending but add no further backoff, mirroring
    the truncated analytical sum.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    p_s = success_prob(params.tau, params.p_c, params.k_sta)
    rng = np.random.default_rng(seed)
    stages = rng.geometric(p_s, size=trials)
    backoff = rng.integers(0, params.w0, size=trials).astype(np.float64)
    for i in range(1, params.max_stage + 1):
        reached = stages - 1 >= i
        if not reached.any():
            break
        draws = rng.integers(0, params.w0 * 2 ** i, size=trials)
        backoff[reached] += draws[reached]
    mean_stages = float(stages.mean())
    mean_backoff = float(backoff.mean())
    se_stages = float(stages.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    se_backoff = float(backoff.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return OracleResult(mean_stages, mean_backoff, se_stages, se_backoff)
