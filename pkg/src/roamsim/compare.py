"""Multi-policy, multi-seed comparison runs and their summary statistics.

Evaluation episodes use a reserved episode index so every policy sees the
same station placement and the same mobility traces for a given seed; the
comparison is paired and differences come from the selection policies alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .config import Band, ScenarioConfig
from .dqn import DqnHyper
from .engine import MetricsSink, make_agents, run_episodes, Simulation
from .policy import EpsilonSchedule, MadarAgent, PolicyKind
from .roaming import HandoffRecord

log = logging.getLogger("roamsim.compare")

EVAL_EPISODE_BASE = 1_000_000


@dataclass
class EvalResult:
    policy: PolicyKind
    seed: int
    stas: int
    sinks: list[MetricsSink] = field(default_factory=list)

    @property
    def records(self) -> list[HandoffRecord]:
        return [r for sink in self.sinks for r in sink.records]

    @property
    def roam_failures(self) -> int:
        return sum(sink.roam_failures for sink in self.sinks)

    def max_contenders(self) -> int:
        return max((sink.max_contenders_overall() for sink in self.sinks), default=0)

    def avg_rate_bps(self) -> float:
        samples = [s.rate_bps for sink in self.sinks for s in sink.rates if s.ap_id >= 0]
        return sum(samples) / len(samples) if samples else 0.0


def evaluate_policy(config: ScenarioConfig,
                    policy: PolicyKind,
                    seed: int,
                    *,
                    episodes: int = 0,
                    train_duration_s: float = 20.0,
                    eval_duration_s: Optional[float] = None,
                    eval_episodes: int = 1,
                    epsilon: Optional[float] = None,
                    hyper: Optional[DqnHyper] = None,
                    eps_schedule: Optional[EpsilonSchedule] = None) -> EvalResult:
    """Optionally train (learned policy only), then run paired evaluation
    episodes and collect their metrics."""
    eval_duration = config.duration_s if eval_duration_s is None else eval_duration_s
    agents: Optional[dict[int, MadarAgent]] = None
    if policy is PolicyKind.MADAR:
        agents = make_agents(config, seed, hyper, eps_schedule)
        if episodes > 0:
            run_episodes(config, policy, episodes, train_duration_s, seed,
                         agents=agents, epsilon=epsilon)
            log.info("policy=%s seed=%d trained %d episodes", policy.value, seed, episodes)
    result = EvalResult(policy=policy, seed=seed, stas=config.num_stas)
    for i in range(eval_episodes):
        sim = Simulation(config, policy, seed, episode=EVAL_EPISODE_BASE + i,
                         agents=agents, epsilon=epsilon)
        result.sinks.append(sim.run(eval_duration))
    log.info("policy=%s seed=%d eval: %d handoffs, %d failures",
             policy.value, seed, len(result.records), result.roam_failures)
    return result


def countable(record: HandoffRecord) -> bool:
    """Records that enter the delay statistics: real policy decisions."""
    return not record.infeasible


def assoc_delays(records: list[HandoffRecord]) -> list[float]:
    return [r.t_ro_s for r in records if countable(r)]


def mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


@dataclass
class SummaryRow:
    policy: str
    stas: int
    band: str               # "2.4", "5" or "all"
    handoffs: int
    assoc_delay_max_s: float
    assoc_delay_min_s: float
    assoc_delay_avg_s: float
    t_total_avg_s: float
    max_contenders: float
    avg_rate_mbps: float
    roam_failures: int

    def as_tuple(self) -> tuple:
        return (self.policy, self.stas, self.band, self.handoffs,
                self.assoc_delay_max_s, self.assoc_delay_min_s,
                self.assoc_delay_avg_s, self.t_total_avg_s,
                self.max_contenders, self.avg_rate_mbps, self.roam_failures)


def summarize(config: ScenarioConfig, results: list[EvalResult]) -> list[SummaryRow]:
    """Pool per-policy results over seeds into Table-style max/min/avg rows,
    overall and split by frequency band of the chosen channel."""
    rows: list[SummaryRow] = []
    by_policy: dict[tuple[str, int], list[EvalResult]] = {}
    for res in results:
        by_policy.setdefault((res.policy.value, res.stas), []).append(res)
    band_of = {c + 1: b.value for c, b in enumerate(config.band_of)}
    bands = [band.value for band in (Band.GHZ_2_4, Band.GHZ_5)]
    for (policy, stas), group in sorted(by_policy.items()):
        records = [r for res in group for r in res.records]
        for band in ["all"] + bands:
            in_band = lambda ch: band == "all" or band_of.get(ch) == band
            sel = [r for r in records if in_band(r.channel)]
            if band != "all" and not sel:
                continue
            delays = assoc_delays(sel)
            per_seed_max = [
                float(max((m for ch, m in sink.max_contenders.items() if in_band(ch)),
                          default=0))
                for res in group for sink in res.sinks
            ]
            rate_samples = [
                s.rate_bps for res in group for sink in res.sinks
                for s in sink.rates if s.ap_id >= 0 and in_band(s.channel)
            ]
            rows.append(SummaryRow(
                policy=policy,
                stas=stas,
                band=band,
                handoffs=len(sel),
                assoc_delay_max_s=max(delays, default=0.0),
                assoc_delay_min_s=min(delays, default=0.0),
                assoc_delay_avg_s=mean(delays),
                t_total_avg_s=mean([r.t_total_s for r in sel if countable(r)]),
                max_contenders=mean(per_seed_max),
                avg_rate_mbps=mean(rate_samples) / 1e6,
                roam_failures=sum(res.roam_failures for res in group),
            ))
    return rows
