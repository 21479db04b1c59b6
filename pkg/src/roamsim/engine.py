"""Discrete-event simulation loop.

Stations move on a 100 ms tick, check their link every background-scan
interval, and run the full handoff procedure (scan, select, associate) when
the serving link drops below the handoff threshold or they are unassociated.
Background link checks are free; only handoffs pay scan time. A station is
"busy" for the whole duration of its handoff and neither samples data rate
nor re-triggers until it completes. Per-channel contender counts feed the
contention model both for the association exchange and for the throughput
estimates that stations observe while scanning.

The loop is single-threaded and every stochastic source draws from a named,
seeded stream, so a (scenario, policy, seed) triple always reproduces the
same metrics.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from . import dqn
from .config import Band, ScenarioConfig
from .contention import UoraParams, collision_prob, contention_delay, sample_contention
from .policy import (Action, EpsilonSchedule, MadarAgent, PolicyKind,
                     madar_select, madar_step, select_epsilon_greedy,
                     select_rssi_greedy)
from .radio import PathLossModel, link_quality, per_from_snr, throughput_estimate
from .roaming import (ConstraintSet, HandoffRecord, RoamTiming, associate,
                      feasible_candidates, handoff_needed, reward_from_latency)
from .scanning import ScanTiming, StateTable, full_scan
from .topology import ApNode, SimClock, StaNode, make_mobility, place_grid

log = logging.getLogger("roamsim.engine")

# Fixed spawn order of the per-episode random streams; changing one
# subsystem's draws must not perturb the others.
STREAMS = ("placement", "mobility", "per", "contention", "policy", "shadowing")
AGENT_STREAM_KEY = 982451653   # session-level stream for net init / replay sampling


class EventKind(Enum):
    MOVE_TICK = "MoveTick"
    SCAN_DUE = "ScanDue"
    HANDOFF_CHECK = "HandoffCheck"
    ASSOC_COMPLETE = "AssocComplete"
    METRICS_FLUSH = "MetricsFlush"


class RateSample(NamedTuple):
    time_s: float
    sta_id: int
    ap_id: int        # -1 while unassociated or roaming
    channel: int      # 0 while unassociated or roaming
    rate_bps: float


class LoadSample(NamedTuple):
    time_s: float
    channel: int
    contenders: int


@dataclass
class ChannelLoad:
    """Per-channel contender bookkeeping.

    `counts` holds associated stations (their sum always equals the number
    of associated stations); `pending` holds stations whose association
    exchange is in flight. Both kinds contend for the medium, so contention
    parameters and throughput estimates use their sum.
    """

    counts: dict[int, int] = field(default_factory=dict)
    pending: dict[int, int] = field(default_factory=dict)

    def get(self, channel: int) -> int:
        return self.counts.get(channel, 0)

    def contending(self, channel: int) -> int:
        return self.counts.get(channel, 0) + self.pending.get(channel, 0)

    def add(self, channel: int) -> None:
        self.counts[channel] = self.counts.get(channel, 0) + 1

    def remove(self, channel: int) -> None:
        current = self.counts.get(channel, 0)
        if current <= 0:
            raise ValueError(f"channel {channel} has no stations to remove")
        self.counts[channel] = current - 1

    def add_pending(self, channel: int) -> None:
        self.pending[channel] = self.pending.get(channel, 0) + 1

    def remove_pending(self, channel: int) -> None:
        current = self.pending.get(channel, 0)
        if current <= 0:
            raise ValueError(f"channel {channel} has no pending joins to remove")
        self.pending[channel] = current - 1

    def total(self) -> int:
        return sum(self.counts.values())


@dataclass
class MetricsSink:
    """Append-only run outputs."""

    policy: str = ""
    records: list[HandoffRecord] = field(default_factory=list)
    rates: list[RateSample] = field(default_factory=list)
    loads: list[LoadSample] = field(default_factory=list)
    max_contenders: dict[int, int] = field(default_factory=dict)
    roam_failures: int = 0
    scan_failures: int = 0

    def max_contenders_overall(self) -> int:
        return max(self.max_contenders.values(), default=0)


@dataclass
class _PendingRoam:
    sta_id: int
    action: Action
    t_cs_s: float
    t_ro_s: float
    t_cont_s: float
    retries: int
    success: bool
    infeasible: bool
    rssi_dbm: float
    snr_db: float


def contenders(load: ChannelLoad, channel: int) -> int:
    """Stations currently contending on the channel."""
    return load.get(channel)


class Simulation:
    def __init__(self, config: ScenarioConfig, policy: PolicyKind, seed: int,
                 *, episode: int = 0,
                 agents: Optional[dict[int, MadarAgent]] = None,
                 epsilon: Optional[float] = None,
                 hyper: Optional[dqn.DqnHyper] = None,
                 eps_schedule: Optional[EpsilonSchedule] = None) -> None:
        self.config = config
        self.policy = policy
        self.seed = seed
        self.episode = episode
        self.epsilon_override = epsilon
        self.epsilon = config.epsilon if epsilon is None else epsilon

        streams = np.random.SeedSequence((seed, episode)).spawn(len(STREAMS))
        self.rng = {name: np.random.default_rng(s) for name, s in zip(STREAMS, streams)}

        self.model = PathLossModel(
            pl0_db=config.pl0_db,
            exponent=config.pl_exponent,
            noise_floor_dbm=config.noise_floor_dbm + config.interference_offset_db,
            shadowing_sigma_db=config.shadowing_sigma_db,
        )
        self.scan_timing = ScanTiming(
            t_pb_s=config.t_pb_ms / 1e3, t_min_s=config.t_min_ms / 1e3,
            t_max_s=config.t_max_ms / 1e3, t_sw_s=config.t_sw_ms / 1e3,
        )
        self.roam_timing = RoamTiming(
            t_au_s=config.t_au_ms / 1e3, t_as_s=config.t_as_ms / 1e3,
            timeout_s=config.assoc_timeout_ms / 1e3, max_retries=config.max_retries,
        )
        self.constraints = ConstraintSet(
            rate_thr_bps=config.rate_thr_bps,
            rssi_thr_dbm=config.handoff_threshold_dbm,
            per_delta=config.per_delta,
            p_max_dbm=config.p_max_dbm,
        )
        self.aps, self.stas = place_grid(config, self.rng["placement"])
        self.mobility = make_mobility(config, self.aps, self.rng["mobility"])
        self.load = ChannelLoad()
        self.clock = SimClock()
        self.busy_until = {sta.sta_id: -1.0 for sta in self.stas}
        self.pending: dict[int, _PendingRoam] = {}
        self.metrics = MetricsSink(policy=policy.value)
        self.agents = agents if agents is not None else {}
        if policy is PolicyKind.MADAR and not self.agents:
            self.agents.update(make_agents(config, seed, hyper, eps_schedule))
        self._agent_rng = np.random.default_rng(
            np.random.SeedSequence((seed, AGENT_STREAM_KEY, episode)))
        self._heap: list[tuple[float, int, EventKind, int]] = []
        self._seq = itertools.count()

    # -- event plumbing ----------------------------------------------------

    def _schedule(self, time_s: float, kind: EventKind, sta_id: int = -1) -> None:
        heapq.heappush(self._heap, (time_s, next(self._seq), kind, sta_id))

    def run(self, duration_s: Optional[float] = None) -> MetricsSink:
        duration = self.config.duration_s if duration_s is None else duration_s
        if duration <= 0.0:
            return self.metrics
        k = len(self.stas)
        for sta in self.stas:
            phase = (sta.sta_id / k) * self.config.scan_interval_s
            self._schedule(phase, EventKind.SCAN_DUE, sta.sta_id)
        if self.mobility is not None:
            self._schedule(self.config.move_tick_s, EventKind.MOVE_TICK)
        self._schedule(self.config.rate_sample_s, EventKind.METRICS_FLUSH)
        self._last_move = 0.0

        while self._heap and self._heap[0][0] <= duration:
            time_s, _, kind, sta_id = heapq.heappop(self._heap)
            self.clock.advance(time_s)
            if kind is EventKind.MOVE_TICK:
                self._on_move_tick(time_s)
            elif kind is EventKind.SCAN_DUE:
                self._on_scan_due(time_s, sta_id)
            elif kind is EventKind.HANDOFF_CHECK:
                self._on_handoff(time_s, sta_id)
            elif kind is EventKind.ASSOC_COMPLETE:
                self._on_assoc_complete(time_s, sta_id)
            elif kind is EventKind.METRICS_FLUSH:
                self._on_metrics_flush(time_s)
        self._finish_pending_transitions()
        return self.metrics

    # -- handlers ----------------------------------------------------------

    def _on_move_tick(self, time_s: float) -> None:
        dt = time_s - self._last_move
        self._last_move = time_s
        if self.mobility is not None:
            for sta in self.stas:
                self.mobility.step(sta, dt)
            self._schedule(time_s + self.config.move_tick_s, EventKind.MOVE_TICK)

    def _on_scan_due(self, time_s: float, sta_id: int) -> None:
        self._schedule(time_s + self.config.scan_interval_s, EventKind.SCAN_DUE, sta_id)
        if self.busy_until[sta_id] > time_s:
            return
        sta = self.stas[sta_id]
        if handoff_needed(self._serving_rssi(sta), self.config.handoff_threshold_dbm):
            self._schedule(time_s, EventKind.HANDOFF_CHECK, sta_id)

    def _serving_rssi(self, sta: StaNode) -> Optional[float]:
        if sta.associated_ap is None:
            return None
        ap = self.aps[sta.associated_ap]
        distance = math.hypot(ap.x - sta.x, ap.y - sta.y)
        if distance > self.config.max_range_m:
            return -math.inf
        return link_quality(ap.tx_power_dbm, distance, self.model,
                            self.rng["shadowing"]).rssi_dbm

    def _rate_fn_for_scan(self):
        """Prospective throughput on a candidate AP's channel for this station."""
        def rate(ap: ApNode, link) -> float:
            return self._throughput(ap.channel, link.snr_db, joining=True)
        return rate

    def _throughput(self, channel: int, snr_db: float, *, joining: bool) -> float:
        cfg = self.config
        cap = cfg.channel_bandwidth_hz * math.log2(1.0 + 10.0 ** (snr_db / 10.0))
        if cap <= 0.0:
            return 0.0
        k_sta = self.load.contending(channel) + (1 if joining else 0)
        idle = k_sta <= 1
        access = contention_delay(idle, self._uora_params(max(k_sta, 1)))
        slot = cfg.payload_bits / cap + access
        return throughput_estimate(cfg.payload_bits, slot, cap)

    def _uora_params(self, k_sta: int) -> UoraParams:
        cfg = self.config
        return UoraParams(
            tau=cfg.tau, p_c=collision_prob(cfg.tau, k_sta), k_sta=k_sta,
            w0=cfg.w0, max_stage=cfg.max_backoff_stage,
            t_ifs_s=cfg.t_ifs_us / 1e6, slot_s=cfg.slot_us / 1e6,
        )

    def _disassociate(self, sta: StaNode) -> None:
        if sta.associated_ap is not None:
            self.load.remove(self.aps[sta.associated_ap].channel)
            sta.associated_ap = None

    def _on_handoff(self, time_s: float, sta_id: int) -> None:
        sta = self.stas[sta_id]
        if self.busy_until[sta_id] > time_s:
            return
        cfg = self.config
        start_channel = 1 if sta.associated_ap is None else self.aps[sta.associated_ap].channel
        self._disassociate(sta)
        report = full_scan(
            cfg.num_channels, start_channel, self.aps, sta.position,
            self.model, self.scan_timing,
            sensitivity_dbm=cfg.sensitivity_dbm,
            max_range_m=cfg.max_range_m,
            accounting=cfg.scan_accounting,
            rate_fn=self._rate_fn_for_scan(),
            bandwidth_hz=cfg.channel_bandwidth_hz,
            rng=self.rng["shadowing"],
        )
        table = report.table
        if not table:
            self.metrics.scan_failures += 1
            self.busy_until[sta_id] = time_s + report.t_cs_s
            return

        filtered = feasible_candidates(
            table, self.constraints,
            per_fn=lambda snr: per_from_snr(snr, cfg.per_k, cfg.per_gamma0_db))
        infeasible = len(filtered) == 0
        candidates = table if infeasible else filtered

        state = dqn.encode_state(table, cfg.output_dim, cfg.channel_bandwidth_hz)
        action = self._select(sta, candidates, infeasible, state)
        row = candidates.row_for(action.ap_id)
        assert row is not None

        others = self.load.contending(row.channel)
        k_join = others + 1
        per = per_from_snr(row.snr_db, cfg.per_k, cfg.per_gamma0_db)
        stage_limit = cfg.max_backoff_stage + 1 if cfg.contention_drop else None
        outcome = associate(
            per, self._uora_params(k_join), self.roam_timing, self.rng["per"],
            channel_idle=others == 0,
            stage_limit=stage_limit,
        )
        if outcome.success:
            data_draw = sample_contention(self._uora_params(k_join), self.rng["contention"]) \
                if others > 0 else None
            t_cont = data_draw.delay_s if data_draw else self._uora_params(1).t_ifs_s
        else:
            t_cont = 0.0
        self.load.add_pending(row.channel)
        t_total = report.t_cs_s + outcome.t_ro_s + t_cont
        self.busy_until[sta_id] = time_s + t_total
        self.pending[sta_id] = _PendingRoam(
            sta_id=sta_id, action=action, t_cs_s=report.t_cs_s,
            t_ro_s=outcome.t_ro_s, t_cont_s=t_cont, retries=outcome.retries,
            success=outcome.success, infeasible=infeasible,
            rssi_dbm=row.rssi_dbm, snr_db=row.snr_db,
        )
        self._schedule(time_s + t_total, EventKind.ASSOC_COMPLETE, sta_id)

        if self.policy is PolicyKind.MADAR:
            agent = self._agent_for(sta)
            reward = reward_from_latency(t_total, cfg.t_norm_s)
            self._commit_transition(agent, next_state=state)
            agent.pending = (state, action.ap_id, reward)
            log.debug("step=%d sta=%d policy=madar branch=%s action=%d reward=%.6f",
                      agent.step_count, sta_id, action.branch, action.ap_id, reward)

    def _select(self, sta: StaNode, candidates: StateTable, infeasible: bool,
                state: np.ndarray) -> Action:
        if infeasible:
            action = select_rssi_greedy(candidates)
            return Action(ap_id=action.ap_id, channel=action.channel, branch="fallback")
        if self.policy is PolicyKind.RSSI_GREEDY:
            return select_rssi_greedy(candidates)
        if self.policy is PolicyKind.EPSILON_GREEDY:
            return select_epsilon_greedy(candidates, self.epsilon, self.rng["policy"])
        agent = self._agent_for(sta)
        eps = agent.epsilon_now() if self.epsilon_override is None else self.epsilon_override
        return madar_select(candidates, eps, agent, self.rng["policy"], state)

    def _agent_for(self, sta: StaNode) -> MadarAgent:
        key = 0 if self.config.share_params else sta.sta_id
        if key not in self.agents:
            raise RuntimeError(f"no agent initialized for station {sta.sta_id}")
        return self.agents[key]

    def _commit_transition(self, agent: MadarAgent, next_state: np.ndarray,
                           terminal: bool = False) -> None:
        if agent.pending is None:
            return
        s, action, reward = agent.pending
        agent.pending = None
        madar_step(agent, s, action, reward, next_state, self._agent_rng,
                   terminal=terminal)

    def _finish_pending_transitions(self) -> None:
        if self.policy is not PolicyKind.MADAR:
            return
        for agent in self.agents.values():
            if agent.pending is not None:
                s = agent.pending[0]
                self._commit_transition(agent, next_state=s, terminal=True)

    def _on_assoc_complete(self, time_s: float, sta_id: int) -> None:
        roam = self.pending.pop(sta_id, None)
        if roam is None:
            return
        self.load.remove_pending(roam.action.channel)
        sta = self.stas[sta_id]
        if roam.success:
            sta.associated_ap = roam.action.ap_id
            self.load.add(roam.action.channel)
            self._note_load(time_s, roam.action.channel)
            self.metrics.records.append(HandoffRecord(
                sta_id=sta_id,
                ap_id=roam.action.ap_id,
                channel=roam.action.channel,
                t_cs_s=roam.t_cs_s,
                t_ro_s=roam.t_ro_s,
                t_cont_s=roam.t_cont_s,
                t_total_s=roam.t_cs_s + roam.t_ro_s + roam.t_cont_s,
                retries=roam.retries,
                timestamp_s=time_s,
                policy=self.policy.value,
                branch=roam.action.branch,
                infeasible=roam.infeasible,
                rssi_dbm=roam.rssi_dbm,
                snr_db=roam.snr_db,
            ))
        else:
            self.metrics.roam_failures += 1

    def _note_load(self, time_s: float, channel: int) -> None:
        count = self.load.get(channel)
        if count > self.metrics.max_contenders.get(channel, 0):
            self.metrics.max_contenders[channel] = count

    def _on_metrics_flush(self, time_s: float) -> None:
        self._schedule(time_s + self.config.rate_sample_s, EventKind.METRICS_FLUSH)
        for sta in self.stas:
            if sta.associated_ap is None or self.busy_until[sta.sta_id] > time_s:
                self.metrics.rates.append(RateSample(time_s, sta.sta_id, -1, 0, 0.0))
                continue
            ap = self.aps[sta.associated_ap]
            rssi = self._serving_rssi(sta)
            if rssi is None or rssi == -math.inf:
                self.metrics.rates.append(RateSample(time_s, sta.sta_id, ap.ap_id, ap.channel, 0.0))
                continue
            snr = rssi - self.model.noise_floor_dbm
            rate = self._throughput(ap.channel, snr, joining=False)
            self.metrics.rates.append(RateSample(time_s, sta.sta_id, ap.ap_id, ap.channel, rate))
        for channel in range(1, self.config.num_channels + 1):
            self.metrics.loads.append(LoadSample(time_s, channel, self.load.get(channel)))

    def band_of_channel(self, channel: int) -> Band:
        return self.config.band_of[channel - 1]


def make_agents(config: ScenarioConfig, seed: int,
                hyper: Optional[dqn.DqnHyper] = None,
                eps_schedule: Optional[EpsilonSchedule] = None) -> dict[int, MadarAgent]:
    """Fresh learner set: one per station, or a single shared one."""
    hyper = hyper or dqn.DqnHyper(
        learning_rate=config.learning_rate, gamma_d=config.gamma_d,
        batch_size=config.batch_size, sync_period=config.sync_period,
        buffer_capacity=config.buffer_capacity,
    )
    eps_schedule = eps_schedule or EpsilonSchedule(
        start=config.epsilon, schedule=config.eps_schedule,
        minimum=config.eps_min, decay_steps=config.eps_decay_steps,
    )
    rng = np.random.default_rng(np.random.SeedSequence((seed, AGENT_STREAM_KEY)))
    input_dim = config.output_dim * dqn.FEATURES_PER_AP
    count = 1 if config.share_params else config.num_stas
    return {
        i: MadarAgent(i, input_dim, config.output_dim, hyper, rng,
                      eps=eps_schedule, explore=config.explore)
        for i in range(count)
    }


def run(config: ScenarioConfig, policy: PolicyKind, duration_s: float,
        seed: int, **kwargs) -> MetricsSink:
    """One self-contained episode."""
    sim = Simulation(config, policy, seed, **kwargs)
    return sim.run(duration_s)


def run_episodes(config: ScenarioConfig, policy: PolicyKind, episodes: int,
                 duration_s: float, seed: int,
                 agents: Optional[dict[int, MadarAgent]] = None,
                 **kwargs) -> tuple[list[MetricsSink], dict[int, MadarAgent]]:
    """Sequential episodes; learner state persists across them."""
    if policy is PolicyKind.MADAR and agents is None:
        agents = make_agents(config, seed,
                             kwargs.get("hyper"), kwargs.get("eps_schedule"))
    sinks = []
    for episode in range(episodes):
        sim = Simulation(config, policy, seed, episode=episode,
                         agents=agents, **kwargs)
        sinks.append(sim.run(duration_s))
    return sinks, (agents or {})
