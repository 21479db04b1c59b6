"""AP-selection policies: RSSI-greedy, epsilon-greedy, and the learned agent.

The learned agent keeps one Q-network, target network and replay buffer per
station. Action slots are global AP ids so a Q-value means the same thing
across scans; APs absent from the current table are masked out.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import dqn
from .scanning import ScanRow, StateTable

log = logging.getLogger("roamsim.policy")


class PolicyKind(Enum):
    RSSI_GREEDY = "rssi"
    EPSILON_GREEDY = "eps"
    MADAR = "madar"


@dataclass(frozen=True)
class Action:
    ap_id: int
    channel: int
    branch: str = "exploit"     # which selection branch produced it
    ap_load: int = 0            # stations on the chosen AP at selection time


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 0.3
    schedule: str = "constant"   # "constant" or "linear"
    minimum: float = 0.05
    decay_steps: int = 250

    def value(self, step: int) -> float:
        if self.schedule == "constant" or self.decay_steps <= 0:
            return self.start
        frac = min(step / self.decay_steps, 1.0)
        return self.start + (self.minimum - self.start) * frac


def _best_rssi(table: StateTable) -> ScanRow:
    return table.best_rssi_row()


def select_rssi_greedy(table: StateTable) -> Action:
    """Strongest-signal row; ties break toward the lowest AP id."""
    if not table:
        raise ValueError("no candidate APs")
    row = _best_rssi(table)
    return Action(ap_id=row.ap_id, channel=row.channel, branch="exploit")


def select_epsilon_greedy(table: StateTable, epsilon: float,
                          rng: np.random.Generator) -> Action:
    """Uniform random row with probability epsilon, else best RSSI."""
    if not table:
        raise ValueError("no candidate APs")
    if epsilon > 0.0 and rng.random() < epsilon:
        row = table.rows[int(rng.integers(0, len(table.rows)))]
        return Action(ap_id=row.ap_id, channel=row.channel, branch="explore")
    row = _best_rssi(table)
    return Action(ap_id=row.ap_id, channel=row.channel, branch="exploit")


class MadarAgent:
    """Per-station learner: online net, target net, replay buffer, step count."""

    def __init__(self, agent_id: int, input_dim: int, output_dim: int,
                 hyper: dqn.DqnHyper, rng: np.random.Generator,
                 eps: Optional[EpsilonSchedule] = None,
                 explore: str = "rssi") -> None:
        self.agent_id = agent_id
        self.hyper = hyper
        self.eps = eps or EpsilonSchedule()
        self.explore = explore
        self.net = dqn.default_net(input_dim, output_dim, rng)
        self.target_net = self.net.copy()
        self.buffer = dqn.ReplayBuffer(hyper.buffer_capacity)
        self.step_count = 0
        self.pending: Optional[tuple[np.ndarray, int, float]] = None
        self.last_loss: Optional[float] = None

    def epsilon_now(self) -> float:
        return self.eps.value(self.step_count)


def madar_select(table: StateTable, epsilon: float, agent: MadarAgent,
                 rng: np.random.Generator, state: np.ndarray) -> Action:
    """Exploration picks the strongest-signal row (or uniform when configured);
    exploitation takes the target network's best unmasked Q-value."""
    if not table:
        raise ValueError("no candidate APs")
    if epsilon > 0.0 and rng.random() < epsilon:
        if agent.explore == "uniform":
            row = table.rows[int(rng.integers(0, len(table.rows)))]
        else:
            row = _best_rssi(table)
        return Action(ap_id=row.ap_id, channel=row.channel, branch="explore")
    q = dqn.forward(agent.target_net, state)
    mask = np.zeros(agent.net.output_dim, dtype=bool)
    by_id = {}
    for row in table.rows:
        if row.ap_id < mask.size:
            mask[row.ap_id] = True
            by_id[row.ap_id] = row
    ap_id = dqn.masked_argmax(q, mask)
    row = by_id[ap_id]
    return Action(ap_id=row.ap_id, channel=row.channel, branch="exploit")


def madar_step(agent: MadarAgent, state: np.ndarray, action: int, reward: float,
               next_state: np.ndarray, rng: np.random.Generator,
               terminal: bool = False) -> Optional[float]:
    """Store the transition, train once the buffer can fill a batch, and
    resync the target network every `sync_period` steps."""
    agent.step_count += 1
    agent.buffer.push(dqn.Transition(
        s=np.asarray(state, dtype=np.float64),
        s_next=np.asarray(next_state, dtype=np.float64),
        action=int(action),
        reward=float(reward),
        terminal=terminal,
    ))
    value = None
    if len(agent.buffer) >= agent.hyper.batch_size:
        value = dqn.train_step(agent.net, agent.target_net, agent.buffer,
                               agent.hyper, rng)
        agent.last_loss = value
    if agent.step_count % agent.hyper.sync_period == 0:
        dqn.sync_target(agent.net, agent.target_net)
    return value
