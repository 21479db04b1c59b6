"""From-scratch Q-network: tanh MLP, manual backprop, replay buffer, target net.

The network maps the flattened candidate-AP observation matrix to one
Q-value per AP slot. Slots for APs missing from a scan are padded with -1
and masked out of every argmax/max. Training is plain semi-gradient descent
on the squared Bellman error of the chosen action's output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .radio import shannon_cap_from_snr_db
from .scanning import StateTable

HIDDEN_LAYERS = (16, 32, 64, 128)
PAD_VALUE = -1.0
FEATURES_PER_AP = 3   # throughput, rssi, snr

CHECKPOINT_VERSION = 1

# Min-max normalization ranges for the observation features.
RSSI_RANGE_DBM = (-95.0, -20.0)
SNR_RANGE_DB = (0.0, 80.0)


class Mlp:
    """Fully-connected net; tanh hidden activations, identity output."""

    def __init__(self, layer_sizes: Sequence[int],
                 rng: Optional[np.random.Generator] = None) -> None:
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        self.layer_sizes = list(layer_sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            if rng is None:
                w = np.zeros((fan_out, fan_in))
                b = np.zeros(fan_out)
            else:
                w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
                b = rng.uniform(-bound, bound, size=fan_out)
            self.weights.append(w)
            self.biases.append(b)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Mlp":
        clone = Mlp(self.layer_sizes)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone


def default_net(input_dim: int, output_dim: int, rng: np.random.Generator) -> Mlp:
    return Mlp([input_dim, *HIDDEN_LAYERS, output_dim], rng)


def forward(net: Mlp, s: np.ndarray) -> np.ndarray:
    """Q-values for one state vector."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (net.input_dim,):
        raise ValueError(f"state shape {s.shape} does not match input dim {net.input_dim}")
    return _forward_batch(net, s[None, :])[0]


def _forward_batch(net: Mlp, states: np.ndarray) -> np.ndarray:
    a = states
    last = len(net.weights) - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = z if layer == last else np.tanh(z)
    return a


def _forward_batch_cached(net: Mlp, states: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    activations = [states]
    a = states
    last = len(net.weights) - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = z if layer == last else np.tanh(z)
        activations.append(a)
    return a, activations


def action_mask(s: np.ndarray) -> np.ndarray:
    """Valid-action mask recovered from the padding convention."""
    s = np.asarray(s, dtype=np.float64)
    slots = s.reshape(-1, FEATURES_PER_AP)
    return ~np.all(slots == PAD_VALUE, axis=1)


def masked_argmax(q: np.ndarray, mask: np.ndarray) -> int:
    """Index of the best unmasked Q-value; ties break toward the lowest index."""
    if not mask.any():
        raise ValueError("no unmasked action available")
    masked = np.where(mask, q, -np.inf)
    return int(np.argmax(masked))


def masked_max(q: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        return 0.0
    return float(np.max(np.where(mask, q, -np.inf)))


class Transition(NamedTuple):
    s: np.ndarray
    s_next: np.ndarray
    action: int
    reward: float
    terminal: bool = False


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} from buffer of {len(self._items)}")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def all(self) -> list[Transition]:
        return list(self._items)


@dataclass(frozen=True)
class DqnHyper:
    learning_rate: float = 0.3   # plain gradient descent diverges easily here; 0.01 is the safe choice
    gamma_d: float = 0.9
    batch_size: int = 32
    sync_period: int = 100
    buffer_capacity: int = 10000

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not (0.0 <= self.gamma_d < 1.0):
            raise ValueError(f"gamma_d must lie in [0, 1), got {self.gamma_d}")
        if self.sync_period < 1:
            raise ValueError(f"sync_period must be >= 1, got {self.sync_period}")


def bellman_target(reward: float, s_next: np.ndarray, target_net: Mlp,
                   gamma_d: float, terminal: bool = False) -> float:
    """One-step target: reward plus discounted best unmasked next Q-value."""
    if terminal or gamma_d == 0.0:
        return reward
    q_next = forward(target_net, s_next)
    return reward + gamma_d * masked_max(q_next, action_mask(s_next))


def loss(batch: Sequence[Transition], net: Mlp, targets: Sequence[float]) -> float:
    """Mean squared Bellman error over the chosen-action outputs."""
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    if len(batch) != len(targets):
        raise ValueError("one target per transition required")
    states = np.stack([t.s for t in batch])
    actions = np.array([t.action for t in batch])
    q = _forward_batch(net, states)
    chosen = q[np.arange(len(batch)), actions]
    return float(np.mean((np.asarray(targets) - chosen) ** 2))


def loss_and_grads(net: Mlp, states: np.ndarray, actions: np.ndarray,
                   targets: np.ndarray) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Backprop through the chosen-action output component only."""
    batch = states.shape[0]
    q, activations = _forward_batch_cached(net, states)
    rows = np.arange(batch)
    residual = targets - q[rows, actions]
    value = float(np.mean(residual ** 2))

    delta = np.zeros_like(q)
    delta[rows, actions] = -2.0 * residual / batch
    grad_w: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        grad_w[layer] = delta.T @ activations[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            # activations[layer] holds tanh(z) of the previous hidden layer
            delta = (delta @ net.weights[layer]) * (1.0 - activations[layer] ** 2)
    return value, grad_w, grad_b


def train_step(net: Mlp, target_net: Mlp, buffer: ReplayBuffer, hyper: DqnHyper,
               rng: np.random.Generator) -> float:
    """One SGD step on a sampled batch; returns the pre-update loss."""
    if len(buffer) < hyper.batch_size:
        raise ValueError(
            f"buffer holds {len(buffer)} transitions, batch needs {hyper.batch_size}")
    batch = buffer.sample(hyper.batch_size, rng)
    targets = np.array([
        bellman_target(t.reward, t.s_next, target_net, hyper.gamma_d, t.terminal)
        for t in batch
    ])
    states = np.stack([t.s for t in batch])
    actions = np.array([t.action for t in batch])
    value, grad_w, grad_b = loss_and_grads(net, states, actions, targets)
    for layer in range(len(net.weights)):
        net.weights[layer] -= hyper.learning_rate * grad_w[layer]
        net.biases[layer] -= hyper.learning_rate * grad_b[layer]
    return value


def sync_target(net: Mlp, target_net: Mlp) -> None:
    """Parameter-wise copy from the online net into the target net."""
    if net.layer_sizes != target_net.layer_sizes:
        raise ValueError(
            f"architecture mismatch: {net.layer_sizes} vs {target_net.layer_sizes}")
    target_net.weights = [w.copy() for w in net.weights]
    target_net.biases = [b.copy() for b in net.biases]


def encode_state(table: StateTable, m_max: int, bandwidth_hz: float) -> np.ndarray:
    """Flatten a scan table into the fixed-size, min-max normalized state vector.

    AP slot m holds (throughput / capacity bound, rssi, snr) scaled to [0, 1];
    slots of undiscovered APs stay at the pad value.
    """
    vec = np.full(m_max * FEATURES_PER_AP, PAD_VALUE, dtype=np.float64)
    for row in table.rows:
        if row.ap_id >= m_max:
            continue
        cap = shannon_cap_from_snr_db(row.snr_db, bandwidth_hz)
        thr = row.throughput_bps / cap if cap > 0 else 0.0
        lo, hi = RSSI_RANGE_DBM
        rssi = (row.rssi_dbm - lo) / (hi - lo)
        snr = (row.snr_db - SNR_RANGE_DB[0]) / (SNR_RANGE_DB[1] - SNR_RANGE_DB[0])
        base = row.ap_id * FEATURES_PER_AP
        vec[base:base + 3] = np.clip([thr, rssi, snr], 0.0, 1.0)
    return vec


def save_checkpoint(net: Mlp, path: str) -> None:
    """Versioned binary dump; loading restores parameters bit-exactly."""
    arrays = {"version": np.array([CHECKPOINT_VERSION]),
              "layer_sizes": np.array(net.layer_sizes)}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(path, **arrays)


def load_checkpoint(path: str) -> Mlp:
    with np.load(path) as data:
        version = int(data["version"][0])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        net = Mlp([int(n) for n in data["layer_sizes"]])
        net.weights = [data[f"w{i}"].astype(np.float64) for i in range(len(net.layer_sizes) - 1)]
        net.biases = [data[f"b{i}"].astype(np.float64) for i in range(len(net.layer_sizes) - 1)]
    return net
