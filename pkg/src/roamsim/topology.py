"""AP/STA placement and the random-waypoint mobility model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ScenarioConfig


@dataclass
class ApNode:
    ap_id: int
    x: float
    y: float
    channel: int
    tx_power_dbm: float
    capacity: Optional[int] = None    # None = unlimited associated STAs

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class StaNode:
    sta_id: int
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    associated_ap: Optional[int] = None
    agent_id: Optional[int] = None

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


class SimClock:
    """Monotonic simulation time in seconds."""

    def __init__(self) -> None:
        self.now = 0.0

    def advance(self, t: float) -> None:
        if t < self.now:
            raise ValueError(f"clock moved backwards: {t} < {self.now}")
        self.now = t


def ap_positions(config: ScenarioConfig) -> list[tuple[float, float]]:
    """Grid anchor points: a line by default, a near-square 2-D grid otherwise."""
    m, d = config.num_aps, config.ap_spacing_m
    if config.grid == "line":
        return [(i * d, 0.0) for i in range(m)]
    cols = math.ceil(math.sqrt(m))
    return [((i % cols) * d, (i // cols) * d) for i in range(m)]


def service_radius(config: ScenarioConfig) -> float:
    """Distance at which an AP's RSSI drops to the handoff threshold.

    STA placement and waypoint targets stay inside this radius (capped at
    max_range) so stations spend their time where service is sustainable;
    they can still transit the outer fringe between waypoints.
    """
    margin_db = config.tx_power_dbm - config.pl0_db - config.handoff_threshold_dbm
    r = 10.0 ** (margin_db / (10.0 * config.pl_exponent))
    return min(r, config.max_range_m)


def _sample_in_union(rng: np.random.Generator,
                     centers: list[tuple[float, float]],
                     radius: float) -> tuple[float, float]:
    # Rejection-free: pick a disk, sample in it, accept with probability
    # 1/(number of covering disks) to stay uniform over the union.
    while True:
        cx, cy = centers[rng.integers(0, len(centers))]
        r = radius * math.sqrt(rng.random())
        theta = 2.0 * math.pi * rng.random()
        x, y = cx + r * math.cos(theta), cy + r * math.sin(theta)
        covering = sum(1 for (ax, ay) in centers
                       if (x - ax) ** 2 + (y - ay) ** 2 <= radius ** 2)
        if rng.random() < 1.0 / covering:
            return (x, y)


def place_grid(config: ScenarioConfig,
               rng: Optional[np.random.Generator] = None) -> tuple[list[ApNode], list[StaNode]]:
    """Deterministic AP grid plus seeded uniform STA scatter over the coverage union."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    channels = config.ap_channel_map
    aps = [
        ApNode(ap_id=i, x=pos[0], y=pos[1], channel=channels[i],
               tx_power_dbm=config.tx_power_dbm)
        for i, pos in enumerate(ap_positions(config))
    ]
    centers = [ap.position for ap in aps]
    radius = service_radius(config)
    stas = []
    for k in range(config.num_stas):
        x, y = _sample_in_union(rng, centers, radius)
        stas.append(StaNode(sta_id=k, x=x, y=y, agent_id=k))
    return aps, stas


@dataclass
class WaypointMobility:
    """Random waypoint at constant speed; target resampled on arrival."""

    centers: list[tuple[float, float]]
    radius: float
    speed: float
    rng: np.random.Generator
    targets: dict[int, tuple[float, float]] = field(default_factory=dict)

    def step(self, sta: StaNode, dt: float) -> None:
        if self.speed <= 0.0:
            return
        remaining = dt
        while remaining > 1e-12:
            if sta.sta_id not in self.targets:
                self.targets[sta.sta_id] = _sample_in_union(self.rng, self.centers, self.radius)
            tx, ty = self.targets[sta.sta_id]
            dist = math.hypot(tx - sta.x, ty - sta.y)
            if dist < 1e-9:
                del self.targets[sta.sta_id]
                continue
            ux, uy = (tx - sta.x) / dist, (ty - sta.y) / dist
            sta.vx, sta.vy = ux * self.speed, uy * self.speed
            travel = self.speed * remaining
            if dist <= travel:
                sta.x, sta.y = tx, ty
                del self.targets[sta.sta_id]
                remaining -= dist / self.speed
            else:
                sta.x += ux * travel
                sta.y += uy * travel
                remaining = 0.0


def make_mobility(config: ScenarioConfig, aps: list[ApNode],
                  rng: np.random.Generator) -> Optional[WaypointMobility]:
    if config.mobility == "static" or config.sta_speed_mps <= 0:
        return None
    return WaypointMobility(
        centers=[ap.position for ap in aps],
        radius=service_radius(config),
        speed=config.sta_speed_mps,
        rng=rng,
    )
