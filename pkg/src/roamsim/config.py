"""Scenario configuration: typed keys, defaults, and the key=value file format.

A scenario file is plain text, one ``key = value`` per line, ``#`` starts a
comment. Unknown keys are hard errors so typos never silently fall back to a
default. Every key has a default tuned for a 3-AP / 5-channel / 20 MHz
deployment; see README for the full key table.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Optional


class Band(Enum):
    GHZ_2_4 = "2.4"
    GHZ_5 = "5"


class ScanAccounting(Enum):
    FSM = "fsm"
    EQ3_LITERAL = "eq3-literal"


class ConfigError(ValueError):
    """Raised on parse failures or out-of-range values."""


@dataclass(frozen=True)
class ScenarioConfig:
    # Topology
    num_channels: int = 5
    num_aps: int = 3
    num_stas: int = 20
    channel_bandwidth_hz: float = 20e6
    ap_spacing_m: float = 25.0
    max_range_m: float = 30.0
    grid: str = "line"                    # "line" or "grid2d"
    ap_channels: Optional[tuple[int, ...]] = None   # None = spread over [1, N]
    channel_bands: Optional[tuple[Band, ...]] = None  # None = low half 2.4, rest 5
    tx_power_dbm: float = 20.0

    # Run control
    seed: int = 1
    duration_s: float = 60.0
    scan_interval_s: float = 0.2

    # Mobility (random waypoint inside the serviceable coverage union)
    mobility: str = "waypoint"            # "waypoint" or "static"
    sta_speed_mps: float = 1.0
    move_tick_s: float = 0.1

    # Radio
    pl0_db: float = 46.67
    pl_exponent: float = 4.0
    noise_floor_dbm: float = -101.0
    interference_offset_db: float = 0.0
    band_pl0_offset_db: float = 0.0       # extra reference loss on 5 GHz channels
    shadowing_sigma_db: float = 0.0
    sensitivity_dbm: float = -94.0
    per_k: float = 1.0
    per_gamma0_db: float = 5.0

    # Scanning timers
    t_pb_ms: float = 1.0
    t_min_ms: float = 10.0
    t_max_ms: float = 100.0
    t_sw_ms: float = 5.0
    scan_accounting: ScanAccounting = ScanAccounting.FSM

    # UORA contention
    tau: float = 0.25
    w0: int = 16
    max_backoff_stage: int = 6
    t_ifs_us: float = 16.0
    slot_us: float = 9.0
    contention_drop: bool = True          # drop a frame whose contention exceeds the stage limit

    # Roaming
    handoff_threshold_dbm: float = -85.0
    t_au_ms: float = 5.0
    t_as_ms: float = 5.0
    assoc_timeout_ms: float = 100.0
    max_retries: int = 3
    rate_thr_bps: float = 0.0
    per_delta: float = 0.001
    p_max_dbm: float = 20.0

    # Traffic model
    payload_bits: float = 100000.0        # per-slot aggregate (A-MPDU scale)
    rate_sample_s: float = 1.0

    # Policy / learning
    epsilon: float = 0.3
    eps_schedule: str = "constant"        # "constant" or "linear"
    eps_min: float = 0.05
    eps_decay_steps: int = 250
    explore: str = "rssi"                 # MADAR explore branch: "rssi" or "uniform"
    learning_rate: float = 0.3
    gamma_d: float = 0.9
    batch_size: int = 32
    sync_period: int = 100
    buffer_capacity: int = 10000
    m_max: int = 0                        # 0 = use num_aps
    share_params: bool = False
    t_norm_s: float = 1.0

    def __post_init__(self) -> None:
        _validate(self)

    @property
    def band_of(self) -> tuple[Band, ...]:
        """Band of every channel, index 0 = channel 1."""
        if self.channel_bands is not None:
            return self.channel_bands
        split = (self.num_channels + 1) // 2
        return tuple(
            Band.GHZ_2_4 if i < split else Band.GHZ_5
            for i in range(self.num_channels)
        )

    @property
    def ap_channel_map(self) -> tuple[int, ...]:
        """Operating channel of every AP, spread over [1, N] when unset."""
        if self.ap_channels is not None:
            return self.ap_channels
        n, m = self.num_channels, self.num_aps
        return tuple((i * n) // m + 1 for i in range(m))

    @property
    def output_dim(self) -> int:
        return self.m_max if self.m_max > 0 else self.num_aps

    def to_text(self) -> str:
        """Serialize to the key=value format; load_scenario round-trips exactly."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_format_value(value)}")
        return "\n".join(lines) + "\n"


def _format_value(value) -> str:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _validate(cfg: ScenarioConfig) -> None:
    def require(cond: bool, name: str, why: str) -> None:
        if not cond:
            raise ConfigError(f"{name}: {why} (got {getattr(cfg, name)!r})")

    require(cfg.num_channels >= 1, "num_channels", "must be >= 1")
    require(cfg.num_aps >= 1, "num_aps", "must be >= 1")
    require(cfg.num_stas >= 1, "num_stas", "must be >= 1")
    require(cfg.channel_bandwidth_hz > 0, "channel_bandwidth_hz", "must be > 0")
    require(cfg.ap_spacing_m > 0, "ap_spacing_m", "must be > 0")
    require(cfg.max_range_m > 0, "max_range_m", "must be > 0")
    require(cfg.scan_interval_s > 0, "scan_interval_s", "must be > 0")
    require(cfg.duration_s >= 0, "duration_s", "must be >= 0")
    require(cfg.grid in ("line", "grid2d"), "grid", "must be 'line' or 'grid2d'")
    require(cfg.mobility in ("waypoint", "static"), "mobility", "must be 'waypoint' or 'static'")
    require(cfg.sta_speed_mps >= 0, "sta_speed_mps", "must be >= 0")
    require(cfg.pl_exponent > 0, "pl_exponent", "must be > 0")
    require(0 <= cfg.tx_power_dbm <= cfg.p_max_dbm, "tx_power_dbm", "must lie in [0, p_max_dbm]")
    require(cfg.t_min_ms < cfg.t_max_ms, "t_min_ms", "must be < t_max_ms")
    require(min(cfg.t_pb_ms, cfg.t_min_ms, cfg.t_sw_ms) >= 0, "t_pb_ms", "timers must be >= 0")
    require(0 <= cfg.tau <= 1, "tau", "must lie in [0, 1]")
    require(cfg.w0 >= 1, "w0", "must be >= 1")
    require(cfg.max_backoff_stage >= 0, "max_backoff_stage", "must be >= 0")
    require(cfg.t_ifs_us >= 0, "t_ifs_us", "must be >= 0")
    require(cfg.slot_us > 0, "slot_us", "must be > 0")
    require(cfg.assoc_timeout_ms > 0, "assoc_timeout_ms", "must be > 0")
    require(cfg.max_retries >= 0, "max_retries", "must be >= 0")
    require(0 < cfg.per_delta < 1, "per_delta", "must lie in (0, 1)")
    require(0 <= cfg.epsilon <= 1, "epsilon", "must lie in [0, 1]")
    require(0 <= cfg.eps_min <= 1, "eps_min", "must lie in [0, 1]")
    require(cfg.eps_schedule in ("constant", "linear"), "eps_schedule", "must be 'constant' or 'linear'")
    require(cfg.explore in ("rssi", "uniform"), "explore", "must be 'rssi' or 'uniform'")
    require(cfg.learning_rate > 0, "learning_rate", "must be > 0")
    require(0 <= cfg.gamma_d < 1, "gamma_d", "must lie in [0, 1)")
    require(cfg.batch_size >= 1, "batch_size", "must be >= 1")
    require(cfg.sync_period >= 1, "sync_period", "must be >= 1")
    require(cfg.buffer_capacity >= 1, "buffer_capacity", "must be >= 1")
    require(cfg.t_norm_s > 0, "t_norm_s", "must be > 0")
    require(cfg.payload_bits > 0, "payload_bits", "must be > 0")
    require(cfg.rate_sample_s > 0, "rate_sample_s", "must be > 0")
    if cfg.ap_channels is not None:
        require(len(cfg.ap_channels) == cfg.num_aps, "ap_channels",
                f"needs one channel per AP ({cfg.num_aps})")
        for ch in cfg.ap_channels:
            require(1 <= ch <= cfg.num_channels, "ap_channels",
                    f"channel {ch} outside [1, {cfg.num_channels}]")
    if cfg.channel_bands is not None:
        require(len(cfg.channel_bands) == cfg.num_channels, "channel_bands",
                f"needs one band per channel ({cfg.num_channels})")
    require(cfg.m_max == 0 or cfg.m_max >= cfg.num_aps, "m_max",
            "must be 0 (auto) or >= num_aps")


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}

_INT_KEYS = {
    "num_channels", "num_aps", "num_stas", "seed", "w0", "max_backoff_stage",
    "max_retries", "batch_size", "sync_period", "buffer_capacity",
    "eps_decay_steps", "m_max",
}
_BOOL_KEYS = {"share_params", "contention_drop"}
_STR_KEYS = {"grid", "mobility", "eps_schedule", "explore"}


def _parse_value(key: str, raw: str, line_no: int):
    try:
        if key == "scan_accounting":
            return ScanAccounting(raw)
        if key == "ap_channels":
            return tuple(int(p) for p in raw.split(","))
        if key == "channel_bands":
            return tuple(Band(p.strip()) for p in raw.split(","))
        if key in _BOOL_KEYS:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if key in _INT_KEYS:
            return int(raw)
        if key in _STR_KEYS:
            return raw
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: bad value for {key}: {exc}") from None


def load_scenario(text: str) -> ScenarioConfig:
    """Parse a scenario document; missing keys keep their defaults."""
    overrides = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {line.strip()!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        overrides[key] = _parse_value(key, raw, line_no)
    return ScenarioConfig(**overrides)


def load_scenario_file(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def with_overrides(cfg: ScenarioConfig, pairs: dict[str, str]) -> ScenarioConfig:
    """Apply raw key=value overrides on top of a parsed config."""
    parsed = {}
    for key, raw in pairs.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        parsed[key] = _parse_value(key, raw, 0)
    return replace(cfg, **parsed)
