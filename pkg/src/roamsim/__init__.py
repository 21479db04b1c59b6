"""roamsim: discrete-event Wi-Fi 6 roaming simulator with learned AP selection."""

__version__ = "0.1.0"

from .config import Band, ConfigError, ScanAccounting, ScenarioConfig, load_scenario
from .policy import PolicyKind

__all__ = [
    "Band",
    "ConfigError",
    "PolicyKind",
    "ScanAccounting",
    "ScenarioConfig",
    "load_scenario",
    "__version__",
]
