"""Single-cell 5G NR MAC scheduling simulator with an O-RAN style xApp loop."""
from .config import ConfigError, ScenarioConfig, load_config
from .engine import RunResult, run, setup, step_tti

__all__ = ["ConfigError", "RunResult", "ScenarioConfig", "load_config", "run", "setup", "step_tti"]
__version__ = "0.1.0"
