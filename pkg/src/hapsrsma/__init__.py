"""Multi-beam HAPS downlink: angular clustering, interference-aware RB
allocation and RSMA max-min fair power allocation via SCA."""

from .config import ScenarioConfig, load_config
from .montecarlo import Scenario, antenna_sweep, cdf, run_campaign, run_scenario

__all__ = ["ScenarioConfig", "load_config", "Scenario", "antenna_sweep", "cdf",
           "run_campaign", "run_scenario"]
__version__ = "0.1.0"
