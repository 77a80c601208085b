"""Symmetrical-component virtual oscillator control of a grid-forming inverter."""
from .controller import ControllerConfig, SvocController
from .baseline_dvoc import DvocController
from .plant import GridEvent, Plant, PlantParams
from .runner import Scenario, RunResult, load_scenario, measure_pq, run_scenario
from .svoc import OscParams, PowerSetpoints

__all__ = ["ControllerConfig", "SvocController", "DvocController", "GridEvent", "Plant",
           "PlantParams", "Scenario", "RunResult", "load_scenario", "measure_pq",
           "run_scenario", "OscParams", "PowerSetpoints"]
__version__ = "0.1.0"
