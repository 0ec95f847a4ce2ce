"""Simulation and analysis of entangled two-photon absorption in dyes."""

from .engine import (
    ProbabilityCurve,
    detuning_penalty,
    inner_amplitude,
    optimal_temperature,
    probability,
    temperature_sweep,
)
from .molecule import IntermediateState, MoleculeModel, nile_red, response, response_map
from .source import CrystalSpec, GridConfig, JsaGrid, PumpSpec, build_jsa, load_sellmeier

__version__ = "0.1.0"
