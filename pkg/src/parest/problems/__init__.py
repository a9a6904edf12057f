"""Observation and cost models, scenarios, synthetic data and problem builders."""

from .builder import ParamMap, build_problem, initial_iterate, node_schedule
from .observations import ObservationModel, ObservationSet, make_observation
from .scenario import Scenario, load_scenario, scenario_from_dict
from .scoring import regressor_image_error, score_estimate, true_accelerations
from .synth import SyntheticData, synthesize_data

__all__ = ["ParamMap", "build_problem", "initial_iterate", "node_schedule", "ObservationModel",
           "ObservationSet", "make_observation", "Scenario", "load_scenario", "scenario_from_dict",
           "regressor_image_error", "score_estimate", "true_accelerations", "SyntheticData",
           "synthesize_data"]
