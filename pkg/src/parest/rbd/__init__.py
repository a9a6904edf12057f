"""Rigid-body dynamics for kinematic trees with planar point contacts."""

from .model import Body, Contact, RobotModel, chain, load_model, model_from_dict, single_body
from .dynamics import (bias_forces, contact_dynamics, forward_dynamics, impulse_dynamics,
                       inverse_dynamics, joint_torque_regressor, mass_matrix)

__all__ = ["Body", "Contact", "RobotModel", "chain", "load_model", "model_from_dict", "single_body",
           "bias_forces", "contact_dynamics", "forward_dynamics", "impulse_dynamics",
           "inverse_dynamics", "joint_torque_regressor", "mass_matrix"]
