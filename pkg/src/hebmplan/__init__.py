"""Trajectory planning with a hybrid slip-extended bicycle model, validated
in closed loop against a 9-DoF four-wheel simulator."""

__version__ = "0.1.0"
