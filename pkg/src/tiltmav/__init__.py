"""Tiltrotor omnidirectional multirotor workbench.

Morphology design optimization, jerk-level LQRI / PID control with
differential actuator allocation, and a deterministic closed-loop
simulator.
"""

__version__ = "0.1.0"

from .vehicle import Morphology, prototype_morphology  # noqa: F401
