"""Linear bicycle-model lateral dynamics and global pose kinematics.

The yaw-rate/steering transfer function and the two-state (sideslip, yaw
rate) realization are generated from physical parameters and the
longitudinal speed; pose integration treats the velocity direction
(heading + sideslip) as the course angle.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .ltisys import StateSpace, TransferFunction


@dataclass(frozen=True)
class VehicleParams:
    """Masses in kg, lengths in m, cornering stiffnesses in N/rad, yaw
    inertia in kg*m^2."""

    m: float
    l_f: float
    l_r: float
    c_alpha_f: float
    c_alpha_r: float
    i_z: float

    def __post_init__(self):
        for name in ("m", "l_f", "l_r", "c_alpha_f", "c_alpha_r", "i_z"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @staticmethod
    def from_json(d: dict) -> "VehicleParams":
        return VehicleParams(d["m"], d["lf"], d["lr"],
                             d["c_alpha_f"], d["c_alpha_r"], d["iz"])

    def to_json(self) -> dict:
        return {"m": self.m, "lf": self.l_f, "lr": self.l_r,
                "c_alpha_f": self.c_alpha_f, "c_alpha_r": self.c_alpha_r,
                "iz": self.i_z}

    @staticmethod
    def load(path) -> "VehicleParams":
        with open(path) as f:
            return VehicleParams.from_json(json.load(f))


# 2017 Lincoln test vehicle; stiffness values are converted from kN/rad
LINCOLN_2017 = VehicleParams(m=1800.0, l_f=1.6, l_r=1.65,
                             c_alpha_f=120e3, c_alpha_r=110e3, i_z=3270.0)


@dataclass(frozen=True)
class LateralState:
    beta: float       # sideslip angle, rad
    yaw_rate: float   # rad/s
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        if abs(self.beta) > 0.2:
            warnings.warn("sideslip beyond small-angle regime (|beta|>0.2 rad)")


@dataclass(frozen=True)
class SpeedRange:
    v_min: float
    v_max: float
    v_nominal: float

    def __post_init__(self):
        if not (0 < self.v_min <= self.v_nominal <= self.v_max):
            raise ValueError("require 0 < v_min <= v_nominal <= v_max")


# urban circuit envelope of the case study
URBAN_SPEEDS = SpeedRange(4.0, 10.0, 6.0)


def lateral_ss(p: VehicleParams, vx: float) -> StateSpace:
    """Two-state model [beta; yaw_rate] driven by the steering angle, output
    yaw rate."""
    if vx <= 0:
        raise ValueError("longitudinal speed must be positive")
    caf, car = p.c_alpha_f, p.c_alpha_r
    A = np.array([
        [-(caf + car) / (p.m * vx),
         -1.0 + (p.l_r * car - p.l_f * caf) / (p.m * vx ** 2)],
        [(p.l_r * car - p.l_f * caf) / p.i_z,
         -(p.l_r ** 2 * car + p.l_f ** 2 * caf) / (p.i_z * vx)],
    ])
    B = np.array([[caf / (p.m * vx)], [p.l_f * caf / p.i_z]])
    C = np.array([[0.0, 1.0]])
    return StateSpace(A, B, C, [[0.0]])


def lateral_tf(p: VehicleParams, vx: float) -> TransferFunction:
    """Yaw-rate/steering transfer function (a1 s + a2)/(b1 s^2 + b2 s + b3),
    normalized to a monic denominator.

    The b2 coefficient is taken consistent with the state-space model,
    Iz(Caf+Car) + m(lf^2 Caf + lr^2 Car); see the docs note on the sign of
    the lr^2 term."""
    if vx <= 0:
        raise ValueError("longitudinal speed must be positive")
    caf, car = p.c_alpha_f, p.c_alpha_r
    wheelbase = p.l_f + p.l_r
    a1 = p.m * vx * p.l_f * caf
    a2 = wheelbase * caf * car
    b1 = p.m * vx * p.i_z
    b2 = p.i_z * (caf + car) + p.m * (p.l_f ** 2 * caf + p.l_r ** 2 * car)
    b3 = (caf * car / vx) * wheelbase ** 2 * (
        1.0 + p.m * vx ** 2 * (p.l_r * car - p.l_f * caf)
        / (wheelbase ** 2 * caf * car))
    return TransferFunction([a1, a2], [b1, b2, b3]).normalized()


def tire_force(c_alpha: float, alpha: float) -> float:
    """Linear lateral force law F = C_alpha * alpha."""
    return c_alpha * alpha


def sideslip(u_y: float, u_x: float) -> float:
    """Sideslip angle from body-frame velocities (forward motion only)."""
    if u_x == 0:
        raise ValueError("sideslip undefined at zero longitudinal velocity")
    return float(np.arctan(u_y / u_x))


def integrate_pose(state: LateralState, vx: float, dt: float) -> LateralState:
    """One RK4 step of the global kinematics with beta and yaw rate held
    constant over the step:
    Xdot = vx cos(psi+beta), Ydot = vx sin(psi+beta), psidot = yaw_rate."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    beta, w = state.beta, state.yaw_rate

    def deriv(psi):
        return (vx * np.cos(psi + beta), vx * np.sin(psi + beta), w)

    k1 = deriv(state.psi)
    k2 = deriv(state.psi + 0.5 * dt * k1[2])
    k3 = deriv(state.psi + 0.5 * dt * k2[2])
    k4 = deriv(state.psi + dt * k3[2])
    x = state.x + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    y = state.y + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    psi = state.psi + dt * w
    return LateralState(beta, w, x, y, psi)
