"""Loaders for the shipped case-study fixtures.

c0.json            ninth-order continuous robust controller (full synthesis)
c5.json            fifth-order reduced continuous controller
cd.json            discrete controller at T = 0.01 s, recombined from its
                   parallel (partial fraction) form
plant_nominal.json nominal yaw-rate/steering plant at 6 m/s
uturn.csv          synthetic U-turn waypoint path with a speed profile
"""

from importlib import resources

from .ltisys import TransferFunction
from .pathsim import Path

T_FAST = 0.01
N_CASE = 3


def _path(name):
    return resources.files(__package__) / "fixtures" / name


def load_c0() -> TransferFunction:
    return TransferFunction.load(_path("c0.json"))


def load_c5() -> TransferFunction:
    return TransferFunction.load(_path("c5.json"))


def load_cd() -> TransferFunction:
    return TransferFunction.load(_path("cd.json"))


def load_plant_nominal() -> TransferFunction:
    return TransferFunction.load(_path("plant_nominal.json"))


def load_uturn() -> Path:
    return Path.from_csv(_path("uturn.csv"))
