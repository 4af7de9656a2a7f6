"""Closed-loop dual-rate lane-keeping simulation.

Pure pursuit turns the waypoint path into a yaw-rate reference; the plant is
integrated continuously (RK4 at a fine substep, steering held between
controller updates) while the controller runs at the fast period T as a
single-rate fast, single-rate slow, or interlaced implementation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import interlace as il
from .lifting import (LiftedQuadruple, SwitchedExecutor,
                      lift_interlaced_controller, lifted_closed_loop)
from .ltisys import ParallelForm, StateSpace, TransferFunction, tf_to_ss
from .ltisys import discretize_zoh
from .vehicle import VehicleParams, lateral_ss

SUBSTEPS = 10          # plant RK4 substeps per controller period
BLOWUP_LIMIT = 1e6


class PathLostError(RuntimeError):
    pass


class NumericalBlowupError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# path geometry

class Path:
    """Ordered waypoints with an arclength cache and optional per-point
    speeds."""

    def __init__(self, waypoints, speeds=None):
        wp = np.asarray(waypoints, float).reshape(-1, 2)
        if len(wp) < 2:
            raise ValueError("a path needs at least two waypoints")
        seg = np.diff(wp, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 1e-6):
            raise ValueError("consecutive waypoints closer than 1e-6 m")
        self.waypoints = wp
        self.seg = seg
        self.seg_len = seg_len
        self.s = np.concatenate([[0.0], np.cumsum(seg_len)])
        self.speeds = None if speeds is None else np.asarray(speeds, float)
        if self.speeds is not None and len(self.speeds) != len(wp):
            raise ValueError("one speed per waypoint required")

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def project(self, x, y):
        """Foot of perpendicular: returns (arclength, signed lateral
        distance).  Positive distance is to the left of the path."""
        p = np.array([x, y])
        rel = p - self.waypoints[:-1]
        t = np.clip((rel * self.seg).sum(axis=1) / self.seg_len ** 2, 0.0, 1.0)
        foot = self.waypoints[:-1] + t[:, None] * self.seg
        d = np.hypot(*(p - foot).T)
        i = int(np.argmin(d))
        off = p - foot[i]
        sign = np.sign(self.seg[i, 0] * off[1] - self.seg[i, 1] * off[0])
        if sign == 0:
            sign = 1.0
        return float(self.s[i] + t[i] * self.seg_len[i]), float(sign * d[i])

    def point_at(self, s):
        """Position at arclength s, clamped to the path ends."""
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.clip(np.searchsorted(self.s, s) - 1, 0, len(self.seg) - 1))
        t = (s - self.s[i]) / self.seg_len[i]
        return self.waypoints[i] + t * self.seg[i]

    def speed_at(self, s) -> float:
        if self.speeds is None:
            raise ValueError("path carries no speed profile")
        return float(np.interp(np.clip(s, 0.0, self.length), self.s,
                               self.speeds))

    def heading_at(self, s) -> float:
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.clip(np.searchsorted(self.s, s) - 1, 0, len(self.seg) - 1))
        return float(np.arctan2(self.seg[i, 1], self.seg[i, 0]))

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["x", "y", "v"] if self.speeds is not None
                       else ["x", "y"])
            for i, (x, y) in enumerate(self.waypoints):
                row = [f"{x:.9g}", f"{y:.9g}"]
                if self.speeds is not None:
                    row.append(f"{self.speeds[i]:.9g}")
                w.writerow(row)

    @staticmethod
    def from_csv(path) -> "Path":
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        header = [h.strip() for h in rows[0]]
        has_v = len(header) > 2 and header[2] == "v"
        pts = [(float(r[0]), float(r[1])) for r in rows[1:] if r]
        speeds = [float(r[2]) for r in rows[1:] if r] if has_v else None
        return Path(pts, speeds)


def pure_pursuit_ref(x, y, psi, path: Path, lookahead: float, vx: float,
                     corridor: float = 10.0) -> float:
    """Yaw-rate reference: goal point one look-ahead arclength past the
    projection, curvature 2 sin(alpha)/L toward it.  Holds the final
    waypoint past the end of the path."""
    s, dist = path.project(x, y)
    if abs(dist) > corridor:
        raise PathLostError(f"{abs(dist):.2f} m from path (corridor "
                            f"{corridor:g} m)")
    gx, gy = path.point_at(s + lookahead)
    alpha = np.arctan2(gy - y, gx - x) - psi
    alpha = np.arctan2(np.sin(alpha), np.cos(alpha))
    kappa = 2.0 * np.sin(alpha) / lookahead
    return float(vx * kappa)


# ---------------------------------------------------------------------------
# plants

@dataclass(frozen=True)
class FixturePlant:
    """LTI yaw-rate/steering plant given as a continuous transfer function
    (zero sideslip assumed for the pose kinematics)."""
    tf: TransferFunction

    def __post_init__(self):
        ss = tf_to_ss(self.tf)
        object.__setattr__(self, "_A", ss.A)
        object.__setattr__(self, "_B", ss.B)
        object.__setattr__(self, "_C", ss.C)

    def f(self, xp, delta, vx):
        return self._A @ xp + self._B[:, 0] * delta

    def yaw_rate(self, xp):
        return (self._C @ xp).item()

    def beta(self, xp):
        return 0.0

    @property
    def n_states(self):
        return self._A.shape[0]

    def discrete(self, T) -> StateSpace:
        d = discretize_zoh(self.tf, T)
        return tf_to_ss(d)


@dataclass(frozen=True)
class FormulaPlant:
    """Bicycle-model plant rebuilt from physical parameters at the current
    speed (LPV when the speed profile varies)."""
    params: VehicleParams

    def f(self, xp, delta, vx):
        ss = lateral_ss(self.params, vx)
        return ss.A @ xp + ss.B[:, 0] * delta

    def yaw_rate(self, xp):
        return float(xp[1])

    def beta(self, xp):
        return float(xp[0])

    @property
    def n_states(self):
        return 2

    def discrete(self, T, vx=6.0) -> StateSpace:
        ss = lateral_ss(self.params, vx)
        import scipy.signal
        Ad, Bd, Cd, Dd, _ = scipy.signal.cont2discrete(
            (ss.A, ss.B, ss.C, ss.D), T, method="zoh")
        return StateSpace(Ad, Bd, Cd, Dd, T)


# ---------------------------------------------------------------------------
# controller implementations

class FastController:
    """Plain single-rate recursion of the full controller at period T."""

    def __init__(self, pf: ParallelForm):
        self.ss = tf_to_ss(pf.recombine())
        self.x = np.zeros(self.ss.n_states)

    def step(self, e: float) -> float:
        self.x, y = self.ss.step(self.x, e)
        return float(y[0])


class SlowController:
    """Whole controller resampled to NT in the held-input sense
    (A^N, sum_i A^i B); output held between metaperiod starts."""

    def __init__(self, pf: ParallelForm, N: int):
        ss = tf_to_ss(pf.recombine())
        A = np.eye(ss.n_states)
        S = np.zeros_like(A)
        for _ in range(N):
            S = S + A
            A = ss.A @ A
        self.ss = StateSpace(A, S @ ss.B, ss.C, ss.D, N * pf.dt)
        self.x = np.zeros(ss.n_states)
        self.N = N
        self.k = 0
        self.u = 0.0

    def step(self, e: float) -> float:
        if self.k % self.N == 0:
            self.x, y = self.ss.step(self.x, e)
            self.u = float(y[0])
        self.k += 1
        return self.u


class InterlacedController:
    def __init__(self, pf: ParallelForm, plan: il.InterlacePlan):
        self.exe = SwitchedExecutor(pf, plan)

    def step(self, e: float) -> float:
        return self.exe.step(e)


def make_controller(pf, variant, plan=None, N=None):
    if variant == "single_rate_fast":
        return FastController(pf)
    if variant == "single_rate_slow":
        return SlowController(pf, N if N is not None else plan.N)
    if variant == "interlaced":
        if plan is None:
            raise ValueError("interlaced variant needs a plan")
        return InterlacedController(pf, plan)
    raise ValueError(f"unknown controller variant {variant!r}")


# ---------------------------------------------------------------------------
# scenario / results

@dataclass(frozen=True)
class Scenario:
    path: Path
    T: float
    N: int
    duration: float
    lookahead: float = 6.0
    speed: float | None = None       # constant override; else path speeds
    plant: object = None             # FixturePlant or FormulaPlant
    corridor: float = 10.0
    steer_limit: float | None = None
    label: str = "scenario"

    def __post_init__(self):
        if self.T <= 0 or self.duration <= 0 or self.lookahead <= 0:
            raise ValueError("T, duration and lookahead must be positive")

    def speed_at(self, s) -> float:
        if self.speed is not None:
            return self.speed
        return self.path.speed_at(s)


@dataclass
class SimResult:
    variant: str
    label: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    delta: np.ndarray
    yaw_rate: np.ndarray
    yaw_rate_ref: np.ndarray
    cross_track: np.ndarray
    cost: il.CostReport = None

    @property
    def rms_cross_track(self) -> float:
        return float(np.sqrt(np.mean(self.cross_track ** 2)))

    @property
    def max_cross_track(self) -> float:
        return float(np.max(np.abs(self.cross_track)))

    @property
    def rms_yaw_rate_error(self) -> float:
        return float(np.sqrt(np.mean((self.yaw_rate_ref - self.yaw_rate) ** 2)))

    def metrics(self) -> dict:
        return {"rms_cross_track": self.rms_cross_track,
                "max_cross_track": self.max_cross_track,
                "rms_yaw_rate_error": self.rms_yaw_rate_error}

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["t", "x", "y", "psi", "delta", "yawrate",
                        "yawrate_ref", "cross_track"])
            for row in zip(self.t, self.x, self.y, self.psi, self.delta,
                           self.yaw_rate, self.yaw_rate_ref,
                           self.cross_track):
                w.writerow([f"{v:.9g}" for v in row])


def simulate(scenario: Scenario, pf: ParallelForm, variant: str,
             plan: il.InterlacePlan = None) -> SimResult:
    """Run the closed loop and record fast-rate series.

    Plant: continuous, RK4 at T/SUBSTEPS with the steering command held over
    each controller period.  Controller: one of the three implementations.
    Deterministic for a given scenario."""
    plant = scenario.plant
    ctrl = make_controller(pf, variant, plan, scenario.N)
    n = int(round(scenario.duration / scenario.T))
    xp = np.zeros(plant.n_states)
    s0 = 0.0
    x, y = scenario.path.waypoints[0]
    psi = scenario.path.heading_at(0.0)
    h = scenario.T / SUBSTEPS
    rec = {k: np.empty(n) for k in
           ("t", "x", "y", "psi", "delta", "yaw_rate", "yaw_rate_ref",
            "cross_track")}
    for k in range(n):
        s, dist = scenario.path.project(x, y)
        if abs(dist) > scenario.corridor:
            raise PathLostError(f"step {k}: {abs(dist):.2f} m off path")
        vx = scenario.speed_at(s)
        w = plant.yaw_rate(xp)
        ref = pure_pursuit_ref(x, y, psi, scenario.path, scenario.lookahead,
                               vx, scenario.corridor)
        delta = ctrl.step(ref - w)
        if scenario.steer_limit is not None:
            delta = float(np.clip(delta, -scenario.steer_limit,
                                  scenario.steer_limit))
        rec["t"][k] = k * scenario.T
        rec["x"][k], rec["y"][k], rec["psi"][k] = x, y, psi
        rec["delta"][k] = delta
        rec["yaw_rate"][k] = w
        rec["yaw_rate_ref"][k] = ref
        rec["cross_track"][k] = dist
        for _ in range(SUBSTEPS):
            xp, x, y, psi = _rk4_step(plant, xp, x, y, psi, delta, vx, h)
        if (np.max(np.abs(xp), initial=0.0) > BLOWUP_LIMIT
                or max(abs(x), abs(y)) > BLOWUP_LIMIT):
            raise NumericalBlowupError(
                f"state magnitude exceeded {BLOWUP_LIMIT:g} at t="
                f"{k * scenario.T:.3f} s ({variant})")
    cost = _cost_for(pf, variant, plan, scenario.N)
    return SimResult(variant, scenario.label, **rec, cost=cost)


def _cost_for(pf, variant, plan, N):
    if variant == "interlaced":
        return il.cost_interlaced(pf, plan)
    if variant == "single_rate_slow":
        return il.cost_single_rate_slow(pf, N)
    return il.cost_single_rate_fast(pf)


def _rk4_step(plant, xp, x, y, psi, delta, vx, h):
    def deriv(state):
        xpl, _, _, psil = state
        beta = plant.beta(xpl)
        return (plant.f(xpl, delta, vx),
                vx * np.cos(psil + beta),
                vx * np.sin(psil + beta),
                plant.yaw_rate(xpl))

    s0 = (xp, x, y, psi)
    k1 = deriv(s0)
    k2 = deriv(_adv(s0, k1, h / 2))
    k3 = deriv(_adv(s0, k2, h / 2))
    k4 = deriv(_adv(s0, k3, h))
    xp = xp + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    x = x + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    y = y + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    psi = psi + h / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    return xp, x, y, psi


def _adv(s, k, h):
    return (s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2],
            s[3] + h * k[3])


# ---------------------------------------------------------------------------
# feasibility pretest and comparison

@dataclass(frozen=True)
class FeasibilityVerdict:
    stable: bool
    spectral_radius: float
    performance_ratio: float

    def to_json(self):
        return {"stable": self.stable,
                "spectral_radius": self.spectral_radius,
                "performance_ratio": self.performance_ratio}


def lift_slow_controller(pf: ParallelForm, N: int) -> LiftedQuadruple:
    """Lifted image of the slow single-rate controller: consumes the
    metaperiod-start sample, emits the same held output on all N rows."""
    sc = SlowController(pf, N)
    ss = sc.ss
    B = np.zeros((ss.n_states, N))
    B[:, 0] = ss.B[:, 0]
    C = np.tile(ss.C, (N, 1))
    D = np.zeros((N, N))
    D[:, 0] = ss.D[0, 0]
    return LiftedQuadruple(ss.A, B, C, D, N * pf.dt, N)


def feasibility_pretest(scenario: Scenario, pf: ParallelForm) -> FeasibilityVerdict:
    """Check the slow single-rate controller before interlacing: lifted
    closed-loop spectral radius plus a simulation ratio against the fast
    controller."""
    plant_d = scenario.plant.discrete(scenario.T)
    _, rho = lifted_closed_loop(lift_slow_controller(pf, scenario.N), plant_d)
    try:
        slow = simulate(scenario, pf, "single_rate_slow")
        blew_up = False
    except (NumericalBlowupError, PathLostError):
        slow = None
        blew_up = True
    fast = simulate(scenario, pf, "single_rate_fast")
    if blew_up:
        ratio = float("inf")
    else:
        denom = fast.rms_cross_track
        ratio = (slow.rms_cross_track / denom) if denom > 0 else 1.0
    return FeasibilityVerdict(stable=(rho < 1.0 and not blew_up),
                              spectral_radius=rho,
                              performance_ratio=ratio)


@dataclass(frozen=True)
class ComparisonReport:
    pairs: tuple   # ((variant_a, variant_b, rms_dev, max_dev), ...)
    metrics: dict  # variant -> metrics dict
    costs: dict    # variant -> cost json

    def to_json(self):
        return {"pairs": [{"a": a, "b": b, "rms_deviation": r,
                           "max_deviation": m} for a, b, r, m in self.pairs],
                "metrics": self.metrics, "costs": self.costs}

    def deviation(self, a, b):
        for va, vb, r, m in self.pairs:
            if {va, vb} == {a, b}:
                return r, m
        raise KeyError((a, b))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)


def compare(results) -> ComparisonReport:
    """Pairwise trajectory deviation between runs of the same scenario."""
    labels = {r.label for r in results}
    if len(labels) != 1:
        raise ValueError(f"results come from different scenarios: {labels}")
    lengths = {len(r.t) for r in results}
    if len(lengths) != 1:
        raise ValueError("results have different lengths")
    pairs = []
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            a, b = results[i], results[j]
            dev = np.hypot(a.x - b.x, a.y - b.y)
            pairs.append((a.variant, b.variant,
                          float(np.sqrt(np.mean(dev ** 2))),
                          float(np.max(dev))))
    metrics = {r.variant: r.metrics() for r in results}
    costs = {r.variant: r.cost.to_json() for r in results if r.cost}
    return ComparisonReport(tuple(pairs), metrics, costs)


# ---------------------------------------------------------------------------
# synthetic U-turn fixture

def build_uturn_path(straight=40.0, radius=8.0, spacing=1.0) -> Path:
    """Two parallel straights joined by a half circle, speeds ramped
    4 -> 6 -> 4 m/s.  Synthetic stand-in for a logged U-turn run."""
    pts, spd = [], []
    n1 = int(straight / spacing)
    for i in range(n1):
        x = i * spacing
        pts.append((x, 0.0))
        spd.append(4.0 + 2.0 * min(x / (straight / 2), 1.0))
    n2 = max(int(np.pi * radius / spacing), 8)
    for i in range(n2 + 1):
        a = -np.pi / 2 + np.pi * i / n2
        pts.append((straight + radius * np.cos(a),
                    radius + radius * np.sin(a)))
        spd.append(4.0)
    for i in range(1, n1 + 1):
        x = straight - i * spacing
        pts.append((x, 2 * radius))
        frac = min(i * spacing / (straight / 2), 1.0)
        spd.append(4.0 + 2.0 * frac if frac < 1 else
                   6.0 - 2.0 * (i * spacing - straight / 2) / (straight / 2))
    return Path(pts, spd)
