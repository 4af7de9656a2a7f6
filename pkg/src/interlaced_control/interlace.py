"""Slow/fast pole classification, slow-block resampling through the W
polynomial identity, interlacing schedules, and per-instant cost accounting.

An interlaced implementation updates each slow first-order block once per
metaperiod NT, round-robin over the N fast instants, so the per-instant
multiply/add load stays flat instead of spiking when all slow blocks fire
together.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .ltisys import (FirstOrderBlock, ParallelForm, SecondOrderBlock,
                     TransferFunction)


class UnsupportedBlockError(ValueError):
    """Second-order (complex-pair) blocks cannot be scheduled as slow."""


# ---------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class NyquistFraction:
    """Slow iff the block's equivalent continuous natural frequency is below
    (pi/T)/k."""
    k: float = 5.0


@dataclass(frozen=True)
class RelativeSeparation:
    """Slow iff the block frequency is below ``ratio`` times the fastest
    block frequency."""
    ratio: float


@dataclass(frozen=True)
class Explicit:
    slow_ids: frozenset

    def __init__(self, slow_ids):
        object.__setattr__(self, "slow_ids", frozenset(slow_ids))


@dataclass(frozen=True)
class PolePartition:
    slow: tuple
    fast: tuple
    rule_used: str


def block_frequency(pf: ParallelForm, block_id: str) -> float:
    """Equivalent continuous natural frequency |ln z|/T of a block's pole
    (one root of the pair for second-order blocks)."""
    b = pf.block(block_id)
    if isinstance(b, FirstOrderBlock):
        pole = complex(b.pole)
    else:
        pole = np.roots(b.den)[0]
    if pole == 0:
        return np.inf
    return abs(np.log(pole)) / pf.dt


def classify_poles(pf: ParallelForm, rule) -> PolePartition:
    if pf.dt is None:
        raise ValueError("classification requires a discrete parallel form")
    ids = pf.block_ids
    if isinstance(rule, Explicit):
        unknown = rule.slow_ids - set(ids)
        if unknown:
            raise KeyError(f"unknown block ids {sorted(unknown)}")
        slow = tuple(i for i in ids if i in rule.slow_ids)
        fast = tuple(i for i in ids if i not in rule.slow_ids)
        return PolePartition(slow, fast, "explicit")
    freqs = {i: block_frequency(pf, i) for i in ids}
    for i, f in freqs.items():
        if np.isinf(f):
            warnings.warn(f"block {i} has a pole at z=0; classified fast")
    if isinstance(rule, NyquistFraction):
        thresh = (np.pi / pf.dt) / rule.k
        label = f"nyquist_fraction(k={rule.k:g})"
    elif isinstance(rule, RelativeSeparation):
        finite = [f for f in freqs.values() if np.isfinite(f)]
        thresh = rule.ratio * max(finite)
        label = f"relative_separation(ratio={rule.ratio:g})"
    else:
        raise TypeError(f"unknown classification rule {rule!r}")
    slow = tuple(i for i in ids if freqs[i] < thresh)
    fast = tuple(i for i in ids if freqs[i] >= thresh)
    return PolePartition(slow, fast, label)


# ---------------------------------------------------------------------------
# resampling T -> NT

def w_polynomial(alpha: float, N: int) -> np.ndarray:
    """[1, alpha, alpha^2, ..., alpha^(N-1)]: the degree N-1 factor with
    (z - alpha) * W = z^N - alpha^N."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return np.array([alpha ** i for i in range(N)], dtype=float)


@dataclass(frozen=True)
class ResampledSlowBlock:
    source: FirstOrderBlock
    N: int
    tf_NT: TransferFunction
    w_poly: np.ndarray


def resample_slow_block(block: FirstOrderBlock, N: int,
                        T: float) -> ResampledSlowBlock:
    """Re-express r/(z - alpha) at period T as a pure slow block at NT:
    r * (1 + alpha + ... + alpha^(N-1)) / (z_N - alpha^N)."""
    w = w_polynomial(block.pole, N)
    gain = block.residue * float(np.sum(w))
    tf = TransferFunction([gain], [1.0, -block.pole ** N], N * T)
    return ResampledSlowBlock(block, N, tf, w)


# ---------------------------------------------------------------------------
# schedule

@dataclass(frozen=True)
class InterlacePlan:
    """Slot i (1-based) updates its slow block at fast index
    k = i - 1 + phase (mod N)."""

    N: int
    slots: tuple          # slot order: slots[0] fires first in the metaperiod
    input_strategy: str   # "I1" (current fast sample) or "I2" (metaperiod start)
    output_strategy: str  # "O1" (held per block) or "O2" (aggregate at start)
    phase: int = 0

    def __post_init__(self):
        if self.input_strategy not in ("I1", "I2"):
            raise ValueError("input strategy must be I1 or I2")
        if self.output_strategy not in ("O1", "O2"):
            raise ValueError("output strategy must be O1 or O2")
        if len(self.slots) != self.N:
            raise ValueError("slot count must equal N")

    def to_json(self) -> dict:
        return {"N": self.N, "slots": list(self.slots),
                "input": self.input_strategy, "output": self.output_strategy,
                "phase": self.phase}

    @staticmethod
    def from_json(d: dict) -> "InterlacePlan":
        return InterlacePlan(d["N"], tuple(d["slots"]), d["input"],
                             d["output"], d.get("phase", 0))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)


def make_plan(pf: ParallelForm, partition: PolePartition, order=None,
              input_strategy="I1", output_strategy="O1",
              phase=0) -> InterlacePlan:
    """Build an interlacing schedule: one slot per slow block, N = |slow|."""
    if not partition.slow:
        raise ValueError("no slow blocks; interlacing is meaningless")
    for bid in partition.slow:
        if isinstance(pf.block(bid), SecondOrderBlock):
            raise UnsupportedBlockError(
                f"block {bid} is second-order; only first-order blocks can be "
                "scheduled as slow")
    order = tuple(order) if order is not None else tuple(partition.slow)
    if sorted(order) != sorted(partition.slow):
        raise ValueError("order must be a permutation of the slow blocks")
    if len(order) == 1:
        warnings.warn("single slow block: N=1 degenerates to single-rate")
    return InterlacePlan(len(order), order, input_strategy, output_strategy,
                         phase)


# ---------------------------------------------------------------------------
# cost accounting

COST_CONVENTION = ("direct-form-II-transposed: order-n block costs 2n+1 "
                   "multiplies and 2n adds per update; summing m contributions "
                   "costs m-1 adds")


def _block_cost(order: int):
    return 2 * order + 1, 2 * order


@dataclass(frozen=True)
class CostReport:
    variant: str
    per_instant: tuple      # (multiplies, adds) for each fast index in a metaperiod
    convention: str = COST_CONVENTION

    @property
    def worst(self):
        return max(self.per_instant)

    @property
    def mean(self):
        m = np.mean([c[0] for c in self.per_instant])
        a = np.mean([c[1] for c in self.per_instant])
        return float(m), float(a)

    def to_json(self) -> dict:
        return {"variant": self.variant,
                "per_instant": [list(c) for c in self.per_instant],
                "worst": list(self.worst), "mean": list(self.mean),
                "convention": self.convention}


def cost_single_rate_fast(pf: ParallelForm) -> CostReport:
    """The whole controller as one monolithic block, updated every instant."""
    return CostReport("single_rate_fast", (_block_cost(pf.total_order),))


def cost_single_rate_slow(pf: ParallelForm, N: int) -> CostReport:
    """Monolithic controller updated at metaperiod starts only; output held
    in between."""
    full = _block_cost(pf.total_order)
    return CostReport("single_rate_slow", (full,) + ((0, 0),) * (N - 1))


def cost_interlaced(pf: ParallelForm, plan: InterlacePlan) -> CostReport:
    """Per-instant cost over one metaperiod: direct gain + every fast block +
    the single slow block firing at that instant, plus the output summation."""
    slow = set(plan.slots)
    fast_ids = [i for i in pf.block_ids if i not in slow]
    per = []
    for p in range(plan.N):
        mul, add = _block_cost(0)  # direct gain
        for i in fast_ids:
            m, a = _block_cost(pf.block_order(i))
            mul += m
            add += a
        m, a = _block_cost(pf.block_order(plan.slots[p]))
        mul += m
        add += a
        contributions = 1 + len(fast_ids) + len(plan.slots)  # held slow outputs still summed
        add += contributions - 1
        per.append((mul, add))
    return CostReport("interlaced", tuple(per))


def cost_model(pf: ParallelForm, variant: str, plan: InterlacePlan = None,
               N: int = None) -> CostReport:
    if variant == "single_rate_fast":
        return cost_single_rate_fast(pf)
    if variant == "single_rate_slow":
        return cost_single_rate_slow(pf, N if N is not None else plan.N)
    if variant == "interlaced":
        return cost_interlaced(pf, plan)
    raise ValueError(f"unknown variant {variant!r}")


def savings_ratio(single_rate: CostReport, interlaced: CostReport) -> float:
    """1 - worst interlaced multiplies / worst single-rate multiplies."""
    return 1.0 - interlaced.worst[0] / single_rate.worst[0]
