"""Discrete lifting of the interlaced (N-periodic) controller.

The switched executor below is the normative semantics; every lifted
construction is required to reproduce it sample for sample.  Each slow block
carries one dummy state holding the output computed at its previous firing,
so the held-output behaviour is expressible in an LTI quadruple at period NT
with N stacked inputs and outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .interlace import InterlacePlan, resample_slow_block
from .ltisys import (FirstOrderBlock, ParallelForm, StateSpace, tf_to_ss)


@dataclass(frozen=True)
class LiftedQuadruple:
    """LTI map at period N*T from N stacked fast inputs to N stacked fast
    outputs per metaperiod."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    period: float
    N: int

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        if A.size == 0:
            A = np.zeros((0, 0))
        n = A.shape[0]
        B = np.asarray(self.B, float).reshape(n, self.N)
        C = np.asarray(self.C, float).reshape(self.N, n)
        D = np.asarray(self.D, float).reshape(self.N, self.N)
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, M)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def simulate(self, u_fast, x0=None):
        """Run on a fast-rate input sequence (length a multiple of N) and
        return the fast-rate output sequence."""
        u = np.asarray(u_fast, float)
        if len(u) % self.N:
            raise ValueError("input length must be a multiple of N")
        x = np.zeros(self.n_states) if x0 is None else np.asarray(x0, float)
        y = np.empty(len(u))
        for m in range(len(u) // self.N):
            ub = u[m * self.N:(m + 1) * self.N]
            y[m * self.N:(m + 1) * self.N] = self.C @ x + self.D @ ub
            x = self.A @ x + self.B @ ub
        return y

    def spectral_radius(self) -> float:
        if self.n_states == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def to_json(self) -> dict:
        return {"N": self.N, "period": self.period,
                "A": self.A.tolist(), "B": self.B.tolist(),
                "C": self.C.tolist(), "D": self.D.tolist()}

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)


def _blockdiag(*mats):
    mats = [np.atleast_2d(m) for m in mats]
    n = sum(m.shape[0] for m in mats)
    p = sum(m.shape[1] for m in mats)
    out = np.zeros((n, p))
    i = j = 0
    for m in mats:
        out[i:i + m.shape[0], j:j + m.shape[1]] = m
        i += m.shape[0]
        j += m.shape[1]
    return out


# ---------------------------------------------------------------------------
# fast part: classical N-step lifting

def lift_fast_part(ss: StateSpace, N: int) -> LiftedQuadruple:
    """Standard lifting of a fast single-rate SISO system: A^N state map,
    stacked input/output maps, lower-triangular Toeplitz of Markov
    parameters."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if not ss.is_discrete:
        raise ValueError("lifting requires a discrete system")
    n = ss.n_states
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(A @ powers[-1])
    A_L = powers[N]
    B_L = np.hstack([powers[N - 1 - j] @ B for j in range(N)]) if n else np.zeros((0, N))
    C_L = np.vstack([C @ powers[j] for j in range(N)]) if n else np.zeros((N, 0))
    D_L = np.zeros((N, N))
    for i in range(N):
        D_L[i, i] = D[0, 0]
        for j in range(i):
            D_L[i, j] = (C @ powers[i - 1 - j] @ B).item()
    return LiftedQuadruple(A_L, B_L, C_L, D_L, N * ss.dt, N)


# ---------------------------------------------------------------------------
# slow blocks: dummy-state lifting

def lift_slow_block(block_ss: StateSpace, slot: int, input_strategy: str,
                    output_strategy: str, N: int) -> LiftedQuadruple:
    """Lift one slow block given as a SISO state space at period NT.

    The augmented state is (x, chi) where chi holds the output computed at the
    block's previous firing.  The input column selects the fast sample the
    block consumes (its own slot under I1, the metaperiod start under I2);
    the output rows realize the held-output semantics of the executor."""
    if not 1 <= slot <= N:
        raise ValueError("slot out of range")
    nb = block_ss.n_states
    A, B, C, D = block_ss.A, block_ss.B, block_ss.C, block_ss.D
    d = float(D[0, 0])
    e_col = slot - 1 if input_strategy == "I1" else 0
    A_L = np.zeros((nb + 1, nb + 1))
    A_L[:nb, :nb] = A
    A_L[nb, :nb] = C[0]
    B_L = np.zeros((nb + 1, N))
    B_L[:nb, e_col] = B[:, 0]
    B_L[nb, e_col] = d
    C_L = np.zeros((N, nb + 1))
    D_L = np.zeros((N, N))
    row_new = np.concatenate([C[0], [0.0]])
    row_held = np.zeros(nb + 1)
    row_held[nb] = 1.0
    if output_strategy == "O1":
        for j in range(N):
            if j >= slot - 1:
                C_L[j] = row_new
                D_L[j, e_col] = d
            else:
                C_L[j] = row_held
    else:  # O2: aggregate refreshed at the metaperiod start only
        if slot == 1:
            C_L[:] = row_new
            D_L[:, e_col] = d
        else:
            C_L[:] = row_held
    return LiftedQuadruple(A_L, B_L, C_L, D_L, block_ss.dt, N)


def lift_interlaced_controller(pf: ParallelForm, plan: InterlacePlan,
                               ) -> LiftedQuadruple:
    """Assemble the full lifted controller: classical lifting of the fast
    part, dummy-state lifting of every slow block, direct gain on the
    diagonal."""
    T = pf.dt
    N = plan.N
    if plan.phase % N:
        raise ValueError("lifting assumes phase 0 (metaperiod-aligned "
                         "firing); shift the input sequence instead")
    slow = set(plan.slots)
    unknown = slow - set(pf.block_ids)
    if unknown:
        raise ValueError(f"plan references unknown blocks {sorted(unknown)}")
    fast_ids = [i for i in pf.block_ids if i not in slow]
    parts = []
    if fast_ids:
        sss = [tf_to_ss(pf.block(i).tf(T)) for i in fast_ids]
        A = _blockdiag(*[s.A for s in sss])
        B = np.vstack([s.B for s in sss])
        C = np.hstack([s.C for s in sss])
        D = sum(float(s.D[0, 0]) for s in sss)
        parts.append(lift_fast_part(StateSpace(A, B, C, [[D]], T), N))
    for slot_idx, bid in enumerate(plan.slots, start=1):
        blk = pf.block(bid)
        rs = resample_slow_block(blk, N, T)
        parts.append(lift_slow_block(tf_to_ss(rs.tf_NT), slot_idx,
                                     plan.input_strategy,
                                     plan.output_strategy, N))
    A = _blockdiag(*[p.A for p in parts]) if parts else np.zeros((0, 0))
    B = np.vstack([p.B for p in parts]) if parts else np.zeros((0, N))
    C = np.hstack([p.C for p in parts]) if parts else np.zeros((N, 0))
    D = sum(p.D for p in parts) + pf.direct * np.eye(N)
    return LiftedQuadruple(A, B, C, D, N * T, N)


# ---------------------------------------------------------------------------
# switched (reference) execution

class SwitchedExecutor:
    """Step-by-step reference implementation of the interlaced controller.

    Fast blocks and the direct gain update every instant; the slow block
    whose slot fires updates once per metaperiod.  O1 sums each slow block's
    held output every instant; O2 refreshes the slow aggregate only at
    metaperiod starts (the slot-1 firing, processed first, is included)."""

    def __init__(self, pf: ParallelForm, plan: InterlacePlan):
        self.pf = pf
        self.plan = plan
        T = pf.dt
        slow = set(plan.slots)
        self.fast = [tf_to_ss(pf.block(i).tf(T))
                     for i in pf.block_ids if i not in slow]
        self.fast_states = [np.zeros(s.n_states) for s in self.fast]
        self.slow = [tf_to_ss(resample_slow_block(pf.block(i), plan.N, T).tf_NT)
                     for i in plan.slots]
        self.slow_states = [np.zeros(s.n_states) for s in self.slow]
        self.held = np.zeros(plan.N)
        self.aggregate = 0.0
        self.e_start = 0.0
        self.k = 0

    def step(self, e: float) -> float:
        N = self.plan.N
        p = (self.k - self.plan.phase) % N
        if p == 0:
            self.e_start = e
        u = self.pf.direct * e
        for i, s in enumerate(self.fast):
            self.fast_states[i], y = s.step(self.fast_states[i], e)
            u += y[0]
        # slow firing for this offset
        s = self.slow[p]
        e_used = e if self.plan.input_strategy == "I1" else self.e_start
        self.slow_states[p], y = s.step(self.slow_states[p], e_used)
        self.held[p] = y[0]
        if self.plan.output_strategy == "O1":
            u += float(np.sum(self.held))
        else:
            if p == 0:
                self.aggregate = float(np.sum(self.held))
            u += self.aggregate
        self.k += 1
        return float(u)

    def run(self, e_seq) -> np.ndarray:
        return np.array([self.step(e) for e in np.asarray(e_seq, float)])


def switched_execute(pf: ParallelForm, plan: InterlacePlan,
                     e_seq) -> np.ndarray:
    """Reference execution from zero initial state; input is padded with
    zeros to a whole number of metaperiods."""
    e = np.asarray(e_seq, float)
    pad = (-len(e)) % plan.N
    if pad:
        e = np.concatenate([e, np.zeros(pad)])
    return SwitchedExecutor(pf, plan).run(e)[:len(e_seq)]


# ---------------------------------------------------------------------------
# closed loop

class AlgebraicLoopError(ValueError):
    pass


def lifted_closed_loop(controller_L: LiftedQuadruple, plant: StateSpace,
                       N: int = None):
    """Close the negative-unity-feedback loop: stacked reference in, stacked
    plant output out.  The plant (discrete, at the fast period) is lifted
    with the classical method.  Returns (closed-loop quadruple, spectral
    radius)."""
    N = controller_L.N if N is None else N
    plant_L = lift_fast_part(plant, N)
    Ac, Bc, Cc, Dc = (controller_L.A, controller_L.B, controller_L.C,
                      controller_L.D)
    Ap, Bp, Cp, Dp = plant_L.A, plant_L.B, plant_L.C, plant_L.D
    nc, np_ = Ac.shape[0], Ap.shape[0]
    M = np.eye(N) + Dp @ Dc
    if abs(np.linalg.det(M)) < 1e-12:
        raise AlgebraicLoopError("I + Dp*Dc is singular")
    Mi = np.linalg.inv(M)
    # y = Mi (Cp xp + Dp Cc xc + Dp Dc r); e = r - y; u = Cc xc + Dc e
    Cy = np.hstack([Mi @ Dp @ Cc, Mi @ Cp])
    Dy = Mi @ Dp @ Dc
    Ce = -Cy
    De = np.eye(N) - Dy
    Cu = np.hstack([Cc, np.zeros((N, np_))]) + Dc @ Ce
    Du = Dc @ De
    A_cl = _blockdiag(Ac, Ap) + np.vstack([Bc @ Ce, Bp @ Cu])
    B_cl = np.vstack([Bc @ De, Bp @ Du])
    cl = LiftedQuadruple(A_cl, B_cl, Cy, Dy, controller_L.period, N)
    return cl, cl.spectral_radius()


def equivalence_report(lifted: LiftedQuadruple, pf: ParallelForm,
                       plan: InterlacePlan, e_seq) -> dict:
    """Max-abs error and first divergence index between the lifted model and
    the switched execution on the same input."""
    y_sw = switched_execute(pf, plan, e_seq)
    e = np.asarray(e_seq, float)
    pad = (-len(e)) % plan.N
    if pad:
        e = np.concatenate([e, np.zeros(pad)])
    y_lift = lifted.simulate(e)[:len(e_seq)]
    err = np.abs(y_lift - y_sw)
    bad = np.nonzero(err > 1e-9)[0]
    return {"max_abs_error": float(np.max(err)) if len(err) else 0.0,
            "first_divergence_index": int(bad[0]) if len(bad) else None,
            "samples": len(e_seq)}
