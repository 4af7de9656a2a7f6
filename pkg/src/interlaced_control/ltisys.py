"""Rational transfer functions, state-space realizations and the polynomial
machinery the rest of the toolkit is built on.

Coefficient vectors are dense, real, highest degree first.  Complex
arithmetic is only used internally (roots, residues); every public result is
realified by conjugate pairing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.signal


class RepeatedPoleError(ValueError):
    """Partial fractions are restricted to simple poles."""


class ImproperError(ValueError):
    """Raised when a realization of an improper transfer function is requested."""


# ---------------------------------------------------------------------------
# polynomial helpers (highest-first coefficient arrays)

def poly_trim(c) -> np.ndarray:
    """Drop leading (near-machine-zero) coefficients; the zero polynomial is [0]."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    nz = np.nonzero(np.abs(c) > 1e-14 * scale)[0]
    if nz.size == 0:
        return np.zeros(1)
    return c[nz[0]:].copy()


def poly_degree(c) -> int:
    return len(poly_trim(c)) - 1


def poly_roots(c) -> np.ndarray:
    """Roots via the companion-matrix eigenvalue method (np.roots)."""
    c = poly_trim(c)
    if len(c) == 1:
        return np.array([], dtype=complex)
    return np.roots(c)


def poly_from_roots(roots, leading: float = 1.0) -> np.ndarray:
    p = np.atleast_1d(np.poly(np.asarray(roots, dtype=complex)))
    if np.max(np.abs(p.imag)) > 1e-9 * max(1.0, np.max(np.abs(p.real))):
        raise ValueError("root set is not closed under conjugation")
    return leading * p.real


# ---------------------------------------------------------------------------
# transfer functions

@dataclass(frozen=True)
class TransferFunction:
    """Real-coefficient rational function, continuous (``dt is None``) or
    discrete with sampling period ``dt`` seconds."""

    num: np.ndarray
    den: np.ndarray
    dt: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "num", poly_trim(self.num))
        object.__setattr__(self, "den", poly_trim(self.den))
        if np.all(self.den == 0):
            raise ValueError("zero denominator")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("discrete period must be positive")

    @property
    def is_discrete(self) -> bool:
        return self.dt is not None

    @property
    def is_proper(self) -> bool:
        return poly_degree(self.num) <= poly_degree(self.den)

    def poles(self) -> np.ndarray:
        return poly_roots(self.den)

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num)

    def normalized(self) -> "TransferFunction":
        """Equivalent transfer function with a monic denominator."""
        lead = self.den[0]
        return TransferFunction(self.num / lead, self.den / lead, self.dt)

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        return np.polyval(self.num, x) / np.polyval(self.den, x)

    def dc_gain(self) -> float:
        x = 1.0 if self.is_discrete else 0.0
        return float(np.real(self(x)))

    def to_json(self) -> dict:
        d = {"domain": "discrete" if self.is_discrete else "continuous",
             "num": list(map(float, self.num)),
             "den": list(map(float, self.den))}
        if self.is_discrete:
            d["period"] = self.dt
        return d

    @staticmethod
    def from_json(d: dict) -> "TransferFunction":
        dt = d.get("period") if d["domain"] == "discrete" else None
        if d["domain"] == "discrete" and dt is None:
            raise ValueError("discrete transfer function requires a period")
        return TransferFunction(np.asarray(d["num"], float),
                                np.asarray(d["den"], float), dt)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)

    @staticmethod
    def load(path) -> "TransferFunction":
        with open(path) as f:
            return TransferFunction.from_json(json.load(f))


@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    dt: float | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        if A.size == 0:
            A = np.zeros((0, 0))
        n = A.shape[0]
        B = np.asarray(self.B, float)
        B = B.reshape(n, -1) if B.size else B.reshape(n, B.shape[-1] if B.ndim > 1 else 1)
        C = np.asarray(self.C, float)
        C = C.reshape(-1, n) if C.size else C.reshape(C.shape[0] if C.ndim > 1 else 1, n)
        D = np.atleast_2d(np.asarray(self.D, float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if B.shape[0] != A.shape[0] or C.shape[1] != A.shape[0]:
            raise ValueError("inconsistent state dimensions")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ValueError("inconsistent D shape")
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, M)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.dt is not None

    def eigenvalues(self) -> np.ndarray:
        if self.n_states == 0:
            return np.array([], dtype=complex)
        return np.linalg.eigvals(self.A)

    def step(self, x, u):
        """One discrete-time update: returns (x_next, y)."""
        u = np.atleast_1d(u)
        y = self.C @ x + self.D @ u
        return self.A @ x + self.B @ u, y

    def simulate(self, u, x0=None):
        """Discrete simulation over an input sequence (SISO: 1-D in, 1-D out)."""
        u = np.asarray(u, float)
        x = np.zeros(self.n_states) if x0 is None else np.asarray(x0, float)
        y = np.empty(len(u))
        for k, uk in enumerate(u):
            x, yk = self.step(x, uk)
            y[k] = yk[0]
        return y


def tf_to_ss(tf: TransferFunction) -> StateSpace:
    """Controllable canonical realization of a proper SISO transfer function."""
    if not tf.is_proper:
        raise ImproperError("transfer function is improper")
    tf = tf.normalized()
    den = tf.den
    n = len(den) - 1
    num = np.concatenate([np.zeros(n + 1 - len(tf.num)), tf.num])
    d = num[0]
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)),
                          np.zeros((1, 0)), [[d]], tf.dt)
    A = np.zeros((n, n))
    A[0, :] = -den[1:]
    A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    C = (num[1:] - d * den[1:]).reshape(1, n)
    return StateSpace(A, B, C, [[d]], tf.dt)


def ss_to_tf(ss: StateSpace) -> TransferFunction:
    """SISO transfer function C (zI - A)^-1 B + D via the Leverrier-Faddeev
    recursion (exact polynomial arithmetic up to roundoff)."""
    if ss.B.shape[1] != 1 or ss.C.shape[0] != 1:
        raise ValueError("ss_to_tf requires a SISO system")
    n = ss.n_states
    d = float(ss.D[0, 0])
    if n == 0:
        return TransferFunction([d], [1.0], ss.dt)
    A, B, C = ss.A, ss.B, ss.C
    den = np.empty(n + 1)
    den[0] = 1.0
    M = np.eye(n)
    markov = np.empty(n)
    for k in range(1, n + 1):
        markov[k - 1] = (C @ M @ B).item()
        AM = A @ M
        den[k] = -np.trace(AM) / k
        M = AM + den[k] * np.eye(n)
    num = markov + d * den[1:]
    num = np.concatenate([[d], num])
    return TransferFunction(num, den, ss.dt)


# ---------------------------------------------------------------------------
# discretization

def _mpz_gain(tf_c, num_d, den_d, T, has_integrator):
    if not has_integrator:
        return tf_c.dc_gain() * np.polyval(den_d, 1.0) / np.polyval(num_d, 1.0)
    # integrator present: DC gain is unbounded, match the magnitude at the
    # Nyquist frequency instead (z = -1  <->  s = j*pi/T)
    target = abs(tf_c(1j * np.pi / T))
    got = np.polyval(num_d, -1.0) / np.polyval(den_d, -1.0)
    return float(np.sign(got) * target / abs(got)) if got != 0 else target


def mpz_mapped_roots(tf_c: TransferFunction, T: float,
                     snap_tol: float = 1e-3):
    """(zeros, poles) of the matched pole-zero image: the exact exponential
    map z = exp(sT), with roots within ``snap_tol`` of z = 1 snapped to 1."""
    if tf_c.is_discrete:
        raise ValueError("input must be continuous")
    if T <= 0:
        raise ValueError("period must be positive")
    zd = np.exp(tf_c.zeros() * T)
    pd = np.exp(tf_c.poles() * T)
    zd = np.where(np.abs(zd - 1.0) < snap_tol, 1.0, zd)
    pd = np.where(np.abs(pd - 1.0) < snap_tol, 1.0, pd)
    return zd, pd


def discretize_mpz(tf_c: TransferFunction, T: float,
                   snap_tol: float = 1e-3) -> TransferFunction:
    """Matched pole-zero discretization: every pole and finite zero maps
    through z = exp(sT); mapped roots within ``snap_tol`` of z = 1 are snapped
    exactly to 1.  Gain is matched at DC, or at the Nyquist point when the
    result contains an integrator."""
    zd, pd = mpz_mapped_roots(tf_c, T, snap_tol)
    num_d = poly_from_roots(zd)
    den_d = poly_from_roots(pd)
    has_integrator = bool(np.any(pd == 1.0))
    K = _mpz_gain(tf_c, num_d, den_d, T, has_integrator)
    return TransferFunction(K * num_d, den_d, T)


def discretize_zoh(tf_c: TransferFunction, T: float) -> TransferFunction:
    """Zero-order-hold (step invariant) discretization."""
    if tf_c.is_discrete:
        raise ValueError("input must be continuous")
    num, den, _ = scipy.signal.cont2discrete((tf_c.num, tf_c.den), T,
                                             method="zoh")
    return TransferFunction(np.atleast_2d(num)[0], np.atleast_1d(den), T)


def discretize(tf_c, T, method="mpz", snap_tol=1e-3):
    if method == "mpz":
        return discretize_mpz(tf_c, T, snap_tol)
    if method == "zoh":
        return discretize_zoh(tf_c, T)
    raise ValueError(f"unknown discretization method {method!r}")


# ---------------------------------------------------------------------------
# parallel (partial fraction) form

@dataclass(frozen=True)
class FirstOrderBlock:
    residue: float
    pole: float

    def tf(self, dt) -> TransferFunction:
        return TransferFunction([self.residue], [1.0, -self.pole], dt)


@dataclass(frozen=True)
class SecondOrderBlock:
    num: np.ndarray   # degree <= 1, highest first
    den: np.ndarray   # monic degree 2

    def __post_init__(self):
        object.__setattr__(self, "num", np.atleast_1d(np.asarray(self.num, float)))
        object.__setattr__(self, "den", np.asarray(self.den, float))

    def tf(self, dt) -> TransferFunction:
        return TransferFunction(self.num, self.den, dt)


@dataclass(frozen=True)
class ParallelForm:
    """Direct gain plus first- and second-order additive blocks.

    Block ids continue the b1, b2, ... numbering across the first-order list;
    each second-order block gets a fused two-index id (b45 style)."""

    direct: float
    first_order: tuple
    second_order: tuple
    dt: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "first_order", tuple(self.first_order))
        object.__setattr__(self, "second_order", tuple(self.second_order))

    @property
    def block_ids(self) -> tuple:
        k = len(self.first_order)
        ids = [f"b{i + 1}" for i in range(k)]
        for j in range(len(self.second_order)):
            a = k + 2 * j + 1
            ids.append(f"b{a}{a + 1}")
        return tuple(ids)

    def block(self, block_id: str):
        ids = self.block_ids
        if block_id not in ids:
            raise KeyError(f"unknown block id {block_id!r}")
        i = ids.index(block_id)
        if i < len(self.first_order):
            return self.first_order[i]
        return self.second_order[i - len(self.first_order)]

    def block_order(self, block_id: str) -> int:
        return 1 if isinstance(self.block(block_id), FirstOrderBlock) else 2

    @property
    def total_order(self) -> int:
        return len(self.first_order) + 2 * len(self.second_order)

    def recombine(self) -> TransferFunction:
        """Common-denominator sum of all blocks plus the direct term."""
        den = np.array([1.0])
        for b in self.first_order:
            den = np.polymul(den, [1.0, -b.pole])
        for b in self.second_order:
            den = np.polymul(den, b.den)
        num = self.direct * den
        for b in self.first_order:
            other = np.array([1.0])
            for o in self.first_order:
                if o is not b:
                    other = np.polymul(other, [1.0, -o.pole])
            for o in self.second_order:
                other = np.polymul(other, o.den)
            num = np.polyadd(num, b.residue * other)
        for b in self.second_order:
            other = np.array([1.0])
            for o in self.first_order:
                other = np.polymul(other, [1.0, -o.pole])
            for o in self.second_order:
                if o is not b:
                    other = np.polymul(other, o.den)
            num = np.polyadd(num, np.polymul(b.num, other))
        return TransferFunction(num, den, self.dt)

    def to_json(self) -> dict:
        return {
            "direct": self.direct,
            "period": self.dt,
            "first_order": [{"residue": b.residue, "pole": b.pole}
                            for b in self.first_order],
            "second_order": [{"num": list(map(float, b.num)),
                              "den": list(map(float, b.den))}
                             for b in self.second_order],
        }

    @staticmethod
    def from_json(d: dict) -> "ParallelForm":
        return ParallelForm(
            d["direct"],
            [FirstOrderBlock(b["residue"], b["pole"]) for b in d["first_order"]],
            [SecondOrderBlock(np.asarray(b["num"]), np.asarray(b["den"]))
             for b in d["second_order"]],
            d.get("period"),
        )


def partial_fraction(tf: TransferFunction, pole_tol: float = 1e-7,
                     check_tol: float = 1e-8) -> ParallelForm:
    """Decompose a proper simple-pole transfer function into a direct gain plus
    first-order real-pole blocks and realified second-order blocks for
    complex-conjugate pairs.

    Blocks are ordered by decreasing pole magnitude.  The recombined form is
    checked against the source coefficients."""
    if not tf.is_proper:
        raise ImproperError("partial fractions require a proper tf")
    tf = tf.normalized()
    poles = tf.poles()
    for i in range(len(poles)):
        for j in range(i + 1, len(poles)):
            if abs(poles[i] - poles[j]) < pole_tol:
                raise RepeatedPoleError(
                    f"repeated pole near {poles[i]:.6g} (tol {pole_tol:g})")
    direct = tf.num[0] / tf.den[0] if poly_degree(tf.num) == poly_degree(tf.den) else 0.0
    dden = np.polyder(tf.den)
    residues = np.polyval(tf.num, poles) / np.polyval(dden, poles)
    first, second = [], []
    used = np.zeros(len(poles), dtype=bool)
    for i, p in enumerate(poles):
        if used[i]:
            continue
        if abs(p.imag) <= 1e-9 * max(1.0, abs(p)):
            r = residues[i]
            if abs(r.imag) > 1e-9 * max(1.0, abs(r)):
                raise ValueError("real pole with non-real residue")
            first.append(FirstOrderBlock(float(r.real), float(p.real)))
            used[i] = True
        else:
            j = int(np.argmin(np.abs(poles - np.conj(p)) + used * 1e30))
            used[i] = used[j] = True
            r = residues[i] if p.imag > 0 else residues[j]
            p = p if p.imag > 0 else poles[j]
            # r/(z-p) + conj pair  ->  real quadratic block
            num2 = np.array([2 * r.real, -2 * (r * np.conj(p)).real])
            den2 = np.array([1.0, -2 * p.real, abs(p) ** 2])
            second.append(SecondOrderBlock(num2, den2))
    first.sort(key=lambda b: -abs(b.pole))
    second.sort(key=lambda b: -np.sqrt(abs(b.den[2])))
    pf = ParallelForm(float(direct), first, second, tf.dt)
    back = pf.recombine().normalized()
    n1 = np.concatenate([np.zeros(len(tf.den) - len(tf.num)), tf.num])
    n2 = np.concatenate([np.zeros(len(back.den) - len(back.num)), back.num])
    scale = max(np.max(np.abs(n1)), 1e-30)
    if len(n1) != len(n2) or np.max(np.abs(n1 - n2)) > check_tol * scale:
        raise ValueError("partial fraction recombination check failed")
    return pf


# ---------------------------------------------------------------------------
# model reduction

def _gramian_factor(W):
    # Cholesky factor with a symmetric-eigendecomposition fallback for
    # numerically semi-definite Gramians
    W = (W + W.T) / 2
    try:
        return np.linalg.cholesky(W)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(W)
        w = np.clip(w, 0.0, None)
        return V * np.sqrt(w)


def balanced_truncate(ss: StateSpace, target_order: int):
    """Balanced truncation of a stable system.

    Returns ``(reduced StateSpace, hankel singular values)``.  The reduction
    keeps the ``target_order`` largest Hankel directions of the balanced
    realization; D is unchanged."""
    n = ss.n_states
    if target_order > n:
        raise ValueError("target order exceeds the current order")
    eig = ss.eigenvalues()
    if ss.is_discrete:
        if np.any(np.abs(eig) >= 1.0):
            raise ValueError("balanced truncation requires a stable system")
        Wc = sla.solve_discrete_lyapunov(ss.A, ss.B @ ss.B.T)
        Wo = sla.solve_discrete_lyapunov(ss.A.T, ss.C.T @ ss.C)
    else:
        if np.any(eig.real >= 0.0):
            raise ValueError("balanced truncation requires a stable system")
        Wc = sla.solve_lyapunov(ss.A, -ss.B @ ss.B.T)
        Wo = sla.solve_lyapunov(ss.A.T, -ss.C.T @ ss.C)
    Lc = _gramian_factor(Wc)
    Lo = _gramian_factor(Wo)
    U, hsv, Vt = np.linalg.svd(Lo.T @ Lc)
    s_inv_sqrt = 1.0 / np.sqrt(hsv)
    T = Lc @ Vt.T * s_inv_sqrt
    Ti = (s_inv_sqrt[:, None] * U.T) @ Lo.T
    k = target_order
    Ar = (Ti @ ss.A @ T)[:k, :k]
    Br = (Ti @ ss.B)[:k, :]
    Cr = (ss.C @ T)[:, :k]
    return StateSpace(Ar, Br, Cr, ss.D, ss.dt), hsv


def extract_pole(tf: TransferFunction, pole: float, find_tol: float = 1e-6):
    """Additively split a simple real pole off: returns
    ``(residue_term, remainder)`` with ``tf = residue_term + remainder``."""
    poles = tf.poles()
    i = int(np.argmin(np.abs(poles - pole)))
    if abs(poles[i] - pole) > find_tol * max(1.0, abs(pole)):
        raise ValueError(f"no pole within tolerance of {pole:g}")
    p = float(poles[i].real)
    tf = tf.normalized()
    r = float(np.real(np.polyval(tf.num, p) / np.polyval(np.polyder(tf.den), p)))
    den_wo = poly_from_roots(np.delete(poles, i))
    num_rem = np.polysub(
        np.concatenate([np.zeros(len(tf.den) - len(tf.num)), tf.num]),
        r * np.concatenate([np.zeros(len(tf.den) - len(den_wo)), den_wo]))
    q, _ = np.polydiv(num_rem, np.array([1.0, -p]))
    term = TransferFunction([r], [1.0, -p], tf.dt)
    return term, TransferFunction(q, den_wo, tf.dt)


def remove_fast_pole(tf: TransferFunction, pole: float,
                     find_tol: float = 1e-6) -> TransferFunction:
    """Delete a real denominator factor and rescale so the DC gain is
    preserved exactly."""
    poles = tf.poles()
    i = int(np.argmin(np.abs(poles - pole)))
    if abs(poles[i] - pole) > find_tol * max(1.0, abs(pole)):
        raise ValueError(f"no pole within tolerance of {pole:g}")
    p = float(poles[i].real)
    if p == 0.0:
        raise ValueError("cannot gain-adjust removal of a pole at the origin")
    tf = tf.normalized()
    den_new = poly_from_roots(np.delete(poles, i))
    # den_new(x0)/den(x0) = 1/(x0 - p); preserve the gain at x0 (DC)
    return TransferFunction(tf.num / (-p), den_new, tf.dt)


def reduce_controller(tf_c: TransferFunction, order_after_truncation: int,
                      drop_fastest: bool = True, split_ratio: float = 0.01):
    """Order-reduction chain for a stable-plus-near-integrator controller.

    A pole at least ``1/split_ratio`` times slower than every other pole is
    additively split off first (Gramians of the remainder stay well
    conditioned), the remainder is balance-truncated, the slow term is
    re-attached, and optionally the fastest remaining pole is removed with DC
    gain adjustment.  Returns (reduced tf, hankel singular values)."""
    poles = tf_c.poles()
    if np.any(poles.real >= 0):
        raise ValueError("reduction requires a stable controller")
    mags = np.abs(poles)
    i_slow = int(np.argmin(mags))
    rest = np.delete(mags, i_slow)
    term = None
    work = tf_c
    if rest.size and mags[i_slow] < split_ratio * np.min(rest):
        term, work = extract_pole(tf_c, float(poles[i_slow].real))
    target = order_after_truncation - (1 if term is not None else 0)
    reduced_ss, hsv = balanced_truncate(tf_to_ss(work), target)
    red = ss_to_tf(reduced_ss)
    if term is not None:
        num = np.polyadd(np.polymul(red.num, term.den),
                         np.polymul(term.num, red.den))
        red = TransferFunction(num, np.polymul(red.den, term.den), tf_c.dt)
    if drop_fastest:
        p = red.poles()
        fastest = float(np.real(p[np.argmax(np.abs(p))]))
        if abs(p[np.argmax(np.abs(p))].imag) > 1e-9 * abs(fastest):
            raise ValueError("fastest pole is complex; cannot drop it alone")
        red = remove_fast_pole(red, fastest)
    return red, hsv


# ---------------------------------------------------------------------------
# analysis

def freq_response(tf: TransferFunction, w) -> np.ndarray:
    """Evaluate at s = jw (continuous) or z = exp(jwT) (discrete)."""
    w = np.asarray(w, float)
    if tf.is_discrete:
        return tf(np.exp(1j * w * tf.dt))
    return tf(1j * w)


def stability(sys, margin_tol: float = 1e-9) -> str:
    """'stable', 'marginal' (poles on the boundary, none outside) or
    'unstable'."""
    if isinstance(sys, StateSpace):
        poles = sys.eigenvalues()
        discrete = sys.is_discrete
    else:
        poles = sys.poles()
        discrete = sys.is_discrete
    if len(poles) == 0:
        return "stable"
    m = np.abs(poles) if discrete else poles.real
    if np.any(m > (1.0 + margin_tol if discrete else margin_tol)):
        return "unstable"
    if np.any(m >= (1.0 - margin_tol if discrete else -margin_tol)):
        return "marginal"
    return "stable"


def is_stable(sys) -> bool:
    return stability(sys) == "stable"
