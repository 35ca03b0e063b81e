"""Convex function atoms and the blockwise function calculus.

Each atom carries an evaluation oracle (values in R plus +inf), a prox
oracle, and a witness point with a finite value; exact conjugates and
recession functions are attached when a closed form exists.  Aggregates
over a field evaluate as weighted sums while prox, envelope gradients, and
projections act block by block, with the weights cancelling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AtomError, CapabilityError, ShapeError
from .field import (
    BlockVector,
    HilbertField,
    _check_conforms,
    integrate,
    norm,
)

__all__ = [
    "ConvexAtom",
    "DirectIntegralFunction",
    "ConvexSetAtom",
    "DirectIntegralSet",
    "quadratic",
    "abs_value",
    "euclidean_norm",
    "linear",
    "zero",
    "support_box",
    "indicator",
    "box_set",
    "ball_set",
    "halfspace_set",
    "orthant_set",
    "affine_set",
    "point_set",
    "conjugate_atom",
    "conjugate_function",
    "di_eval",
    "di_prox",
    "di_envelope",
    "envelope_gradient",
    "di_conjugate",
    "conjugate_estimate",
    "conjugate_prox",
    "recession_estimate",
    "subgradient_residual",
    "project",
    "support",
    "ConjugateEstimate",
    "RecessionEstimate",
]

DEFAULT_GAMMA_SCHEDULE = tuple(2.0 ** -n for n in range(21))
DEFAULT_ALPHA_SCHEDULE = tuple(2.0 ** n for n in range(51))
DIVERGENCE_BOUND = 1e12


@dataclass(frozen=True)
class ConvexAtom:
    """Proper lsc convex function on R^dim given through oracles.

    ``evaluate(x)`` may return +inf; ``prox(gamma, x)`` is prox_{gamma f}(x).
    ``witness`` is a point with a finite value, required so properness is
    certified at construction.
    """

    dim: int
    evaluate: Callable[[np.ndarray], float]
    prox: Callable[[float, np.ndarray], np.ndarray]
    witness: np.ndarray
    conjugate: Callable[[np.ndarray], float] | None = None
    recession: Callable[[np.ndarray], float] | None = None
    label: str = ""
    meta: dict | None = None

    def __post_init__(self):
        w = np.asarray(self.witness, dtype=float).reshape(-1)
        if w.size != self.dim:
            raise ShapeError("witness length does not match the atom dimension")
        if not math.isfinite(float(self.evaluate(w))):
            raise ShapeError("witness point must have a finite value")
        object.__setattr__(self, "witness", w)


@dataclass(frozen=True)
class DirectIntegralFunction:
    """One convex atom per atom of the field."""

    field: HilbertField
    atoms: tuple[ConvexAtom, ...]

    def __init__(self, field: HilbertField, atoms: Sequence[ConvexAtom]):
        atoms = tuple(atoms)
        if len(atoms) != field.count:
            raise ShapeError(f"got {len(atoms)} atoms for {field.count} field atoms")
        for k, (a, d) in enumerate(zip(atoms, field.dims)):
            if a.dim != d:
                raise ShapeError(f"atom {k} has dim {a.dim}, field dim is {d}")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "atoms", atoms)

    @property
    def witness(self) -> BlockVector:
        return BlockVector([a.witness for a in self.atoms])


# ---------------------------------------------------------------------------
# Convex set atoms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexSetAtom:
    """Nonempty closed convex subset of R^dim with a projection oracle."""

    dim: int
    membership: Callable[[np.ndarray], bool]
    projection: Callable[[np.ndarray], np.ndarray]
    support: Callable[[np.ndarray], float] | None = None
    recession: Callable[[np.ndarray], float] | None = None
    label: str = ""
    meta: dict | None = None


@dataclass(frozen=True)
class DirectIntegralSet:
    field: HilbertField
    atoms: tuple[ConvexSetAtom, ...]

    def __init__(self, field: HilbertField, atoms: Sequence[ConvexSetAtom]):
        atoms = tuple(atoms)
        if len(atoms) != field.count:
            raise ShapeError(f"got {len(atoms)} set atoms for {field.count} field atoms")
        for k, (a, d) in enumerate(zip(atoms, field.dims)):
            if a.dim != d:
                raise ShapeError(f"set atom {k} has dim {a.dim}, field dim is {d}")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "atoms", atoms)


# ---------------------------------------------------------------------------
# Function atom library
# ---------------------------------------------------------------------------

def quadratic(mat: Sequence, shift: Sequence) -> ConvexAtom:
    """f(x) = x'Qx/2 + b'x with Q symmetric positive semidefinite."""
    Q = np.array(mat, dtype=float)
    b = np.asarray(shift, dtype=float).reshape(-1)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != b.size:
        raise ShapeError("quadratic needs a square matrix matching the shift length")
    Q = 0.5 * (Q + Q.T)
    eigs = np.linalg.eigvalsh(Q)
    if eigs.min() < -1e-10:
        raise ShapeError("quadratic matrix must be positive semidefinite")
    dim = b.size
    eye = np.eye(dim)
    Qpinv = np.linalg.pinv(Q, rcond=1e-12)
    proj_range = Q @ Qpinv  # orthogonal projector onto range(Q)

    def conj(y: np.ndarray) -> float:
        r = y - b
        if np.linalg.norm(r - proj_range @ r) > 1e-9 * (1.0 + np.linalg.norm(r)):
            return math.inf
        return 0.5 * float(r @ Qpinv @ r)

    def rec(d: np.ndarray) -> float:
        if np.linalg.norm(Q @ d) > 1e-9 * (1.0 + np.linalg.norm(d)):
            return math.inf
        return float(np.dot(b, d))

    return ConvexAtom(
        dim=dim,
        evaluate=lambda x: 0.5 * float(x @ Q @ x) + float(np.dot(b, x)),
        prox=lambda g, x: np.linalg.solve(eye + g * Q, x - g * b),
        witness=np.zeros(dim),
        conjugate=conj,
        recession=rec,
        label="quadratic",
        meta={"name": "quadratic", "params": {"mat": Q.reshape(-1).tolist(), "shift": b.tolist()}},
    )


def abs_value() -> ConvexAtom:
    """f(x) = |x| on R; prox is the soft threshold."""
    return ConvexAtom(
        dim=1,
        evaluate=lambda x: abs(float(x[0])),
        prox=lambda g, x: np.sign(x) * np.maximum(np.abs(x) - g, 0.0),
        witness=np.zeros(1),
        conjugate=lambda y: 0.0 if abs(float(y[0])) <= 1.0 + 1e-12 else math.inf,
        recession=lambda d: abs(float(d[0])),
        label="|.|",
        meta={"name": "abs_value", "params": {}},
    )


def euclidean_norm(dim: int) -> ConvexAtom:
    """f(x) = ||x||_2; prox is the block soft threshold."""

    def prox(g, x):
        nx = np.linalg.norm(x)
        return np.zeros(dim) if nx <= g else (1.0 - g / nx) * x

    return ConvexAtom(
        dim=dim,
        evaluate=lambda x: float(np.linalg.norm(x)),
        prox=prox,
        witness=np.zeros(dim),
        conjugate=lambda y: 0.0 if np.linalg.norm(y) <= 1.0 + 1e-12 else math.inf,
        recession=lambda d: float(np.linalg.norm(d)),
        label="||.||",
        meta={"name": "euclidean_norm", "params": {"dim": dim}},
    )


def linear(shift: Sequence) -> ConvexAtom:
    b = np.asarray(shift, dtype=float).reshape(-1)
    return ConvexAtom(
        dim=b.size,
        evaluate=lambda x: float(np.dot(b, x)),
        prox=lambda g, x: x - g * b,
        witness=np.zeros(b.size),
        conjugate=lambda y: 0.0 if np.linalg.norm(y - b) <= 1e-10 * (1.0 + np.linalg.norm(b)) else math.inf,
        recession=lambda d: float(np.dot(b, d)),
        label="linear",
        meta={"name": "linear", "params": {"shift": b.tolist()}},
    )


def zero(dim: int) -> ConvexAtom:
    return ConvexAtom(
        dim=dim,
        evaluate=lambda x: 0.0,
        prox=lambda g, x: x,
        witness=np.zeros(dim),
        conjugate=lambda y: 0.0 if np.linalg.norm(y) <= 1e-12 else math.inf,
        recession=lambda d: 0.0,
        label="0",
        meta={"name": "zero", "params": {"dim": dim}},
    )


def support_box(lo: Sequence, hi: Sequence) -> ConvexAtom:
    """Support function of a box: f(x) = sum_i max(lo_i x_i, hi_i x_i)."""
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if lo.size != hi.size or np.any(lo > hi):
        raise ShapeError("box bounds must align with lo <= hi")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ShapeError("support_box needs finite bounds")
    ev = lambda x: float(np.sum(np.maximum(lo * x, hi * x)))
    return ConvexAtom(
        dim=lo.size,
        evaluate=ev,
        prox=lambda g, x: x - g * np.clip(x / g, lo, hi),
        witness=np.zeros(lo.size),
        conjugate=lambda y: 0.0 if np.all(y >= lo - 1e-12) and np.all(y <= hi + 1e-12) else math.inf,
        recession=ev,  # positively homogeneous
        label="sigma_box",
        meta={"name": "support_box", "params": {"lo": lo.tolist(), "hi": hi.tolist()}},
    )


# ---------------------------------------------------------------------------
# Set atom library and indicators
# ---------------------------------------------------------------------------

def box_set(lo: Sequence, hi: Sequence) -> ConvexSetAtom:
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if lo.size != hi.size or np.any(lo > hi):
        raise ShapeError("box bounds must align with lo <= hi")

    def supp(y: np.ndarray) -> float:
        # sup over the box is coordinatewise; infinite bounds give +inf
        # whenever y points into them.
        total = 0.0
        for yi, l, h in zip(y, lo, hi):
            if yi == 0.0:
                continue
            v = h * yi if yi > 0.0 else l * yi
            if v == math.inf:
                return math.inf
            total += v
        return total

    rec_lo = np.where(np.isneginf(lo), -math.inf, 0.0)
    rec_hi = np.where(np.isposinf(hi), math.inf, 0.0)
    return ConvexSetAtom(
        dim=lo.size,
        membership=lambda x: bool(np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12)),
        projection=lambda x: np.clip(x, lo, hi),
        support=supp,
        recession=lambda d: 0.0 if np.all(d >= rec_lo - 1e-12) and np.all(d <= rec_hi + 1e-12) else math.inf,
        label="box",
        meta={"name": "box", "params": {"lo": lo.tolist(), "hi": hi.tolist()}},
    )


def ball_set(center: Sequence, radius: float) -> ConvexSetAtom:
    c = np.asarray(center, dtype=float).reshape(-1)
    r = float(radius)
    if r < 0.0:
        raise ShapeError("ball radius must be nonnegative")

    def proj(x):
        d = x - c
        nd = np.linalg.norm(d)
        return x if nd <= r else c + (r / nd) * d

    return ConvexSetAtom(
        dim=c.size,
        membership=lambda x: bool(np.linalg.norm(x - c) <= r + 1e-12),
        projection=proj,
        support=lambda y: float(np.dot(c, y)) + r * float(np.linalg.norm(y)),
        recession=lambda d: 0.0 if np.linalg.norm(d) <= 1e-12 else math.inf,
        label="ball",
        meta={"name": "ball", "params": {"center": c.tolist(), "radius": r}},
    )


def halfspace_set(normal: Sequence, offset: float) -> ConvexSetAtom:
    """{x : <normal, x> <= offset}."""
    a = np.asarray(normal, dtype=float).reshape(-1)
    beta = float(offset)
    na2 = float(np.dot(a, a))
    if na2 <= 0.0:
        raise ShapeError("halfspace normal must be nonzero")

    def proj(x):
        excess = float(np.dot(a, x)) - beta
        return x if excess <= 0.0 else x - (excess / na2) * a

    def supp(y: np.ndarray) -> float:
        t = float(np.dot(a, y)) / na2
        if t < -1e-12 or np.linalg.norm(y - t * a) > 1e-9 * (1.0 + np.linalg.norm(y)):
            return math.inf
        return max(t, 0.0) * beta

    return ConvexSetAtom(
        dim=a.size,
        membership=lambda x: float(np.dot(a, x)) <= beta + 1e-12,
        projection=proj,
        support=supp,
        recession=lambda d: 0.0 if float(np.dot(a, d)) <= 1e-12 else math.inf,
        label="halfspace",
        meta={"name": "halfspace", "params": {"normal": a.tolist(), "offset": beta}},
    )


def orthant_set(dim: int) -> ConvexSetAtom:
    return ConvexSetAtom(
        dim=dim,
        membership=lambda x: bool(np.all(x >= -1e-12)),
        projection=lambda x: np.maximum(x, 0.0),
        support=lambda y: 0.0 if np.all(y <= 1e-12) else math.inf,
        recession=lambda d: 0.0 if np.all(d >= -1e-12) else math.inf,
        label="orthant",
        meta={"name": "orthant", "params": {"dim": dim}},
    )


def affine_set(mat: Sequence, rhs: Sequence) -> ConvexSetAtom:
    """{x : B x = c} for a full-row-rank B."""
    B = np.array(mat, dtype=float)
    c = np.asarray(rhs, dtype=float).reshape(-1)
    if B.ndim != 2 or B.shape[0] != c.size:
        raise ShapeError("affine set needs B with one row per rhs entry")
    Bpinv = np.linalg.pinv(B, rcond=1e-12)
    x0 = Bpinv @ c  # least-norm point
    proj_row = B.T @ np.linalg.pinv(B @ B.T, rcond=1e-12) @ B  # onto range(B')

    def supp(y: np.ndarray) -> float:
        if np.linalg.norm(y - proj_row @ y) > 1e-9 * (1.0 + np.linalg.norm(y)):
            return math.inf
        return float(np.dot(x0, y))

    return ConvexSetAtom(
        dim=B.shape[1],
        membership=lambda x: bool(np.linalg.norm(B @ x - c) <= 1e-10 * (1.0 + np.linalg.norm(c))),
        projection=lambda x: x - Bpinv @ (B @ x - c),
        support=supp,
        recession=lambda d: 0.0 if np.linalg.norm(B @ d) <= 1e-10 * (1.0 + np.linalg.norm(d)) else math.inf,
        label="affine",
        meta={"name": "affine", "params": {"mat": B.reshape(-1).tolist(), "rows": B.shape[0], "rhs": c.tolist()}},
    )


def point_set(point: Sequence) -> ConvexSetAtom:
    p = np.asarray(point, dtype=float).reshape(-1)
    return ConvexSetAtom(
        dim=p.size,
        membership=lambda x: bool(np.linalg.norm(x - p) <= 1e-12 * (1.0 + np.linalg.norm(p))),
        projection=lambda x: p.copy(),
        support=lambda y: float(np.dot(p, y)),
        recession=lambda d: 0.0 if np.linalg.norm(d) <= 1e-12 else math.inf,
        label="point",
        meta={"name": "point", "params": {"point": p.tolist()}},
    )


def indicator(set_atom: ConvexSetAtom) -> ConvexAtom:
    """Indicator function of a set atom; its prox is exactly the projection."""
    w = set_atom.projection(np.zeros(set_atom.dim))
    return ConvexAtom(
        dim=set_atom.dim,
        evaluate=lambda x: 0.0 if set_atom.membership(x) else math.inf,
        prox=lambda g, x: set_atom.projection(x),
        witness=w,
        conjugate=set_atom.support,
        recession=set_atom.recession,
        label=f"i_{set_atom.label}",
        meta={"name": "indicator", "params": {}, "inner": set_atom.meta},
    )


# ---------------------------------------------------------------------------
# Conjugation
# ---------------------------------------------------------------------------

def conjugate_atom(atom: ConvexAtom) -> ConvexAtom:
    """The convex conjugate as an atom, with prox via Moreau decomposition.

    Requires an exact conjugate evaluation on the input atom.  A witness for
    the conjugate is obtained from a subgradient at the prox of the original
    witness.
    """
    if atom.conjugate is None:
        raise CapabilityError(f"atom '{atom.label}' has no exact conjugate")
    p = atom.prox(1.0, atom.witness)
    w_star = atom.witness - p  # lies in the subdifferential at p

    return ConvexAtom(
        dim=atom.dim,
        evaluate=atom.conjugate,
        prox=lambda g, x: x - g * atom.prox(1.0 / g, x / g),
        witness=w_star,
        conjugate=atom.evaluate,
        recession=None,
        label=f"({atom.label})*",
        meta={"name": "conjugate", "params": {}, "inner": atom.meta},
    )


def conjugate_function(f: DirectIntegralFunction) -> DirectIntegralFunction:
    return DirectIntegralFunction(f.field, [conjugate_atom(a) for a in f.atoms])


# ---------------------------------------------------------------------------
# Blockwise operations
# ---------------------------------------------------------------------------

def _per_atom(f, x: BlockVector, fn) -> BlockVector:
    out = []
    for k, (atom, block) in enumerate(zip(f.atoms, x)):
        try:
            r = np.asarray(fn(atom, block), dtype=float).reshape(-1)
        except (AtomError, ShapeError, CapabilityError):
            raise
        except Exception as exc:
            raise AtomError(k, str(exc)) from exc
        if r.size != atom.dim or not np.all(np.isfinite(r)):
            raise AtomError(k, "oracle returned a malformed block")
        out.append(r)
    return BlockVector(out)


def di_eval(f: DirectIntegralFunction, x: BlockVector) -> float:
    """Weighted sum of atom values; +inf as soon as any atom is infeasible."""
    _check_conforms(f.field, x)
    return integrate(f.field.space, [a.evaluate(b) for a, b in zip(f.atoms, x)])


def di_prox(f: DirectIntegralFunction, gamma: float, x: BlockVector) -> BlockVector:
    """Blockwise prox_{gamma f_k}(x_k); the weights cancel and do not appear."""
    if gamma <= 0.0:
        raise ShapeError("gamma must be positive")
    _check_conforms(f.field, x)
    return _per_atom(f, x, lambda a, b: a.prox(gamma, b))


def di_envelope(f: DirectIntegralFunction, gamma: float, x: BlockVector) -> float:
    """Weighted sum of the per-atom Moreau envelopes at index gamma."""
    p = di_prox(f, gamma, x)
    vals = [
        a.evaluate(pb) + float(np.dot(xb - pb, xb - pb)) / (2.0 * gamma)
        for a, xb, pb in zip(f.atoms, x, p)
    ]
    return integrate(f.field.space, vals)


def envelope_gradient(f: DirectIntegralFunction, gamma: float, x: BlockVector) -> BlockVector:
    """Blockwise (x_k - prox_{gamma f_k}(x_k)) / gamma.

    These per-atom Euclidean values are the gradient of the envelope in the
    weighted metric; pairing them against the Euclidean flat gradient picks
    up one factor alpha_k per block.
    """
    p = di_prox(f, gamma, x)
    return BlockVector([(xb - pb) / gamma for xb, pb in zip(x, p)])


@dataclass(frozen=True)
class ConjugateEstimate:
    value: float
    increment: float


def _atom_conjugate_estimate(atom: ConvexAtom, v: np.ndarray, schedule) -> tuple[float, float]:
    # Increasing sequence ||v||^2/(2g) - env_{1/g} f (v/g) converging to f*(v).
    prev = None
    inc = 0.0
    for g in schedule:
        lam = 1.0 / g
        w = v / g
        p = atom.prox(lam, w)
        env = atom.evaluate(p) + float(np.dot(w - p, w - p)) / (2.0 * lam)
        cur = float(np.dot(v, v)) / (2.0 * g) - env
        if cur > DIVERGENCE_BOUND:
            return math.inf, math.inf
        inc = 0.0 if prev is None else cur - prev
        prev = cur
    return prev, inc


def conjugate_estimate(
    f: DirectIntegralFunction,
    x_star: BlockVector,
    schedule: Sequence[float] = DEFAULT_GAMMA_SCHEDULE,
) -> ConjugateEstimate:
    """Envelope-based lower estimate of the conjugate value, with increment.

    The per-atom sequence is nondecreasing along the decreasing gamma
    schedule, so the final value is a lower bound on the conjugate and the
    final increment measures how far the sequence still moved.
    """
    _check_conforms(f.field, x_star)
    vals, incs = [], []
    for a, b in zip(f.atoms, x_star):
        v, i = _atom_conjugate_estimate(a, b, schedule)
        vals.append(v)
        incs.append(i)
    value = integrate(f.field.space, vals)
    finite_incs = [i for i in incs if math.isfinite(i)]
    return ConjugateEstimate(value=value, increment=max(finite_incs) if finite_incs else math.inf)


def di_conjugate(f: DirectIntegralFunction, x_star: BlockVector, estimate: bool = False) -> float:
    """Weighted sum of the atom conjugates at x_star.

    Falls back to the envelope-based estimator when requested; otherwise
    every atom must carry an exact conjugate.
    """
    _check_conforms(f.field, x_star)
    if estimate:
        return conjugate_estimate(f, x_star).value
    missing = [k for k, a in enumerate(f.atoms) if a.conjugate is None]
    if missing:
        raise CapabilityError(f"atoms {missing} have no exact conjugate; pass estimate=True")
    return integrate(f.field.space, [a.conjugate(b) for a, b in zip(f.atoms, x_star)])


def conjugate_prox(f: DirectIntegralFunction, gamma: float, x: BlockVector) -> BlockVector:
    """Blockwise prox of the conjugate: x_k - gamma * prox_{f_k/gamma}(x_k/gamma)."""
    if gamma <= 0.0:
        raise ShapeError("gamma must be positive")
    _check_conforms(f.field, x)
    return _per_atom(f, x, lambda a, b: b - gamma * a.prox(1.0 / gamma, b / gamma))


@dataclass(frozen=True)
class RecessionEstimate:
    value: float
    increment: float
    exact: bool


def recession_estimate(
    f: DirectIntegralFunction,
    x: BlockVector,
    alpha_schedule: Sequence[float] = DEFAULT_ALPHA_SCHEDULE,
    use_analytic: bool = True,
) -> RecessionEstimate:
    """Horizon growth rate of the aggregate along direction x.

    With exact recession functions on every atom the weighted sum is
    returned directly.  Otherwise the difference quotients
    (f_k(r_k + a x_k) - f_k(r_k))/a are driven up the increasing schedule;
    they are nondecreasing in a, so the final value is a lower bound and a
    quotient beyond 1e12 is reported as +inf.
    """
    _check_conforms(f.field, x)
    if use_analytic and all(a.recession is not None for a in f.atoms):
        vals = [a.recession(b) for a, b in zip(f.atoms, x)]
        return RecessionEstimate(value=integrate(f.field.space, vals), increment=0.0, exact=True)

    sched = [float(a) for a in alpha_schedule]
    if not sched or any(a <= 0.0 for a in sched):
        raise ShapeError("alpha schedule must be nonempty and positive")
    vals, incs = [], []
    for atom, b in zip(f.atoms, x):
        r = atom.witness
        fr = float(atom.evaluate(r))
        prev, inc = None, 0.0
        for a in sched:
            q = (float(atom.evaluate(r + a * b)) - fr) / a
            if q == math.inf or q > DIVERGENCE_BOUND:
                prev, inc = math.inf, math.inf
                break
            inc = 0.0 if prev is None else q - prev
            prev = q
        vals.append(prev)
        incs.append(inc)
    value = integrate(f.field.space, vals)
    finite_incs = [i for i in incs if math.isfinite(i)]
    return RecessionEstimate(
        value=value,
        increment=max(finite_incs) if finite_incs else math.inf,
        exact=False,
    )


def subgradient_residual(f: DirectIntegralFunction, x: BlockVector, x_star: BlockVector) -> float:
    """|| x - prox_f(x + x*) || in the weighted metric; zero iff x* is a subgradient at x."""
    _check_conforms(f.field, x)
    _check_conforms(f.field, x_star)
    shifted = BlockVector([a + b for a, b in zip(x, x_star)])
    p = di_prox(f, 1.0, shifted)
    return norm(f.field, BlockVector([a - b for a, b in zip(x, p)]))


# ---------------------------------------------------------------------------
# Set operations
# ---------------------------------------------------------------------------

def project(sets: DirectIntegralSet, x: BlockVector) -> BlockVector:
    """Blockwise projection onto the aggregate set."""
    _check_conforms(sets.field, x)
    return _per_atom(sets, x, lambda a, b: a.projection(b))


def _support_by_ascent(atom: ConvexSetAtom, y: np.ndarray, iters: int = 5000) -> float:
    # Projected ascent on the linear objective <y, c>; converges on bounded
    # sets and runs away on unbounded ones, which is reported as a
    # capability gap rather than a value.
    c = atom.projection(np.zeros(atom.dim))
    for _ in range(iters):
        c_next = atom.projection(c + y)
        if np.linalg.norm(c_next) > 1e8:
            break
        if np.linalg.norm(c_next - c) <= 1e-12 * (1.0 + np.linalg.norm(c)):
            return float(np.dot(y, c_next))
        c = c_next
    raise CapabilityError(
        f"set atom '{atom.label}' has no analytic support and the sampling "
        "estimator did not settle; the set is likely unbounded along the query"
    )


def support(sets: DirectIntegralSet, x_star: BlockVector) -> float:
    """Weighted sum of per-atom support values at x_star."""
    _check_conforms(sets.field, x_star)
    vals = []
    for atom, b in zip(sets.atoms, x_star):
        if atom.support is not None:
            vals.append(atom.support(b))
        else:
            vals.append(_support_by_ascent(atom, b))
    return integrate(sets.field.space, vals)
