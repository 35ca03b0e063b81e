"""Families of linear maps from a common source space into the field.

One dense d_k x m matrix per atom; the synthesized map sends z to the block
vector (L_k z)_k and its adjoint with respect to the weighted metric is
z* = sum_k alpha_k L_k' x*_k.  Prox mixtures push prox oracles through such
a family and always produce the prox of some convex function on the source
space, which is what the cyclic probe certifies by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainViolationError, PreconditionError, ShapeError
from .field import BlockVector, HilbertField, _check_conforms
from .functions import DirectIntegralFunction, di_eval

__all__ = [
    "LinearFamily",
    "CompositeFunction",
    "apply",
    "adjoint",
    "norm_bound",
    "norm_estimate",
    "prox_mixture",
    "cyclic_probe",
    "composite_eval",
    "composite_subgradient",
    "CyclicReport",
    "SubgradientEstimate",
]

# deep enough that smooth chain rules come out at ~1e-7 accuracy
DEFAULT_GAMMA_SCHEDULE = tuple(2.0 ** -n for n in range(25))
DIVERGENCE_BOUND = 1e12


@dataclass(frozen=True)
class LinearFamily:
    """Dense matrices L_k: R^m -> R^{d_k}, one per atom."""

    field: HilbertField
    source_dim: int
    mats: tuple[np.ndarray, ...]

    def __init__(self, field: HilbertField, source_dim: int, mats: Sequence):
        m = int(source_dim)
        if m < 1:
            raise ShapeError("source dimension must be >= 1")
        frozen = []
        for k, M in enumerate(mats):
            arr = np.array(M, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1) if m == 1 else arr.reshape(1, -1)
            if arr.shape != (field.dims[k], m):
                raise ShapeError(
                    f"matrix {k} has shape {arr.shape}, expected {(field.dims[k], m)}"
                )
            if not np.all(np.isfinite(arr)):
                raise ShapeError(f"matrix {k} contains non-finite entries")
            arr.setflags(write=False)
            frozen.append(arr)
        if len(frozen) != field.count:
            raise ShapeError(f"got {len(frozen)} matrices for {field.count} atoms")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "source_dim", m)
        object.__setattr__(self, "mats", tuple(frozen))

    @property
    def norm_bound_sq(self) -> float:
        return sum(
            a * np.linalg.norm(M, 2) ** 2 for a, M in zip(self.field.weights, self.mats)
        )


def apply(family: LinearFamily, z: Sequence) -> BlockVector:
    """Block k is L_k z."""
    zv = np.asarray(z, dtype=float).reshape(-1)
    if zv.size != family.source_dim:
        raise ShapeError(f"z has length {zv.size}, expected {family.source_dim}")
    return BlockVector([M @ zv for M in family.mats])


def adjoint(family: LinearFamily, x_star: BlockVector) -> np.ndarray:
    """sum_k alpha_k L_k' x*_k; the weights enter through the metric."""
    _check_conforms(family.field, x_star, "x_star")
    out = np.zeros(family.source_dim)
    for a, M, b in zip(family.field.weights, family.mats, x_star):
        out += a * (M.T @ b)
    return out


def norm_bound(family: LinearFamily) -> float:
    """sqrt(sum_k alpha_k ||L_k||^2): an upper bound on the operator norm."""
    return math.sqrt(family.norm_bound_sq)


def norm_estimate(family: LinearFamily, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the true operator norm.

    Iterates z -> L*(L z) on the source space, which realizes the weighted
    Gram matrix; the estimate can only approach the norm from below, so it
    never exceeds norm_bound beyond rounding.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(family.source_dim)
    nz = np.linalg.norm(z)
    if nz == 0.0:
        return 0.0
    z /= nz
    lam = 0.0
    for _ in range(max(int(iters), 1)):
        w = adjoint(family, apply(family, z))
        nw = np.linalg.norm(w)
        if nw <= 1e-300:
            return 0.0
        lam = float(np.dot(z, w))
        z = w / nw
    return math.sqrt(max(lam, 0.0))


def prox_mixture(f: DirectIntegralFunction, family: LinearFamily, z: Sequence) -> np.ndarray:
    """sum_k alpha_k L_k' prox_{f_k}(L_k z).

    Defined only when sum_k alpha_k ||L_k||^2 <= 1; under that bound the map
    is itself the proximity operator of some convex function on the source
    space.  The bound is enforced, not silently rescaled, because the
    conclusion fails without it.
    """
    if f.field is not family.field and f.field != family.field:
        raise ShapeError("function and family must share one field")
    if family.norm_bound_sq > 1.0 + 1e-12:
        raise PreconditionError(
            f"sum_k alpha_k ||L_k||^2 = {family.norm_bound_sq:.6g} exceeds 1"
        )
    u = apply(family, z)
    p = BlockVector([a.prox(1.0, b) for a, b in zip(f.atoms, u)])
    return adjoint(family, p)


@dataclass(frozen=True)
class CyclicReport:
    max_violation: float


def cyclic_probe(
    T: Callable[[np.ndarray], np.ndarray],
    dim: int,
    cycles: int,
    max_len: int,
    seed: int,
) -> CyclicReport:
    """Largest sampled cyclic sum  sum_k <z_{k+1} - z_k, T z_k>.

    Proximity operators keep this nonpositive over every closed cycle;
    positive values certify that T is not a prox.
    """
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(cycles):
        n = int(rng.integers(2, max_len + 1))
        pts = [rng.standard_normal(dim) for _ in range(n)]
        pts.append(pts[0])
        total = 0.0
        for a, b in zip(pts, pts[1:]):
            total += float(np.dot(b - a, np.asarray(T(a), dtype=float)))
        worst = max(worst, total)
    return CyclicReport(max_violation=worst)


@dataclass(frozen=True)
class CompositeFunction:
    """f composed with a linear family: z -> sum_k alpha_k f_k(L_k z)."""

    f: DirectIntegralFunction
    family: LinearFamily

    def __post_init__(self):
        if self.f.field != self.family.field:
            raise ShapeError("function and family must share one field")


def composite_eval(g: CompositeFunction, z: Sequence) -> float:
    return di_eval(g.f, apply(g.family, z))


@dataclass(frozen=True)
class SubgradientEstimate:
    value: np.ndarray
    increment: float


def composite_subgradient(
    g: CompositeFunction,
    z: Sequence,
    gamma_schedule: Sequence[float] = DEFAULT_GAMMA_SCHEDULE,
) -> SubgradientEstimate:
    """Subgradient of the composite at z, approached along a gamma schedule.

    Each term is the adjoint image of the blockwise conjugate prox
    prox_{f_k*/gamma}(L_k z / gamma), i.e. of the Yosida regularization of
    the blockwise subdifferential at L_k z.  The increment between the last
    two schedule points is reported; growth beyond 1e12 signals that z sits
    by a domain boundary nondifferentiability.
    """
    sched = [float(s) for s in gamma_schedule]
    if not sched or any(s <= 0.0 for s in sched):
        raise ShapeError("schedule must be nonempty and positive")
    u = apply(g.family, z)
    prev = None
    inc = math.inf
    for gam in sched:
        # prox_{f*/gamma}(u/gamma) equals (u - prox_{gamma f}(u)) / gamma
        p = BlockVector(
            [(ub - a.prox(gam, ub)) / gam for a, ub in zip(g.f.atoms, u)]
        )
        cur = adjoint(g.family, p)
        if np.linalg.norm(cur) > DIVERGENCE_BOUND:
            raise DomainViolationError(
                "composite subgradient estimate diverged; "
                "z appears to sit on a domain boundary"
            )
        if prev is not None:
            inc = float(np.linalg.norm(cur - prev))
        prev = cur
    return SubgradientEstimate(value=prev, increment=0.0 if len(sched) == 1 else inc)
