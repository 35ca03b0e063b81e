"""Monotone operator atoms and the blockwise operator calculus.

An atom is a maximally monotone operator on R^d given through its resolvent
oracle J_{gamma A}; a forward oracle is attached when the operator is
single-valued.  A family of atoms over a field acts blockwise, and the
resolvent, Yosida approximation, inverse resolvent, and minimal-norm
selection of the aggregate operator are all computed atom by atom -- none
of them depends on the atom weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AtomError, CapabilityError, DomainViolationError, ShapeError
from .field import BlockVector, HilbertField, _check_conforms, inner_product, norm, random_block

__all__ = [
    "MonotoneAtom",
    "DirectIntegralOperator",
    "scaled_identity",
    "affine_psd",
    "normal_cone_box",
    "normal_cone_ball",
    "normal_cone_halfspace",
    "normal_cone_point",
    "subdifferential",
    "scalar_graph",
    "yosida_regularized",
    "di_resolvent",
    "di_yosida",
    "inverse_resolvent",
    "minimal_selection",
    "monotonicity_probe",
    "regularity_probe",
    "MinimalSelection",
    "MonotonicityReport",
    "RegularityReport",
]

DEFAULT_GAMMA_SCHEDULE = tuple(2.0 ** -n for n in range(21))


@dataclass(frozen=True)
class MonotoneAtom:
    """Maximally monotone operator on R^dim, accessed through oracles.

    ``resolvent(gamma, v)`` must return J_{gamma A}(v) for every gamma > 0.
    ``forward`` is only present for single-valued atoms and returns A(u).
    ``meta`` names the library constructor and its parameters; it is what
    the CLI serializes and what test oracles read.
    """

    dim: int
    resolvent: Callable[[float, np.ndarray], np.ndarray]
    forward: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = ""
    meta: dict | None = None


@dataclass(frozen=True)
class DirectIntegralOperator:
    """One monotone atom per atom of the field, acting blockwise."""

    field: HilbertField
    atoms: tuple[MonotoneAtom, ...]

    def __init__(self, field: HilbertField, atoms: Sequence[MonotoneAtom]):
        atoms = tuple(atoms)
        if len(atoms) != field.count:
            raise ShapeError(f"got {len(atoms)} atoms for {field.count} field atoms")
        for k, (a, d) in enumerate(zip(atoms, field.dims)):
            if a.dim != d:
                raise ShapeError(f"atom {k} has dim {a.dim}, field dim is {d}")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "atoms", atoms)


# ---------------------------------------------------------------------------
# Atom library
# ---------------------------------------------------------------------------

def scaled_identity(dim: int, scale: float) -> MonotoneAtom:
    """A = scale * Id with scale >= 0."""
    c = float(scale)
    if c < 0.0:
        raise ShapeError("scaled_identity needs a nonnegative scale")
    return MonotoneAtom(
        dim=dim,
        resolvent=lambda g, v: v / (1.0 + g * c),
        forward=lambda u: c * u,
        label=f"{c}*Id",
        meta={"name": "scaled_identity", "params": {"scale": c}},
    )


def affine_psd(mat: Sequence, shift: Sequence) -> MonotoneAtom:
    """A(u) = M u + b with M + M^T positive semidefinite.

    The resolvent solves (I + gamma M) p = v - gamma b directly.
    """
    M = np.array(mat, dtype=float)
    b = np.asarray(shift, dtype=float).reshape(-1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != b.size:
        raise ShapeError("affine_psd needs a square matrix matching the shift length")
    sym_eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    if sym_eigs.min() < -1e-10:
        raise ShapeError("affine_psd matrix has a negative-definite symmetric part")
    dim = b.size
    eye = np.eye(dim)

    def res(g: float, v: np.ndarray) -> np.ndarray:
        return np.linalg.solve(eye + g * M, v - g * b)

    return MonotoneAtom(
        dim=dim,
        resolvent=res,
        forward=lambda u: M @ u + b,
        label="affine",
        meta={"name": "affine_psd", "params": {"mat": M.reshape(-1).tolist(), "shift": b.tolist()}},
    )


def _projection_atom(dim, proj, label, meta) -> MonotoneAtom:
    # Normal cones are set-valued, so no forward oracle; the resolvent is the
    # projection for every gamma.
    return MonotoneAtom(
        dim=dim,
        resolvent=lambda g, v: proj(v),
        forward=None,
        label=label,
        meta=meta,
    )


def normal_cone_box(lo: Sequence, hi: Sequence) -> MonotoneAtom:
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if lo.size != hi.size or np.any(lo > hi):
        raise ShapeError("box bounds must align with lo <= hi")
    return _projection_atom(
        lo.size,
        lambda v: np.clip(v, lo, hi),
        "N_box",
        {"name": "normal_cone_box", "params": {"lo": lo.tolist(), "hi": hi.tolist()}},
    )


def normal_cone_ball(center: Sequence, radius: float) -> MonotoneAtom:
    c = np.asarray(center, dtype=float).reshape(-1)
    r = float(radius)
    if r < 0.0:
        raise ShapeError("ball radius must be nonnegative")

    def proj(v):
        d = v - c
        nd = np.linalg.norm(d)
        return v if nd <= r else c + (r / nd) * d

    return _projection_atom(
        c.size, proj, "N_ball",
        {"name": "normal_cone_ball", "params": {"center": c.tolist(), "radius": r}},
    )


def normal_cone_halfspace(normal: Sequence, offset: float) -> MonotoneAtom:
    """Normal cone of {x : <normal, x> <= offset}."""
    a = np.asarray(normal, dtype=float).reshape(-1)
    beta = float(offset)
    na2 = float(np.dot(a, a))
    if na2 <= 0.0:
        raise ShapeError("halfspace normal must be nonzero")

    def proj(v):
        excess = float(np.dot(a, v)) - beta
        return v if excess <= 0.0 else v - (excess / na2) * a

    return _projection_atom(
        a.size, proj, "N_halfspace",
        {"name": "normal_cone_halfspace", "params": {"normal": a.tolist(), "offset": beta}},
    )


def normal_cone_point(point: Sequence) -> MonotoneAtom:
    p = np.asarray(point, dtype=float).reshape(-1)
    return _projection_atom(
        p.size, lambda v: p.copy(), "N_point",
        {"name": "normal_cone_point", "params": {"point": p.tolist()}},
    )


def subdifferential(atom) -> MonotoneAtom:
    """Monotone atom backed by the prox oracle of a convex atom."""
    return MonotoneAtom(
        dim=atom.dim,
        resolvent=atom.prox,
        forward=None,
        label=f"d({atom.label})",
        meta={"name": "subdifferential", "params": {}, "inner": atom.meta},
    )


_SCALAR_GRAPHS = {
    "cubic": lambda u: u ** 3,
    "expm1": lambda u: math.expm1(u),
    "atan": lambda u: math.atan(u),
}


def scalar_graph(h: Callable[[float], float] | str, label: str = "graph") -> MonotoneAtom:
    """1-D maximal monotone operator given by a nondecreasing function h.

    The resolvent root of p + gamma*h(p) = v is bracketed by expanding an
    interval around v and then bisected to 1e-12.
    """
    meta = None
    if isinstance(h, str):
        if h not in _SCALAR_GRAPHS:
            raise ShapeError(f"unknown scalar graph '{h}'")
        meta = {"name": "scalar_graph", "params": {"kind": h}}
        label = h
        h = _SCALAR_GRAPHS[h]

    def res(g: float, v: np.ndarray) -> np.ndarray:
        t = float(v[0])
        phi = lambda u: u + g * h(u) - t
        lo, hi, step = t, t, 1.0
        flo = phi(lo)
        fhi = flo
        for _ in range(200):
            if flo <= 0.0 <= fhi:
                break
            if flo > 0.0:
                lo -= step
                flo = phi(lo)
            if fhi < 0.0:
                hi += step
                fhi = phi(hi)
            step *= 2.0
        else:
            raise RuntimeError("bracket expansion failed")
        for _ in range(200):
            if hi - lo <= 1e-12:
                break
            mid = 0.5 * (lo + hi)
            if phi(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        return np.array([0.5 * (lo + hi)])

    return MonotoneAtom(
        dim=1,
        resolvent=res,
        forward=lambda u: np.array([h(float(u[0]))]),
        label=label,
        meta=meta,
    )


def yosida_regularized(base: MonotoneAtom, reg: float) -> MonotoneAtom:
    """Single-valued Yosida regularization of ``base`` with index reg > 0.

    Resolvent via J_{g A_reg}(v) = v - g/(g+reg) * (v - J_{(g+reg) base}(v)).
    """
    rho = float(reg)
    if rho <= 0.0:
        raise ShapeError("regularization index must be positive")

    def res(g: float, v: np.ndarray) -> np.ndarray:
        return v - (g / (g + rho)) * (v - base.resolvent(g + rho, v))

    def fwd(u: np.ndarray) -> np.ndarray:
        return (u - base.resolvent(rho, u)) / rho

    return MonotoneAtom(
        dim=base.dim,
        resolvent=res,
        forward=fwd,
        label=f"yosida({base.label},{rho})",
        meta={"name": "yosida_regularized", "params": {"reg": rho}, "inner": base.meta},
    )


# ---------------------------------------------------------------------------
# Blockwise calculus
# ---------------------------------------------------------------------------

def _per_atom(op: DirectIntegralOperator, x: BlockVector, fn) -> BlockVector:
    out = []
    for k, (atom, block) in enumerate(zip(op.atoms, x)):
        try:
            r = np.asarray(fn(atom, block), dtype=float).reshape(-1)
        except (AtomError, ShapeError):
            raise
        except Exception as exc:  # oracle failures carry their atom index
            raise AtomError(k, str(exc)) from exc
        if r.size != atom.dim or not np.all(np.isfinite(r)):
            raise AtomError(k, "oracle returned a malformed block")
        out.append(r)
    return BlockVector(out)


def di_resolvent(op: DirectIntegralOperator, gamma: float, x: BlockVector) -> BlockVector:
    """Blockwise J_{gamma A_k}(x_k); independent of the atom weights."""
    if gamma <= 0.0:
        raise ShapeError("gamma must be positive")
    _check_conforms(op.field, x)
    return _per_atom(op, x, lambda a, b: a.resolvent(gamma, b))


def di_yosida(op: DirectIntegralOperator, gamma: float, x: BlockVector) -> BlockVector:
    """Blockwise (x_k - J_{gamma A_k}(x_k)) / gamma."""
    j = di_resolvent(op, gamma, x)
    return BlockVector([(xb - jb) / gamma for xb, jb in zip(x, j)])


def inverse_resolvent(op: DirectIntegralOperator, x: BlockVector) -> BlockVector:
    """Blockwise J_{A_k^{-1}}(x_k) = x_k - J_{A_k}(x_k).

    This is the resolvent of the blockwise inverse family.
    """
    j = di_resolvent(op, 1.0, x)
    return BlockVector([xb - jb for xb, jb in zip(x, j)])


@dataclass(frozen=True)
class MinimalSelection:
    """Yosida value at the end of the schedule plus its Cauchy increment."""

    value: BlockVector
    increment: float


def minimal_selection(
    op: DirectIntegralOperator,
    x: BlockVector,
    gamma_schedule: Sequence[float] = DEFAULT_GAMMA_SCHEDULE,
    growth_bound: float = 1e12,
) -> MinimalSelection:
    """Estimate the blockwise minimal-norm value of the operator at x.

    Walks the Yosida approximation down the decreasing gamma schedule; the
    values converge to the minimal-norm selection whenever every block of x
    lies in its atom's domain.  A norm exceeding ``growth_bound`` along the
    way signals a domain violation instead.
    """
    sched = [float(g) for g in gamma_schedule]
    if not sched or any(g <= 0.0 for g in sched):
        raise ShapeError("schedule must be nonempty and positive")
    prev = None
    increment = math.inf
    for g in sched:
        cur = di_yosida(op, g, x)
        if norm(op.field, cur) > growth_bound:
            raise DomainViolationError(
                f"Yosida norm exceeded {growth_bound:g} at gamma={g:g}; "
                "point appears to lie outside the operator domain"
            )
        if prev is not None:
            diff = BlockVector([c - p for c, p in zip(cur, prev)])
            increment = norm(op.field, diff)
        prev = cur
    return MinimalSelection(value=prev, increment=0.0 if len(sched) == 1 else increment)


# ---------------------------------------------------------------------------
# Sampled probes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    min_product: float


def _forward_map(op: DirectIntegralOperator):
    for k, a in enumerate(op.atoms):
        if a.forward is None:
            raise CapabilityError(f"atom {k} has no forward oracle")
    return lambda x: _per_atom(op, x, lambda a, b: a.forward(b))


def monotonicity_probe(op: DirectIntegralOperator, samples: int, seed: int) -> MonotonicityReport:
    """Minimum of <x - y, Ax - Ay> in the weighted metric over random pairs."""
    T = _forward_map(op)
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(samples):
        x = random_block(op.field, rng)
        y = random_block(op.field, rng)
        dx = BlockVector([a - b for a, b in zip(x, y)])
        dT = BlockVector([a - b for a, b in zip(T(x), T(y))])
        worst = min(worst, inner_product(op.field, dx, dT))
    return MonotonicityReport(min_product=worst)


@dataclass(frozen=True)
class RegularityReport:
    kind: str
    estimate: float
    per_atom: tuple[float, ...]
    joint: float


def _pair_constant(kind: str, du: np.ndarray, dT: np.ndarray) -> float | None:
    nu = float(np.dot(du, du))
    nt = float(np.dot(dT, dT))
    cross = float(np.dot(du, dT))
    if kind == "lipschitz":
        return math.sqrt(nt / nu) if nu > 1e-24 else None
    if kind == "cocoercive":
        return cross / nt if nt > 1e-24 else None
    if kind == "averaged":
        # smallest alpha with Id + (T - Id)/alpha nonexpansive on this pair
        defect = dT - du
        num = float(np.dot(defect, defect))
        if num <= 1e-24:
            return 0.0
        den = -2.0 * float(np.dot(du, defect))
        return math.inf if den <= 0.0 else num / den
    raise ShapeError(f"unknown regularity kind '{kind}'")


def regularity_probe(
    op: DirectIntegralOperator,
    kind: str,
    samples: int,
    seed: int,
    use: str = "forward",
    gamma: float = 1.0,
) -> RegularityReport:
    """Sampled estimate of the best Lipschitz/cocoercivity/averagedness constant.

    Per-atom constants are estimated separately and combined by the worst
    one (max for lipschitz/averaged, min for cocoercive); the joint sampled
    constant over full block pairs is reported alongside and can never beat
    the per-atom worst.  With ``use="resolvent"`` the probed map is
    J_{gamma A_k} instead of the forward oracle.
    """
    if use == "forward":
        maps = []
        for k, a in enumerate(op.atoms):
            if a.forward is None:
                raise CapabilityError(f"atom {k} has no forward oracle")
            maps.append(a.forward)
    elif use == "resolvent":
        maps = [lambda u, a=a: a.resolvent(gamma, u) for a in op.atoms]
    else:
        raise ShapeError("use must be 'forward' or 'resolvent'")

    rng = np.random.default_rng(seed)
    pick_worst = min if kind == "cocoercive" else max
    per_atom = []
    for Tk, d in zip(maps, op.field.dims):
        best = None
        for _ in range(samples):
            u = rng.standard_normal(d)
            v = rng.standard_normal(d)
            c = _pair_constant(kind, u - v, np.asarray(Tk(u)) - np.asarray(Tk(v)))
            if c is not None:
                best = c if best is None else pick_worst(best, c)
        per_atom.append(math.inf if best is None else best)

    blockmap = lambda x: BlockVector([Tk(b) for Tk, b in zip(maps, x)])
    joint = None
    for _ in range(samples):
        x = random_block(op.field, rng)
        y = random_block(op.field, rng)
        w = [math.sqrt(a) for a in op.field.weights]
        du = np.concatenate([wk * (xb - yb) for wk, xb, yb in zip(w, x, y)])
        tx, ty = blockmap(x), blockmap(y)
        dT = np.concatenate([wk * (tb - sb) for wk, tb, sb in zip(w, tx, ty)])
        c = _pair_constant(kind, du, dT)
        if c is not None:
            joint = c if joint is None else pick_worst(joint, c)

    return RegularityReport(
        kind=kind,
        estimate=pick_worst(per_atom),
        per_atom=tuple(per_atom),
        joint=math.inf if joint is None else joint,
    )
