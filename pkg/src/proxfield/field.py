"""Finite atomic measure spaces, block vectors, and their weighted algebra.

A measure space here is a finite list of atoms with strictly positive
weights.  A field assigns each atom a Euclidean space of its own dimension;
the product carries the weighted scalar product

    <x, y> = sum_k  alpha_k * <x_k, y_k>.

All types are immutable after construction and every operation is pure, so
everything in this module is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .errors import ShapeError

__all__ = [
    "AtomicMeasureSpace",
    "HilbertField",
    "BlockVector",
    "inner_product",
    "norm",
    "integrate",
    "axpy",
    "zeros",
    "random_block",
]


@dataclass(frozen=True)
class AtomicMeasureSpace:
    """Finitely many atoms, atom k carrying mass ``weights[k]`` > 0."""

    weights: tuple[float, ...]

    def __init__(self, weights: Iterable[float]):
        ws = tuple(float(w) for w in weights)
        if not ws:
            raise ShapeError("a measure space needs at least one atom")
        for k, w in enumerate(ws):
            if not math.isfinite(w) or w <= 0.0:
                raise ShapeError(f"weight {k} must be strictly positive and finite, got {w}")
        object.__setattr__(self, "weights", ws)

    @property
    def count(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class HilbertField:
    """A measure space together with the per-atom dimensions d_k >= 1."""

    space: AtomicMeasureSpace
    dims: tuple[int, ...]

    def __init__(self, space: AtomicMeasureSpace, dims: Iterable[int]):
        ds = tuple(int(d) for d in dims)
        if len(ds) != space.count:
            raise ShapeError(f"got {len(ds)} dims for {space.count} atoms")
        if any(d < 1 for d in ds):
            raise ShapeError("every atom dimension must be >= 1")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "dims", ds)

    @property
    def count(self) -> int:
        return self.space.count

    @property
    def weights(self) -> tuple[float, ...]:
        return self.space.weights

    @property
    def total_dim(self) -> int:
        return sum(self.dims)


@dataclass(frozen=True, eq=False)
class BlockVector:
    """One real vector per atom.  Blocks are read-only float64 arrays."""

    blocks: tuple[np.ndarray, ...] = dc_field()

    def __init__(self, blocks: Sequence):
        frozen = []
        for k, b in enumerate(blocks):
            arr = np.array(b, dtype=float).reshape(-1)
            if arr.size == 0:
                raise ShapeError(f"block {k} is empty")
            if not np.all(np.isfinite(arr)):
                raise ShapeError(f"block {k} contains non-finite entries")
            arr.setflags(write=False)
            frozen.append(arr)
        if not frozen:
            raise ShapeError("a block vector needs at least one block")
        object.__setattr__(self, "blocks", tuple(frozen))

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.blocks[k]

    def flatten(self) -> np.ndarray:
        """All blocks concatenated into one array."""
        return np.concatenate(self.blocks)

    @staticmethod
    def from_flat(field: HilbertField, flat: Sequence) -> "BlockVector":
        """Split a flat array into blocks according to the field's dims."""
        arr = np.asarray(flat, dtype=float).reshape(-1)
        if arr.size != field.total_dim:
            raise ShapeError(f"expected {field.total_dim} entries, got {arr.size}")
        out, pos = [], 0
        for d in field.dims:
            out.append(arr[pos : pos + d])
            pos += d
        return BlockVector(out)


def _check_conforms(field: HilbertField, x: BlockVector, name: str = "x") -> None:
    if len(x) != field.count:
        raise ShapeError(f"{name} has {len(x)} blocks, field has {field.count} atoms")
    for k, (b, d) in enumerate(zip(x.blocks, field.dims)):
        if b.size != d:
            raise ShapeError(f"{name} block {k} has length {b.size}, field dim is {d}")


def zeros(field: HilbertField) -> BlockVector:
    return BlockVector([np.zeros(d) for d in field.dims])


def inner_product(field: HilbertField, x: BlockVector, y: BlockVector) -> float:
    """Weighted scalar product  sum_k alpha_k <x_k, y_k>."""
    _check_conforms(field, x, "x")
    _check_conforms(field, y, "y")
    return float(
        sum(a * float(np.dot(xb, yb)) for a, xb, yb in zip(field.weights, x, y))
    )


def norm(field: HilbertField, x: BlockVector) -> float:
    return math.sqrt(max(inner_product(field, x, x), 0.0))


def integrate(space: AtomicMeasureSpace, values: Sequence[float]) -> float:
    """Weighted sum of per-atom extended-real values.

    If any entry is +inf the result is +inf regardless of the remaining
    entries (positive weights make every atom non-null).  -inf and NaN are
    rejected: function values are required to be proper.
    """
    vals = list(values)
    if len(vals) != space.count:
        raise ShapeError(f"got {len(vals)} values for {space.count} atoms")
    total = 0.0
    has_inf = False
    for k, v in enumerate(vals):
        v = float(v)
        if math.isnan(v) or v == -math.inf:
            raise ShapeError(f"value {k} is {v}; only finite values and +inf are allowed")
        if v == math.inf:
            has_inf = True
        else:
            total += space.weights[k] * v
    return math.inf if has_inf else total


def axpy(field: HilbertField, a: float, x: BlockVector, b: float, y: BlockVector) -> BlockVector:
    """Blockwise a*x_k + b*y_k."""
    _check_conforms(field, x, "x")
    _check_conforms(field, y, "y")
    return BlockVector([a * xb + b * yb for xb, yb in zip(x, y)])


def random_block(field: HilbertField, rng: np.random.Generator, max_norm: float = 10.0) -> BlockVector:
    """Standard-normal sample, rescaled so its weighted norm is <= max_norm."""
    blocks = [rng.standard_normal(d) for d in field.dims]
    x = BlockVector(blocks)
    nx = norm(field, x)
    if nx > max_norm:
        x = BlockVector([(max_norm / nx) * b for b in x])
    return x
