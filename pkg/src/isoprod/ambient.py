"""Products of space forms and their flat ambient models.

A factor of dimension ``n`` and curvature ``k`` is modelled inside a flat
space of dimension ``n + 1`` (``n`` when ``k == 0``).  Positive curvature uses
the round sphere ``<x, x> = 1/k`` in Euclidean space, negative curvature the
upper sheet of ``<x, x> = 1/k`` in Lorentz space with the timelike coordinate
first, and a flat factor is its own model.  The product is embedded block by
block, so ambient vectors are flat arrays whose consecutive slices are blocks.

Factor indices in the public API are 1-based, like the usual mathematical
notation for the factors of a product.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConstraintError, DimensionError, PreconditionError, SheetError

CONSTRAINT_TOL = 1e-10
TANGENT_TOL = 1e-9


@dataclass(frozen=True)
class SpaceForm:
    """Simply connected space form of dimension ``n`` and curvature ``k``."""

    n: int
    k: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError(f"space form dimension must be a positive integer, got {self.n}")
        if not np.isfinite(self.k):
            raise PreconditionError("curvature must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", float(self.k))

    @property
    def curved(self) -> bool:
        return self.k != 0.0

    @property
    def lorentzian(self) -> bool:
        return self.k < 0.0

    @property
    def block_dim(self) -> int:
        return self.n + (1 if self.curved else 0)

    @property
    def signature(self) -> np.ndarray:
        sig = np.ones(self.block_dim)
        if self.lorentzian:
            sig[0] = -1.0
        return sig

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k}


class ProductSpace:
    """Riemannian product of space forms together with its ambient model.

    Parameters
    ----------
    factors
        Sequence of :class:`SpaceForm` (or ``(n, k)`` pairs).
    allow_single
        Permit a one-factor "product"; used internally for building blocks.
    """

    def __init__(self, factors: Sequence, allow_single: bool = False):
        fs = []
        for f in factors:
            if isinstance(f, SpaceForm):
                fs.append(f)
            elif isinstance(f, dict):
                fs.append(SpaceForm(f["n"], f["k"]))
            else:
                n, k = f
                fs.append(SpaceForm(n, k))
        if len(fs) < (1 if allow_single else 2):
            raise PreconditionError("a product space needs at least two factors")
        self.factors: tuple[SpaceForm, ...] = tuple(fs)
        dims = [f.block_dim for f in fs]
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.blocks = tuple(slice(int(self.offsets[i]), int(self.offsets[i + 1])) for i in range(len(fs)))
        self.eta = np.concatenate([f.signature for f in fs])
        self.k = np.array([f.k for f in fs])
        self.n = np.array([f.n for f in fs], dtype=int)

    def __repr__(self):
        inner = ", ".join(f"({f.n}, {f.k:g})" for f in self.factors)
        return f"ProductSpace([{inner}])"

    def __eq__(self, other):
        return isinstance(other, ProductSpace) and self.factors == other.factors

    def __hash__(self):
        return hash(self.factors)

    @property
    def ell(self) -> int:
        return len(self.factors)

    @property
    def N(self) -> int:
        return int(self.offsets[-1])

    @property
    def dim(self) -> int:
        """Intrinsic dimension of the product."""
        return int(self.n.sum())

    @cached_property
    def curved(self) -> tuple[int, ...]:
        """0-based indices of the factors with nonzero curvature."""
        return tuple(i for i, f in enumerate(self.factors) if f.curved)

    @property
    def J(self) -> frozenset:
        """1-based indices of the curved factors."""
        return frozenset(i + 1 for i in self.curved)

    @property
    def rho(self) -> int:
        """Number of Lorentzian blocks."""
        return sum(1 for f in self.factors if f.lorentzian)

    @cached_property
    def masks(self) -> np.ndarray:
        """Boolean ``(ell, N)`` array selecting each block."""
        out = np.zeros((self.ell, self.N), dtype=bool)
        for i, b in enumerate(self.blocks):
            out[i, b] = True
        return out

    def to_dict(self) -> dict:
        return {"factors": [f.to_dict() for f in self.factors]}

    @classmethod
    def from_dict(cls, data: dict) -> "ProductSpace":
        try:
            return cls([SpaceForm(f["n"], f["k"]) for f in data["factors"]])
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"malformed product space description: {exc}") from exc

    def as_ambient(self, v) -> np.ndarray:
        """Flat ambient array from a flat array or a sequence of blocks."""
        if isinstance(v, ProductPoint):
            return v.coords
        if isinstance(v, np.ndarray) and v.dtype != object and v.ndim >= 1 and v.shape[-1] == self.N:
            return v.astype(float, copy=False)
        try:
            arr = np.asarray(v, dtype=float)
        except (ValueError, TypeError):
            arr = None
        if arr is not None and arr.ndim >= 1 and arr.shape[-1] == self.N:
            return arr
        parts = list(v)
        if len(parts) != self.ell:
            raise DimensionError(f"expected {self.ell} blocks, got {len(parts)}")
        out = []
        for i, (part, f) in enumerate(zip(parts, self.factors)):
            part = np.atleast_1d(np.asarray(part, dtype=float))
            if part.shape != (f.block_dim,):
                raise DimensionError(
                    f"block {i + 1} has shape {part.shape}, expected ({f.block_dim},)")
            out.append(part)
        return np.concatenate(out)

    def split(self, v) -> list[np.ndarray]:
        v = self.as_ambient(v)
        return [v[..., b] for b in self.blocks]

    def inner(self, x, y) -> np.ndarray:
        """Ambient pseudo-inner product, broadcasting over leading axes."""
        return np.sum(np.asarray(x) * self.eta * np.asarray(y), axis=-1)

    def project(self, i0: int, v) -> np.ndarray:
        """Block projection with a 0-based factor index."""
        return np.asarray(v) * self.masks[i0]


@dataclass(frozen=True)
class ProductPoint:
    """Validated point of the ambient model of a product."""

    space: ProductSpace
    coords: np.ndarray

    def block(self, i: int) -> np.ndarray:
        return self.coords[self.space.blocks[i - 1]]


def _check_index(space: ProductSpace, i: int) -> int:
    if int(i) != i or not 1 <= i <= space.ell:
        raise PreconditionError(f"factor index must lie in 1..{space.ell}, got {i}")
    return int(i) - 1


def metric_inner(space: ProductSpace, x, y) -> float:
    """Ambient inner product: Euclidean on spherical and flat blocks, Lorentzian on hyperbolic ones."""
    x = space.as_ambient(x)
    y = space.as_ambient(y)
    if x.shape[-1] != space.N or y.shape[-1] != space.N:
        raise DimensionError("vector length does not match the ambient dimension")
    val = space.inner(x, y)
    return float(val) if np.ndim(val) == 0 else val


def block_project(space: ProductSpace, i: int, v) -> np.ndarray:
    """Keep block ``i`` (1-based) of ``v`` and zero the others."""
    i0 = _check_index(space, i)
    v = space.as_ambient(v)
    return space.project(i0, v)


def constraint_residuals(space: ProductSpace, p) -> np.ndarray:
    """Per-factor residual ``<x_i, x_i> - 1/k_i`` (zero for flat factors)."""
    p = space.as_ambient(p)
    res = np.zeros(space.ell)
    for i, f in enumerate(space.factors):
        if f.curved:
            xb = p[space.blocks[i]]
            res[i] = np.sum(f.signature * xb * xb) - 1.0 / f.k
    return res


def validate_point(space: ProductSpace, p, tol: float = CONSTRAINT_TOL) -> ProductPoint:
    """Check every block constraint and return a :class:`ProductPoint`.

    The residual of a curved block is compared relative to ``max(1, 1/|k|)``.
    Hyperbolic blocks must also have a positive timelike coordinate.
    """
    p = space.as_ambient(p)
    if p.shape != (space.N,):
        raise DimensionError(f"point must have length {space.N}, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ConstraintError("point has non-finite coordinates")
    res = constraint_residuals(space, p)
    for i, f in enumerate(space.factors):
        if not f.curved:
            continue
        scale = max(1.0, 1.0 / abs(f.k))
        if abs(res[i]) > tol * scale:
            raise ConstraintError(
                f"factor {i + 1} violates its constraint by {res[i]:.3e}",
                factor=i + 1, residual=float(res[i]))
        if f.lorentzian and p[space.blocks[i]][0] <= 0:
            raise SheetError(f"factor {i + 1} lies on the lower sheet", factor=i + 1,
                             residual=float(res[i]))
    return ProductPoint(space, p.copy())


def tangent_projection(space: ProductSpace, p, v) -> np.ndarray:
    """Orthogonal projection of ambient vectors onto the tangent space of the product at ``p``."""
    p = space.as_ambient(p)
    v = np.array(v, dtype=float, copy=True)
    for i in space.curved:
        b = space.blocks[i]
        xb = p[b]
        coef = space.factors[i].k * np.sum(v[..., b] * space.eta[b] * xb, axis=-1)
        v[..., b] -= np.multiply.outer(coef, xb)
    return v


def tangent_test(space: ProductSpace, p, X, tol: float = TANGENT_TOL) -> bool:
    """True when ``X`` is tangent to the product at ``p`` (every curved block orthogonal to its position)."""
    p = space.as_ambient(p)
    X = space.as_ambient(X)
    thresh = tol * (1.0 + float(np.linalg.norm(X)))
    for i in space.curved:
        b = space.blocks[i]
        if abs(np.sum(X[b] * space.eta[b] * p[b])) > thresh:
            return False
    return True


def iota_alpha(space: ProductSpace, p, X, Y) -> np.ndarray:
    """Second fundamental form of the product inside its flat ambient space."""
    p = space.as_ambient(p)
    X = space.as_ambient(X)
    Y = space.as_ambient(Y)
    if not (tangent_test(space, p, X) and tangent_test(space, p, Y)):
        raise PreconditionError("arguments must be tangent to the product at p")
    out = np.zeros(space.N)
    for i in space.curved:
        b = space.blocks[i]
        out[b] = -space.factors[i].k * np.sum(X[b] * space.eta[b] * Y[b]) * p[b]
    return out


def wedge(x, y, z, inner) -> np.ndarray:
    """``(x ^ y) z = <y, z> x - <x, z> y`` for a given inner product."""
    return inner(y, z) * x - inner(x, z) * y


def product_curvature(space: ProductSpace, p, X, Y, Z) -> np.ndarray:
    """Riemann curvature ``R(X, Y) Z`` of the product, factor by factor."""
    p = space.as_ambient(p)
    X, Y, Z = (space.as_ambient(v) for v in (X, Y, Z))
    for v in (X, Y, Z):
        if not tangent_test(space, p, v):
            raise PreconditionError("arguments must be tangent to the product at p")
    out = np.zeros(space.N)
    for i in space.curved:
        k = space.factors[i].k
        xi, yi, zi = (space.project(i, v) for v in (X, Y, Z))
        out += k * wedge(xi, yi, zi, space.inner)
    return out
