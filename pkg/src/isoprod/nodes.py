"""Closed-form immersions and combinators that propagate exact 2-jets.

Every node maps a parameter box in ``R^m`` (``m`` is 1 or 2) into a tuple of
space forms.  ``node.jet(u)`` returns the value, first and second derivatives
in the flat ambient coordinates of those factors.  Combinators only apply
linear operations to the jets of their children, so the derivatives stay
exact.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .ambient import ProductSpace, SpaceForm
from .errors import DimensionError, PreconditionError, WeightError

WEIGHT_TOL = 1e-12


def _box(domain, m):
    lo, hi = np.asarray(domain, dtype=float).reshape(m, 2).T
    if np.any(hi <= lo):
        raise PreconditionError("parameter domain must have positive width in every direction")
    return lo, hi


class Node:
    """Base class for immersion nodes."""

    factors: tuple[SpaceForm, ...]
    m: int
    lo: np.ndarray
    hi: np.ndarray
    declared_identity: bool = False

    @property
    def N(self) -> int:
        return sum(f.block_dim for f in self.factors)

    @property
    def domain(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.lo, self.hi)]

    def jet(self, u: np.ndarray):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _base_dict(self, op, **kw):
        d = {"op": op}
        d.update(kw)
        d["domain"] = [list(p) for p in self.domain]
        return d


def _single(n, k):
    return (SpaceForm(n, k),)


class Circle(Node):
    """Great circle in the sphere ``S^n_k``, through the first two ambient coordinates.

    A nonzero ``accel`` adds a quadratic term to the angle, so the speed varies.
    """

    def __init__(self, k: float, n: int = 1, speed: float = 1.0, phase: float = 0.0,
                 unit_speed: bool | None = None, domain=((-2.5, 2.5),), accel: float = 0.0):
        if k <= 0:
            raise PreconditionError("a circle primitive needs positive curvature")
        self.k, self.n, self.speed, self.phase = float(k), int(n), float(speed), float(phase)
        self.accel = float(accel)
        self.factors = _single(n, k)
        self.m = 1
        self.lo, self.hi = _box(domain, 1)
        r = 1.0 / math.sqrt(self.k)
        if min(self.speed + r * self.accel * t for t in (self.lo[0], self.hi[0])) <= 0:
            raise PreconditionError("circle speed must stay positive on the domain")
        default = speed == 1.0 and self.accel == 0.0
        self.unit_speed = default if unit_speed is None else bool(unit_speed)
        self.declared_identity = self.unit_speed

    def jet(self, u):
        # angle speed * t / r + phase + accel * t^2 / 2
        r = 1.0 / math.sqrt(self.k)
        t = u[0]
        th = self.speed * t / r + self.phase + 0.5 * self.accel * t * t
        w = self.speed / r + self.accel * t
        c, s = math.cos(th), math.sin(th)
        x = np.zeros(self.n + 1)
        d1 = np.zeros((1, self.n + 1))
        d2 = np.zeros((1, 1, self.n + 1))
        x[:2] = r * c, r * s
        d1[0, :2] = r * w * -s, r * w * c
        d2[0, 0, :2] = r * (-self.accel * s - w * w * c), r * (self.accel * c - w * w * s)
        return x, d1, d2

    def to_dict(self):
        return self._base_dict("circle", k=self.k, n=self.n, speed=self.speed, phase=self.phase,
                               unit_speed=self.unit_speed, accel=self.accel)


class LatitudeCircle(Node):
    """Small circle at polar angle ``polar`` in ``S^n_k`` (``n >= 2``)."""

    def __init__(self, k: float, polar: float, n: int = 2, speed: float = 1.0,
                 unit_speed: bool | None = None, domain=((-2.5, 2.5),)):
        if k <= 0:
            raise PreconditionError("a latitude circle needs positive curvature")
        if n < 2:
            raise PreconditionError("a latitude circle needs a sphere of dimension at least 2")
        if not 0 < polar < math.pi:
            raise PreconditionError("polar angle must lie in (0, pi)")
        self.k, self.polar, self.n, self.speed = float(k), float(polar), int(n), float(speed)
        self.factors = _single(n, k)
        self.m = 1
        self.lo, self.hi = _box(domain, 1)
        self.unit_speed = (speed == 1.0) if unit_speed is None else bool(unit_speed)
        self.declared_identity = self.unit_speed

    def jet(self, u):
        r = 1.0 / math.sqrt(self.k)
        rho = r * math.sin(self.polar)
        ph = self.speed * u[0] / rho
        c, s = math.cos(ph), math.sin(ph)
        x = np.zeros(self.n + 1)
        d1 = np.zeros((1, self.n + 1))
        d2 = np.zeros((1, 1, self.n + 1))
        x[:3] = rho * c, rho * s, r * math.cos(self.polar)
        d1[0, :2] = -self.speed * s, self.speed * c
        d2[0, 0, :2] = -(self.speed ** 2 / rho) * c, -(self.speed ** 2 / rho) * s
        return x, d1, d2

    def to_dict(self):
        return self._base_dict("latitude_circle", k=self.k, polar=self.polar, n=self.n,
                               speed=self.speed, unit_speed=self.unit_speed)


class Hyperbola(Node):
    """Unit-speed geodesic branch in ``H^n_k`` through the first two ambient coordinates."""

    def __init__(self, k: float, n: int = 1, speed: float = 1.0, unit_speed: bool | None = None,
                 domain=((-1.5, 1.5),)):
        if k >= 0:
            raise PreconditionError("a hyperbola primitive needs negative curvature")
        self.k, self.n, self.speed = float(k), int(n), float(speed)
        self.factors = _single(n, k)
        self.m = 1
        self.lo, self.hi = _box(domain, 1)
        self.unit_speed = (speed == 1.0) if unit_speed is None else bool(unit_speed)
        self.declared_identity = self.unit_speed

    def jet(self, u):
        r = 1.0 / math.sqrt(-self.k)
        th = self.speed * u[0] / r
        ch, sh = math.cosh(th), math.sinh(th)
        x = np.zeros(self.n + 1)
        d1 = np.zeros((1, self.n + 1))
        d2 = np.zeros((1, 1, self.n + 1))
        x[:2] = r * ch, r * sh
        d1[0, :2] = self.speed * sh, self.speed * ch
        d2[0, 0, :2] = (self.speed ** 2 / r) * ch, (self.speed ** 2 / r) * sh
        return x, d1, d2

    def to_dict(self):
        return self._base_dict("hyperbola", k=self.k, n=self.n, speed=self.speed,
                               unit_speed=self.unit_speed)


class Line(Node):
    """Affine line ``origin + speed * t * direction`` in ``R^n``."""

    def __init__(self, n: int, direction=None, origin=None, speed: float = 1.0,
                 unit_speed: bool | None = None, domain=((-2.5, 2.5),)):
        self.n = int(n)
        d = np.zeros(self.n) if direction is None else np.asarray(direction, dtype=float)
        if direction is None:
            d[0] = 1.0
        if d.shape != (self.n,) or abs(np.linalg.norm(d) - 1) > 1e-12:
            raise PreconditionError("line direction must be a unit vector of length n")
        self.direction = d
        self.origin = np.zeros(self.n) if origin is None else np.asarray(origin, dtype=float)
        self.speed = float(speed)
        self.factors = _single(n, 0.0)
        self.m = 1
        self.lo, self.hi = _box(domain, 1)
        self.unit_speed = (speed == 1.0) if unit_speed is None else bool(unit_speed)
        self.declared_identity = self.unit_speed

    def jet(self, u):
        x = self.origin + self.speed * u[0] * self.direction
        return x, (self.speed * self.direction)[None, :], np.zeros((1, 1, self.n))

    def to_dict(self):
        return self._base_dict("line", n=self.n, direction=self.direction.tolist(),
                               origin=self.origin.tolist(), speed=self.speed,
                               unit_speed=self.unit_speed)


class Plane(Node):
    """Affine plane spanned by two orthonormal directions in ``R^n``."""

    def __init__(self, n: int, directions=None, origin=None, domain=((-1.0, 1.0), (-1.0, 1.0))):
        self.n = int(n)
        if directions is None:
            if self.n < 2:
                raise PreconditionError("a plane needs n >= 2")
            directions = np.eye(self.n)[:2]
        D = np.asarray(directions, dtype=float)
        if D.shape != (2, self.n) or np.abs(D @ D.T - np.eye(2)).max() > 1e-12:
            raise PreconditionError("plane directions must be two orthonormal vectors")
        self.directions = D
        self.origin = np.zeros(self.n) if origin is None else np.asarray(origin, dtype=float)
        self.factors = _single(n, 0.0)
        self.m = 2
        self.lo, self.hi = _box(domain, 2)
        self.declared_identity = True

    def jet(self, u):
        return self.origin + u @ self.directions, self.directions.copy(), np.zeros((2, 2, self.n))

    def to_dict(self):
        return self._base_dict("plane", n=self.n, directions=self.directions.tolist(),
                               origin=self.origin.tolist())


class Helix(Node):
    """Circular helix in ``R^3`` with radius ``radius`` and rise ``pitch`` per radian."""

    def __init__(self, radius: float = 1.0, pitch: float = 0.5, speed: float = 1.0,
                 unit_speed: bool | None = None, domain=((-2.5, 2.5),)):
        if radius <= 0:
            raise PreconditionError("helix radius must be positive")
        self.radius, self.pitch, self.speed = float(radius), float(pitch), float(speed)
        self.factors = _single(3, 0.0)
        self.m = 1
        self.lo, self.hi = _box(domain, 1)
        self.unit_speed = (speed == 1.0) if unit_speed is None else bool(unit_speed)
        self.declared_identity = self.unit_speed

    def jet(self, u):
        R, h = self.radius, self.pitch
        c = math.hypot(R, h)
        w = self.speed / c
        th = w * u[0]
        co, si = math.cos(th), math.sin(th)
        x = np.array([R * co, R * si, h * th])
        d1 = np.array([[-R * w * si, R * w * co, h * w]])
        d2 = np.array([[[-R * w * w * co, -R * w * w * si, 0.0]]])
        return x, d1, d2

    def to_dict(self):
        return self._base_dict("helix", radius=self.radius, pitch=self.pitch, speed=self.speed,
                               unit_speed=self.unit_speed)


class SpherePatch(Node):
    """Latitude-longitude patch of a 2-sphere inside ``S^n_k``.

    With ``polar = pi/2`` the 2-sphere is a great one (needs ``n >= 2``);
    otherwise it is the small sphere at that polar angle (needs ``n >= 3``).
    """

    def __init__(self, k: float, n: int = 2, polar: float = math.pi / 2,
                 domain=((-1.0, 1.0), (-1.0, 1.0))):
        if k <= 0:
            raise PreconditionError("a sphere patch needs positive curvature")
        great = abs(polar - math.pi / 2) < 1e-15
        if n < (2 if great else 3):
            raise PreconditionError("ambient sphere dimension too small for this patch")
        if not 0 < polar < math.pi:
            raise PreconditionError("polar angle must lie in (0, pi)")
        self.k, self.n, self.polar = float(k), int(n), float(polar)
        self.great = great
        self.factors = _single(n, k)
        self.m = 2
        self.lo, self.hi = _box(domain, 2)
        if self.lo[1] <= -math.pi / 2 or self.hi[1] >= math.pi / 2:
            raise PreconditionError("the latitude parameter must stay inside (-pi/2, pi/2)")

    def jet(self, u):
        r = 1.0 / math.sqrt(self.k)
        rho = r * math.sin(self.polar) if not self.great else r
        a, b = u
        ca, sa, cb, sb = math.cos(a), math.sin(a), math.cos(b), math.sin(b)
        x = np.zeros(self.n + 1)
        d1 = np.zeros((2, self.n + 1))
        d2 = np.zeros((2, 2, self.n + 1))
        x[:3] = rho * cb * ca, rho * cb * sa, rho * sb
        if not self.great:
            x[3] = r * math.cos(self.polar)
        d1[0, :3] = -rho * cb * sa, rho * cb * ca, 0.0
        d1[1, :3] = -rho * sb * ca, -rho * sb * sa, rho * cb
        d2[0, 0, :3] = -rho * cb * ca, -rho * cb * sa, 0.0
        d2[0, 1, :3] = rho * sb * sa, -rho * sb * ca, 0.0
        d2[1, 0] = d2[0, 1]
        d2[1, 1, :3] = -rho * cb * ca, -rho * cb * sa, -rho * sb
        return x, d1, d2

    def to_dict(self):
        return self._base_dict("sphere_patch", k=self.k, n=self.n, polar=self.polar)


class HyperbolicPatch(Node):
    """Patch of a totally geodesic hyperbolic plane inside ``H^n_k``."""

    def __init__(self, k: float, n: int = 2, domain=((-1.0, 1.0), (-1.0, 1.0))):
        if k >= 0:
            raise PreconditionError("a hyperbolic patch needs negative curvature")
        if n < 2:
            raise PreconditionError("a hyperbolic patch needs n >= 2")
        self.k, self.n = float(k), int(n)
        self.factors = _single(n, k)
        self.m = 2
        self.lo, self.hi = _box(domain, 2)

    def jet(self, u):
        r = 1.0 / math.sqrt(-self.k)
        a, b = u
        ca, sa, cb, sb = math.cosh(a), math.sinh(a), math.cosh(b), math.sinh(b)
        x = np.zeros(self.n + 1)
        d1 = np.zeros((2, self.n + 1))
        d2 = np.zeros((2, 2, self.n + 1))
        x[:3] = r * cb * ca, r * cb * sa, r * sb
        d1[0, :3] = r * cb * sa, r * cb * ca, 0.0
        d1[1, :3] = r * sb * ca, r * sb * sa, r * cb
        d2[0, 0, :3] = r * cb * ca, r * cb * sa, 0.0
        d2[0, 1, :3] = r * sb * sa, r * sb * ca, 0.0
        d2[1, 0] = d2[0, 1]
        d2[1, 1, :3] = r * cb * ca, r * cb * sa, r * sb
        return x, d1, d2

    def to_dict(self):
        return self._base_dict("hyperbolic_patch", k=self.k, n=self.n)


# ---------------------------------------------------------------- combinators


def _same_factor(a: SpaceForm, b: SpaceForm, tol=1e-12) -> bool:
    return a.n == b.n and abs(a.k - b.k) <= tol * max(1.0, abs(a.k), abs(b.k))


class Slice(Node):
    """Immersion into one factor, with every other factor held at a fixed point."""

    def __init__(self, factors: Sequence[SpaceForm], i: int, fixed: Sequence, inner: Node):
        factors = tuple(factors)
        if not 1 <= i <= len(factors):
            raise PreconditionError("slice factor index out of range")
        if len(inner.factors) != 1 or not _same_factor(inner.factors[0], factors[i - 1]):
            raise PreconditionError("slice inner immersion must target the chosen factor")
        others = [j for j in range(len(factors)) if j != i - 1]
        fixed = [np.atleast_1d(np.asarray(z, dtype=float)) for z in fixed]
        if len(fixed) != len(others):
            raise DimensionError(f"need {len(others)} fixed blocks, got {len(fixed)}")
        for z, j in zip(fixed, others):
            if z.shape != (factors[j].block_dim,):
                raise DimensionError(f"fixed block for factor {j + 1} has the wrong length")
        self.factors = factors
        self.i = int(i)
        self.fixed = fixed
        self.inner = inner
        self.m = inner.m
        self.lo, self.hi = inner.lo, inner.hi
        self.declared_identity = inner.declared_identity
        self._space = ProductSpace(factors, allow_single=True)

    def jet(self, u):
        N, m = self._space.N, self.m
        x = np.zeros(N)
        d1 = np.zeros((m, N))
        d2 = np.zeros((m, m, N))
        j = 0
        for idx, b in enumerate(self._space.blocks):
            if idx == self.i - 1:
                xi, d1i, d2i = self.inner.jet(u)
                x[b], d1[:, b], d2[:, :, b] = xi, d1i, d2i
            else:
                x[b] = self.fixed[j]
                j += 1
        return x, d1, d2

    def to_dict(self):
        return {"op": "slice", "factor": self.i, "fixed": [z.tolist() for z in self.fixed],
                "inner": self.inner.to_dict()}


class Product(Node):
    """Product of immersions into complementary groups of factors.

    ``partition`` lists the 1-based factor indices of each group; group
    ``j`` receives the next ``parts[j].m`` parameters.  A single group just
    wraps its part.
    """

    def __init__(self, partition: Sequence[Sequence[int]], parts: Sequence[Node]):
        partition = [sorted(int(i) for i in grp) for grp in partition]
        flat = sorted(i for grp in partition for i in grp)
        ell = len(flat)
        if flat != list(range(1, ell + 1)):
            raise PreconditionError("partition must cover every factor exactly once")
        if len(parts) != len(partition) or not parts:
            raise PreconditionError("a product needs one part per group")
        factors: list = [None] * ell
        for grp, part in zip(partition, parts):
            if len(part.factors) != len(grp):
                raise PreconditionError("part does not target its group of factors")
            for i, f in zip(grp, part.factors):
                factors[i - 1] = f
        self.factors = tuple(factors)
        self.partition = partition
        self.parts = list(parts)
        self.m = sum(p.m for p in parts)
        if self.m > 2:
            raise PreconditionError("only immersions of dimension 1 or 2 are supported")
        self.lo = np.concatenate([p.lo for p in parts])
        self.hi = np.concatenate([p.hi for p in parts])
        self.declared_identity = all(p.declared_identity for p in parts)
        self._space = ProductSpace(self.factors, allow_single=True)

    def jet(self, u):
        N, m = self._space.N, self.m
        x = np.zeros(N)
        d1 = np.zeros((m, N))
        d2 = np.zeros((m, m, N))
        off = 0
        for grp, part in zip(self.partition, self.parts):
            sl = slice(off, off + part.m)
            xp, d1p, d2p = part.jet(u[sl])
            cols = np.concatenate([np.arange(self._space.blocks[i - 1].start,
                                             self._space.blocks[i - 1].stop) for i in grp])
            x[cols] = xp
            d1[sl][:, cols] = d1p
            d2[sl, sl][:, :, cols] = d2p
            off += part.m
        return x, d1, d2

    def to_dict(self):
        return {"op": "product", "partition": self.partition,
                "parts": [p.to_dict() for p in self.parts]}


class WeightedSum(Node):
    """``(a_1 f_1, ..., a_l f_l)`` for immersions ``f_i`` of a common domain.

    Part ``i`` targets ``O^{n_i}`` with curvature ``kt_i``; the sum lands in the
    product whose ``i``-th factor has curvature ``kt_i / a_i^2``.
    """

    def __init__(self, weights: Sequence[float], parts: Sequence[Node]):
        a = np.asarray(weights, dtype=float)
        if a.ndim != 1 or len(a) != len(parts) or len(a) < 2:
            raise WeightError("need one weight per part and at least two parts")
        if np.any(a <= 0):
            raise WeightError("weights must be positive")
        if abs(float(np.sum(a * a)) - 1.0) > WEIGHT_TOL:
            raise WeightError(f"squared weights sum to {float(np.sum(a * a))!r}, not 1")
        ms = {p.m for p in parts}
        if len(ms) != 1:
            raise PreconditionError("weighted-sum parts must share the parameter dimension")
        for p in parts:
            if len(p.factors) != 1:
                raise PreconditionError("weighted-sum parts must target a single space form")
        self.weights = a
        self.parts = list(parts)
        self.m = ms.pop()
        self.factors = tuple(SpaceForm(p.factors[0].n, p.factors[0].k / w ** 2)
                             for p, w in zip(parts, a))
        self.lo = np.max([p.lo for p in parts], axis=0)
        self.hi = np.min([p.hi for p in parts], axis=0)
        if np.any(self.hi <= self.lo):
            raise PreconditionError("weighted-sum parts have disjoint domains")
        self.declared_identity = all(p.declared_identity for p in parts)

    def jet(self, u):
        xs, d1s, d2s = zip(*(p.jet(u) for p in self.parts))
        a = self.weights
        return (np.concatenate([w * x for w, x in zip(a, xs)]),
                np.concatenate([w * d for w, d in zip(a, d1s)], axis=-1),
                np.concatenate([w * d for w, d in zip(a, d2s)], axis=-1))

    def to_dict(self):
        return {"op": "weighted_sum", "weights": self.weights.tolist(),
                "parts": [p.to_dict() for p in self.parts]}


def _check_block_isometry(f: SpaceForm, L: np.ndarray, tol=1e-10):
    sig = f.signature
    if L.shape != (f.block_dim, f.block_dim):
        raise DimensionError("block map has the wrong size")
    if np.abs(L.T @ (sig[:, None] * L) - np.diag(sig)).max() > tol:
        raise PreconditionError("block map does not preserve the block metric")
    if f.lorentzian and L[0, 0] <= 0:
        raise PreconditionError("block map swaps the sheets of the hyperboloid")


class BlockIsometry(Node):
    """Post-compose with one ambient isometry per block (plus shifts on flat blocks)."""

    def __init__(self, inner: Node, maps: Sequence | None = None, shifts: Sequence | None = None):
        ell = len(inner.factors)
        maps = [None] * ell if maps is None else list(maps)
        shifts = [None] * ell if shifts is None else list(shifts)
        if len(maps) != ell or len(shifts) != ell:
            raise DimensionError("need one map and one shift entry per factor")
        self.maps, self.shifts = [], []
        for f, L, s in zip(inner.factors, maps, shifts):
            L = np.eye(f.block_dim) if L is None else np.asarray(L, dtype=float)
            _check_block_isometry(f, L)
            s = np.zeros(f.block_dim) if s is None else np.asarray(s, dtype=float)
            if f.curved and np.any(s != 0):
                raise PreconditionError("only flat blocks may be translated")
            self.maps.append(L)
            self.shifts.append(s)
        self.inner = inner
        self.factors = inner.factors
        self.m = inner.m
        self.lo, self.hi = inner.lo, inner.hi
        self.declared_identity = inner.declared_identity
        self._space = ProductSpace(self.factors, allow_single=True)

    @property
    def matrix(self) -> np.ndarray:
        from scipy.linalg import block_diag
        return block_diag(*self.maps)

    def jet(self, u):
        x, d1, d2 = self.inner.jet(u)
        x, d1, d2 = x.copy(), d1.copy(), d2.copy()
        for b, L, s in zip(self._space.blocks, self.maps, self.shifts):
            x[b] = L @ x[b] + s
            d1[:, b] = d1[:, b] @ L.T
            d2[:, :, b] = d2[:, :, b] @ L.T
        return x, d1, d2

    def to_dict(self):
        return {"op": "isometry", "maps": [L.tolist() for L in self.maps],
                "shifts": [s.tolist() for s in self.shifts], "inner": self.inner.to_dict()}


def geodesic_weights(ks: Sequence[float]) -> tuple[np.ndarray, float]:
    """Weights and model curvature of the totally geodesic diagonal embedding.

    For curvatures ``k_1..k_l`` of one sign, ``M_i`` is the product of the
    other curvatures, ``lam = sum(M_i)``, ``a_i = sqrt(M_i / lam)`` and the
    model curvature is ``prod(k) / lam``.
    """
    k = np.asarray(ks, dtype=float)
    if len(k) < 2:
        raise PreconditionError("need at least two curvatures")
    if np.any(k == 0):
        from .errors import SignError
        raise SignError("all curvatures must be nonzero")
    if not (np.all(k > 0) or np.all(k < 0)):
        from .errors import SignError
        raise SignError("all curvatures must share one sign")
    M = np.array([np.prod(np.delete(k, i)) for i in range(len(k))])
    lam = M.sum()
    a = np.sqrt(M / lam)
    kt = float(np.prod(k) / lam)
    return a, kt


class SpecialGeodesic(WeightedSum):
    """Composite of an immersion into the model space form with the diagonal geodesic embedding.

    ``inner`` maps into ``O^n_kt`` with ``kt`` the model curvature of ``ks``;
    each copy is moved by the block isometry ``T_i`` and scaled by ``a_i``.
    """

    def __init__(self, ks: Sequence[float], inner: Node, maps: Sequence | None = None):
        a, kt = geodesic_weights(ks)
        if len(inner.factors) != 1 or not _same_factor(inner.factors[0], SpaceForm(inner.factors[0].n, kt)):
            raise PreconditionError(f"inner immersion must target the model curvature {float(kt)!r}")
        maps = [None] * len(a) if maps is None else list(maps)
        if len(maps) != len(a):
            raise DimensionError("need one block isometry per factor")
        self.ks = [float(k) for k in ks]
        self.inner = inner
        self.kt = kt
        parts = [BlockIsometry(inner, [L]) for L in maps]
        a = a / math.sqrt(float(np.sum(a * a)))
        super().__init__(a, parts)
        self.factors = tuple(SpaceForm(inner.factors[0].n, k) for k in self.ks)

    def to_dict(self):
        return {"op": "special_geodesic", "k": self.ks,
                "maps": [p.maps[0].tolist() for p in self.parts], "inner": self.inner.to_dict()}
