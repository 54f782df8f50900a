"""Jets, frames and local differential geometry of sampled immersions.

Conventions used throughout the package:

* tangent indices refer to the coordinate basis ``d/du^a`` of the parameter box;
* normal indices refer to an orthonormal frame ``xi_alpha`` of the normal
  bundle of ``f`` inside the product, built by Gram-Schmidt from projected
  ambient basis vectors;
* ``Gamma[c, a, b]`` is the Christoffel symbol with upper index ``c``;
* ``omega[c, alpha, beta] = <D_c xi_beta, xi_alpha>`` is the normal connection
  form along ``d/du^c``;
* ``alpha[alpha, a, b]`` are the normal components of the second fundamental
  form, ``R[i, a, b] = <pi_i d_a f, d_b f>``, ``S[i, alpha, b] = <pi_i d_b f,
  xi_alpha>`` and ``T[i, alpha, beta] = <pi_i xi_alpha, xi_beta>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .ambient import ProductSpace, tangent_projection
from .errors import (DegenerateImmersionError, DimensionError, FrameContinuationError,
                     FrameError, PreconditionError)
from .nodes import Node

FRAME_NORM_TOL = 1e-6
OVERLAP_TOL = 0.9
DEFAULT_STEP = 1e-4


class Immersion:
    """An immersion node together with the product space it maps into."""

    def __init__(self, space: ProductSpace, node: Node):
        if len(node.factors) != space.ell:
            raise DimensionError("immersion targets a different number of factors")
        for a, b in zip(node.factors, space.factors):
            if a.n != b.n or abs(a.k - b.k) > 1e-9 * max(1.0, abs(b.k)):
                raise DimensionError(f"immersion targets {node.factors}, not {space.factors}")
        self.space = space
        self.node = node

    @property
    def m(self) -> int:
        return self.node.m

    @property
    def p(self) -> int:
        """Rank of the normal bundle inside the product."""
        return self.space.dim - self.m

    @property
    def domain(self) -> list[tuple[float, float]]:
        return self.node.domain

    def __repr__(self):
        return f"Immersion({self.space!r}, {type(self.node).__name__})"

    def to_dict(self) -> dict:
        return {"space": self.space.to_dict(), "immersion": self.node.to_dict()}


@dataclass
class Jet2:
    """Value, first and second parameter derivatives in ambient coordinates."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    declared_identity: bool = False

    @property
    def m(self) -> int:
        return self.d1.shape[0]


def _in_domain(imm: Immersion, u: np.ndarray, margin: float = 0.0) -> bool:
    lo, hi = imm.node.lo, imm.node.hi
    slack = 1e-12 * (1.0 + np.abs(lo) + np.abs(hi))
    return bool(np.all(u >= lo + margin - slack) and np.all(u <= hi - margin + slack))


def _as_param(imm: Immersion, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (imm.m,):
        raise DimensionError(f"parameter must have length {imm.m}")
    return u


def eval_jet(spec: Immersion, u) -> Jet2:
    """Exact 2-jet of the immersion at the parameter ``u``."""
    u = _as_param(spec, u)
    if not _in_domain(spec, u):
        raise PreconditionError(f"parameter {u} lies outside the domain {spec.domain}")
    x, d1, d2 = spec.node.jet(u)
    return Jet2(np.asarray(x, float), np.asarray(d1, float), np.asarray(d2, float),
                spec.node.declared_identity)


def induced_metric(jet: Jet2, space: ProductSpace) -> np.ndarray:
    """First fundamental form ``g_ab = <d_a f, d_b f>``."""
    g = jet.d1 @ (space.eta * jet.d1).T
    g = 0.5 * (g + g.T)
    if np.linalg.eigvalsh(g)[0] <= 1e-12 * max(1.0, np.abs(g).max()):
        raise DegenerateImmersionError("induced metric is not positive definite")
    if jet.declared_identity and np.abs(g - np.eye(len(g))).max() > 1e-9:
        raise DegenerateImmersionError(
            "immersion was declared isometric to the flat unit metric but is not")
    return g


def christoffels_from_jet(jet: Jet2, space: ProductSpace, g: np.ndarray | None = None) -> np.ndarray:
    """Levi-Civita symbols of the induced metric from the exact metric derivatives."""
    if g is None:
        g = induced_metric(jet, space)
    d1e = space.eta * jet.d1
    # dg[c, a, b] = d_c g_ab
    h = np.einsum("can,bn->cab", jet.d2, d1e)
    dg = h + h.transpose(0, 2, 1)
    lowered = 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)  # [d, a, b]
    return np.einsum("cd,dab->cab", np.linalg.inv(g), lowered)


def christoffels(spec: Immersion, u, h: float = DEFAULT_STEP) -> np.ndarray:
    """Christoffel symbols ``Gamma[c, a, b]`` of the induced metric at ``u``."""
    u = _as_param(spec, u)
    if not _in_domain(spec, u, margin=h):
        raise PreconditionError("parameter too close to the domain boundary")
    return christoffels_from_jet(eval_jet(spec, u), spec.space)


def _gram_schmidt_tangent(space: ProductSpace, d1: np.ndarray):
    m = d1.shape[0]
    frame = np.zeros_like(d1)
    coeff = np.zeros((m, m))  # frame[b] = sum_a coeff[a, b] d1[a]
    for b in range(m):
        v = d1[b].copy()
        c = np.zeros(m)
        c[b] = 1.0
        for _ in range(2):
            for a in range(b):
                proj = space.inner(v, frame[a])
                v -= proj * frame[a]
                c -= proj * coeff[:, a]
        nrm = np.sqrt(space.inner(v, v))
        frame[b] = v / nrm
        coeff[:, b] = c / nrm
    return frame, coeff


def _normals(space: ProductSpace, x, tangent, order, want, strict):
    accepted, chosen = [], []
    for j in order:
        e = np.zeros(space.N)
        e[j] = 1.0
        v = tangent_projection(space, x, e)
        for _ in range(2):
            for t in tangent:
                v -= space.inner(v, t) * t
            for w in accepted:
                v -= space.inner(v, w) * w
        nsq = space.inner(v, v)
        if nsq > FRAME_NORM_TOL ** 2:
            accepted.append(v / np.sqrt(nsq))
            chosen.append(int(j))
        elif strict:
            raise FrameContinuationError(
                f"seed {j} degenerates while continuing the normal frame", rank=len(accepted))
        if len(accepted) == want:
            break
    return accepted, chosen


@dataclass
class FramedPoint:
    """Tangent and normal frames of an immersion at one point."""

    jet: Jet2
    tangent: np.ndarray        # (m, N) orthonormal tangent frame
    tangent_coeff: np.ndarray  # (m, m): tangent[b] = sum_a tangent_coeff[a, b] d1[a]
    normal: np.ndarray         # (p, N) orthonormal normal frame inside the product
    nu: np.ndarray             # (ell, N) position normals -k_i pi_i(x)
    selection: tuple[int, ...]

    @property
    def value(self) -> np.ndarray:
        return self.jet.value

    def full_frame(self, space: ProductSpace) -> np.ndarray:
        """Columns ``[d_1 f .. d_m f, xi_1 .. xi_p, nu_j for curved j]`` as an ``N x N`` matrix."""
        cols = [self.jet.d1, self.normal, self.nu[list(space.curved)]]
        return np.concatenate(cols, axis=0).T


def orthonormal_frames(space: ProductSpace, jet: Jet2, seed_order: Sequence[int] | None = None,
                       selection: Sequence[int] | None = None) -> FramedPoint:
    """Orthonormal tangent frame and a deterministic orthonormal normal frame.

    Normal vectors come from ambient basis vectors, taken in ``seed_order``,
    projected onto the tangent space of the product and off the tangent space
    of the immersion.  Passing ``selection`` reuses the seeds chosen at a
    nearby point so the frame varies smoothly.
    """
    induced_metric(jet, space)
    m = jet.m
    p = space.dim - m
    if p < 0:
        raise FrameError("immersion dimension exceeds the dimension of the product", rank=0)
    tangent, coeff = _gram_schmidt_tangent(space, jet.d1)
    nu = np.array([-f.k * space.project(i, jet.value) for i, f in enumerate(space.factors)])
    if selection is not None:
        accepted, chosen = _normals(space, jet.value, tangent, list(selection), p, strict=True)
    else:
        order = range(space.N) if seed_order is None else list(seed_order)
        accepted, chosen = _normals(space, jet.value, tangent, order, p, strict=False)
    if len(accepted) != p:
        raise FrameError(f"found {len(accepted)} of {p} normal vectors", rank=len(accepted))
    normal = np.array(accepted).reshape(p, space.N)
    return FramedPoint(jet, tangent, coeff, normal, nu, tuple(chosen))


class PointGeometry:
    """Pointwise (derivative-free) geometry of an immersion at one parameter value."""

    def __init__(self, spec: Immersion, u, seed_order=None, selection=None):
        self.spec = spec
        self.space = space = spec.space
        self.u = _as_param(spec, u)
        if not _in_domain(spec, self.u):
            raise PreconditionError(f"parameter {self.u} lies outside the domain")
        x, d1, d2 = spec.node.jet(self.u)
        self.jet = Jet2(x, d1, d2, spec.node.declared_identity)
        self.g = induced_metric(self.jet, space)
        self.ginv = np.linalg.inv(self.g)
        self.Gamma = christoffels_from_jet(self.jet, space, self.g)
        self.framed = orthonormal_frames(space, self.jet, seed_order, selection)

    @property
    def x(self):
        return self.jet.value

    @property
    def d1(self):
        return self.jet.d1

    @property
    def xi(self):
        return self.framed.normal

    @property
    def nu(self):
        return self.framed.nu

    @property
    def m(self):
        return self.jet.m

    @property
    def p(self):
        return self.framed.normal.shape[0]

    @cached_property
    def alpha_ambient(self) -> np.ndarray:
        """``alpha_F(d_a, d_b)`` as ambient vectors, shape ``(m, m, N)``."""
        return self.jet.d2 - np.einsum("cab,cn->abn", self.Gamma, self.jet.d1)

    @cached_property
    def alpha(self) -> np.ndarray:
        return np.einsum("abn,qn->qab", self.alpha_ambient, self.space.eta * self.xi)

    @cached_property
    def alpha_nu(self) -> np.ndarray:
        """Coefficients of ``alpha_F`` on each ``nu_i`` (zero for flat factors)."""
        out = np.zeros((self.space.ell, self.m, self.m))
        for i in self.space.curved:
            k = self.space.factors[i].k
            out[i] = np.einsum("abn,n->ab", self.alpha_ambient, self.space.eta * self.nu[i]) / k
        return out

    @cached_property
    def alpha_residual(self) -> float:
        """Mismatch of ``alpha_F`` against its normal and position-normal components."""
        rec = np.einsum("qab,qn->abn", self.alpha, self.xi)
        rec += np.einsum("iab,in->abn", self.alpha_nu, self.nu)
        return float(np.abs(self.alpha_ambient - rec).max())

    @cached_property
    def _projected(self):
        masks = self.space.masks
        eta = self.space.eta
        d1p = masks[:, None, :] * self.d1[None]   # (ell, m, N)
        xip = masks[:, None, :] * self.xi[None]   # (ell, p, N)
        return d1p, xip, eta

    @cached_property
    def R(self) -> np.ndarray:
        d1p, _, eta = self._projected
        return np.einsum("ian,bn->iab", d1p, eta * self.d1)

    @cached_property
    def S(self) -> np.ndarray:
        d1p, _, eta = self._projected
        return np.einsum("ibn,qn->iqb", d1p, eta * self.xi)

    @cached_property
    def T(self) -> np.ndarray:
        _, xip, eta = self._projected
        return np.einsum("iqn,rn->iqr", xip, eta * self.xi)

    @cached_property
    def mean_curvature(self) -> np.ndarray:
        return np.einsum("ab,qab->q", self.ginv, self.alpha) / self.m

    @cached_property
    def shape_mixed(self) -> np.ndarray:
        """Shape operators ``A[beta][a, c]`` acting on coordinate vectors."""
        return np.einsum("ad,qdc->qac", self.ginv, self.alpha)


def second_fundamental(space: ProductSpace, framed: FramedPoint, gamma: np.ndarray):
    """Normal components of the second fundamental form.

    Returns ``(alpha_f, alpha_nu)`` with ``alpha_f[alpha, a, b]`` the component
    along ``xi_alpha`` and ``alpha_nu[i, a, b]`` the coefficient along ``nu_i``.
    """
    jet = framed.jet
    amb = jet.d2 - np.einsum("cab,cn->abn", gamma, jet.d1)
    alpha = np.einsum("abn,qn->qab", amb, space.eta * framed.normal)
    alpha_nu = np.zeros((space.ell, jet.m, jet.m))
    for i in space.curved:
        alpha_nu[i] = np.einsum("abn,n->ab", amb, space.eta * framed.nu[i]) / space.factors[i].k
    rec = np.einsum("qab,qn->abn", alpha, framed.normal) + np.einsum("iab,in->abn", alpha_nu, framed.nu)
    resid = float(np.abs(amb - rec).max())
    if resid > 1e-8 * max(1.0, float(np.abs(amb).max())):
        raise FrameError(f"second fundamental form is not normal (residual {resid:.2e})")
    return alpha, alpha_nu


class Stencil:
    """Geometry sampled at ``u + h * offset`` for small integer offsets.

    Every sample reuses the normal-frame seeds chosen at the centre so that
    finite differences of frame-expressed fields are meaningful.
    """

    def __init__(self, spec: Immersion, u, h: float = DEFAULT_STEP, seed_order=None,
                 selection=None, depth: int = 2):
        self.spec = spec
        self.h = float(h)
        self.u = _as_param(spec, u)
        if not _in_domain(spec, self.u, margin=depth * self.h):
            raise PreconditionError(
                f"parameter {self.u} must be at least {depth}h inside the domain")
        self.m = spec.m
        center = PointGeometry(spec, self.u, seed_order=seed_order, selection=selection)
        self.selection = center.framed.selection
        self._cache = {(0,) * self.m: center}

    @property
    def center(self) -> PointGeometry:
        return self._cache[(0,) * self.m]

    def unit(self, c: int) -> tuple[int, ...]:
        e = [0] * self.m
        e[c] = 1
        return tuple(e)

    @staticmethod
    def shift(offset, c, s):
        o = list(offset)
        o[c] += s
        return tuple(o)

    def at(self, offset) -> PointGeometry:
        key = tuple(int(o) for o in offset)
        geo = self._cache.get(key)
        if geo is None:
            u = self.u + self.h * np.array(key, dtype=float)
            geo = PointGeometry(self.spec, u, selection=self.selection)
            c = self.center
            if c.p:
                overlap = np.linalg.det(geo.xi @ (c.space.eta * c.xi).T)
                if overlap < OVERLAP_TOL:
                    raise FrameContinuationError(
                        f"normal frame overlap {overlap:.3f} below {OVERLAP_TOL}")
            self._cache[key] = geo
        return geo

    def diff(self, fn, c: int, offset=None) -> np.ndarray:
        """Central difference of ``fn(geometry)`` along parameter ``c``."""
        offset = (0,) * self.m if offset is None else tuple(offset)
        plus = fn(self.at(self.shift(offset, c, 1)))
        minus = fn(self.at(self.shift(offset, c, -1)))
        return (plus - minus) / (2.0 * self.h)

    def grad(self, fn, offset=None) -> np.ndarray:
        """Stack of central differences along every parameter, leading axis ``c``."""
        return np.stack([self.diff(fn, c, offset) for c in range(self.m)])

    def frame_derivative(self, offset=None) -> np.ndarray:
        """``D_c xi_beta`` as ambient vectors, shape ``(m, p, N)``."""
        return self.grad(lambda g: g.xi, offset)

    def omega(self, offset=None) -> np.ndarray:
        """Normal connection form ``omega[c, alpha, beta]`` at a stencil point."""
        offset = (0,) * self.m if offset is None else tuple(offset)
        key = ("omega", offset)
        if key not in self._cache:
            geo = self.at(offset)
            dxi = self.frame_derivative(offset)
            self._cache[key] = np.einsum("cbn,an->cab", dxi, geo.space.eta * geo.xi)
        return self._cache[key]

    def d_omega(self, offset=None) -> np.ndarray:
        """``d_e omega_c`` with shape ``(m, m, p, p)`` (leading index ``e``)."""
        offset = (0,) * self.m if offset is None else tuple(offset)
        return np.stack([(self.omega(self.shift(offset, e, 1)) - self.omega(self.shift(offset, e, -1)))
                         / (2.0 * self.h) for e in range(self.m)])

    def normal_curvature(self, offset=None) -> np.ndarray:
        """Curvature of the normal connection, ``Omega[a, b, alpha, beta]``."""
        om = self.omega(offset)
        dom = self.d_omega(offset)
        out = dom - dom.transpose(1, 0, 2, 3)
        out += np.einsum("axy,byz->abxz", om, om) - np.einsum("bxy,ayz->abxz", om, om)
        return out


def riemann(spec: Immersion, u, h: float = DEFAULT_STEP) -> np.ndarray:
    """Riemann tensor ``Rm[d, c, a, b]`` with ``R(d_a, d_b) d_c = Rm[d, c, a, b] d_d``.

    Derivatives of the exact Christoffel symbols are taken by central differences.
    """
    u = _as_param(spec, u)
    if not _in_domain(spec, u, margin=h):
        raise PreconditionError("parameter too close to the domain boundary")
    m = spec.m
    gam = christoffels(spec, u, h)
    dgam = np.zeros((m,) * 4)
    for e in range(m):
        du = np.zeros(m)
        du[e] = h
        dgam[e] = (christoffels_from_jet(eval_jet(spec, u + du), spec.space)
                   - christoffels_from_jet(eval_jet(spec, u - du), spec.space)) / (2 * h)
    return riemann_from_christoffels(gam, dgam)


def riemann_from_christoffels(gam: np.ndarray, dgam: np.ndarray) -> np.ndarray:
    """Curvature from Christoffel symbols and their derivatives ``dgam[e, c, a, b]``."""
    out = np.einsum("adbc->dcab", dgam) - np.einsum("bdac->dcab", dgam)
    out += np.einsum("dae,ebc->dcab", gam, gam) - np.einsum("dbe,eac->dcab", gam, gam)
    return out


def normal_connection(spec: Immersion, u, h: float = DEFAULT_STEP, seed_order=None):
    """Normal connection form and shape operators at ``u``.

    Returns ``(omega, A)`` where ``omega[alpha, beta, c] = <D_c xi_beta, xi_alpha>``
    and ``A[beta]`` is the (coordinate, lowered) matrix
    ``A[beta][c, b] = -<D_c xi_beta, d_b f>``.  Both come from central
    differences of the normal frame field.
    """
    st = Stencil(spec, u, h, seed_order=seed_order, depth=1)
    geo = st.center
    dxi = st.frame_derivative()
    omega = np.einsum("cbn,an->abc", dxi, geo.space.eta * geo.xi)
    A = -np.einsum("cbn,dn->bcd", dxi, geo.space.eta * geo.d1)
    return omega, A


def sample_grid(spec: Immersion, points, seed_order=None) -> list[PointGeometry]:
    """Pointwise geometry at every parameter value.

    The seed choice of the first point is reused while it stays usable, and
    renewed where it degenerates.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise PreconditionError("no sample points")
    first = PointGeometry(spec, points[0], seed_order=seed_order)
    out = [first]
    selection = first.framed.selection
    for u in points[1:]:
        try:
            geo = PointGeometry(spec, u, selection=selection)
        except FrameError:
            geo = PointGeometry(spec, u, seed_order=seed_order)
            selection = geo.framed.selection
        out.append(geo)
    return out
