"""Building blocks of immersions into products and detectors that recognise them.

Constructors assemble slices, products, weighted sums and composites with
the diagonal totally geodesic embedding.  Detectors read sampled split
tensors and decide which construction, if any, produced an immersion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .ambient import ProductSpace, SpaceForm
from .calculus import ResidualReport, SplitTensors, split_tensors
from .codim import first_normal, subbundle_derivative
from .errors import HypothesisError, NotDiagonalSubspaceError, PreconditionError, SignError
from .grid import Grid
from .jets import DEFAULT_STEP, Immersion, PointGeometry, Stencil, sample_grid
from .nodes import (BlockIsometry, Circle, HyperbolicPatch, Hyperbola, Helix, LatitudeCircle, Line,
                    Node, Product, Slice, SpecialGeodesic, SpherePatch, WeightedSum, geodesic_weights)

DETECT_TOL = 1e-6


# --------------------------------------------------------------- constructors


def make_slice(space: ProductSpace, i: int, fixed: Sequence, inner: Node) -> Immersion:
    """Immersion into factor ``i`` with the other factors frozen at the blocks ``fixed``."""
    return Immersion(space, Slice(space.factors, i, fixed, inner))


def make_product(space: ProductSpace, partition: Sequence[Sequence[int]], parts: Sequence[Node]) -> Immersion:
    """Product of immersions into the groups of factors listed in ``partition``."""
    return Immersion(space, Product(partition, parts))


def make_weighted_sum(weights: Sequence[float], parts: Sequence[Node],
                      space: ProductSpace | None = None) -> Immersion:
    """``(a_1 f_1, ..., a_l f_l)``; the target factors have curvature ``kt_i / a_i^2``."""
    node = WeightedSum(weights, parts)
    if space is None:
        space = ProductSpace(node.factors)
    return Immersion(space, node)


def make_special_geodesic(ks: Sequence[float], maps: Sequence | None = None):
    """Diagonal totally geodesic embedding of the model space form.

    Returns ``(factory, weights, model_curvature)`` where ``factory(inner)``
    composes an immersion into the model space form with the embedding.
    """
    weights, kt = geodesic_weights(ks)

    def factory(inner: Node) -> Immersion:
        node = SpecialGeodesic(ks, inner, maps)
        return Immersion(ProductSpace(node.factors), node)

    return factory, weights, kt


def compose_isometry(spec: Immersion, maps=None, shifts=None) -> Immersion:
    """Post-compose an immersion with block isometries and flat-block translations."""
    return Immersion(spec.space, BlockIsometry(spec.node, maps, shifts))


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# ------------------------------------------------------------------ catalogue


@dataclass
class GalleryEntry:
    name: str
    spec: Immersion
    description: str
    counts: tuple

    def grid(self, counts=None) -> Grid:
        return Grid.inside(self.spec.domain, counts or self.counts)


def catalogue() -> dict[str, GalleryEntry]:
    """Representative immersions covering curves and surfaces, two and three factors,
    mixed curvature signs and flat factors."""
    h = 1 / math.sqrt(2)
    a3, b3 = math.sqrt(1 / 3), math.sqrt(2 / 3)
    s11 = ProductSpace([(1, 1.0), (1, 1.0)])
    out = {}

    def add(name, spec, desc, counts):
        out[name] = GalleryEntry(name, spec, desc, counts)

    add("slice_circle", make_slice(s11, 2, [[1.0, 0.0]], Circle(1.0)),
        "great circle in the second factor of S1 x S1", (60,))
    add("flat_torus", make_product(s11, [[1], [2]], [Circle(1.0), Circle(1.0)]),
        "Clifford-type torus S1 x S1", (8, 8))
    add("circle_sum", make_weighted_sum([h, h], [Circle(0.5), Circle(0.5)]),
        "equal-weight sum of circles of radius sqrt 2", (60,))
    add("circle_sum_unequal", make_weighted_sum([a3, b3], [Circle(1 / 3), Circle(2 / 3)]),
        "unequal-weight sum of circles", (60,))
    add("chirped_sum", make_weighted_sum([h, h], [Circle(0.5), Circle(0.5, accel=0.2)]),
        "equal-weight sum of a circle and a circle with increasing speed", (60,))
    add("hyperbola_circle",
        make_product(ProductSpace([(1, -1.0), (1, 1.0)]), [[1], [2]], [Hyperbola(-1.0), Circle(1.0)]),
        "hyperbola times circle in H1 x S1", (8, 8))
    add("latitude_line", make_weighted_sum([b3, a3], [LatitudeCircle(2 / 3, 1.0), Line(1)]),
        "latitude circle combined with a line in S2 x R", (60,))
    add("latitude_pair",
        make_product(ProductSpace([(2, 1.0), (2, 1.0)]), [[1], [2]],
                     [LatitudeCircle(1.0, 1.0), LatitudeCircle(1.0, 0.7)]),
        "product of latitude circles in S2 x S2", (8, 8))
    factory, _, _ = make_special_geodesic([1.0, 2.0, 2.0])
    add("geodesic_sphere", factory(SpherePatch(0.5)),
        "diagonal totally geodesic 2-sphere in S2 x S2_2 x S2_2", (8, 8))
    add("mixed_three",
        make_product(ProductSpace([(2, 1.0), (1, -1.0), (1, 0.0)]), [[1], [2, 3]],
                     [LatitudeCircle(1.0, 1.0), WeightedSum([b3, a3], [Hyperbola(-2 / 3), Line(1)])]),
        "latitude circle times a hyperbola-line sum in S2 x H1 x R", (8, 8))
    add("helix_slice",
        make_slice(ProductSpace([(3, 0.0), (1, 1.0)]), 1, [[0.0, 1.0]], Helix(1.0, 0.5)),
        "helix in R3 frozen in S1", (60,))
    add("hyperbolic_plane_slice",
        make_slice(ProductSpace([(2, -1.0), (1, 1.0)]), 1, [[1.0, 0.0]], HyperbolicPatch(-1.0)),
        "totally geodesic hyperbolic plane in H2 x S1", (8, 8))
    add("small_sphere_sum",
        make_weighted_sum([h, h], [SpherePatch(0.5, 3, 1.0), SpherePatch(0.5, 3, 1.0)]),
        "equal-weight sum of small 2-spheres in S3 x S3", (8, 8))
    return out


# ------------------------------------------------------------------ detection


@dataclass
class Verdict:
    kind: str                      # "slice", "weighted_sum", "product" or "none"
    factor: int | None = None
    weights: np.ndarray | None = None
    partition: list | None = None
    evidence: ResidualReport = field(default_factory=ResidualReport)

    def describe(self) -> str:
        if self.kind == "slice":
            return f"slice({self.factor})"
        if self.kind == "weighted_sum":
            return "weighted_sum(" + ", ".join(f"{w:.12g}" for w in self.weights) + ")"
        if self.kind == "product":
            return "product(" + " | ".join(",".join(map(str, g)) for g in self.partition) + ")"
        return "none"

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "verdict": self.describe()}
        if self.factor is not None:
            d["factor"] = self.factor
        if self.weights is not None:
            d["weights"] = [float(w) for w in self.weights]
        if self.partition is not None:
            d["partition"] = self.partition
        d["evidence"] = self.evidence.to_dict()
        return d


def _as_split(space: ProductSpace, samples) -> list[SplitTensors]:
    out = []
    for s in samples:
        out.append(s if isinstance(s, SplitTensors) else split_tensors(space, s.framed))
    if not out:
        raise PreconditionError("detection needs at least one sample")
    return out


def detect(space: ProductSpace, samples, tol: float = DETECT_TOL) -> Verdict:
    """Classify sampled split tensors as a slice, a weighted sum or a product.

    ``samples`` holds :class:`SplitTensors` or :class:`PointGeometry` objects
    from one immersion.  Tests run in that order and the first match wins.
    """
    sts = _as_split(space, samples)
    ell, m = space.ell, sts[0].m
    I = np.eye(m)
    ev = ResidualReport()

    for i in range(ell):
        r = max(float(np.abs(st.R[i] - I).max()) for st in sts)
        ev.add(f"slice_{i + 1}", r, tol)
        if r <= tol:
            return Verdict("slice", factor=i + 1, evidence=ev)

    c = np.array([np.trace(sts[0].R[i]) / m for i in range(ell)])
    r = max(float(np.abs(st.R[i] - c[i] * I).max()) for st in sts for i in range(ell))
    inside = float(max(0.0, tol - c.min(), c.max() - (1 - tol)))
    ev.add("weighted_sum_scalar", r, tol)
    ev.add("weighted_sum_interior", inside, 0.0)
    if r <= tol and inside == 0.0:
        return Verdict("weighted_sum", weights=np.sqrt(c), evidence=ev)

    for size in range(1, ell):
        for grp in combinations(range(ell), size):
            if 0 not in grp:
                continue
            rest = [j for j in range(ell) if j not in grp]
            label = "product_" + "".join(str(j + 1) for j in grp)
            rS = max(float(np.abs(sum(st.S[j] for j in grp)).max(initial=0.0)) for st in sts)
            kers, proj = set(), 0.0
            for st in sts:
                w = np.linalg.eigvalsh(sum(st.R[j] for j in grp))
                kers.add(int(np.sum(w < 0.5)))
                proj = max(proj, float(np.max(np.minimum(np.abs(w), np.abs(1 - w)))))
            kdim = kers.pop() if len(kers) == 1 else -1
            ev.add(label + "_S", rS, tol)
            ev.add(label + "_projection", proj, tol)
            ev.add(label + "_kernel", 0.0 if 0 < kdim < m else 1.0, 0.0)
            if rS <= tol and proj <= tol and 0 < kdim < m:
                part = [[j + 1 for j in grp], [j + 1 for j in rest]]
                return Verdict("product", partition=part, evidence=ev)
    return Verdict("none", evidence=ev)


# -------------------------------------------------------------- proportionality


@dataclass
class Proportionality:
    proportional: bool
    residual: float
    weights: np.ndarray | None
    model_curvature: float | None
    report: ResidualReport


def check_proportionality(space: ProductSpace, samples: Sequence[PointGeometry],
                          tol: float = DETECT_TOL) -> Proportionality:
    """Test whether ``k_i R_i`` agrees across factors and, if so, its consequences.

    All curvatures must be nonzero.  Under a proportional verdict the report
    checks the scalar form of each ``R_i``, the common sign of the
    curvatures, that each factor projection is a similarity on tangent
    vectors, the norm split of the position vector and the orthogonality of
    the second fundamental form to the images of the ``S_i``.
    """
    k = space.k
    if np.any(k == 0):
        raise PreconditionError("proportionality needs every factor to be curved")
    rep = ResidualReport()
    resid = 0.0
    for geo in samples:
        kR = k[:, None, None] * geo.R
        resid = max(resid, float(np.abs(kR[:, None] - kR[None, :]).max()))
    rep.add("proportional", resid, tol)
    if resid > tol:
        return Proportionality(False, resid, None, None, rep)
    rep.add("same_sign", 0.0 if (np.all(k > 0) or np.all(k < 0)) else 1.0, 0.0)
    if not rep["same_sign"].passed:
        return Proportionality(True, resid, None, None, rep)
    a, kt = geodesic_weights(k)
    lam = a * a
    r_scalar = r_sim = r_norm = r_perp = 0.0
    sp = space
    for geo in samples:
        g = geo.g
        r_scalar = max(r_scalar, float(np.abs(geo.R - lam[:, None, None] * g).max()))
        for i in range(sp.ell):
            pd = sp.project(i, geo.d1)
            r_sim = max(r_sim, float(np.abs(pd @ (sp.eta * pd).T - lam[i] * g).max()))
            px = sp.project(i, geo.x)
            r_norm = max(r_norm, abs(float(sp.inner(px, px) - lam[i] * sp.inner(geo.x, geo.x))))
        r_perp = max(r_perp, float(np.abs(np.einsum("qab,iqc->iabc", geo.alpha, geo.S)).max(initial=0.0)))
    rep.add("scalar_R", r_scalar, tol)
    rep.add("similarity", r_sim, tol)
    rep.add("position_split", r_norm, tol)
    rep.add("alpha_perp_S", r_perp, tol)
    return Proportionality(True, resid, a, kt, rep)


# ------------------------------------------------ factorisation through the diagonal


GRAM_TOL = 1e-8


def _indefinite_gram_schmidt(vectors: np.ndarray, metric: np.ndarray, timelike: bool) -> np.ndarray:
    """Coefficient matrix ``C`` with ``C.T @ metric @ C`` the model signature.

    ``vectors`` are coefficient columns; with ``timelike`` the most timelike
    column is processed first.
    """
    d = vectors.shape[1]
    order = list(range(d))
    if timelike:
        norms = np.einsum("ij,ik,kj->j", vectors, metric, vectors)
        first = int(np.argmin(norms))
        if norms[first] >= 0:
            raise NotDiagonalSubspaceError("subspace has no timelike direction")
        order.remove(first)
        order.insert(0, first)
    out = []
    for j in order:
        v = vectors[:, j].copy()
        for _ in range(2):
            for w in out:
                v -= (w @ metric @ v) / (w @ metric @ w) * w
        nsq = v @ metric @ v
        if abs(nsq) < 1e-12:
            raise NotDiagonalSubspaceError("subspace basis is degenerate")
        out.append(v / math.sqrt(abs(nsq)))
    return np.array(out).T


def extract_factor_isometries(V: np.ndarray, ks: Sequence[float]) -> list[np.ndarray]:
    """Block isometries ``T_i`` of a subspace that projects onto each block as a similarity.

    ``V`` is a ``(l * d) x d`` matrix whose columns span the subspace, with
    ``l`` blocks of size ``d``.  Each block projection must scale the metric
    by ``a_i^2`` from :func:`isoprod.nodes.geodesic_weights`.  The columns of
    ``V`` are orthonormalised in order (most timelike first for negative
    curvature) into a map ``G`` and ``T_i = P_i G / a_i``.
    """
    ks = np.asarray(ks, dtype=float)
    a, _ = geodesic_weights(ks)
    V = np.asarray(V, dtype=float)
    ell = len(ks)
    D, d = V.shape
    if D != ell * d:
        raise PreconditionError(f"expected {ell * d} ambient rows for {ell} blocks of size {d}")
    neg = ks[0] < 0
    sig = np.ones(d)
    if neg:
        sig[0] = -1.0
    eta = np.tile(sig, ell)
    GV = V.T @ (eta[:, None] * V)
    blocks = [V[i * d:(i + 1) * d] for i in range(ell)]
    scale = max(1.0, float(np.abs(GV).max()))
    for i, Vi in enumerate(blocks):
        Gi = Vi.T @ (sig[:, None] * Vi)
        if np.abs(Gi - a[i] ** 2 * GV).max() > GRAM_TOL * scale:
            ratio = float(np.sqrt(abs(np.trace(Gi)) / abs(np.trace(GV)))) if np.trace(GV) else 0.0
            raise NotDiagonalSubspaceError(
                f"block {i + 1} projection scales by {ratio:.6g}, expected {a[i]:.6g}")
    C = _indefinite_gram_schmidt(np.eye(d), GV, neg)
    G = V @ C
    if neg:
        tops = np.array([G[i * d, 0] for i in range(ell)])
        if np.all(tops < 0):
            G[:, 0] = -G[:, 0]
        elif not np.all(tops > 0):
            raise NotDiagonalSubspaceError("blocks disagree on the sheet of the hyperboloid")
    Ts = []
    for i in range(ell):
        T = G[i * d:(i + 1) * d] / a[i]
        if np.abs(T.T @ (sig[:, None] * T) - np.diag(sig)).max() > GRAM_TOL * 10:
            raise NotDiagonalSubspaceError(f"block {i + 1} map is not an isometry")
        Ts.append(T)
    return Ts


@dataclass
class GeodesicFactorization:
    """``f = g o fbar`` with ``g`` the diagonal geodesic embedding through inclusions."""

    fbar: np.ndarray                 # (P, d) samples in the model space form
    weights: np.ndarray
    model_curvature: float
    maps: list                       # T_i, d x d
    inclusions: list                 # columns: basis of pi_i(V) inside block i
    nbar: int
    drift: float
    residual: float
    report: ResidualReport

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Apply the geodesic embedding (with inclusions) to model-space points."""
        x = np.atleast_2d(x)
        return np.concatenate([w * (x @ T.T) @ B.T
                               for w, T, B in zip(self.weights, self.maps, self.inclusions)], axis=-1)


def _block_basis(space: ProductSpace, i: int, vectors: np.ndarray, d: int) -> np.ndarray:
    f = space.factors[i]
    if f.block_dim == d:
        return np.eye(d)
    sig = f.signature
    blk = vectors[:, space.blocks[i]].T                  # N_i x q
    U = np.linalg.svd(blk, full_matrices=False)[0][:, :d]
    metric = U.T @ (sig[:, None] * U)
    C = _indefinite_gram_schmidt(np.eye(d), metric, f.lorentzian)
    B = U @ C
    if f.lorentzian and B[0, 0] < 0:
        B[:, 0] = -B[:, 0]
    return B


def factor_through_geodesic(spec: Immersion, grid: Grid, h: float = DEFAULT_STEP,
                            tol: float = DETECT_TOL) -> GeodesicFactorization:
    """Factor an immersion with proportional split tensors through the diagonal geodesic.

    Requires every factor curved with one sign, a proportional verdict, a
    first normal space of constant dimension that is parallel in the normal
    bundle.  The span of the position vector, the tangent space and the
    first normal space is then a constant subspace; its block projections
    determine the inclusions and the block isometries, and ``fbar`` is the
    preimage of ``f`` under the resulting embedding.
    """
    sp = spec.space
    pts = grid.points
    samples = sample_grid(spec, pts)
    prop = check_proportionality(sp, samples, tol)
    if not prop.proportional or prop.weights is None:
        raise HypothesisError("split tensors are not proportional with a common curvature sign")
    rep = ResidualReport().absorb(prop.report)
    ranks, par = set(), 0.0
    spans = []
    for u in pts:
        # every quantity below is frame independent, so each stencil seeds its own frame
        st = Stencil(spec, u, h, depth=1)
        B, D = subbundle_derivative(st, lambda g: first_normal(g.alpha).basis)
        ranks.add(B.shape[1])
        if B.shape[1]:
            P = np.eye(st.center.p) - B @ B.T
            par = max(par, float(np.abs(np.einsum("pq,cqr->cpr", P, D)).max()))
        geo = st.center
        spans.append(np.vstack([geo.x, geo.d1, B.T @ geo.xi]))
    if len(ranks) != 1:
        raise HypothesisError(f"first normal dimension varies over the grid: {sorted(ranks)}")
    rep.add("first_normal_parallel", par, 1e-4)
    if par > 1e-4:
        raise HypothesisError("first normal space is not parallel")
    nbar = ranks.pop()
    d = 1 + spec.m + nbar
    if any(f.block_dim < d for f in sp.factors):
        raise HypothesisError("factors are too small to contain the diagonal subspace")
    ref = np.linalg.qr(spans[0].T)[0]
    drift = max(float(np.max(subspace_angles(ref, np.linalg.qr(s.T)[0]))) for s in spans)
    rep.add("subspace_drift", drift, 1e-6)
    Vrows = spans[0]                                      # d x N, spans V
    incl = [_block_basis(sp, i, Vrows, d) for i in range(sp.ell)]
    coords = []
    for i, f in enumerate(sp.factors):
        sig_d = np.ones(d)
        if f.lorentzian:
            sig_d[0] = -1.0
        B = incl[i]
        coords.append((sig_d[:, None] * B.T) @ (f.signature[:, None] * Vrows[:, sp.blocks[i]].T))
    Vc = np.vstack(coords)                                # (ell d) x d
    Ts = extract_factor_isometries(Vc, sp.k)
    a, kt = geodesic_weights(sp.k)
    sig_d = np.ones(d)
    if kt < 0:
        sig_d[0] = -1.0
    T1inv = sig_d[:, None] * Ts[0].T * sig_d
    b0 = sp.blocks[0]
    X = np.array([g.x for g in samples])
    y1 = (X[:, b0] * sp.factors[0].signature) @ incl[0] * sig_d
    fbar = (y1 @ T1inv.T) / a[0]
    fac = GeodesicFactorization(fbar, a, kt, Ts, incl, nbar, drift, 0.0, rep)
    residual = float(np.abs(fac.embed(fbar) - X).max())
    fac.residual = residual
    rep.add("factorization", residual, 1e-7)
    norm_res = float(np.abs(np.sum(sig_d * fbar * fbar, axis=1) - 1 / kt).max())
    rep.add("model_constraint", norm_res, 1e-8 * max(1.0, 1 / abs(kt)))
    return fac
