"""Codimension reduction inside one factor of a product.

The normal space of an immersion splits, for every factor ``i``, into the
image of ``S_i`` and its complement, on which ``T_i`` is an orthogonal
projection.  The complement decomposes into ``U_i = ker T_i`` and
``V_i = ker(I - T_i)``.  Normal directions in ``V_i`` orthogonal to the
first normal space are the candidates for reducing the codimension of the
immersion inside factor ``i``; they do so when they form a parallel subbundle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ambient import ProductSpace, SpaceForm
from .calculus import ResidualReport, SplitTensors, split_tensors
from .errors import DimensionJumpError, PreconditionError, SpectralGapError
from .grid import Grid
from .jets import DEFAULT_STEP, Immersion, PointGeometry, Stencil
from .nodes import Node

RANK_REL = 1e-7
RANK_ABS = 1e-10
IMAGE_TOL = 1e-7
GAP = (0.1, 0.9)
PARALLEL_TOL = 1e-4


@dataclass
class FirstNormal:
    basis: np.ndarray            # (p, r) orthonormal coefficient columns
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


def first_normal(alpha: np.ndarray) -> FirstNormal:
    """Span of the second fundamental form, from the SVD of its symmetric columns."""
    p, m, _ = alpha.shape
    iu = np.triu_indices(m)
    cols = alpha[:, iu[0], iu[1]]
    if p == 0:
        return FirstNormal(np.zeros((0, 0)), np.zeros(0))
    U, s, _ = np.linalg.svd(cols, full_matrices=False)
    smax = s[0] if len(s) else 0.0
    keep = (s > RANK_REL * smax) & (s > RANK_ABS)
    return FirstNormal(U[:, keep], s)


def _range_and_complement(M: np.ndarray, tol: float):
    p = M.shape[0]
    if M.size == 0:
        return np.zeros((p, 0)), np.eye(p)
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > tol))
    return U[:, :r], U[:, r:]


@dataclass
class FactorSplit:
    image: np.ndarray   # (p, s) basis of S_i(TM)
    U: np.ndarray       # (p, u) basis of ker T_i on the complement
    V: np.ndarray       # (p, v) basis of ker(I - T_i) on the complement
    gap: float          # distance of the restricted eigenvalues from {0, 1}


@dataclass
class NormalSplit:
    factors: list = field(default_factory=list)

    def __getitem__(self, i: int) -> FactorSplit:
        """Split for factor ``i`` (1-based)."""
        return self.factors[i - 1]


def split_UV(st: SplitTensors) -> NormalSplit:
    """Decompose the complement of each ``S_i`` image into the kernels of ``T_i`` and ``I - T_i``."""
    out = NormalSplit()
    for i in range(st.ell):
        image, comp = _range_and_complement(st.S[i], IMAGE_TOL)
        if comp.shape[1]:
            Tr = comp.T @ st.T[i] @ comp
            w, vecs = np.linalg.eigh(0.5 * (Tr + Tr.T))
            bad = (w >= GAP[0]) & (w <= GAP[1])
            if np.any(bad):
                raise SpectralGapError(
                    f"factor {i + 1}: eigenvalues {w[bad]} lie inside {GAP}")
            lowmask = w < 0.5
            U = comp @ vecs[:, lowmask]
            V = comp @ vecs[:, ~lowmask]
            gap = float(np.max(np.minimum(np.abs(w), np.abs(1 - w))))
        else:
            U = V = np.zeros((st.p, 0))
            gap = 0.0
        out.factors.append(FactorSplit(image, U, V, gap))
    return out


def candidate_subbundle(geo: PointGeometry, i: int) -> np.ndarray:
    """Orthonormal coefficient basis of ``V_i`` intersected with the orthogonal complement of the first normal space."""
    st = split_tensors(geo.space, geo.framed)
    V = split_UV(st)[i].V
    N1 = first_normal(geo.alpha).basis
    if V.shape[1] == 0 or N1.shape[1] == 0:
        return V
    M = N1.T @ V
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > IMAGE_TOL))
    return V @ Vt[r:].T


def subbundle_derivative(st: Stencil, basis_fn) -> tuple[np.ndarray, np.ndarray]:
    """Normal covariant derivative of a smoothly continued frame of a normal subbundle.

    ``basis_fn(geometry)`` returns an orthonormal coefficient basis of the
    subbundle in the normal frame of that geometry.  The frame at the centre
    is continued to the neighbouring stencil points as the closest
    orthonormal frame of the neighbouring subspace.  Returns the centre basis
    ``B`` (``p x r``) and ``D[c]`` (``p x r``), the normal-frame coefficients
    of the derivative along each parameter.
    """
    c0 = st.center
    eta = c0.space.eta
    B0 = basis_fn(c0)
    r = B0.shape[1]
    D = np.zeros((st.m, c0.p, r))
    if r == 0:
        return B0, D
    amb0 = B0.T @ c0.xi
    for c in range(st.m):
        frames = []
        for s in (1, -1):
            geo = st.at(st.shift((0,) * st.m, c, s))
            Bs = basis_fn(geo)
            if Bs.shape[1] != r:
                raise DimensionJumpError(f"subbundle dimension jumps from {r} to {Bs.shape[1]}")
            amb = Bs.T @ geo.xi
            C = amb @ (eta * amb0).T
            w, Q = np.linalg.eigh(C.T @ C)
            W = C @ (Q / np.sqrt(w)) @ Q.T
            frames.append(W.T @ amb)
        deriv = (frames[0] - frames[1]) / (2 * st.h)
        D[c] = c0.xi @ (eta * deriv).T
    return B0, D


@dataclass
class ReductionResult:
    reducible: bool
    nbar: int
    certificate: ResidualReport
    basis: np.ndarray          # coefficient basis at the first grid point
    ambient_basis: np.ndarray  # the same directions as ambient vectors


def _subbundle_curvature(geo: PointGeometry, B: np.ndarray) -> float:
    """Algebraic side of the Ricci equation applied to a normal subbundle."""
    if geo.m < 2 or B.shape[1] == 0:
        return 0.0
    Am = geo.shape_mixed
    al = geo.alpha
    k = geo.space.k
    rhs = np.einsum("xad,ydb->abxy", al, Am) - np.einsum("yda,xdb->abxy", Am, al)
    rhs += np.einsum("i,iyb,ixa->abxy", k, geo.S, geo.S) - np.einsum("i,iya,ixb->abxy", k, geo.S, geo.S)
    return float(np.abs(np.einsum("abxy,yr->abxr", rhs, B)).max())


def _stencils(spec: Immersion, grid: Grid, h: float, depth: int):
    pts = grid.points
    # subbundles are frame independent, so every stencil seeds its own frame
    for u in pts:
        yield Stencil(spec, u, h, depth=depth)


def reduction_test(spec: Immersion, i: int, grid: Grid, h: float = DEFAULT_STEP,
                   tol: float = PARALLEL_TOL) -> ReductionResult:
    """Decide whether the immersion reduces codimension inside factor ``i`` (1-based).

    The candidate subbundle must have constant dimension on the grid and be
    parallel for the normal connection within ``tol``.
    """
    if not 1 <= i <= spec.space.ell:
        raise PreconditionError("factor index out of range")
    rep = ResidualReport()
    dims, worst, curv, gap = set(), 0.0, 0.0, 0.0
    base = base_amb = None
    for st in _stencils(spec, grid, h, depth=1):
        geo = st.center
        B, D = subbundle_derivative(st, lambda g: candidate_subbundle(g, i))
        dims.add(B.shape[1])
        if len(dims) > 1:
            raise DimensionJumpError(f"candidate subbundle dimension varies: {sorted(dims)}")
        if base is None:
            base, base_amb = B, B.T @ geo.xi
        if B.shape[1]:
            P = np.eye(geo.p) - B @ B.T
            worst = max(worst, float(np.abs(np.einsum("pq,cqr->cpr", P, D)).max()))
        curv = max(curv, _subbundle_curvature(geo, B))
        gap = max(gap, split_UV(split_tensors(geo.space, geo.framed))[i].gap)
    rep.add("parallel_subbundle", worst, tol)
    rep.add("normal_curvature_on_subbundle", curv, 1e-8)
    rep.add("projection_spectrum", gap, 1e-8)
    nbar = dims.pop()
    return ReductionResult(worst <= tol, nbar, rep, base, base_amb)


@dataclass
class SubbundleTheoremResult:
    report: ResidualReport
    conditions_hold: bool
    conclusion_holds: bool

    @property
    def consistent(self) -> bool:
        return self.conditions_hold == self.conclusion_holds


def thm44_check(spec: Immersion, i: int, grid: Grid, h: float = 1e-3,
                tol_curvature: float = 1e-2, tol_mean: float = 1e-4,
                tol_conclusion: float = 1e-4) -> SubbundleTheoremResult:
    """Compare the curvature and mean-curvature conditions with the parallelism conclusion.

    First condition: the covariant derivative of the normal curvature vanishes
    on the candidate subbundle.  Second condition: the normal derivative of the
    subbundle is orthogonal to the mean curvature vector.  Conclusion: the
    normal derivative of the subbundle is orthogonal to the first normal
    space.  Quantifiers over tangent directions are sampled on coordinate
    directions.
    """
    rep = ResidualReport()
    r_curv = r_mean = r_conc = r_sub = 0.0
    for st in _stencils(spec, grid, h, depth=3 if spec.m > 1 else 1):
        geo = st.center
        B, D = subbundle_derivative(st, lambda g: candidate_subbundle(g, i))
        if B.shape[1] == 0:
            continue
        eta_vec = geo.mean_curvature
        r_mean = max(r_mean, float(np.abs(np.einsum("q,cqr->cr", eta_vec, D)).max()))
        N1 = first_normal(geo.alpha).basis
        if N1.shape[1]:
            r_conc = max(r_conc, float(np.abs(np.einsum("qs,cqr->csr", N1, D)).max()))
        r_sub = max(r_sub, _subbundle_curvature(geo, B))
        if st.m > 1:
            Om0 = st.normal_curvature()[0, 1]
            om = st.omega()
            for c in range(st.m):
                plus = st.normal_curvature(st.unit(c))[0, 1]
                minus = st.normal_curvature(tuple(-x for x in st.unit(c)))[0, 1]
                G = geo.Gamma
                cov = (plus - minus) / (2 * st.h) + om[c] @ Om0 - Om0 @ om[c]
                cov -= (G[0, c, 0] + G[1, c, 1]) * Om0
                r_curv = max(r_curv, float(np.abs(cov @ B).max()))
    rep.add("curvature_condition", r_curv, tol_curvature, vacuous=spec.m < 2)
    rep.add("mean_curvature_condition", r_mean, tol_mean)
    rep.add("conclusion", r_conc, tol_conclusion)
    rep.add("normal_curvature_on_subbundle", r_sub, 1e-8)
    cond = rep["curvature_condition"].passed and rep["mean_curvature_condition"].passed
    return SubbundleTheoremResult(rep, cond, rep["conclusion"].passed)


class BlockRestriction(Node):
    """Re-express one block of an immersion in coordinates of a constant subspace."""

    def __init__(self, inner: Node, i: int, coords: np.ndarray, factor: SpaceForm):
        self.inner = inner
        self.i = i
        self.coords = np.asarray(coords, dtype=float)
        self.factors = tuple(factor if j == i - 1 else f for j, f in enumerate(inner.factors))
        self.m = inner.m
        self.lo, self.hi = inner.lo, inner.hi
        self.declared_identity = inner.declared_identity
        self._src = ProductSpace(inner.factors, allow_single=True)
        self._dst = ProductSpace(self.factors, allow_single=True)

    def jet(self, u):
        x, d1, d2 = self.inner.jet(u)
        y = np.zeros(self._dst.N)
        e1 = np.zeros((self.m, self._dst.N))
        e2 = np.zeros((self.m, self.m, self._dst.N))
        for j, (bs, bd) in enumerate(zip(self._src.blocks, self._dst.blocks)):
            if j == self.i - 1:
                M = self.coords
                y[bd], e1[:, bd], e2[:, :, bd] = M @ x[bs], d1[:, bs] @ M.T, d2[:, :, bs] @ M.T
            else:
                y[bd], e1[:, bd], e2[:, :, bd] = x[bs], d1[:, bs], d2[:, :, bs]
        return y, e1, e2

    def to_dict(self):
        return {"op": "restrict", "factor": self.i, "coords": self.coords.tolist(),
                "target": self.factors[self.i - 1].to_dict(), "inner": self.inner.to_dict()}


def reduce_target(spec: Immersion, i: int, result: ReductionResult) -> Immersion:
    """Immersion into the smaller product obtained by dropping the parallel directions in factor ``i``."""
    sp = spec.space
    f = sp.factors[i - 1]
    nbar = result.nbar
    if nbar == 0:
        return spec
    if nbar >= f.n:
        raise PreconditionError("cannot drop every direction of the factor")
    b = sp.blocks[i - 1]
    sig = f.signature
    L = result.ambient_basis[:, b]                      # (nbar, N_i), spacelike, orthonormal
    basis = []
    for j in range(f.block_dim):
        v = np.zeros(f.block_dim)
        v[j] = 1.0
        for w in list(L) + basis:
            v = v - np.sum(sig * v * w) / np.sum(sig * w * w) * w
        nsq = np.sum(sig * v * v)
        if abs(nsq) > 1e-6:
            v = v / np.sqrt(abs(nsq))
            if f.lorentzian and nsq < 0 and v[0] < 0:
                v = -v
            basis.append(v)
        if len(basis) == f.block_dim - nbar:
            break
    basis.sort(key=lambda v: np.sum(sig * v * v))      # timelike vector first
    E = np.array(basis)
    esig = np.sign(np.sum(sig * E * E, axis=1))
    coords = esig[:, None] * E * sig                    # coordinates in the orthonormal basis
    new_factor = SpaceForm(f.n - nbar, f.k)
    node = BlockRestriction(spec.node, i, coords, new_factor)
    new_space = ProductSpace([new_factor if j == i - 1 else g for j, g in enumerate(sp.factors)])
    return Immersion(new_space, node)
