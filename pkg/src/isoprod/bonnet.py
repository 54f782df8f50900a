"""Reconstruction of an immersion from its intrinsic and extrinsic data.

The data of an immersion into a product of space forms (metric, Christoffels,
normal connection, second fundamental form and the split tensors) is sampled
on a rectangular grid.  From it we assemble the connection of the bundle
``G = TM + E + span(nu_j)``, whose ambient image is constant, and integrate the
frame field along grid lines.  The immersion is recovered by integrating its
differential and fixing the constant shift so every curved block lands on its
quadric.  Two immersions are matched by an ambient isometry read off one frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import SimpleNamespace

import numpy as np
from scipy.linalg import null_space, orthogonal_procrustes

from .ambient import ProductSpace
from .calculus import (DEFAULT_TOLERANCES, FUNDAMENTAL_TIERS, FieldDerivatives, LocalFields,
                       ResidualReport, Tolerances, algebraic_residuals, fundamental_terms,
                       moving_terms, orthonormalize_split)
from .errors import (ConstraintError, DimensionError, FrameContinuationError, FrameError,
                     IncompatibleDataError, IntegrabilityError, NoMatchError, PreconditionError,
                     SceneError)
from .grid import Grid
from .jets import Immersion, PointGeometry
from .numerics import edge_propagators, grid_gradient

LAYOUT = ("g", "Gamma", "conn_E", "alpha_E", "R", "S", "T")

_DATA_TIERS = {"eq10_gauss": "curvature_data", "eq11_codazzi_a": "derivative_data",
               "eq11_codazzi_b": "derivative_data", "eq12_ricci": "curvature_data"}


def _max(a) -> float:
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


# ---------------------------------------------------------------- data


@dataclass
class BonnetData:
    """Grid samples of the data that determines an immersion.

    Arrays carry the grid shape first: ``g`` is ``grid + (m, m)``, ``Gamma`` is
    ``grid + (m, m, m)`` with ``Gamma[c, a, b]`` the coefficient of ``d_c`` in
    ``nabla_a d_b``, ``omega`` is ``grid + (m, p, p)``, ``alpha`` is
    ``grid + (p, m, m)``, and ``R``, ``S``, ``T`` carry a factor index.
    The bundle ``E`` is Riemannian of rank ``p``; all indefiniteness of the
    ambient model lives in the ``nu`` directions.
    """

    space: ProductSpace
    grid: Grid
    g: np.ndarray
    Gamma: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray
    R: np.ndarray
    S: np.ndarray
    T: np.ndarray
    points: np.ndarray | None = field(default=None, repr=False, compare=False)
    frames: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        shape = self.grid.shape
        m = self.grid.m
        if self.g.shape[:len(shape)] != shape or self.g.shape[len(shape):] != (m, m):
            raise DimensionError(f"metric samples have shape {self.g.shape}, expected {shape + (m, m)}")
        if self.p != self.space.dim - m:
            raise DimensionError(f"bundle rank {self.p} differs from {self.space.dim} - {m}")
        expect = {"Gamma": (m, m, m), "omega": (m, self.p, self.p), "alpha": (self.p, m, m),
                  "R": (self.space.ell, m, m), "S": (self.space.ell, self.p, m),
                  "T": (self.space.ell, self.p, self.p)}
        for name, tail in expect.items():
            arr = getattr(self, name)
            if arr.shape != shape + tail:
                raise DimensionError(f"{name} samples have shape {arr.shape}, expected {shape + tail}")

    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def p(self) -> int:
        return self.alpha.shape[len(self.grid.shape)]

    @property
    def rho(self) -> int:
        return 0

    @property
    def m_prime(self) -> int:
        return self.p

    @property
    def shape(self) -> tuple:
        return self.grid.shape

    def local(self, idx) -> LocalFields:
        return LocalFields(self.space.k, self.g[idx], self.Gamma[idx], self.omega[idx],
                           self.alpha[idx], self.R[idx], self.S[idx], self.T[idx])

    def vertex(self, idx=None) -> SimpleNamespace:
        """Normal-side data at one vertex (the first by default)."""
        idx = (0,) * self.m if idx is None else tuple(idx)
        return SimpleNamespace(space=self.space, p=self.p, alpha=self.alpha[idx],
                               S=self.S[idx], T=self.T[idx])

    def replace(self, **kw) -> "BonnetData":
        return replace(self, **kw)

    def _flat(self) -> np.ndarray:
        n = self.grid.size
        parts = [self.g, self.Gamma, self.omega, self.alpha]
        parts += [getattr(self, name)[..., i, :, :] for i in range(self.space.ell) for name in "RST"]
        return np.concatenate([np.asarray(a).reshape(n, -1) for a in parts], axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": "bonnet_data",
            "space": self.space.to_dict(),
            "grid": self.grid.to_dict(),
            "m": self.m, "p": self.p, "rho": self.rho, "m_prime": self.m_prime,
            "layout": list(LAYOUT),
            "points": self._flat().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BonnetData":
        try:
            space = ProductSpace.from_dict(data["space"])
            grid = Grid.from_dict(data["grid"])
            rows = np.asarray(data["points"], dtype=float)
            p = int(data["p"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SceneError(f"malformed reconstruction data: {exc}") from exc
        m, ell = grid.m, space.ell
        sizes = [m * m, m ** 3, m * p * p, p * m * m] + [m * m, p * m, p * p] * ell
        if rows.ndim != 2 or rows.shape != (grid.size, sum(sizes)):
            raise SceneError(f"reconstruction data has shape {rows.shape}, "
                             f"expected {(grid.size, sum(sizes))}")
        cuts = np.split(rows, np.cumsum(sizes)[:-1], axis=1)
        sh = grid.shape

        def take(a, tail):
            return a.reshape(sh + tail)

        per = cuts[4:]
        R = np.stack([take(per[3 * i], (m, m)) for i in range(ell)], axis=len(sh))
        S = np.stack([take(per[3 * i + 1], (p, m)) for i in range(ell)], axis=len(sh))
        T = np.stack([take(per[3 * i + 2], (p, p)) for i in range(ell)], axis=len(sh))
        return cls(space, grid, take(cuts[0], (m, m)), take(cuts[1], (m, m, m)),
                   take(cuts[2], (m, p, p)), take(cuts[3], (p, m, m)), R, S, T)


def _polar_align(ref, cur, eta):
    """Rotate the rows of ``cur`` within their span to be closest to ``ref``."""
    M = (cur * eta) @ ref.T
    U, s, Vt = np.linalg.svd(M)
    if s.size and s.min() < 0.5:
        raise FrameContinuationError("normal frames of neighbouring vertices barely overlap; "
                                     "refine the grid", rank=int(np.sum(s >= 0.5)))
    return (U @ Vt).T @ cur


def continue_normal_frames(xi, eta) -> np.ndarray:
    """Make pointwise normal frames ``grid + (p, N)`` vary smoothly over the grid.

    Each vertex is aligned with its predecessor, first down the leading axis
    at the first index of the others and then along the remaining axes in
    turn.  Alignment is symmetric, so the result samples one smooth gauge.
    """
    out = np.array(xi, dtype=float)
    nd = out.ndim - 2
    for axis in range(nd):
        lead = tuple(0 for _ in range(axis + 1, nd))
        view = out[(slice(None),) * (axis + 1) + lead]
        view = np.moveaxis(view, axis, 0)
        for s in range(1, view.shape[0]):
            for idx in np.ndindex(*view.shape[1:-2]):
                view[(s,) + idx] = _polar_align(view[(s - 1,) + idx], view[(s,) + idx], eta)
    return out


def _sample(spec: Immersion, grid: Grid, seed_order=None):
    """Pointwise geometry with a seed choice kept while it stays usable."""
    geos, selection = [], None
    for u in grid.points:
        try:
            geo = PointGeometry(spec, u, seed_order=seed_order, selection=selection)
        except FrameError:
            geo = PointGeometry(spec, u, seed_order=seed_order)
        selection = geo.framed.selection
        geos.append(geo)
    return geos


def extract_data(spec: Immersion, grid: Grid, seed_order=None) -> BonnetData:
    """Sample the reconstruction data of ``spec`` on ``grid``.

    The normal frame is continued across the grid and the normal connection
    is obtained from high-order grid differences of that frame.  The
    sampled points and full ambient frames are kept on the result.
    """
    if grid.m != spec.m:
        raise PreconditionError(f"grid has {grid.m} parameters, immersion has {spec.m}")
    sp = spec.space
    sh = grid.shape
    geos = _sample(spec, grid, seed_order)
    p = geos[0].p
    xi_raw = np.array([geo.xi for geo in geos]).reshape(sh + (p, sp.N))
    xi = continue_normal_frames(xi_raw, sp.eta)
    Q = np.einsum("...gn,...an->...ga", xi_raw * sp.eta, xi)      # Q[gamma, alpha]

    def stack(name):
        arr = np.array([getattr(geo, name) for geo in geos])
        return arr.reshape(sh + arr.shape[1:])

    alpha = np.einsum("...ga,...gbc->...abc", Q, stack("alpha"))
    S = np.einsum("...ga,...igb->...iab", Q, stack("S"))
    T = np.einsum("...ga,...igd,...db->...iab", Q, stack("T"), Q)
    if p:
        dxi = grid_gradient(xi, grid.spacing, grid.m)               # grid + (m, p, N)
        omega = np.einsum("...cbn,...an->...cab", dxi, xi * sp.eta)
        omega = 0.5 * (omega - np.swapaxes(omega, -1, -2))
    else:
        omega = np.zeros(sh + (grid.m, 0, 0))
    data = BonnetData(sp, grid, g=stack("g"), Gamma=stack("Gamma"), omega=omega, alpha=alpha,
                      R=stack("R"), S=S, T=T)
    d1 = stack("d1")
    nu = stack("nu")[..., list(sp.curved), :]
    data.points = stack("x")
    data.frames = np.swapaxes(np.concatenate([d1, xi, nu], axis=-2), -1, -2)
    return data


# ---------------------------------------------------------------- compatibility


def _derivatives(data: BonnetData):
    h, m = data.grid.spacing, data.m
    return FieldDerivatives(
        dGamma=grid_gradient(data.Gamma, h, m),
        domega=grid_gradient(data.omega, h, m),
        dalpha=grid_gradient(data.alpha, h, m),
        dR=grid_gradient(data.R, h, m),
        dS=grid_gradient(data.S, h, m),
        dT=grid_gradient(data.T, h, m),
    )


def compatibility_check(data: BonnetData, tol: Tolerances = DEFAULT_TOLERANCES) -> ResidualReport:
    """Algebraic identities pointwise and differential identities by high-order grid differences."""
    rep = ResidualReport()
    sym = max(_max(data.g - np.swapaxes(data.g, -1, -2)),
              _max(data.alpha - np.swapaxes(data.alpha, -1, -2)),
              _max(data.R - np.swapaxes(data.R, -1, -2)),
              _max(data.T - np.swapaxes(data.T, -1, -2)))
    rep.add("symmetry", sym, tol.symmetry)
    try:
        d = _derivatives(data)
    except PreconditionError:
        d = None
    for idx in np.ndindex(*data.shape):
        f = data.local(idx)
        try:
            st = orthonormalize_split(f.g, f.R, f.S, f.T)
        except np.linalg.LinAlgError:
            rep.add("metric_definite", float("inf"), 0.0)
            continue
        rep.absorb(algebraic_residuals(st, tol.algebraic, tol.eig))
        if d is None:
            continue
        dd = FieldDerivatives(*(getattr(d, name)[idx] for name in
                                ("dGamma", "domega", "dalpha", "dR", "dS", "dT")))
        point = ResidualReport()
        for label, r in moving_terms(f, dd).items():
            point.add(label, r, tol.derivative_data)
        if data.m > 1:
            for label, r in fundamental_terms(f, dd).items():
                point.add(label, r, getattr(tol, _DATA_TIERS[label]))
        else:
            for label in FUNDAMENTAL_TIERS:
                point.add(label, 0.0, getattr(tol, _DATA_TIERS[label]), vacuous=True)
        rep.absorb(point)
    if d is None:
        rep.add("grid_resolution", float("inf"), 0.0)
    return rep


# ---------------------------------------------------------------- Whitney sum


@dataclass
class WhitneyData:
    """Connection and factor projections on ``G = TM + E + span(nu_j)``.

    Basis order at every vertex is ``[d_1 .. d_m, xi_1 .. xi_p, nu_j for curved j]``.
    ``W[..., c]`` is the connection matrix in direction ``c`` so that a frame
    ``Phi`` with constant ambient image solves ``d_c Phi = Phi W_c``.
    """

    data: BonnetData
    metric: np.ndarray      # grid + (N, N)
    W: np.ndarray           # grid + (m, N, N)
    P: np.ndarray           # grid + (ell, N, N)
    report: ResidualReport = field(default_factory=ResidualReport)

    @property
    def nu_norms(self) -> np.ndarray:
        return np.array([self.data.space.factors[i].k for i in self.data.space.curved])

    @property
    def N(self) -> int:
        return self.metric.shape[-1]


def _assemble(data: BonnetData):
    sp = data.space
    m, p = data.m, data.p
    J = sp.curved
    N = m + p + len(J)
    sh = data.shape
    ks = np.array([sp.factors[i].k for i in J])
    ginv = np.linalg.inv(data.g)
    metric = np.zeros(sh + (N, N))
    metric[..., :m, :m] = data.g
    metric[..., m:m + p, m:m + p] = np.eye(p)
    for j, k in enumerate(ks):
        metric[..., m + p + j, m + p + j] = k
    W = np.zeros(sh + (m, N, N))
    T0, E0 = slice(0, m), slice(m, m + p)
    for c in range(m):
        Wc = W[..., c, :, :]
        Wc[..., T0, T0] = data.Gamma[..., :, c, :]
        Wc[..., E0, T0] = data.alpha[..., :, c, :]
        Wc[..., T0, E0] = -np.einsum("...ab,...qb->...aq", ginv, data.alpha[..., :, c, :])
        Wc[..., E0, E0] = data.omega[..., c, :, :]
        for j, i in enumerate(J):
            col = m + p + j
            Wc[..., col, T0] = data.R[..., i, c, :]
            Wc[..., col, E0] = data.S[..., i, :, c]
            Wc[..., T0, col] = -ks[j] * np.einsum("...ab,...b->...a", ginv, data.R[..., i, c, :])
            Wc[..., E0, col] = -ks[j] * data.S[..., i, :, c]
    P = np.zeros(sh + (sp.ell, N, N))
    for i in range(sp.ell):
        Pi = P[..., i, :, :]
        Pi[..., T0, T0] = ginv @ data.R[..., i, :, :]
        Pi[..., E0, T0] = data.S[..., i, :, :]
        Pi[..., T0, E0] = ginv @ np.swapaxes(data.S[..., i, :, :], -1, -2)
        Pi[..., E0, E0] = data.T[..., i, :, :]
        if i in J:
            col = m + p + J.index(i)
            Pi[..., col, col] = 1.0
    return metric, W, P


def build_whitney(data: BonnetData, tol: Tolerances = DEFAULT_TOLERANCES, strict: bool = True) -> WhitneyData:
    """Assemble the connection and projections and check their algebraic and parallel identities."""
    metric, W, P = _assemble(data)
    ell = data.space.ell
    N = metric.shape[-1]
    rep = ResidualReport()
    idem = 0.0
    for i in range(ell):
        for j in range(ell):
            target = P[..., i, :, :] if i == j else 0.0
            idem = max(idem, _max(P[..., i, :, :] @ P[..., j, :, :] - target))
    rep.add("claim_idempotent", idem, tol.claim)
    GP = metric[..., None, :, :] @ P
    rep.add("claim_self_adjoint", _max(GP - np.swapaxes(GP, -1, -2)), tol.claim)
    rep.add("claim_partition", _max(P.sum(axis=-3) - np.eye(N)), tol.partition)
    try:
        dP = grid_gradient(P, data.grid.spacing, data.m)       # grid + (m, ell, N, N)
        Wc = W[..., :, None, :, :]
        par = dP + Wc @ P[..., None, :, :, :] - P[..., None, :, :, :] @ Wc
        rep.add("claim_parallel", _max(par), tol.derivative_data)
    except PreconditionError:
        rep.add("claim_parallel", float("inf"), tol.derivative_data)
    wd = WhitneyData(data, metric, W, P, rep)
    if strict and not rep.passed:
        raise IncompatibleDataError(f"bundle identities fail: {', '.join(rep.failures())}", report=rep)
    return wd


def _metric_gram_schmidt(vectors, metric, start=(), tol=1e-8):
    basis = [np.asarray(v, dtype=float) for v in start]
    signs = [float(np.sign(v @ metric @ v)) for v in basis]
    for v in vectors:
        w = np.array(v, dtype=float)
        for q, s in zip(basis, signs):
            w = w - s * (q @ metric @ w) * q
        n2 = w @ metric @ w
        if abs(n2) > tol:
            basis.append(w / np.sqrt(abs(n2)))
            signs.append(float(np.sign(n2)))
    return basis, signs


def default_gauge(wd: WhitneyData, index=None) -> np.ndarray:
    """Ambient frame at a vertex taking each factor image onto its coordinate block.

    In block ``i`` the unit vector along ``nu_i`` goes to the first coordinate
    (the timelike one for hyperbolic factors) and the rest of the image of
    ``P_i`` is orthonormalized in basis order.
    """
    sp = wd.data.space
    idx = (0,) * wd.data.m if index is None else tuple(index)
    metric, P = wd.metric[idx], wd.P[idx]
    m, p, N = wd.data.m, wd.data.p, wd.N
    Q = np.zeros((N, N))
    E = np.eye(N)
    targets = []
    for i, f in enumerate(sp.factors):
        start = []
        if f.curved:
            e = np.zeros(N)
            e[m + p + sp.curved.index(i)] = 1.0 / np.sqrt(abs(f.k))
            start = [e]
        basis, signs = _metric_gram_schmidt(P[i].T, metric, start)
        if len(basis) != f.block_dim:
            raise IncompatibleDataError(f"factor {i + 1} projection has rank {len(basis)}, "
                                        f"expected {f.block_dim}")
        if f.lorentzian and signs[0] > 0:
            raise IncompatibleDataError(f"factor {i + 1} has no timelike direction")
        off = sp.offsets[i]
        for s, q in enumerate(basis):
            Q[:, off + s] = q
            targets.append(off + s)
    return E[:, targets] @ np.linalg.inv(Q)


# ---------------------------------------------------------------- integration


def _edge_propagators(W, spacing, axis, max_step):
    P, q = edge_propagators(W[..., axis, :, :], spacing[axis], column=axis, axis=axis, max_step=max_step)
    return np.moveaxis(P, 0, axis), np.moveaxis(q, 0, axis)


def _sweep(Phi0, F0, P, q):
    """Integrate along the leading axis of ``P``/``q`` from ``(Phi0, F0)``; batch axes follow."""
    n = P.shape[0] + 1
    Phi = np.empty((n,) + np.shape(Phi0))
    F = np.empty((n,) + np.shape(F0))
    Phi[0], F[0] = Phi0, F0
    for s in range(n - 1):
        F[s + 1] = F[s] + np.einsum("...ab,...b->...a", Phi[s], q[s])
        Phi[s + 1] = Phi[s] @ P[s]
    return Phi, F


def integrate_frames(W, spacing, Phi0, order: str = "rows", max_step: float = 1e-2):
    """Transport ``Phi0`` from the first vertex over the whole grid.

    ``order="rows"`` walks down the first column and then along every row;
    ``order="columns"`` walks the first row and then down every column.
    Returns the frame field, the integrated immersion (zero at the first
    vertex) and the edge propagators.
    """
    m = W.ndim - 3
    N = W.shape[-1]
    props = [_edge_propagators(W, spacing, a, max_step) for a in range(m)]
    F0 = np.zeros(N)
    if m == 1:
        P, q = props[0]
        Phi, F = _sweep(Phi0, F0, P, q)
        return Phi, F, props
    if m != 2:
        raise PreconditionError("reconstruction handles one or two parameters")
    (P0, q0), (P1, q1) = props
    if order == "rows":
        Phi_c, F_c = _sweep(Phi0, F0, P0[:, 0], q0[:, 0])            # down column 0
        Phi, F = _sweep(Phi_c, F_c, np.swapaxes(P1, 0, 1), np.swapaxes(q1, 0, 1))
        return np.swapaxes(Phi, 0, 1), np.swapaxes(F, 0, 1), props
    if order == "columns":
        Phi_r, F_r = _sweep(Phi0, F0, P1[0], q1[0])                   # along row 0
        Phi, F = _sweep(Phi_r, F_r, P0, q0)
        return Phi, F, props
    raise PreconditionError(f"unknown integration order {order!r}")


def holonomy_residual(Phi, props) -> float:
    """Largest mismatch of the two transports around each grid plaquette."""
    if len(props) < 2:
        return 0.0
    (P0, q0), (P1, q1) = props
    base = Phi[:-1, :-1]
    loop_a = P0[:, :-1] @ P1[1:, :]
    loop_b = P1[:-1, :] @ P0[:, 1:]
    shift_a = q0[:, :-1] + np.einsum("...ab,...b->...a", P0[:, :-1], q1[1:, :])
    shift_b = q1[:-1, :] + np.einsum("...ab,...b->...a", P1[:-1, :], q0[:, 1:])
    frame = base @ (loop_a - loop_b)
    shift = np.einsum("...ab,...b->...a", base, shift_a - shift_b)
    return max(_max(frame), _max(shift))


@dataclass
class ReconstructionResult:
    """Reconstructed immersion and frame field on the data grid."""

    points: np.ndarray          # grid + (N,)
    frames: np.ndarray          # grid + (N, N)
    report: ResidualReport
    holonomy: float
    zeta: float
    shift: np.ndarray

    def to_dict(self) -> dict:
        N = self.points.shape[-1]
        return {"points": self.points.reshape(-1, N).tolist(),
                "holonomy": self.holonomy, "zeta": self.zeta,
                "report": self.report.to_dict(), "pass": self.report.passed}


def _check_gauge(wd: WhitneyData, Phi0, tol: Tolerances):
    sp = wd.data.space
    idx = (0,) * wd.data.m
    gram = Phi0.T @ (sp.eta[:, None] * Phi0)
    if _max(gram - wd.metric[idx]) > tol.isometry * max(1.0, _max(wd.metric[idx])):
        raise PreconditionError("initial frame does not carry the bundle metric")
    for i in range(sp.ell):
        lhs = sp.masks[i][:, None] * Phi0
        if _max(lhs - Phi0 @ wd.P[idx][i]) > 1e-8 * max(1.0, _max(Phi0)):
            raise PreconditionError(f"initial frame does not respect factor {i + 1}")


def reconstruct(data: BonnetData, gauge=None, tol: Tolerances = DEFAULT_TOLERANCES,
                order: str = "rows", compare_orders: bool = True,
                max_step: float = 1e-2) -> ReconstructionResult:
    """Integrate the data to an immersion into the ambient model of its product."""
    compat = compatibility_check(data, tol)
    if not compat.passed:
        raise IncompatibleDataError(f"compatibility fails: {', '.join(compat.failures())}",
                                    report=compat)
    wd = build_whitney(data, tol)
    Phi0 = default_gauge(wd) if gauge is None else np.asarray(gauge, dtype=float)
    _check_gauge(wd, Phi0, tol)
    sp = data.space
    spacing = data.grid.spacing
    Phi, F, props = integrate_frames(wd.W, spacing, Phi0, order, max_step)
    rep = ResidualReport()
    rep.absorb(wd.report)
    hol = holonomy_residual(Phi, props)
    rep.add("holonomy", hol, tol.holonomy)
    if data.m > 1 and compare_orders:
        other = "columns" if order == "rows" else "rows"
        Phi2, F2, _ = integrate_frames(wd.W, spacing, Phi0, other, max_step)
        rep.add("path_independence", max(_max(Phi - Phi2), _max(F - F2)), tol.path)
    m, p = data.m, data.p
    base = (0,) * m
    shift = np.zeros(sp.N)
    zeta = 0.0
    for j, i in enumerate(sp.curved):
        k = sp.factors[i].k
        mask = sp.masks[i]
        z = mask * F + Phi[..., :, m + p + j] / k           # grid + (N,)
        shift += z[base]
        zeta = max(zeta, _max(z - z[base]))
    rep.add("zeta", zeta, tol.zeta)
    Ft = F - shift
    worst = 0.0
    for i in sp.curved:
        k = sp.factors[i].k
        b = sp.blocks[i]
        q = np.sum(Ft[..., b] ** 2 * sp.eta[b], axis=-1)
        worst = max(worst, _max((q - 1.0 / k) * abs(k)))
    rep.add("constraint", worst, tol.constraint)
    if hol > tol.holonomy:
        raise IntegrabilityError(f"holonomy residual {hol:.3e} exceeds {tol.holonomy:.1e}", residual=hol)
    if worst > tol.constraint:
        raise ConstraintError(f"reconstruction leaves its quadric by {worst:.3e}", residual=worst)
    return ReconstructionResult(Ft, Phi, rep, hol, zeta, shift)


# ---------------------------------------------------------------- uniqueness


@dataclass
class IsometryMatch:
    """Ambient isometry ``x -> B x + C`` carrying one sampled immersion onto another."""

    B: np.ndarray
    C: np.ndarray
    error: float
    report: ResidualReport

    def to_dict(self) -> dict:
        return {"B": self.B.tolist(), "C": self.C.tolist(), "error": self.error,
                "report": self.report.to_dict()}


def match_isometry(samplesF, framesF, samplesG, framesG, space: ProductSpace,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> IsometryMatch:
    """Solve ``B`` from the frames at the first vertex and verify it everywhere."""
    N = space.N
    xF = np.asarray(samplesF, dtype=float).reshape(-1, N)
    xG = np.asarray(samplesG, dtype=float).reshape(-1, N)
    if xF.shape != xG.shape:
        raise PreconditionError("sample sets live on different grids")
    fF = np.asarray(framesF, dtype=float).reshape(-1, N, N)[0]
    fG = np.asarray(framesG, dtype=float).reshape(-1, N, N)[0]
    eta = space.eta
    gramF = fF.T @ (eta[:, None] * fF)
    gramG = fG.T @ (eta[:, None] * fG)
    scale = max(1.0, _max(gramF))
    if _max(gramF - gramG) > 1e-8 * scale:
        raise NoMatchError(f"frames have different Gram matrices (mismatch {_max(gramF - gramG):.3e})")
    B = fG @ np.linalg.inv(fF)
    rep = ResidualReport()
    rep.add("isometry", _max(B.T @ (eta[:, None] * B) - np.diag(eta)), tol.isometry)
    comm = max(_max(space.masks[i][:, None] * B - B * space.masks[i][None, :]) for i in range(space.ell))
    rep.add("block_commutation", comm, tol.isometry)
    C = xG[0] - B @ xF[0]
    curvedC = max((_max(C[space.blocks[i]]) for i in space.curved), default=0.0)
    rep.add("curved_translation", curvedC, tol.translation)
    err = _max(np.linalg.norm(xG - xF @ B.T - C, axis=-1))
    return IsometryMatch(B, C, err, rep)


def align_normal_frame(geoF: PointGeometry, geoG: PointGeometry, tol: float = 1e-8) -> np.ndarray:
    """Orthogonal ``Q`` such that the normal frame ``xi_G Q`` sees the same data as ``xi_F``.

    ``Q`` is fitted by orthogonal Procrustes on the second fundamental form and
    the mixed split tensors.  On normal directions these do not see, ``Q`` is
    fixed by requiring it to intertwine the normal split tensors.
    """
    p = geoF.p
    if p == 0:
        return np.zeros((0, 0))

    def stacked(geo):
        return np.concatenate([geo.alpha.reshape(p, -1), geo.S.transpose(1, 0, 2).reshape(p, -1)], axis=1)

    XF, XG = stacked(geoF), stacked(geoG)
    Q, _ = orthogonal_procrustes(XG.T, XF.T)
    if _max(Q.T @ XG - XF) > tol * max(1.0, _max(XF)):
        raise NoMatchError("normal data of the two immersions are not congruent")
    ell = geoF.space.ell
    misfit = max(_max(Q.T @ geoG.T[i] @ Q - geoF.T[i]) for i in range(ell))
    if misfit <= tol:
        return Q
    # Q = Q_range + NG Z NF^T with T_G Q = Q T_F for every factor
    NF = null_space(XF.T, rcond=1e-9)
    NG = null_space(XG.T, rcond=1e-9)
    if NF.shape[1] != NG.shape[1]:
        raise NoMatchError("normal data of the two immersions have different ranks")
    Qr = Q @ (np.eye(p) - NF @ NF.T)
    rows, rhs = [], []
    for i in range(ell):
        TF, TG = geoF.T[i], geoG.T[i]
        rows.append(np.kron(NF, TG @ NG) - np.kron(TF.T @ NF, NG))
        rhs.append((Qr @ TF - TG @ Qr).ravel(order="F"))
    z = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)[0]
    d = NF.shape[1]
    U, _, Vt = np.linalg.svd(z.reshape(d, d, order="F"))
    Q = Qr + NG @ (U @ Vt) @ NF.T
    misfit = max(_max(Q.T @ geoG.T[i] @ Q - geoF.T[i]) for i in range(ell))
    if misfit > tol:
        raise NoMatchError(f"normal split tensors are not congruent (misfit {misfit:.3e})")
    return Q


def match_immersions(specF: Immersion, specG: Immersion, grid: Grid,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> IsometryMatch:
    """Match two independently sampled immersions of the same domain.

    The normal frame of ``specG`` at the first vertex is rotated onto the one
    of ``specF`` before ``B`` is read off.
    """
    if specF.space.to_dict() != specG.space.to_dict():
        raise NoMatchError("the immersions target different products")
    dF = extract_data(specF, grid)
    dG = extract_data(specG, grid)
    Q = align_normal_frame(dF.vertex(), dG.vertex())
    m, p = dF.m, dF.p
    framesG = dG.frames.copy()
    framesG[..., m:m + p] = framesG[..., m:m + p] @ Q
    return match_isometry(dF.points, dF.frames, dG.points, framesG, specF.space, tol)
