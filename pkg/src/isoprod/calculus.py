"""Split tensors of an immersion into a product and the identities they satisfy.

Each factor projection ``pi_i`` of the ambient space splits into a tangent
block ``R_i``, a mixed block ``S_i`` and a normal block ``T_i``.  This module
computes those blocks and evaluates, as residual reports, the algebraic
identities between them, their covariant derivatives, the Gauss, Codazzi and
Ricci equations of the immersion, and the relations with the lifted
immersion into flat space.

The residual formulas are written once, as functions of pointwise fields and
their first derivatives, and shared by the jet-based checks here and the
grid-based checks on reconstruction data in :mod:`isoprod.bonnet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from itertools import permutations
from typing import Iterable

import numpy as np

from .ambient import ProductSpace
from .jets import DEFAULT_STEP, FramedPoint, Immersion, PointGeometry, Stencil


# ----------------------------------------------------------------- reporting


@dataclass(frozen=True)
class Tolerances:
    """Named tolerance tiers used by the checks."""

    algebraic: float = 1e-9
    eig: float = 1e-8
    moving: float = 1e-4
    gauss: float = 1e-5
    codazzi: float = 1e-4
    ricci: float = 1e-3
    lift: float = 1e-6
    curvature_data: float = 1e-3
    derivative_data: float = 1e-4
    symmetry: float = 1e-10
    claim: float = 1e-10
    partition: float = 1e-9
    holonomy: float = 1e-5
    path: float = 1e-6
    zeta: float = 1e-5
    constraint: float = 1e-5
    isometry: float = 1e-9
    translation: float = 1e-8

    def override(self, **kw) -> "Tolerances":
        names = {f.name for f in fields(self)}
        bad = set(kw) - names
        if bad:
            raise KeyError(f"unknown tolerance keys: {sorted(bad)}")
        return replace(self, **{k: float(v) for k, v in kw.items()})


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class Entry:
    residual: float
    tol: float
    vacuous: bool = False

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def to_dict(self) -> dict:
        d = {"residual": float(self.residual), "tol": float(self.tol), "pass": self.passed}
        if self.vacuous:
            d["vacuous"] = True
        return d


@dataclass
class ResidualReport:
    """Ordered collection of labelled residuals with their tolerances."""

    entries: dict = field(default_factory=dict)

    def add(self, label: str, residual: float, tol: float, vacuous: bool = False):
        self.entries[label] = Entry(float(residual), float(tol), vacuous)
        return self

    def __getitem__(self, label) -> Entry:
        return self.entries[label]

    def __contains__(self, label):
        return label in self.entries

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries.values())

    def failures(self) -> list[str]:
        return [k for k, e in self.entries.items() if not e.passed]

    def worst(self) -> float:
        return max((e.residual for e in self.entries.values()), default=0.0)

    def absorb(self, other: "ResidualReport", prefix: str = "") -> "ResidualReport":
        """Merge keeping the worst residual for repeated labels."""
        for label, e in other.entries.items():
            key = prefix + label
            cur = self.entries.get(key)
            if cur is None:
                self.entries[key] = Entry(e.residual, e.tol, e.vacuous)
            else:
                res = e.residual if not np.isfinite(e.residual) else max(cur.residual, e.residual)
                self.entries[key] = Entry(res, min(cur.tol, e.tol), cur.vacuous and e.vacuous)
        return self

    def to_dict(self) -> dict:
        return {k: e.to_dict() for k, e in self.entries.items()}

    def summary(self) -> str:
        lines = []
        for k, e in self.entries.items():
            flag = "pass" if e.passed else "FAIL"
            extra = " (vacuous)" if e.vacuous else ""
            lines.append(f"{flag}  {k:28s} {e.residual:.3e} <= {e.tol:.1e}{extra}")
        return "\n".join(lines)


def _norm(a) -> float:
    return float(np.sqrt(np.sum(np.square(a))))


# ------------------------------------------------------------- split tensors


@dataclass
class SplitTensors:
    """Blocks of the factor projections in orthonormal frames.

    ``R[i]`` is ``m x m`` (tangent frame), ``S[i]`` is ``p x m`` and ``T[i]``
    is ``p x p`` (normal frame).
    """

    R: np.ndarray
    S: np.ndarray
    T: np.ndarray
    reconstruction_residual: float = 0.0

    @property
    def ell(self) -> int:
        return self.R.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[1]

    @property
    def p(self) -> int:
        return self.T.shape[1]


def split_tensors(space: ProductSpace, framed: FramedPoint) -> SplitTensors:
    """Split each factor projection along the tangent and normal frames."""
    e, xi, eta = framed.tangent, framed.normal, space.eta
    R = np.zeros((space.ell, len(e), len(e)))
    S = np.zeros((space.ell, len(xi), len(e)))
    T = np.zeros((space.ell, len(xi), len(xi)))
    resid = 0.0
    for i in range(space.ell):
        pe = space.project(i, e)
        pxi = space.project(i, xi)
        R[i] = pe @ (eta * e).T
        S[i] = xi @ (eta * pe).T
        T[i] = pxi @ (eta * xi).T
        rec_e = R[i].T @ e + S[i].T @ xi
        rec_xi = S[i] @ e + T[i].T @ xi
        resid = max(resid, float(np.abs(pe - rec_e).max(initial=0.0)),
                    float(np.abs(pxi - rec_xi).max(initial=0.0)))
    return SplitTensors(R, S, T, resid)


def orthonormalize_split(g: np.ndarray, R: np.ndarray, S: np.ndarray, T: np.ndarray) -> SplitTensors:
    """Convert coordinate (lowered) tangent blocks to an orthonormal tangent frame."""
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    Ro = np.einsum("ab,ibc,dc->iad", Linv, R, Linv)
    So = np.einsum("iqb,cb->iqc", S, Linv)
    return SplitTensors(Ro, So, np.array(T, dtype=float))


def algebraic_residuals(st: SplitTensors, tol: float = 1e-9, eig_tol: float = 1e-8) -> ResidualReport:
    """Pointwise algebraic identities between the split tensors."""
    rep = ResidualReport()
    R, S, T = st.R, st.S, st.T
    Im, Ip = np.eye(st.m), np.eye(st.p)
    rep.add("eq4_R", _norm(R.sum(0) - Im), tol)
    rep.add("eq4_S", _norm(S.sum(0)), tol)
    rep.add("eq4_T", _norm(T.sum(0) - Ip), tol)
    for i in range(st.ell):
        n = i + 1
        rep.add(f"eq5_a_{n}", _norm(S[i].T @ S[i] - R[i] @ (Im - R[i])), tol)
        rep.add(f"eq5_b_{n}", _norm(T[i] @ S[i] - S[i] @ (Im - R[i])), tol)
        rep.add(f"eq5_c_{n}", _norm(S[i] @ S[i].T - T[i] @ (Ip - T[i])), tol)
    for i, j in permutations(range(st.ell), 2):
        lab = f"{i + 1}_{j + 1}"
        rep.add(f"eq6_a_{lab}", _norm(S[i].T @ S[j] + R[i] @ R[j]), tol)
        rep.add(f"eq6_b_{lab}", _norm(T[i] @ S[j] + S[i] @ R[j]), tol)
        rep.add(f"eq6_c_{lab}", _norm(S[i] @ S[j].T + T[i] @ T[j]), tol)
    worst = 0.0
    for M in list(R) + list(T):
        if M.size:
            w = np.linalg.eigvalsh(0.5 * (M + M.T))
            worst = max(worst, -w[0], w[-1] - 1.0)
    rep.add("eig_range", max(worst, 0.0), eig_tol)
    return rep


# ------------------------------------------------- differential identities
#
# Fields at a point use coordinate tangent indices and orthonormal normal
# indices; derivative arrays carry the differentiation index first.


@dataclass
class LocalFields:
    """Pointwise fields entering the differential identities."""

    k: np.ndarray          # (ell,)
    g: np.ndarray          # (m, m)
    Gamma: np.ndarray      # (m, m, m)
    omega: np.ndarray      # (m, p, p)
    alpha: np.ndarray      # (p, m, m)
    R: np.ndarray          # (ell, m, m) lowered
    S: np.ndarray          # (ell, p, m)
    T: np.ndarray          # (ell, p, p)

    @property
    def ginv(self):
        return np.linalg.inv(self.g)


@dataclass
class FieldDerivatives:
    dGamma: np.ndarray     # (m, m, m, m)
    domega: np.ndarray     # (m, m, p, p)
    dalpha: np.ndarray     # (m, p, m, m)
    dR: np.ndarray         # (m, ell, m, m)
    dS: np.ndarray         # (m, ell, p, m)
    dT: np.ndarray         # (m, ell, p, p)


def _metric_derivative(g, Gamma):
    gG = np.einsum("ae,ecb->cab", g, Gamma)  # (c, a, b) = g_ae Gamma^e_cb
    return gG + gG.transpose(0, 2, 1)


def moving_terms(f: LocalFields, d: FieldDerivatives) -> dict:
    """Residuals of the derivative identities for ``R_i``, ``S_i`` and ``T_i``."""
    m = f.g.shape[0]
    ginv = f.ginv
    dg = _metric_derivative(f.g, f.Gamma)
    out = {}
    for i in range(len(f.k)):
        R, S, T = f.R[i], f.S[i], f.T[i]
        Rm = ginv @ R
        St = ginv @ S.T
        r7 = r8a = r8b = r9 = 0.0
        for c in range(m):
            Gc = f.Gamma[:, c, :]
            al = f.alpha[:, c, :]                 # (p, m)
            om = f.omega[c]
            Ac = ginv @ al.T                      # column beta: A_beta d_c
            covR = d.dR[c, i] - Gc.T @ R - R @ Gc
            r7 += _norm(covR - (S.T @ al + al.T @ S)) ** 2
            covS = d.dS[c, i] + om @ S - S @ Gc
            r8a += _norm(covS - (T @ al - al @ Rm)) ** 2
            dginv = -ginv @ dg[c] @ ginv
            dSt = dginv @ S.T + ginv @ d.dS[c, i].T
            covSt = dSt + Gc @ St - St @ om
            r8b += _norm(covSt - (Ac @ T - Rm @ Ac)) ** 2
            covT = d.dT[c, i] + om @ T - T @ om
            r9 += _norm(covT - (-S @ Ac - al @ St)) ** 2
        n = i + 1
        out[f"eq7_{n}"] = math.sqrt(r7)
        out[f"eq8_a_{n}"] = math.sqrt(r8a)
        out[f"eq8_b_{n}"] = math.sqrt(r8b)
        out[f"eq9_{n}"] = math.sqrt(r9)
    return out


def gauss_term(f: LocalFields, d: FieldDerivatives) -> float:
    from .jets import riemann_from_christoffels
    Rm = riemann_from_christoffels(f.Gamma, d.dGamma)
    lhs = np.einsum("dcab,dw->abcw", Rm, f.g)
    rhs = np.einsum("i,ibc,iaw->abcw", f.k, f.R, f.R) - np.einsum("i,iac,ibw->abcw", f.k, f.R, f.R)
    rhs += np.einsum("qbc,qaw->abcw", f.alpha, f.alpha) - np.einsum("qac,qbw->abcw", f.alpha, f.alpha)
    return _norm(lhs - rhs)


def codazzi_terms(f: LocalFields, d: FieldDerivatives) -> tuple[float, float]:
    G, al, om = f.Gamma, f.alpha, f.omega
    cov = d.dalpha + np.einsum("cxy,yab->cxab", om, al)
    cov -= np.einsum("dca,xdb->cxab", G, al) + np.einsum("dcb,xad->cxab", G, al)
    lhs_a = cov.transpose(0, 2, 1, 3) - cov.transpose(2, 0, 1, 3)      # [c, b, x, e]
    rhs_a = (np.einsum("i,ibe,ixc->cbxe", f.k, f.R, f.S)
             - np.einsum("i,ice,ixb->cbxe", f.k, f.R, f.S))
    ginv = f.ginv
    dg = _metric_derivative(f.g, G)
    dginv = -np.einsum("ad,cde,eb->cab", ginv, dg, ginv)
    Am = np.einsum("ad,xdc->xac", ginv, al)
    dAm = np.einsum("bad,xdc->bxac", dginv, al) + np.einsum("ad,bxdc->bxac", ginv, d.dalpha)
    covA = dAm + np.einsum("abd,xdc->bxac", G, Am) - np.einsum("xad,dbc->bxac", Am, G)
    covA -= np.einsum("yac,byx->bxac", Am, om)
    # (nabla_b A)(d_c, xi_x) - (nabla_c A)(d_b, xi_x)
    lhs_b = covA - covA.transpose(3, 1, 2, 0)                            # [b, x, a, c]
    Rmix = np.einsum("ad,idc->iac", ginv, f.R)
    rhs_b = (np.einsum("i,ixb,iac->bxac", f.k, f.S, Rmix)
             - np.einsum("i,ixc,iab->bxac", f.k, f.S, Rmix))
    return _norm(lhs_a - rhs_a), _norm(lhs_b - rhs_b)


def ricci_term(f: LocalFields, d: FieldDerivatives) -> float:
    om, dom = f.omega, d.domega
    Omega = dom - dom.transpose(1, 0, 2, 3)
    Omega += np.einsum("axy,byz->abxz", om, om) - np.einsum("bxy,ayz->abxz", om, om)
    Am = np.einsum("ad,xdc->xac", f.ginv, f.alpha)
    rhs = np.einsum("xad,ydb->abxy", f.alpha, Am) - np.einsum("yda,xdb->abxy", Am, f.alpha)
    rhs += (np.einsum("i,iyb,ixa->abxy", f.k, f.S, f.S)
            - np.einsum("i,iya,ixb->abxy", f.k, f.S, f.S))
    return _norm(Omega - rhs)


def fundamental_terms(f: LocalFields, d: FieldDerivatives) -> dict:
    ca, cb = codazzi_terms(f, d)
    return {"eq10_gauss": gauss_term(f, d), "eq11_codazzi_a": ca, "eq11_codazzi_b": cb,
            "eq12_ricci": ricci_term(f, d)}


FUNDAMENTAL_TIERS = {"eq10_gauss": "gauss", "eq11_codazzi_a": "codazzi",
                     "eq11_codazzi_b": "codazzi", "eq12_ricci": "ricci"}


# ------------------------------------------------ jet-based local evaluation


def _local_fields(st: Stencil, geo: PointGeometry | None = None, offset=None) -> LocalFields:
    geo = st.center if geo is None else geo
    return LocalFields(geo.space.k, geo.g, geo.Gamma, st.omega(offset), geo.alpha,
                       geo.R, geo.S, geo.T)


def _local_derivatives(st: Stencil, with_omega: bool) -> FieldDerivatives:
    m, p, ell = st.m, st.center.p, st.center.space.ell
    domega = st.d_omega() if with_omega else np.zeros((m, m, p, p))
    return FieldDerivatives(
        dGamma=st.grad(lambda g: g.Gamma),
        domega=domega,
        dalpha=st.grad(lambda g: g.alpha),
        dR=st.grad(lambda g: g.R),
        dS=st.grad(lambda g: g.S),
        dT=st.grad(lambda g: g.T),
    )


def _moving(st: Stencil, tol: Tolerances, rep: ResidualReport, derivs=None):
    derivs = derivs or _local_derivatives(st, with_omega=False)
    for label, r in moving_terms(_local_fields(st), derivs).items():
        rep.add(label, r, tol.moving)
    return rep


def _fundamental(st: Stencil, tol: Tolerances, rep: ResidualReport):
    if st.m < 2:
        for label, tier in FUNDAMENTAL_TIERS.items():
            rep.add(label, 0.0, getattr(tol, tier), vacuous=True)
        return rep
    terms = fundamental_terms(_local_fields(st), _local_derivatives(st, with_omega=True))
    for label, r in terms.items():
        rep.add(label, r, getattr(tol, FUNDAMENTAL_TIERS[label]))
    return rep


def _lift(st: Stencil, tol: Tolerances, rep: ResidualReport):
    geo = st.center
    sp = geo.space
    eta = sp.eta
    dnu = st.grad(lambda g: g.nu)                          # (m, ell, N)
    dxi = st.frame_derivative()                            # (m, p, N)
    d1e = eta * geo.d1
    xie = eta * geo.xi
    r13n = r13a = 0.0
    for i in sp.curved:
        k = sp.factors[i].k
        normal_part = dnu[:, i, :] @ xie.T                 # (m, p): <D_c nu_i, xi_q>
        r13n = max(r13n, _norm(normal_part + k * geo.S[i].T))
        shape = -dnu[:, i, :] @ d1e.T                      # <A_nu d_c, d_b>
        r13a = max(r13a, _norm(shape - k * geo.R[i]))
    rep.add("eq13_nabla_nu", r13n, tol.lift)
    rep.add("eq13_shape_nu", r13a, tol.lift)
    shape_xi = -np.einsum("cqn,bn->qcb", dxi, d1e)
    rep.add("eq14_shape_xi", _norm(shape_xi - geo.alpha), tol.lift)
    r14 = 0.0
    for i in sp.curved:
        k = sp.factors[i].k
        nu_part = np.einsum("cqn,n->qc", dxi, eta * geo.nu[i]) / k
        r14 = max(r14, _norm(nu_part - geo.S[i]))
    rep.add("eq14_nabla_xi", r14, tol.lift)
    om = st.omega()
    rep.add("omega_skew", _norm(om + om.transpose(0, 2, 1)), tol.moving)
    rep.add("lemma_alpha_lift", geo.alpha_residual, tol.lift)
    r_nu = max((_norm(geo.alpha_nu[i] - geo.R[i]) for i in geo.space.curved), default=0.0)
    rep.add("lemma_alpha_nu", r_nu, tol.lift)
    return rep


def moving_residuals(spec: Immersion, u, h: float = DEFAULT_STEP, tol: Tolerances = DEFAULT_TOLERANCES,
                     seed_order=None) -> ResidualReport:
    """Covariant derivative identities for the split tensors at ``u``."""
    st = Stencil(spec, u, h, seed_order=seed_order, depth=1)
    return _moving(st, tol, ResidualReport())


def fundamental_residuals(spec: Immersion, u, h: float = DEFAULT_STEP,
                          tol: Tolerances = DEFAULT_TOLERANCES, seed_order=None) -> ResidualReport:
    """Gauss, Codazzi (both forms) and Ricci equations at ``u``; vacuous for curves."""
    st = Stencil(spec, u, h, seed_order=seed_order, depth=2)
    return _fundamental(st, tol, ResidualReport())


def lift_residuals(spec: Immersion, u, h: float = DEFAULT_STEP, tol: Tolerances = DEFAULT_TOLERANCES,
                   seed_order=None) -> ResidualReport:
    """Relations between the immersion and its lift into the flat ambient space."""
    st = Stencil(spec, u, h, seed_order=seed_order, depth=1)
    return _lift(st, tol, ResidualReport())


def point_report(spec: Immersion, u, h: float = DEFAULT_STEP, tol: Tolerances = DEFAULT_TOLERANCES,
                 seed_order=None, selection=None) -> ResidualReport:
    """Every identity at one point, sharing one stencil."""
    st = Stencil(spec, u, h, seed_order=seed_order, selection=selection, depth=2 if spec.m > 1 else 1)
    geo = st.center
    rep = algebraic_residuals(split_tensors(spec.space, geo.framed), tol.algebraic, tol.eig)
    _moving(st, tol, rep)
    _fundamental(st, tol, rep)
    _lift(st, tol, rep)
    return rep


def identity_suite(spec: Immersion, points: Iterable, h: float = DEFAULT_STEP,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> ResidualReport:
    """Worst residual of every identity over a set of parameter values."""
    rep = ResidualReport()
    for u in points:
        rep.absorb(point_report(spec, u, h, tol))
    return rep
