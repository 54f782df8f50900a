import math

import numpy as np
import pytest

from isoprod.ambient import ProductSpace
from isoprod.errors import DegenerateImmersionError, PreconditionError
from isoprod.gallery import make_product, make_slice, make_weighted_sum
from isoprod.jets import (Immersion, PointGeometry, Stencil, christoffels, eval_jet, induced_metric,
                          normal_connection, orthonormal_frames, riemann, sample_grid,
                          second_fundamental)
from isoprod.nodes import Circle, Helix, HyperbolicPatch, LatitudeCircle, SpherePatch

S1S1 = ProductSpace([(1, 1.0), (1, 1.0)])
H = 1 / math.sqrt(2)


def slice_circle():
    return make_slice(S1S1, 2, [[1.0, 0.0]], Circle(1.0))


def circle_sum():
    return make_weighted_sum([H, H], [Circle(0.5), Circle(0.5)])


def torus():
    return make_product(S1S1, [[1], [2]], [Circle(1.0), Circle(1.0)])


def test_circle_jet_at_zero():
    spec = Immersion(ProductSpace([(1, 1.0)], allow_single=True), Circle(1.0))
    jet = eval_jet(spec, 0.0)
    np.testing.assert_allclose(jet.value, [1, 0])
    np.testing.assert_allclose(jet.d1, [[0, 1]])
    np.testing.assert_allclose(jet.d2[0, 0], [-1, 0])


def test_torus_jet_columns():
    jet = eval_jet(torus(), [0.0, 0.0])
    np.testing.assert_allclose(jet.d1, [[0, 1, 0, 0], [0, 0, 0, 1]])


@pytest.mark.parametrize("t", [-1.3, 0.0, 0.4, 2.0])
def test_circle_sum_closed_form(t):
    jet = eval_jet(circle_sum(), t)
    s = t / math.sqrt(2)
    np.testing.assert_allclose(jet.value, [math.cos(s), math.sin(s)] * 2, atol=1e-15)
    assert float(jet.d1[0] @ jet.d1[0]) == pytest.approx(1.0, abs=1e-15)


def test_jet_outside_domain():
    with pytest.raises(PreconditionError):
        eval_jet(slice_circle(), 10.0)


def test_induced_metric_examples():
    assert induced_metric(eval_jet(circle_sum(), 0.3), S1S1) == pytest.approx(np.eye(1))
    np.testing.assert_allclose(induced_metric(eval_jet(torus(), [0.1, -0.2]), S1S1), np.eye(2), atol=1e-15)


def test_misdeclared_unit_speed_helix():
    spec = make_slice(ProductSpace([(3, 0.0), (1, 1.0)]), 1, [[0.0, 1.0]],
                      Helix(1.0, 0.5, speed=2.0, unit_speed=True))
    with pytest.raises(DegenerateImmersionError):
        induced_metric(eval_jet(spec, 0.0), spec.space)


def test_slice_normal_frame():
    spec = slice_circle()
    fr = orthonormal_frames(spec.space, eval_jet(spec, 0.7))
    assert fr.normal.shape == (1, 4)
    np.testing.assert_allclose(np.abs(fr.normal[0]), [0, 1, 0, 0], atol=1e-14)


def test_full_dimensional_has_no_normals():
    fr = orthonormal_frames(S1S1, eval_jet(torus(), [0.2, 0.3]))
    assert fr.normal.shape == (0, 4)


def test_flat_factor_position_normal_vanishes():
    sp = ProductSpace([(2, 0.0), (1, 1.0)])
    spec = make_slice(sp, 2, [[0.3, -0.2]], Circle(1.0))
    fr = orthonormal_frames(sp, eval_jet(spec, 0.5))
    assert not np.any(fr.nu[0])
    np.testing.assert_allclose(fr.nu[1], -sp.project(1, fr.value))


def _alpha(spec, u):
    jet = eval_jet(spec, u)
    fr = orthonormal_frames(spec.space, jet)
    return second_fundamental(spec.space, fr, christoffels(spec, u))


def test_second_fundamental_vanishes_on_geodesic_examples():
    a, _ = _alpha(slice_circle(), 0.4)
    np.testing.assert_allclose(a, 0.0, atol=1e-14)
    a, _ = _alpha(circle_sum(), -0.9)
    np.testing.assert_allclose(a, 0.0, atol=1e-14)


def test_second_fundamental_symmetric():
    spec = make_weighted_sum([H, H], [SpherePatch(0.5, 3, 1.0), SpherePatch(0.5, 3, 1.0)])
    a, anu = _alpha(spec, [0.2, 0.35])
    np.testing.assert_allclose(a, a.transpose(0, 2, 1), atol=1e-14)
    np.testing.assert_allclose(anu, anu.transpose(0, 2, 1), atol=1e-14)


def test_christoffels_vanish_for_flat_parametrizations():
    np.testing.assert_allclose(christoffels(torus(), [0.1, 0.2]), 0.0, atol=1e-15)
    np.testing.assert_allclose(christoffels(circle_sum(), 0.5), 0.0, atol=1e-15)


def _fd_christoffels(spec, u, h=1e-3):
    """Christoffel symbols from a fourth-order difference of the metric alone."""
    u = np.asarray(u, dtype=float)
    m = len(u)

    def metric(v):
        d1 = eval_jet(spec, v).d1
        return d1 @ (spec.space.eta * d1).T

    dg = np.zeros((m, m, m))
    for c in range(m):
        e = np.zeros(m)
        e[c] = h
        dg[c] = (-metric(u + 2 * e) + 8 * metric(u + e) - 8 * metric(u - e) + metric(u - 2 * e)) / (12 * h)
    ginv = np.linalg.inv(metric(u))
    out = np.zeros((m, m, m))
    for c in range(m):
        for a in range(m):
            for b in range(m):
                out[c, a, b] = 0.5 * sum(ginv[c, d] * (dg[a, d, b] + dg[b, d, a] - dg[d, a, b])
                                         for d in range(m))
    return out


@pytest.mark.parametrize("node,u", [(SpherePatch(1.0), [0.3, -0.4]),
                                    (SpherePatch(0.5, 3, 1.0), [0.1, 0.6]),
                                    (HyperbolicPatch(-1.0), [0.4, 0.2])])
def test_christoffels_match_metric_differences(node, u):
    sp = ProductSpace([(node.factors[0].n, node.factors[0].k), (1, 1.0)])
    spec = make_slice(sp, 1, [[1.0, 0.0]], node)
    np.testing.assert_allclose(christoffels(spec, u), _fd_christoffels(spec, u), atol=1e-9)


def test_riemann_examples():
    assert not np.any(riemann(circle_sum(), 0.2))
    np.testing.assert_allclose(riemann(torus(), [0.1, 0.3]), 0.0, atol=1e-8)
    sp = ProductSpace([(2, 1.0), (1, 1.0)])
    spec = make_slice(sp, 1, [[1.0, 0.0]], SpherePatch(1.0))
    for u in ([0.0, 0.0], [0.5, -0.3], [-0.7, 0.6]):
        Rm = riemann(spec, u)
        jet = eval_jet(spec, u)
        g = jet.d1 @ jet.d1.T
        # sectional curvature <R(d0, d1) d1, d0> / det g
        K = np.einsum("d,d->", g[0], Rm[:, 1, 0, 1]) / np.linalg.det(g)
        assert K == pytest.approx(1.0, abs=1e-6)


def test_normal_connection_slice_and_codim_zero():
    omega, A = normal_connection(slice_circle(), 0.3)
    np.testing.assert_allclose(omega, 0.0, atol=1e-10)
    np.testing.assert_allclose(A, 0.0, atol=1e-10)
    omega, A = normal_connection(torus(), [0.1, 0.1])
    assert omega.size == 0 and A.size == 0


def test_shape_operators_symmetric():
    spec = make_product(ProductSpace([(2, 1.0), (2, 1.0)]), [[1], [2]],
                        [LatitudeCircle(1.0, 1.0), LatitudeCircle(1.0, 0.7)])
    _, A = normal_connection(spec, [0.2, -0.4])
    np.testing.assert_allclose(A, A.transpose(0, 2, 1), atol=1e-7)


def test_sample_grid_keeps_frames_smooth(gallery):
    entry = gallery["latitude_pair"]
    pts = entry.grid().points
    geos = sample_grid(entry.spec, pts)
    assert len(geos) == len(pts)
    assert len({g.framed.selection for g in geos}) == 1


def test_stencil_requires_margin():
    spec = slice_circle()
    lo = spec.domain[0][0]
    with pytest.raises(PreconditionError):
        Stencil(spec, lo + 1e-6, 1e-3)


def test_point_geometry_split_blocks():
    geo = PointGeometry(slice_circle(), 0.2)
    np.testing.assert_allclose(geo.R[:, 0, 0], [0, 1], atol=1e-15)
    np.testing.assert_allclose(geo.T[:, 0, 0], [1, 0], atol=1e-15)
