"""Randomised checks of invariants that hold for every input."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.linalg import block_diag

from isoprod.ambient import ProductSpace, block_project, metric_inner
from isoprod.bonnet import match_immersions
from isoprod.calculus import algebraic_residuals, split_tensors
from isoprod.gallery import compose_isometry, detect, extract_factor_isometries, make_weighted_sum, rotation
from isoprod.grid import Grid
from isoprod.jets import PointGeometry, sample_grid
from isoprod.nodes import Circle, LatitudeCircle, Line, geodesic_weights
from isoprod.numerics import grid_derivative

FAST = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
angles = st.floats(-math.pi, math.pi, allow_nan=False)
fracs = st.floats(0.05, 0.95)

SPACE = ProductSpace([(2, 1.0), (1, -2.0), (2, 0.0)])
vectors = st.lists(st.floats(-10, 10, allow_nan=False), min_size=SPACE.N, max_size=SPACE.N).map(np.array)


@FAST
@given(vectors, vectors, vectors, st.floats(-3, 3))
def test_inner_is_bilinear_and_symmetric(x, y, z, c):
    lhs = metric_inner(SPACE, x + c * y, z)
    rhs = metric_inner(SPACE, x, z) + c * metric_inner(SPACE, y, z)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))
    assert metric_inner(SPACE, x, y) == metric_inner(SPACE, y, x)


@FAST
@given(vectors)
def test_projections_are_complementary(v):
    parts = [block_project(SPACE, i, v) for i in (1, 2, 3)]
    np.testing.assert_array_equal(sum(parts), v)
    assert all(metric_inner(SPACE, parts[0], parts[j]) == 0 for j in (1, 2))


@FAST
@given(fracs, st.floats(-2.0, 2.0))
def test_weighted_circle_sum(w, t):
    a = np.array([math.sqrt(w), math.sqrt(1 - w)])
    spec = make_weighted_sum(a, [Circle(a[0] ** 2), Circle(a[1] ** 2)])
    geo = PointGeometry(spec, t)
    np.testing.assert_allclose(geo.R[:, 0, 0], a ** 2, atol=1e-14)
    assert algebraic_residuals(split_tensors(spec.space, geo.framed)).passed


@FAST
@given(fracs)
def test_detector_recovers_random_weights(w):
    a = np.array([math.sqrt(w), math.sqrt(1 - w)])
    spec = make_weighted_sum(a, [LatitudeCircle(a[0] ** 2, 1.2), Line(1)])
    verdict = detect(spec.space, sample_grid(spec, Grid.inside(spec.domain, [7]).points))
    assert verdict.kind == "weighted_sum"
    np.testing.assert_allclose(verdict.weights, a, atol=1e-8)


@FAST
@given(st.lists(st.floats(0.2, 5.0), min_size=2, max_size=4), st.booleans())
def test_geodesic_weights_balance(ks, negative):
    k = -np.array(ks) if negative else np.array(ks)
    a, kt = geodesic_weights(k)
    assert abs(np.sum(a * a) - 1) < 1e-14
    np.testing.assert_allclose(a * a * k, kt, rtol=1e-13)


@FAST
@given(angles, angles)
def test_factor_isometries_from_rotated_diagonal(t1, t2):
    h = 1 / math.sqrt(2)
    V = np.vstack([h * rotation(t1), h * rotation(t2)])
    Ts = extract_factor_isometries(V, [1.0, 1.0])
    # the first block fixes the model frame, so T_2 T_1^-1 is the relative rotation
    np.testing.assert_allclose(Ts[1] @ Ts[0].T, rotation(t2 - t1), atol=1e-12)


@FAST
@given(st.lists(st.floats(-2, 2), min_size=7, max_size=7), st.integers(7, 30))
def test_grid_derivative_exact_for_sextics(coeffs, n):
    p = np.polynomial.Polynomial(coeffs)
    x = np.linspace(-1, 1, n)
    np.testing.assert_allclose(grid_derivative(p(x), x[1] - x[0]), p.deriv()(x), atol=1e-8)


H = 1 / math.sqrt(2)
BASE = make_weighted_sum([H, H], [LatitudeCircle(0.5, 1.0), LatitudeCircle(0.5, 0.8)])
BASE_GRID = Grid.inside(BASE.domain, [30])


def _rot3(a, b):
    return block_diag(rotation(a), [[1.0]]) @ block_diag([[1.0]], rotation(b))


@settings(max_examples=10, deadline=None)
@given(angles, angles, angles, angles)
def test_match_recovers_random_block_isometries(a1, b1, a2, b2):
    L = [_rot3(a1, b1), _rot3(a2, b2)]
    match = match_immersions(BASE, compose_isometry(BASE, L), BASE_GRID)
    np.testing.assert_allclose(match.B, block_diag(*L), atol=1e-9)
    assert match.report.passed and match.error <= 1e-9
