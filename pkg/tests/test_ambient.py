import numpy as np
import pytest

from isoprod.ambient import (ProductSpace, SpaceForm, block_project, constraint_residuals,
                             iota_alpha, metric_inner, product_curvature, tangent_projection,
                             tangent_test, validate_point)
from isoprod.errors import ConstraintError, DimensionError, PreconditionError, SheetError

S1S1 = ProductSpace([(1, 1.0), (1, 1.0)])


def test_lorentz_block_inner():
    sp = ProductSpace([(1, -1.0)], allow_single=True)
    assert metric_inner(sp, [1, 0], [1, 0]) == -1.0


def test_inner_with_zero_vector():
    sp = ProductSpace([(2, 1.0), (1, -1.0), (2, 0.0)])
    x = np.arange(sp.N, dtype=float)
    assert metric_inner(sp, x, np.zeros(sp.N)) == 0.0


def test_inner_sums_block_dots():
    assert metric_inner(S1S1, [1, 0, 0, 1], [1, 0, 0, 1]) == 2.0


def test_inner_rejects_wrong_length():
    with pytest.raises(DimensionError):
        metric_inner(S1S1, [1, 0, 0], [1, 0, 0])


def test_block_project_first_factor():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(block_project(S1S1, 1, v), [1, 2, 0, 0])


def test_projections_partition(rng):
    sp = ProductSpace([(2, 1.0), (1, -2.0), (3, 0.0)])
    v = rng.normal(size=sp.N)
    parts = [block_project(sp, i, v) for i in (1, 2, 3)]
    np.testing.assert_allclose(sum(parts), v, atol=0)
    for i in range(3):
        for j in range(3):
            if i != j:
                assert not np.any(block_project(sp, i + 1, parts[j]))


def test_bad_factor_index():
    with pytest.raises(PreconditionError):
        block_project(S1S1, 3, np.zeros(4))


def test_validate_unit_circles():
    pt = validate_point(S1S1, [[1, 0], [0, 1]])
    np.testing.assert_array_equal(pt.block(2), [0, 1])


def test_validate_reports_factor_and_residual():
    with pytest.raises(ConstraintError) as info:
        validate_point(S1S1, [[2, 0], [0, 1]])
    assert info.value.factor == 1
    assert info.value.residual == pytest.approx(3.0)


def test_validate_lower_sheet():
    sp = ProductSpace([(1, -1.0), (1, 1.0)])
    with pytest.raises(SheetError):
        validate_point(sp, [[-1, 0], [0, 1]])


def test_constraint_residuals_flat_block_is_free():
    sp = ProductSpace([(2, 0.0), (1, 1.0)])
    res = constraint_residuals(sp, [5.0, -3.0, 0.0, 1.0])
    np.testing.assert_allclose(res, 0.0)


def test_tangent_examples():
    p = [1, 0, 0, 1]
    assert tangent_test(S1S1, p, [0, 1, 1, 0])
    assert not tangent_test(S1S1, p, p)
    flat = ProductSpace([(2, 0.0), (1, 0.0)])
    assert tangent_test(flat, [0.3, 0.1, 2.0], [4.0, -1.0, 7.0])


def test_tangent_projection_is_tangent(rng):
    sp = ProductSpace([(2, 1.0), (2, -1.0)])
    x1 = rng.normal(size=3)
    x1 /= np.linalg.norm(x1)
    y = rng.normal(size=2)
    x2 = np.concatenate([[np.sqrt(1 + y @ y)], y])
    p = np.concatenate([x1, x2])
    X = tangent_projection(sp, p, rng.normal(size=sp.N))
    assert tangent_test(sp, p, X)


def test_iota_alpha_examples():
    flat = ProductSpace([(1, 0.0), (2, 0.0)])
    np.testing.assert_array_equal(iota_alpha(flat, np.zeros(3), [1, 0, 0], [0, 1, 0]), 0.0)
    X = [0, 1, 0, 0]
    np.testing.assert_allclose(iota_alpha(S1S1, [1, 0, 1, 0], X, X), [-1, 0, 0, 0])


def test_iota_alpha_symmetric(rng):
    sp = ProductSpace([(2, 1.0), (2, 0.5)])
    x1 = rng.normal(size=3)
    x2 = rng.normal(size=3)
    p = np.concatenate([x1 / np.linalg.norm(x1), x2 / np.linalg.norm(x2) * np.sqrt(2)])
    X = tangent_projection(sp, p, rng.normal(size=6))
    Y = tangent_projection(sp, p, rng.normal(size=6))
    np.testing.assert_allclose(iota_alpha(sp, p, X, Y), iota_alpha(sp, p, Y, X), atol=1e-14)


def test_product_curvature_examples(rng):
    sp = ProductSpace([(2, 1.0), (1, 0.0)])
    p = np.array([0.0, 0.0, 1.0, 0.0])
    X = np.array([1.0, 0.0, 0.0, 0.0])
    Y = np.array([0.0, 1.0, 0.0, 0.0])
    np.testing.assert_allclose(product_curvature(sp, p, X, Y, X), -Y)
    np.testing.assert_allclose(product_curvature(sp, p, X, X, Y), 0.0)
    flat = ProductSpace([(2, 0.0), (1, 0.0)])
    v = [rng.normal(size=3) for _ in range(3)]
    np.testing.assert_allclose(product_curvature(flat, np.zeros(3), *v), 0.0)


def test_space_form_validation():
    with pytest.raises(PreconditionError):
        SpaceForm(0, 1.0)
    with pytest.raises(PreconditionError):
        ProductSpace([(1, 1.0)])
    f = SpaceForm(2, -1.0)
    assert f.block_dim == 3 and f.lorentzian
    np.testing.assert_array_equal(f.signature, [-1, 1, 1])


def test_product_bookkeeping():
    sp = ProductSpace([(2, 1.0), (1, -1.0), (3, 0.0)])
    assert sp.N == 3 + 2 + 3
    assert sp.dim == 6
    assert sp.J == frozenset({1, 2})
    assert ProductSpace.from_dict(sp.to_dict()) == sp
