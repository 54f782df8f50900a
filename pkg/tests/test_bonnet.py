import json
import math

import numpy as np
import pytest
from scipy.linalg import block_diag

from isoprod.ambient import validate_point
from isoprod.bonnet import (BonnetData, build_whitney, compatibility_check, default_gauge,
                            extract_data, match_immersions, match_isometry, reconstruct)
from isoprod.errors import IncompatibleDataError, NoMatchError, PreconditionError, SceneError
from isoprod.gallery import catalogue, compose_isometry, rotation
from isoprod.grid import Grid


@pytest.fixture(scope="module")
def circle_sum_data(gallery):
    entry = gallery["circle_sum"]
    return extract_data(entry.spec, entry.grid((200,)))


@pytest.fixture(scope="module")
def sphere_sum_data(gallery):
    entry = gallery["small_sphere_sum"]
    return extract_data(entry.spec, entry.grid((16, 16)))


def test_extract_slice_circle(gallery):
    entry = gallery["slice_circle"]
    data = extract_data(entry.spec, entry.grid((40,)))
    assert data.p == 1
    np.testing.assert_allclose(data.alpha, 0.0, atol=1e-14)
    np.testing.assert_allclose(data.R[..., 0, 0, 0], 0.0, atol=1e-14)
    np.testing.assert_allclose(data.R[..., 1, 0, 0], 1.0, atol=1e-14)


def test_extract_weighted_sum(circle_sum_data):
    g = circle_sum_data.g[:, None]
    np.testing.assert_allclose(circle_sum_data.R, np.broadcast_to(0.5 * g, circle_sum_data.R.shape), atol=1e-14)
    assert compatibility_check(circle_sum_data).passed


def test_extracted_data_is_compatible(gallery):
    for name in ("latitude_pair", "hyperbola_circle", "mixed_three", "chirped_sum"):
        entry = gallery[name]
        counts = (60,) if entry.spec.m == 1 else (12, 12)
        rep = compatibility_check(extract_data(entry.spec, entry.grid(counts)))
        assert rep.passed, (name, rep.failures())


def test_zeroed_alpha_fails_gauss(sphere_sum_data):
    bad = sphere_sum_data.replace(alpha=np.zeros_like(sphere_sum_data.alpha))
    rep = compatibility_check(bad)
    assert "eq10_gauss" in rep.failures()


def test_scaled_R_fails_partition(circle_sum_data):
    bad = circle_sum_data.replace(R=1.1 * circle_sum_data.R)
    rep = compatibility_check(bad)
    assert "eq4_R" in rep.failures()
    # sum_i R_i = 1.1 g, so the orthonormal residual is 0.1 for a curve
    assert rep["eq4_R"].residual == pytest.approx(0.1, rel=1e-9)
    with pytest.raises(IncompatibleDataError) as info:
        reconstruct(bad)
    assert "eq4_R" in info.value.report.failures()


def test_whitney_slice_projection(gallery):
    entry = gallery["slice_circle"]
    wd = build_whitney(extract_data(entry.spec, entry.grid((30,))))
    m, p = 1, 1
    P2 = wd.P[..., 1, :, :]
    np.testing.assert_allclose(P2[..., :m, :m], 1.0, atol=1e-14)
    np.testing.assert_allclose(P2[..., m:m + p, :m], 0.0, atol=1e-14)
    np.testing.assert_allclose(wd.nu_norms, [1.0, 1.0])
    np.testing.assert_allclose(wd.metric[..., 2, 2], 1.0)


def test_whitney_flat_factor_has_no_position_normal(gallery):
    entry = gallery["latitude_line"]
    data = extract_data(entry.spec, entry.grid((30,)))
    wd = build_whitney(data)
    assert wd.N == data.m + data.p + 1
    assert wd.report.passed


def test_claims_on_every_extracted_grid(gallery):
    # the parallel claim is a grid derivative, so it is checked at the reconstruction resolution
    for entry in gallery.values():
        counts = (200,) if entry.spec.m == 1 else (32, 32)
        wd = build_whitney(extract_data(entry.spec, entry.grid(counts)), strict=False)
        for label in ("claim_idempotent", "claim_self_adjoint", "claim_partition", "claim_parallel"):
            assert wd.report[label].passed, (entry.name, label, wd.report[label])


def test_parallel_claim_converges(gallery):
    entry = gallery["geodesic_sphere"]
    res = [build_whitney(extract_data(entry.spec, entry.grid((n, n))), strict=False).report["claim_parallel"].residual
           for n in (12, 24)]
    assert res[1] < res[0] / 8


def test_round_trip_circle_sum(circle_sum_data):
    res = reconstruct(circle_sum_data)
    match = match_isometry(circle_sum_data.points, circle_sum_data.frames, res.points, res.frames,
                           circle_sum_data.space)
    assert match.report.passed
    assert match.error <= 1e-6


def test_torus_holonomy(gallery):
    entry = gallery["flat_torus"]
    res = reconstruct(extract_data(entry.spec, entry.grid((32, 32))))
    assert res.holonomy <= 1e-6
    assert res.report["path_independence"].residual <= 1e-6


def test_gauge_change_is_an_isometry(circle_sum_data):
    wd = build_whitney(circle_sum_data)
    Phi0 = default_gauge(wd)
    L = block_diag(rotation(0.3), rotation(-1.1))
    base = reconstruct(circle_sum_data)
    moved = reconstruct(circle_sum_data, gauge=L @ Phi0)
    match = match_isometry(base.points, base.frames, moved.points, moved.frames, circle_sum_data.space)
    assert match.error <= 1e-6
    np.testing.assert_allclose(match.B, L, atol=1e-9)


def test_gauge_must_respect_factors(circle_sum_data):
    Phi0 = default_gauge(build_whitney(circle_sum_data))
    swap = np.eye(4)[[2, 3, 0, 1]]
    with pytest.raises(PreconditionError):
        reconstruct(circle_sum_data, gauge=swap @ Phi0)


def test_match_identity(circle_sum_data):
    d = circle_sum_data
    match = match_isometry(d.points, d.frames, d.points, d.frames, d.space)
    np.testing.assert_allclose(match.B, np.eye(4), atol=1e-15)
    np.testing.assert_allclose(match.C, 0.0, atol=1e-15)


def test_match_block_rotation(gallery):
    entry = gallery["circle_sum"]
    R = rotation(0.9)
    G = compose_isometry(entry.spec, [None, R])
    match = match_immersions(entry.spec, G, entry.grid((80,)))
    np.testing.assert_allclose(match.B, block_diag(np.eye(2), R), atol=1e-9)
    np.testing.assert_allclose(match.C, 0.0, atol=1e-8)
    assert match.error <= 1e-9 and match.report.passed


def test_match_flat_shift(gallery):
    entry = gallery["mixed_three"]
    shift = [None, None, [0.7]]
    G = compose_isometry(entry.spec, shifts=shift)
    match = match_immersions(entry.spec, G, entry.grid((8, 8)))
    sp = entry.spec.space
    np.testing.assert_allclose(match.C[sp.blocks[2]], [0.7], atol=1e-12)
    np.testing.assert_allclose(np.delete(match.C, np.arange(sp.N)[sp.blocks[2]]), 0.0, atol=1e-12)
    assert match.report.passed and match.error <= 1e-9


def test_match_rejects_other_products(gallery):
    with pytest.raises(NoMatchError):
        match_immersions(gallery["circle_sum"].spec, gallery["latitude_line"].spec,
                         gallery["circle_sum"].grid())


def test_recovered_isometry_preserves_factor_sets(gallery, rng):
    entry = gallery["latitude_pair"]
    L1 = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    L2 = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    G = compose_isometry(entry.spec, [L1, L2])
    match = match_immersions(entry.spec, G, entry.grid((8, 8)))
    sp = entry.spec.space
    for _ in range(20):
        x = np.concatenate([v / np.linalg.norm(v) for v in rng.normal(size=(2, 3))])
        validate_point(sp, match.B @ x + match.C, tol=1e-9)


def test_json_round_trip(sphere_sum_data):
    text = json.dumps(sphere_sum_data.to_dict())
    back = BonnetData.from_dict(json.loads(text))
    for name in ("g", "Gamma", "omega", "alpha", "R", "S", "T"):
        np.testing.assert_array_equal(getattr(back, name), getattr(sphere_sum_data, name))
    assert back.grid == sphere_sum_data.grid and back.space == sphere_sum_data.space
    d = sphere_sum_data.to_dict()
    d["points"] = d["points"][:-1]
    with pytest.raises(SceneError):
        BonnetData.from_dict(d)


def test_data_needs_fine_grids(gallery):
    entry = gallery["flat_torus"]
    data = extract_data(entry.spec, entry.grid((3, 3)))
    rep = compatibility_check(data)
    assert not rep.passed


@pytest.mark.parametrize("name", sorted(catalogue()))
def test_round_trip_every_gallery_spec(gallery, name):
    entry = gallery[name]
    one = entry.spec.m == 1
    data = extract_data(entry.spec, entry.grid((200,) if one else (32, 32)))
    res = reconstruct(data)
    match = match_isometry(data.points, data.frames, res.points, res.frames, data.space)
    assert match.report.passed, match.report.failures()
    assert match.error <= (1e-5 if one else 1e-4)
    if not one:
        assert res.report["path_independence"].residual <= 1e-6
