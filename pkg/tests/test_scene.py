import json

import numpy as np
import pytest

from isoprod.errors import SceneError
from isoprod.jets import Immersion
from isoprod.scene import RECONSTRUCT_COUNTS, Scene, node_from_dict, parse_grid_flag, parse_overrides


def test_grid_flag():
    assert parse_grid_flag("32") == (32,)
    assert parse_grid_flag("32x16") == (32, 16)
    for bad in ("", "x", "3x0", "ax2"):
        with pytest.raises(SceneError):
            parse_grid_flag(bad)


def test_overrides():
    assert parse_overrides(["gauss=2e-5", " ricci = 1e-2"]) == {"gauss": 2e-5, "ricci": 1e-2}
    with pytest.raises(SceneError):
        parse_overrides(["gauss"])
    with pytest.raises(SceneError):
        parse_overrides(["gauss=small"])


def test_gallery_specs_round_trip(gallery):
    for entry in gallery.values():
        d = json.loads(json.dumps(entry.spec.to_dict()))
        spec = Immersion(entry.spec.space, node_from_dict(d["immersion"], entry.spec.space.factors))
        assert spec.to_dict() == entry.spec.to_dict()
        u = entry.grid((3,) * spec.m).points[1]
        for a, b in zip(spec.node.jet(u), entry.spec.node.jet(u)):
            np.testing.assert_array_equal(a, b)


def test_scene_defaults_and_overrides(gallery):
    data = gallery["flat_torus"].spec.to_dict()
    sc = Scene.from_dict(data)
    assert sc.grid.shape == (8, 8)
    sc = Scene.from_dict(data, grid_counts=(12,), overrides={"gauss": 3e-5})
    assert sc.grid.shape == (12, 12) and sc.tolerances.gauss == 3e-5
    sc = Scene.from_dict(data, default_counts=RECONSTRUCT_COUNTS)
    assert sc.grid.shape == (32, 32)


def test_scene_grid_validation(gallery):
    data = gallery["slice_circle"].spec.to_dict()
    with pytest.raises(SceneError):
        Scene.from_dict({**data, "grid": {"ranges": [[-9.0, 1.0]], "counts": [10]}})
    with pytest.raises(SceneError):
        Scene.from_dict({**data, "grid": {"ranges": [[-1.0, 1.0], [0, 1]], "counts": [10, 10]}})
    with pytest.raises(SceneError):
        Scene.from_dict(data, grid_counts=(4, 4))
    with pytest.raises(SceneError):
        Scene.from_dict({**data, "tolerances": {"nonsense": 1.0}})


def test_malformed_scenes():
    with pytest.raises(SceneError):
        Scene.from_dict([])
    with pytest.raises(SceneError):
        Scene.from_dict({"space": {"factors": [{"n": 1, "k": 1.0}, {"n": 1, "k": 1.0}]}})
    with pytest.raises(SceneError):
        node_from_dict({"op": "circle", "k": 1.0, "radius": 2.0})
    with pytest.raises(SceneError):
        node_from_dict({"k": 1.0})
