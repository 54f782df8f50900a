"""Scene files: a product space, an immersion tree, a grid and run options."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ambient import ProductSpace, SpaceForm
from .calculus import DEFAULT_TOLERANCES, Tolerances
from .errors import IsoprodError, SceneError
from .grid import Grid
from .jets import Immersion
from .nodes import (BlockIsometry, Circle, Helix, Hyperbola, HyperbolicPatch, LatitudeCircle, Line,
                    Plane, Product, Slice, SpecialGeodesic, SpherePatch, WeightedSum,
                    geodesic_weights)

_PRIMITIVES = {
    "circle": (Circle, ("k", "n", "speed", "phase", "unit_speed", "domain", "accel")),
    "latitude_circle": (LatitudeCircle, ("k", "polar", "n", "speed", "unit_speed", "domain")),
    "hyperbola": (Hyperbola, ("k", "n", "speed", "unit_speed", "domain")),
    "line": (Line, ("n", "direction", "origin", "speed", "unit_speed", "domain")),
    "plane": (Plane, ("n", "directions", "origin", "domain")),
    "helix": (Helix, ("radius", "pitch", "speed", "unit_speed", "domain")),
    "sphere_patch": (SpherePatch, ("k", "n", "polar", "domain")),
    "hyperbolic_patch": (HyperbolicPatch, ("k", "n", "domain")),
}

DEFAULT_COUNTS = {1: (60,), 2: (8, 8)}
RECONSTRUCT_COUNTS = {1: (200,), 2: (32, 32)}


def node_from_dict(data: dict, factors=None):
    """Build an immersion node from its dictionary form.

    ``factors`` are the space forms the node must target; combinators need
    them to size their parts.
    """
    if not isinstance(data, dict) or "op" not in data:
        raise SceneError("immersion entries need an 'op' field")
    op = data["op"]
    if op in _PRIMITIVES:
        cls, keys = _PRIMITIVES[op]
        unknown = set(data) - set(keys) - {"op"}
        if unknown:
            raise SceneError(f"unknown fields for {op}: {sorted(unknown)}")
        kw = {k: data[k] for k in keys if k in data and data[k] is not None}
        if "domain" in kw:
            kw["domain"] = tuple(tuple(float(x) for x in r) for r in kw["domain"])
        return cls(**kw)
    if factors is None:
        raise SceneError(f"'{op}' needs the target product space")
    factors = tuple(factors)
    if op == "slice":
        i = int(data["factor"])
        if not 1 <= i <= len(factors):
            raise SceneError(f"slice factor {i} out of range")
        inner = node_from_dict(data["inner"], (factors[i - 1],))
        return Slice(factors, i, data["fixed"], inner)
    if op == "product":
        partition = data["partition"]
        parts = [node_from_dict(p, [factors[j - 1] for j in grp])
                 for p, grp in zip(data["parts"], partition)]
        return Product(partition, parts)
    if op == "weighted_sum":
        weights = np.asarray(data["weights"], dtype=float)
        if len(weights) != len(factors) or len(data["parts"]) != len(factors):
            raise SceneError("weighted sum needs one weight and one part per factor")
        parts = [node_from_dict(p, (SpaceForm(f.n, a * a * f.k),))
                 for p, f, a in zip(data["parts"], factors, weights)]
        return WeightedSum(weights, parts)
    if op == "isometry":
        inner = node_from_dict(data["inner"], factors)
        return BlockIsometry(inner, data.get("maps"), data.get("shifts"))
    if op == "special_geodesic":
        ks = [float(k) for k in data["k"]]
        _, kt = geodesic_weights(ks)
        inner = node_from_dict(data["inner"], (SpaceForm(factors[0].n, kt),))
        return SpecialGeodesic(ks, inner, data.get("maps"))
    raise SceneError(f"unknown immersion op {op!r}")


def parse_grid_flag(text: str) -> tuple[int, ...]:
    """``"N"`` or ``"NxM"`` to a tuple of counts."""
    try:
        counts = tuple(int(t) for t in text.lower().split("x"))
    except ValueError as exc:
        raise SceneError(f"bad grid flag {text!r}; expected N or NxM") from exc
    if not counts or any(c < 1 for c in counts):
        raise SceneError(f"bad grid flag {text!r}; counts must be positive")
    return counts


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise SceneError(f"tolerance override {item!r} must look like KEY=VALUE")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise SceneError(f"tolerance override {item!r} has a non-numeric value") from exc
    return out


@dataclass
class Scene:
    spec: Immersion
    grid: Grid
    tolerances: Tolerances = DEFAULT_TOLERANCES
    options: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict, grid_counts=None, overrides=None, default_counts=None) -> "Scene":
        if not isinstance(data, dict):
            raise SceneError("a scene is a JSON object")
        try:
            space = ProductSpace.from_dict(data["space"])
            node = node_from_dict(data["immersion"], space.factors)
            spec = Immersion(space, node)
        except KeyError as exc:
            raise SceneError(f"scene is missing {exc}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, IsoprodError):
                raise
            raise SceneError(f"malformed scene: {exc}") from exc
        grid = _scene_grid(spec, data.get("grid"), grid_counts, default_counts or DEFAULT_COUNTS)
        tol_data = dict(data.get("tolerances") or {})
        tol_data.update(overrides or {})
        try:
            tol = DEFAULT_TOLERANCES.override(**tol_data)
        except KeyError as exc:
            raise SceneError(str(exc)) from exc
        return cls(spec, grid, tol, dict(data.get("options") or {}), data)

    @classmethod
    def load(cls, path, grid_counts=None, overrides=None, default_counts=None) -> "Scene":
        return cls.from_dict(load_json(path), grid_counts, overrides, default_counts)


def _scene_grid(spec: Immersion, data, counts, defaults=DEFAULT_COUNTS) -> Grid:
    m = spec.m
    if counts is not None:
        counts = tuple(counts) * m if len(counts) == 1 else tuple(counts)
        if len(counts) != m:
            raise SceneError(f"grid flag gives {len(counts)} counts for {m} parameters")
    if data is None:
        grid = Grid.inside(spec.domain, list(counts or defaults.get(m, (8,) * m)))
    else:
        grid = Grid.from_dict(data)
        if counts is not None:
            grid = Grid.from_dict({"ranges": [[lo, hi] for lo, hi, _ in grid.axes], "counts": list(counts)})
    if grid.m != m:
        raise SceneError(f"grid has {grid.m} axes but the immersion has {m} parameters")
    for (lo, hi, _), (a, b) in zip(grid.axes, spec.domain):
        if lo < a or hi > b:
            raise SceneError(f"grid range [{lo}, {hi}] leaves the domain [{a}, {b}]")
    return grid


def load_json(path):
    try:
        with open(Path(path)) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SceneError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path} is not valid JSON: {exc}") from exc
