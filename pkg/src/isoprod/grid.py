"""Rectangular parameter grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, SceneError


@dataclass(frozen=True)
class Grid:
    """Tensor grid: one ``(lo, hi, count)`` triple per parameter, row-major order."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(n)) for lo, hi, n in self.axes)
        if not axes:
            raise SceneError("grid needs at least one axis")
        for lo, hi, n in axes:
            if n < 1:
                raise SceneError("grid is empty")
            if n > 1 and hi <= lo:
                raise SceneError("grid axis must have hi > lo")
        object.__setattr__(self, "axes", axes)

    @property
    def m(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n for _, _, n in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def coords(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, n) for lo, hi, n in self.axes]

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / (n - 1) if n > 1 else 0.0 for lo, hi, n in self.axes])

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.coords, indexing="ij")
        return np.stack([c.ravel() for c in mesh], axis=-1)

    @classmethod
    def inside(cls, domain, counts, margin: float = 0.05) -> "Grid":
        """Grid over a domain box shrunk by ``margin`` of its width on every side."""
        if np.ndim(counts) == 0:
            counts = [int(counts)] * len(domain)
        if len(counts) != len(domain):
            raise PreconditionError("need one count per parameter")
        axes = []
        for (lo, hi), n in zip(domain, counts):
            w = hi - lo
            axes.append((lo + margin * w, hi - margin * w, n))
        return cls(tuple(axes))

    def to_dict(self) -> dict:
        return {"ranges": [[lo, hi] for lo, hi, _ in self.axes], "counts": list(self.shape)}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        try:
            ranges = data["ranges"]
            counts = data["counts"]
        except (KeyError, TypeError) as exc:
            raise SceneError(f"grid needs 'ranges' and 'counts': {exc}") from exc
        if "dims" in data and int(data["dims"]) != len(ranges):
            raise SceneError("grid 'dims' disagrees with its ranges")
        if len(ranges) != len(counts):
            raise SceneError("grid ranges and counts differ in length")
        return cls(tuple((r[0], r[1], c) for r, c in zip(ranges, counts)))
