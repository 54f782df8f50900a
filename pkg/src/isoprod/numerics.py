"""Fixed-step grid differences, midpoint interpolation and RK4 frame propagators."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import PreconditionError

@lru_cache(maxsize=None)
def _weights(offsets: tuple) -> np.ndarray:
    """First-derivative weights for samples at integer ``offsets`` (unit spacing)."""
    s = np.array(offsets, dtype=float)
    V = np.vander(s, increasing=True).T
    rhs = np.zeros(len(s))
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


def grid_derivative(values, spacing: float, axis: int = 0, order: int = 6) -> np.ndarray:
    """Derivative of samples along ``axis`` from polynomial fits on ``order + 1`` nodes.

    Interior nodes use centered stencils; the ``order // 2`` nodes nearest
    each end use one-sided stencils of the same width.  The order drops to
    what the axis supports, but never below four.
    """
    a = np.asarray(values, dtype=float)
    n = a.shape[axis]
    order = min(order, n - 1 - (n - 1) % 2)
    if order < 4:
        raise PreconditionError(f"grid differences need 5 nodes along an axis, got {n}")
    if spacing <= 0:
        raise PreconditionError("grid spacing must be positive")
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    half = order // 2
    w = _weights(tuple(range(-half, half + 1)))
    out[half:n - half] = sum(wj * a[j:n - order + j] for j, wj in enumerate(w))
    for pos in range(half):
        w = _weights(tuple(range(-pos, order + 1 - pos)))
        out[pos] = sum(wj * a[j] for j, wj in enumerate(w))
        out[n - 1 - pos] = -sum(wj * a[n - 1 - j] for j, wj in enumerate(w))
    out /= spacing
    return np.moveaxis(out, 0, axis)


def grid_gradient(values, spacing, lead: int) -> np.ndarray:
    """Derivatives along the first ``lead`` axes, stacked on a new trailing-grid axis.

    For samples of shape ``grid + tensor`` the result has shape
    ``grid + (lead,) + tensor``.
    """
    a = np.asarray(values, dtype=float)
    parts = [grid_derivative(a, spacing[c], axis=c) for c in range(lead)]
    return np.stack(parts, axis=lead)


@lru_cache(maxsize=None)
def _lagrange(offsets: tuple, x: float) -> np.ndarray:
    """Weights of the interpolating polynomial through integer ``offsets`` evaluated at ``x``."""
    s = np.array(offsets, dtype=float)
    w = np.ones(len(s))
    for j in range(len(s)):
        for k in range(len(s)):
            if k != j:
                w[j] *= (x - s[k]) / (s[j] - s[k])
    return w


def interpolate_edges(values, fractions, axis: int = 0, width: int = 6) -> np.ndarray:
    """Values at ``fractions`` of the way along every edge between consecutive nodes.

    Uses Lagrange interpolation on ``width`` nodes centred on the edge where
    possible.  The result has shape ``(n - 1, len(fractions)) + rest`` with the
    edge axis first.
    """
    a = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    n = a.shape[0]
    width = min(width, n)
    if width < 4:
        raise PreconditionError(f"edge interpolation needs 4 nodes, got {n}")
    out = np.empty((n - 1, len(fractions)) + a.shape[1:])
    for e in range(n - 1):
        lo = min(max(e - (width // 2 - 1), 0), n - width)
        offs = tuple(range(lo - e, lo - e + width))
        for f, x in enumerate(fractions):
            w = _lagrange(offs, float(x))
            out[e, f] = np.tensordot(w, a[lo:lo + width], axes=1)
    return out


def rk4_propagators(W0, Wm, W1, h: float, column: int):
    """One RK4 step of ``Phi' = Phi W`` and ``F' = Phi e_column`` for a batch of edges.

    ``W0``, ``Wm`` and ``W1`` hold the connection matrices at the start, middle
    and end of each step (shape ``(..., n, n)``).  Returns ``(P, q)`` with
    ``Phi_next = Phi @ P`` and ``F_next = F + Phi @ q``.
    """
    W0, Wm, W1 = (np.asarray(w, dtype=float) for w in (W0, Wm, W1))
    eye = np.broadcast_to(np.eye(W0.shape[-1]), W0.shape)
    Y2 = eye + 0.5 * h * W0
    Y3 = eye + 0.5 * h * Y2 @ Wm
    Y4 = eye + h * Y3 @ Wm
    P = eye + (h / 6.0) * (W0 + 2.0 * Y2 @ Wm + 2.0 * Y3 @ Wm + Y4 @ W1)
    q = (h / 6.0) * (eye + 2.0 * Y2 + 2.0 * Y3 + Y4)[..., :, column]
    return P, q


def edge_propagators(W, h: float, column: int, axis: int = 0, max_step: float = 1e-2):
    """Composite RK4 transport across every edge along ``axis``.

    ``W`` holds node samples of the connection matrix for direction ``column``.
    Each edge of length ``h`` is split into equal substeps no longer than
    ``max_step``.  Returns ``(P, q)`` with the edge axis first.
    """
    sub = max(1, int(np.ceil(h / max_step - 1e-12)))
    fr = np.arange(2 * sub + 1) / (2.0 * sub)
    Ws = interpolate_edges(W, fr, axis=axis)                  # (n-1, 2 sub + 1, ..., N, N)
    dt = h / sub
    P, q = rk4_propagators(Ws[:, 0], Ws[:, 1], Ws[:, 2], dt, column)
    for s in range(1, sub):
        Ps, qs = rk4_propagators(Ws[:, 2 * s], Ws[:, 2 * s + 1], Ws[:, 2 * s + 2], dt, column)
        q = q + np.einsum("...ab,...b->...a", P, qs)
        P = P @ Ps
    return P, q
