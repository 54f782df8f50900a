import numpy as np
import pytest
from scipy.linalg import expm

from isoprod.errors import PreconditionError
from isoprod.numerics import edge_propagators, grid_derivative, grid_gradient, interpolate_edges


def test_derivative_exact_on_polynomials():
    x = np.linspace(-1.0, 2.0, 13)
    p = np.polynomial.Polynomial([0.3, -1.0, 2.0, 0.5, -0.25, 0.1, 0.07])
    d = grid_derivative(p(x), x[1] - x[0])
    np.testing.assert_allclose(d, p.deriv()(x), atol=1e-9)


def test_derivative_convergence_order():
    errs = []
    for n in (21, 41, 81):
        x = np.linspace(0.0, 2.0, n)
        errs.append(np.abs(grid_derivative(np.sin(3 * x), x[1] - x[0]) - 3 * np.cos(3 * x)).max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 5.5)


def test_derivative_along_axis_and_short_axes():
    x = np.linspace(0, 1, 9)
    y = np.linspace(0, 2, 7)
    X, Y = np.meshgrid(x, y, indexing="ij")
    f = X ** 3 * Y + Y ** 2
    g = grid_gradient(f, [x[1] - x[0], y[1] - y[0]], lead=2)
    np.testing.assert_allclose(g[:, :, 0], 3 * X ** 2 * Y, atol=1e-10)
    np.testing.assert_allclose(g[:, :, 1], X ** 3 + 2 * Y, atol=1e-10)
    with pytest.raises(PreconditionError):
        grid_derivative(np.arange(4.0), 1.0)


def test_interpolation_exact_on_quintics():
    x = np.linspace(0.0, 1.0, 11)
    p = np.polynomial.Polynomial([1.0, -2.0, 0.5, 3.0, -1.0, 0.2])
    fr = np.array([0.0, 0.25, 0.5, 1.0])
    out = interpolate_edges(p(x), fr)
    h = x[1] - x[0]
    want = p(x[:-1, None] + fr[None, :] * h)
    np.testing.assert_allclose(out, want, atol=1e-12)


def _augmented(W, h, column):
    N = W.shape[0]
    A = np.zeros((N + 1, N + 1))
    A[:N, :N] = W
    A[column, N] = 1.0
    E = expm(h * A)
    return E[:N, :N], E[:N, N]


def test_constant_connection_matches_exponential(rng):
    N = 4
    W = rng.normal(size=(N, N))
    W = W - W.T
    samples = np.broadcast_to(W, (6, N, N)).copy()
    P, q = edge_propagators(samples, 0.1, column=1)
    Pe, qe = _augmented(W, 0.1, 1)
    # ten RK4 substeps of 1e-2 with |W| ~ 3: truncation near 1e-9
    for e in range(5):
        np.testing.assert_allclose(P[e], Pe, atol=1e-8)
        np.testing.assert_allclose(q[e], qe, atol=1e-8)
    P1, _ = edge_propagators(samples, 0.1, column=1, max_step=0.1)
    P2, _ = edge_propagators(samples, 0.1, column=1, max_step=0.05)
    ratio = np.abs(P1[0] - Pe).max() / np.abs(P2[0] - Pe).max()
    assert 12 < ratio < 20            # fourth order: halving the step cuts the error by ~16


def test_variable_connection_against_fine_integration():
    # W(t) = t * A + B along one edge; compare with a very fine product of exponentials
    A = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.5], [0.0, -0.5, 0.0]])
    B = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    t = np.linspace(0.0, 0.6, 7)
    W = np.array([s * A + B for s in t])
    P, q = edge_propagators(W, t[1] - t[0], column=0)
    Pref = np.eye(3)
    qref = np.zeros(3)
    n = 4000
    dt = (t[1] - t[0]) / n
    for j in range(n):
        s = (j + 0.5) * dt
        Pe, qe = _augmented(s * A + B, dt, 0)
        qref = qref + Pref @ qe
        Pref = Pref @ Pe
    np.testing.assert_allclose(P[0], Pref, atol=1e-8)
    np.testing.assert_allclose(q[0], qref, atol=1e-8)
