"""Green function of the half Laplacian on (-1, 1) with exterior Dirichlet data.

All functions broadcast over numpy arrays.  ``xi`` plays the role of the pole
and ``x`` of the evaluation point; ``G`` and ``H`` are symmetric in the pair.
"""

import numpy as np

INV_PI = 1.0 / np.pi


def _root1m(t):
    # sqrt(1 - t^2) in factored form, accurate near |t| = 1
    return np.sqrt((1.0 - t) * (1.0 + t))


def _check_pole(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) >= 1.0):
        raise ValueError("pole must lie strictly inside (-1, 1)")
    return xi


def _numerator(xi, x):
    return 1.0 - xi * x + _root1m(xi) * _root1m(x)


def green(xi, x):
    """G(xi, x); exactly zero for |x| >= 1, error at x == xi."""
    xi = _check_pole(xi)
    x = np.asarray(x, dtype=float)
    if np.any(x == xi):
        raise ValueError("green is singular at x == xi")
    inside = np.abs(x) < 1.0
    xc = np.where(inside, x, 0.0)
    with np.errstate(divide="ignore"):
        # two logs rather than the log of a quotient: no overflow for nearly equal points
        val = INV_PI * (np.log(_numerator(xi, xc)) - np.log(np.abs(xc - xi)))
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def robin(xi, x):
    """Regular part H(xi, x) = G(xi, x) - log(1/|x - xi|)/pi, diagonal included."""
    xi = _check_pole(xi)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("robin needs |x| <= 1")
    out = INV_PI * np.log(_numerator(xi, x))
    return out[()] if np.ndim(out) == 0 else out


def robin_diag(xi):
    """H(xi, xi) = log(2 (1 - xi^2)) / pi."""
    xi = _check_pole(xi)
    return INV_PI * np.log(2.0 * (1.0 - xi) * (1.0 + xi))


def green_dx(xi, x):
    """Derivative of G(xi, .) at x, for x, xi interior and distinct."""
    xi = _check_pole(xi)
    x = np.asarray(x, dtype=float)
    if np.any(x == xi):
        raise ValueError("green_dx is singular at x == xi")
    if np.any(np.abs(x) >= 1.0):
        raise ValueError("green_dx needs |x| < 1")
    with np.errstate(over="ignore"):
        out = -INV_PI * _root1m(xi) / ((x - xi) * _root1m(x))
    return out[()] if np.ndim(out) == 0 else out


def robin_dxi(xi, x):
    """Partial derivative of H(xi, x) with respect to the pole xi.

    Outside the interval H(xi, x) = log|x - xi| * 2/(2 pi), hence the
    exterior branch 1 / (pi (xi - x)).
    """
    xi = _check_pole(xi)
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    if np.any(~inside & (x == xi)):
        raise ValueError("robin_dxi exterior branch is singular at x == xi")
    xc = np.where(inside, x, 0.0)
    sx, sxi = _root1m(xc), _root1m(xi)
    interior = -INV_PI * (xc + xi * sx / sxi) / _numerator(xi, xc)
    with np.errstate(divide="ignore"):
        exterior = INV_PI / (xi - np.where(inside, xi + 1.0, x))
    out = np.where(inside, interior, exterior)
    return out[()] if out.ndim == 0 else out


def poisson_kernel(x, y):
    """Half-Laplacian Poisson kernel of (-1, 1): harmonic extension of exterior data.

    A function v with (-Delta)^{1/2} v = 0 in I and v = g outside is
    v(x) = int_{|y|>1} poisson_kernel(x, y) g(y) dy.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return INV_PI * np.sqrt((1.0 - x * x) / (y * y - 1.0)) / np.abs(x - y)
