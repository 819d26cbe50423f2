"""Nystrom discretisation of (-Delta)^{-1/2} on I through the exact Green kernel.

Sources are represented by their piecewise-linear interpolant on the mesh
(held constant on the two end segments).  Each matrix row integrates
G(x_i, .) against the hat functions: the -log|x - y| / pi part exactly on
elements near x_i, the regular part H by Gauss-Legendre, and the whole
kernel by Gauss-Legendre on elements far from x_i.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

INV_PI = 1.0 / np.pi
_NEAR = 3.0  # element is "near" a target closer than this many element lengths
_QUAD_ORDER = 6
_BLOCK = 96


def _root1m(t):
    return np.sqrt(np.maximum((1.0 - t) * (1.0 + t), 0.0))


def _h_raw(x, y):
    return INV_PI * np.log(1.0 - x * y + _root1m(x) * _root1m(y))


def _g_raw(x, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        return INV_PI * np.log((1.0 - x * y + _root1m(x) * _root1m(y)) / np.abs(x - y))


def _p(t):
    # antiderivative of log|t|
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t == 0.0, 0.0, t * np.log(np.abs(t)) - t)


def _q(t):
    # antiderivative of t log|t|
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t == 0.0, 0.0, 0.5 * t * t * np.log(np.abs(t)) - 0.25 * t * t)


def log_moments(x, ya, yb):
    """(int log|x-y| L(y) dy, int log|x-y| R(y) dy) over [ya, yb] for the two hat halves."""
    a, b = ya - x, yb - x
    h = yb - ya
    i0 = _p(b) - _p(a)
    i1 = _q(b) - _q(a)
    right = (i1 - a * i0) / h
    return i0 - right, right


@dataclass
class KernelOperator:
    mesh: object
    matrix: np.ndarray

    def __matmul__(self, f):
        return self.matrix @ np.asarray(f, dtype=float)

    def apply(self, f):
        return self.matrix @ np.asarray(f, dtype=float)

    def evaluate(self, f, x):
        """Natural Nystrom interpolant: (K f)(x) at arbitrary interior points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return kernel_rows(self.mesh.nodes, x) @ np.asarray(f, dtype=float)

    def symmetry_defect(self):
        """Relative asymmetry of W K, the Galerkin-like form of the symmetric Green operator.

        The defect is a quadrature error and shrinks like the mesh spacing.
        """
        s = self.mesh.weights[:, None] * self.matrix
        return float(np.max(np.abs(s - s.T)) / np.max(np.abs(s)))


def kernel_rows(nodes, targets):
    """Rows of the discrete Green operator for arbitrary interior target points."""
    nodes = np.asarray(nodes, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n = len(nodes)
    gs, gw = np.polynomial.legendre.leggauss(_QUAD_ORDER)
    gs = 0.5 * (gs + 1.0)
    gw = 0.5 * gw

    # interior elements [y_j, y_{j+1}] carry both hat halves; end segments are constant
    ya = np.concatenate(([-1.0], nodes[:-1], [nodes[-1]]))
    yb = np.concatenate(([nodes[0]], nodes[1:], [1.0]))
    jl = np.concatenate(([0], np.arange(n - 1), [n - 1]))
    jr = np.concatenate(([0], np.arange(1, n), [n - 1]))
    const = np.zeros(len(ya), dtype=bool)
    const[[0, -1]] = True
    h = yb - ya
    ys = ya[:, None] + h[:, None] * gs[None, :]
    lw = np.where(const[:, None], 1.0, 1.0 - gs[None, :]) * gw[None, :] * h[:, None]
    rw = np.where(const[:, None], 0.0, gs[None, :]) * gw[None, :] * h[:, None]

    ne = len(ya)
    scatter_l = sparse.csr_matrix((np.ones(ne), (np.arange(ne), jl)), shape=(ne, n))
    scatter_r = sparse.csr_matrix((np.ones(ne), (np.arange(ne), jr)), shape=(ne, n))
    out = np.zeros((len(targets), n))
    for start in range(0, len(targets), _BLOCK):
        xt = targets[start:start + _BLOCK]
        dist = np.maximum(np.maximum(ya[None, :] - xt[:, None], xt[:, None] - yb[None, :]), 0.0)
        near = dist < _NEAR * h[None, :]
        xt3 = xt[:, None, None]
        kern = np.where(near[:, :, None], _h_raw(xt3, ys[None]), _g_raw(xt3, ys[None]))
        cl = np.einsum("teq,eq->te", kern, lw)
        cr = np.einsum("teq,eq->te", kern, rw)
        ti, ei = np.nonzero(near)
        ml, mr = log_moments(xt[ti], ya[ei], yb[ei])
        ml = np.where(const[ei], ml + mr, ml)
        mr = np.where(const[ei], 0.0, mr)
        cl[ti, ei] -= INV_PI * ml
        cr[ti, ei] -= INV_PI * mr
        out[start:start + _BLOCK] = (scatter_l.T @ cl.T + scatter_r.T @ cr.T).T
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite kernel entries; mesh is degenerate")
    return out


def assemble_inverse(mesh):
    """Dense matrix K with (K f)_i ~ int_I G(x_i, y) f(y) dy."""
    return KernelOperator(mesh=mesh, matrix=kernel_rows(mesh.nodes, mesh.nodes))
