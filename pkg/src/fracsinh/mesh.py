"""Graded node sets on (-1, 1) with endpoint clustering and peak patches."""

from dataclasses import dataclass

import numpy as np

from .bubbles import Configuration, delta_choice

MAX_NODES = 10**6
PATCH_HALF_WIDTH = 20.0  # in units of delta
PATCH_SPACING = 1.0 / 8.0  # in units of delta
_SPACING_TARGET = 1.0 / 16.0  # placement target; keeps height errors ~1e-3 at lambda=0.0125
_GROWTH = 0.1  # spacing growth rate outside a patch


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray
    weights: np.ndarray
    patch_centers: tuple = ()
    patch_deltas: tuple = ()
    grading: float = 2.0

    @property
    def n(self):
        return len(self.nodes)

    def spacing(self):
        return np.diff(self.nodes)


def trapezoid_weights(nodes):
    """Weights integrating the piecewise-linear interpolant, held constant on the end segments."""
    x = np.asarray(nodes, dtype=float)
    ext = np.concatenate(([-1.0], x, [1.0]))
    w = 0.5 * (ext[2:] - ext[:-2])
    w[0] += 0.5 * (x[0] + 1.0)
    w[-1] += 0.5 * (1.0 - x[-1])
    return w


def _patch_spacing(x, xi, delta):
    s = np.abs(x - xi) - PATCH_HALF_WIDTH * delta * 1.05
    return _SPACING_TARGET * delta + _GROWTH * np.maximum(s, 0.0)


def _density(theta, base_n, centers, deltas):
    # nodes per unit theta, x = -cos(theta)
    rho = np.full_like(theta, base_n / np.pi)
    for t in (theta, np.pi - theta):
        x = -np.cos(t)
        st = np.sin(t)
        for xi, d in zip(centers, deltas):
            rho = np.maximum(rho, st / _patch_spacing(x, xi, d))
    return rho


def _fine_grid(base_n, centers, deltas):
    parts = [np.linspace(0.0, 0.5 * np.pi, 8 * base_n + 1)]
    for xi, d in zip(centers, deltas):
        for c in (xi, -xi):
            core = c + d * np.linspace(-25.0, 25.0, 2501)
            ramp = PATCH_HALF_WIDTH * d * np.geomspace(1.0, 4.0 / (PATCH_HALF_WIDTH * d), 600)
            xs = np.concatenate((core, c - ramp, c + ramp))
            xs = xs[(xs > -1.0) & (xs <= 0.0)]
            parts.append(np.arccos(-xs))
    return np.unique(np.clip(np.concatenate(parts), 0.0, 0.5 * np.pi))


def graded_nodes(base_n, centers=(), deltas=()):
    """Symmetric node set: Chebyshev-like endpoint grading refined around each centre."""
    centers, deltas = list(map(float, centers)), list(map(float, deltas))
    theta = _fine_grid(base_n, centers, deltas)
    rho = _density(theta, base_n, centers, deltas)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(theta))))
    half = int(np.ceil(cum[-1]))
    if 2 * half > MAX_NODES:
        raise ValueError(f"mesh would need {2 * half} nodes; lambda too small for this solver")
    targets = np.arange(1, half) * (cum[-1] / half)
    th = np.interp(targets, cum, theta)
    left = -np.cos(th)
    return np.concatenate((left, [0.0], -left[::-1]))


def build_mesh(cfg, lam, base_n=128):
    """Mesh resolving every peak of the ansatz for ``cfg`` at ``lam``.

    ``cfg`` may be ``None`` (or have k = 0) for a pure endpoint-graded mesh.
    """
    if base_n < 64:
        raise ValueError("base_n must be at least 64")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if cfg is None or cfg.k == 0:
        centers, deltas = (), ()
    else:
        centers, deltas = cfg.xis, tuple(delta_choice(cfg, lam))
        if min(deltas) < 2e-6:
            raise ValueError("concentration scale below 2e-6; lambda too small for this solver")
    nodes = graded_nodes(base_n, centers, deltas)
    return Mesh(nodes=nodes, weights=trapezoid_weights(nodes),
                patch_centers=tuple(centers), patch_deltas=tuple(deltas))


def empty_config():
    return Configuration(xis=())
