"""Kirchhoff-Routh type configuration energy and its critical points.

    F(xi) = sum_i H(xi_i, xi_i) + sum_{i != j} a_i a_j G(xi_i, xi_j)

Ascent runs in unconstrained "gap" coordinates: the k + 1 gaps
(1 + xi_1, xi_2 - xi_1, ..., 1 - xi_k) are 2 * softmax([0, z]), so every
iterate is an ordered interior configuration.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import green_kernel as gk
from .bubbles import Configuration

GRAD_TOL = 1e-10
CLUSTER_RADIUS = 1e-4
COLLAPSE_GAP = 1e-10
HESSIAN_STEP = 1e-5


class NoCriticalPoint(RuntimeError):
    """Every ascent ran off to the boundary with the value still increasing."""

    def __init__(self, message, trajectories=()):
        super().__init__(message)
        self.trajectories = list(trajectories)


@dataclass
class EnergyReport:
    config: Configuration
    value: float
    grad_norm: float
    hessian_eigs: np.ndarray
    classification: str
    margin: float = field(default=None)

    def to_dict(self):
        return {
            "k": self.config.k,
            "signs": list(self.config.signs),
            "xi": list(self.config.xis),
            "value": self.value,
            "grad_norm": self.grad_norm,
            "hessian_eigs": [float(v) for v in self.hessian_eigs],
            "classification": self.classification,
            "margin": self.margin,
        }


def _ordered(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) >= 1.0):
        raise ValueError("points must lie in (-1, 1)")
    if np.any(np.diff(xi) <= 0):
        raise ValueError("points must be strictly increasing and distinct")
    return xi


def reduced_value_xi(xi, a):
    xi = _ordered(xi)
    a = np.asarray(a, dtype=float)
    val = float(np.sum(gk.robin_diag(xi)))
    k = len(xi)
    for i in range(k):
        for j in range(i + 1, k):
            val += 2.0 * a[i] * a[j] * float(gk.green(xi[i], xi[j]))
    return val


def reduced_grad_xi(xi, a):
    xi = _ordered(xi)
    a = np.asarray(a, dtype=float)
    k = len(xi)
    # d/dxi H(xi, xi) = 2 dH/dxi(xi, x)|_{x = xi} by symmetry of H
    grad = 2.0 * np.array([gk.robin_dxi(v, v) for v in xi])
    for i in range(k):
        for j in range(k):
            if j != i:
                grad[i] += 2.0 * a[i] * a[j] * gk.green_dx(xi[j], xi[i])
    return grad


def _margin(xi):
    return float(np.min(np.diff(np.concatenate(([-1.0], xi, [1.0])))))


def reduced_value(cfg):
    return reduced_value_xi(cfg.xi, cfg.a)


def reduced_grad(cfg):
    return reduced_grad_xi(cfg.xi, cfg.a)


def interaction_part(cfg):
    """sum_{i != j} a_i a_j G(xi_i, xi_j), nonpositive for alternating signs."""
    return reduced_value(cfg) - float(np.sum(gk.robin_diag(cfg.xi)))


def hessian(xi, a, step=HESSIAN_STEP):
    """Central differences of the analytic gradient, symmetrised."""
    xi = np.asarray(xi, dtype=float)
    k = len(xi)
    step = min(step, 0.25 * _margin(xi))
    hess = np.empty((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = step
        hess[:, j] = (reduced_grad_xi(xi + e, a) - reduced_grad_xi(xi - e, a)) / (2 * step)
    return 0.5 * (hess + hess.T)


def classify(eigs, tol=1e-8):
    eigs = np.asarray(eigs)
    if np.all(eigs < -tol):
        return "max"
    if np.all(eigs > tol):
        return "min"
    if np.any(np.abs(eigs) <= tol):
        return "degenerate"
    return "saddle"


# -- gap coordinates ---------------------------------------------------------

def gaps_from_z(z):
    zz = np.concatenate(([0.0], np.asarray(z, dtype=float)))
    zz -= zz.max()
    e = np.exp(zz)
    return 2.0 * e / e.sum()


def xi_from_z(z):
    return -1.0 + np.cumsum(gaps_from_z(z))[:-1]


def z_from_xi(xi):
    xi = np.asarray(xi, dtype=float)
    g = np.diff(np.concatenate(([-1.0], xi, [1.0])))
    return np.log(g[1:] / g[0])


def _grad_z(z, a):
    g = gaps_from_z(z)
    xi = -1.0 + np.cumsum(g)[:-1]
    gx = reduced_grad_xi(xi, a)
    k = len(xi)
    # dxi_i / dzt_n = sum_{m < i} g_m (delta_mn - g_n / 2), zt = [0, z]
    jac = np.zeros((k, k + 1))
    for i in range(k):
        for n in range(k + 1):
            jac[i, n] = (g[n] if n <= i else 0.0) - 0.5 * g[n] * np.sum(g[: i + 1])
    return gx @ jac[:, 1:]


def _ascend(z0, a, maxiter=500):
    """BFGS ascent; None when the iterate collapses onto the boundary of P_k."""
    def obj(z):
        xi = xi_from_z(z)
        if np.any(np.diff(np.concatenate(([-1.0], xi, [1.0]))) <= 0):
            return np.inf, np.zeros_like(z)
        return -reduced_value_xi(xi, a), -_grad_z(z, a)

    try:
        res = optimize.minimize(obj, z0, jac=True, method="BFGS",
                                options={"maxiter": maxiter, "gtol": 1e-12})
        z = res.x
    except (ValueError, FloatingPointError):
        return None
    xi = xi_from_z(z)
    if not np.all(np.isfinite(xi)) or _margin(xi) < COLLAPSE_GAP:
        return None
    try:
        gnorm = np.linalg.norm(reduced_grad_xi(xi, a))
    except ValueError:
        return None
    # stalled near the boundary while still climbing: an escaping trajectory
    if _margin(xi) < 1e-4 and gnorm > 1.0:
        return None
    return xi


def _polish(xi, a, iters=50):
    """Newton on the gradient in xi coordinates, staying inside P_k."""
    xi = np.array(xi, dtype=float)
    for _ in range(iters):
        g = reduced_grad_xi(xi, a)
        if np.linalg.norm(g) <= 0.1 * GRAD_TOL:
            break
        try:
            step = np.linalg.solve(hessian(xi, a), -g)
        except (np.linalg.LinAlgError, ValueError):
            break
        t = 1.0
        while t > 1e-6:
            trial = xi + t * step
            gaps = np.diff(np.concatenate(([-1.0], trial, [1.0])))
            if gaps.min() > 0 and np.linalg.norm(reduced_grad_xi(trial, a)) < np.linalg.norm(g):
                xi = trial
                break
            t *= 0.5
        else:
            break
    return xi


def _seeds(k, n, rng):
    if n > 0:
        yield np.zeros(k)  # equally spaced configuration
    for _ in range(n - 1):
        yield rng.normal(scale=1.0, size=k)


def _report(xi, a):
    cfg = Configuration(tuple(xi), tuple(int(s) for s in a))
    eigs = np.linalg.eigvalsh(hessian(cfg.xi, a))
    return EnergyReport(config=cfg, value=float(reduced_value(cfg)),
                        grad_norm=float(np.linalg.norm(reduced_grad(cfg))),
                        hessian_eigs=eigs, classification=classify(eigs), margin=cfg.margin())


def maximize(k, signs=None, seeds=8, tol=GRAD_TOL, random_state=0, initial=None):
    """Multistart ascent of F over ordered configurations.

    ``initial`` optionally lists extra starting configurations, tried before
    the seeded ones.  Raises NoCriticalPoint if every start runs into the boundary of P_k,
    which is what happens when two neighbouring peaks share a sign.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if seeds < 0 or seeds + len(initial or []) == 0:
        raise ValueError("need at least one start")
    a = np.array([(-1) ** i for i in range(k)] if signs is None else signs, dtype=float)
    if len(a) != k:
        raise ValueError("need one sign per peak")
    rng = np.random.default_rng(random_state)
    best = None
    starts = [z_from_xi(_ordered(x)) for x in (initial or [])]
    for z0 in [*starts, *_seeds(k, seeds, rng)]:
        xi = _ascend(z0, a)
        if xi is None:
            continue
        xi = _polish(xi, a)
        if np.linalg.norm(reduced_grad_xi(xi, a)) > tol:
            continue
        rep = _report(xi, a)
        if best is None or rep.value > best.value:
            best = rep
    if best is None:
        raise NoCriticalPoint(f"no interior critical point found from {seeds + len(initial or [])} starts "
                              "(ascent escapes to the boundary)")
    return best


def boundary_blowdown_probe(k, signs=None, margins=None, reference=None):
    """Values of F as a configuration approaches the boundary of P_k.

    Two families around ``reference`` (the maximiser by default): the first
    point pushed towards -1, and points i0, i0+1 squeezed together, where i0
    is the central pair.  Returns rows (kind, distance, value).
    """
    a = np.array([(-1) ** i for i in range(k)] if signs is None else signs, dtype=float)
    margins = np.geomspace(1e-1, 1e-8, 15) if margins is None else np.asarray(margins)
    if reference is None:
        reference = maximize(k, a).config.xi
    ref = np.asarray(reference, dtype=float)
    rows = []
    for eps in margins:
        xi = ref.copy()
        xi[0] = -1.0 + eps
        xi = np.maximum.accumulate(xi)  # keep ordering if the push overtakes neighbours
        if np.all(np.diff(xi) > 0):
            rows.append(("endpoint", float(eps), reduced_value_xi(xi, a)))
    if k >= 2:
        i0 = (k - 1) // 2
        for eps in margins:
            xi = ref.copy()
            mid = 0.5 * (xi[i0] + xi[i0 + 1])
            xi[i0], xi[i0 + 1] = mid - 0.5 * eps, mid + 0.5 * eps
            rows.append(("collision", float(eps), reduced_value_xi(xi, a)))
    return rows


def find_critical_points(k, signs, n_starts=200, seed=0):
    """Root search for grad F = 0 from seeded random starts in gap coordinates."""
    a = np.asarray(signs, dtype=float)
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(n_starts):
        z0 = rng.normal(scale=1.0, size=k)
        try:
            sol = optimize.root(lambda z: _grad_z(z, a), z0, method="hybr")
        except (ValueError, FloatingPointError):
            continue
        if not np.all(np.isfinite(sol.x)):
            continue
        xi = xi_from_z(sol.x)
        gaps = np.diff(np.concatenate(([-1.0], xi, [1.0])))
        if gaps.min() < 1e-8:
            continue
        xi = _polish(xi, a)
        if np.linalg.norm(reduced_grad_xi(xi, a)) <= GRAD_TOL:
            found.append(xi)
    return found


def cluster_points(points, radius=CLUSTER_RADIUS):
    centers = []
    for p in points:
        if not any(np.max(np.abs(p - c)) <= radius for c in centers):
            centers.append(np.asarray(p))
    return centers


def conjecture_probe(k, signs=None, n_starts=200, seed=0):
    """Count distinct critical points of F found from ``n_starts`` seeded starts.

    Exploratory evidence only: an empty result does not prove absence.
    """
    if k < 3:
        raise ValueError("probe is meant for k >= 3")
    a = np.array([(-1) ** i for i in range(k)] if signs is None else signs, dtype=float)
    with np.errstate(all="ignore"):
        pts = find_critical_points(k, a, n_starts=n_starts, seed=seed)
    clusters = cluster_points(pts)
    reports = [_report(c, a) for c in clusters]
    return {
        "k": k,
        "signs": [int(s) for s in a],
        "n_starts": n_starts,
        "seed": seed,
        "converged_starts": len(pts),
        "n_critical_points": len(clusters),
        "critical_points": [r.to_dict() for r in reports],
        "authoritative": False,
        "note": "exploratory multistart search; absence of clusters is evidence, not proof",
    }
