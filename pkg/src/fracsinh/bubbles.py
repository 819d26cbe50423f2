"""Bubbles, their projections onto X_0^{1/2}(I), and the multi-peak ansatz."""

from dataclasses import dataclass, field

import numpy as np

from . import green_kernel as gk


@dataclass(frozen=True)
class Configuration:
    """Ordered interior peak positions with a sign per peak.

    ``signs`` defaults to the alternating pattern +1, -1, +1, ...
    """

    xis: tuple
    signs: tuple = None
    eta: float = 0.0

    def __post_init__(self):
        xis = tuple(float(v) for v in np.atleast_1d(self.xis))
        object.__setattr__(self, "xis", xis)
        if self.signs is None:
            signs = tuple((-1) ** i for i in range(len(xis)))
        else:
            signs = tuple(int(s) for s in self.signs)
        object.__setattr__(self, "signs", signs)
        if len(signs) != len(xis):
            raise ValueError("need one sign per peak")
        if any(s not in (-1, 1) for s in signs):
            raise ValueError("signs must be +1 or -1")
        if any(abs(v) >= 1.0 for v in xis):
            raise ValueError("peaks must lie in (-1, 1)")
        if any(b <= a for a, b in zip(xis, xis[1:])):
            raise ValueError("peaks must be strictly increasing")
        if self.eta > 0 and self.margin() <= self.eta:
            raise ValueError(f"configuration violates separation margin {self.eta}")

    @property
    def k(self):
        return len(self.xis)

    @property
    def xi(self):
        return np.array(self.xis)

    @property
    def a(self):
        return np.array(self.signs, dtype=float)

    def margin(self):
        """Smallest of 1 + xi_1, 1 - xi_k and the neighbour gaps."""
        if not self.xis:
            return 2.0
        x = self.xi
        return float(min(1.0 + x[0], 1.0 - x[-1], *np.diff(x)))

    def is_alternating(self):
        return all(a == -b for a, b in zip(self.signs, self.signs[1:]))

    def is_symmetric(self, tol=1e-12):
        x = self.xi
        return np.allclose(x, -x[::-1], atol=tol, rtol=0)


@dataclass(frozen=True)
class BubbleParams:
    delta: float
    xi: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass
class AnsatzSpec:
    config: Configuration
    lam: float
    deltas: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.deltas is None:
            self.deltas = delta_choice(self.config, self.lam)
        self.deltas = np.asarray(self.deltas, dtype=float)


def bubble(p, x):
    """U_{delta,xi}(x) = log(2 delta / (delta^2 + (x - xi)^2)) on the whole line."""
    x = np.asarray(x, dtype=float)
    return np.log(2.0 * p.delta / (p.delta**2 + (x - p.xi) ** 2))


def exp_bubble(p, x):
    """e^U without forming the logarithm."""
    x = np.asarray(x, dtype=float)
    return 2.0 * p.delta / (p.delta**2 + (x - p.xi) ** 2)


def bubble_z(p, index, x):
    """Bounded kernel elements Z_0 (dilation) and Z_1 (translation) of the linearisation."""
    x = np.asarray(x, dtype=float)
    s = x - p.xi
    d2 = p.delta**2
    if index == 0:
        return (d2 - s * s) / (d2 + s * s)
    if index == 1:
        return 2.0 * p.delta * s / (d2 + s * s)
    raise ValueError("index must be 0 or 1")


def _require_expansion_regime(p):
    if p.delta >= 1.0:
        raise ValueError("projection expansion requires delta < 1")
    if abs(p.xi) >= 1.0:
        raise ValueError("bubble centre must be interior")


def proj_bubble(p, x):
    """PU = U - log(2 delta) + 2 pi H(xi, .) inside I, zero outside; error O(delta^2)."""
    _require_expansion_regime(p)
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    xc = np.where(inside, x, 0.0)
    val = (-np.log(p.delta**2 + (xc - p.xi) ** 2)
           + 2.0 * np.pi * gk.robin(p.xi, xc))
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def proj_z1(p, x, coef=2.0 * np.pi):
    """PZ_1 = Z_1 + coef * delta * dH/dxi(xi, .) inside I, zero outside.

    Outside I, Z_1 = 2 delta / (x - xi) + O(delta^3) while dH/dxi = 1 / (pi (xi - x)),
    so only ``coef = 2 pi`` leaves an O(delta^3) remainder.  Other values are
    accepted so the order test can show the O(delta) defect they leave.
    """
    _require_expansion_regime(p)
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    xc = np.where(inside, x, 0.0)
    val = bubble_z(p, 1, xc) + coef * p.delta * gk.robin_dxi(p.xi, xc)
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def interaction_energies(cfg):
    """Vector of F_i = 2 pi H(xi_i, xi_i) + 2 pi a_i sum_{j != i} a_j G(xi_j, xi_i)."""
    x, a = cfg.xi, cfg.a
    F = 2.0 * np.pi * gk.robin_diag(x)
    for i in range(cfg.k):
        others = [j for j in range(cfg.k) if j != i]
        if others:
            F[i] += 2.0 * np.pi * a[i] * np.sum(a[others] * gk.green(x[others], x[i]))
    return F


def interaction_energy(cfg, i):
    if not 0 <= i < cfg.k:
        raise IndexError(f"peak index {i} out of range for k={cfg.k}")
    return float(interaction_energies(cfg)[i])


def delta_choice(cfg, lam):
    """Concentration parameters delta_i = (lam / 2) exp(F_i)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return 0.5 * lam * np.exp(interaction_energies(cfg))


def _bubbles_of(spec):
    return [BubbleParams(d, x) for d, x in zip(spec.deltas, spec.config.xis)]


def ansatz(spec, x):
    """omega(x) = sum_i a_i PU_{delta_i, xi_i}(x)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for a, p in zip(spec.config.signs, _bubbles_of(spec)):
        out = out + a * proj_bubble(p, x)
    return out


def ansatz_source(spec, x):
    """(-Delta)^{1/2} omega = sum_i a_i e^{U_i} restricted to I."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for a, p in zip(spec.config.signs, _bubbles_of(spec)):
        out = out + a * exp_bubble(p, x)
    return np.where(np.abs(x) < 1.0, out, 0.0)
