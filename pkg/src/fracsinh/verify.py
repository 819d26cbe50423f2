"""Diagnostics on computed solutions: nodal regions, peaks, masses, limit profile."""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import green_kernel as gk
from .bubbles import interaction_energies
from .solver import GridFunction, f_lambda

ZERO_XTOL = 1e-10
PEAK_FLOOR = 1.0
OUTER_SAFETY = 0.5


class AmbiguousZero(RuntimeError):
    """|u| came below a certification threshold without changing sign."""


class MissingPeak(RuntimeError):
    pass


@dataclass
class NodalReport:
    zero_locations: tuple
    nodal_count: int
    method_detail: list = field(default_factory=list)
    certified: bool = True
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {"zero_locations": list(self.zero_locations), "nodal_count": self.nodal_count,
                "certified": self.certified, "flags": list(self.flags),
                "method_detail": self.method_detail}


@dataclass
class PeakReport:
    peaks: list

    @property
    def locations(self):
        return np.array([p["location"] for p in self.peaks])

    @property
    def heights(self):
        return np.array([p["height"] for p in self.peaks])

    @property
    def masses(self):
        return np.array([p["local_mass"] for p in self.peaks])


@dataclass
class ProfileReport:
    sup: float
    weighted_sup: float


def default_epsilon(cfg):
    """A quarter of the smallest of the gaps 1 + xi_1, xi_{i+1} - xi_i, 1 - xi_k."""
    return 0.25 * cfg.margin()


def _evaluator(u, op=None, lam=None):
    if op is not None and lam is not None:
        f = f_lambda(u.values, lam)
        return lambda x: float(op.evaluate(f, np.array([x]))[0])
    return lambda x: float(u(np.array([x]))[0])


def _bracketed_zero(read, a, b, va, vb):
    fa, fb = read(a), read(b)
    if fa * fb < 0:
        return float(optimize.brentq(read, a, b, xtol=ZERO_XTOL, rtol=4 * np.finfo(float).eps))
    # the smooth reading can disagree with nodal values that are at rounding level
    return float(a - va * (b - a) / (vb - va))


def _sign_changes(x, v):
    """Brackets (x_i, x_j, v_i, v_j) over which v changes sign; exact zeros are skipped."""
    s = np.sign(v)
    nz = np.flatnonzero(s != 0)
    return [(x[i], x[j], v[i], v[j]) for i, j in zip(nz[:-1], nz[1:]) if s[i] != s[j]]


def _raw_count(x, v, read, flags):
    zeros, detail = [], []
    for br in _sign_changes(x, v):
        zeros.append(_bracketed_zero(read, *br))
        detail.append({"zone": "raw", "bracket": [float(br[0]), float(br[1])]})
    return NodalReport(tuple(zeros), len(zeros) + 1, detail, certified=False, flags=flags)


def count_nodal_regions(u, cfg=None, lam=None, epsilon=None, op=None):
    """Count nodal regions with the three-zone split around the peaks of ``cfg``.

    Outer zones must satisfy |u| >= (c/2) sqrt(2 d) with the sign of the nearest
    peak, where c is the limit-profile monotonicity constant and d = 1 - |x|.
    Peak windows (xi_i - eps, xi_i + eps) need a_i u >= 1.  Each zone between
    neighbouring windows must hold exactly one sign change, located by brentq
    on the Nystrom reading of u when ``op`` and ``lam`` are given (linear
    interpolation otherwise).  Anything else falls back to raw counting and
    the report is flagged as uncertified.
    """
    x, v = u.mesh.nodes, u.values
    read = _evaluator(u, op, lam)
    if cfg is None or cfg.k == 0:
        return _raw_count(x, v, read, ["no configuration: raw sign-change count"])
    if not cfg.is_alternating():
        return _raw_count(x, v, read, ["signs not alternating: raw sign-change count"])
    eps = default_epsilon(cfg) if epsilon is None else float(epsilon)
    xi, a = cfg.xi, cfg.a
    if not 0 < eps < cfg.margin():
        raise ValueError("epsilon must be positive and smaller than the configuration margin")

    c = limit_profile_monotonicity(cfg)
    zeros, detail, failures = [], [], []

    def check_floor(mask, sign, floor, zone):
        if not np.any(mask):
            return
        sv = sign * v[mask]
        if np.any(sv <= 0):
            failures.append(f"sign change inside {zone}")
        elif np.any(sv < floor[mask] if np.ndim(floor) else sv < floor):
            raise AmbiguousZero(f"|u| below the certification threshold in {zone} without a sign change")

    d = 1.0 - np.abs(x)
    outer_floor = OUTER_SAFETY * c * np.sqrt(2.0 * d)
    check_floor(x <= xi[0] - eps, a[0], outer_floor, "left outer zone")
    check_floor(x >= xi[-1] + eps, a[-1], outer_floor, "right outer zone")
    for i in range(cfg.k):
        check_floor(np.abs(x - xi[i]) < eps, a[i], PEAK_FLOOR, f"peak window {i}")
    for i in range(cfg.k - 1):
        lo, hi = xi[i] + eps, xi[i + 1] - eps
        m = (x >= lo) & (x <= hi)
        idx = np.flatnonzero(m)
        if idx.size < 2:
            failures.append(f"between-zone {i} is unresolved")
            continue
        br = _sign_changes(x[idx], v[idx])
        if len(br) != 1 or a[i] * v[idx[0]] <= 0 or a[i + 1] * v[idx[-1]] <= 0:
            failures.append(f"between-zone {i} has {len(br)} sign changes")
            continue
        zeros.append(_bracketed_zero(read, *br[0]))
        detail.append({"zone": f"between {i}", "bracket": [float(br[0][0]), float(br[0][1])]})
    if failures:
        return _raw_count(x, v, read, failures)
    return NodalReport(tuple(zeros), len(zeros) + 1, detail)


def _cumulative(x, f):
    """Running integral of the piecewise-linear interpolant (constant end segments)."""
    seg = 0.5 * (f[1:] + f[:-1]) * np.diff(x)
    return np.concatenate(([f[0] * (x[0] + 1.0)], f[0] * (x[0] + 1.0) + np.cumsum(seg)))


def _integral_upto(x, f, cum, z):
    """int_{-1}^{z} of the same interpolant."""
    if z >= 1.0:
        return float(cum[-1] + f[-1] * (1.0 - x[-1]))
    if z <= x[0]:
        return float(f[0] * (z + 1.0))
    if z >= x[-1]:
        return float(cum[-1] + f[-1] * (z - x[-1]))
    j = int(np.searchsorted(x, z) - 1)
    t = z - x[j]
    slope = (f[j + 1] - f[j]) / (x[j + 1] - x[j])
    return float(cum[j] + f[j] * t + 0.5 * slope * t * t)


def local_masses(u, lam, cuts):
    """int lambda (e^u - e^-u) over the intervals between consecutive ``cuts``."""
    x = u.mesh.nodes
    f = f_lambda(u.values, lam)
    cum = _cumulative(x, f)
    edges = [_integral_upto(x, f, cum, z) for z in cuts]
    return np.diff(edges)


def peak_diagnostics(u, cfg, lam, nodal=None):
    """Location, height and local mass of every peak.

    Windows are the nodal zones (between consecutive zeros) when the nodal
    count matches the configuration, midpoints between the reference centres
    otherwise, so the masses tile I.
    """
    x, v = u.mesh.nodes, u.values
    if nodal is not None and len(nodal.zero_locations) == cfg.k - 1:
        cuts = np.concatenate(([-1.0], nodal.zero_locations, [1.0]))
    else:
        cuts = np.concatenate(([-1.0], 0.5 * (cfg.xi[1:] + cfg.xi[:-1]), [1.0]))
    F = interaction_energies(cfg)
    masses = local_masses(u, lam, cuts)
    peaks = []
    for i, a in enumerate(cfg.a):
        idx = np.flatnonzero((x > cuts[i]) & (x < cuts[i + 1]))
        if idx.size < 3:
            raise MissingPeak(f"window {i} holds fewer than three nodes")
        j = idx[np.argmax(a * v[idx])]
        if a * v[j] <= 0 or j in (idx[0], idx[-1]) or j in (0, len(x) - 1):
            raise MissingPeak(f"no interior extremum of sign {int(a):+d} in window {i}")
        xs, ys = x[j - 1:j + 2] - x[j], a * v[j - 1:j + 2]
        c2, c1, c0 = np.polyfit(xs, ys, 2)
        s = float(np.clip(-c1 / (2 * c2), xs[0], xs[2])) if c2 < 0 else 0.0
        height = float(c0 + c1 * s + c2 * s * s) if c2 < 0 else float(ys[1])
        predicted = 2.0 * np.log(2.0 / lam) - F[i]
        peaks.append({
            "index": i,
            "location": float(x[j] + s),
            "height": height,
            "predicted_height": float(predicted),
            "height_gap": float(height - predicted),
            "sign": int(np.sign(v[j])),
            "local_mass": float(masses[i]),
            "mass_error": float(masses[i] - a * 2.0 * np.pi),
        })
    return PeakReport(peaks)


def limit_profile(cfg, x):
    """2 pi sum_i a_i G(xi_i, x)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for xi, a in zip(cfg.xis, cfg.signs):
        out = out + a * gk.green(xi, x)
    return 2.0 * np.pi * out


def profile_convergence(u, cfg, lam, epsilon):
    """Distance from the limit profile away from the peaks.

    Returns the sup of |u - 2 pi sum a_i G(xi_i, .)| over I minus the peak
    windows, and the sup of the same difference divided by sqrt(1 - |x|)
    over the two outer intervals.
    """
    eps = float(epsilon)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if cfg.xi[0] - eps <= -1.0 or cfg.xi[-1] + eps >= 1.0:
        raise ValueError("peak windows reach outside the interval")
    x, v = u.mesh.nodes, u.values
    keep = np.all(np.abs(x[:, None] - cfg.xi[None, :]) >= eps, axis=1)
    diff = np.abs(v[keep] - limit_profile(cfg, x[keep]))
    outer = (x <= cfg.xi[0] - eps) | (x >= cfg.xi[-1] + eps)
    wdiff = np.abs(v[outer] - limit_profile(cfg, x[outer])) / np.sqrt(1.0 - np.abs(x[outer]))
    return ProfileReport(sup=float(diff.max()), weighted_sup=float(wdiff.max()))


def _scaled_slope(cfg, x):
    """(d/dx sum_i a_i G(xi_i, x)) sqrt(1 - x^2), with its limit at x = +-1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inner = np.abs(x) < 1.0
    for xi, a in zip(cfg.xis, cfg.signs):
        term = np.empty_like(x)
        term[inner] = gk.green_dx(xi, x[inner]) * np.sqrt(1.0 - x[inner] ** 2)
        term[~inner] = -np.sqrt(1.0 - xi * xi) / (np.pi * (x[~inner] - xi))
        out += a * term
    return out


def limit_profile_monotonicity(cfg, samples=400):
    """min_j min_{x in (xi_j, xi_{j+1})} (-1)^j u0'(x) sqrt(1 - x^2), xi_0 = -1, xi_{k+1} = 1.

    u0 = sum_i a_i G(xi_i, .).  The sampled minimum on each interval is polished
    with a bounded scalar search, so refining ``samples`` cannot lower it.
    """
    if not cfg.is_alternating():
        raise ValueError("monotonicity of the limit profile needs alternating signs")
    if cfg.a[0] < 0:
        cfg = type(cfg)(cfg.xis, tuple(-s for s in cfg.signs))
    ends = np.concatenate(([-1.0], cfg.xi, [1.0]))
    best = np.inf
    for j in range(cfg.k + 1):
        lo, hi = ends[j], ends[j + 1]
        # open at the poles, closed at +-1 where the scaled slope has a finite limit
        t = np.linspace(0.0, 1.0, samples + 2)
        t = t[1:-1] if 0 < j < cfg.k else (t[:-1] if j == 0 else t[1:])
        xs = lo + (hi - lo) * t
        vals = (-1) ** j * _scaled_slope(cfg, xs)
        m = int(np.argmin(vals))
        cand = float(vals[m])
        a_, b_ = xs[max(m - 1, 0)], xs[min(m + 1, len(xs) - 1)]
        if b_ > a_:
            res = optimize.minimize_scalar(lambda s: (-1) ** j * float(_scaled_slope(cfg, np.array([s]))[0]),
                                           bounds=(a_, b_), method="bounded",
                                           options={"xatol": 1e-12})
            cand = min(cand, float(res.fun))
        best = min(best, cand)
    return best


def verify_solution(report, cfg, epsilon=None, tol=1e-10):
    """Bundle of all checks for one SolveReport; returns a JSON-ready dict."""
    u, lam = report.solution, report.lam
    nodal = count_nodal_regions(u, cfg, lam, epsilon=epsilon, op=report.operator)
    peaks = peak_diagnostics(u, cfg, lam, nodal)
    eps = default_epsilon(cfg) if epsilon is None else epsilon
    prof = profile_convergence(u, cfg, lam, eps)
    checks = {
        "nodal_count": nodal.nodal_count == cfg.k,
        "certified": nodal.certified,
        "signs": all(p["sign"] == s for p, s in zip(peaks.peaks, cfg.signs)),
        "residual": report.residual_sup <= tol,
    }
    return {
        "lambda": lam,
        "nodal": nodal.to_dict(),
        "peaks": peaks.peaks,
        "profile_sup": prof.sup,
        "profile_weighted_sup": prof.weighted_sup,
        "checks": checks,
        "passed": all(checks.values()),
    }


def diagnose(report, cfg, epsilon=None, tol=1e-10, singulars=True):
    """Fill ``report.diagnostics`` and return the verification bundle.

    ``cfg`` is the reference configuration (the reduced-energy critical point).
    The remainder is measured against the ansatz centred where Newton left
    the peaks, which is the decomposition u = omega + phi of the theory.
    """
    from .bubbles import AnsatzSpec, Configuration, ansatz
    from .solver import (ansatz_energy_terms, energy, energy_expansions,
                         linearized_smallest_singulars)

    res = verify_solution(report, cfg, epsilon=epsilon, tol=tol)
    u, lam, op = report.solution, report.lam, report.operator
    centred = Configuration(report.diagnostics.get("newton_xi", cfg.xis), cfg.signs)
    phi = u.values - ansatz(AnsatzSpec(centred, lam), u.mesh.nodes)
    n2, j_om = ansatz_energy_terms(cfg, lam)
    n2_pred, j_pred = energy_expansions(cfg, lam)
    diag = {
        "nodal_count": res["nodal"]["nodal_count"],
        "zero_locations": res["nodal"]["zero_locations"],
        "peak_locations": [p["location"] for p in res["peaks"]],
        "peak_heights": [p["height"] for p in res["peaks"]],
        "height_gaps": [p["height_gap"] for p in res["peaks"]],
        "local_masses": [p["local_mass"] for p in res["peaks"]],
        "mass_errors": [p["mass_error"] for p in res["peaks"]],
        "energy": energy(op, u, lam),
        "remainder_norms": {"sup": float(np.max(np.abs(phi)))},
        "norm_gap": n2 - n2_pred,
        "energy_gap": j_om - j_pred,
    }
    if singulars:
        s_full, s_perp = linearized_smallest_singulars(op, u, lam, centred)
        diag["sigma_full"], diag["sigma_perp"] = s_full, s_perp
    report.diagnostics.update(diag)
    res["diagnostics"] = diag
    return res
