"""Nonlinear solve of u = K(f_lambda(u)) on a graded mesh, with lambda continuation."""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .bubbles import AnsatzSpec, BubbleParams, Configuration, ansatz, ansatz_source, bubble_z, exp_bubble
from .mesh import build_mesh
from .operator import assemble_inverse

log = logging.getLogger(__name__)

OVERFLOW_GUARD = 700.0
MIN_STEP = 2.0**-20


class NonConvergence(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class SingularJacobian(RuntimeError):
    pass


@dataclass
class GridFunction:
    mesh: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.mesh.nodes.shape:
            raise ValueError("values do not match the mesh")

    def __call__(self, x):
        """Piecewise-linear reading, zero outside I."""
        xs = np.concatenate(([-1.0], self.mesh.nodes, [1.0]))
        vs = np.concatenate(([0.0], self.values, [0.0]))
        return np.interp(x, xs, vs, left=0.0, right=0.0)

    def __neg__(self):
        return GridFunction(self.mesh, -self.values)


@dataclass
class SolveReport:
    lam: float
    solution: GridFunction
    newton_iters: int
    residual_sup: float
    residual_history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    operator: object = field(default=None, repr=False)
    config: object = None


def f_lambda(u, lam):
    return 2.0 * lam * np.sinh(u)


def f_lambda_prime(u, lam):
    return 2.0 * lam * np.cosh(u)


def g_lambda(u, lam):
    """Primitive of f_lambda vanishing at 0: lam (e^u + e^-u - 2)."""
    return 4.0 * lam * np.sinh(0.5 * u) ** 2


def _guard(u):
    if np.max(np.abs(u)) > OVERFLOW_GUARD:
        raise FloatingPointError(f"|u| exceeds {OVERFLOW_GUARD}; refusing to exponentiate")


def residual(op, u, lam):
    """u - K f_lambda(u); vanishes at a discrete solution."""
    u = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    if u.shape != op.mesh.nodes.shape:
        raise ValueError("grid function does not live on the operator's mesh")
    _guard(u)
    return u - op.apply(f_lambda(u, lam))


def jacobian(op, u, lam):
    return np.eye(len(u)) - op.matrix * f_lambda_prime(u, lam)[None, :]


class _PeakFrame:
    """Splits u = omega_xi + phi so Newton can move peaks along their true orbit.

    A Newton step du is projected onto the translation directions d omega / d xi_j
    (tested against e^{U_j} Z_{1,j}); that part is applied by shifting the
    centres, the rest is added to phi.  To first order this is the plain
    Newton update, but a shift comparable to delta no longer overshoots.
    """

    def __init__(self, cfg, lam, x, weights):
        self.signs, self.lam, self.x, self.w = cfg.signs, lam, x, weights

    def omega(self, xi):
        return ansatz(AnsatzSpec(Configuration(tuple(xi), self.signs), self.lam), self.x)

    def split(self, xi, du):
        spec = AnsatzSpec(Configuration(tuple(xi), self.signs), self.lam)
        h = 1e-4 * float(np.min(spec.deltas))
        eye = np.eye(len(xi))
        dom = np.column_stack([(self.omega(xi + h * e) - self.omega(xi - h * e)) / (2 * h) for e in eye])
        tests = np.column_stack([
            self.w * exp_bubble(BubbleParams(d, c), self.x) * bubble_z(BubbleParams(d, c), 1, self.x)
            for d, c in zip(spec.deltas, xi)])
        shift = np.linalg.solve(tests.T @ dom, tests.T @ du)
        return shift, du - dom @ shift


def newton_solve(op, u0, lam, tol=1e-10, max_iter=30, track=None):
    """Damped Newton with backtracking on the sup-norm of the residual.

    With ``track`` (the configuration u0 was built around) peak translations
    are applied exactly instead of linearly; see ``_PeakFrame``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u = np.array(u0.values if isinstance(u0, GridFunction) else u0, dtype=float)
    frame = None
    if track is not None and track.k > 0:
        frame = _PeakFrame(track, lam, op.mesh.nodes, op.mesh.weights)
        xi = track.xi.copy()
        phi = u - frame.omega(xi)
    res = residual(op, u, lam)
    r = float(np.max(np.abs(res)))
    history = [r]
    iters = 0
    while r > tol:
        if iters >= max_iter:
            raise NonConvergence(f"no convergence in {max_iter} Newton steps (residual {r:.3e})", history)
        try:
            du = sla.solve(jacobian(op, u, lam), -res, check_finite=True)
        except (sla.LinAlgError, ValueError) as exc:
            raise SingularJacobian(str(exc)) from exc
        if frame is not None:
            try:
                shift, rest = frame.split(xi, du)
            except (np.linalg.LinAlgError, ValueError):
                shift, rest = np.zeros_like(xi), du
        step = 1.0
        while True:
            try:
                if frame is None:
                    trial = u + step * du
                else:
                    xi_t = xi + step * shift
                    phi_t = phi + step * rest
                    trial = frame.omega(xi_t) + phi_t
                if np.max(np.abs(trial)) <= OVERFLOW_GUARD:
                    res_t = residual(op, trial, lam)
                    r_t = float(np.max(np.abs(res_t)))
                    if r_t < r:
                        break
            except ValueError:
                pass  # a shifted centre left the interval or crossed a neighbour
            step *= 0.5
            if step < MIN_STEP:
                raise NonConvergence(f"line search failed at residual {r:.3e}", history)
        u, res, r = trial, res_t, r_t
        if frame is not None:
            xi, phi = xi_t, phi_t
        history.append(r)
        iters += 1
        log.debug("newton %d: step %.3g residual %.3e", iters, step, r)
    report = SolveReport(lam=lam, solution=GridFunction(op.mesh, u), newton_iters=iters,
                         residual_sup=r, residual_history=history, operator=op)
    if frame is not None:
        report.diagnostics["newton_xi"] = tuple(float(v) for v in xi)
    return report


def solve(cfg, lam, base_n=128, tol=1e-10, max_iter=30, seed=None, mesh=None, track=True):
    """Assemble on a fresh mesh and run Newton from the ansatz (or ``seed`` on that mesh)."""
    mesh = mesh if mesh is not None else build_mesh(cfg, lam, base_n)
    op = assemble_inverse(mesh)
    u0 = ansatz(AnsatzSpec(cfg, lam), mesh.nodes) if seed is None else seed
    report = newton_solve(op, u0, lam, tol=tol, max_iter=max_iter, track=cfg if track else None)
    report.config = cfg
    return report


def lambda_schedule(lambda_start, lambda_end, factor):
    if not 0 < lambda_end < lambda_start:
        raise ValueError("need 0 < lambda_end < lambda_start")
    if not 0 < factor < 1:
        raise ValueError("factor must lie in (0, 1)")
    lams = [lambda_start]
    while lams[-1] * factor >= lambda_end * (1 - 1e-9):
        lams.append(lams[-1] * factor)
    return lams


def locate_peaks(gf, cfg):
    """Peak positions and heights of ``gf`` near each centre of ``cfg``.

    The search window of peak i runs between the midpoints to its neighbours;
    the discrete maximiser of a_i u is refined by a parabola through three nodes.
    """
    x, u = gf.mesh.nodes, gf.values
    cuts = np.concatenate(([-1.0], 0.5 * (cfg.xi[1:] + cfg.xi[:-1]), [1.0]))
    pos, height = [], []
    for i, a in enumerate(cfg.a):
        idx = np.flatnonzero((x >= cuts[i]) & (x < cuts[i + 1]))
        if idx.size == 0:
            raise ValueError(f"no mesh nodes near peak {i}")
        j = int(np.clip(idx[np.argmax(a * u[idx])], 1, len(x) - 2))
        xs, ys = x[j - 1:j + 2] - x[j], a * u[j - 1:j + 2]
        c2, c1, c0 = np.polyfit(xs, ys, 2)
        if c2 < 0:
            s = float(np.clip(-c1 / (2 * c2), xs[0], xs[2]))
            pos.append(x[j] + s)
            height.append(c0 + c1 * s + c2 * s * s)
        else:
            pos.append(x[j])
            height.append(a * u[j])
    return np.array(pos), np.array(height)


def branch_schedule(lambda_start, lambda_end, factor):
    """Geometric schedule that lands exactly on ``lambda_end``."""
    lams = lambda_schedule(lambda_start, lambda_end, factor) if lambda_end < lambda_start else [lambda_start]
    if lams[-1] > lambda_end * (1 + 1e-9):
        lams.append(lambda_end)
    return lams


def continuation(cfg, lambda_start, lambda_end, factor=0.5, base_n=128, tol=1e-10, max_iter=30,
                 blend=0.0, exact_end=False):
    """Follow the k-peak branch as lambda decreases geometrically.

    Each step re-meshes around predicted peak positions: the measured drift
    of the previous peaks away from ``cfg`` is rescaled by the lambda ratio,
    since it shrinks linearly along the branch.  Newton starts from the fresh
    ansatz there, mixed with the transported previous solution with weight
    ``blend``; if that start fails the other one is tried.  Stops at the first
    step where both fail and returns the reports collected so far.
    """
    if not 0.0 <= blend <= 1.0:
        raise ValueError("blend must lie in [0, 1]")
    lams = (branch_schedule if exact_end else lambda_schedule)(lambda_start, lambda_end, factor)
    reports = []
    drift, lam_prev = np.zeros(cfg.k), None
    for lam in lams:
        if lam_prev is not None:
            drift = drift * (lam / lam_prev)
        track = Configuration(tuple(cfg.xi + drift), cfg.signs, cfg.eta)
        mesh = build_mesh(track, lam, base_n)
        fresh = ansatz(AnsatzSpec(track, lam), mesh.nodes)
        seeds = [fresh]
        if reports:
            mixed = (1.0 - blend) * fresh + blend * reports[-1].solution(mesh.nodes)
            alt = 0.5 * fresh + 0.5 * reports[-1].solution(mesh.nodes) if blend == 0.0 else fresh
            seeds = [mixed, alt]
        rep, err = None, None
        for seed in seeds:
            try:
                rep = solve(track, lam, tol=tol, max_iter=max_iter, seed=seed, mesh=mesh)
                break
            except (NonConvergence, SingularJacobian, FloatingPointError) as exc:
                err = exc
        if rep is None:
            log.warning("continuation stopped at lambda=%g: %s", lam, err)
            break
        rep.config = cfg
        pos, _ = locate_peaks(rep.solution, cfg)
        drift, lam_prev = pos - cfg.xi, lam
        rep.diagnostics["tracked_xi"] = tuple(track.xis)
        reports.append(rep)
    return reports


def solve_branch(cfg, lam, lambda_start=0.2, factor=0.5, base_n=128, tol=1e-10, max_iter=30):
    """Solution at ``lam`` reached by continuation from ``lambda_start``."""
    reports = continuation(cfg, max(lambda_start, lam), lam, factor, base_n, tol, max_iter,
                           exact_end=True)
    if not reports or abs(reports[-1].lam - lam) > 1e-12 * lam:
        reached = reports[-1].lam if reports else None
        raise NonConvergence(f"branch lost before lambda={lam} (last converged: {reached})",
                             [r.residual_sup for r in reports])
    return reports[-1]


def energy(op, u, lam, source=None):
    """J(u) = 1/2 int f u - int g_lambda(u), with f the source generating u (u = K f).

    For a solution ``source`` defaults to f_lambda(u); for the ansatz pass
    sum_i a_i e^{U_i}.  The quadratic term is the duality pairing of u with
    its source.
    """
    u = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    _guard(u)
    w = op.mesh.weights
    f = f_lambda(u, lam) if source is None else np.asarray(source, dtype=float)
    val = 0.5 * np.dot(w, f * u) - np.dot(w, g_lambda(u, lam))
    if not np.isfinite(val):
        raise FloatingPointError("non-finite energy")
    return float(val)


def norm_squared(op, u, source):
    """Energy norm ||u||^2 = int source * u for u = K(source)."""
    u = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    return float(np.dot(op.mesh.weights, np.asarray(source) * u))


def _graded_breakpoints(cfg, deltas):
    pts = [-1.0, 1.0]
    for xi, d in zip(cfg.xis, deltas):
        for m in range(40):
            r = d * 2.0**m - d
            if r > 2.0:
                break
            pts += [xi - r, xi + r]
    tail = 1.0 - 2.0 ** -np.arange(1, 45)
    pts = np.concatenate((pts, tail, -tail))
    return np.unique(np.clip(pts, -1.0, 1.0))


def ansatz_energy_terms(cfg, lam, order=20):
    """(||omega||^2, J_lambda(omega)) for the ansatz by composite Gauss-Legendre.

    Both integrands are closed form, so the pairing int (sum a_i e^{U_i}) omega
    is evaluated on intervals graded geometrically around every peak and
    towards both endpoints, independently of any solver mesh.
    """
    spec = AnsatzSpec(cfg, lam)
    br = _graded_breakpoints(cfg, spec.deltas)
    gs, gw = np.polynomial.legendre.leggauss(order)
    a, b = br[:-1, None], br[1:, None]
    x = (0.5 * (b - a) * gs[None, :] + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * gw[None, :]).ravel()
    om = ansatz(spec, x)
    n2 = float(np.dot(w, ansatz_source(spec, x) * om))
    return n2, 0.5 * n2 - float(np.dot(w, g_lambda(om, lam)))


def energy_expansions(cfg, lam):
    """Leading-order predictions for ||omega||^2 and J_lambda(omega)."""
    from .bubbles import interaction_energies
    k, fsum, ll = cfg.k, float(np.sum(interaction_energies(cfg))), np.log(lam)
    return (-4.0 * np.pi * k * ll - 2.0 * np.pi * fsum,
            -2.0 * np.pi * k * ll - 2.0 * np.pi * k - np.pi * fsum)


def ansatz_error_norms(cfg, lam, p, base_n=128, mesh=None):
    """Discrete L^p(I) norm of E = f_lambda(omega) - sum_i a_i e^{U_i}."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    if cfg.k == 0:
        return 0.0
    mesh = mesh if mesh is not None else build_mesh(cfg, lam, base_n)
    spec = AnsatzSpec(cfg, lam)
    x = mesh.nodes
    err = f_lambda(ansatz(spec, x), lam) - ansatz_source(spec, x)
    return float(np.dot(mesh.weights, np.abs(err) ** p) ** (1.0 / p))


def _energy_factor(op):
    # M = sym(W K) approximates the Galerkin matrix of the Green operator
    m = op.mesh.weights[:, None] * op.matrix
    m = 0.5 * (m + m.T)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(m)
        vals = np.maximum(vals, 1e-14 * vals.max())
        return vecs * np.sqrt(vals)[None, :]


def translation_sources(cfg, lam, x):
    """Columns e^{U_j} Z_{1,j}: the sources whose projections span the approximate kernel."""
    spec = AnsatzSpec(cfg, lam)
    cols = [exp_bubble(BubbleParams(d, xi), x) * bubble_z(BubbleParams(d, xi), 1, x)
            for d, xi in zip(spec.deltas, cfg.xis)]
    return np.column_stack(cols)


def linearized_smallest_singulars(op, u, lam, cfg):
    """Smallest singular values of I - K diag(f'(u)) in the energy norm.

    Returns (full space, energy-orthogonal complement of span{PZ_{1,j}}).
    With M = sym(W K) = L L^T, the energy norm of u = K g is |L^T g|, and the
    operator acts on those coordinates as L^T (I - D K) L^{-T}.
    """
    u = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    L = _energy_factor(op)
    d = f_lambda_prime(u, lam)
    inner = np.eye(len(u)) - d[:, None] * op.matrix
    try:
        a_t = sla.solve(L, (L.T @ inner).T).T
        s_full = sla.svdvals(a_t)
        q = L.T @ translation_sources(cfg, lam, op.mesh.nodes)
        basis, _ = np.linalg.qr(q, mode="complete")
        comp = basis[:, cfg.k:]
        s_perp = sla.svdvals(a_t @ comp)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SingularJacobian(str(exc)) from exc
    return float(s_full.min()), float(s_perp.min())
