"""scikit-learn style wrappers around the optimiser and the solver.

They follow the estimator conventions (constructor only stores parameters,
``fit`` sets trailing-underscore attributes, ``get_params``/``set_params``
and ``clone`` work) so the solvers can sit in parameter sweeps built with
sklearn tooling.  Neither is a statistical learner: ``fit`` ignores data.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .bubbles import Configuration
from .reduced import maximize
from .solver import solve, solve_branch
from .verify import count_nodal_regions, peak_diagnostics


def _signs(k, signs):
    return tuple((-1) ** i for i in range(k)) if signs is None else tuple(int(s) for s in signs)


class ReducedEnergyMaximizer(BaseEstimator):
    """Multistart maximiser of the configuration energy for k signed peaks."""

    def __init__(self, k=1, signs=None, seeds=8, tol=1e-10, random_state=0):
        self.k = k
        self.signs = signs
        self.seeds = seeds
        self.tol = tol
        self.random_state = random_state

    def fit(self, X=None, y=None):
        rep = maximize(self.k, _signs(self.k, self.signs), seeds=self.seeds, tol=self.tol,
                       random_state=self.random_state)
        self.report_ = rep
        self.xi_ = np.asarray(rep.config.xis)
        self.value_ = rep.value
        self.hessian_eigs_ = np.asarray(rep.hessian_eigs)
        self.classification_ = rep.classification
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "value_")
        return self.value_


class SinhPoissonSolver(BaseEstimator):
    """Solve the nonlocal sinh-Poisson problem with peaks near ``xi``.

    ``xi=None`` places the peaks at the energy maximiser.  For ``lam`` below
    ``lambda_start`` the branch is followed by continuation.  After ``fit``,
    ``predict(X)`` evaluates the solution at the points in X (one column).
    """

    def __init__(self, k=1, signs=None, lam=0.05, base_n=128, tol=1e-10, xi=None,
                 lambda_start=0.2, factor=0.5):
        self.k = k
        self.signs = signs
        self.lam = lam
        self.base_n = base_n
        self.tol = tol
        self.xi = xi
        self.lambda_start = lambda_start
        self.factor = factor

    def _config(self):
        signs = _signs(self.k, self.signs)
        if self.xi is None:
            return maximize(self.k, signs).config
        return Configuration(tuple(float(v) for v in self.xi), signs)

    def fit(self, X=None, y=None):
        cfg = self._config()
        if self.lam < self.lambda_start:
            rep = solve_branch(cfg, self.lam, lambda_start=self.lambda_start, factor=self.factor,
                               base_n=self.base_n, tol=self.tol)
        else:
            rep = solve(cfg, self.lam, base_n=self.base_n, tol=self.tol)
        self.config_ = cfg
        self.report_ = rep
        self.solution_ = rep.solution
        self.nodes_ = rep.solution.mesh.nodes
        self.n_iter_ = rep.newton_iters
        self.residual_ = rep.residual_sup
        nodal = count_nodal_regions(rep.solution, cfg, self.lam, op=rep.operator)
        self.nodal_count_ = nodal.nodal_count
        self.peaks_ = peak_diagnostics(rep.solution, cfg, self.lam, nodal).peaks
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        X = check_array(X, ensure_2d=False, dtype=float)
        x = X.ravel() if X.ndim == 1 or X.shape[1] == 1 else None
        if x is None:
            raise ValueError("predict expects a single column of abscissae")
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        out[inside] = self.solution_(x[inside])
        return out
