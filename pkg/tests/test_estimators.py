import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fracsinh import ReducedEnergyMaximizer, SinhPoissonSolver


def test_maximizer_fit_and_params():
    est = ReducedEnergyMaximizer(k=2, seeds=4)
    assert est.get_params()["k"] == 2
    assert est.fit() is est
    assert est.xi_ == pytest.approx([-1 / np.sqrt(3), 1 / np.sqrt(3)], abs=1e-6)
    assert est.classification_ == "max"
    assert est.score() == est.value_
    assert clone(est).get_params() == est.get_params()


@pytest.fixture(scope="module")
def fitted():
    return SinhPoissonSolver(k=1, lam=0.05).fit()


def test_solver_fit_attributes(fitted):
    assert fitted.residual_ <= 1e-10
    assert fitted.nodal_count_ == 1
    assert fitted.n_iter_ >= 1
    assert fitted.nodes_.shape == fitted.solution_.values.shape


def test_solver_predict(fitted):
    x = np.array([[-2.0], [0.0], [0.5], [1.0]])
    y = fitted.predict(x)
    assert y.shape == (4,)
    assert y[0] == 0.0 and y[3] == 0.0
    assert y[1] == pytest.approx(fitted.solution_.values.max(), rel=1e-6)
    assert fitted.predict(np.array([0.0, 0.5])) == pytest.approx(y[1:3])
    with pytest.raises(ValueError):
        fitted.predict(np.zeros((3, 2)))


def test_unfitted_and_clone():
    est = SinhPoissonSolver(k=2, lam=0.1, xi=(-0.5, 0.5))
    with pytest.raises(NotFittedError):
        est.predict(np.zeros(3))
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est
