import numpy as np
import pytest

from fracsinh.bubbles import Configuration
from fracsinh.mesh import build_mesh
from fracsinh.reduced import maximize
from fracsinh.solver import GridFunction, continuation, f_lambda, solve, solve_branch
from fracsinh.verify import (AmbiguousZero, MissingPeak, count_nodal_regions, diagnose,
                             limit_profile, limit_profile_monotonicity, peak_diagnostics,
                             profile_convergence, verify_solution)

ONE = Configuration((0.0,))
T = 1.0 / np.sqrt(3.0)
TWO = Configuration((-T, T))


@pytest.fixture(scope="module")
def solutions():
    three = maximize(3).config
    return {
        1: solve(ONE, 0.05),
        2: solve(TWO, 0.05),
        3: solve_branch(three, 0.05),
    }


def sampled(cfg, values_fn, lam=0.05):
    mesh = build_mesh(cfg, lam, 128)
    return GridFunction(mesh, values_fn(mesh.nodes))


def test_constant_has_one_region():
    u = sampled(ONE, lambda x: np.full_like(x, 3.0))
    rep = count_nodal_regions(u)
    assert rep.zero_locations == () and rep.nodal_count == 1
    assert not rep.certified


def test_green_difference_zero_at_centre():
    cfg = Configuration((-0.5, 0.5))
    g = lambda x: limit_profile(cfg, x) / (2 * np.pi)
    u = sampled(cfg, g)
    # |G_1 - G_2| stays below the peak-window floor of 1 at the default epsilon
    with pytest.raises(AmbiguousZero):
        count_nodal_regions(u, cfg)
    rep = count_nodal_regions(u, cfg, epsilon=0.02)
    assert rep.certified and rep.nodal_count == 2
    assert rep.zero_locations[0] == pytest.approx(0.0, abs=1e-10)
    # scaled to the actual limit profile, the default split certifies as well
    rep2 = count_nodal_regions(sampled(cfg, lambda x: limit_profile(cfg, x)), cfg)
    assert rep2.certified and rep2.zero_locations[0] == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_certified_count_on_solutions(solutions, k):
    rep = solutions[k]
    nodal = count_nodal_regions(rep.solution, rep.config, rep.lam, op=rep.operator)
    assert nodal.certified and nodal.nodal_count == k
    assert list(nodal.zero_locations) == sorted(nodal.zero_locations)
    assert len(nodal.method_detail) == k - 1


def test_two_peak_zero_at_origin(solutions):
    rep = solutions[2]
    nodal = count_nodal_regions(rep.solution, TWO, rep.lam, op=rep.operator)
    assert abs(nodal.zero_locations[0]) <= 1e-9


@pytest.mark.parametrize("k", [2, 3])
def test_zero_locations_symmetric(solutions, k):
    rep = solutions[k]
    z = np.array(count_nodal_regions(rep.solution, rep.config, rep.lam, op=rep.operator).zero_locations)
    assert np.max(np.abs(z + z[::-1])) <= 10 * 1e-10


@pytest.mark.parametrize("k", [1, 2, 3])
def test_zone_certification_agrees_with_refined_brute_force(solutions, k):
    rep = solutions[k]
    nodal = count_nodal_regions(rep.solution, rep.config, rep.lam, op=rep.operator)
    assert nodal.certified
    x = rep.solution.mesh.nodes
    fine = np.concatenate([x[:-1, None] + np.diff(x)[:, None] * np.linspace(0, 1, 10, endpoint=False),
                           x[-1:, None]], axis=None)
    v = rep.operator.evaluate(f_lambda(rep.solution.values, rep.lam), fine)
    changes = np.count_nonzero(np.sign(v[1:]) * np.sign(v[:-1]) < 0)
    assert changes + 1 == nodal.nodal_count


def test_peak_report_one_peak(solutions):
    rep = solutions[1]
    peaks = peak_diagnostics(rep.solution, ONE, rep.lam)
    p = peaks.peaks[0]
    assert p["height"] == pytest.approx(2 * np.log(1 / 0.05), abs=0.1)
    assert p["location"] == pytest.approx(0.0, abs=1e-12)
    assert p["sign"] == 1
    assert p["local_mass"] == pytest.approx(2 * np.pi, rel=0.15)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_sign_flip_negates_masses_and_signs(solutions, k):
    rep = solutions[k]
    cfg = rep.config
    flipped_cfg = Configuration(cfg.xis, tuple(-s for s in cfg.signs))
    a = peak_diagnostics(rep.solution, cfg, rep.lam)
    b = peak_diagnostics(-rep.solution, flipped_cfg, rep.lam)
    assert [p["sign"] for p in b.peaks] == [-p["sign"] for p in a.peaks]
    assert b.masses == pytest.approx(-a.masses, abs=1e-12)
    assert b.masses.sum() == pytest.approx(-a.masses.sum(), abs=1e-12)


def test_alternating_signs_in_peak_report(solutions):
    peaks = peak_diagnostics(solutions[3].solution, solutions[3].config, 0.05)
    assert [p["sign"] for p in peaks.peaks] == [1, -1, 1]


def test_masses_tile_the_interval(solutions):
    rep = solutions[2]
    nodal = count_nodal_regions(rep.solution, TWO, rep.lam, op=rep.operator)
    masses = peak_diagnostics(rep.solution, TWO, rep.lam, nodal).masses
    x, w = rep.solution.mesh.nodes, rep.solution.mesh.weights
    assert masses.sum() == pytest.approx(np.dot(w, f_lambda(rep.solution.values, rep.lam)), abs=1e-10)


def test_missing_peak():
    u = sampled(ONE, lambda x: -(1 - x * x))
    with pytest.raises(MissingPeak):
        peak_diagnostics(u, ONE, 0.05)


def test_profile_convergence_edge_cases():
    u = sampled(TWO, lambda x: limit_profile(TWO, x))
    rep = profile_convergence(u, TWO, 0.05, 0.1)
    assert rep.sup == 0.0 and rep.weighted_sup == 0.0
    with pytest.raises(ValueError):
        profile_convergence(u, TWO, 0.05, 0.5)
    with pytest.raises(ValueError):
        profile_convergence(u, TWO, 0.05, 0.0)


def test_profile_convergence_along_one_peak_sweep():
    reps = continuation(ONE, 0.2, 0.0125, 0.5)
    out = [profile_convergence(r.solution, ONE, r.lam, 0.2) for r in reps]
    sups = [o.sup for o in out]
    assert all(b < a for a, b in zip(sups, sups[1:]))
    assert all(np.isfinite(o.weighted_sup) for o in out)


def test_peak_locations_converge_along_two_peak_sweep():
    reps = continuation(TWO, 0.2, 0.0125, 0.5)
    drift = [np.max(np.abs(peak_diagnostics(r.solution, TWO, r.lam).locations - TWO.xi)) for r in reps]
    assert all(b < a for a, b in zip(drift, drift[1:]))


def test_monotonicity_constant():
    assert limit_profile_monotonicity(ONE) == pytest.approx(1 / np.pi, abs=1e-12)
    c2 = limit_profile_monotonicity(TWO)
    assert c2 > 0
    assert limit_profile_monotonicity(TWO, samples=4000) >= c2 - 1e-8
    with pytest.raises(ValueError):
        limit_profile_monotonicity(Configuration((-0.5, 0.5), (1, 1)))


def test_verify_and_diagnose(solutions):
    rep = solutions[2]
    res = verify_solution(rep, TWO)
    assert res["passed"] and all(res["checks"].values())
    out = diagnose(rep, TWO, singulars=False)
    d = out["diagnostics"]
    assert d["nodal_count"] == 2
    assert set(d) >= {"peak_locations", "peak_heights", "local_masses", "energy", "remainder_norms",
                      "norm_gap", "energy_gap", "height_gaps", "mass_errors"}
    assert rep.diagnostics["nodal_count"] == 2


def test_epsilon_must_fit():
    u = sampled(TWO, lambda x: limit_profile(TWO, x))
    with pytest.raises(ValueError):
        count_nodal_regions(u, TWO, epsilon=1.0)
