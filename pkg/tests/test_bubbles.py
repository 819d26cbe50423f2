import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fracsinh import green_kernel as gk
from fracsinh.bubbles import (AnsatzSpec, BubbleParams, Configuration, ansatz, ansatz_source,
                              bubble, bubble_z, delta_choice, exp_bubble, interaction_energies,
                              interaction_energy, proj_bubble, proj_z1)
from fracsinh.mesh import build_mesh
from fracsinh.operator import assemble_inverse
from oracles import exact_proj_bubble, exact_proj_z1, harmonic_extension

T = 1.0 / np.sqrt(3.0)
K2 = Configuration((-T, T), (1, -1))


def probe_points(xi, delta):
    t = np.concatenate([-np.geomspace(1e3, 1e-1, 12), [0.0], np.geomspace(1e-1, 1e3, 12)])
    x = np.concatenate([xi + delta * t, np.linspace(-0.98, 0.98, 25)])
    return x[np.abs(x) < 0.999]


def oracle_error(fn, oracle, delta, xi=0.2):
    p = BubbleParams(delta, xi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return max(abs(fn(p, v) - oracle(delta, xi, v)) for v in probe_points(xi, delta))


# -- bubble family -----------------------------------------------------------------

def test_bubble_values():
    assert bubble(BubbleParams(1.0, 0.0), 0.0) == pytest.approx(np.log(2.0), abs=1e-15)
    assert bubble(BubbleParams(0.01, 0.3), 0.3) == pytest.approx(np.log(200.0), abs=1e-12)
    assert bubble(BubbleParams(0.01, 0.3), 0.3) == pytest.approx(5.29832, abs=1e-5)


def test_bubble_mass_is_two_pi():
    p = BubbleParams(0.03, 0.1)
    mass = integrate.quad(lambda x: exp_bubble(p, x), -np.inf, np.inf, points=None)[0]
    assert mass == pytest.approx(2 * np.pi, rel=1e-10)


def test_bad_parameters_rejected():
    with pytest.raises(ValueError):
        BubbleParams(0.0, 0.0)
    with pytest.raises(ValueError):
        bubble_z(BubbleParams(1.0, 0.0), 2, 0.0)
    with pytest.raises(ValueError):
        proj_bubble(BubbleParams(1.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        proj_z1(BubbleParams(1.5, 0.0), 0.0)


def test_kernel_elements():
    p = BubbleParams(1.0, 0.0)
    assert bubble_z(p, 0, 0.0) == 1.0
    assert bubble_z(p, 1, 0.0) == 0.0
    w = lambda y: 2.0 / (1 + y * y) * bubble_z(p, 0, y) * bubble_z(p, 1, y)
    assert abs(integrate.quad(w, -np.inf, np.inf)[0]) < 1e-12
    # ∫ e^U Z_1^2 = pi is the normalisation behind the Gram matrix test
    w11 = lambda y: 2.0 / (1 + y * y) * bubble_z(p, 1, y) ** 2
    assert integrate.quad(w11, -np.inf, np.inf)[0] == pytest.approx(np.pi, rel=1e-10)


# -- projections ---------------------------------------------------------------------

def test_proj_bubble_values():
    p = BubbleParams(1e-3, 0.0)
    assert proj_bubble(p, 0.0) == pytest.approx(2 * np.log(1e3) + 2 * np.log(2), abs=1e-9)
    assert proj_bubble(p, 0.0) == pytest.approx(15.2018, abs=1e-4)
    # far away PU ~ 2 pi G(0, .) ; G(0, 0.8) = log(1.6 / 0.8) / pi = log 2 / pi
    assert proj_bubble(p, 0.8) == pytest.approx(2 * np.log(2.0), abs=1e-5)
    assert proj_bubble(p, 0.8) == pytest.approx(2 * np.pi * gk.green(0.0, 0.8), abs=2e-6)
    assert proj_bubble(p, 1.5) == 0.0
    assert np.all(proj_bubble(p, np.array([-1.0, 1.0, 3.0])) == 0.0)


def test_proj_bubble_second_order():
    e2, e3 = oracle_error(proj_bubble, exact_proj_bubble, 1e-2), oracle_error(
        proj_bubble, exact_proj_bubble, 1e-3)
    assert 80 <= e2 / e3 <= 120
    assert e3 <= 2.0 * 1e-6


def test_proj_z1_values():
    p = BubbleParams(1e-3, 0.0)
    assert proj_z1(p, 0.0) == 0.0
    z1 = 2e-3 * 0.5 / (1e-6 + 0.25)
    assert proj_z1(p, 0.5) == pytest.approx(z1 + 2 * np.pi * 1e-3 * gk.robin_dxi(0.0, 0.5), rel=1e-13)
    assert proj_z1(p, 0.5) == pytest.approx(exact_proj_z1(1e-3, 0.0, 0.5), abs=1e-8)
    assert proj_z1(p, 1.2) == 0.0


def test_proj_z1_constant_two_pi_is_third_order():
    hi = oracle_error(proj_z1, exact_proj_z1, 1e-2)
    lo = oracle_error(proj_z1, exact_proj_z1, 1e-3)
    assert 800 <= hi / lo <= 1200


def test_proj_z1_constant_two_leaves_first_order_defect():
    two = lambda p, x: proj_z1(p, x, coef=2.0)
    hi = oracle_error(two, exact_proj_z1, 1e-2)
    lo = oracle_error(two, exact_proj_z1, 1e-3)
    assert 8 <= hi / lo <= 12
    assert lo > 100 * oracle_error(proj_z1, exact_proj_z1, 1e-3)


def test_proj_z1_is_order_delta_away_from_centre():
    # outside a window of half-width 0.1, |Z_1| <= 2 delta / 0.1
    x = np.concatenate([np.linspace(-1.5, 0.0, 200), np.linspace(0.2, 1.5, 200)])
    sups = [np.max(np.abs(proj_z1(BubbleParams(d, 0.1), x))) for d in (1e-2, 1e-3)]
    assert sups[0] <= 25 * 1e-2 and sups[1] <= 25 * 1e-3
    assert sups[0] / sups[1] == pytest.approx(10.0, rel=0.05)


def test_liouville_tail_identity():
    """U - K(e^U) on I equals the harmonic extension of U's exterior values."""
    xi, delta = 0.1, 0.05
    cfg = Configuration((xi,))
    lam = 2 * delta * np.exp(-interaction_energies(cfg)[0])
    mesh = build_mesh(cfg, lam, 128)
    assert mesh.patch_deltas[0] == pytest.approx(delta)
    op = assemble_inverse(mesh)
    p = BubbleParams(delta, xi)
    x = mesh.nodes
    diff = bubble(p, x) - op.apply(exp_bubble(p, x))
    idx = np.linspace(0, len(x) - 1, 9).astype(int)
    ref = np.array([harmonic_extension(v, lambda y: bubble(p, y)) for v in x[idx]])
    assert np.max(np.abs(diff[idx] - ref)) <= 5e-4


# -- configuration, F_i, delta ----------------------------------------------------

def test_configuration_validation():
    assert Configuration((0.1, 0.5)).signs == (1, -1)
    for bad in [dict(xis=(0.5, 0.1)), dict(xis=(0.2, 0.2)), dict(xis=(1.0,)),
                dict(xis=(0.1,), signs=(2,)), dict(xis=(0.1, 0.2), signs=(1,)),
                dict(xis=(-0.5, 0.5), eta=0.6)]:
        with pytest.raises(ValueError):
            Configuration(**bad)
    assert K2.margin() == pytest.approx(1 - T)
    assert K2.is_alternating() and K2.is_symmetric()


def test_interaction_energy_values():
    assert interaction_energy(Configuration((0.0,)), 0) == pytest.approx(2 * np.log(2), abs=1e-14)
    expected = 2 * np.log(2 * T * (1 - T * T))
    assert interaction_energy(K2, 0) == pytest.approx(expected, abs=1e-13)
    assert interaction_energy(K2, 1) == pytest.approx(expected, abs=1e-13)
    assert expected == pytest.approx(-0.5232481437645478, abs=1e-13)
    flipped = Configuration(K2.xis, (-1, 1))
    assert np.allclose(interaction_energies(flipped), interaction_energies(K2), atol=0, rtol=0)
    with pytest.raises(IndexError):
        interaction_energy(K2, 2)


def test_delta_choice_values():
    one = Configuration((0.0,))
    assert delta_choice(one, 0.01)[0] == pytest.approx(0.02, rel=1e-14)
    assert delta_choice(one, 1e-9)[0] / 1e-9 == pytest.approx(2.0, rel=1e-14)
    d = delta_choice(K2, 0.01)
    assert d == pytest.approx(0.005 * np.exp(-0.5232481437645478) * np.ones(2), rel=1e-13)
    # exp(F) = (4 / (3 sqrt 3))^2 = 16/27
    assert d[0] == pytest.approx(0.005 * 16 / 27, rel=1e-13)
    with pytest.raises(ValueError):
        delta_choice(one, 0.0)


@given(st.floats(1e-6, 0.5), st.floats(1.0001, 3.0), st.floats(-0.8, 0.8))
def test_delta_choice_strictly_increasing_in_lambda(lam, factor, xi):
    cfg = Configuration((xi - 0.15, xi + 0.15))
    assert np.all(delta_choice(cfg, lam * factor) > delta_choice(cfg, lam))


# -- ansatz -------------------------------------------------------------------------

def test_single_peak_ansatz_is_the_projection():
    cfg = Configuration((0.3,))
    spec = AnsatzSpec(cfg, 0.05)
    x = np.linspace(-1.2, 1.2, 101)
    assert np.array_equal(ansatz(spec, x), proj_bubble(BubbleParams(spec.deltas[0], 0.3), x))


def test_symmetric_pair_vanishes_at_midpoint():
    assert abs(ansatz(AnsatzSpec(K2, 0.05), np.array([0.0]))[0]) < 1e-14


def test_far_field_matches_green_profile():
    for lam in (0.05, 0.005):
        spec = AnsatzSpec(K2, lam)
        x = np.array([-0.95, -0.2, 0.0, 0.25, 0.9])
        far = 2 * np.pi * sum(a * gk.green(xi, x) for a, xi in zip(K2.signs, K2.xis))
        assert np.max(np.abs(ansatz(spec, x) - far)) <= 10 * lam**2


def test_ansatz_source_vanishes_outside():
    spec = AnsatzSpec(K2, 0.05)
    assert np.all(ansatz_source(spec, np.array([-1.0, 1.0, 1.5])) == 0.0)
    assert np.all(ansatz(spec, np.array([-1.0, 1.0, 1.5])) == 0.0)


def test_translation_gram_matrix_is_pi_identity_to_order_lambda():
    prev = None
    for lam in (0.1, 0.05, 0.025, 0.0125):
        mesh = build_mesh(K2, lam, 128)
        x, w = mesh.nodes, mesh.weights
        ps = [BubbleParams(d, xi) for d, xi in zip(delta_choice(K2, lam), K2.xis)]
        gram = np.array([[np.dot(w, exp_bubble(p, x) * bubble_z(p, 1, x) * proj_z1(q, x))
                          for q in ps] for p in ps])
        dev = np.max(np.abs(gram - np.pi * np.eye(2)))
        assert dev <= 0.5 * lam
        if prev is not None:
            assert dev < prev
        prev = dev
