import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrtomo.analysis import (entropy_function, gaussian_discord, logarithmic_negativity,
                               mutual_information, thermal_mode_cov, two_mode_squeezed_cov,
                               von_neumann_entropy)
from corrtomo.symplectic import exp_generator, interleaved_form, random_generator
from corrtomo.symplectic import xp_to_interleaved


def product(a, b):
    out = np.zeros((4, 4))
    out[:2, :2], out[2:, 2:] = a, b
    return out


def random_two_mode_state(seed, scale=1.0, thermal=True):
    rng = np.random.default_rng(seed)
    nu = 0.5 + (rng.random(2) if thermal else np.zeros(2))
    cov = np.diag(np.concatenate([nu, nu]))
    m = exp_generator(random_generator(2, rng, scale))
    p = xp_to_interleaved(2)
    return p @ (m.T @ cov @ m) @ p.T


def test_vacuum_entropy_zero():
    assert von_neumann_entropy(0.5 * np.eye(4)) == 0.0


def test_entropy_function_at_one():
    assert entropy_function(1.0) == 0.0


def test_thermal_mode_entropy():
    nbar = 1.0
    assert abs(entropy_function(3.0) - 2.0) < 1e-15
    bosonic = (nbar + 1) * np.log2(nbar + 1) - nbar * np.log2(nbar) if nbar > 0 else 0.0
    assert abs(von_neumann_entropy(thermal_mode_cov(nbar)) - bosonic) < 1e-12


def test_unphysical_entropy_rejected():
    with pytest.raises(ValueError):
        von_neumann_entropy(0.2 * np.eye(4))


def test_product_of_vacua_not_entangled():
    assert logarithmic_negativity(0.5 * np.eye(4)) == 0.0


@pytest.mark.parametrize("r", [0.1, 0.5, 1.2])
def test_two_mode_squeezed_log_negativity(r):
    assert abs(logarithmic_negativity(two_mode_squeezed_cov(r)) - 2 * r / np.log(2)) < 1e-10


@pytest.mark.parametrize("r", [0.1, 0.5, 1.2])
def test_two_mode_squeezed_discord_equals_local_entropy(r):
    cov = two_mode_squeezed_cov(r)
    d = gaussian_discord(cov)
    assert d > 0
    # E_min has a square-root branch point at pure states, so rounding in the
    # invariants shows up at the sqrt(eps) level
    assert abs(d - entropy_function(np.cosh(2 * r))) < 1e-6
    assert abs(gaussian_discord(cov, "a") - d) < 1e-6


def test_product_states_have_zero_discord_and_negativity():
    for a, b in ((thermal_mode_cov(0.3), thermal_mode_cov(2.0)),
                 (0.5 * np.diag([3.0, 1 / 3.0]), thermal_mode_cov(0.7))):
        cov = product(a, b)
        assert abs(gaussian_discord(cov)) < 1e-12
        assert abs(gaussian_discord(cov, "a")) < 1e-12
        assert logarithmic_negativity(cov) == 0.0
        assert abs(mutual_information(cov)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_entropy_symplectic_invariance(seed):
    cov = random_two_mode_state(seed)
    rng = np.random.default_rng(seed + 1)
    m = exp_generator(random_generator(2, rng, 0.8))
    p = xp_to_interleaved(2)
    m_i = p @ m @ p.T
    assert abs(von_neumann_entropy(m_i.T @ cov @ m_i) - von_neumann_entropy(cov)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 1.5))
def test_discord_nonnegative_on_physical_states(seed, scale):
    cov = random_two_mode_state(seed, scale)
    assert gaussian_discord(cov) >= 0.0
    assert gaussian_discord(cov, "a") >= 0.0
    assert logarithmic_negativity(cov) >= 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_thermal_products_separable(n1, n2):
    assert logarithmic_negativity(product(thermal_mode_cov(n1), thermal_mode_cov(n2))) == 0.0


def test_interleaved_convention():
    om = interleaved_form(2)
    assert om[0, 1] == 1.0 and om[2, 3] == 1.0


def test_discord_measured_argument():
    with pytest.raises(ValueError):
        gaussian_discord(0.5 * np.eye(4), "c")
