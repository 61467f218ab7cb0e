import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from corrtomo.elements import Detector
from corrtomo.fockstats import (SchurStats, binomial_mixture_check, binomial_weights,
                                detection_geometry, fock_joint_pdf, hermite_limit_check,
                                husimi_mixture_pdf, normalization, overlap_from_sigma,
                                plane_integral, plane_wigner_pdf, scaled_laguerre, schur_stats,
                                sigma_trace)
from corrtomo.modes import ModeBasis, ModeBasisParams, PulseSpectrumParams
from corrtomo.states import FockStateSpec, vacuum

PHOTON = PulseSpectrumParams.from_center_bandwidth_thz(202.0, 59.0)
LO = PulseSpectrumParams.from_center_bandwidth_thz(200.0, 118.0)


@pytest.fixture(scope="module")
def setup():
    basis = ModeBasis(ModeBasisParams(LO.sigma, LO.k, 12))
    det = Detector(basis, LO, threshold=None)
    return basis, det


@pytest.fixture(scope="module")
def matched():
    basis = ModeBasis(ModeBasisParams(PHOTON.sigma, PHOTON.k, 12))
    det = Detector(basis, PHOTON, threshold=None)
    return basis, det


def _stats(det, basis, n, dt_a=0.0, dt_b=0.0, mode=PHOTON):
    geo = detection_geometry(dt_a, dt_b, det)
    spec = FockStateSpec.from_mode(n, mode, basis, None)
    return geo, spec, schur_stats(geo, spec)


def test_lo_projector_and_precision(setup):
    _, det = setup
    for dt_b in (0.0, 3e-15):
        geo = detection_geometry(0.0, dt_b, det)
        assert np.linalg.matrix_rank(geo.P_LO, 1e-10) == 2
        assert np.min(np.linalg.eigvalsh(geo.Sigma_d_inv)) > -1e-10
        assert np.array_equal(geo.Sigma_d_inv, geo.Sigma_d_inv.T)


def test_kernel_is_normalized_gaussian(setup):
    _, det = setup
    geo = detection_geometry(0.0, 2e-15, det)
    zeta = np.linspace(-1, 1, 2 * det.n)
    t, w = np.polynomial.hermite.hermgauss(60)
    mean = geo.rows @ zeta
    chol = np.linalg.cholesky(geo.noise)
    pts = np.sqrt(2.0) * np.stack(np.meshgrid(t, t, indexing="ij"), -1) @ chol.T + mean
    # change of variables: the Gauss-Hermite weights absorb the Gaussian exactly
    dens = geo.kernel(pts, zeta)
    jac = 2.0 * np.sqrt(np.linalg.det(geo.noise))
    vals = dens * jac / np.exp(-np.sum((np.stack(np.meshgrid(t, t, indexing="ij"), -1)) ** 2, -1))
    assert abs(np.sum(np.outer(w, w) * vals) - 1.0) < 1e-12


def test_matched_time_local_sigma_is_four(matched):
    basis, det = matched
    _, _, st_ = _stats(det, basis, 1)
    assert abs(st_.sigma_x - 4.0) < 1e-8
    assert abs(st_.sigma_p - 4.0) < 1e-8


def test_far_delay_sigma_p_reaches_vacuum_floor():
    basis = ModeBasis(ModeBasisParams(PHOTON.sigma, PHOTON.k, 24))
    det = Detector(basis, PHOTON, threshold=None)
    _, _, st_ = _stats(det, basis, 1, 0.0, 40e-15)
    assert abs(st_.sigma_p - 2.0) < 1e-5
    assert abs(st_.sigma_x - 4.0) < 1e-5


def test_vacuum_matches_gaussian_pipeline(setup):
    basis, det = setup
    geo, _, st_ = _stats(det, basis, 0, 0.0, 1.5e-15)
    x = np.linspace(-2, 2, 9)
    xx, pp = np.meshgrid(x, x, indexing="ij")
    gauss = geo.gaussian_pdf(np.stack([xx, pp], -1), vacuum(det.n).cov)
    assert np.max(np.abs(fock_joint_pdf(xx, pp, st_, 0) - gauss)) < 1e-8


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_fock_pdf_normalized_and_nonnegative(setup, n):
    basis, det = setup
    geo, _, st_ = _stats(det, basis, n, 0.0, 1.5e-15)
    assert abs(normalization(st_, geo, n) - 1.0) < 1e-6
    x = np.linspace(-3, 3, 41)
    xx, pp = np.meshgrid(x, x, indexing="ij")
    assert np.min(fock_joint_pdf(xx, pp, st_, n)) >= 0.0


@pytest.mark.parametrize("n", [1, 2])
def test_closed_form_against_plane_quadrature(setup, n):
    basis, det = setup
    geo, spec, st_ = _stats(det, basis, n, 0.0, 2e-15)
    x = np.linspace(-2.5, 2.5, 7)
    xx, pp = np.meshgrid(x, x, indexing="ij")
    closed = fock_joint_pdf(xx, pp, st_, n)
    quad = plane_wigner_pdf(xx, pp, geo, spec)
    assert np.max(np.abs(closed - quad)) < 1e-10 * max(1.0, np.max(closed))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_time_local_binomial_mixture(setup, n):
    basis, det = setup
    geo, _, st_ = _stats(det, basis, n)
    weights = binomial_mixture_check(st_, n)
    x = np.linspace(-3, 3, 13)
    xx, pp = np.meshgrid(x, x, indexing="ij")
    assert np.max(np.abs(fock_joint_pdf(xx, pp, st_, n)
                         - husimi_mixture_pdf(xx, pp, geo, weights))) < 1e-6


def test_binomial_examples():
    assert np.array_equal(binomial_weights(3, 1.0), [0.0, 0.0, 0.0, 1.0])
    assert np.allclose(binomial_weights(2, 0.5), [0.25, 0.5, 0.25], atol=1e-15)
    assert overlap_from_sigma(4.0) == 1.0
    assert overlap_from_sigma(2.0) == 0.0


def test_binomial_check_needs_equal_sigmas():
    fake = SchurStats(4.0, 2.0, np.zeros(2), np.zeros(2), np.eye(2), 0.0, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        binomial_mixture_check(fake, 1)


def _synthetic(sigma_x, sigma_p=2.0):
    return SchurStats(sigma_x, sigma_p, np.zeros(2), np.zeros(2), np.eye(2), 0.0,
                      np.zeros((2, 2)))


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_hermite_slice_at_vacuum_floor(n):
    st_ = _synthetic(5.0)
    _, closed, herm = hermite_limit_check(st_, n, np.linspace(-4, 4, 17))
    assert np.max(np.abs(closed - herm)) < 1e-10 * np.max(herm)


def test_hermite_slice_requires_floor():
    with pytest.raises(ValueError):
        hermite_limit_check(_synthetic(5.0, 3.0), 1, np.zeros(3))


def test_two_photon_minima_near_hermite_roots():
    # for x ~ N(x0, 1/sx), E[H_2(x)^2] is smallest at x0^2 = 1/2 - 3/sx
    sx = 200.0
    st_ = _synthetic(sx)
    b = np.linspace(0.3, 1.2, 90001) * sx
    reduced = fock_joint_pdf(b, 0.0, st_, 2) * np.exp(-0.5 * b * b / sx)
    root = b[np.argmin(reduced)] / sx
    assert abs(root - np.sqrt(0.5 - 3.0 / sx)) < 2e-5
    assert abs(root - 1 / np.sqrt(2)) < 0.02


def test_single_photon_double_hump(matched):
    basis, det = matched
    _, _, st_ = _stats(det, basis, 1)
    x = np.linspace(-3, 3, 601)
    line = fock_joint_pdf(x, 0.0, st_, 1)
    assert line[300] < 1e-6 * line.max()
    peaks = np.flatnonzero((line[1:-1] > line[:-2]) & (line[1:-1] > line[2:])) + 1
    assert len(peaks) == 2
    assert abs(x[peaks[0]] + x[peaks[1]]) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2.5), st.floats(0.0, 2 * np.pi), st.integers(0, 3))
def test_time_local_density_rotation_invariant(r, theta, n):
    basis = ModeBasis(ModeBasisParams(LO.sigma, LO.k, 8))
    det = Detector(basis, LO, threshold=None)
    _, _, st_ = _stats(det, basis, n)
    a = fock_joint_pdf(r, 0.0, st_, n)
    b = fock_joint_pdf(r * np.cos(theta), r * np.sin(theta), st_, n)
    assert abs(a - b) < 1e-9 * max(1.0, a)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.0, 10.0), st.integers(0, 6))
def test_scaled_laguerre_matches_scipy(eps, w, n):
    ours = scaled_laguerre(n, eps, w)[n]
    ref = eps ** n * special.eval_genlaguerre(n, -0.5, w / eps)
    assert abs(ours - ref) < 1e-10 * max(1.0, abs(ref))


def test_scaled_laguerre_zero_eps_limit():
    w = 0.7
    out = scaled_laguerre(4, 0.0, w)
    assert np.allclose(out, [(-w) ** i / special.factorial(i) for i in range(5)], atol=1e-15)


def test_plane_integral_vacuum_case():
    # n = 0 is a plain Gaussian integral
    sx, sp, bx, bp = 3.0, 5.0, 0.4, -0.2
    ref = 2 * np.pi / np.sqrt(sx * sp) * np.exp(bx ** 2 / (2 * sx) + bp ** 2 / (2 * sp))
    assert abs(plane_integral(0, sx, sp, bx, bp) - ref) < 1e-14


def test_sigma_trace_shape_and_bounds(setup):
    basis, det = setup
    spec = FockStateSpec.from_mode(1, PHOTON, basis, None)
    tr = sigma_trace(det, spec, 0.0, np.linspace(-5e-15, 5e-15, 5))
    assert tr.shape == (5, 2)
    assert np.all(tr[:, 0] >= tr[:, 1])
    assert np.all(tr >= 2.0 - 1e-9)
    assert np.all(tr <= 4.0 + 1e-9)
