import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrtomo.crystal import nl_symplectic
from corrtomo.elements import Detector
from corrtomo.measurement import FS, correlation_matrix, gamma_settings
from corrtomo.modes import ModeBasis, ModeBasisParams, PulseSpectrumParams, angular_to_thz
from corrtomo.elements import frequency_matrix
from corrtomo.states import (mode_quadratures, multimode_squeezed_vacuum, single_mode_squeezed,
                             vacuum)
from corrtomo.symplectic import exp_generator, is_physical, random_generator
from corrtomo.tomography import (ReconstructionResult, assemble_lo_matrix, reconstruct,
                                 reconstruct_single_mode, reconstructed_mode_functions,
                                 single_mode_from_state, time_local_signals)


def _matched_detector(i_max=6):
    p = ModeBasisParams.from_thz(100.0, 0.5, i_max)
    b = ModeBasis(p)
    return b, Detector(b, PulseSpectrumParams(p.sigma, p.k))


def test_single_setting_spans_first_mode_plane():
    _, det = _matched_detector()
    z = assemble_lo_matrix(det, gamma_settings([0.0]))
    assert z.shape == (12, 2)
    plane = np.zeros((12, 2))
    plane[0, 0] = plane[6, 1] = 1.0
    assert np.max(np.abs(z - plane @ (plane.T @ z))) < 1e-10
    assert np.linalg.matrix_rank(z, 1e-10) == 2


def test_lo_matrix_columns_and_rank(detector):
    for n in (3, 10):
        z = assemble_lo_matrix(detector, gamma_settings(np.linspace(-12, 12, n) * FS))
        assert np.allclose(np.linalg.norm(z, axis=0), 1.0, atol=1e-9)
        assert np.linalg.matrix_rank(z) <= min(2 * n, 2 * detector.n)


def test_vacuum_reconstructs_half_projector(detector):
    s = gamma_settings(np.linspace(-12, 12, 8) * FS)
    z = assemble_lo_matrix(detector, s)
    res = reconstruct(correlation_matrix(vacuum(detector.n), detector, s), z)
    assert np.max(np.abs(res.projected_cov - 0.5 * res.P)) < 1e-10
    assert np.max(np.abs(res.P @ res.P - res.P)) < 1e-10
    assert np.array_equal(res.P, res.P.T)
    assert int(np.trace(res.P)) == res.rank


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 12))
def test_reconstruction_matches_truth_on_subspace(seed, n_delays):
    b = ModeBasis(ModeBasisParams.from_thz(100.0, 0.5, 8))
    det = Detector(b, PulseSpectrumParams.from_center_bandwidth_thz(230.0, 118.0), threshold=None)
    rng = np.random.default_rng(seed)
    st_ = vacuum(8).evolve(exp_generator(random_generator(8, rng, 1.0)))
    s = gamma_settings(np.linspace(-12, 12, n_delays) * FS)
    res = reconstruct(correlation_matrix(st_, det, s), assemble_lo_matrix(det, s))
    assert np.max(np.abs(res.projected_cov - res.project_truth(st_.cov))) < 1e-6
    assert is_physical(res.completed_cov())


def test_cutoff_sensitivity(detector, g_nl):
    st_ = multimode_squeezed_vacuum(nl_symplectic(g_nl, 1e4))
    s = gamma_settings(np.linspace(-12, 12, 16) * FS)
    z = assemble_lo_matrix(detector, s)
    corr = correlation_matrix(st_, detector, s)
    results = [reconstruct(corr, z, c) for c in (5e-4, 1e-3, 2e-3)]
    ranks = [r.rank for r in results]
    assert ranks[0] >= ranks[1] >= ranks[2]
    k = ranks[2]
    for r in results:
        assert np.max(np.abs(r.projected_cov[:k, :k] - results[2].projected_cov[:k, :k])) < 1e-6


def test_rank_nondecreasing_on_nested_grids(detector):
    ranks = []
    for n in (3, 5, 9, 17, 33):
        z = assemble_lo_matrix(detector, gamma_settings(np.linspace(-12, 12, n) * FS))
        ranks.append(reconstruct(np.zeros((2 * n, 2 * n)), z).rank)
    assert all(b >= a for a, b in zip(ranks, ranks[1:]))


def test_reconstruction_errors():
    with pytest.raises(ValueError):
        reconstruct(np.zeros((2, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        reconstruct(np.zeros((3, 3)), np.ones((4, 2)))


def test_single_delay_mode_is_lo(basis, lo):
    det = Detector(basis, lo, threshold=None)
    res = reconstruct(np.zeros((2, 2)), assemble_lo_matrix(det, gamma_settings([0.0])))
    coeffs = reconstructed_mode_functions(res, basis)
    c_lo = det.zeta_lo[:basis.n] + 1j * det.zeta_lo[basis.n:]
    for c in coeffs:
        assert abs(abs(np.vdot(c, c_lo)) - 1.0) < 1e-10


def test_mode_functions_orthonormal(detector):
    s = gamma_settings(np.linspace(-12, 12, 8) * FS)
    res = reconstruct(np.zeros((16, 16)), assemble_lo_matrix(detector, s))
    c = reconstructed_mode_functions(res, detector.basis)
    gram = (np.conj(c) @ c.T).real
    assert np.max(np.abs(gram - np.eye(res.rank))) < 1e-8


def test_eos_modes_sit_below_lo_band(detector, lo):
    s = gamma_settings(np.linspace(-17, 17, 16) * FS)
    res = reconstruct(np.zeros((32, 32)), assemble_lo_matrix(detector, s, -1.94e6))
    c = reconstructed_mode_functions(res, detector.basis)[:4]
    wt = frequency_matrix(detector.basis)
    centres = angular_to_thz(np.real(np.einsum("ki,ij,kj->k", np.conj(c), wt, c)))
    assert np.median(centres) < 0.75 * 230.0


def test_json_round_trip(tmp_path, detector, basis):
    s = gamma_settings(np.linspace(-12, 12, 4) * FS)
    res = reconstruct(np.zeros((8, 8)), assemble_lo_matrix(detector, s))
    back = ReconstructionResult.from_json(res.to_json(tmp_path / "r.json", basis))
    assert back.rank == res.rank
    assert np.array_equal(back.projected_cov, res.projected_cov)
    assert np.array_equal(back.U, res.U)


def _single_mode_setup(i_max=24):
    b = ModeBasis(ModeBasisParams.from_thz(100.0, 0.5, i_max))
    det = Detector(b, PulseSpectrumParams.from_center_bandwidth_thz(230.0, 200.0), threshold=None)
    c, _ = b.project(PulseSpectrumParams.from_center_bandwidth_thz(230.0, 100.0).spectrum, None)
    zx, zp = mode_quadratures(c * np.exp(0.7j))
    return det, zx, zp


def test_single_mode_recovery_and_kappa_identity():
    det, zx, zp = _single_mode_setup()
    s = 0.5
    sx, sp = np.exp(2 * s) / 2, np.exp(-2 * s) / 2
    st_ = single_mode_squeezed(sx, sp, zx, zp)
    dts = np.arange(-300, 301) * 0.1e-15
    r = single_mode_from_state(st_.cov, det, dts)
    assert abs(r.sigma_x / sx - 1.0) < 1e-4
    assert abs(r.sigma_p / sp - 1.0) < 1e-4
    assert abs(r.kappa ** 2 - abs((1 - r.ratio ** 2) * (r.sigma_p - 0.5))) < 1e-10


def test_single_mode_rejects_unsqueezed_state():
    det, zx, zp = _single_mode_setup(12)
    st_ = single_mode_squeezed(1.0, 1.0, zx, zp)
    dts = np.arange(-50, 51) * 0.2e-15
    g_x, g_p, _, rows = time_local_signals(st_.cov, det, dts)
    with pytest.raises(ArithmeticError):
        reconstruct_single_mode(g_x, g_p, rows, 50)


def test_single_mode_grid_must_contain_zero():
    det, zx, zp = _single_mode_setup(12)
    st_ = single_mode_squeezed(1.0, 0.25, zx, zp)
    with pytest.raises(ValueError):
        single_mode_from_state(st_.cov, det, [1e-15, 2e-15])
