import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrtomo.analysis import von_neumann_entropy
from corrtomo.crystal import nl_symplectic
from corrtomo.elements import Detector
from corrtomo.measurement import (FS, CorrelationDataset, MeasurementSetting, correlation_matrix,
                                  correlation_signal, detected_state, gamma_settings,
                                  measurement_rows, measurement_vectors)
from corrtomo.modes import ModeBasis, ModeBasisParams, PulseSpectrumParams
from corrtomo.states import multimode_squeezed_vacuum, vacuum
from corrtomo.symplectic import bloch_messiah, is_physical


@pytest.fixture(scope="module")
def squeezed(g_nl):
    return multimode_squeezed_vacuum(nl_symplectic(g_nl, 1e4))


def test_matched_lo_measurement_vector():
    p = ModeBasisParams.from_thz(100.0, 0.5, 6)
    det = Detector(ModeBasis(p), PulseSpectrumParams(p.sigma, p.k))
    mv = measurement_vectors(det, MeasurementSetting(0.0, 0.0, "a"))
    expected = np.zeros(12)
    expected[0] = 1.0
    assert np.max(np.abs(mv.state_part - expected)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(-20e-15, 20e-15), st.floats(0, 2 * np.pi))
def test_arm_vacuum_parts_differ_by_sign(dt, phi):
    b = ModeBasis(ModeBasisParams.from_thz(100.0, 0.5, 8))
    det = Detector(b, PulseSpectrumParams.from_thz(100.0, 0.5))
    a = measurement_vectors(det, MeasurementSetting(dt, phi, "a"))
    bb = measurement_vectors(det, MeasurementSetting(dt, phi, "b"))
    assert np.array_equal(a.state_part, bb.state_part)
    assert np.max(np.abs(a.vacuum_part + bb.vacuum_part)) < 1e-14
    assert abs(np.linalg.norm(a.state_part) - np.linalg.norm(a.vacuum_part)) < 1e-12


def test_literal_and_rotated_vacuum_agree_for_homodyne(detector, squeezed):
    s = gamma_settings(np.linspace(-8, 8, 5) * FS)
    r = correlation_matrix(squeezed, detector, s, vacuum="rotated").matrix
    lit = correlation_matrix(squeezed, detector, s, vacuum="literal").matrix
    assert np.max(np.abs(r - lit)) < 1e-12


def test_vacuum_detected_state_is_vacuum(detector):
    for dt_a, dt_b in ((0.0, 0.0), (3e-15, -5e-15)):
        cov = detected_state(vacuum(detector.n), detector, dt_a, dt_b)
        assert np.max(np.abs(cov - 0.5 * np.eye(4))) < 1e-12
        assert von_neumann_entropy(cov) == pytest.approx(0.0, abs=1e-9)


def test_vacuum_quadrature_variance(detector):
    mv = measurement_vectors(detector, MeasurementSetting(1e-15, 0.3, "a"))
    var = correlation_signal(vacuum(detector.n), mv, mv, vacuum_port=False)
    assert abs(var - 0.5 * np.linalg.norm(mv.state_part) ** 2) < 1e-14


def test_vacuum_cross_signal_vanishes(detector):
    vac = vacuum(detector.n)
    for phi_b in (0.0, np.pi / 2):
        a = measurement_vectors(detector, MeasurementSetting(2e-15, 0.0, "a"))
        b = measurement_vectors(detector, MeasurementSetting(2e-15, phi_b, "b"))
        assert abs(correlation_signal(vac, a, b)) < 1e-15


def test_eq_identity_against_hand_product(detector, squeezed):
    s = gamma_settings(np.linspace(-12, 12, 6) * FS)
    for alpha in (0.0, -1.94e6):
        ds = correlation_matrix(squeezed, detector, s, alpha=alpha)
        z = np.array([detector.lo(dt, ph, alpha) for dt, ph in s]).T
        ref = z.T @ squeezed.cov @ z - z.T @ (0.5 * np.eye(2 * detector.n)) @ z
        assert np.max(np.abs(ds.matrix - ref)) < 1e-9


def test_permutation_equivariance(detector, squeezed):
    s = gamma_settings(np.linspace(-6, 6, 4) * FS)
    perm = np.random.default_rng(1).permutation(len(s))
    g = correlation_matrix(squeezed, detector, s).matrix
    gp = correlation_matrix(squeezed, detector, [s[i] for i in perm]).matrix
    assert np.max(np.abs(gp - g[np.ix_(perm, perm)])) < 1e-14


def test_dataset_round_trip_is_bit_exact(tmp_path, detector, squeezed):
    s = gamma_settings(np.linspace(-12, 12, 5) * FS)
    ds = correlation_matrix(squeezed, detector, s, metadata={"label": "x"})
    path, side = ds.write(tmp_path / "corr.csv")
    assert path.read_text().splitlines()[0] == "dt_a_fs,dt_b_fs,phi_a,phi_b,g"
    back = CorrelationDataset.read(path)
    for name in ("dt_a_fs", "dt_b_fs", "phi_a", "phi_b", "g"):
        assert np.array_equal(getattr(back, name), getattr(ds, name))
    assert back.shape == ds.shape
    assert back.metadata["label"] == "x"
    assert np.array_equal(back.settings("a"), ds.settings("a"))


def test_finite_sampling_converges_and_is_seeded(detector, squeezed):
    s = gamma_settings(np.linspace(-4, 4, 3) * FS)
    exact = correlation_matrix(squeezed, detector, s).matrix
    m = 20000
    a = correlation_matrix(squeezed, detector, s, samples=m, rng=np.random.default_rng(5)).matrix
    b = correlation_matrix(squeezed, detector, s, samples=m, rng=np.random.default_rng(5)).matrix
    assert np.array_equal(a, b)
    v_a, w_a = measurement_rows(detector, s, 0.0, "a")
    v_b, w_b = measurement_rows(detector, s, 0.0, "b")
    var_a = np.einsum("ij,jk,ik->i", v_a, squeezed.cov, v_a) + 0.5 * np.sum(w_a ** 2, axis=1)
    var_b = np.einsum("ij,jk,ik->i", v_b, squeezed.cov, v_b) + 0.5 * np.sum(w_b ** 2, axis=1)
    std = np.sqrt(np.outer(var_a, var_b) + exact ** 2) / np.sqrt(m)
    assert np.all(np.abs(a - exact) < 6 * std)


@settings(max_examples=15, deadline=None)
@given(st.floats(-10e-15, 10e-15), st.floats(-10e-15, 10e-15))
def test_detected_state_physical_and_arm_symmetric(dt_a, dt_b):
    b = ModeBasis(ModeBasisParams.from_thz(100.0, 0.5, 8))
    det = Detector(b, PulseSpectrumParams.from_thz(100.0, 0.5))
    rng = np.random.default_rng(0)
    from corrtomo.symplectic import exp_generator, random_generator
    st_ = vacuum(8).evolve(exp_generator(random_generator(8, rng, 1.0)))
    ab = detected_state(st_, det, dt_a, dt_b)
    ba = detected_state(st_, det, dt_b, dt_a)
    assert is_physical(ab, 1e-9, "xpxp")
    swap = np.array([2, 3, 0, 1])
    assert np.max(np.abs(ba - ab[np.ix_(swap, swap)])) < 1e-12


def test_strong_squeezing_thermalises_detected_state(g_nl, detector):
    st_ = multimode_squeezed_vacuum(nl_symplectic(g_nl, 2e5))
    assert von_neumann_entropy(detected_state(st_, detector, 0.0, 0.0)) > 0.0


def test_entropy_minimum_at_best_matched_lo(basis, g_nl):
    # LO grid restricted to bands overlapping the squeezed spectrum
    m = nl_symplectic(g_nl, 1e4)
    st_ = multimode_squeezed_vacuum(m)
    u, _, _ = bloch_messiah(m)
    n = basis.n
    vne, overlap = [], []
    for centre in (100.0, 150.0, 200.0):
        for width in (40.0, 80.0, 150.0):
            det = Detector(basis, PulseSpectrumParams.from_center_bandwidth_thz(centre, width),
                           threshold=None)
            vne.append(von_neumann_entropy(detected_state(st_, det, 0.0, 0.0)))
            z = det.zeta_lo
            overlap.append(np.hypot(z @ u[:, 0], z @ u[:, n]))
    assert int(np.argmin(vne)) == int(np.argmax(overlap))


def test_setting_validation():
    with pytest.raises(ValueError):
        MeasurementSetting(0.0, 0.0, "c")
