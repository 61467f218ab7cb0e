"""Linear optical elements: wave plates, free propagation and the local oscillator.

Phase-space vectors use the (x_0..x_{N-1}, p_0..p_{N-1}) ordering. A
measured quadrature is the projection of the field operators onto the
transformed local oscillator

    zeta_LO(dt, alpha, phi) = M^T(dt) M_NL^T(alpha) R^T(phi) zeta_LO.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .modes import ModeBasis, PulseSpectrumParams, normalized_laguerre
from .symplectic import exp_generator

ARM_PHASE = {"a": +np.pi / 2, "b": -np.pi / 2}


def jones_elements(retardance: float, rotation: float) -> tuple[complex, complex]:
    """Wave-plate matrix elements (w1, w2) for retardance Phi rotated by theta."""
    half = 0.5 * retardance
    w1 = np.cos(half) - 1j * np.sin(half) * np.cos(2.0 * rotation)
    w2 = -1j * np.sin(half) * np.sin(2.0 * rotation)
    return complex(w1), complex(w2)


def waveplate_balance(retardance: float) -> tuple[float, float]:
    """Rotation angle that balances a wave plate, and the resulting phase.

    The rotation theta makes |w1| = |w2| so that the photon-number
    difference is linear in the signal field. The effective phase is the
    argument of w1^* (w2 - w2^*).

    Args:
        retardance: Phi in [pi/2, 3pi/2].

    Returns:
        (theta, phi_prime) in radians.
    """
    if not np.pi / 2 - 1e-12 <= retardance <= 3 * np.pi / 2 + 1e-12:
        raise ValueError("retardance must lie in [pi/2, 3pi/2]")
    c2 = np.cos(0.5 * retardance) ** 2
    s2 = np.sin(0.5 * retardance) ** 2
    arg = np.clip((1.0 - 2.0 * c2) / (2.0 * s2), 0.0, 1.0)
    theta = 0.5 * np.arccos(np.sqrt(arg))
    w1, w2 = jones_elements(retardance, theta)
    phi = float(np.angle(np.conj(w1) * (w2 - np.conj(w2))))
    return float(theta), phi


def rotation(phi: float, n: int) -> np.ndarray:
    """Phase rotation R(phi) = [[cos I, -sin I], [sin I, cos I]] on n modes."""
    c, s = np.cos(phi), np.sin(phi)
    eye = np.eye(n)
    return np.block([[c * eye, -s * eye], [s * eye, c * eye]])


def frequency_matrix(basis: ModeBasis, order: int | None = None) -> np.ndarray:
    """Matrix elements int w f_i f_j dw of the free-field Hamiltonian.

    With x = w^2 / sigma^2 the integrand becomes
    sigma / Gamma(k + 1/2) x^k exp(-x) L_i L_j, a polynomial times the
    generalized Laguerre weight with parameter k, so Gauss-Laguerre
    quadrature is exact.
    """
    p = basis.params
    order = p.i_max + 2 if order is None else order
    x, w = special.roots_genlaguerre(order, p.k)
    q = normalized_laguerre(p.i_max, p.k - 0.5, x)
    scale = p.sigma * np.exp(-special.gammaln(p.k + 0.5))
    mat = scale * (q * w) @ q.T
    return 0.5 * (mat + mat.T)


def delay_generator(dt: float, omega_tilde) -> np.ndarray:
    """G_dt = dt [[0, W], [-W, 0]]."""
    w = np.asarray(omega_tilde, dtype=float)
    zero = np.zeros_like(w)
    return dt * np.block([[zero, w], [-w, zero]])


@dataclass
class DelayPropagator:
    """Closed-form free propagation M(dt) = exp(G_dt) via the eigenbasis of W."""

    omega_tilde: np.ndarray
    _evals: np.ndarray = field(init=False, repr=False)
    _evecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.omega_tilde = np.asarray(self.omega_tilde, dtype=float)
        self._evals, self._evecs = np.linalg.eigh(self.omega_tilde)

    @property
    def n(self) -> int:
        return self.omega_tilde.shape[0]

    def blocks(self, dt: float):
        q, lam = self._evecs, self._evals
        c = (q * np.cos(lam * dt)) @ q.T
        s = (q * np.sin(lam * dt)) @ q.T
        return c, s

    def matrix(self, dt: float) -> np.ndarray:
        """M(dt) = [[cos(W dt), sin(W dt)], [-sin(W dt), cos(W dt)]]."""
        c, s = self.blocks(dt)
        return np.block([[c, s], [-s, c]])

    def apply_transpose(self, dt, vec) -> np.ndarray:
        """M^T(dt) @ vec for one delay or an array of delays (rows of the result)."""
        vec = np.asarray(vec, dtype=float)
        n = self.n
        q, lam = self._evecs, self._evals
        xq, pq = q.T @ vec[:n], q.T @ vec[n:]
        dts = np.atleast_1d(np.asarray(dt, dtype=float))
        ph = np.outer(dts, lam)
        c, s = np.cos(ph), np.sin(ph)
        # M^T = [[C, -S], [S, C]]
        x = (c * xq - s * pq) @ q.T
        p = (s * xq + c * pq) @ q.T
        out = np.hstack([x, p])
        return out[0] if np.ndim(dt) == 0 else out


def delay_symplectic(dt: float, omega_tilde) -> np.ndarray:
    """M(dt) by the general matrix exponential."""
    return exp_generator(delay_generator(dt, omega_tilde))


def lo_vector(lo: PulseSpectrumParams | Callable, basis: ModeBasis,
              efficiency: Callable | float | None = None,
              threshold: float | None = 1e-3) -> np.ndarray:
    """Phase-space vector of a local oscillator spectrum.

    Args:
        lo: Pulse parameters (its amplitude scales the spectrum) or a callable
            complex spectral amplitude alpha_LO(w).
        basis: Mode basis.
        efficiency: Detection efficiency eta(w), scalar or callable; 1 by default.
        threshold: Projection residual above which a warning is issued.

    Returns:
        (Re c, Im c) with c_i = int eta alpha_LO f_i dw.
    """
    if isinstance(lo, PulseSpectrumParams):
        def amp(w):
            return lo.amplitude * lo.spectrum(w)
    else:
        amp = lo
    if efficiency is None:
        eta = 1.0
    elif callable(efficiency):
        eta = efficiency(basis.nodes)
    else:
        eta = float(efficiency)
    eta_arr = np.broadcast_to(np.asarray(eta, dtype=float), basis.nodes.shape)
    if np.any(eta_arr < 0) or np.any(eta_arr > 1):
        raise ValueError("efficiency must lie in [0, 1]")
    vals = np.asarray(amp(basis.nodes)) * eta_arr
    # residual refers to the spectrum shape, independent of eta scaling
    coeffs, _ = basis.project(vals, threshold if np.all(eta_arr == eta_arr.flat[0]) else None)
    return np.concatenate([coeffs.real, coeffs.imag]).astype(float)


def transformed_lo(zeta_lo, dt: float, phi: float, propagator: DelayPropagator,
                   m_nl: np.ndarray | None = None) -> np.ndarray:
    """M^T(dt) M_NL^T R^T(phi) zeta_LO.

    Args:
        zeta_lo: Input local oscillator vector.
        dt: Delay in seconds.
        phi: Wave-plate phase.
        propagator: Free-propagation model of the basis.
        m_nl: Nonlinear symplectic matrix, None for homodyne detection.
    """
    zeta = np.asarray(zeta_lo, dtype=float)
    n = zeta.size // 2
    v = rotation(phi, n).T @ zeta
    if m_nl is not None:
        v = np.asarray(m_nl).T @ v
    return propagator.apply_transpose(dt, v)


class Detector:
    """Both detection arms of the correlation setup on a common mode basis.

    Args:
        basis: Mode basis.
        lo: Local-oscillator spectrum (after any filtering).
        g_nl: Generator of the detection crystal, None for homodyne detection.
        efficiency: Optional detection efficiency eta(w).
        normalize: Scale the input LO vector to unit norm.
        arm_phase: Reflection phase offsets of the vacuum port per arm.
    """

    def __init__(self, basis: ModeBasis, lo: PulseSpectrumParams | Callable,
                 g_nl: np.ndarray | None = None, efficiency=None, normalize: bool = True,
                 arm_phase: dict | None = None, threshold: float | None = 1e-3):
        self.basis = basis
        self.n = basis.n
        self.propagator = DelayPropagator(frequency_matrix(basis))
        zeta = lo_vector(lo, basis, efficiency, threshold)
        norm = np.linalg.norm(zeta)
        if norm == 0:
            raise ValueError("local oscillator has no overlap with the basis")
        self.zeta_lo = zeta / norm if normalize else zeta
        self.g_nl = None if g_nl is None else np.asarray(g_nl, dtype=float)
        self.arm_phase = dict(ARM_PHASE if arm_phase is None else arm_phase)
        self._m_nl = {}

    def nl_matrix(self, alpha: float):
        if alpha == 0:
            return None
        if self.g_nl is None:
            raise ValueError("nonzero probe amplitude needs a crystal generator")
        if alpha not in self._m_nl:
            self._m_nl[alpha] = exp_generator(alpha * self.g_nl)
        return self._m_nl[alpha]

    def lo(self, dt, phi: float = 0.0, alpha: float = 0.0) -> np.ndarray:
        """Transformed LO; ``dt`` may be an array, giving one row per delay."""
        v = rotation(phi, self.n).T @ self.zeta_lo
        m = self.nl_matrix(alpha)
        if m is not None:
            v = m.T @ v
        return self.propagator.apply_transpose(dt, v)
