"""Input quantum states on the discretized mode basis.

Covariances use the convention Sigma_vac = I/2. A symplectic map M acts on
a state as Sigma -> M^T Sigma M.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import constants, special

from .modes import ModeBasis, PulseSpectrumParams
from .symplectic import is_physical, symplectic_eigenvalues, symplectic_form


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state with mean vector and covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        mean = np.asarray(self.mean, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError("covariance must be a square matrix of even size")
        if mean.shape != (cov.shape[0],):
            raise ValueError("mean and covariance sizes differ")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @property
    def n(self) -> int:
        return self.cov.shape[0] // 2

    def is_physical(self, tol: float = 1e-9) -> bool:
        return is_physical(self.cov, tol)

    def evolve(self, m) -> "GaussianState":
        """State after the symplectic map ``m``: (M^T mu, M^T Sigma M)."""
        m = np.asarray(m, dtype=float)
        return GaussianState(m.T @ self.mean, m.T @ self.cov @ m)


def vacuum(n: int) -> GaussianState:
    """Vacuum on n modes: mu = 0, Sigma = I/2."""
    if n < 1:
        raise ValueError("need at least one mode")
    return GaussianState(np.zeros(2 * n), 0.5 * np.eye(2 * n))


def thermal_occupation(omega, temperature: float):
    """Bose-Einstein occupation 1 / (exp(hbar w / kT) - 1); zero at w = 0."""
    w = np.asarray(omega, dtype=float)
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    x = constants.hbar * w / (constants.k * temperature)
    with np.errstate(divide="ignore", over="ignore"):
        occ = np.where(w > 0, 1.0 / np.expm1(np.where(w > 0, x, 1.0)), 0.0)
    return occ


def occupation_matrix(basis: ModeBasis, temperature: float) -> np.ndarray:
    """N_ij = int n_th(w) f_i(w) f_j(w) dw."""
    occ = thermal_occupation(basis.nodes, temperature)
    fw = basis.table * (basis.weights * occ)
    return fw @ basis.table.T


def thermal_state(temperature: float, basis: ModeBasis, model: str = "single_mode",
                  tail_threshold: float = 1e-3) -> GaussianState:
    """Thermal radiation expressed on the basis.

    ``model="single_mode"`` puts the whole occupancy into one mode g0:
    Sigma = n (z_x z_x^T + z_p z_p^T) + I/2, with g0 the L2-normalized
    projection of n_th(w) onto the basis and n = tr(N) the total mean photon
    number the basis sees. ``model="multimode"`` returns Sigma = N_blk + I/2
    with the full occupation matrix on both quadratures.

    Args:
        temperature: Kelvin.
        basis: Mode basis.
        model: ``"single_mode"`` or ``"multimode"``.
        tail_threshold: Warn when the last four basis coefficients of g0
            carry more than this fraction of its norm.
    """
    n = basis.n
    if model == "multimode":
        occ = occupation_matrix(basis, temperature)
        zero = np.zeros((n, n))
        cov = np.block([[occ, zero], [zero, occ]]) + 0.5 * np.eye(2 * n)
        return GaussianState(np.zeros(2 * n), cov)
    if model != "single_mode":
        raise ValueError(f"unknown thermal model {model!r}")
    coeffs, _ = basis.project(thermal_occupation(basis.nodes, temperature), None)
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        return vacuum(n)
    g0 = coeffs / norm
    tail = float(np.sum(g0[-4:] ** 2))
    if tail > tail_threshold:
        warnings.warn(f"thermal occupancy not resolved by the basis: tail weight {tail:.2e}",
                      RuntimeWarning, stacklevel=2)
    n_th = float(np.trace(occupation_matrix(basis, temperature)))
    zx = np.concatenate([g0, np.zeros(n)])
    zp = np.concatenate([np.zeros(n), g0])
    cov = n_th * (np.outer(zx, zx) + np.outer(zp, zp)) + 0.5 * np.eye(2 * n)
    return GaussianState(np.zeros(2 * n), cov)


def multimode_squeezed_vacuum(m_gx) -> GaussianState:
    """Squeezed vacuum M^T Sigma_vac M of a squeezer symplectic M."""
    m = np.asarray(m_gx, dtype=float)
    return GaussianState(np.zeros(m.shape[0]), 0.5 * m.T @ m)


def single_mode_squeezed(sigma_x: float, sigma_p: float, zeta_x, zeta_p,
                         tol: float = 1e-9) -> GaussianState:
    """(s_x - 1/2) z_x z_x^T + (s_p - 1/2) z_p z_p^T + I/2.

    Raises:
        ValueError: negative variances, uncertainty violation or
            non-orthonormal mode vectors.
    """
    zx = np.asarray(zeta_x, dtype=float)
    zp = np.asarray(zeta_p, dtype=float)
    if sigma_x < 0 or sigma_p < 0:
        raise ValueError("variances must be nonnegative")
    if sigma_x * sigma_p < 0.25 - tol:
        raise ValueError("variances violate the uncertainty relation")
    gram = np.array([[zx @ zx, zx @ zp], [zp @ zx, zp @ zp]])
    if np.max(np.abs(gram - np.eye(2))) > 1e-8:
        raise ValueError("mode vectors must be orthonormal")
    cov = ((sigma_x - 0.5) * np.outer(zx, zx) + (sigma_p - 0.5) * np.outer(zp, zp)
           + 0.5 * np.eye(zx.size))
    return GaussianState(np.zeros(zx.size), cov)


def mode_quadratures(coeffs) -> tuple[np.ndarray, np.ndarray]:
    """Phase-space vectors (z_x, z_p) of a normalized complex mode c.

    With a_c = sum_i c_i^* a_i the mode quadratures are x_c = z_x . zeta and
    p_c = z_p . zeta, where z_x = (Re c, Im c) and z_p = (-Im c, Re c).
    """
    c = np.asarray(coeffs, dtype=complex)
    c = c / np.linalg.norm(c)
    zx = np.concatenate([c.real, c.imag])
    zp = np.concatenate([-c.imag, c.real])
    return zx, zp


@dataclass(frozen=True)
class FockStateSpec:
    """n-photon Fock state in a single temporal mode.

    Attributes:
        n: Photon number.
        zeta_x, zeta_p: Orthonormal phase-space vectors spanning the mode's plane.
        residual: Projection residual of the mode spectrum onto the basis.
    """

    n: int
    zeta_x: np.ndarray
    zeta_p: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("photon number must be a nonnegative integer")

    @classmethod
    def from_mode(cls, n: int, mode: PulseSpectrumParams, basis: ModeBasis,
                  threshold: float = 1e-3) -> "FockStateSpec":
        coeffs, residual = basis.project(mode.spectrum, threshold)
        zx, zp = mode_quadratures(coeffs)
        return cls(int(n), zx, zp, float(residual))

    @property
    def projector(self) -> np.ndarray:
        """Projector P_ph onto the Fock mode's phase-space plane."""
        return np.outer(self.zeta_x, self.zeta_x) + np.outer(self.zeta_p, self.zeta_p)

    def plane_coordinates(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        return zeta @ self.zeta_x, zeta @ self.zeta_p


def fock_wigner(spec: FockStateSpec, zeta) -> np.ndarray:
    """Multimode Wigner function (-1)^n L_n(2 |z_ph|^2) W_vac(z).

    Args:
        spec: Fock state.
        zeta: Phase-space point(s), shape (..., 2N).
    """
    zeta = np.asarray(zeta, dtype=float)
    n_modes = zeta.shape[-1] // 2
    x, p = spec.plane_coordinates(zeta)
    r2 = x * x + p * p
    w_vac = np.exp(-np.sum(zeta * zeta, axis=-1)) / np.pi ** n_modes
    return (-1) ** spec.n * special.eval_laguerre(spec.n, 2.0 * r2) * w_vac


def is_pure(state: GaussianState, tol: float = 1e-8) -> bool:
    """All symplectic eigenvalues equal 1/2."""
    return bool(np.all(np.abs(symplectic_eigenvalues(state.cov) - 0.5) < tol))


__all__ = [
    "GaussianState", "vacuum", "thermal_occupation", "occupation_matrix", "thermal_state",
    "multimode_squeezed_vacuum", "single_mode_squeezed", "mode_quadratures", "FockStateSpec",
    "fock_wigner", "is_pure",
]
