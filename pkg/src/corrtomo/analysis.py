"""Entropy and correlation measures of detected two-mode Gaussian states.

Covariances are in the internal convention (vacuum I/2) with interleaved
ordering (x_a, p_a, x_b, p_b). The formulas below use the convention where
vacuum has symplectic eigenvalue 1; the conversion happens only in
:func:`_unit_eigenvalues` and :func:`_unit_cov`. Entropies are in bits.
"""

from __future__ import annotations

import numpy as np

from .symplectic import symplectic_eigenvalues

EIGENVALUE_TOL = 1e-9


def entropy_function(x):
    """s(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2), s(1) = 0."""
    x = np.asarray(x, dtype=float)
    hi = 0.5 * (x + 1.0)
    lo = 0.5 * (x - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_hi = np.where(hi > 0, hi * np.log2(np.where(hi > 0, hi, 1.0)), 0.0)
        t_lo = np.where(lo > 0, lo * np.log2(np.where(lo > 0, lo, 1.0)), 0.0)
    return t_hi - t_lo


def _unit_eigenvalues(cov, ordering: str = "xpxp", tol: float = EIGENVALUE_TOL):
    nu = 2.0 * symplectic_eigenvalues(cov, ordering)
    if np.any(nu < 1.0 - tol):
        raise ValueError(f"unphysical covariance: symplectic eigenvalue {nu.min() / 2:.6g} < 1/2")
    return np.maximum(nu, 1.0)


def _unit_cov(cov):
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (4, 4):
        raise ValueError("expected a 4 x 4 two-mode covariance")
    return cov + cov.T


def von_neumann_entropy(cov, ordering: str = "xpxp") -> float:
    """S = sum_i s(2 nu_i) in bits."""
    return float(np.sum(entropy_function(_unit_eigenvalues(cov, ordering))))


def partial_transpose(cov, modes_b=(1,)) -> np.ndarray:
    """Lambda Sigma Lambda with p flipped on the modes in ``modes_b`` (interleaved)."""
    cov = np.asarray(cov, dtype=float)
    lam = np.ones(cov.shape[0])
    for m in modes_b:
        lam[2 * m + 1] = -1.0
    return cov * np.outer(lam, lam)


def logarithmic_negativity(cov, modes_b=(1,)) -> float:
    """max(0, -log2 min nu~) of the partially transposed covariance."""
    nu = 2.0 * symplectic_eigenvalues(partial_transpose(cov, modes_b), "xpxp")
    return float(max(0.0, -np.log2(np.min(nu))))


def local_invariants(cov):
    """(A, B, C, D) = det alpha, det beta, det gamma, det sigma in vacuum-1 units."""
    s = _unit_cov(cov)
    return (float(np.linalg.det(s[:2, :2])), float(np.linalg.det(s[2:, 2:])),
            float(np.linalg.det(s[:2, 2:])), float(np.linalg.det(s)))


def _two_mode_eigenvalues(a, b, c, d):
    delta = a + b + 2.0 * c
    disc = max(delta * delta - 4.0 * d, 0.0)
    nu_m = np.sqrt(max(0.5 * (delta - np.sqrt(disc)), 0.0))
    nu_p = np.sqrt(0.5 * (delta + np.sqrt(disc)))
    return nu_m, nu_p


def _e_min(a, b, c, d):
    if (d - a * b) ** 2 <= (1.0 + b) * c * c * (a + d):
        q = c * c + (b - 1.0) * (d - a)
        return (2.0 * c * c + (b - 1.0) * (d - a) + 2.0 * abs(c) * np.sqrt(max(q, 0.0))) / (b - 1.0) ** 2
    rad = c ** 4 + (d - a * b) ** 2 - 2.0 * c * c * (a * b + d)
    # rationalised (X - sqrt(rad)) / 2B to avoid cancellation
    return 2.0 * a * d / (a * b - c * c + d + np.sqrt(max(rad, 0.0)))


def gaussian_discord(cov, measured: str = "b", tol: float = 1e-12) -> float:
    """Gaussian quantum discord with a Gaussian measurement on one mode.

    D = s(sqrt(B)) - s(nu_-) - s(nu_+) + s(sqrt(E_min)), using the local
    symplectic invariants of the two-mode covariance. ``measured`` selects
    the mode on which the measurement acts.
    """
    a, b, c, d = local_invariants(cov)
    if measured == "a":
        a, b = b, a
    elif measured != "b":
        raise ValueError("measured must be 'a' or 'b'")
    _unit_eigenvalues(cov)
    if b - 1.0 < tol:
        # a pure marginal cannot share correlations
        return 0.0
    nu_m, nu_p = _two_mode_eigenvalues(a, b, c, d)
    e_min = max(_e_min(a, b, c, d), 1.0)
    val = (entropy_function(np.sqrt(b)) - entropy_function(max(nu_m, 1.0))
           - entropy_function(max(nu_p, 1.0)) + entropy_function(np.sqrt(e_min)))
    if val < -1e-9:
        raise ArithmeticError(f"negative discord {val:.3e}")
    return float(max(val, 0.0))


def mutual_information(cov) -> float:
    """I = S(a) + S(b) - S(ab) in bits."""
    cov = np.asarray(cov, dtype=float)
    return (von_neumann_entropy(cov[:2, :2]) + von_neumann_entropy(cov[2:, 2:])
            - von_neumann_entropy(cov))


def two_mode_squeezed_cov(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum (x_a, p_a, x_b, p_b), vacuum I/2."""
    ch, sh = np.cosh(2.0 * r), np.sinh(2.0 * r)
    z = np.diag([1.0, -1.0])
    return 0.5 * np.block([[ch * np.eye(2), sh * z], [sh * z, ch * np.eye(2)]])


def thermal_mode_cov(n_mean: float) -> np.ndarray:
    """Single-mode thermal covariance (n + 1/2) I."""
    return (n_mean + 0.5) * np.eye(2)


__all__ = [
    "entropy_function", "von_neumann_entropy", "partial_transpose", "logarithmic_negativity",
    "local_invariants", "gaussian_discord", "mutual_information", "two_mode_squeezed_cov",
    "thermal_mode_cov",
]
