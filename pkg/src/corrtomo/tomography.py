"""State reconstruction from correlation data.

General Gaussian states are reconstructed on the subspace spanned by the
measured local-oscillator vectors:

    corr = Z^T (Sigma - I/2) Z,   Z = U S V^T
    P U^T Sigma U P = (V S^+)^T corr (V S^+) + P / 2

with singular values below a relative cutoff discarded. Single-mode
squeezed states can alternatively be recovered from time-local variances
alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .elements import Detector
from .measurement import CorrelationDataset, measurement_rows
from .modes import ModeBasis

DEFAULT_CUTOFF = 1e-3


def assemble_lo_matrix(detector: Detector, settings, alpha: float = 0.0) -> np.ndarray:
    """Z_LO with one column zeta_LO(dt, alpha, phi) per (dt, phi) setting."""
    v, _ = measurement_rows(detector, settings, alpha, "a")
    return v.T


@dataclass
class ReconstructionResult:
    """Outcome of the pseudoinverse reconstruction.

    Attributes:
        projected_cov: P U^T Sigma U P in the orthogonalized frame.
        U: Orthogonal map from the orthogonalized frame to the basis.
        P: Diagonal projector onto the retained directions.
        rank: Number of retained directions.
        singular_values: All singular values of Z_LO, descending.
        cutoff: Relative singular-value threshold.
    """

    projected_cov: np.ndarray
    U: np.ndarray
    P: np.ndarray
    rank: int
    singular_values: np.ndarray
    cutoff: float
    metadata: dict = field(default_factory=dict)

    @property
    def subspace_cov(self) -> np.ndarray:
        """Covariance on the retained directions, rank x rank."""
        return self.projected_cov[:self.rank, :self.rank]

    @property
    def modes(self) -> np.ndarray:
        """Retained phase-space directions (columns of U)."""
        return self.U[:, :self.rank]

    def completed_cov(self, frame: str = "basis") -> np.ndarray:
        """Reconstruction completed with vacuum outside the retained subspace.

        Args:
            frame: ``"basis"`` maps back with U, giving a covariance on the
                basis phase space with the standard symplectic form.
                ``"orthogonalized"`` stays in the U frame, where the
                symplectic form is U^T Omega U rather than Omega.
        """
        eye = np.eye(self.P.shape[0])
        cov = self.projected_cov + 0.5 * (eye - self.P)
        if frame == "orthogonalized":
            return cov
        if frame != "basis":
            raise ValueError("frame must be 'basis' or 'orthogonalized'")
        cov = self.U @ cov @ self.U.T
        return 0.5 * (cov + cov.T)

    def project_truth(self, cov) -> np.ndarray:
        """P U^T Sigma U P of a known covariance, for comparison."""
        return self.P @ self.U.T @ np.asarray(cov) @ self.U @ self.P

    def to_json(self, path, basis: ModeBasis | None = None) -> Path:
        """Write all matrices row-major with optional basis metadata."""
        data = {
            "rank": self.rank,
            "cutoff": self.cutoff,
            "singular_values": self.singular_values.tolist(),
            "projected_cov": self.projected_cov.tolist(),
            "U": self.U.tolist(),
            "P_diagonal": np.diag(self.P).tolist(),
            "metadata": self.metadata,
        }
        if basis is not None:
            p = basis.params
            data["basis"] = {"sigma_rad_s": p.sigma, "k": p.k, "i_max": p.i_max}
        path = Path(path)
        path.write_text(json.dumps(data, indent=2))
        return path

    @classmethod
    def from_json(cls, path) -> "ReconstructionResult":
        data = json.loads(Path(path).read_text())
        return cls(np.array(data["projected_cov"]), np.array(data["U"]),
                   np.diag(data["P_diagonal"]), int(data["rank"]),
                   np.array(data["singular_values"]), float(data["cutoff"]),
                   data.get("metadata", {}))


def reconstruct(corr, z_lo, cutoff: float = DEFAULT_CUTOFF,
                vacuum_term: str = "frame") -> ReconstructionResult:
    """Reconstruct the projected covariance from a correlation matrix.

    Args:
        corr: 2N x 2N correlation matrix or a CorrelationDataset with matrix layout.
        z_lo: 2i_max x 2N matrix of measurement vectors.
        cutoff: Singular values below ``cutoff`` times the largest are dropped.
        vacuum_term: ``"frame"`` adds P/2 in the orthogonalized frame (vacuum
            input then gives exactly P/2); ``"as_written"`` adds U P U^T / 2.

    Raises:
        ValueError: dimension mismatch or an all-zero Z_LO.
    """
    if isinstance(corr, CorrelationDataset):
        corr = corr.matrix
    corr = np.asarray(corr, dtype=float)
    z = np.asarray(z_lo, dtype=float)
    n2, m = z.shape
    if corr.shape != (m, m):
        raise ValueError(f"corr has shape {corr.shape}, expected {(m, m)}")
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    u, s, vt = np.linalg.svd(z, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("Z_LO is zero")
    keep = s > cutoff * s[0]
    rank = int(np.count_nonzero(keep))
    s_pinv = np.zeros((m, n2))
    s_pinv[np.arange(rank), np.arange(rank)] = 1.0 / s[:rank]
    vs = vt.T @ s_pinv
    proj = np.zeros(n2)
    proj[:rank] = 1.0
    p_mat = np.diag(proj)
    cov = vs.T @ (0.5 * (corr + corr.T)) @ vs
    if vacuum_term == "frame":
        cov = cov + 0.5 * p_mat
    elif vacuum_term == "as_written":
        cov = cov + 0.5 * u @ p_mat @ u.T
    else:
        raise ValueError("vacuum_term must be 'frame' or 'as_written'")
    cov = 0.5 * (cov + cov.T)
    return ReconstructionResult(cov, u, p_mat, rank, s, float(cutoff))


def reconstructed_mode_functions(result: ReconstructionResult, basis: ModeBasis,
                                 omega=None) -> np.ndarray:
    """Spectral mode functions of the retained directions.

    Column u = (u_x, u_p) of U is the x quadrature of the mode with
    coefficients c = u_x + i u_p. The real parts of the spectral overlaps of
    these modes form the identity.

    Returns:
        Complex coefficients, shape (rank, i_max), or the spectra on
        ``omega`` when given, shape (rank, len(omega)).
    """
    n = basis.n
    cols = result.modes
    coeffs = (cols[:n] + 1j * cols[n:]).T
    if omega is None:
        return coeffs
    return coeffs @ basis(np.asarray(omega, dtype=float))


def phase_alignment(g00: float, g11: float, g01: float) -> float:
    """LO phase offset diagonalizing the 2 x 2 quadrature covariance.

    Rotating both quadratures by theta with tan(2 theta) = 2 g01 / (g00 - g11)
    removes the cross covariance between q(0) and q(pi/2).
    """
    return 0.5 * float(np.arctan2(2.0 * g01, g00 - g11))


def _signed_roots(s, seed: int | None = None):
    """Signed square roots of a sampled nonnegative curve by continuity.

    The sign is + at ``seed`` (default the maximum) and each further sample
    takes the sign closer to the quadratic extrapolation of its predecessors.
    A final pass flips single samples whose flip reduces the local second
    difference, which fixes samples sitting right at a zero crossing.
    """
    mag = np.sqrt(np.clip(s, 0.0, None))
    n = mag.size
    out = np.zeros(n)
    i0 = int(np.argmax(mag)) if seed is None else int(seed)
    out[i0] = mag[i0]
    for step in (1, -1):
        prev = [i0]
        i = i0 + step
        while 0 <= i < n:
            if len(prev) >= 3:
                pred = 3.0 * out[prev[-1]] - 3.0 * out[prev[-2]] + out[prev[-3]]
            elif len(prev) == 2:
                pred = 2.0 * out[prev[-1]] - out[prev[-2]]
            else:
                pred = out[prev[-1]]
            out[i] = mag[i] if abs(mag[i] - pred) <= abs(-mag[i] - pred) else -mag[i]
            prev.append(i)
            i += step
    for _ in range(n):
        changed = False
        for i in range(1, n - 1):
            if i == i0:
                continue
            keep = abs(out[i - 1] - 2.0 * out[i] + out[i + 1])
            flip = abs(out[i - 1] + 2.0 * out[i] + out[i + 1])
            if flip < keep:
                out[i] = -out[i]
                changed = True
        if not changed:
            break
    return out


def _refine_projection(x_lo, s, v, rcond, iterations: int = 20):
    """Gauss-Newton fit of (x_lo v)^2 = s starting from ``v``."""
    scale = max(np.max(np.abs(s)), 1e-300)
    for _ in range(iterations):
        y = x_lo @ v
        res = y * y - s
        jac = 2.0 * y[:, None] * x_lo
        step = np.linalg.lstsq(jac, res, rcond=rcond)[0]
        v = v - step
        if np.max(np.abs(res)) < 1e-15 * scale or np.linalg.norm(step) < 1e-14 * np.linalg.norm(v):
            break
    return v


@dataclass
class SingleModeResult:
    """Recovered single-mode squeezed state."""

    sigma_x: float
    sigma_p: float
    zeta_x: np.ndarray
    zeta_p: np.ndarray
    ratio: float
    kappa: float
    phase_offset: float = 0.0

    def covariance(self) -> np.ndarray:
        zx, zp = self.zeta_x, self.zeta_p
        return ((self.sigma_x - 0.5) * np.outer(zx, zx) + (self.sigma_p - 0.5) * np.outer(zp, zp)
                + 0.5 * np.eye(zx.size))


def reconstruct_single_mode(g_x, g_p, x_lo, zero_index: int, rcond: float = 1e-10,
                            negative_tol: float = 1e-8, phase_offset: float = 0.0,
                            refine: bool = True) -> SingleModeResult:
    """Single-mode squeezed state from time-local variances.

    Args:
        g_x: g(dt_i, dt_i, 0, 0) on a delay grid (unit-norm LO).
        g_p: g(dt_i, dt_i, pi/2, pi/2) on the same grid.
        x_lo: Rows zeta_LO(dt_i, 0), shape (len(grid), 2 i_max).
        zero_index: Grid index of dt = 0 where the LO is phase aligned.
        rcond: Relative cutoff of the pseudoinverse of ``x_lo``.
        negative_tol: Tolerated negative radicand relative to its maximum.
        phase_offset: LO phase used for the data, stored with the result.
        refine: Polish the pseudoinverse estimate by Gauss-Newton on the
            squared overlaps. Square roots amplify rounding near zero
            crossings; the squared model does not.

    Raises:
        ArithmeticError: squeezing ratio near 1 (degenerate) or negative radicands.
    """
    gx = np.asarray(g_x, dtype=float) - 0.5
    gp = np.asarray(g_p, dtype=float) - 0.5
    x_lo = np.asarray(x_lo, dtype=float)
    if gp[zero_index] == 0.0:
        raise ArithmeticError("no signal at zero delay")
    r = gx[zero_index] / gp[zero_index]
    one_minus = 1.0 - r * r
    if abs(one_minus) < 1e-6:
        raise ArithmeticError("squeezing ratio is 1: the state is not squeezed")
    s_p = gx - r * gp
    s_x = gp - r * gx
    # both radicands carry the sign of kappa^2 = (1 - r^2)(sigma_p - 1/2)
    sign = 1.0 if s_p[np.argmax(np.abs(s_p))] >= 0 else -1.0
    s_p, s_x = sign * s_p, sign * s_x
    for s in (s_p, s_x):
        scale = max(np.max(np.abs(s)), 1e-300)
        if np.min(s) < -negative_tol * scale:
            raise ArithmeticError(f"negative radicand {np.min(s) / scale:.2e} (relative)")
    pinv = np.linalg.pinv(x_lo, rcond=rcond)
    proj_p = pinv @ _signed_roots(s_p)
    proj_x = pinv @ _signed_roots(s_x)
    if refine:
        proj_p = _refine_projection(x_lo, s_p, proj_p, rcond)
        proj_x = _refine_projection(x_lo, s_x, proj_x, rcond)
    kappa = float(np.linalg.norm(proj_p))
    if kappa == 0.0:
        raise ArithmeticError("vanishing projection")
    zeta_p = proj_p / kappa
    zeta_x = proj_x / np.linalg.norm(proj_x)
    kappa2 = sign * kappa * kappa
    sigma_p = 0.5 + kappa2 / one_minus
    sigma_x = 0.5 + r * (sigma_p - 0.5)
    return SingleModeResult(float(sigma_x), float(sigma_p), zeta_x, zeta_p, float(r), kappa,
                            float(phase_offset))


def time_local_signals(cov, detector: Detector, delays, phase_offset: float = 0.0):
    """Sampled time-local moments of a covariance on a delay grid.

    Returns:
        (g_x, g_p, g_xp, rows_x) where rows_x are zeta_LO(dt_i, phase_offset).
    """
    cov = np.asarray(cov)
    delays = np.asarray(delays, dtype=float)
    a = np.atleast_2d(detector.lo(delays, phase_offset))
    b = np.atleast_2d(detector.lo(delays, phase_offset + np.pi / 2))
    g_x = np.einsum("ij,jk,ik->i", a, cov, a)
    g_p = np.einsum("ij,jk,ik->i", b, cov, b)
    g_xp = np.einsum("ij,jk,ik->i", a, cov, b)
    return g_x, g_p, g_xp, a


def aligned_phase(cov, detector: Detector) -> float:
    """Global LO phase that removes the cross covariance at zero delay."""
    g_x, g_p, g_xp, _ = time_local_signals(cov, detector, [0.0])
    return phase_alignment(g_x[0], g_p[0], g_xp[0])


def single_mode_from_state(cov, detector: Detector, delays, rcond: float = 1e-10):
    """Run the time-local algorithm on simulated data of a covariance.

    The delay grid must contain 0. The LO phase is first aligned at zero delay.
    """
    delays = np.asarray(delays, dtype=float)
    zero = np.flatnonzero(delays == 0.0)
    if zero.size != 1:
        raise ValueError("delay grid must contain 0 exactly once")
    theta = aligned_phase(cov, detector)
    g_x, g_p, _, rows = time_local_signals(cov, detector, delays, theta)
    return reconstruct_single_mode(g_x, g_p, rows, int(zero[0]), rcond, phase_offset=theta)


__all__ = [
    "DEFAULT_CUTOFF", "assemble_lo_matrix", "ReconstructionResult", "reconstruct",
    "reconstructed_mode_functions", "phase_alignment", "SingleModeResult",
    "reconstruct_single_mode", "time_local_signals", "aligned_phase", "single_mode_from_state",
]
