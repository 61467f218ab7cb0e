"""Joint statistics of the (x_a, p_b) correlation measurement for Fock states.

Arm a measures x_a = q_a(dt_a, 0) and arm b measures p_b = q_b(dt_b, pi/2)
with homodyne detection. With y = (x_a, p_b), state rows A = [u; v] and
vacuum-port rows W = [w_a; w_b] the measurement kernel is the Gaussian

    K(y | zeta) = N(y; A zeta, C),   C = W W^T / 2,

which in terms of zeta reads exp(zeta_d(y)^T zeta - zeta^T Sigma_d^-1 zeta / 2)
with zeta_d(y) = A^T C^-1 y and Sigma_d^-1 = A^T C^-1 A. For an n-photon Fock
state in one temporal mode, all modes outside the Fock plane are integrated
out with a Schur complement and the remaining 2-D integral has a closed form
as a finite sum of generalized Laguerre polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special, stats

from .elements import Detector
from .measurement import MeasurementSetting, measurement_vectors
from .states import FockStateSpec

SIGMA_VAC_INV = 2.0


@dataclass(frozen=True)
class DetectionGeometry:
    """Kernel of one (dt_a, dt_b) setting.

    Attributes:
        u, v: State parts of the two measured quadratures.
        noise: 2 x 2 vacuum-port covariance C of (x_a, p_b).
        P_LO: zeta_LO(dt_a, pi/2) zeta_LO(dt_a, pi/2)^T + zeta_LO(dt_b, 0) zeta_LO(dt_b, 0)^T.
        zeta_d_map: 2N x 2 map y -> zeta_d.
        Sigma_d_inv: A^T C^-1 A.
        envelope_norm: |zeta_LO(dt_a, pi/2) - zeta_LO(dt_b, 0)|.
    """

    u: np.ndarray
    v: np.ndarray
    noise: np.ndarray
    P_LO: np.ndarray
    zeta_d_map: np.ndarray
    Sigma_d_inv: np.ndarray
    envelope_norm: float

    @property
    def rows(self) -> np.ndarray:
        return np.vstack([self.u, self.v])

    def kernel(self, y, zeta) -> np.ndarray:
        """K(y | zeta) for points y of shape (..., 2)."""
        mean = self.rows @ np.asarray(zeta, dtype=float)
        return stats.multivariate_normal(mean, self.noise).pdf(y)

    def outcome_cov(self, cov) -> np.ndarray:
        """Joint covariance A Sigma A^T + C of (x_a, p_b) for a Gaussian state."""
        a = self.rows
        return a @ np.asarray(cov, dtype=float) @ a.T + self.noise

    def gaussian_pdf(self, y, cov, mean=None) -> np.ndarray:
        """Joint normal density of (x_a, p_b) for a Gaussian state."""
        mu = np.zeros(2) if mean is None else self.rows @ np.asarray(mean, dtype=float)
        return stats.multivariate_normal(mu, self.outcome_cov(cov)).pdf(y)


def detection_geometry(dt_a: float, dt_b: float, detector: Detector,
                       vacuum: str = "rotated", tol: float = 1e-10) -> DetectionGeometry:
    """Kernel geometry of the homodyne (x_a, p_b) measurement.

    Args:
        dt_a, dt_b: Delays in seconds.
        detector: Detection model; only its homodyne path is used.
        vacuum: Vacuum-port model passed to the measurement vectors.
        tol: Relative threshold on det C below which the kernel is degenerate.

    Raises:
        ValueError: the two measurement vectors are parallel, so the kernel
            has no density in (x_a, p_b).
    """
    mv_a = measurement_vectors(detector, MeasurementSetting(dt_a, 0.0, "a"), vacuum)
    mv_b = measurement_vectors(detector, MeasurementSetting(dt_b, np.pi / 2, "b"), vacuum)
    u, v = mv_a.state_part, mv_b.state_part
    w = np.vstack([mv_a.vacuum_part, mv_b.vacuum_part])
    noise = 0.5 * w @ w.T
    scale = np.prod(np.diag(noise))
    if not np.linalg.det(noise) > tol * scale:
        raise ValueError("degenerate detection geometry: measurement vectors coincide")
    za = detector.lo(dt_a, np.pi / 2)
    zb = detector.lo(dt_b, 0.0)
    p_lo = np.outer(za, za) + np.outer(zb, zb)
    a = np.vstack([u, v])
    c_inv = np.linalg.inv(noise)
    d_map = a.T @ c_inv
    sd_inv = d_map @ a
    return DetectionGeometry(u, v, noise, p_lo, d_map, 0.5 * (sd_inv + sd_inv.T),
                             float(np.linalg.norm(za - zb)))


@dataclass(frozen=True)
class SchurStats:
    """Reduced Gaussian geometry on the Fock mode's phase-space plane.

    The density is p(y) = envelope(y) (-1)^n I_n(b(y)) with
    I_n(b) = int L_n(2|z|^2) exp(-z^T S z / 2 + b^T z) d^2z, where
    S = diag(sigma_x, sigma_p) in the (e_x, e_p) frame.

    Attributes:
        sigma_x, sigma_p: Eigenvalues of the Schur complement, sigma_x >= sigma_p.
        e_x, e_p: Principal directions as full phase-space vectors.
        zeta_dph_map: 2 x 2 map y -> (b . e_x, b . e_p).
        log_norm: Constant part of log envelope.
        envelope_quad: Q with envelope(y) = exp(log_norm - y^T Q y / 2).
    """

    sigma_x: float
    sigma_p: float
    e_x: np.ndarray
    e_p: np.ndarray
    zeta_dph_map: np.ndarray
    log_norm: float
    envelope_quad: np.ndarray

    def log_envelope(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.log_norm - 0.5 * np.einsum("...i,ij,...j->...", y, self.envelope_quad, y)

    def envelope(self, y) -> np.ndarray:
        return np.exp(self.log_envelope(y))

    def plane_drive(self, y) -> tuple[np.ndarray, np.ndarray]:
        """(b . e_x, b . e_p) for points y of shape (..., 2)."""
        b = np.asarray(y, dtype=float) @ self.zeta_dph_map.T
        return b[..., 0], b[..., 1]


def schur_stats(geometry: DetectionGeometry, spec: FockStateSpec,
                cond_limit: float = 1e12) -> SchurStats:
    """Marginalize all modes outside the Fock plane.

    H = Sigma_vac^-1 + Sigma_d^-1 is split into the Fock plane (basis
    zeta_x, zeta_p) and its orthogonal complement. The determinant of the
    complement block is taken on the complement subspace only.

    Raises:
        ArithmeticError: the complement block is ill-conditioned.
    """
    plane = np.column_stack([spec.zeta_x, spec.zeta_p])
    dim = plane.shape[0]
    if geometry.Sigma_d_inv.shape != (dim, dim):
        raise ValueError("Fock mode and detection geometry live on different bases")
    rest = linalg.null_space(plane.T)
    h = SIGMA_VAC_INV * np.eye(dim) + geometry.Sigma_d_inv
    h_pp = plane.T @ h @ plane
    h_pr = plane.T @ h @ rest
    h_rr = rest.T @ h @ rest
    cond = np.linalg.cond(h_rr)
    if not cond < cond_limit:
        raise ArithmeticError(f"complement block ill-conditioned (cond {cond:.2e})")
    chol = linalg.cho_factor(h_rr)
    s = h_pp - h_pr @ linalg.cho_solve(chol, h_pr.T)
    s = 0.5 * (s + s.T)
    evals, evecs = np.linalg.eigh(s)
    evals, evecs = evals[::-1], evecs[:, ::-1]

    d_ph = plane.T @ geometry.zeta_d_map
    d_r = rest.T @ geometry.zeta_d_map
    b_map = evecs.T @ (d_ph - h_pr @ linalg.cho_solve(chol, d_r))

    # envelope: N(y; 0, C) W_vac normalisation and the Gaussian integral over the complement
    noise = geometry.noise
    n_modes = dim // 2
    logdet_rr = 2.0 * np.sum(np.log(np.diag(chol[0])))
    log_norm = (-np.log(2.0 * np.pi) - 0.5 * np.log(np.linalg.det(noise))
                - n_modes * np.log(np.pi) + (n_modes - 1) * np.log(2.0 * np.pi)
                - 0.5 * logdet_rr)
    quad = np.linalg.inv(noise) - d_r.T @ linalg.cho_solve(chol, d_r)
    return SchurStats(float(evals[0]), float(evals[1]), plane @ evecs[:, 0],
                      plane @ evecs[:, 1], b_map, float(log_norm), 0.5 * (quad + quad.T))


def scaled_laguerre(n_max: int, eps, w, alpha: float = -0.5) -> np.ndarray:
    """T_i = eps^i L_i^(alpha)(w / eps) for i = 0..n_max.

    Uses the three-term recurrence multiplied through by eps, which stays
    finite as eps -> 0 where T_i -> (-w)^i / i!.
    """
    eps = np.asarray(eps, dtype=float)
    w = np.asarray(w, dtype=float)
    out = np.empty((n_max + 1,) + np.broadcast(eps, w).shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = (1.0 + alpha) * eps - w
    for i in range(1, n_max):
        out[i + 1] = (((2 * i + 1 + alpha) * eps - w) * out[i]
                      - (i + alpha) * eps * eps * out[i - 1]) / (i + 1)
    return out


def _plane_terms(n: int, sigma_x: float, sigma_p: float, bx, bp):
    """(log of the Gaussian factor, Laguerre sum) of :func:`plane_integral`."""
    bx = np.asarray(bx, dtype=float)
    bp = np.asarray(bp, dtype=float)
    tx = scaled_laguerre(n, 1.0 - 4.0 / sigma_x, 2.0 * bx * bx / sigma_x ** 2)
    tp = scaled_laguerre(n, 1.0 - 4.0 / sigma_p, 2.0 * bp * bp / sigma_p ** 2)
    total = sum(tx[i] * tp[n - i] for i in range(n + 1))
    log_gauss = (np.log(2.0 * np.pi) - 0.5 * np.log(sigma_x * sigma_p)
                 + 0.5 * bx * bx / sigma_x + 0.5 * bp * bp / sigma_p)
    return log_gauss, total


def plane_integral(n: int, sigma_x: float, sigma_p: float, bx, bp) -> np.ndarray:
    """int L_n(2(x^2 + p^2)) exp(-sx x^2/2 - sp p^2/2 + bx x + bp p) dx dp.

    Closed form sqrt(2pi/sx) sqrt(2pi/sp) exp(bx^2/2sx + bp^2/2sp)
    sum_i (1-4/sx)^i (1-4/sp)^(n-i) L_i^(-1/2)(2bx^2/(sx^2-4sx)) L_(n-i)^(-1/2)(...).
    """
    log_gauss, total = _plane_terms(n, sigma_x, sigma_p, bx, bp)
    return np.exp(log_gauss) * total


def fock_joint_pdf(x_a, p_b, stats_: SchurStats, n: int, negative_tol: float = 1e-9):
    """Joint density p(x_a, p_b) of an n-photon Fock state.

    Raises:
        ArithmeticError: the density is negative beyond ``negative_tol``
            relative to its largest value.
    """
    if int(n) != n or n < 0:
        raise ValueError("photon number must be a nonnegative integer")
    y = np.stack(np.broadcast_arrays(np.asarray(x_a, float), np.asarray(p_b, float)), axis=-1)
    bx, bp = stats_.plane_drive(y)
    log_gauss, total = _plane_terms(int(n), stats_.sigma_x, stats_.sigma_p, bx, bp)
    # combine the exponents first; separately they overflow for large sigma_x
    dens = (-1) ** n * np.exp(stats_.log_envelope(y) + log_gauss) * total
    peak = np.max(np.abs(dens)) if dens.size else 0.0
    if dens.size and np.min(dens) < -negative_tol * max(peak, 1.0):
        raise ArithmeticError(f"negative density {np.min(dens):.3e}; check conditioning")
    return np.maximum(dens, 0.0)


def plane_wigner_pdf(x_a, p_b, geometry: DetectionGeometry, spec: FockStateSpec,
                     order: int = 80) -> np.ndarray:
    """Same density by direct 2-D quadrature over the Fock plane.

    The complement modes are vacuum, so y | z ~ N(A_ph z, C + A_r A_r^T / 2)
    and p(y) = int W_n(z) N(y; A_ph z, C') d^2z with the single-mode Fock
    Wigner function W_n. Used as an independent check of the closed form.
    """
    plane = np.column_stack([spec.zeta_x, spec.zeta_p])
    a = geometry.rows
    a_ph = a @ plane
    a_r = a - a_ph @ plane.T
    c_eff = geometry.noise + 0.5 * a_r @ a_r.T
    # Gauss-Hermite in each plane coordinate absorbs the vacuum factor exp(-|z|^2)
    t, wt = np.polynomial.hermite.hermgauss(order)
    zx, zp = np.meshgrid(t, t, indexing="ij")
    weight = np.outer(wt, wt)
    wig = (-1) ** spec.n * special.eval_laguerre(spec.n, 2.0 * (zx ** 2 + zp ** 2)) / np.pi
    means = np.stack([zx, zp], axis=-1) @ a_ph.T
    y = np.stack(np.broadcast_arrays(np.asarray(x_a, float), np.asarray(p_b, float)), axis=-1)
    c_inv = np.linalg.inv(c_eff)
    norm = 1.0 / (2.0 * np.pi * np.sqrt(np.linalg.det(c_eff)))
    diff = y[..., None, None, :] - means
    expo = np.exp(-0.5 * np.einsum("...i,ij,...j->...", diff, c_inv, diff))
    return norm * np.sum(weight * wig * expo, axis=(-2, -1))


def binomial_weights(n: int, p: float) -> np.ndarray:
    """bin(k; p, n) for k = 0..n."""
    return stats.binom.pmf(np.arange(n + 1), n, p)


def overlap_from_sigma(sigma: float) -> float:
    """Mode overlap p with sigma = 4 / (2 - p): 1 at sigma=4, 0 at sigma=2."""
    return 2.0 - 4.0 / sigma


def binomial_mixture_check(stats_: SchurStats, n: int, tol: float = 1e-6) -> np.ndarray:
    """Photon-number distribution seen by a time-local measurement.

    With sigma_x = sigma_p = sigma the measurement sees the Fock state
    through a loss channel of transmission p = 2 - 4/sigma.

    Raises:
        ValueError: sigma_x and sigma_p differ by more than ``tol``.
    """
    if abs(stats_.sigma_x - stats_.sigma_p) > tol * max(stats_.sigma_x, 1.0):
        raise ValueError(f"sigma mismatch {stats_.sigma_x:.6g} vs {stats_.sigma_p:.6g}")
    sigma = 0.5 * (stats_.sigma_x + stats_.sigma_p)
    p = float(np.clip(overlap_from_sigma(sigma), 0.0, 1.0))
    return binomial_weights(n, p)


def husimi_mixture_pdf(x_a, p_b, geometry: DetectionGeometry, weights) -> np.ndarray:
    """sum_k w_k Q_k for a time-local measurement with orthogonal, equal-norm rows.

    Q_k(y) = (r^2/2s)^k / k! exp(-r^2/2s) / (2 pi s) with s = |u|^2 is the
    heterodyne density of a k-photon state in the LO mode.
    """
    s = float(geometry.u @ geometry.u)
    if abs(geometry.u @ geometry.v) > 1e-9 * s or abs(geometry.v @ geometry.v - s) > 1e-9 * s:
        raise ValueError("time-local form needs orthogonal rows of equal norm")
    x_a, p_b = np.broadcast_arrays(np.asarray(x_a, float), np.asarray(p_b, float))
    h = 0.5 * (x_a ** 2 + p_b ** 2) / s
    ks = np.arange(len(weights))
    terms = np.exp(ks[:, None] * np.log(np.maximum(h.ravel(), 1e-300))[None, :]
                   - special.gammaln(ks + 1)[:, None] - h.ravel()[None, :])
    out = np.asarray(weights) @ terms / (2.0 * np.pi * s)
    return out.reshape(h.shape)


def hermite_integral(n: int, sigma_x: float, bx, order: int = 64, envelope=0.0) -> np.ndarray:
    """exp(envelope) sqrt(pi) / (2^n n!) int H_n(x)^2 exp(-sigma_x x^2 / 2 + bx x) dx.

    ``envelope`` is a log-domain prefactor folded into the exponent.
    """
    bx = np.asarray(bx, dtype=float)
    a = 0.5 * sigma_x
    t, wt = np.polynomial.hermite.hermgauss(order)
    shift = bx[..., None] / (2.0 * a)
    x = shift + t / np.sqrt(a)
    h = special.eval_hermite(n, x)
    val = np.sum(wt * h * h, axis=-1) / np.sqrt(a) * np.exp(bx * bx / (4.0 * a) + envelope)
    return np.sqrt(np.pi) / (2.0 ** n * special.factorial(n)) * val


def hermite_limit_check(stats_: SchurStats, n: int, t, tol: float = 1e-8):
    """Density along the line b . e_p = 0 when sigma_p = 2.

    With sigma_p = 2 and b_p = 0 the p-integral of the Fock Wigner function
    gives the squared Hermite quadrature distribution, so

        p(y) = envelope(y) sqrt(pi)/(2^n n!) int H_n(x)^2 exp(-sx x^2/2 + bx x) dx.

    Args:
        t: Coordinates along the slice; y = t * d with d the unit direction
            in (x_a, p_b) on which b . e_p vanishes.

    Returns:
        (y, closed_form, hermite_form) with y of shape (len(t), 2).

    Raises:
        ValueError: sigma_p is not 2 within ``tol`` or the slice is undefined.
    """
    if abs(stats_.sigma_p - 2.0) > tol:
        raise ValueError(f"sigma_p = {stats_.sigma_p:.10g} is not at the vacuum floor")
    row = stats_.zeta_dph_map[1]
    if np.linalg.norm(row) == 0:
        # b . e_p vanishes everywhere; take the direction of steepest b . e_x
        d = stats_.zeta_dph_map[0]
    else:
        d = np.array([-row[1], row[0]])
    if np.linalg.norm(d) == 0:
        raise ValueError("slice undefined: degenerate e_p")
    d = d / np.linalg.norm(d)
    t = np.asarray(t, dtype=float)
    y = t[:, None] * d[None, :]
    closed = fock_joint_pdf(y[:, 0], y[:, 1], stats_, n)
    bx, _ = stats_.plane_drive(y)
    herm = hermite_integral(n, stats_.sigma_x, bx, envelope=stats_.log_envelope(y))
    return y, closed, herm


def sigma_trace(detector: Detector, spec: FockStateSpec, dt_a: float, dts_b) -> np.ndarray:
    """(sigma_x, sigma_p) for each dt_b at fixed dt_a, shape (len(dts_b), 2)."""
    out = []
    for dt_b in np.asarray(dts_b, dtype=float):
        st = schur_stats(detection_geometry(dt_a, dt_b, detector), spec)
        out.append((st.sigma_x, st.sigma_p))
    return np.array(out)


def pdf_grid(stats_: SchurStats, geometry: DetectionGeometry, n: int, points: int = 201,
             extent: float | None = None):
    """Density on a square (x_a, p_b) grid.

    The default half-width is :func:`_half_width`.

    Returns:
        (x, p, density) with density[i, j] at (x[i], p[j]).
    """
    if extent is None:
        extent = _half_width(geometry, n)
    x = np.linspace(-extent, extent, points)
    xx, pp = np.meshgrid(x, x, indexing="ij")
    return x, x, fock_joint_pdf(xx, pp, stats_, n)


def _half_width(geometry: DetectionGeometry, n: int) -> float:
    """max(8, 6 sqrt(2n + 1)) standard deviations of the vacuum outcome distribution.

    Six deviations alone leave about 1e-8 of a 2-D Gaussian outside the box.
    """
    std = np.sqrt(np.max(np.diag(geometry.outcome_cov(0.5 * np.eye(geometry.u.size)))))
    return float(std * max(8.0, 6.0 * np.sqrt(2 * n + 1)))


def normalization(stats_: SchurStats, geometry: DetectionGeometry, n: int,
                  order: int = 160) -> float:
    """int int p dx_a dp_b by tensor Gauss-Legendre quadrature on a square box."""
    half = _half_width(geometry, n)
    t, w = np.polynomial.legendre.leggauss(order)
    x = half * t
    xx, pp = np.meshgrid(x, x, indexing="ij")
    dens = fock_joint_pdf(xx, pp, stats_, n)
    return float(half * half * w @ dens @ w)


__all__ = [
    "DetectionGeometry", "detection_geometry", "SchurStats", "schur_stats", "scaled_laguerre",
    "plane_integral", "fock_joint_pdf", "plane_wigner_pdf", "binomial_weights",
    "overlap_from_sigma", "binomial_mixture_check", "husimi_mixture_pdf", "hermite_integral",
    "hermite_limit_check", "sigma_trace", "pdf_grid", "normalization",
]
