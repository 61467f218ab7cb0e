"""Subcycle Laguerre-Gauss mode basis and pulse spectra.

All frequencies are angular frequencies in rad/s. Spectra live on the
half line ``omega >= 0``. The fundamental mode is

    f0(w) = sqrt(2 / (sigma * Gamma(k + 1/2))) * (w/sigma)**k * exp(-w**2 / (2 sigma**2))

and higher modes multiply it by normalized generalized Laguerre
polynomials ``L_i^(k - 1/2)(w**2/sigma**2)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

TWO_PI = 2.0 * np.pi
THZ = 1e12
FWHM_FACTOR = 2.0 * np.sqrt(2.0 * np.log(2.0))


def thz_to_angular(nu_thz):
    """Convert a linear frequency in THz to angular frequency in rad/s."""
    return TWO_PI * THZ * np.asarray(nu_thz, dtype=float)


def angular_to_thz(omega):
    """Convert an angular frequency in rad/s to a linear frequency in THz."""
    return np.asarray(omega, dtype=float) / (TWO_PI * THZ)


@dataclass(frozen=True)
class ModeBasisParams:
    """Parameters of the mode basis.

    Args:
        sigma: Angular-frequency scale in rad/s.
        k: Cycle parameter.
        i_max: Number of basis functions kept.
    """

    sigma: float
    k: float
    i_max: int

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (np.isfinite(self.k) and self.k > 0):
            raise ValueError(f"k must be positive, got {self.k}")
        if int(self.i_max) != self.i_max or self.i_max < 1:
            raise ValueError(f"i_max must be a positive integer, got {self.i_max}")

    @classmethod
    def from_thz(cls, sigma_thz: float, k: float, i_max: int) -> "ModeBasisParams":
        return cls(float(thz_to_angular(sigma_thz)), float(k), int(i_max))


@dataclass(frozen=True)
class PulseSpectrumParams:
    """A normalized single-mode pulse spectrum of fundamental-mode shape.

    Args:
        sigma: Angular-frequency scale in rad/s.
        k: Cycle parameter.
        amplitude: Real coherent amplitude multiplying the normalized spectrum.
    """

    sigma: float
    k: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (np.isfinite(self.k) and self.k > 0):
            raise ValueError(f"k must be positive, got {self.k}")

    @classmethod
    def from_thz(cls, sigma_thz: float, k: float, amplitude: float = 1.0):
        return cls(float(thz_to_angular(sigma_thz)), float(k), float(amplitude))

    @classmethod
    def from_center_bandwidth_thz(cls, center_thz: float, bandwidth_thz: float,
                                  amplitude: float = 1.0):
        sigma, k = params_from_center_bandwidth(thz_to_angular(center_thz),
                                                thz_to_angular(bandwidth_thz))
        return cls(sigma, k, float(amplitude))

    def spectrum(self, omega):
        """Normalized spectral amplitude f(omega), zero for omega < 0."""
        return fundamental_mode(omega, self.sigma, self.k)

    def support_limit(self) -> float:
        return self.sigma * (np.sqrt(self.k) + 10.0)


def _log_norm(sigma, k):
    # log of sqrt(2 / (sigma * Gamma(k + 1/2)))
    return 0.5 * (np.log(2.0 / sigma) - special.gammaln(k + 0.5))


def fundamental_mode(omega, sigma: float, k: float):
    """Evaluate the L2-normalized fundamental mode f0 on ``omega``.

    Args:
        omega: Angular frequencies (rad/s). Negative values give zero.
        sigma: Angular-frequency scale.
        k: Cycle parameter.

    Returns:
        Array of the same shape as ``omega``.
    """
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("omega must be finite")
    x = np.where(w > 0, w / sigma, 1.0)
    logf = _log_norm(sigma, k) + k * np.log(x) - 0.5 * x * x
    return np.where(w > 0, np.exp(logf), 0.0)


def normalized_laguerre(n_max: int, alpha: float, x):
    """Normalized generalized Laguerre polynomials via the three-term recurrence.

    The returned rows satisfy
    ``int_0^inf x**alpha exp(-x) q_i q_j dx / Gamma(alpha + 1) = delta_ij``.

    Args:
        n_max: Number of polynomials (degrees 0..n_max-1).
        alpha: Laguerre parameter, > -1.
        x: Evaluation points.

    Returns:
        Array of shape (n_max, len(x)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    q = np.empty((n_max, x.size))
    q[0] = 1.0
    if n_max > 1:
        q[1] = (alpha + 1.0 - x) / np.sqrt(alpha + 1.0)
    for n in range(1, n_max - 1):
        q[n + 1] = ((2 * n + alpha + 1.0 - x) * q[n]
                    - np.sqrt(n * (n + alpha)) * q[n - 1]) / np.sqrt((n + 1) * (n + alpha + 1.0))
    return q


def mode_functions(omega, params: ModeBasisParams, n: int | None = None):
    """Evaluate basis functions f_0..f_{n-1} at ``omega``.

    Returns:
        Array of shape (n, len(omega)).
    """
    n = params.i_max if n is None else n
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    f0 = fundamental_mode(w, params.sigma, params.k)
    x = (w / params.sigma) ** 2
    return f0[None, :] * normalized_laguerre(n, params.k - 0.5, x)


def mode_function(params: ModeBasisParams, i: int, omega):
    """Evaluate a single basis function f_i at ``omega``."""
    if not 0 <= i < params.i_max:
        raise IndexError(f"mode index {i} outside [0, {params.i_max})")
    w = np.asarray(omega, dtype=float)
    return mode_functions(w.ravel(), params, i + 1)[i].reshape(w.shape)


def center_frequency(sigma: float, k: float) -> float:
    """Exact first moment of |f0|^2, sigma * Gamma(k+1) / Gamma(k+1/2)."""
    return sigma * np.exp(special.gammaln(k + 1.0) - special.gammaln(k + 0.5))


def bandwidth(sigma: float, k: float) -> float:
    """FWHM-equivalent bandwidth 2 sqrt(2 ln 2) times the spectral standard deviation."""
    ratio = np.exp(2.0 * (special.gammaln(k + 1.0) - special.gammaln(k + 0.5)))
    return FWHM_FACTOR * sigma * np.sqrt(k + 0.5 - ratio)


def center_and_bandwidth(params) -> tuple[float, float]:
    """Return (center, bandwidth) of the fundamental mode in rad/s."""
    return center_frequency(params.sigma, params.k), bandwidth(params.sigma, params.k)


def approximate_center_and_bandwidth(params) -> tuple[float, float]:
    """Large-k approximants sigma*sqrt(k + 1/pi) and sqrt(2 ln 2)*sigma."""
    return (params.sigma * np.sqrt(params.k + 1.0 / np.pi),
            np.sqrt(2.0 * np.log(2.0)) * params.sigma)


def params_from_center_bandwidth(center: float, width: float) -> tuple[float, float]:
    """Invert (center, bandwidth) to (sigma, k).

    The ratio center/bandwidth depends on k only and increases strictly, so
    k follows from a bracketed root search.
    """
    target = center / width

    def gap(logk):
        k = np.exp(logk)
        return center_frequency(1.0, k) / bandwidth(1.0, k) - target

    lo, hi = np.log(1e-6), np.log(1e4)
    if not gap(lo) < 0 < gap(hi):
        raise ValueError(f"center/bandwidth ratio {target:.4g} is not attainable")
    k = float(np.exp(optimize.brentq(gap, lo, hi, xtol=1e-14)))
    return center / center_frequency(1.0, k), k


def cycle_regime(k: float) -> str:
    """Classify a cycle parameter as subcycle, single-cycle or multicycle."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    if k <= 1:
        return "subcycle"
    if k <= 3:
        return "single-cycle"
    return "multicycle"


def time_domain_fundamental(t, params):
    """Fourier transform of f0 in closed form.

    Uses the convention f(t) = (2 pi)^(-1/2) int_0^inf f(w) exp(-i w t) dw,
    expressed with confluent hypergeometric functions.

    Args:
        t: Times in seconds.
        params: Anything with ``sigma`` and ``k`` attributes.

    Returns:
        Complex array shaped like ``t``.
    """
    t = np.asarray(t, dtype=float)
    sigma, k = params.sigma, params.k
    z = -0.5 * (sigma * t) ** 2
    even = special.hyp1f1(0.5 * (k + 1.0), 0.5, z)
    odd = special.hyp1f1(0.5 * k + 1.0, 1.5, z)
    if not (np.all(np.isfinite(even)) and np.all(np.isfinite(odd))):
        raise ArithmeticError("confluent hypergeometric evaluation did not converge")
    log_pref = _log_norm(sigma, k) + np.log(sigma) + 0.5 * (k - 1.0) * np.log(2.0)
    pref = np.exp(log_pref) / np.sqrt(TWO_PI)
    re = np.exp(special.gammaln(0.5 * (k + 1.0))) * even
    im = np.sqrt(2.0) * sigma * t * np.exp(special.gammaln(0.5 * k + 1.0)) * odd
    return pref * (re - 1j * im)


@dataclass
class Quadrature:
    """Composite Gauss-Legendre rule on [0, omega_max].

    The substitution omega = omega_max * u**2 removes the fractional power
    at the origin, so integrands behaving like omega**k stay smooth.
    """

    omega_max: float
    panels: int = 64
    order: int = 16
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x, w = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(0.0, 1.0, self.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wu = (half[:, None] * w[None, :]).ravel()
        self.nodes = self.omega_max * u * u
        self.weights = 2.0 * self.omega_max * u * wu

    def refined(self) -> "Quadrature":
        return Quadrature(self.omega_max, 2 * self.panels, self.order)

    def integrate(self, values, axis=-1):
        return np.tensordot(values, self.weights, axes=([axis], [0]))


def basis_cutoff(params: ModeBasisParams) -> float:
    """Frequency beyond which every kept basis function is negligible."""
    turning = 4.0 * params.i_max + 2.0 * params.k + 2.0
    return params.sigma * max(np.sqrt(turning) + 7.0, np.sqrt(params.k) + 10.0)


class ModeBasis:
    """A discretized mode basis with a quadrature grid for overlap integrals.

    Args:
        params: Basis parameters.
        omega_max: Upper integration limit. Defaults to a cutoff covering all
            kept basis functions.
        panels: Number of Gauss-Legendre panels.
        order: Nodes per panel.
    """

    def __init__(self, params: ModeBasisParams, omega_max: float | None = None,
                 panels: int = 64, order: int = 16):
        self.params = params
        self.omega_max = basis_cutoff(params) if omega_max is None else float(omega_max)
        self.quad = Quadrature(self.omega_max, panels, order)
        self._table = mode_functions(self.quad.nodes, params)

    @property
    def n(self) -> int:
        return self.params.i_max

    @property
    def nodes(self):
        return self.quad.nodes

    @property
    def weights(self):
        return self.quad.weights

    @property
    def table(self):
        """Basis functions tabulated on the quadrature nodes, shape (n, nodes)."""
        return self._table

    def __call__(self, omega):
        return mode_functions(omega, self.params)

    def gram(self):
        """Overlap matrix int f_i f_j dw on the quadrature grid."""
        fw = self._table * self.weights
        return fw @ self._table.T

    def project(self, spectrum: Callable | np.ndarray, threshold: float | None = 1e-3):
        """Project a spectral amplitude onto the basis.

        Args:
            spectrum: Callable of omega, or values on ``self.nodes``. May be complex.
            threshold: Residual above which a warning is issued; None disables it.

        Returns:
            (coefficients, residual) where residual = 1 - sum|c|^2 / ||spectrum||^2.
        """
        vals = spectrum(self.nodes) if callable(spectrum) else np.asarray(spectrum)
        vals = np.asarray(vals)
        coeffs = self._table @ (self.weights * vals)
        norm2 = float(np.sum(self.weights * np.abs(vals) ** 2))
        if norm2 == 0.0:
            return coeffs, 0.0
        residual = 1.0 - float(np.sum(np.abs(coeffs) ** 2)) / norm2
        if threshold is not None and residual > threshold:
            warnings.warn(f"spectrum projection residual {residual:.3e} exceeds {threshold:g}",
                          RuntimeWarning, stacklevel=2)
        return coeffs, residual

    def synthesize(self, coeffs, omega):
        """Spectral function sum_i c_i f_i(omega)."""
        return np.asarray(coeffs) @ mode_functions(omega, self.params)

    def time_waveform(self, coeffs, t):
        """Complex time-domain waveform of sum_i c_i f_i by quadrature."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        spec = np.asarray(coeffs) @ self._table
        phase = np.exp(-1j * np.outer(t, self.nodes))
        return phase @ (self.weights * spec) / np.sqrt(TWO_PI)


def project_spectrum(basis: ModeBasis, spectrum, threshold: float | None = 1e-3):
    """Functional form of :meth:`ModeBasis.project`."""
    return basis.project(spectrum, threshold)


def even_odd_time_modes(basis: ModeBasis, i: int, t):
    """Even and odd real waveforms of basis function ``i``.

    The spectrum is extended evenly (f(|w|)) and oddly (sign(w) f(|w|)) to
    negative frequencies, so that f_i(w) is half their sum. The even part
    transforms to a real waveform and the odd part to i times a real
    waveform; the complex pulse is f_i(t) = (even + 1j * odd) / 2.

    Returns:
        (even, odd) arrays shaped like ``t``.
    """
    if not 0 <= i < basis.n:
        raise IndexError(f"mode index {i} outside [0, {basis.n})")
    t = np.asarray(t, dtype=float)
    c = np.zeros(basis.n)
    c[i] = 1.0
    ft = basis.time_waveform(c, t.ravel()).reshape(t.shape)
    return 2.0 * ft.real, 2.0 * ft.imag
