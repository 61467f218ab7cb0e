"""Second-order nonlinear crystal: dispersion, coupling kernels and the EOS generator.

The crystal couples basis modes through a squeezing kernel S(W, w) and a
beam-splitter kernel B(W, w), both driven by a real probe pulse. Their
discretized matrices form the real generator G_NL whose exponential is the
symplectic map of the crystal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants

from .modes import ModeBasis, PulseSpectrumParams, center_frequency
from .symplectic import exp_generator, schur_block

HBAR = constants.hbar
C_LIGHT = constants.c
EPS0 = constants.epsilon_0


@dataclass(frozen=True)
class Sellmeier:
    """Single-pole Sellmeier model n^2 = a + b K / (K - gamma w^2), K = (2 pi c)^2."""

    a: float = 4.27
    b: float = 3.01
    gamma: float = 0.142e-12

    @property
    def pole(self) -> float:
        """Angular frequency of the resonance."""
        return 2.0 * np.pi * C_LIGHT / np.sqrt(self.gamma)

    def _check(self, omega):
        w = np.asarray(omega, dtype=float)
        if np.any(np.abs(w) >= self.pole):
            raise ValueError("frequency at or above the Sellmeier pole")
        return w

    def n(self, omega):
        w = self._check(omega)
        kk = (2.0 * np.pi * C_LIGHT) ** 2
        return np.sqrt(self.a + self.b * kk / (kk - self.gamma * w * w))

    def derivatives(self, omega):
        """Return (n, dn/dw, d2n/dw2) from the analytic Sellmeier form."""
        w = self._check(omega)
        kk = (2.0 * np.pi * C_LIGHT) ** 2
        den = kk - self.gamma * w * w
        n2 = self.a + self.b * kk / den
        d1 = 2.0 * self.b * kk * self.gamma * w / den ** 2
        d2 = 2.0 * self.b * kk * self.gamma * (kk + 3.0 * self.gamma * w * w) / den ** 3
        n = np.sqrt(n2)
        dn = d1 / (2.0 * n)
        ddn = (0.5 * d2 - dn * dn) / n
        return n, dn, ddn

    def wavenumber(self, omega):
        w = np.asarray(omega, dtype=float)
        return w * self.n(w) / C_LIGHT

    def group_index(self, omega):
        """d(w n)/dw."""
        n, dn, _ = self.derivatives(omega)
        return n + np.asarray(omega) * dn

    def dispersion(self, omega):
        """d^2(w n)/dw^2."""
        _, dn, ddn = self.derivatives(omega)
        return 2.0 * dn + np.asarray(omega) * ddn


@dataclass(frozen=True)
class CrystalConfig:
    """Geometry and material of the nonlinear crystal.

    Args:
        length: Crystal length L in m.
        profile: ``"rect"``, ``"gaussian_exp"`` or ``"cos_poled"``.
        beam_area: Beam cross section A in m^2.
        r41: Electro-optic coefficient in m/V.
        sellmeier: Dispersion model of the signal polarization.
        sellmeier_z: Optional dispersion model of the pump polarization.
        poling_period: Lambda in m for the cos-poled profile.
        phase_matching: ``"full"`` uses the Sellmeier wavevector mismatch,
            ``"engineered"`` the quadratic approximation of a birefringence
            matched crystal.
        validity_fraction: Kernels vanish where any frequency exceeds this
            fraction of the Sellmeier pole.
        beam_splitter_model: ``"difference"`` evaluates the beam-splitter
            kernel with the field factor and wavevector mismatch of the
            frequency-conversion process W -> w through a probe photon at
            |w - W|; ``"sum"`` reuses the sum-frequency factors of the
            squeezing kernel.
    """

    length: float = 20e-6
    profile: str = "rect"
    beam_area: float = np.pi * (3e-6) ** 2
    r41: float = 4e-12
    sellmeier: Sellmeier = Sellmeier()
    sellmeier_z: Sellmeier | None = None
    poling_period: float | None = None
    phase_matching: str = "full"
    validity_fraction: float = 0.9
    beam_splitter_model: str = "difference"

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("crystal length must be positive")
        if not self.beam_area > 0:
            raise ValueError("beam area must be positive")
        if self.profile not in ("rect", "gaussian_exp", "cos_poled"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.profile == "cos_poled" and not (self.poling_period and self.poling_period > 0):
            raise ValueError("cos_poled profile needs a positive poling period")
        if self.phase_matching not in ("full", "engineered"):
            raise ValueError(f"unknown phase matching {self.phase_matching!r}")
        if self.beam_splitter_model not in ("difference", "sum"):
            raise ValueError(f"unknown beam-splitter model {self.beam_splitter_model!r}")

    @property
    def pump_index(self) -> Sellmeier:
        return self.sellmeier_z or self.sellmeier

    @property
    def omega_valid(self) -> float:
        return self.validity_fraction * min(self.sellmeier.pole, self.pump_index.pole)

    def nonlinear_coefficient(self, pump_center: float) -> float:
        """d = -n^4(w_p) r41."""
        return -self.pump_index.n(pump_center) ** 4 * self.r41

    def coupling(self, pump_center: float) -> float:
        """lambda = A eps0 d / 2."""
        return self.beam_area * EPS0 * self.nonlinear_coefficient(pump_center) / 2.0


def crystal_profile_ft(k, config: CrystalConfig, coupling: float = 1.0):
    """Fourier transform of the longitudinal nonlinearity profile.

    Args:
        k: Wavevector mismatch in 1/m.
        config: Crystal configuration.
        coupling: The scalar coupling lambda multiplying the profile.

    Returns:
        lambda_hat(k), real for the supported symmetric profiles.
    """
    k = np.asarray(k, dtype=float)
    length = config.length

    def rect(q):
        return coupling * length / np.sqrt(2.0 * np.pi) * np.sinc(q * length / (2.0 * np.pi))

    if config.profile == "rect":
        return rect(k)
    if config.profile == "gaussian_exp":
        return coupling * length / np.sqrt(2.0 * np.pi) * np.exp(-np.abs(length * k / 2.0))
    g = 2.0 * np.pi / config.poling_period
    return 0.5 * (rect(k + g) + rect(k - g))


def phase_mismatch(big_omega, omega, config: CrystalConfig, pump_center: float | None = None):
    """Wavevector mismatch k(W + w) - k(W) - k(w).

    With ``phase_matching="engineered"`` the quadratic approximation
    -(1/4c) D(w_p/2) (w - W)^2 is returned instead.
    """
    big_omega = np.asarray(big_omega, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if config.phase_matching == "engineered":
        if pump_center is None:
            raise ValueError("engineered phase matching needs the pump center")
        d_half = config.sellmeier.dispersion(0.5 * pump_center)
        return -d_half * (omega - big_omega) ** 2 / (4.0 * C_LIGHT)
    kz = config.pump_index.wavenumber(big_omega + omega)
    return kz - config.sellmeier.wavenumber(big_omega) - config.sellmeier.wavenumber(omega)


def kernel_prefactor(config: CrystalConfig) -> float:
    """(2 pi)^(3/2) (hbar / (4 pi eps0 c A))^(3/2) / hbar."""
    field = HBAR / (4.0 * np.pi * EPS0 * C_LIGHT * config.beam_area)
    return (2.0 * np.pi) ** 1.5 * field ** 1.5 / HBAR


def conversion_mismatch(big_omega, omega, config: CrystalConfig, pump_center: float | None = None):
    """Wavevector mismatch k(max) - k(min) - k(|w - W|) of frequency conversion."""
    big_omega = np.asarray(big_omega, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if config.phase_matching == "engineered":
        return phase_mismatch(big_omega, omega, config, pump_center)
    hi = np.maximum(big_omega, omega)
    lo = np.minimum(big_omega, omega)
    k = config.sellmeier.wavenumber
    return k(hi) - k(lo) - config.pump_index.wavenumber(hi - lo)


def kernels(big_omega, omega, config: CrystalConfig, probe: PulseSpectrumParams):
    """Squeezing and beam-splitter kernels S(W, w) and B(W, w).

    The probe spectrum is the normalized f_alpha; the amplitude enters the
    exponent of the symplectic map, not the kernel. Points outside the
    dispersion model's validity range give zero.

    Returns:
        (S, B) arrays broadcast over the inputs. S is symmetric and B
        antisymmetric under W <-> w.
    """
    big_omega, omega = np.broadcast_arrays(np.asarray(big_omega, float), np.asarray(omega, float))
    if np.any(big_omega < 0) or np.any(omega < 0):
        raise ValueError("kernel frequencies must be nonnegative")
    w_valid = config.omega_valid
    pump_center = center_frequency(probe.sigma, probe.k)
    lam = config.coupling(pump_center)
    pref = kernel_prefactor(config)
    n_s, n_z = config.sellmeier.n, config.pump_index.n

    s = np.zeros(big_omega.shape)
    b = np.zeros(big_omega.shape)
    inside = (big_omega > 0) & (omega > 0) & (big_omega < w_valid) & (omega < w_valid)

    ok = inside & (big_omega + omega < w_valid)
    bw, sw = big_omega[ok], omega[ok]
    tw = bw + sw
    common = pref * np.sqrt(sw * bw / (n_s(sw) * n_s(bw))) * np.sqrt(tw / n_z(tw))
    profile = crystal_profile_ft(phase_mismatch(bw, sw, config, pump_center), config, lam)
    s[ok] = common * profile * probe.spectrum(tw)
    if config.beam_splitter_model == "sum":
        b[ok] = common * profile * (probe.spectrum(sw - bw) - probe.spectrum(bw - sw))
        return s, b

    ok = inside & (big_omega != omega)
    bw, sw = big_omega[ok], omega[ok]
    dw = np.abs(sw - bw)
    common = pref * np.sqrt(sw * bw / (n_s(sw) * n_s(bw))) * np.sqrt(dw / n_z(dw))
    profile = crystal_profile_ft(conversion_mismatch(bw, sw, config, pump_center), config, lam)
    b[ok] = common * profile * (probe.spectrum(sw - bw) - probe.spectrum(bw - sw))
    return s, b


@dataclass(frozen=True)
class NonlinearCouplings:
    """Discretized kernels S_ij and B_ij on a mode basis."""

    S: np.ndarray
    B: np.ndarray
    probe: PulseSpectrumParams
    converged: bool = True

    def generator(self) -> np.ndarray:
        return nl_generator(self)


def _kernel_grid(omega_max: float, panels: int, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, omega_max, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def discretize_couplings(basis: ModeBasis, config: CrystalConfig, probe: PulseSpectrumParams,
                         rtol: float = 1e-8, panels: int = 24, max_panels: int = 384):
    """Project the kernels onto the basis: S_ij = 2 int int S f_i f_j.

    A tensor Gauss-Legendre rule on [0, omega_valid] is refined by panel
    doubling until the matrices change by less than ``rtol`` relative to
    their largest entry.

    Returns:
        NonlinearCouplings.
    """
    w_max = config.omega_valid
    previous = None
    while True:
        nodes, weights = _kernel_grid(w_max, panels)
        f = basis(nodes) * weights
        s_k, b_k = kernels(nodes[:, None], nodes[None, :], config, probe)
        s_mat = 2.0 * f @ s_k @ f.T
        b_mat = 2.0 * f @ b_k @ f.T
        if previous is not None:
            scale = max(np.max(np.abs(s_mat)), np.max(np.abs(b_mat)), 1e-300)
            change = max(np.max(np.abs(s_mat - previous[0])),
                         np.max(np.abs(b_mat - previous[1]))) / scale
            if change < rtol:
                return NonlinearCouplings(s_mat, b_mat, probe, True)
            if 2 * panels > max_panels:
                warnings.warn(f"kernel quadrature not converged: relative change {change:.2e}",
                              RuntimeWarning, stacklevel=2)
                return NonlinearCouplings(s_mat, b_mat, probe, False)
        previous = (s_mat, b_mat)
        panels *= 2


def nl_generator(couplings: NonlinearCouplings) -> np.ndarray:
    """G_NL = [[-Re(S - B), Im(S - B)], [Im(S + B), Re(S + B)]]."""
    s = np.asarray(couplings.S, dtype=complex)
    b = np.asarray(couplings.B, dtype=complex)
    g = np.block([[-(s - b).real, (s - b).imag], [(s + b).imag, (s + b).real]])
    return g


def nl_symplectic(g_nl, alpha: float, check: bool = True) -> np.ndarray:
    """M_NL(alpha) = exp(alpha G_NL) for a real signed probe amplitude."""
    if alpha == 0:
        return np.eye(np.asarray(g_nl).shape[0])
    return exp_generator(alpha * np.asarray(g_nl), check=check)


def magnus_threshold(config: CrystalConfig, probe: PulseSpectrumParams) -> float:
    """Probe amplitude where the second-order Magnus prefactor matches the first.

    alpha_max = (1 / |lambda|) sqrt(4 pi eps0 c A / hbar).
    """
    lam = config.coupling(center_frequency(probe.sigma, probe.k))
    return float(np.sqrt(4.0 * np.pi * EPS0 * C_LIGHT * config.beam_area / HBAR) / abs(lam))


def check_magnus(alpha: float, config: CrystalConfig, probe: PulseSpectrumParams) -> bool:
    """Warn when |alpha| exceeds 1% of the Magnus threshold."""
    limit = magnus_threshold(config, probe)
    if abs(alpha) > 0.01 * limit:
        warnings.warn(f"probe amplitude {alpha:.3g} beyond 1% of the first-order validity "
                      f"estimate {limit:.3g}", RuntimeWarning, stacklevel=2)
        return False
    return True


# truncated two-mode Schur model

def truncated_generator(a: float, b: float, c: float) -> np.ndarray:
    """4 x 4 generator [[a,-b,0,0],[c,a,0,0],[0,0,-a,-c],[0,0,b,-a]] in (x1,x2,p1,p2)."""
    return np.array([[a, -b, 0.0, 0.0],
                     [c, a, 0.0, 0.0],
                     [0.0, 0.0, -a, -c],
                     [0.0, 0.0, b, -a]])


def truncated_transpose_closed_form(a: float, b: float, c: float, alpha: float) -> np.ndarray:
    """Closed form of exp(alpha T)^T for the truncated generator, bc > 0."""
    if not b * c > 0:
        raise ValueError("closed form requires bc > 0")
    root = np.sqrt(b * c)
    delta = alpha * root
    # b / root and c / root keep the sign of b and c, i.e. the rotation sense
    gb, gc = b / root, c / root
    cs, sn = np.cos(delta), np.sin(delta)
    grow, shrink = np.exp(alpha * a), np.exp(-alpha * a)
    return np.array([[grow * cs, grow * gc * sn, 0.0, 0.0],
                     [-grow * gb * sn, grow * cs, 0.0, 0.0],
                     [0.0, 0.0, shrink * cs, shrink * gb * sn],
                     [0.0, 0.0, -shrink * gc * sn, shrink * cs]])


@dataclass(frozen=True)
class SchurTruncation:
    """Leading Schur block of the x block of G_NL."""

    a: float
    b: float
    c: float
    modes: np.ndarray  # N x 2 orthonormal columns

    def lo_coordinates(self, lo):
        """(x1, x2, p1, p2) of a phase-space vector in the kept Schur modes."""
        lo = np.asarray(lo)
        n = lo.size // 2
        return np.concatenate([self.modes.T @ lo[:n], self.modes.T @ lo[n:]])


def leading_schur_block(g_nl) -> SchurTruncation:
    """Extract (a, b, c) of the first 2 x 2 Schur block of the x block."""
    o, t, kept = schur_block(g_nl, "x", n_keep=2)
    if t[1, 0] == 0.0:
        raise ArithmeticError("leading Schur eigenvalue is real; no 2 x 2 block")
    a = 0.5 * (t[0, 0] + t[1, 1])
    return SchurTruncation(float(a), float(-t[0, 1]), float(t[1, 0]), kept)


def optimize_probe_amplitude(lo_coords, trunc: SchurTruncation, quadrature: str = "p",
                             branch: int | None = None) -> float:
    """Probe amplitude making the two leading Schur components interfere.

    Args:
        lo_coords: (x1, x2, p1, p2) of the LO in the leading Schur modes.
        trunc: Leading Schur block.
        quadrature: ``"x"`` or ``"p"``.
        branch: Which solution of delta modulo pi: 0 for the principal value
            in [0, pi), 1 for the next one shifted by -pi. Defaults to 1 for
            the p quadrature and 0 for the x quadrature.

    Returns:
        alpha = delta / sqrt(bc).
    """
    x1, x2, p1, p2 = lo_coords
    b, c = trunc.b, trunc.c
    root = np.sqrt(b * c)
    if quadrature == "x":
        num, den = root * (x1 - x2), x1 * c + x2 * b
    elif quadrature == "p":
        num, den = root * (p1 + p2), p1 * c - p2 * b
    else:
        raise ValueError("quadrature must be 'x' or 'p'")
    if den == 0.0 and num == 0.0:
        raise ArithmeticError("LO is aligned with a degenerate direction")
    delta = np.mod(np.arctan(num / den), np.pi) if den != 0 else np.pi / 2
    if branch is None:
        branch = 1 if quadrature == "p" else 0
    if branch == 1:
        delta -= np.pi
    elif branch != 0:
        raise ValueError("branch must be 0 or 1")
    return float(delta / root)


# dispersion engineering

def qpm_coefficients(config: CrystalConfig, pump_center: float, poling_period: float | None):
    """Taylor coefficients (r_plus, r_minus, s, t, u) of the mismatch around w_p/2."""
    half = 0.5 * pump_center
    base = float(phase_mismatch(half, half, config))
    grating = 0.0 if poling_period is None else 2.0 * np.pi / poling_period
    nz, ns = config.pump_index, config.sellmeier
    s = (nz.group_index(pump_center) - ns.group_index(half)) / C_LIGHT
    t = (2.0 * nz.dispersion(pump_center) - ns.dispersion(half)) / (4.0 * C_LIGHT)
    u = ns.dispersion(half) / (4.0 * C_LIGHT)
    return base + grating, base - grating, float(s), float(t), float(u)


def qpm_curve(xi, config: CrystalConfig, pump_center: float, poling_period: float | None = None,
              sign: int = +1):
    """Quasi-phase-matching curve 2 upsilon(xi) in the (xi, upsilon) frame.

    Here xi = (w + W)/2 and upsilon = (w - W)/2. Returns the positive branch
    upsilon(xi) (NaN where the radicand is negative); the negative branch is
    its mirror image.

    Args:
        xi: Mean-frequency grid (rad/s).
        sign: +1 or -1 selects the grating order r_plus or r_minus.
    """
    r_plus, r_minus, s, t, u = qpm_coefficients(config, pump_center, poling_period)
    r = r_plus if sign > 0 else r_minus
    if not u > 0:
        raise ValueError("dispersion coefficient u must be positive")
    q = 2.0 * np.asarray(xi, dtype=float) - pump_center
    rad = r + s * q + t * q * q
    if np.all(rad < 0):
        raise ArithmeticError("no phase-matching solution on the grid")
    with np.errstate(invalid="ignore"):
        return 0.5 * np.sqrt(np.where(rad >= 0, rad, np.nan) / u)


def engineered_length(config: CrystalConfig, pump_sigma: float, pump_center: float) -> float:
    """Crystal length L = (c / sigma) |D(w_p/2)|^-1 for single-mode operation."""
    return C_LIGHT / (pump_sigma * abs(config.sellmeier.dispersion(0.5 * pump_center)))


def with_length(config: CrystalConfig, length: float) -> CrystalConfig:
    return replace(config, length=float(length))

