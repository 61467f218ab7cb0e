"""Forward model of the two-arm correlation measurement.

Each arm measures

    q_xi = zeta_LO(dt, alpha, phi)^T zeta + zeta_LO(dt, alpha, phi + dphi_xi)^T zeta_vac

where the first vector is the state part and the second the vacuum part
entering through the unused beam-splitter port. With dphi_a = -dphi_b =
pi/2 the vacuum parts of the two arms are anticorrelated, so the
cross-arm signal is zeta_a^T (Sigma - I/2) zeta_b.

Delays are in seconds in the numerical API and in femtoseconds in the
serialized datasets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .elements import Detector, rotation
from .states import GaussianState
from .symplectic import is_physical

FS = 1e-15
CSV_HEADER = ("dt_a_fs", "dt_b_fs", "phi_a", "phi_b", "g")
VACUUM_MODELS = ("rotated", "literal")


@dataclass(frozen=True)
class MeasurementSetting:
    """One wave-plate/delay setting of one arm."""

    delay: float
    phase: float = 0.0
    arm: str = "a"
    probe_amplitude: float = 0.0

    def __post_init__(self):
        if self.arm not in ("a", "b"):
            raise ValueError(f"arm must be 'a' or 'b', got {self.arm!r}")


@dataclass(frozen=True)
class MeasurementVectors:
    """State and vacuum-port coefficients of one measured quadrature."""

    state_part: np.ndarray
    vacuum_part: np.ndarray


def gamma_settings(delays, phases=(0.0, np.pi / 2)) -> list[tuple[float, float]]:
    """Setting list [(dt_0, phi_0), ..., (dt_{N-1}, phi_0), (dt_0, phi_1), ...]."""
    delays = np.asarray(delays, dtype=float).ravel()
    return [(float(dt), float(ph)) for ph in phases for dt in delays]


def _vacuum_rows(detector: Detector, state_rows, dts, phi, alpha, arm, vacuum):
    dphi = detector.arm_phase[arm]
    if vacuum == "rotated":
        return state_rows @ rotation(dphi, detector.n)
    if vacuum == "literal":
        return detector.lo(dts, phi + dphi, alpha)
    raise ValueError(f"vacuum model must be one of {VACUUM_MODELS}")


def measurement_vectors(detector: Detector, setting: MeasurementSetting,
                        vacuum: str = "rotated") -> MeasurementVectors:
    """Measurement vectors of one setting.

    Args:
        detector: Detection model of both arms.
        setting: Delay, phase, arm and probe amplitude.
        vacuum: ``"rotated"`` applies the port phase to the state part,
            R^T(dphi) zeta_LO(dt, alpha, phi); ``"literal"`` inserts it
            before the crystal, zeta_LO(dt, alpha, phi + dphi). Both agree
            for homodyne detection.
    """
    v = detector.lo(setting.delay, setting.phase, setting.probe_amplitude)
    w = _vacuum_rows(detector, v[None, :], setting.delay, setting.phase,
                     setting.probe_amplitude, setting.arm, vacuum)
    return MeasurementVectors(v, np.asarray(w).reshape(-1))


def measurement_rows(detector: Detector, settings, alpha: float = 0.0, arm: str = "a",
                     vacuum: str = "rotated") -> tuple[np.ndarray, np.ndarray]:
    """State and vacuum parts for a list of (dt, phi) settings, one row each."""
    settings = list(settings)
    n2 = 2 * detector.n
    v = np.empty((len(settings), n2))
    w = np.empty((len(settings), n2))
    dts = np.array([s[0] for s in settings], dtype=float)
    phis = np.array([s[1] for s in settings], dtype=float)
    for phi in np.unique(phis):
        idx = np.flatnonzero(phis == phi)
        rows = np.atleast_2d(detector.lo(dts[idx], phi, alpha))
        v[idx] = rows
        w[idx] = _vacuum_rows(detector, rows, dts[idx], phi, alpha, arm, vacuum)
    return v, w


def _check_dims(state: GaussianState, *vectors):
    for vec in vectors:
        if np.shape(vec)[-1] != state.cov.shape[0]:
            raise ValueError("state and measurement vectors live on different bases")


def correlation_signal(state: GaussianState, mv_a: MeasurementVectors, mv_b: MeasurementVectors,
                       vacuum_port: bool = True) -> float:
    """Correlation <q_a q_b> of two measured quadratures.

    Args:
        state: Input Gaussian state.
        mv_a, mv_b: Measurement vectors of the two arms.
        vacuum_port: Include the vacuum-port terms (cross-arm signal). When
            False the result is the plain sampled moment v_a^T Sigma v_b,
            which for v_a = v_b is the quadrature variance.
    """
    _check_dims(state, mv_a.state_part, mv_b.state_part)
    va, vb = mv_a.state_part, mv_b.state_part
    g = va @ state.cov @ vb + (va @ state.mean) * (vb @ state.mean)
    if vacuum_port:
        g += 0.5 * (mv_a.vacuum_part @ mv_b.vacuum_part)
    return float(g)


@dataclass
class CorrelationDataset:
    """Correlation records with optional matrix layout.

    Records are stored row-major: for a matrix dataset, record ``i * n_b + j``
    holds row setting ``i`` (arm a) and column setting ``j`` (arm b).
    """

    dt_a_fs: np.ndarray
    dt_b_fs: np.ndarray
    phi_a: np.ndarray
    phi_b: np.ndarray
    g: np.ndarray
    shape: tuple[int, int] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float).ravel()
                  for a in (self.dt_a_fs, self.dt_b_fs, self.phi_a, self.phi_b, self.g)]
        if len({a.size for a in arrays}) != 1:
            raise ValueError("record columns differ in length")
        self.dt_a_fs, self.dt_b_fs, self.phi_a, self.phi_b, self.g = arrays
        if self.shape is not None:
            self.shape = (int(self.shape[0]), int(self.shape[1]))
            if self.shape[0] * self.shape[1] != self.g.size:
                raise ValueError("shape does not match record count")

    @classmethod
    def from_matrix(cls, settings_a, settings_b, matrix, metadata=None) -> "CorrelationDataset":
        """Build from (dt [s], phi) setting lists and their correlation matrix."""
        sa = np.asarray(settings_a, dtype=float).reshape(-1, 2)
        sb = np.asarray(settings_b, dtype=float).reshape(-1, 2)
        m = np.asarray(matrix, dtype=float)
        if m.shape != (len(sa), len(sb)):
            raise ValueError("matrix shape does not match the settings")
        ia, ib = np.meshgrid(np.arange(len(sa)), np.arange(len(sb)), indexing="ij")
        ia, ib = ia.ravel(), ib.ravel()
        return cls(sa[ia, 0] / FS, sb[ib, 0] / FS, sa[ia, 1], sb[ib, 1], m.ravel(),
                   m.shape, dict(metadata or {}))

    @property
    def matrix(self) -> np.ndarray:
        if self.shape is None:
            raise ValueError("dataset has no matrix layout")
        return self.g.reshape(self.shape)

    def settings(self, arm: str) -> np.ndarray:
        """Distinct (dt [s], phi) settings of one arm in matrix order."""
        if self.shape is None:
            raise ValueError("dataset has no matrix layout")
        n_a, n_b = self.shape
        if arm == "a":
            idx = np.arange(n_a) * n_b
            return np.column_stack([self.dt_a_fs[idx] * FS, self.phi_a[idx]])
        idx = np.arange(n_b)
        return np.column_stack([self.dt_b_fs[idx] * FS, self.phi_b[idx]])

    def write(self, path) -> tuple[Path, Path]:
        """Write CSV records and a JSON sidecar; returns both paths."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for row in zip(self.dt_a_fs, self.dt_b_fs, self.phi_a, self.phi_b, self.g):
                writer.writerow([repr(float(x)) for x in row])
        side = path.with_suffix(".json")
        meta = {"shape": list(self.shape) if self.shape else None, "metadata": self.metadata}
        side.write_text(json.dumps(meta, indent=2, sort_keys=True))
        return path, side

    @classmethod
    def read(cls, path) -> "CorrelationDataset":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(h.strip() for h in next(reader))
            if header != CSV_HEADER:
                raise ValueError(f"unexpected CSV header {header}")
            rows = np.array([[float(x) for x in r] for r in reader], dtype=float).reshape(-1, 5)
        side = path.with_suffix(".json")
        shape, metadata = None, {}
        if side.exists():
            meta = json.loads(side.read_text())
            shape = tuple(meta["shape"]) if meta.get("shape") else None
            metadata = meta.get("metadata", {})
        return cls(*rows.T, shape=shape, metadata=metadata)


def signal_matrix(state: GaussianState, v_a, w_a, v_b, w_b, vacuum_port: bool = True):
    """Matrix of correlations between row vectors of arm a and arm b."""
    _check_dims(state, v_a, v_b)
    mu = state.mean
    g = v_a @ state.cov @ v_b.T + np.outer(v_a @ mu, v_b @ mu)
    if vacuum_port:
        g = g + 0.5 * (w_a @ w_b.T)
    return g


def sample_signal_matrix(state: GaussianState, v_a, w_a, v_b, w_b, samples: int,
                         rng: np.random.Generator, vacuum_port: bool = True):
    """Finite-sample estimate of :func:`signal_matrix`.

    Every (i, j) entry is the mean of ``samples`` products q_a q_b drawn from
    the exact bivariate normal of that setting pair.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    cov = state.cov
    mu_a, mu_b = v_a @ state.mean, v_b @ state.mean
    var_a = np.einsum("ij,jk,ik->i", v_a, cov, v_a)
    var_b = np.einsum("ij,jk,ik->i", v_b, cov, v_b)
    cross = v_a @ cov @ v_b.T
    if vacuum_port:
        var_a = var_a + 0.5 * np.sum(w_a * w_a, axis=1)
        var_b = var_b + 0.5 * np.sum(w_b * w_b, axis=1)
        cross = cross + 0.5 * (w_a @ w_b.T)
    out = np.empty_like(cross)
    for i in range(cross.shape[0]):
        sa = np.sqrt(var_a[i])
        c = cross[i] / sa
        cond = np.sqrt(np.clip(var_b - c * c, 0.0, None))
        z1 = rng.standard_normal((samples, 1))
        z2 = rng.standard_normal((samples, cross.shape[1]))
        qa = mu_a[i] + sa * z1
        qb = mu_b + c * z1 + cond * z2
        out[i] = np.mean(qa * qb, axis=0)
    return out


def correlation_matrix(state: GaussianState, detector: Detector, settings_a, settings_b=None,
                       alpha: float = 0.0, vacuum_port: bool = True, vacuum: str = "rotated",
                       samples: int | None = None, rng: np.random.Generator | None = None,
                       metadata: dict | None = None) -> CorrelationDataset:
    """Correlation matrix corr_ij = <q_a(Gamma_i) q_b(Gamma_j)>.

    Args:
        state: Input state.
        detector: Detection model.
        settings_a: (dt [s], phi) list for the rows.
        settings_b: Column settings; defaults to ``settings_a``.
        alpha: Probe amplitude shared by both arms.
        vacuum_port: Include the vacuum-port terms.
        vacuum: Vacuum-part model, see :func:`measurement_vectors`.
        samples: Finite number of draws per entry; None gives exact moments.
        rng: Random generator for finite sampling.
        metadata: Stored in the dataset sidecar.
    """
    settings_b = settings_a if settings_b is None else settings_b
    v_a, w_a = measurement_rows(detector, settings_a, alpha, "a", vacuum)
    v_b, w_b = measurement_rows(detector, settings_b, alpha, "b", vacuum)
    if samples is None:
        g = signal_matrix(state, v_a, w_a, v_b, w_b, vacuum_port)
    else:
        rng = np.random.default_rng() if rng is None else rng
        g = sample_signal_matrix(state, v_a, w_a, v_b, w_b, int(samples), rng, vacuum_port)
    meta = {"probe_amplitude": float(alpha), "vacuum_port": bool(vacuum_port),
            "samples": samples}
    meta.update(metadata or {})
    return CorrelationDataset.from_matrix(settings_a, settings_b, g, meta)


def correlation_map(state: GaussianState, detector: Detector, dts_a, dts_b, phi_a: float = 0.0,
                    phi_b: float = 0.0, alpha: float = 0.0, vacuum_port: bool = False,
                    vacuum: str = "rotated") -> np.ndarray:
    """g(dt_a, dt_b, phi_a, phi_b) on a delay grid, shape (len(dts_a), len(dts_b))."""
    v_a, w_a = measurement_rows(detector, [(t, phi_a) for t in np.ravel(dts_a)], alpha, "a", vacuum)
    v_b, w_b = measurement_rows(detector, [(t, phi_b) for t in np.ravel(dts_b)], alpha, "b", vacuum)
    return signal_matrix(state, v_a, w_a, v_b, w_b, vacuum_port)


def detected_state(state: GaussianState, detector: Detector, dt_a: float, dt_b: float,
                   alpha: float = 0.0, vacuum: str = "rotated", check: bool = True) -> np.ndarray:
    """Covariance of the four detected quadratures (x_a, p_a, x_b, p_b).

    The quadratures are q_a(dt_a, phi) and q_b(dt_b, phi) for phi in
    {0, pi/2}, each carrying the 1/sqrt(2) amplitude of the signal
    beam splitter, so vacuum input maps to I/2.

    Raises:
        ArithmeticError: The result is not a physical covariance.
    """
    settings = [(dt_a, 0.0), (dt_a, np.pi / 2)]
    v_a, w_a = measurement_rows(detector, settings, alpha, "a", vacuum)
    settings = [(dt_b, 0.0), (dt_b, np.pi / 2)]
    v_b, w_b = measurement_rows(detector, settings, alpha, "b", vacuum)
    v = np.vstack([v_a, v_b])
    w = np.vstack([w_a, w_b])
    _check_dims(state, v)
    cov = 0.5 * (v @ state.cov @ v.T + 0.5 * (w @ w.T))
    cov = 0.5 * (cov + cov.T)
    if check:
        if not is_physical(cov, 1e-9, ordering="xpxp"):
            raise ArithmeticError("detected covariance is not physical")
    return cov


__all__ = [
    "FS", "CSV_HEADER", "MeasurementSetting", "MeasurementVectors", "gamma_settings",
    "measurement_vectors", "measurement_rows", "correlation_signal", "CorrelationDataset",
    "signal_matrix", "sample_signal_matrix", "correlation_matrix", "correlation_map",
    "detected_state",
]
