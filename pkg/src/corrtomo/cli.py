"""Command-line runner: correlation scans, reconstruction, Fock panels and analysis.

Usage:
    corrtomo scan --config exp.yaml --out out/ [--threads 4] [--seed 7]
    corrtomo reconstruct | fock | analyze | validate-config --config exp.yaml

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, fockstats, tomography
from .config import (ConfigError, build_basis, build_detector, build_fock, build_state,
                     delay_grid, dump_config, load_config)
from .measurement import (FS, CorrelationDataset, correlation_matrix, detected_state,
                          gamma_settings, measurement_rows, sample_signal_matrix, signal_matrix)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
log = logging.getLogger("corrtomo")


def _map(func, items, threads: int):
    """Ordered map over ``items`` with a bounded thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True))


def _color(t: float) -> str:
    """Diverging blue-white-red colour for t in [-1, 1]."""
    t = float(np.clip(t, -1.0, 1.0))
    if t >= 0:
        r, g, b = 255, int(255 * (1 - t)), int(255 * (1 - t))
    else:
        r, g, b = int(255 * (1 + t)), int(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def write_svg_heatmap(path: Path, matrix, title: str = "", cell: int = 6) -> Path:
    """Self-contained SVG heat map, rows top to bottom, symmetric colour scale."""
    m = np.asarray(matrix, dtype=float)
    centred = m - np.median(m)
    scale = np.max(np.abs(centred)) or 1.0
    rows, cols = m.shape
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{cols * cell}" '
             f'height="{rows * cell + 20}">', f'<text x="2" y="14" font-size="12">{title}</text>']
    for i in range(rows):
        for j in range(cols):
            parts.append(f'<rect x="{j * cell}" y="{20 + i * cell}" width="{cell}" '
                         f'height="{cell}" fill="{_color(centred[i, j] / scale)}"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts))
    return path


def run_correlation_scan(cfg: dict, out: Path, threads: int = 1, seed: int | None = None):
    """g(dt_a, dt_b) on the scan grid; CSV + JSON sidecar (+ SVG)."""
    basis = build_basis(cfg)
    det, alpha = build_detector(cfg, basis)
    state = build_state(cfg, basis)
    sc = cfg["scan"]
    dts = delay_grid(sc)
    vac = cfg["detection"]["vacuum_model"]
    sa = [(t, sc["phi_a_rad"]) for t in dts]
    sb = [(t, sc["phi_b_rad"]) for t in dts]
    v_a, w_a = measurement_rows(det, sa, alpha, "a", vac)
    v_b, w_b = measurement_rows(det, sb, alpha, "b", vac)
    if sc["samples"] is None:
        def row(i):
            return signal_matrix(state, v_a[i:i + 1], w_a[i:i + 1], v_b, w_b, sc["vacuum_port"])[0]
    else:
        # one child stream per row keeps sampled output independent of the thread count
        streams = np.random.SeedSequence(seed).spawn(len(dts))

        def row(i):
            rng = np.random.default_rng(streams[i])
            return sample_signal_matrix(state, v_a[i:i + 1], w_a[i:i + 1], v_b, w_b,
                                        sc["samples"], rng, sc["vacuum_port"])[0]
    log.info("scan: %d x %d delays", len(dts), len(dts))
    g = np.array(_map(row, range(len(dts)), threads))
    meta = {"state": cfg["state"]["kind"], "probe_amplitude": alpha,
            "vacuum_port": sc["vacuum_port"], "samples": sc["samples"], "seed": seed}
    ds = CorrelationDataset.from_matrix(sa, sb, g, meta)
    paths = list(ds.write(out / "scan.csv"))
    if cfg["outputs"]["svg"]:
        paths.append(write_svg_heatmap(out / "scan.svg", g, "g(dt_a, dt_b)"))
    return paths


def run_reconstruction(cfg: dict, out: Path, threads: int = 1, seed: int | None = None):
    """Reconstruction JSON, mode coefficients, rank sweep and round-trip report."""
    if cfg["state"]["kind"] == "fock":
        raise ConfigError("reconstruction needs a Gaussian state")
    basis = build_basis(cfg)
    det, alpha = build_detector(cfg, basis)
    state = build_state(cfg, basis)
    rc = cfg["reconstruction"]
    vac = cfg["detection"]["vacuum_model"]
    samples = cfg["scan"]["samples"]

    def solve(n_delays, rng=None):
        dts = np.linspace(-rc["delay_window_fs"], rc["delay_window_fs"], n_delays) * FS
        settings = gamma_settings(dts)
        z = tomography.assemble_lo_matrix(det, settings, alpha)
        ds = correlation_matrix(state, det, settings, alpha=alpha, vacuum_port=True,
                                vacuum=vac, samples=samples, rng=rng)
        return ds, tomography.reconstruct(ds, z, rc["cutoff"])

    rng = None if samples is None else np.random.default_rng(seed)
    ds, res = solve(rc["delays"], rng)
    res.metadata.update({"delays": rc["delays"], "delay_window_fs": rc["delay_window_fs"],
                         "state": cfg["state"]["kind"], "probe_amplitude": alpha})
    paths = list(ds.write(out / "correlations.csv"))
    paths.append(res.to_json(out / "reconstruction.json", basis))
    coeffs = tomography.reconstructed_mode_functions(res, basis)
    rows = [(k, i, float(c.real), float(c.imag)) for k in range(coeffs.shape[0])
            for i, c in enumerate(coeffs[k])]
    _write_rows(out / "mode_coefficients.csv", ("mode", "basis_index", "re", "im"), rows)
    paths.append(out / "mode_coefficients.csv")

    def sweep(n):
        sweep_rng = None if samples is None else np.random.default_rng([seed or 0, n])
        return n, solve(n, sweep_rng)[1].rank
    ranks = _map(sweep, rc["n_sweep"], threads)
    _write_rows(out / "rank_sweep.csv", ("delays", "rank"), ranks)
    paths.append(out / "rank_sweep.csv")
    err = float(np.max(np.abs(res.projected_cov - res.project_truth(state.cov))))
    _write_json(out / "residual.json", {"max_abs_error": err, "rank": res.rank})
    paths.append(out / "residual.json")
    log.info("reconstruct: rank %d, max abs error %.3e", res.rank, err)
    return paths


def run_fock_panels(cfg: dict, out: Path, threads: int = 1, seed: int | None = None):
    """Joint pdf grids per dt_b and the sigma_q(dt_b) trace."""
    if cfg["state"]["kind"] != "fock":
        raise ConfigError("the fock verb needs state.kind = fock")
    basis = build_basis(cfg)
    det, _ = build_detector(cfg, basis)
    spec = build_fock(cfg, basis)
    fc = cfg["fock"]
    dt_a = fc["dt_a_fs"] * FS

    def panel(dt_b_fs):
        geo = fockstats.detection_geometry(dt_a, dt_b_fs * FS, det)
        st = fockstats.schur_stats(geo, spec)
        x, p, dens = fockstats.pdf_grid(st, geo, spec.n, fc["grid_points"])
        return dt_b_fs, st, x, p, dens

    paths = []
    for k, (dt_b_fs, st, x, p, dens) in enumerate(_map(panel, fc["dt_b_fs"], threads)):
        xx, pp = np.meshgrid(x, p, indexing="ij")
        path = out / f"fock_panel_{k}.csv"
        _write_rows(path, ("x_a", "p_b", "density"),
                    zip(xx.ravel(), pp.ravel(), dens.ravel()))
        _write_json(path.with_suffix(".json"),
                    {"dt_a_fs": fc["dt_a_fs"], "dt_b_fs": dt_b_fs, "n": spec.n,
                     "sigma_x": st.sigma_x, "sigma_p": st.sigma_p})
        paths += [path, path.with_suffix(".json")]
        if cfg["outputs"]["svg"]:
            paths.append(write_svg_heatmap(out / f"fock_panel_{k}.svg", dens,
                                           f"n={spec.n} dt_b={dt_b_fs} fs", cell=3))
    dts_fs = np.arange(fc["trace_min_fs"], fc["trace_max_fs"] + 0.5 * fc["trace_step_fs"],
                       fc["trace_step_fs"])
    chunks = np.array_split(dts_fs, max(1, threads))
    traces = _map(lambda c: fockstats.sigma_trace(det, spec, dt_a, c * FS), chunks, threads)
    trace = np.vstack([t for t in traces if len(t)])
    _write_rows(out / "sigma_trace.csv", ("dt_b_fs", "sigma_x", "sigma_p"),
                zip(dts_fs, trace[:, 0], trace[:, 1]))
    paths.append(out / "sigma_trace.csv")
    return paths


def run_analysis(cfg: dict, out: Path, threads: int = 1, seed: int | None = None):
    """Entropy, log-negativity, discord and mutual information of detected states."""
    if cfg["state"]["kind"] == "fock":
        raise ConfigError("analysis needs a Gaussian state")
    basis = build_basis(cfg)
    det, alpha = build_detector(cfg, basis)
    state = build_state(cfg, basis)
    dts = delay_grid(cfg["analysis"])
    vac = cfg["detection"]["vacuum_model"]

    def row(dt_a):
        res = []
        for dt_b in dts:
            cov = detected_state(state, det, dt_a, dt_b, alpha, vac)
            res.append((dt_a / FS, dt_b / FS, analysis.von_neumann_entropy(cov),
                        analysis.logarithmic_negativity(cov), analysis.gaussian_discord(cov),
                        analysis.mutual_information(cov)))
        return res

    rows = [r for chunk in _map(row, dts, threads) for r in chunk]
    _write_rows(out / "analysis.csv",
                ("dt_a_fs", "dt_b_fs", "entropy", "log_negativity", "discord",
                 "mutual_information"), rows)
    paths = [out / "analysis.csv"]
    if cfg["outputs"]["svg"]:
        n = len(dts)
        vne = np.array([r[2] for r in rows]).reshape(n, n)
        paths.append(write_svg_heatmap(out / "entropy.svg", vne, "entropy"))
    return paths


VERBS = {
    "scan": run_correlation_scan,
    "reconstruct": run_reconstruction,
    "fock": run_fock_panels,
    "analyze": run_analysis,
}


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corrtomo", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=[*VERBS, "validate-config"])
    ap.add_argument("--config", required=True, help="YAML experiment config")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="worker threads")
    ap.add_argument("--seed", type=_seed, default=None, help="seed for finite sampling")
    ap.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config)
        if args.verb == "validate-config":
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.yaml").write_text(dump_config(cfg))
        for path in VERBS[args.verb](cfg, out, args.threads, args.seed):
            print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
