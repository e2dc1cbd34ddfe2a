"""Command-line pipelines: time scans, excitation scans, exponent maps.

All rate inputs are dimensionless (kappa/g, gamma/g); simulations run with
the coupling scaled to 1 and times in g*t.  Passing --g rescales the reported
F column to that coupling (the F_g2 column is invariant).  Every run writes
CSV data files plus a JSON manifest echoing the fully resolved configuration.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np
import yaml

from . import __version__
from .evolve import IntegratorConfig
from .fisher import QfiConfig, QfiSeries, qfi_series
from .metrology import (FitError, default_time_grid, dicke_excitation_scan,
                        exponent_map, find_peak, refine_peak)
from .operators import SimParams
from .oracle import MAX_ORACLE_QUBITS
from .probes import parse_probe

USAGE_ERROR = 1
NUMERICAL_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_float_list(text: str) -> list:
    """Comma list '0.1,0.2' or range 'start:stop:count'."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad grid {text!r}: expected start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise UsageError(f"bad grid {text!r}: {exc}") from None
        if count < 1:
            raise UsageError(f"bad grid {text!r}: count must be >= 1")
        return [float(v) for v in np.linspace(start, stop, count)]
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}: {exc}") from None


def _parse_int_list(text: str) -> list:
    try:
        vals = [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}: {exc}") from None
    if not vals:
        raise UsageError("empty list")
    return vals


# ---------------------------------------------------------------------------
# configuration handling

DEFAULTS = {
    "g": 1.0,
    "t_max": 20.0,
    "time_points": 400,
    "rtol": 1e-10,
    "atol": 1e-10,
    "delta": 1e-3,
    "workers": 1,
    "objective": "f",
    "refine": True,
    "out_dir": ".",
    "cache_dir": None,
}


def load_config(path, command: str) -> dict:
    """Merge the config file's common section with the command's section."""
    merged = {}
    if path:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
        if not isinstance(doc, dict):
            raise UsageError(f"{path}: config root must be a mapping")
        for section in ("common", command):
            part = doc.get(section, {})
            if part is None:
                part = {}
            if not isinstance(part, dict):
                raise UsageError(f"{path}: section {section!r} must be a mapping")
            merged.update(part)
    return merged


def resolve(args, file_cfg: dict, keys) -> dict:
    """Defaults < config file < explicit CLI flags."""
    cfg = {}
    for key in keys:
        cfg[key] = DEFAULTS.get(key)
        if key in file_cfg:
            cfg[key] = file_cfg[key]
        cli_val = getattr(args, key.replace("-", "_"), None)
        if cli_val is not None:
            cfg[key] = cli_val
    return cfg


def _time_grid(cfg) -> np.ndarray:
    return default_time_grid(float(cfg["t_max"]), int(cfg["time_points"]))


def _qfi_cfg(cfg) -> QfiConfig:
    return QfiConfig(delta=float(cfg["delta"]))


def _int_cfg(cfg) -> IntegratorConfig:
    return IntegratorConfig(rtol=float(cfg["rtol"]), atol=float(cfg["atol"]))


def _atomic_write(path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               prefix=".tmp-", text=True)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_manifest(path, command: str, cfg: dict, cells: list,
                   elapsed: float) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "cells": cells,
        "elapsed_seconds": elapsed,
    }
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True,
                                   default=float) + "\n")


# ---------------------------------------------------------------------------
# series cache

class SeriesCache:
    """QFI series store keyed by probe, parameters, grid and tolerances.

    Integration dominates the pipeline cost, so cached series make warm
    reruns and shared scans (F and F/t read the same series) cheap.  Writes
    are atomic; the key includes the code version.
    """

    def __init__(self, cache_dir, cfg: QfiConfig, int_cfg: IntegratorConfig):
        self.cache_dir = cache_dir
        self.cfg = cfg
        self.int_cfg = int_cfg
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)

    def _key(self, probe, params, times) -> str:
        payload = json.dumps({
            "version": __version__,
            "probe": probe.label(),
            "N": params.N, "g": params.g,
            "kappa": params.kappa, "gamma": params.gamma,
            "omega_q": params.omega_q, "omega_c": params.omega_c,
            "delta": self.cfg.delta,
            "err_multiplier": self.cfg.err_multiplier,
            "pair_floor": self.cfg.pair_floor,
            "rtol": self.int_cfg.rtol, "atol": self.int_cfg.atol,
            "times": [float(t) for t in times],
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:32]

    def __call__(self, probe, params, times) -> QfiSeries:
        if not self.cache_dir:
            return qfi_series(probe, params, times, self.cfg, self.int_cfg)
        path = os.path.join(self.cache_dir, f"qfi_{self._key(probe, params, times)}.json")
        if os.path.exists(path):
            return QfiSeries.from_json(path)
        series = qfi_series(probe, params, times, self.cfg, self.int_cfg)
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, prefix=".tmp-")
        os.close(fd)
        series.to_json(tmp)
        os.replace(tmp, path)
        return series


# ---------------------------------------------------------------------------
# subcommands

def _series_filename(probe_label: str, kappa: float, gamma: float,
                     n_qubits: int) -> str:
    return f"time_{probe_label}_k{kappa:.2f}_g{gamma:.2f}_N{n_qubits}.csv"


def cmd_time_scan(args) -> int:
    file_cfg = load_config(args.config, "time-scan")
    cfg = resolve(args, file_cfg, ["probe", "n", "kappa", "gamma", "g",
                                   "t_max", "time_points", "rtol", "atol",
                                   "delta", "out_dir", "cache_dir"])
    if not cfg.get("probe"):
        raise UsageError("time-scan requires --probe")
    if not cfg.get("n"):
        raise UsageError("time-scan requires --n with at least one qubit count")
    n_list = cfg["n"] if isinstance(cfg["n"], list) else _parse_int_list(str(cfg["n"]))
    kappa, gamma, g = float(cfg["kappa"]), float(cfg["gamma"]), float(cfg["g"])
    times = _time_grid(cfg)
    cache = SeriesCache(cfg["cache_dir"], _qfi_cfg(cfg), _int_cfg(cfg))
    os.makedirs(cfg["out_dir"], exist_ok=True)

    t_start = time.perf_counter()
    cells = []
    for n_qubits in n_list:
        probe = parse_probe(cfg["probe"], n_qubits)
        params = SimParams(N=n_qubits, g=g, kappa=kappa * g, gamma=gamma * g)
        print(f"time-scan: {probe.label()} N={n_qubits} kappa/g={kappa} "
              f"gamma/g={gamma}", file=sys.stderr)
        series = cache(probe, params, times)
        out = os.path.join(cfg["out_dir"],
                           _series_filename(probe.label(), kappa, gamma, n_qubits))
        series.to_csv(out)
        peak = find_peak(series)
        cells.append({"N": n_qubits, "probe": probe.label(), "file": out,
                      "peak_time": peak.peak_time, "peak_value": peak.peak_value,
                      "at_boundary": peak.at_boundary})
    write_manifest(os.path.join(cfg["out_dir"],
                                f"time_{cfg['probe']}_k{kappa:.2f}_g{gamma:.2f}_manifest.json"),
                   "time-scan", cfg, cells, time.perf_counter() - t_start)
    return 0


def cmd_dicke_scan(args) -> int:
    file_cfg = load_config(args.config, "dicke-scan")
    cfg = resolve(args, file_cfg, ["n", "excitations", "kappa", "gamma", "g",
                                   "t_max", "time_points", "rtol", "atol",
                                   "delta", "workers", "objective", "refine",
                                   "out_dir", "cache_dir"])
    if args.per_time:
        cfg["objective"] = "f_over_t"
    if not cfg.get("n"):
        raise UsageError("dicke-scan requires --n <qubit count>")
    n_qubits = int(cfg["n"])
    kappas = (cfg["kappa"] if isinstance(cfg["kappa"], list)
              else _parse_float_list(str(cfg["kappa"])))
    gamma, g = float(cfg["gamma"]), float(cfg["g"])
    if cfg.get("excitations"):
        exc = (cfg["excitations"] if isinstance(cfg["excitations"], list)
               else _parse_int_list(str(cfg["excitations"])))
    else:
        exc = list(range(1, n_qubits + 1))
    objective = cfg["objective"]
    times = _time_grid(cfg)
    cache = SeriesCache(cfg["cache_dir"], _qfi_cfg(cfg), _int_cfg(cfg))
    os.makedirs(cfg["out_dir"], exist_ok=True)

    t_start = time.perf_counter()
    rows, cells = [], []
    for kappa in kappas:
        params = SimParams(N=n_qubits, g=g, kappa=float(kappa) * g,
                           gamma=gamma * g)
        print(f"dicke-scan: N={n_qubits} kappa/g={kappa} gamma/g={gamma} "
              f"objective={objective}", file=sys.stderr)
        scan = dicke_excitation_scan(
            n_qubits, params, exc, objectives=(objective,), times=times,
            cfg=_qfi_cfg(cfg), int_cfg=_int_cfg(cfg),
            refine=bool(cfg["refine"]), workers=int(cfg["workers"]),
            series_fn=cache)
        best = scan.best[objective]
        for n_exc, peak in zip(scan.n_values, scan.peaks[objective]):
            rows.append((float(kappa), n_exc, peak.peak_time, peak.peak_value,
                         int(n_exc == best)))
        cells.append({"kappa": float(kappa), "gamma": gamma, "best_n": best,
                      "objective": objective,
                      "boundary_flags": [p.at_boundary
                                         for p in scan.peaks[objective]]})

    suffix = "t" if objective == "f_over_t" else ""
    out = os.path.join(cfg["out_dir"], f"{suffix}dicke_scan_N{n_qubits}_g{gamma:.2f}.csv")
    lines = ["kappa,n,peak_time,peak_value,is_best"]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row))
    _atomic_write(out, "\n".join(lines) + "\n")
    write_manifest(out.replace(".csv", "_manifest.json"), "dicke-scan", cfg,
                   cells, time.perf_counter() - t_start)
    return 0


def cmd_exponent_map(args) -> int:
    file_cfg = load_config(args.config, "exponent-map")
    cfg = resolve(args, file_cfg, ["probe", "kappa_grid", "gamma_grid",
                                   "n_list", "g", "t_max", "time_points",
                                   "rtol", "atol", "delta", "workers",
                                   "objective", "refine", "out_dir",
                                   "cache_dir"])
    if args.per_time:
        cfg["objective"] = "f_over_t"
    if not cfg.get("probe"):
        raise UsageError("exponent-map requires --probe")
    if not cfg.get("kappa_grid") or not cfg.get("gamma_grid"):
        raise UsageError("exponent-map requires --kappa-grid and --gamma-grid")
    kappas = (cfg["kappa_grid"] if isinstance(cfg["kappa_grid"], list)
              else _parse_float_list(str(cfg["kappa_grid"])))
    gammas = (cfg["gamma_grid"] if isinstance(cfg["gamma_grid"], list)
              else _parse_float_list(str(cfg["gamma_grid"])))
    n_list = (cfg["n_list"] if isinstance(cfg["n_list"], list)
              else _parse_int_list(str(cfg["n_list"])) if cfg.get("n_list")
              else [4, 8, 12, 16, 20])
    times = _time_grid(cfg)
    cache = SeriesCache(cfg["cache_dir"], _qfi_cfg(cfg), _int_cfg(cfg))
    os.makedirs(cfg["out_dir"], exist_ok=True)

    t_start = time.perf_counter()
    print(f"exponent-map: probe={cfg['probe']} objective={cfg['objective']} "
          f"{len(gammas)}x{len(kappas)} cells, N={n_list}", file=sys.stderr)
    result = exponent_map(cfg["probe"], kappas, gammas, n_list,
                          objective=cfg["objective"], times=times,
                          cfg=_qfi_cfg(cfg), int_cfg=_int_cfg(cfg),
                          refine=bool(cfg["refine"]),
                          workers=int(cfg["workers"]), series_fn=cache)
    suffix = "_per_time" if cfg["objective"] == "f_over_t" else ""
    out = os.path.join(cfg["out_dir"], f"exponents_{cfg['probe']}{suffix}.csv")
    result.to_csv(out)
    write_manifest(out.replace(".csv", "_manifest.json"), "exponent-map", cfg,
                   result.cell_info, time.perf_counter() - t_start)
    bad = sum(1 for c in result.cell_info if c["status"] != "ok")
    if bad:
        print(f"exponent-map: {bad} cell(s) invalid; see manifest",
              file=sys.stderr)
        return NUMERICAL_ERROR
    return 0


def cmd_oracle_check(args) -> int:
    file_cfg = load_config(args.config, "oracle-check")
    cfg = resolve(args, file_cfg, ["n", "rtol", "atol", "delta", "out_dir"])
    n_list = ([int(v) for v in cfg["n"]] if isinstance(cfg.get("n"), list)
              else _parse_int_list(str(cfg["n"])) if cfg.get("n") else [2, 3])
    if any(n > MAX_ORACLE_QUBITS for n in n_list):
        raise UsageError(f"oracle checks support N <= {MAX_ORACLE_QUBITS}")

    from . import oracle
    from .basis import build_layout, sector_weights
    from .operators import assemble_rhs
    from .probes import ProbeSpec
    from .state import DensityState

    rng = np.random.default_rng(2023)
    failures = []
    for n_qubits in n_list:
        layout = build_layout(n_qubits)
        weights = sector_weights(n_qubits)
        state = DensityState.zeros(layout)
        probs = rng.dirichlet(np.ones(len(weights.two_j)))
        for p, tj in zip(probs, weights.two_j):
            b = (tj + 1) * (layout.boson_cutoff + 1)
            m = rng.standard_normal((b, b)) + 1j * rng.standard_normal((b, b))
            blk = m @ m.conj().T
            state.set_block(tj, p * blk / np.trace(blk).real)

        full = oracle.expand(state)
        back = oracle.symmetrize(full)
        dev_round = float(np.max(np.abs(back.data - state.data)))

        params = SimParams(N=n_qubits, g=1.0, kappa=0.7, gamma=0.4)
        d_sym = assemble_rhs(params, layout).apply(state.data)
        d_full = oracle.full_rhs(params)(0.0, full.data)
        proj = oracle.symmetrize(full.replace_data(d_full), tol=1e-6)
        dev_rhs = float(np.max(np.abs(proj.data - d_sym)))

        probe = ProbeSpec(kind="dicke", N=n_qubits, n=1)
        times = np.linspace(0.0, 5.0, 11)
        series = qfi_series(probe, params, times, _qfi_cfg(cfg), _int_cfg(cfg))
        f_full = oracle.full_qfi_series(probe, params, times, _qfi_cfg(cfg),
                                        _int_cfg(cfg))
        live = f_full > 1e-6
        dev_qfi = float(np.max(np.abs(series.f - f_full)[live]
                               / f_full[live]))

        for name, dev, tol in (("round-trip", dev_round, 1e-10),
                               ("rhs-match", dev_rhs, 1e-10),
                               ("qfi-match", dev_qfi, 1e-6)):
            status = "PASS" if dev <= tol else "FAIL"
            print(f"N={n_qubits} {name:11s} max deviation {dev:.3e} "
                  f"(tol {tol:.0e})  {status}")
            if dev > tol:
                failures.append((n_qubits, name, dev))
    if failures:
        return NUMERICAL_ERROR
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="dickesim",
                     description="Lossy qubit-cavity QFI pipelines in the "
                                 "permutation-symmetric basis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file (sections: common "
                                        "plus one per command)")
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--cache-dir", dest="cache_dir")
        p.add_argument("--g", type=float, dest="g",
                       help="coupling for dimensionful output (default 1)")
        p.add_argument("--t-max", type=float, dest="t_max")
        p.add_argument("--time-points", type=int, dest="time_points")
        p.add_argument("--rtol", type=float)
        p.add_argument("--atol", type=float)
        p.add_argument("--delta", type=float,
                       help="finite-difference step relative to g")

    p = sub.add_parser("time-scan", help="QFI(t) series per qubit count")
    common(p)
    p.add_argument("--probe", help="dicke-<n>, dicke-half, x-polarized, ghz")
    p.add_argument("--n", type=_parse_int_list, help="qubit counts, e.g. 4,8,12")
    p.add_argument("--kappa", type=float, help="resonator decay / g")
    p.add_argument("--gamma", type=float, help="qubit decay / g")
    p.set_defaults(fn=cmd_time_scan)

    p = sub.add_parser("dicke-scan",
                       help="peak QFI vs Dicke excitation number")
    common(p)
    p.add_argument("--n", type=int, help="qubit count")
    p.add_argument("--excitations", type=_parse_int_list,
                   help="excitation numbers (default 1..N)")
    p.add_argument("--kappa", type=_parse_float_list,
                   help="resonator decay values / g")
    p.add_argument("--gamma", type=float, help="qubit decay / g")
    p.add_argument("--workers", type=int)
    p.add_argument("--per-time", action="store_true",
                   help="optimize QFI(t)/t instead of QFI")
    p.add_argument("--no-refine", dest="refine", action="store_false",
                   default=None)
    p.set_defaults(fn=cmd_dicke_scan)

    p = sub.add_parser("exponent-map",
                       help="scaling exponent b over a decay-rate grid")
    common(p)
    p.add_argument("--probe")
    p.add_argument("--kappa-grid", dest="kappa_grid", type=_parse_float_list,
                   help="list 0.1,0.2 or range start:stop:count")
    p.add_argument("--gamma-grid", dest="gamma_grid", type=_parse_float_list)
    p.add_argument("--n-list", dest="n_list", type=_parse_int_list,
                   help="qubit counts entering the fit (default 4,8,12,16,20)")
    p.add_argument("--workers", type=int)
    p.add_argument("--per-time", action="store_true")
    p.add_argument("--no-refine", dest="refine", action="store_false",
                   default=None)
    p.set_defaults(fn=cmd_exponent_map)

    p = sub.add_parser("oracle-check",
                       help="brute-force equivalence suites (N <= 5)")
    common(p)
    p.add_argument("--n", type=_parse_int_list, help="qubit counts (default 2,3)")
    p.set_defaults(fn=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "per_time"):
            args.per_time = False
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
