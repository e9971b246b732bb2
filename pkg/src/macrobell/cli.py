"""Command-line front end: validated configs in, provenance-stamped files out.

Usage follows the experiment names as subcommands::

    macrobell bell-scan --config cfg.json --sigma0 0.1 --out scan.csv
    macrobell oracle-compare --out compare.csv
    macrobell epr-sweep --format json

Every run validates the merged configuration against the shipped JSON
schema (unknown keys are rejected), then writes its artifact with a header
block carrying the library version, the canonical config, and its hash.
Identical configs give byte-identical files.  Exit codes: 0 success,
1 configuration error, 2 truncation guard, 3 numerical-consistency failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DegenerateDenominator,
    NegativeProbability,
    NoViolation,
    TruncationError,
)
from .eprgauss import macroscopicity_margins, tmsv_epr_report
from .fockoracle import Truncations, ch_statistic_exact
from .hilbert import QuadratureGrid
from .quadbell import (
    AngleQuad,
    NoiseModel,
    _s_at_sigma,
    noise_threshold,
    optimize_angles,
)
from .states import pair_coherent, two_mode_squeezed, vacuum

OUT_DIR_ENV = "MACROBELL_OUT_DIR"

EXPERIMENTS = ("bell-scan", "noise-threshold", "angle-opt",
               "oracle-compare", "epr-sweep")

_BASE_CONFIG = {
    "state": {"kind": "pair_coherent", "r0": 1.1},
    "numerics": {"n_max": 60, "grid": {"lo": -8.0, "hi": 8.0, "step": 0.01},
                 "n_max_signal": 12, "n_max_lo": None, "tail_tol": 1e-9},
    "angles": {"theta": 0.0, "phi": -np.pi / 4,
               "theta_prime": np.pi / 2, "phi_prime": -3 * np.pi / 4},
    "noise": {"sigma0": 0.0, "E": 100.0},
    "scan": {},
    "epr": {"macroscopic_threshold": 1e4},
    "output": {"format": "csv", "figures": False},
    "jobs": 1,
}

_SCAN_DEFAULTS = {
    "bell-scan": {"sigma0": {"lo": 0.0, "hi": 0.5, "step": 0.02}},
    "noise-threshold": {"e_values": [100.0, 1000.0, 10000.0]},
    "oracle-compare": {"alpha_values": [5.0, 10.0, 20.0]},
    "epr-sweep": {"r_values": [0.0, 0.25, 0.5, 1.0, 1.5, 2.0],
                  "e_values": [100.0, 1000.0]},
    "angle-opt": {},
}


def default_config(experiment: str) -> dict:
    cfg = copy.deepcopy(_BASE_CONFIG)
    cfg["experiment"] = experiment
    cfg["scan"] = copy.deepcopy(_SCAN_DEFAULTS[experiment])
    ext = "json" if experiment == "angle-opt" else "csv"
    cfg["output"]["path"] = f"{experiment}.{ext}"
    if experiment == "angle-opt":
        cfg["output"]["format"] = "json"
    return cfg


def load_schema() -> dict:
    text = resources.files("macrobell").joinpath(
        "schema/runconfig.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_config(cfg: dict, source: str = "<config>") -> None:
    validator = jsonschema.Draft7Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "$" + "".join(
            f"[{p!r}]" if isinstance(p, str) else f"[{p}]"
            for p in first.absolute_path
        )
        raise ConfigError(f"{source}: {where}: {first.message}")
    exp = cfg["experiment"]
    scan = cfg.get("scan", {})
    needed = {"bell-scan": "sigma0", "noise-threshold": "e_values",
              "oracle-compare": "alpha_values", "epr-sweep": "r_values"}
    if exp in needed and needed[exp] not in scan:
        raise ConfigError(f"{source}: $['scan']: experiment '{exp}' needs "
                          f"scan.{needed[exp]}")


def canonical_json(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------- builders

def _build_state(cfg: dict):
    spec = cfg["state"]
    n_max = cfg["numerics"]["n_max"]
    tail = cfg["numerics"].get("tail_tol", 1e-9)
    kind = spec["kind"]
    if kind == "pair_coherent":
        if "r0" not in spec:
            raise ConfigError("$['state']: pair_coherent needs 'r0'")
        return pair_coherent(spec["r0"], n_max, tail)
    if kind == "two_mode_squeezed":
        if "r" not in spec:
            raise ConfigError("$['state']: two_mode_squeezed needs 'r'")
        return two_mode_squeezed(spec["r"], n_max, tail)
    return vacuum(n_max)


def _build_grid(cfg: dict) -> QuadratureGrid:
    g = cfg["numerics"]["grid"]
    return QuadratureGrid(g["lo"], g["hi"], g["step"])


def _build_angles(cfg: dict) -> AngleQuad:
    a = cfg["angles"]
    return AngleQuad(a["theta"], a["phi"], a["theta_prime"], a["phi_prime"])


def _build_truncations(cfg: dict) -> Truncations:
    n = cfg["numerics"]
    return Truncations(n_max_signal=n.get("n_max_signal", 12),
                       n_max_lo=n.get("n_max_lo"),
                       tail_tol=n.get("tail_tol", 1e-9))


def _scan_values(spec: dict) -> np.ndarray:
    lo, hi, step = spec["lo"], spec["hi"], spec["step"]
    if hi < lo:
        return np.empty(0)
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _pool_map(fn, items, jobs: int) -> list:
    """Order-preserving map; a thread pool when jobs > 1 (numpy releases
    the GIL in the kernels), keyed and re-sorted so output is stable."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        keyed = list(pool.map(lambda kv: (kv[0], fn(kv[1])), enumerate(items)))
    return [v for _, v in sorted(keyed, key=lambda kv: kv[0])]


# ------------------------------------------------------------- experiments

def _run_bell_scan(cfg: dict):
    state = _build_state(cfg)
    grid = _build_grid(cfg)
    angles = _build_angles(cfg)
    jobs = cfg.get("jobs", 1)
    sigmas = _scan_values(cfg["scan"]["sigma0"])

    def point(sigma0):
        res = _s_at_sigma(state, angles, grid, float(sigma0))
        return [float(sigma0), res.s, *res.p_joint,
                res.p_single_a, res.p_single_b]

    rows = _pool_map(point, list(sigmas), jobs)
    cols = ["sigma0", "S", "p_pp_1", "p_pp_2", "p_pp_3", "p_pp_4",
            "p_single_a", "p_single_b"]
    return cols, rows, {}


def _run_noise_threshold(cfg: dict):
    state = _build_state(cfg)
    grid = _build_grid(cfg)
    angles = _build_angles(cfg)
    jobs = cfg.get("jobs", 1)
    e_values = sorted(float(e) for e in cfg["scan"]["e_values"])

    def point(e):
        try:
            th = noise_threshold(state, angles, e, grid)
            return [e, th.sigma0_max, th.sigma_photon_max, th.s_no_noise]
        except NoViolation:
            s0 = _s_at_sigma(state, angles, grid, 0.0).s
            return [e, 0.0, 0.0, s0]

    rows = _pool_map(point, e_values, jobs)
    cols = ["E", "sigma0_max", "sigma_photon_max", "s_no_noise"]
    figures = {"fig3b.csv": (["alpha", "sigma_photon_max"],
                             [[r[0], r[2]] for r in rows])}
    return cols, rows, figures


def _run_angle_opt(cfg: dict):
    state = _build_state(cfg)
    grid = _build_grid(cfg)
    noise = NoiseModel(cfg["noise"].get("sigma0", 0.0), cfg["noise"].get("E"))
    quad, s = optimize_angles(state, noise, grid)
    row = [*quad.as_tuple(), s]
    cols = ["theta", "phi", "theta_prime", "phi_prime", "S"]
    return cols, [row], {}


def _run_oracle_compare(cfg: dict):
    state = _build_state(cfg)
    grid = _build_grid(cfg)
    angles = _build_angles(cfg)
    trunc = _build_truncations(cfg)
    sigma0 = cfg["noise"].get("sigma0", 0.0)
    jobs = cfg.get("jobs", 1)
    alphas = sorted(float(a) for a in cfg["scan"]["alpha_values"])
    s_limit = _s_at_sigma(state, angles, grid, sigma0).s

    def point(alpha):
        res = ch_statistic_exact(state, alpha, alpha, angles,
                                 sigma=alpha * sigma0, truncations=trunc)
        return [alpha, res.s, s_limit, abs(res.s - s_limit)]

    rows = _pool_map(point, alphas, jobs)
    cols = ["alpha", "s_exact", "s_limit", "abs_diff"]
    figures = {"fig3a.csv": (["alpha", "S"], [[r[0], r[1]] for r in rows])}
    return cols, rows, figures


def _run_epr_sweep(cfg: dict):
    threshold = cfg.get("epr", {}).get("macroscopic_threshold", 1e4)
    jobs = cfg.get("jobs", 1)
    r_values = [float(r) for r in cfg["scan"]["r_values"]]
    e_values = [float(e) for e in cfg["scan"].get(
        "e_values", [cfg["noise"].get("E") or 100.0])]
    points = [(r, e) for r in r_values for e in e_values]

    def point(re):
        r, e = re
        rep = tmsv_epr_report(r, e)
        mar = macroscopicity_margins(rep, threshold)
        return [r, e, rep.delta1, rep.delta2, rep.product, rep.bound,
                int(rep.satisfied), mar.m1, mar.m2,
                int(mar.m1_macroscopic and mar.m2_macroscopic)]

    rows = _pool_map(point, points, jobs)
    cols = ["r", "E", "delta1", "delta2", "product", "bound", "satisfied",
            "margin1", "margin2", "macroscopic"]
    return cols, rows, {}


_RUNNERS = {
    "bell-scan": _run_bell_scan,
    "noise-threshold": _run_noise_threshold,
    "angle-opt": _run_angle_opt,
    "oracle-compare": _run_oracle_compare,
    "epr-sweep": _run_epr_sweep,
}


# ------------------------------------------------------------------ output

def _format_value(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.12g}"


def _resolve_out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_csv(path: Path, cols, rows, cfg: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# macrobell {__version__}\n")
        f.write(f"# config_hash={config_hash(cfg)}\n")
        f.write(f"# config={canonical_json(cfg)}\n")
        f.write(",".join(cols) + "\n")
        for row in rows:
            f.write(",".join(_format_value(v) for v in row) + "\n")


def _write_json(path: Path, cols, rows, cfg: dict) -> None:
    payload = {
        "version": __version__,
        "config_hash": config_hash(cfg),
        "config": cfg,
        "columns": list(cols),
        "rows": [[float(v) for v in row] for row in rows],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def emit_figure_data(figures: dict, out_dir: Path, cfg: dict) -> list:
    """Write plot-ready two-column CSVs, rows sorted ascending in x."""
    written = []
    for name, (cols, rows) in figures.items():
        rows = sorted(rows, key=lambda r: r[0])
        path = out_dir / name
        _write_csv(path, cols, rows, cfg)
        written.append(path)
    return written


# -------------------------------------------------------------------- run

def run(cfg: dict, source: str = "<config>") -> int:
    """Execute one validated configuration; returns the process exit code."""
    try:
        validate_config(cfg, source)
        cols, rows, figures = _RUNNERS[cfg["experiment"]](cfg)
        out = cfg["output"]
        path = _resolve_out_path(out["path"])
        if out.get("format", "csv") == "json":
            _write_json(path, cols, rows, cfg)
        else:
            _write_csv(path, cols, rows, cfg)
        print(f"wrote {path} ({len(rows)} rows)")
        if out.get("figures") and figures:
            for p in emit_figure_data(figures, path.parent, cfg):
                print(f"wrote {p}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TruncationError as exc:
        print(f"truncation guard: {exc}", file=sys.stderr)
        return 2
    except (NegativeProbability, DegenerateDenominator) as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return 3


# -------------------------------------------------------------- arg parsing

def _apply_overrides(cfg: dict, args) -> None:
    if args.r0 is not None:
        cfg["state"] = {"kind": "pair_coherent", "r0": args.r0}
    if args.r is not None:
        cfg["state"] = {"kind": "two_mode_squeezed", "r": args.r}
    if args.sigma0 is not None:
        cfg.setdefault("noise", {})["sigma0"] = args.sigma0
    if args.alpha is not None:
        if cfg["experiment"] == "oracle-compare":
            cfg.setdefault("scan", {})["alpha_values"] = [args.alpha]
        else:
            cfg.setdefault("noise", {})["E"] = args.alpha
    if args.angles is not None:
        parts = args.angles.split(",")
        if len(parts) != 4:
            raise ConfigError("--angles wants four comma-separated radians")
        t, p, tp, pp = (float(v) for v in parts)
        cfg["angles"] = {"theta": t, "phi": p,
                         "theta_prime": tp, "phi_prime": pp}
    if args.nmax is not None:
        cfg.setdefault("numerics", {})["n_max"] = args.nmax
    if args.grid is not None:
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise ConfigError("--grid wants lo:hi:step")
        lo, hi, step = (float(v) for v in parts)
        cfg.setdefault("numerics", {})["grid"] = {
            "lo": lo, "hi": hi, "step": step}
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if args.out is not None:
        cfg.setdefault("output", {})["path"] = args.out
    if args.format is not None:
        cfg.setdefault("output", {})["format"] = args.format
    if args.figures:
        cfg.setdefault("output", {})["figures"] = True


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macrobell",
        description="Bell-Clauser-Horne and EPR experiments on two-mode light",
    )
    parser.add_argument("--version", action="version",
                        version=f"macrobell {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--r0", type=float, help="pair-coherent size parameter")
        p.add_argument("--r", type=float, help="two-mode squeezing parameter")
        p.add_argument("--sigma0", type=float,
                       help="quadrature-scale blur standard deviation")
        p.add_argument("--alpha", type=float,
                       help="local-oscillator amplitude (oracle alpha / E)")
        p.add_argument("--angles", help="theta,phi,theta_prime,phi_prime")
        p.add_argument("--nmax", type=int, help="per-mode photon cutoff")
        p.add_argument("--grid", help="quadrature grid as lo:hi:step")
        p.add_argument("--jobs", type=int, help="worker threads for scans")
        p.add_argument("--out", help="output path (relative paths resolve "
                                     f"under ${OUT_DIR_ENV} when set)")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--figures", action="store_true",
                       help="also emit plot-ready figure CSVs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    source = args.config or "<defaults>"
    try:
        cfg = default_config(args.experiment)
        if args.config:
            user = _load_config_file(args.config)
            if user.get("experiment", args.experiment) != args.experiment:
                raise ConfigError(
                    f"{args.config}: config is for "
                    f"'{user.get('experiment')}', not '{args.experiment}'")
            cfg = _merge(cfg, user)
        cfg["experiment"] = args.experiment
        _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(cfg, source)


if __name__ == "__main__":
    sys.exit(main())
