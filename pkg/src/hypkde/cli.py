"""Command-line driver: ``hypkde <command> [options]``.

Every option may also be given in a ``key = value`` file passed with
``--config``. Keys use the option name without dashes (``n_lambda``).
Command-line flags win over the file, which wins over the built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .assouad import build_family, perturbed_density, separation_check, sobolev_family_check
from .errors import HypKDEError, PositivityViolation
from .geometry import DIMENSION
from .helgason import SpectralGrid, hf_forward, hf_inverse, plancherel_norm, read_spectral_csv, write_spectral_csv
from .kde import KdeConfig, clipped, default_kernel, estimate, schedule
from .measures import FIXTURES, STD_N, STD_X, STD_Y, BitVector, Grid, l2_norm, read_density_csv, sample, write_density_csv
from .risk import fit_rate, read_records_csv, sandwich_experiment, sweep_csv, target_slope
from .spectral import sobolev_norm

DEFAULTS = {
    "seed": 0,
    "alpha": 1.0,
    "n": 1024,
    "ns": "256,512,1024,2048,4096",
    "reps": 20,
    "mode": "spatial",
    "truth": "b1",
    "nx": STD_N,
    "ny": STD_N,
    "x_min": STD_X[0],
    "x_max": STD_X[1],
    "y_min": STD_Y[0],
    "y_max": STD_Y[1],
    "lambda_max": 20.0,
    "n_lambda": 256,
    "n_phi": 64,
    "tol": 0.02,
    "pairs": 50,
    "h": None,
    "T": None,
    "amplitude": None,
}

INT_KEYS = {"seed", "n", "reps", "nx", "ny", "n_lambda", "n_phi", "pairs"}
FLOAT_KEYS = {"alpha", "x_min", "x_max", "y_min", "y_max", "lambda_max", "tol", "h", "T", "amplitude"}


class UsageError(Exception):
    pass


def _read_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {value!r}") from None
    return value


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags into one dict."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_read_config(args.config))
    for key, value in vars(args).items():
        if value is not None:
            cfg[key] = value
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    for key in ("n", "reps", "nx", "ny", "n_lambda", "n_phi", "lambda_max", "alpha", "tol"):
        if cfg.get(key) is not None and cfg[key] <= 0:
            raise UsageError(f"{key} must be positive")
    return cfg


def _grid(cfg) -> Grid:
    return Grid.uniform(cfg["x_min"], cfg["x_max"], cfg["y_min"], cfg["y_max"], cfg["nx"], cfg["ny"])


def _template(cfg) -> SpectralGrid:
    if cfg["n_lambda"] % 2:
        raise UsageError("n_lambda must be even")
    return SpectralGrid.template(cfg["lambda_max"], cfg["n_lambda"], cfg["n_phi"])


def _ns(cfg) -> list[int]:
    raw = cfg["ns"]
    if isinstance(raw, str):
        try:
            vals = [int(s) for s in raw.replace(" ", "").split(",") if s]
        except ValueError:
            raise UsageError(f"ns: cannot parse {raw!r}") from None
    else:
        vals = [int(v) for v in raw]
    if len(vals) < 3 or any(b <= a for a, b in zip(vals, vals[1:])) or vals[0] < 2:
        raise UsageError("ns must list at least three increasing sizes >= 2")
    return vals


def _truth(cfg):
    name = cfg["truth"]
    if name not in FIXTURES:
        raise UsageError(f"unknown truth {name!r}; choose from {sorted(FIXTURES)}")
    return FIXTURES[name]


def _load_density(path):
    if not Path(path).is_file():
        raise UsageError(f"input file not found: {path}")
    return read_density_csv(path)


def _write_json(obj, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _require(cfg, *keys):
    for key in keys:
        if not cfg.get(key):
            raise UsageError(f"--{key.replace('_', '-')} is required")


def cmd_fixture(cfg) -> int:
    _require(cfg, "output")
    f = _truth(cfg)(_grid(cfg))
    write_density_csv(f, cfg["output"])
    print(f"wrote {cfg['truth']} fixture on {f.grid.nx}x{f.grid.ny} grid to {cfg['output']}")
    return 0


def cmd_transform(cfg) -> int:
    _require(cfg, "input", "output")
    f = _load_density(cfg["input"])
    F = hf_forward(f, _template(cfg))
    write_spectral_csv(F, cfg["output"])
    spatial = l2_norm(f)
    spectral = plancherel_norm(F)
    gap = 0.0 if spatial == 0 and spectral == 0 else abs(spectral - spatial) / max(spatial, 1e-300)
    print(f"spatial_norm {spatial!r}")
    print(f"plancherel_norm {spectral!r}")
    print(f"relative_gap {gap!r}")
    if cfg.get("check") and gap >= cfg["tol"]:
        print(f"check failed: gap {gap:.4g} >= {cfg['tol']}", file=sys.stderr)
        return 1
    return 0


def cmd_inverse(cfg) -> int:
    _require(cfg, "input", "output")
    if not Path(cfg["input"]).is_file():
        raise UsageError(f"input file not found: {cfg['input']}")
    F = read_spectral_csv(cfg["input"])
    f = hf_inverse(F, _grid(cfg))
    write_density_csv(f, cfg["output"])
    print(f"wrote {f.grid.nx}x{f.grid.ny} density to {cfg['output']}")
    return 0


def cmd_kde(cfg) -> int:
    _require(cfg, "output")
    truth = _load_density(cfg["input"]) if cfg.get("input") else _truth(cfg)(_grid(cfg))
    h_s, T_s = schedule(cfg["n"], cfg["alpha"])
    h = cfg["h"] if cfg["h"] is not None else h_s
    T = cfg["T"] if cfg["T"] is not None else T_s
    tmpl = _template(cfg)
    kcfg = KdeConfig(h, T, default_kernel(tmpl))
    samples = sample(truth, cfg["n"], cfg["seed"])
    est = estimate(samples, kcfg, truth.grid)
    if cfg.get("clipped"):
        est = clipped(est)
    write_density_csv(est, cfg["output"])
    err = l2_norm(est - truth)
    print(f"h {h!r}")
    print(f"T {T!r}")
    print(f"l2_error {err!r}")
    return 0


def cmd_family(cfg) -> int:
    _require(cfg, "outdir")
    out = Path(cfg["outdir"])
    try:
        fam = build_family(cfg["n"], cfg["alpha"], mode=cfg["mode"], amplitude=cfg["amplitude"], truth=_truth(cfg))
    except PositivityViolation:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    thetas = cfg.get("theta") or ["0" * fam.bits]
    parsed = []
    for s in thetas:
        try:
            bv = BitVector.from_string(s)
        except ValueError as exc:
            raise UsageError(f"theta {s!r}: {exc}") from None
        if len(bv) != fam.bits:
            raise UsageError(f"theta {s!r} has {len(bv)} bits, the family has {fam.bits}")
        parsed.append(bv)
    out.mkdir(parents=True, exist_ok=True)
    write_density_csv(fam.base, out / "base.csv")
    files = []
    for k, bv in enumerate(parsed):
        name = f"theta_{k}.csv"
        write_density_csv(perturbed_density(fam, bv), out / name)
        files.append({"file": name, "theta": str(bv)})
    sep = separation_check(fam, pairs=cfg["pairs"], seed=cfg["seed"])
    tmpl = _template(cfg)
    base_norm = sobolev_norm(fam.base, fam.alpha, tmpl)
    Q = 2.0 * base_norm
    sob = [sobolev_family_check(fam, bv, Q, tmpl, base_norm=base_norm) for bv in parsed]
    report = {
        "n": fam.n, "alpha": fam.alpha, "mode": fam.mode, "bits": fam.bits, "amplitude": fam.amplitude,
        "h_n": fam.h_n, "r_n": fam.r_n, "grid": [fam.grid.nx, fam.grid.ny], "files": files,
        "separation": sep, "sobolev": sob,
    }
    _write_json(report, out / "family.json")
    print(f"bits {fam.bits}")
    print(f"slope {sep['slope']!r}")
    print(f"correlation {sep['correlation']!r}")
    print(f"C_times_n {sep['C_times_n']!r}")
    return 0


def cmd_sweep(cfg) -> int:
    _require(cfg, "output")
    if cfg["reps"] < 2:
        raise UsageError("reps must be at least 2 to estimate a standard error")
    ns = _ns(cfg)
    rep = sandwich_experiment(cfg["alpha"], ns, cfg["reps"], cfg["seed"], mode=cfg["mode"], truth=_truth(cfg))
    rep["truth"] = cfg["truth"]
    csv_path = Path(cfg["output"])
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(sweep_csv(rep))
    _write_json(rep, cfg.get("report") or csv_path.with_suffix(".json"))
    print(f"target_slope {target_slope(cfg['alpha'], DIMENSION)!r}")
    print(f"upper_slope {rep['upper_slope']!r}")
    print(f"lower_slope {rep['lower_slope']!r}")
    bad = [r["n"] for r in rep["rows"] if not r["ordered"]]
    if bad:
        print(f"lower bound exceeds the risk at n = {bad}", file=sys.stderr)
        return 1
    return 0


def cmd_rate_fit(cfg) -> int:
    _require(cfg, "input")
    if not Path(cfg["input"]).is_file():
        raise UsageError(f"input file not found: {cfg['input']}")
    records = read_records_csv(cfg["input"])
    slope, intercept, r2 = fit_rate(records)
    print(f"slope {slope!r}")
    print(f"intercept {intercept!r}")
    print(f"r_squared {r2!r}")
    print(f"target_slope {target_slope(cfg['alpha'])!r}")
    if cfg.get("report"):
        _write_json({"slope": slope, "intercept": intercept, "r_squared": r2,
                     "target_slope": target_slope(cfg["alpha"]), "records": len(records)}, cfg["report"])
    return 0


COMMANDS = {
    "fixture": (cmd_fixture, "write a fixture density CSV"),
    "transform": (cmd_transform, "forward transform of a density CSV"),
    "inverse": (cmd_inverse, "inverse transform of a spectral CSV onto a grid"),
    "kde": (cmd_kde, "sample a density and write the estimate"),
    "family": (cmd_family, "build a perturbed family and its reports"),
    "sweep": (cmd_sweep, "lower bound against estimator risk over sample sizes"),
    "rate-fit": (cmd_rate_fit, "log-log slope of a risk CSV"),
}

# flag -> (commands, help); None = every command
FLAGS = {
    "seed": (None, "random seed"),
    "alpha": (None, "smoothness order"),
    "n": (("kde", "family"), "sample size"),
    "ns": (("sweep",), "comma-separated sample sizes"),
    "reps": (("sweep",), "Monte Carlo replications"),
    "mode": (("family", "sweep"), "family construction: spatial or spectral"),
    "truth": (("fixture", "kde", "family", "sweep"), "fixture density: b1 or boundary"),
    "nx": (("fixture", "inverse", "kde"), "grid cells in x"),
    "ny": (("fixture", "inverse", "kde"), "grid cells in log y"),
    "x_min": (("fixture", "inverse", "kde"), "grid x lower edge"),
    "x_max": (("fixture", "inverse", "kde"), "grid x upper edge"),
    "y_min": (("fixture", "inverse", "kde"), "grid y lower edge"),
    "y_max": (("fixture", "inverse", "kde"), "grid y upper edge"),
    "lambda_max": (("transform", "kde", "family"), "spectral range"),
    "n_lambda": (("transform", "kde", "family"), "spectral nodes in lambda (even)"),
    "n_phi": (("transform", "kde", "family"), "spectral nodes in phi"),
    "tol": (("transform",), "relative gap allowed by --check"),
    "pairs": (("family",), "random theta pairs for the separation regression"),
    "h": (("kde",), "bandwidth (scheduled from n, alpha if unset)"),
    "T": (("kde",), "spectral cutoff (1/h if unset)"),
    "amplitude": (("family",), "bump amplitude (half the positivity margin if unset)"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypkde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hypkde {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value file (default: none)")
        for key, (cmds, text) in FLAGS.items():
            if cmds is not None and name not in cmds:
                continue
            flag = "--" + key.replace("_", "-")
            typ = int if key in INT_KEYS else float if key in FLOAT_KEYS else str
            kwargs = {"type": typ, "default": None, "help": f"{text} (default: {DEFAULTS[key]})"}
            if key == "mode":
                kwargs["choices"] = ["spatial", "spectral"]
            p.add_argument(flag, dest=key, **kwargs)
        if name in ("transform", "inverse", "kde", "rate-fit"):
            p.add_argument("--input", "-i", help="input CSV (default: none)")
        if name in ("fixture", "transform", "inverse", "kde", "sweep"):
            p.add_argument("--output", "-o", help="output CSV (default: none)")
        if name == "family":
            p.add_argument("--outdir", help="output directory (default: none)")
            p.add_argument("--theta", action="append", help="bit string, repeatable (default: all zeros)")
        if name in ("sweep", "rate-fit"):
            p.add_argument("--report", help="JSON report path (default: next to the CSV for sweep)")
        if name == "transform":
            p.add_argument("--check", action="store_true", default=None, help="exit 1 if the gap reaches --tol (default: off)")
        if name == "kde":
            p.add_argument("--clipped", action="store_true", default=None,
                           help="write the clipped, renormalized estimate (default: signed)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = resolve(args)
        return func(cfg)
    except PositivityViolation as exc:
        print(f"error: {exc} (reduce the amplitude by {exc.reduction:.3g})", file=sys.stderr)
        return 1
    except (UsageError, HypKDEError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
