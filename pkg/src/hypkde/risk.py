"""Monte Carlo L2 risk, rate fits and the lower/upper sandwich."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .assouad import assouad_rhs, build_family, perturbed_density
from .errors import DegenerateFit
from .geometry import DIMENSION
from .kde import KdeConfig, estimate, scheduled_config
from .measures import BitVector, GridDensity, base_density, l2_distance, sample


@dataclass(frozen=True)
class RiskRecord:
    n: int
    alpha: float
    replications: int
    mean_sq_risk: float
    std_error: float
    seed: int


def derived_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def replicate_risks(f: GridDensity, cfg: KdeConfig, n: int, reps: int, seed: int) -> np.ndarray:
    """Squared L2 errors of independent replicates; replicate k uses child k of ``seed``."""
    children = np.random.SeedSequence(seed).spawn(reps)
    out = np.empty(reps)
    for k, child in enumerate(children):
        est = estimate(sample(f, n, child), cfg, f.grid)
        out[k] = l2_distance(est, f) ** 2
    return out


def l2_risk(f: GridDensity, cfg: KdeConfig, n: int, reps: int, seed: int, alpha: float = float("nan")) -> RiskRecord:
    if reps < 2:
        raise ValueError("need at least two replications")
    risks = replicate_risks(f, cfg, n, reps, seed)
    return RiskRecord(
        n=int(n), alpha=float(alpha), replications=int(reps),
        mean_sq_risk=float(risks.mean()), std_error=float(risks.std(ddof=1) / math.sqrt(reps)), seed=int(seed),
    )


def rate_sweep(f: GridDensity, alpha: float, ns, reps: int, seed: int, kernel=None) -> list[RiskRecord]:
    ns = [int(n) for n in ns]
    if len(ns) < 3 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be increasing with at least three entries")
    return [l2_risk(f, scheduled_config(n, alpha, kernel), n, reps, derived_seed(seed, n), alpha) for n in ns]


def fit_rate(records) -> tuple[float, float, float]:
    """OLS of log risk on log n: ``(slope, intercept, r_squared)``."""
    ns = np.array([r.n if isinstance(r, RiskRecord) else r[0] for r in records], dtype=float)
    risk = np.array([r.mean_sq_risk if isinstance(r, RiskRecord) else r[1] for r in records], dtype=float)
    if len(ns) < 3:
        raise ValueError("need at least three records")
    if np.any(risk <= 0):
        raise ValueError("risks must be positive for a log-log fit")
    x, y = np.log(ns), np.log(risk)
    if np.ptp(x) == 0:
        raise DegenerateFit("all sample sizes are equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def target_slope(alpha: float, d: int = DIMENSION) -> float:
    return -2.0 * alpha / (2.0 * alpha + d)


def probe_thetas(bits: int):
    return {
        "zero": BitVector.zeros(bits),
        "one_hot": BitVector.one_hot(bits, 0),
        "all_ones": BitVector.ones(bits),
    }


def sandwich_experiment(alpha: float, ns, reps: int, seed: int, pairs: int = 20, mode: str = "spatial",
                        truth=None) -> dict:
    """Assouad lower bound against the estimator's worst probed risk, per n."""
    ns = [int(n) for n in ns]
    if reps < 2:
        raise ValueError("need at least two replications")
    rows = []
    for n in ns:
        fam = build_family(n, alpha, mode=mode, truth=truth)
        lower = assouad_rhs(fam, pairs=pairs, seed=derived_seed(seed, n, 1))
        cfg = scheduled_config(n, alpha)
        probes = {}
        for name, theta in probe_thetas(fam.bits).items():
            rec = l2_risk(perturbed_density(fam, theta), cfg, n, reps, derived_seed(seed, n), alpha)
            probes[name] = asdict(rec)
        worst = max(probes, key=lambda k: probes[k]["mean_sq_risk"])
        rows.append({
            "n": n, "alpha": alpha, "h_n": fam.h_n, "T_n": cfg.T, "r_n": fam.r_n, "bits": fam.bits,
            "lower_bound": lower["rhs"], "upper": probes[worst]["mean_sq_risk"],
            "upper_std_error": probes[worst]["std_error"], "upper_probe": worst,
            "ordered": bool(lower["rhs"] <= probes[worst]["mean_sq_risk"]),
            "hellinger_sq_max": lower["hellinger_sq_max"], "variation_lb": lower["variation_lb"],
            "single_draw_variation_min": lower["single_draw_variation_min"],
            "separation_min": lower["separation_min"], "probes": probes,
        })
    lower_fit = fit_rate([(r["n"], r["lower_bound"]) for r in rows]) if len(rows) >= 3 else None
    upper_fit = fit_rate([(r["n"], r["upper"]) for r in rows]) if len(rows) >= 3 else None
    return {
        "alpha": alpha, "d": DIMENSION, "reps": reps, "seed": seed, "mode": mode,
        "target_slope": target_slope(alpha),
        "lower_slope": lower_fit[0] if lower_fit else None,
        "upper_slope": upper_fit[0] if upper_fit else None,
        "all_ordered": all(r["ordered"] for r in rows),
        "rows": rows,
        "notes": "lower bound divides the Assouad display by 2^p and counts one bit per mesh point",
    }


SWEEP_HEADER = ["n", "alpha", "mean_sq_risk", "std_error", "lower_bound"]


def sweep_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in report["rows"]:
        writer.writerow([row["n"], repr(float(row["alpha"])), repr(row["upper"]),
                         repr(row["upper_std_error"]), repr(row["lower_bound"])])
    return buf.getvalue()


def records_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "alpha", "replications", "mean_sq_risk", "std_error", "seed"])
    for r in records:
        writer.writerow([r.n, repr(r.alpha), r.replications, repr(r.mean_sq_risk), repr(r.std_error), r.seed])
    return buf.getvalue()


def read_records_csv(path) -> list[RiskRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"n", "mean_sq_risk"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: needs at least columns n and mean_sq_risk")
        out = []
        for row in reader:
            out.append(RiskRecord(
                n=int(row["n"]), alpha=float(row.get("alpha") or "nan"),
                replications=int(row.get("replications") or 0), mean_sq_risk=float(row["mean_sq_risk"]),
                std_error=float(row.get("std_error") or 0.0), seed=int(row.get("seed") or 0),
            ))
    return out


def default_truth() -> GridDensity:
    return base_density()
