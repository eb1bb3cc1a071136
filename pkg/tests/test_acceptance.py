"""Acceptance criteria, one check per criterion.

Each check prints a single PASS/FAIL line. Run the file directly for the
lines alone (``python tests/test_acceptance.py``); under pytest they are
collected and echoed in the terminal summary.
"""

import contextlib
import io
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from hypkde.assouad import assouad_rhs, build_family, separation_check
from hypkde.cli import main as cli_main
from hypkde.geometry import BASE_POINT, HPoint, TangentVector, exp_map, hyperbolic_distance
from hypkde.helgason import SpectralGrid, hf_forward, hf_inverse, plancherel_norm
from hypkde.measures import Grid, base_density, boundary_density, l2_distance, l2_norm, radial_density
from hypkde.risk import fit_rate, rate_sweep, sandwich_experiment
from hypkde.spectral import apply_multiplier

RESULTS: list[str] = []

BUMPS = [
    (HPoint(0.0, 1.0), 0.5),
    (HPoint(0.0, 2.0), 0.6),
    (HPoint(0.2, 0.6), 0.35),
    (HPoint(0.3, 1.0), 0.5),
    (HPoint(0.0, 0.7), 0.4),
]
RATE_NS = [2**8, 2**9, 2**10, 2**11, 2**12]


def report(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def criterion_1() -> bool:
    t0 = time.time()
    grid = Grid.standard()
    ref = SpectralGrid.template()
    fine = SpectralGrid.template(ref.lambda_max, 2 * ref.n_lambda, 2 * ref.n_phi)
    gaps, trips, decreasing = [], [], []
    for center, sigma in BUMPS:
        f = radial_density(grid, center, sigma)
        norm = l2_norm(f)
        errs = []
        for tmpl in (ref, fine):
            F = hf_forward(f, tmpl)
            if tmpl is ref:
                gaps.append(abs(plancherel_norm(F) - norm) / norm)
            errs.append(l2_distance(hf_inverse(F, grid), f) / norm)
        trips.append(errs[0])
        decreasing.append(errs[1] < errs[0])
    elapsed = time.time() - t0
    ok = max(gaps) < 0.02 and max(trips) < 0.05 and all(decreasing) and elapsed < 60
    return report(1, ok, f"max Plancherel gap {max(gaps):.2e} (<0.02), max round trip {max(trips):.4f} (<0.05), "
                         f"decreasing on doubling {sum(decreasing)}/5, {elapsed:.1f}s (<60s)")


def criterion_2() -> bool:
    t0 = time.time()
    rng = np.random.default_rng(2)

    def draw():
        r = 2 * math.sqrt(rng.uniform())
        a = rng.uniform(0, 2 * math.pi)
        return TangentVector(r * math.cos(a), r * math.sin(a))

    worst_expand, worst_radial = math.inf, 0.0
    for _ in range(1000):
        u, v = draw(), draw()
        pu, pv = exp_map(u), exp_map(v)
        d = hyperbolic_distance(pu, pv)
        worst_expand = min(worst_expand, d - math.hypot(u.v1 - v.v1, u.v2 - v.v2))
        worst_radial = max(worst_radial, abs(hyperbolic_distance(pu, BASE_POINT) - u.norm))
    elapsed = time.time() - t0
    ok = worst_expand >= -1e-9 and worst_radial <= 1e-9
    return report(2, ok, f"min d(exp u, exp v) - |u-v| = {worst_expand:.3e} (>= -1e-9), "
                         f"max radial error {worst_radial:.1e} (<=1e-9), {elapsed:.1f}s")


def _fd_laplace_beltrami(f):
    g = f.grid
    dx = g.x_edges[1] - g.x_edges[0]
    dt = g.t_edges[1] - g.t_edges[0]
    v = f.values
    out = np.full(v.shape, np.nan)
    fxx = (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / dx**2
    ftt = (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]) / dt**2
    ft = (v[1:-1, 2:] - v[1:-1, :-2]) / (2 * dt)
    out[1:-1, 1:-1] = g.ys[None, 1:-1] ** 2 * fxx + ftt - ft
    return out


def criterion_3() -> bool:
    t0 = time.time()
    b1 = base_density()
    g = b1.grid
    tmpl = SpectralGrid.template(20, 256, 128)
    lb_spectral = hf_inverse(apply_multiplier(hf_forward(b1, tmpl), 2.0), g).values
    fd = -_fd_laplace_beltrami(b1)
    m = 16
    sl = (slice(m, g.nx - m), slice(m, g.ny - m))
    w = g.weights[sl]
    fd_err = math.sqrt(np.sum((lb_spectral[sl] - fd[sl]) ** 2 * w) / np.sum(fd[sl] ** 2 * w))

    f = radial_density(g, BASE_POINT, 0.35, normalize=False)
    tmpl = SpectralGrid.template(20, 256, 256)
    F = hf_forward(f, tmpl)
    step = hf_inverse(apply_multiplier(F, 2.0), g)
    twice = hf_inverse(apply_multiplier(hf_forward(step, tmpl), 2.0), g)
    once = hf_inverse(apply_multiplier(F, 4.0), g)
    semi_err = l2_norm(twice - once) / l2_norm(once)
    elapsed = time.time() - t0
    ok = fd_err < 0.05 and semi_err < 0.01 and elapsed < 60
    return report(3, ok, f"order-2 vs finite differences {fd_err:.4f} (<0.05), semigroup (2,2) {semi_err:.2e} (<0.01), "
                         f"{elapsed:.1f}s (<60s)")


def criterion_4() -> bool:
    t0 = time.time()
    corrs, cns, lbs = [], [], []
    for n in (256, 1024, 4096):
        fam = build_family(n, 1.0)
        sep = separation_check(fam, pairs=50, seed=n)
        corrs.append(sep["correlation"])
        cns.append(sep["C_times_n"])
        lbs.append(assouad_rhs(fam, pairs=0)["variation_lb"])
    spread = max(abs(c / np.mean(cns) - 1) for c in cns)
    elapsed = time.time() - t0
    ok = min(corrs) >= 0.99 and spread <= 0.15 and min(lbs) > 0.05 and elapsed < 300
    return report(4, ok, f"min correlation {min(corrs):.6f} (>=0.99), C*n spread {spread:.2%} (<=15%), "
                         f"min variation bound {min(lbs):.6f} (>0.05), {elapsed:.1f}s (<300s)")


def criterion_5() -> bool:
    t0 = time.time()
    recs = rate_sweep(boundary_density(), 1.0, RATE_NS, 20, seed=7)
    risk_slope = fit_rate(recs)[0]
    rep = sandwich_experiment(1.0, RATE_NS, 20, seed=7, truth=boundary_density)
    lower = rep["lower_slope"]
    ordered = rep["all_ordered"]
    elapsed = time.time() - t0
    ok = -0.65 <= risk_slope <= -0.35 and abs(lower + 0.5) <= 0.15 and ordered and elapsed < 1800
    return report(5, ok, f"risk slope {risk_slope:.3f} in [-0.65,-0.35], lower-bound slope {lower:.3f} (-0.5+-0.15), "
                         f"lower<=upper at every n: {ordered} (upper slope {rep['upper_slope']:.3f}), "
                         f"{elapsed:.0f}s (<1800s)")


def b1_rate_info() -> str:
    recs = rate_sweep(base_density(), 1.0, RATE_NS, 20, seed=7)
    line = f"info: risk slope on the smoother B1 fixture {fit_rate(recs)[0]:.3f} (bias-dominated at these n)"
    RESULTS.append(line)
    print(line)
    return line


def criterion_6() -> bool:
    t0 = time.time()
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        runs = {
            "fixture": lambda o: ["fixture", "-o", o / "b1.csv"],
            "transform": lambda o: ["transform", "-i", d / "a" / "b1.csv", "-o", o / "F.csv"],
            "inverse": lambda o: ["inverse", "-i", d / "a" / "F.csv", "-o", o / "back.csv"],
            "kde": lambda o: ["kde", "--n", "800", "--seed", "5", "-o", o / "kde.csv"],
            "family": lambda o: ["family", "--n", "256", "--seed", "5", "--outdir", o / "fam", "--theta", "1" * 16],
            "sweep": lambda o: ["sweep", "--ns", "64,128,256", "--reps", "2", "--seed", "5", "-o", o / "sweep.csv"],
        }
        codes = []
        for sub in ("a", "b"):
            o = d / sub
            o.mkdir()
            for name, argv in runs.items():
                with contextlib.redirect_stdout(io.StringIO()):
                    codes.append(cli_main([str(a) for a in argv(o)]))
        files = sorted(p.relative_to(d / "a") for p in (d / "a").rglob("*.csv"))
        same = all((d / "a" / p).read_bytes() == (d / "b" / p).read_bytes() for p in files)
    elapsed = time.time() - t0
    ok = same and all(c == 0 for c in codes) and len(files) == 7
    return report(6, ok, f"{len(files)} CSV files from {len(runs)} commands byte-identical on rerun: {same}, {elapsed:.1f}s")


@pytest.mark.parametrize("number", [1, 2, 3, 4, 5, 6])
def test_criterion(number):
    assert globals()[f"criterion_{number}"]()


def test_b1_rate_information():
    b1_rate_info()


if __name__ == "__main__":
    results = [globals()[f"criterion_{k}"]() for k in range(1, 7)]
    b1_rate_info()
    sys.exit(0 if all(results) else 1)
