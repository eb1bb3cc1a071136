"""Hypercube family of perturbed densities for the minimax lower bound.

For sample size ``n`` the family is::

    f_theta = f + h_n^alpha * sum_j theta_j * p_j

where ``p_j`` is a zero-mass radial bump recentred at mesh point ``X_j``. In
``spatial`` mode the bump is the unit kernel rescaled geodesically to radius
``h_n / 2``, so bumps at distinct mesh points have disjoint supports. In
``spectral`` mode the unit kernel is rescaled through its transform by
``h_n^d`` and then recentred; those bumps are not compactly supported and the
family is renormalized to unit mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import IndexOutOfRange, LengthMismatch, PositivityViolation
from .geometry import BASE_POINT, DIMENSION, Mesh, build_mesh, distance, mesh_schedule
from .helgason import RadialProfile, radial_inverse, spherical_transform
from .measures import (
    STD_N,
    STD_X,
    STD_Y,
    BitVector,
    Grid,
    GridDensity,
    base_density,
    hamming,
    hellinger_sq,
    integrate,
    l1_distance,
    l2_distance,
    product_variation_lb,
    variation_min,
)
from .spectral import laplacian_multiplier, radial_sobolev_norm, sobolev_norm

# Mexican-hat profile on s = r / radius: inner bump minus an annular bump
INNER_RADIUS = 0.55
ANNULUS_CENTER = 0.72
ANNULUS_HALF_WIDTH = 0.23
# tangent-square half-diagonal plus the largest bump radius (h_n <= 1)
POSITIVITY_RADIUS = np.sqrt(2) / 2 + 0.5
SPECTRAL_KERNEL_LAMBDA = 80.0


def smooth_bump(u):
    """exp(1 - 1/(1 - u^2)) on |u| < 1, zero outside; peak value 1 at u = 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def _inner_part(s):
    return smooth_bump(np.asarray(s) / INNER_RADIUS)


def _outer_part(s):
    return smooth_bump((np.asarray(s) - ANNULUS_CENTER) / ANNULUS_HALF_WIDTH)


def annulus_coefficient(radius: float) -> float:
    """Weight on the annulus making the profile have zero hyperbolic mass."""
    inner = quad(lambda r: _inner_part(r / radius) * np.sinh(r), 0, INNER_RADIUS * radius, limit=200)[0]
    lo = (ANNULUS_CENTER - ANNULUS_HALF_WIDTH) * radius
    hi = (ANNULUS_CENTER + ANNULUS_HALF_WIDTH) * radius
    outer = quad(lambda r: _outer_part(r / radius) * np.sinh(r), lo, hi, limit=200)[0]
    return inner / outer


def bump_profile(r, radius: float = 1.0, coef: float | None = None):
    """Radial kernel supported in the geodesic disk of the given radius."""
    coef = annulus_coefficient(radius) if coef is None else coef
    s = np.asarray(r, dtype=float) / radius
    return _inner_part(s) - coef * _outer_part(s)


def kernel_grid(n: int = 256) -> Grid:
    return Grid.uniform(-1.2, 1.2, np.exp(-1.02), np.exp(1.02), n, n)


def _matched_bump(dist, weights, radius):
    """Profile values on nodes with the annulus weight fixed by the nodes.

    The discrete mass is then zero to rounding.
    """
    inner = _inner_part(dist / radius)
    outer = _outer_part(dist / radius)
    den = np.sum(outer * weights)
    coef = np.sum(inner * weights) / den if den > 0 else 0.0
    return inner - coef * outer


def bump_kernel(amplitude: float = 1.0, grid: Grid | None = None) -> GridDensity:
    """Unit-radius kernel about i with zero discrete mass on ``grid``."""
    grid = kernel_grid() if grid is None else grid
    X, Y = grid.mesh
    r = distance(X, Y, 0.0, 1.0)
    vals = np.zeros(grid.shape)
    inside = r < 1.0
    vals[inside] = amplitude * _matched_bump(r[inside], grid.weights[inside], 1.0)
    return GridDensity(grid, vals)


def family_grid(mesh: Mesh, radius: float, points_per_radius: float = 10.0, coarse_n: int = STD_N) -> Grid:
    """Standard rectangle, refined over the disks of ``radius`` about the mesh."""
    xs, ys = mesh.xs, mesh.ys
    reach = 1.05 * radius
    box = (
        float(np.min(xs - ys * np.sinh(reach))),
        float(np.max(xs + ys * np.sinh(reach))),
        float(np.min(ys) * np.exp(-reach)),
        float(np.max(ys) * np.exp(reach)),
    )
    dt = radius / points_per_radius
    fine = (dt * box[2], dt)
    coarse = ((STD_X[1] - STD_X[0]) / coarse_n, np.log(STD_Y[1] / STD_Y[0]) / coarse_n)
    return Grid.refined(STD_X, STD_Y, coarse, box, fine)


@dataclass(eq=False)
class AssouadFamily:
    base: GridDensity
    kernel: GridDensity
    n: int
    alpha: float
    mesh: Mesh
    h_n: float
    r_n: int
    mode: str
    amplitude: float
    radius: float
    d: int = DIMENSION
    supports: list = field(default_factory=list, repr=False)
    profile_lam: np.ndarray | None = field(default=None, repr=False)
    profile_hat: np.ndarray | None = field(default=None, repr=False)

    @property
    def grid(self) -> Grid:
        return self.base.grid

    @property
    def bits(self) -> int:
        """Number of hypercube coordinates, one per mesh point."""
        return len(self.mesh)

    @property
    def scale(self) -> float:
        return self.h_n**self.alpha


def _spectral_profile(h: float, d: int, n_r: int = 400, n_lambda: int = 1200):
    """Unit kernel rescaled in frequency by ``h^d``, as a radial table.

    Returns ``(r, values, lam, rescaled_transform)``.
    """
    unit = RadialProfile.from_function(lambda r: bump_profile(r, 1.0), 1.0, 1500)
    scale = h**d
    lam_max = SPECTRAL_KERNEL_LAMBDA / scale
    dlam = lam_max / n_lambda
    lam = dlam * (np.arange(n_lambda) + 0.5)
    hat = spherical_transform(unit, scale * lam)
    r_cut = 1.25 * scale
    r = np.linspace(0.0, r_cut, n_r)
    # even in lam: fold the negative half onto the positive one
    vals = 2 * radial_inverse(hat, lam, dlam, np.maximum(r, 1e-12))
    return r, vals, lam, hat


def build_family(
    n: int,
    alpha: float = 1.0,
    mode: str = "spatial",
    amplitude: float | None = None,
    base: GridDensity | None = None,
    points_per_radius: float = 10.0,
    truth=None,
) -> AssouadFamily:
    """Perturbed family around ``base``.

    Without ``base``, ``truth`` (a function of a grid, B1 by default) is
    evaluated on a grid refined around the mesh.
    """
    if mode not in ("spatial", "spectral"):
        raise ValueError(f"unknown mode {mode!r}")
    mesh = build_mesh(n, alpha)
    h, r_n, _ = mesh_schedule(n, alpha)
    d = DIMENSION
    prof_lam = prof_hat = None
    if mode == "spatial":
        radius = h / 2
        feature = radius
    else:
        r_tab, k_tab, prof_lam, prof_hat = _spectral_profile(h, d)
        radius = float(r_tab[-1])
        feature = h**d
    if base is None:
        base = (truth or base_density)(family_grid(mesh, radius, points_per_radius * radius / feature))
    grid = base.grid

    shapes = []
    for p in mesh.points:
        idx, dist = grid.nodes_within(p, radius)
        if mode == "spatial":
            vals = _matched_bump(dist, grid.weights.ravel()[idx], radius)
        else:
            vals = np.interp(dist, r_tab, k_tab)
        shapes.append((idx, vals))

    peak = max((np.abs(v).max() for _, v in shapes if v.size), default=0.0)
    region = np.concatenate([idx for idx, _ in shapes]) if shapes else np.empty(0, int)
    margin = float(base.values.ravel()[region].min()) if region.size else 0.0
    if amplitude is None:
        if mode == "spatial":
            X, Y = grid.mesh
            ball = distance(X, Y, BASE_POINT.x, BASE_POINT.y) <= POSITIVITY_RADIUS
            amplitude = 0.5 * float(base.values[ball].min()) / max(peak, 1e-300)
        else:
            amplitude = 0.5 * margin / max(h**alpha * peak, 1e-300)
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    needed = h**alpha * amplitude * peak
    if needed > margin:
        raise PositivityViolation(
            f"perturbations reach {needed:.3g} but the base density is only {margin:.3g} on their supports",
            reduction=margin / needed,
        )
    supports = [(idx, amplitude * vals) for idx, vals in shapes]
    kernel = bump_kernel(1.0)
    return AssouadFamily(
        base=base, kernel=kernel, n=n, alpha=alpha, mesh=mesh, h_n=h, r_n=r_n, mode=mode,
        amplitude=float(amplitude), radius=radius, d=d, supports=supports,
        profile_lam=prof_lam, profile_hat=prof_hat,
    )


def perturbation(j: int, fam: AssouadFamily) -> GridDensity:
    """Bump number ``j`` (1-based), without the ``h_n^alpha`` factor."""
    if not 1 <= j <= fam.bits:
        raise IndexOutOfRange(f"perturbation index {j} outside 1..{fam.bits}")
    idx, vals = fam.supports[j - 1]
    out = np.zeros(fam.grid.size)
    out[idx] = vals
    return GridDensity(fam.grid, out.reshape(fam.grid.shape))


def _theta_array(fam: AssouadFamily, theta) -> np.ndarray:
    bits = theta.as_array() if isinstance(theta, BitVector) else np.asarray(theta, dtype=int)
    if bits.shape != (fam.bits,):
        raise LengthMismatch(f"theta has length {bits.size}, the family has {fam.bits} coordinates")
    return bits


def perturbed_density(fam: AssouadFamily, theta) -> GridDensity:
    bits = _theta_array(fam, theta)
    if not bits.any():
        return fam.base
    out = fam.base.values.ravel().copy()
    for bit, (idx, vals) in zip(bits, fam.supports):
        if bit:
            out[idx] += fam.scale * vals
    f = GridDensity(fam.grid, out.reshape(fam.grid.shape))
    if fam.mode == "spectral":
        f = f * (1.0 / integrate(f))
    if f.values.min() < -1e-12:
        worst = -f.values.min()
        raise PositivityViolation(f"f_theta reaches {-worst:.3g}", reduction=0.5)
    return f


def _random_pairs(fam: AssouadFamily, pairs: int, rng: np.random.Generator):
    r = fam.bits
    out = []
    for _ in range(pairs):
        theta = rng.integers(0, 2, r)
        flips = rng.choice(r, size=int(rng.integers(0, r + 1)), replace=False)
        other = theta.copy()
        other[flips] ^= 1
        out.append((theta, other))
    return out


def _sq_distance(fam, theta, other):
    return l2_distance(perturbed_density(fam, theta), perturbed_density(fam, other)) ** 2


def separation_check(fam: AssouadFamily, pairs: int = 50, seed: int = 0) -> dict:
    """Regress squared L2 separation on Hamming distance over random pairs."""
    if pairs < 2:
        raise ValueError("need at least two pairs")
    rng = np.random.default_rng(seed)
    ham, sq, predicted = [], [], []
    norms = np.array([np.sum(vals**2 * fam.grid.weights.ravel()[idx]) for idx, vals in fam.supports])
    for theta, other in _random_pairs(fam, pairs, rng):
        ham.append(hamming(theta, other))
        sq.append(_sq_distance(fam, theta, other))
        predicted.append(fam.scale**2 * float(np.sum(norms[theta != other])))
    ham = np.array(ham, dtype=float)
    sq = np.array(sq)
    if np.ptp(ham) > 0:
        slope, intercept = np.polyfit(ham, sq, 1)
        corr = float(np.corrcoef(ham, sq)[0, 1]) if np.ptp(sq) > 0 else float("nan")
    else:
        slope, intercept, corr = float("nan"), float("nan"), float("nan")
    pred = np.array(predicted)
    nz = pred > 0
    additivity = float(np.max(np.abs(sq[nz] - pred[nz]) / pred[nz])) if nz.any() else 0.0
    return {
        "n": fam.n, "alpha": fam.alpha, "mode": fam.mode, "h_n": fam.h_n, "r_n": fam.r_n,
        "bits": fam.bits, "pairs": pairs, "slope": float(slope), "intercept": float(intercept),
        "correlation": corr, "C_times_n": float(slope) * fam.n,
        "additivity_error": additivity,
        "norm_spread": float(np.ptp(norms) / norms.mean()) if norms.mean() > 0 else 0.0,
        "hamming": ham.astype(int).tolist(), "sq_distance": sq.tolist(),
    }


def perturbation_sobolev_norm(fam: AssouadFamily, alpha: float | None = None) -> float:
    """||Delta^(alpha/2) p_j||_2, the same for every j by isometry invariance."""
    alpha = fam.alpha if alpha is None else alpha
    if fam.mode == "spatial":
        prof = RadialProfile.from_function(lambda r: fam.amplitude * bump_profile(r, fam.radius), fam.radius, 400)
        return radial_sobolev_norm(prof, alpha, lambda_max=SPECTRAL_KERNEL_LAMBDA / fam.radius, n_lambda=1200)
    lam, hat = fam.profile_lam, fam.profile_hat
    dlam = lam[1] - lam[0]
    from .helgason import plancherel_density

    val = 2 * dlam * np.sum(laplacian_multiplier(lam, alpha) ** 2 * hat**2 * plancherel_density(lam))
    return fam.amplitude * float(np.sqrt(val))


def sobolev_family_check(fam: AssouadFamily, theta, Q: float, template=None, base_norm: float | None = None) -> dict:
    """Sobolev norm of ``f_theta`` against its triangle-inequality budget."""
    bits = _theta_array(fam, theta)
    if base_norm is None:
        base_norm = sobolev_norm(fam.base, fam.alpha, template)
    fam_norm = base_norm if not bits.any() else sobolev_norm(perturbed_density(fam, bits), fam.alpha, template)
    pnorm = perturbation_sobolev_norm(fam)
    budget_term = fam.scale * int(bits.sum()) * pnorm
    budget = base_norm + budget_term
    # same fraction of active bumps at 4n; the bump norm scales with its radius
    h4, _, m4 = mesh_schedule(4 * fam.n, fam.alpha)
    ones4 = int(np.ceil(bits.mean() * m4 * m4)) if bits.size else 0
    if fam.mode == "spatial":
        prof4 = RadialProfile.from_function(lambda r: fam.amplitude * bump_profile(r, h4 / 2), h4 / 2, 400)
        pnorm4 = radial_sobolev_norm(prof4, fam.alpha, lambda_max=SPECTRAL_KERNEL_LAMBDA / (h4 / 2), n_lambda=1200)
    else:
        pnorm4 = float("nan")
    budget4 = base_norm + h4**fam.alpha * ones4 * pnorm4
    ratio = budget4 / budget if budget > 0 else float("nan")
    return {
        "n": fam.n, "alpha": fam.alpha, "mode": fam.mode, "theta": "".join(map(str, bits)),
        "Q": Q, "base_norm": base_norm, "family_norm": fam_norm,
        "perturbation_norm": pnorm, "budget_term": budget_term, "budget": budget,
        "family_in_ball": bool(fam_norm <= Q), "budget_in_ball": bool(budget <= Q),
        "budget_at_4n": budget4, "budget_ratio_4n": ratio,
        "bounded_within_2x": bool(np.isfinite(ratio) and 0.5 <= ratio <= 2.0),
    }


def assouad_rhs(fam: AssouadFamily, estimator_metric_power: int = 2, pairs: int = 20, seed: int = 0) -> dict:
    """Right-hand side of Assouad's bound divided by ``2^p``.

    Separation is the minimum of ``||f_theta - f_theta'||^2 / H`` over all
    single flips from theta = 0 plus random pairs; the affinity factor uses
    the largest squared Hellinger distance seen over single flips.
    """
    p = estimator_metric_power
    if p != 2:
        raise NotImplementedError("only the squared L2 metric is wired")
    r = fam.bits
    rng = np.random.default_rng(seed)
    zero = np.zeros(r, dtype=int)
    base = perturbed_density(fam, zero)
    sep, h2s, aff, l1s = [], [], [], []
    for j in range(r):
        e = zero.copy()
        e[j] = 1
        fj = perturbed_density(fam, e)
        sep.append(l2_distance(base, fj) ** 2)
        h2s.append(hellinger_sq(base, fj))
        aff.append(variation_min(base, fj))
        l1s.append(l1_distance(base, fj))
    for theta, other in _random_pairs(fam, pairs, rng):
        H = hamming(theta, other)
        if H == 0:
            continue
        sep.append(_sq_distance(fam, theta, other) / H)
        if H == 1:
            a, b = perturbed_density(fam, theta), perturbed_density(fam, other)
            h2s.append(hellinger_sq(a, b))
            aff.append(variation_min(a, b))
            l1s.append(l1_distance(a, b))
    sep_min = float(min(sep)) if sep else 0.0
    h2_max = float(max(h2s)) if h2s else 0.0
    affinity = product_variation_lb(min(h2_max, 2.0), fam.n)
    rhs = sep_min * (r / 2.0) * affinity / 2**p
    return {
        "n": fam.n, "alpha": fam.alpha, "mode": fam.mode, "h_n": fam.h_n,
        "r_n": fam.r_n, "bits": r, "p": p, "separation_min": sep_min,
        "hellinger_sq_max": h2_max, "variation_lb": affinity,
        "single_draw_variation_min": float(min(aff)) if aff else 1.0,
        "single_draw_l1_max": float(max(l1s)) if l1s else 0.0,
        "rhs": float(rhs), "amplitude": fam.amplitude,
    }
