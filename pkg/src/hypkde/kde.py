"""Spectral-cutoff kernel density estimator on the half-plane.

The estimate is the inverse transform of::

    1{|lam| <= T} * K(h lam, phi) * (1/n) sum_j Im(k_phi X_j)^(1/2 + i lam)

The empirical transform is the forward transform of the empirical measure,
so it is unbiased for ``hf_forward(f)`` node by node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySample
from .geometry import DIMENSION
from .helgason import SpectralGrid, hf_inverse, transform_points
from .measures import Grid, GridDensity, SampleSet, integrate
from .spectral import bandwidth_rescale


def default_kernel(template: SpectralGrid | None = None) -> SpectralGrid:
    """Transform exp(-lam^2), the same for every phi."""
    template = SpectralGrid.template() if template is None else template
    col = np.exp(-template.lam**2)
    return template.with_values(np.repeat(col[:, None], template.n_phi, axis=1))


@dataclass(frozen=True, eq=False)
class KdeConfig:
    h: float
    T: float
    kernel: SpectralGrid

    def __post_init__(self):
        if self.h <= 0 or self.T <= 0:
            raise ValueError("bandwidth and cutoff must be positive")


def schedule(n: int, alpha: float, d: int = DIMENSION):
    """Bandwidth ``n^(-1/(2 alpha + d))`` and cutoff ``1/h``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    h = float(n) ** (-1.0 / (2.0 * alpha + d))
    return h, 1.0 / h


def scheduled_config(n: int, alpha: float, kernel: SpectralGrid | None = None) -> KdeConfig:
    h, T = schedule(n, alpha)
    return KdeConfig(h, T, default_kernel() if kernel is None else kernel)


def empirical_hf(samples: SampleSet, template: SpectralGrid, cutoff: float | None = None) -> SpectralGrid:
    """Average transform kernel over the samples.

    With ``cutoff`` set, nodes with ``|lam| > cutoff`` are left at zero and
    not computed.
    """
    n = len(samples)
    if n == 0:
        raise EmptySample("empirical transform of an empty sample")
    if cutoff is None or cutoff >= template.lambda_max:
        values = transform_points(samples.x, samples.y, np.full(n, 1.0 / n), template)
        return template.with_values(values)
    keep = int(np.ceil(cutoff / template.dlam)) + 1
    keep = min(keep, template.n_lambda // 2)
    half = template.n_lambda // 2
    sub = SpectralGrid(keep * template.dlam, 2 * keep, template.n_phi, np.zeros((2 * keep, template.n_phi)), template.c0)
    inner = transform_points(samples.x, samples.y, np.full(n, 1.0 / n), sub)
    values = np.zeros((template.n_lambda, template.n_phi), complex)
    values[half - keep:half + keep] = inner
    values[np.abs(template.lam) > cutoff] = 0.0
    return template.with_values(values)


def estimate(samples: SampleSet, cfg: KdeConfig, grid: Grid | None = None) -> GridDensity:
    """Signed estimate on ``grid`` (the standard grid by default)."""
    grid = Grid.standard() if grid is None else grid
    tmpl = cfg.kernel
    mask = (np.abs(tmpl.lam) <= cfg.T)[:, None]
    if not mask.any() or len(samples) == 0:
        return GridDensity.zeros(grid)
    scaled = bandwidth_rescale(cfg.kernel, cfg.h)
    emp = empirical_hf(samples, tmpl, cutoff=cfg.T)
    F = tmpl.with_values(mask * scaled.values * emp.values)
    return hf_inverse(F, grid)


def clipped(f: GridDensity) -> GridDensity:
    """Positive part renormalized to unit mass."""
    g = f.with_values(np.clip(f.values, 0.0, None))
    mass = integrate(g)
    return g if mass <= 0 else g * (1.0 / mass)
