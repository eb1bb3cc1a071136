"""Densities sampled on tensor grids, and the functionals used by the bounds.

A :class:`Grid` is a tensor product of cells in ``x`` and ``t = log y``. Nodes
sit at cell midpoints and carry the weight ``dx * dt / y``, which is the
midpoint rule for the hyperbolic area element ``dx dy / y^2``. Cells may have
different widths, so a grid can be refined locally while staying rectangular.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatch, LengthMismatch, NegativeDensity, RejectionStall
from .geometry import HPoint, distance

# standard rectangle [-3, 3] x [e^-3, e^3]
STD_X = (-3.0, 3.0)
STD_Y = (float(np.exp(-3.0)), float(np.exp(3.0)))
STD_N = 256
B1_SIGMA = 0.5


def _segment_edges(a, b, width):
    n = max(1, int(np.ceil((b - a) / width - 1e-9)))
    return np.linspace(a, b, n + 1)


def _join_edges(breaks, widths):
    parts = [_segment_edges(breaks[k], breaks[k + 1], widths[k]) for k in range(len(widths))]
    return np.concatenate([parts[0]] + [p[1:] for p in parts[1:]])


@dataclass(frozen=True, eq=False)
class Grid:
    x_edges: np.ndarray
    t_edges: np.ndarray

    def __post_init__(self):
        for e in (self.x_edges, self.t_edges):
            if e.ndim != 1 or len(e) < 2 or np.any(np.diff(e) <= 0):
                raise ValueError("cell edges must be strictly increasing")

    @classmethod
    def uniform(cls, x_min, x_max, y_min, y_max, nx, ny) -> "Grid":
        if y_min <= 0:
            raise ValueError("y_min must be positive")
        return cls(np.linspace(x_min, x_max, nx + 1), np.linspace(np.log(y_min), np.log(y_max), ny + 1))

    @classmethod
    def standard(cls, n: int = STD_N) -> "Grid":
        return cls.uniform(*STD_X, *STD_Y, n, n)

    @classmethod
    def refined(cls, x_range, y_range, coarse, box, fine) -> "Grid":
        """Rectangle with coarse cells outside ``box`` and fine cells inside.

        ``coarse`` and ``fine`` are ``(dx, dt)`` pairs; ``box`` is
        ``(x0, x1, y0, y1)`` and is clipped to the rectangle.
        """
        x0, x1 = x_range
        t0, t1 = np.log(y_range[0]), np.log(y_range[1])
        bx0, bx1 = max(box[0], x0), min(box[1], x1)
        bt0, bt1 = max(np.log(box[2]), t0), min(np.log(box[3]), t1)
        xe = _join_edges([x0, bx0, bx1, x1], [coarse[0], fine[0], coarse[0]])
        te = _join_edges([t0, bt0, bt1, t1], [coarse[1], fine[1], coarse[1]])
        return cls(np.unique(xe), np.unique(te))

    @property
    def nx(self) -> int:
        return len(self.x_edges) - 1

    @property
    def ny(self) -> int:
        return len(self.t_edges) - 1

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x_min(self):
        return float(self.x_edges[0])

    @property
    def x_max(self):
        return float(self.x_edges[-1])

    @property
    def y_min(self):
        return float(np.exp(self.t_edges[0]))

    @property
    def y_max(self):
        return float(np.exp(self.t_edges[-1]))

    @cached_property
    def xs(self) -> np.ndarray:
        return 0.5 * (self.x_edges[1:] + self.x_edges[:-1])

    @cached_property
    def ts(self) -> np.ndarray:
        return 0.5 * (self.t_edges[1:] + self.t_edges[:-1])

    @cached_property
    def ys(self) -> np.ndarray:
        return np.exp(self.ts)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.outer(np.diff(self.x_edges), np.diff(self.t_edges) / self.ys)

    @cached_property
    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def locate(self, x, y):
        """Cell indices ``(i, j)`` of points; -1 when outside the rectangle."""
        t = np.log(y)
        i = np.searchsorted(self.x_edges, x, side="right") - 1
        j = np.searchsorted(self.t_edges, t, side="right") - 1
        inside = (i >= 0) & (i < self.nx) & (j >= 0) & (j < self.ny)
        return np.where(inside, i, -1), np.where(inside, j, -1)

    def same_as(self, other: "Grid") -> bool:
        if self is other:
            return True
        return (
            self.x_edges.shape == other.x_edges.shape
            and self.t_edges.shape == other.t_edges.shape
            and np.array_equal(self.x_edges, other.x_edges)
            and np.array_equal(self.t_edges, other.t_edges)
        )

    def nodes_within(self, center: HPoint, radius: float):
        """Flat indices and distances of nodes within ``radius`` of ``center``."""
        # the hyperbolic disk is a Euclidean disk: centre (x, y cosh r), radius y sinh r
        ex = center.y * np.sinh(radius)
        il = np.searchsorted(self.xs, center.x - ex, side="left")
        ir = np.searchsorted(self.xs, center.x + ex, side="right")
        jl = np.searchsorted(self.ts, np.log(center.y) - radius, side="left")
        jr = np.searchsorted(self.ts, np.log(center.y) + radius, side="right")
        ii, jj = np.meshgrid(np.arange(il, ir), np.arange(jl, jr), indexing="ij")
        r = distance(self.xs[ii], self.ys[jj], center.x, center.y)
        keep = r < radius
        flat = np.ravel_multi_index((ii[keep], jj[keep]), self.shape)
        return flat, r[keep]


@dataclass(frozen=True, eq=False)
class GridDensity:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @classmethod
    def zeros(cls, grid: Grid) -> "GridDensity":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "GridDensity":
        """Sample ``func(x, y)`` at the grid nodes."""
        X, Y = grid.mesh
        return cls(grid, func(X, Y))

    def with_values(self, values) -> "GridDensity":
        return GridDensity(self.grid, values)

    def normalized(self) -> "GridDensity":
        return self.with_values(self.values / integrate(self))

    def __add__(self, other):
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def evaluate(self, x, y):
        """Piecewise-constant evaluation: each cell takes its node value."""
        i, j = self.grid.locate(x, y)
        out = np.zeros(np.shape(i))
        ok = i >= 0
        out[ok] = self.values[i[ok], j[ok]]
        return out


@dataclass(frozen=True)
class BitVector:
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bit vectors hold only 0 and 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        s = s.strip()
        if not s or any(ch not in "01" for ch in s):
            raise ValueError(f"not a bit string: {s!r}")
        return cls(tuple(int(ch) for ch in s))

    @classmethod
    def zeros(cls, r: int) -> "BitVector":
        return cls((0,) * r)

    @classmethod
    def ones(cls, r: int) -> "BitVector":
        return cls((1,) * r)

    @classmethod
    def one_hot(cls, r: int, j: int) -> "BitVector":
        bits = [0] * r
        bits[j] = 1
        return cls(tuple(bits))

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=int)

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True, eq=False)
class SampleSet:
    x: np.ndarray
    y: np.ndarray
    seed: int | None = None

    def __len__(self):
        return len(self.x)

    @property
    def points(self):
        return [HPoint(float(a), float(b)) for a, b in zip(self.x, self.y)]


def _check_same(f: GridDensity, g: GridDensity):
    if not f.grid.same_as(g.grid):
        raise GridMismatch("densities live on different grids")


def _check_nonnegative(*fs, tol=1e-12):
    for f in fs:
        if f.values.min() < -tol:
            raise NegativeDensity(f"density takes value {f.values.min():.3g} < 0")


def integrate(f: GridDensity) -> float:
    return float(np.sum(f.values * f.grid.weights))


def inner(f: GridDensity, g: GridDensity) -> float:
    _check_same(f, g)
    return float(np.sum(f.values * g.values * f.grid.weights))


def l2_norm(f: GridDensity) -> float:
    return float(np.sqrt(np.sum(f.values**2 * f.grid.weights)))


def l2_distance(f: GridDensity, g: GridDensity) -> float:
    _check_same(f, g)
    return float(np.sqrt(np.sum((f.values - g.values) ** 2 * f.grid.weights)))


def l1_distance(f: GridDensity, g: GridDensity) -> float:
    _check_same(f, g)
    return float(np.sum(np.abs(f.values - g.values) * f.grid.weights))


def hamming(u, v) -> int:
    a = u.as_array() if isinstance(u, BitVector) else np.asarray(u, dtype=int)
    b = v.as_array() if isinstance(v, BitVector) else np.asarray(v, dtype=int)
    if a.shape != b.shape:
        raise LengthMismatch(f"bit vectors of lengths {a.size} and {b.size}")
    return int(np.sum(np.abs(a - b)))


def hellinger_sq(p: GridDensity, q: GridDensity) -> float:
    """Squared Hellinger distance, integral of (sqrt p - sqrt q)^2."""
    _check_same(p, q)
    _check_nonnegative(p, q)
    sp = np.sqrt(np.clip(p.values, 0.0, None))
    sq = np.sqrt(np.clip(q.values, 0.0, None))
    return float(np.sum((sp - sq) ** 2 * p.grid.weights))


def variation_min(p: GridDensity, q: GridDensity) -> float:
    """Affinity: integral of min(p, q)."""
    _check_same(p, q)
    _check_nonnegative(p, q)
    return float(np.sum(np.minimum(p.values, q.values) * p.grid.weights))


def product_variation_lb(h2: float, n: int) -> float:
    """Lower bound 0.5 (1 - h2/2)^(2n) on the affinity of n-fold products."""
    if not 0.0 <= h2 <= 2.0 + 1e-12 or n < 1:
        raise ValueError("need 0 <= h2 <= 2 and n >= 1")
    return 0.5 * max(0.0, 1.0 - 0.5 * h2) ** (2 * n)


def radial_density(grid: Grid, center: HPoint, sigma: float, normalize=True) -> GridDensity:
    """Gaussian in hyperbolic distance from ``center``, truncated to the grid."""
    f = GridDensity.from_function(grid, lambda X, Y: np.exp(-distance(X, Y, center.x, center.y) ** 2 / (2 * sigma**2)))
    return f.normalized() if normalize else f


def base_density(grid: Grid | None = None) -> GridDensity:
    """The B1 fixture: sigma = 0.5 hyperbolic Gaussian about i, normalized."""
    return radial_density(Grid.standard() if grid is None else grid, HPoint(0.0, 1.0), B1_SIGMA)


def boundary_density(grid: Grid | None = None) -> GridDensity:
    """Gaussian envelope times ``log(1 + 1/r)`` about i, normalized.

    The logarithmic singularity puts it on the edge of the order-1 Sobolev
    class: its transform decays like ``|lam|^-2``, so the spectral tail beyond
    a cutoff ``T`` carries ``~ T^-2`` of squared norm. Rate experiments at
    ``alpha = 1`` see the bias and variance shrink at the same speed.
    """
    grid = Grid.standard() if grid is None else grid

    def func(X, Y):
        r = np.maximum(distance(X, Y, 0.0, 1.0), 1e-12)
        return np.exp(-r**2 / (2 * B1_SIGMA**2)) * np.log1p(1.0 / r)

    return GridDensity.from_function(grid, func).normalized()


FIXTURES = {"b1": base_density, "boundary": boundary_density}


def sample(f: GridDensity, n: int, seed: int | np.random.SeedSequence, batch: int = 1 << 16) -> SampleSet:
    """Draw ``n`` i.i.d. points from ``f`` by rejection.

    Proposals are uniform in ``(x, log y)`` over the rectangle. In those
    coordinates the target density is ``f / y``, constant on each cell, so the
    accepted points reproduce the cell masses ``values * weights`` exactly.
    """
    grid = f.grid
    if f.values.min() < -1e-12:
        raise NegativeDensity("cannot sample a signed density")
    seed_val = seed if isinstance(seed, (int, np.integer)) else None
    if n == 0:
        return SampleSet(np.empty(0), np.empty(0), seed_val)
    rng = np.random.default_rng(seed)
    target = np.clip(f.values, 0.0, None) / grid.ys[None, :]
    top = target.max()
    if top <= 0:
        raise RejectionStall("density is identically zero")
    xs, ts = [], []
    have = proposed = 0
    while have < n:
        px = rng.uniform(grid.x_min, grid.x_max, batch)
        pt = rng.uniform(grid.t_edges[0], grid.t_edges[-1], batch)
        i = np.clip(np.searchsorted(grid.x_edges, px, side="right") - 1, 0, grid.nx - 1)
        j = np.clip(np.searchsorted(grid.t_edges, pt, side="right") - 1, 0, grid.ny - 1)
        keep = rng.uniform(0.0, top, batch) < target[i, j]
        xs.append(px[keep])
        ts.append(pt[keep])
        have += int(keep.sum())
        proposed += batch
        if proposed >= 10 * batch and have / proposed < 1e-4:
            raise RejectionStall(f"acceptance rate {have / proposed:.2e} below 1e-4")
    x = np.concatenate(xs)[:n]
    y = np.exp(np.concatenate(ts)[:n])
    return SampleSet(x, y, seed_val)


# --- CSV serialization -----------------------------------------------------

GRID_HEADER = ["x", "y", "value", "weight"]


def density_to_csv(f: GridDensity) -> str:
    X, Y = f.grid.mesh
    buf = io.StringIO()
    buf.write(",".join(GRID_HEADER) + "\n")
    rows = np.column_stack([X.ravel(), Y.ravel(), f.values.ravel(), f.grid.weights.ravel()])
    for row in rows:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def write_density_csv(f: GridDensity, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(density_to_csv(f))


def _edges_from_centers(centers, widths):
    return np.concatenate([[centers[0] - widths[0] / 2], centers + widths / 2])


def read_density_csv(path) -> GridDensity:
    """Read a grid written by :func:`write_density_csv`.

    Cell widths are recovered from the weights: ``w_ij y_j = dx_i dt_j`` is
    rank one, and contiguity of the first two x cells fixes the scale.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != GRID_HEADER:
            raise ValueError(f"{path}: expected header {','.join(GRID_HEADER)}")
        try:
            data = np.array([[float(v) for v in row] for row in reader if row])
        except ValueError as exc:
            raise ValueError(f"{path}: malformed row ({exc})") from None
    if data.ndim != 2 or data.shape[1] != 4:
        raise ValueError(f"{path}: expected four columns")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = len(xs), len(ys)
    if nx * ny != len(data) or nx < 2 or ny < 2:
        raise ValueError(f"{path}: nodes do not form a tensor grid")
    values = data[:, 2].reshape(nx, ny)
    w = data[:, 3].reshape(nx, ny)
    if not (np.allclose(data[:, 0].reshape(nx, ny), xs[:, None]) and np.allclose(data[:, 1].reshape(nx, ny), ys[None, :])):
        raise ValueError(f"{path}: rows are not in row-major grid order")
    prod = w * ys[None, :]
    cx = prod[:, 0] / prod[0, 0]
    dx0 = 2 * (xs[1] - xs[0]) / (cx[0] + cx[1])
    dx = cx * dx0
    dt = prod[0, :] / dx[0]
    grid = Grid(_edges_from_centers(xs, dx), _edges_from_centers(np.log(ys), dt))
    return GridDensity(grid, values)
