"""Geometry of the Poincare half-plane.

Points are stored in half-plane coordinates ``(x, y)`` with ``y > 0``. The
base point is ``i = (0, 1)``. Isometries are elements of SL(2, R) acting by
Mobius transformations. Every function that takes coordinates also accepts
numpy arrays and broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidPoint, MeshTooSmall, NotInSL2

DIMENSION = 2
SL2_TOL = 1e-12


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)) or self.y <= 0:
            raise InvalidPoint(f"not a point of the half-plane: ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(float(z.real), float(z.imag))


BASE_POINT = HPoint(0.0, 1.0)


@dataclass(frozen=True)
class MobiusMap:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > SL2_TOL:
            raise NotInSL2(f"determinant {det!r} differs from 1")

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, phi: float) -> "MobiusMap":
        """Elliptic element fixing i; its differential at i rotates by -2*phi."""
        c, s = np.cos(phi), np.sin(phi)
        return cls(c, -s, s, c)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        m = self.matrix @ other.matrix
        return MobiusMap(*m.ravel())

    def apply_xy(self, x, y):
        """Vectorized action on coordinate arrays."""
        z = np.asarray(x) + 1j * np.asarray(y)
        w = (self.a * z + self.b) / (self.c * z + self.d)
        return w.real, w.imag


@dataclass(frozen=True)
class TangentVector:
    v1: float
    v2: float

    def __post_init__(self):
        if not (np.isfinite(self.v1) and np.isfinite(self.v2)):
            raise ValueError("tangent vector must be finite")

    @property
    def norm(self) -> float:
        return float(np.hypot(self.v1, self.v2))

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2])


@dataclass(frozen=True)
class Mesh:
    points: tuple
    width: float
    per_axis: int
    tangents: tuple = ()

    def __len__(self):
        return len(self.points)

    @property
    def xs(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def ys(self) -> np.ndarray:
        return np.array([p.y for p in self.points])


def distance(x1, y1, x2, y2):
    """Hyperbolic distance between coordinate arrays (broadcasting)."""
    x1, y1, x2, y2 = (np.asarray(a, dtype=float) for a in (x1, y1, x2, y2))
    # arccosh(1 + u) = log1p(u + sqrt(u (u + 2))) keeps precision near u = 0
    u = ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (2.0 * y1 * y2)
    return np.log1p(u + np.sqrt(u * (u + 2.0)))


def hyperbolic_distance(p: HPoint, q: HPoint) -> float:
    return float(distance(p.x, p.y, q.x, q.y))


def mobius_apply(m: MobiusMap, p: HPoint) -> HPoint:
    x, y = m.apply_xy(p.x, p.y)
    return HPoint(float(x), float(y))


def recentering_isometry(p: HPoint) -> MobiusMap:
    """The map z -> (z - x) / y, which sends p to the base point.

    Continuous in p; its inverse is z -> y z + x.
    """
    s = np.sqrt(p.y)
    return MobiusMap(1.0 / s, -p.x / s, 0.0, s)


def exp_xy(v1, v2):
    """Exponential map at i, vectorized over tangent coordinates.

    The geodesic t -> i e^t has unit initial velocity (0, 1); a unit vector u
    is reached by the rotation about i whose differential carries i to u.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    t = np.hypot(v1, v2)
    # k_phi'(i) = e^{-2 i phi}, so we need e^{-2 i phi} = (v1 + i v2) / (i t)
    phi = 0.5 * (0.5 * np.pi - np.arctan2(v2, v1))
    c, s = np.cos(phi), np.sin(phi)
    z = 1j * np.exp(t)
    w = (c * z - s) / (s * z + c)
    return w.real, w.imag


def exp_map(v: TangentVector) -> HPoint:
    x, y = exp_xy(v.v1, v.v2)
    return HPoint(float(x), float(y))


def mesh_schedule(n: int, alpha: float, d: int = DIMENSION):
    """Return ``(h_n, r_n, m)`` for sample size ``n``.

    ``h_n = n^(-1/(2 alpha + d))``, ``r_n = floor(n^(d/(2 alpha + d)))`` and
    ``m = floor(n^(1/(2 alpha + d)))`` nodes per axis.
    """
    expo = 1.0 / (2.0 * alpha + d)
    h = float(n) ** (-expo)
    # small guard so exact powers like 16^(1/4) do not floor to 1
    r = int(np.floor(float(n) ** (d * expo) * (1 + 1e-12)))
    m = int(np.floor(float(n) ** expo * (1 + 1e-12)))
    return h, r, m


def build_mesh(n: int, alpha: float) -> Mesh:
    if n < 2 or alpha <= 0:
        raise ValueError("build_mesh requires n >= 2 and alpha > 0")
    h, _, m = mesh_schedule(n, alpha)
    if m < 1:
        raise MeshTooSmall(f"n={n}, alpha={alpha} gives no mesh nodes")
    centers = -0.5 + (np.arange(m) + 0.5) / m
    v1, v2 = np.meshgrid(centers, centers, indexing="ij")
    x, y = exp_xy(v1.ravel(), v2.ravel())
    points = tuple(HPoint(float(a), float(b)) for a, b in zip(x, y))
    tangents = tuple(TangentVector(float(a), float(b)) for a, b in zip(v1.ravel(), v2.ravel()))
    return Mesh(points=points, width=h, per_axis=m, tangents=tangents)


def min_pairwise_distance(mesh: Mesh) -> float:
    if len(mesh) < 2:
        return np.inf
    xs, ys = mesh.xs, mesh.ys
    dist = distance(xs[:, None], ys[:, None], xs[None, :], ys[None, :])
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())
