"""Disk, boundary, incidence directions, crack catalog and sampling grids.

The measurement domain is always the unit disk.  Cracks are unions of
smooth open arcs; each arc is a parametric map over a native parameter
interval.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

_CS_STEP = 1e-30


@dataclass(frozen=True)
class CrackPiece:
    """One open arc ``t -> func(t)`` for ``t`` in ``[t0, t1]``.

    ``func`` maps an array of parameters to an array of shape ``(..., 2)``.
    ``dfunc`` is the parametric derivative; when omitted it is computed by
    complex-step differentiation, which requires ``func`` to be analytic and
    to accept complex input.
    """

    func: object
    t0: float
    t1: float
    dfunc: object = None

    def points(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)

    def tangent(self, t):
        t = np.asarray(t, dtype=float)
        if self.dfunc is not None:
            return np.asarray(self.dfunc(t), dtype=float)
        return np.imag(self.func(t + 1j * _CS_STEP)) / _CS_STEP

    def sample(self, n):
        return self.points(np.linspace(self.t0, self.t1, n))


@dataclass(frozen=True)
class CrackCurve:
    pieces: tuple
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.pieces)

    def sample(self, n=2000):
        """Dense samples, one ``(n, 2)`` array per piece."""
        return [p.sample(n) for p in self.pieces]

    def max_radius(self, n=2000):
        return max(np.hypot(s[:, 0], s[:, 1]).max() for s in self.sample(n))


def _stack(x, y):
    return np.stack(np.broadcast_arrays(x, y), axis=-1)


def _c1(t):
    return _stack(0.6 * t,
                  0.5 * np.cos(t * np.pi / 2) + 0.2 * np.sin(t * np.pi / 2)
                  - 0.1 * np.cos(3 * t * np.pi / 2))


def _c2(t):
    return _stack(1.5 * np.sin((3 * t + 4) * np.pi / 8) - 1.0,
                  0.8 * np.sin((3 * t + 4) * np.pi / 4))


def _cm_upper(t):
    return _stack(t - 0.2, -0.5 * t ** 2 + 0.5)


def _cm_lower(t):
    return _stack(t + 0.2, t ** 3 + t ** 2 - 0.5)


def _c3_raw(t):
    return _stack(t + t ** 2, 0.5 * t ** 4 + t)


def _c4(t):
    return _stack(t, 0.5 * t ** 2 + 0.1 * np.sin(3 * np.pi * (t + 0.7)))


def _fit_affine(func, t0, t1, radius=0.9, n=20001):
    """Scale and shift that put the bounding-box centre of the arc at the
    origin and its farthest point at ``radius``."""
    pts = func(np.linspace(t0, t1, n))
    centre = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    reach = np.hypot(*(pts - centre).T).max()
    return radius / reach, centre


def _c3_piece():
    scale, centre = _fit_affine(_c3_raw, -1.0, 3.0)

    def func(t):
        return scale * (_c3_raw(t) - centre)

    return CrackPiece(func, -1.0, 3.0), {"c3_scale": float(scale),
                                         "c3_shift_x": float(-scale * centre[0]),
                                         "c3_shift_y": float(-scale * centre[1])}


def catalog_crack(name):
    """Return one of the named cracks ``C1``, ``C2``, ``CM``, ``C3``, ``C4``."""
    key = name.upper().replace("_", "")
    if key == "C1":
        return CrackCurve((CrackPiece(_c1, -1.0, 1.0),), "C1")
    if key == "C2":
        return CrackCurve((CrackPiece(_c2, -1.0, 1.0),), "C2")
    if key == "CM":
        return CrackCurve((CrackPiece(_cm_upper, -0.5, 0.5),
                           CrackPiece(_cm_lower, -0.5, 0.5)), "CM")
    if key == "C3":
        piece, meta = _c3_piece()
        return CrackCurve((piece,), "C3", meta)
    if key == "C4":
        return CrackCurve((CrackPiece(_c4, -0.6, 0.6),), "C4")
    raise KeyError(f"unknown crack {name!r}; expected one of {CATALOG}")


CATALOG = ("C1", "C2", "CM", "C3", "C4")


def truncate(curve, t0, t1, piece=0):
    """Copy of ``curve`` keeping only ``piece`` restricted to ``[t0, t1]``."""
    p = curve.pieces[piece]
    if not (p.t0 <= t0 < t1 <= p.t1):
        raise ValueError("truncation interval outside the piece's interval")
    return CrackCurve((CrackPiece(p.func, t0, t1, p.dfunc),),
                      f"{curve.name}[{t0:g},{t1:g}]", dict(curve.meta))


def segment_crack(a, b, name="segment"):
    """Straight crack from point ``a`` to point ``b``, parametrised on [0, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def func(t):
        t = np.asarray(t)
        return a + t[..., None] * (b - a)

    def dfunc(t):
        return np.broadcast_to(b - a, np.shape(t) + (2,)).copy()

    return CrackCurve((CrackPiece(func, 0.0, 1.0, dfunc),), name)


def polyline_piece(vertices):
    """Smooth arc through ``vertices`` (cubic spline in chord length)."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
        raise ValueError("a polyline piece needs at least two (x, y) vertices")
    chord = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(v, axis=0).T))])
    if np.any(np.diff(chord) <= 0):
        raise ValueError("polyline has repeated vertices")
    s = chord / chord[-1]
    if len(v) == 2:
        return segment_crack(v[0], v[1]).pieces[0]
    spline = CubicSpline(s, v, axis=0, bc_type="natural")
    deriv = spline.derivative()
    return CrackPiece(lambda t: spline(t), 0.0, 1.0, lambda t: deriv(t))


def load_polyline(path, name=None):
    """Read a crack from a text file of ``x y`` lines; blank lines separate
    pieces and ``#`` starts a comment."""
    path = Path(path)
    pieces, current = [], []
    for raw in path.read_text().splitlines() + [""]:
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current:
                pieces.append(polyline_piece(current))
                current = []
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: expected 'x y' per line, got {raw!r}")
        current.append([float(parts[0]), float(parts[1])])
    if not pieces:
        raise ValueError(f"{path}: no crack vertices found")
    return CrackCurve(tuple(pieces), name or path.stem)


def get_crack(spec):
    """Catalog name or path to a polyline file."""
    if spec.upper().replace("_", "") in CATALOG:
        return catalog_crack(spec)
    return load_polyline(spec)


def crack_point(curve, piece, t):
    return curve.pieces[piece].points(t)


def _segment_distances(points, a, b):
    """Distances from each point to the nearest of the segments a[i]-b[i]."""
    d = b - a
    len2 = np.einsum("ij,ij->i", d, d)
    len2 = np.where(len2 > 0, len2, 1.0)
    out = np.full(len(points), np.inf)
    chunk = max(1, 2_000_000 // max(len(a), 1))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk, None, :]
        u = np.clip(np.einsum("pij,ij->pi", p - a, d) / len2, 0.0, 1.0)
        diff = p - (a + u[..., None] * d)
        out[s:s + chunk] = np.sqrt(np.min(np.einsum("pij,pij->pi", diff, diff), axis=1))
    return out


def distance_to_crack(p, curve, samples=2000):
    """Euclidean distance from point(s) ``p`` to a polyline sample of the crack.

    Returns a scalar for a single point and an array for an ``(n, 2)`` array.
    """
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    a = np.concatenate([s[:-1] for s in curve.sample(samples)])
    b = np.concatenate([s[1:] for s in curve.sample(samples)])
    dist = _segment_distances(pts, a, b)
    return float(dist[0]) if single else dist


@dataclass(frozen=True)
class DirectionSet:
    directions: np.ndarray
    symmetric: bool

    def __len__(self):
        return len(self.directions)


def make_directions(M):
    """``M`` equi-angular unit vectors starting at (1, 0)."""
    if M < 1:
        raise ValueError("need at least one incident direction")
    ang = 2 * np.pi * np.arange(M) / M
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if M % 2 == 0:
        # exact antipodes
        dirs[M // 2:] = -dirs[:M // 2]
    return DirectionSet(dirs, M % 2 == 0)


def directions_from_vectors(vectors):
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    v = v / np.hypot(v[:, 0], v[:, 1])[:, None]
    M = len(v)
    sym = M % 2 == 0 and np.allclose(v[:M // 2], -v[M // 2:], atol=1e-12)
    return DirectionSet(v, bool(sym))


@dataclass(frozen=True)
class BoundaryGrid:
    angles: np.ndarray
    points: np.ndarray

    @property
    def normals(self):
        return self.points

    def __len__(self):
        return len(self.angles)


def make_boundary_grid(P=256):
    if P < 4:
        raise ValueError("need at least four boundary points")
    ang = 2 * np.pi * np.arange(P) / P
    return BoundaryGrid(ang, np.stack([np.cos(ang), np.sin(ang)], axis=1))


@dataclass(frozen=True)
class SamplingGrid:
    """``n x n`` lattice on [-1, 1]^2 keeping the points with ``|x| <= radius``."""

    n: int
    axis: np.ndarray
    mask: np.ndarray
    points: np.ndarray
    radius: float

    @property
    def spacing(self):
        return 2.0 / (self.n - 1)

    def __len__(self):
        return len(self.points)

    def to_image(self, values, fill=np.nan):
        img = np.full(self.mask.shape, fill, dtype=float)
        img[self.mask] = values
        return img


def make_sampling_grid(n=128, radius=0.95):
    if n < 2:
        raise ValueError("grid needs at least two points per axis")
    axis = np.linspace(-1.0, 1.0, n)
    X, Y = np.meshgrid(axis, axis)  # row = y, column = x
    mask = np.hypot(X, Y) <= radius
    pts = np.stack([X[mask], Y[mask]], axis=1)
    return SamplingGrid(n, axis, mask, pts, radius)


@dataclass(frozen=True)
class FrequencySet:
    wavelengths: np.ndarray

    @property
    def wavenumbers(self):
        return 2 * np.pi / self.wavelengths

    def __len__(self):
        return len(self.wavelengths)


def make_frequencies(F, lam_min=0.4, lam_max=0.7):
    """``F`` wavelengths equally spaced from ``lam_max`` down to ``lam_min``."""
    if F < 1 or not (0 < lam_min <= lam_max):
        raise ValueError("need F >= 1 and 0 < lam_min <= lam_max")
    if F == 1:
        return FrequencySet(np.array([float(lam_min)]))
    return FrequencySet(np.linspace(lam_max, lam_min, F))


def single_frequency(k):
    return FrequencySet(np.array([2 * np.pi / float(k)]))
