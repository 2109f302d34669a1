"""Synthetic boundary data for sound-soft cracks inside the unit disk.

The scattered field is a single-layer potential over the crack whose kernel
is the Neumann Green's function of the disk,

    G(x, y) = Phi(x, y) + sum_n d_n a_n(|x|) a_n(|y|) exp(i n (phi_x - phi_y)),
    a_n(r)  = J_n(k r) / (k J_n'(k)),

so the homogeneous Neumann condition on the boundary holds mode by mode and
only the crack carries unknowns.  Each arc is discretised by the cosine
substitution t = cos(s); the density times |sin s| is smooth and even in s,
and the logarithmic part of Phi is integrated with trigonometric product
weights.  On the boundary circle the kernel collapses to
G = -(1/2 pi) sum_n a_n(|y|) exp(i n (phi_x - phi_y)).
"""

from dataclasses import dataclass, field, replace
import json

import numpy as np

from . import specfun
from .geometry import CrackCurve, DirectionSet, BoundaryGrid

_UNDERFLOW_GUARD = 1e-280


class ForwardError(RuntimeError):
    pass


class GeometryError(ForwardError):
    pass


class ResonanceError(ForwardError):
    """Linear system or Green's function too close to a resonance."""


class EigenvalueProximityError(ResonanceError):
    pass


def incident_field(x, k, theta):
    """exp(i k theta . x) for points ``x`` (last axis = coordinates)."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.exp(1j * k * (x @ theta))


def incident_normal_derivative(x, normal, k, theta):
    theta = np.asarray(theta, dtype=float)
    return 1j * k * (np.asarray(normal) @ theta) * incident_field(x, k, theta)


def neumann_guard(k, n_max=None, tol=1e-8):
    """Raise if k^2 is within ``tol`` of an interior Neumann eigenvalue.

    J_n' has no zeros below n, so only the oscillatory orders n < k can
    produce a near-eigenvalue; larger orders are small but not resonant.
    """
    n_top = int(np.ceil(k)) if n_max is None else min(int(n_max), int(np.ceil(k)))
    dj = _jprime_all(n_top, k)
    bad = np.flatnonzero(np.abs(dj[: n_top + 1]) <= tol)
    bad = bad[bad < k]
    if bad.size:
        raise EigenvalueProximityError(
            f"Neumann eigenvalue proximity: |J_{bad[0]}'({k:.12g})| = "
            f"{abs(dj[bad[0]]):.3e} <= {tol:g}")


def _jprime_all(nmax, x):
    jj = specfun.bessel_j_all(nmax + 1, np.asarray(x, dtype=float))
    dj = np.empty((nmax + 1,) + jj.shape[1:])
    dj[0] = -jj[1]
    dj[1:] = 0.5 * (jj[:-2] - jj[2:])
    return dj


def _yprime_all(nmax, x):
    yy = specfun.bessel_y_all(nmax + 1, np.asarray(x, dtype=float))
    dy = np.empty((nmax + 1,) + yy.shape[1:])
    dy[0] = -yy[1]
    with np.errstate(over="ignore", invalid="ignore"):
        dy[1:] = 0.5 * (yy[:-2] - yy[2:])
    return dy


def mode_count(k, r_max, tol=1e-16):
    """Number of Fourier modes for the Green's function correction.

    Terms decay like r_max^n; the count is capped where J_n'(k) would leave
    the normal floating-point range.
    """
    r_max = float(r_max)
    need = int(np.ceil(k)) + 30
    if r_max > 0:
        need = max(need, int(np.ceil(np.log(tol) / np.log(r_max))))
    cap = need
    dj = np.abs(_jprime_all(need, k))
    ok = np.flatnonzero(dj < _UNDERFLOW_GUARD)
    if ok.size:
        cap = int(ok[0]) - 1
    return cap


class DiskGreen:
    """Neumann Green's function of the unit disk at wavenumber ``k``."""

    def __init__(self, k, r_max):
        self.k = float(k)
        self.n_modes = mode_count(self.k, r_max)
        N = self.n_modes
        dj = _jprime_all(N, self.k)
        dy = _yprime_all(N, self.k)
        self.jprime = dj
        with np.errstate(over="ignore", invalid="ignore"):
            prod = np.where(np.isfinite(dy), dy * dj, 0.0)
        # c_n J_n(kr) J_n(kr') = d_n a_n(r) a_n(r') with c_n = (i/4) H_n'/J_n'
        self.d = 0.25 * self.k ** 2 * (1j * dj ** 2 - prod)

    def radial(self, r):
        """a_n(r) for n = 0..n_modes, shape (n_modes + 1, len(r))."""
        jj = specfun.bessel_j_all(self.n_modes, self.k * np.asarray(r, dtype=float))
        return jj / (self.k * self.jprime[:, None])

    def correction(self, x, y):
        """Regular part W(x_i, y_j) as an (len(x), len(y)) matrix."""
        ax, px = self._polar(x)
        ay, py = self._polar(y)
        n = np.arange(self.n_modes + 1)
        cx = self.radial(ax)
        cy = self.radial(ay)
        w = np.where(n == 0, 1.0, 2.0) * self.d
        # sum_n w_n a_n(rx) a_n(ry) cos(n (phx - phy)), split into cos/sin parts
        cosx, sinx = np.cos(np.outer(n, px)), np.sin(np.outer(n, px))
        cosy, siny = np.cos(np.outer(n, py)), np.sin(np.outer(n, py))
        left_c = cx * cosx * w[:, None]
        left_s = cx * sinx * w[:, None]
        return left_c.T @ (cy * cosy) + left_s.T @ (cy * siny)

    def on_boundary(self, y, angles):
        """G(e^{i angle_p}, y_j) as a (len(angles), len(y)) matrix."""
        ay, py = self._polar(y)
        n = np.arange(self.n_modes + 1)
        cy = self.radial(ay)
        w = np.where(n == 0, 1.0, 2.0) / (-2 * np.pi)
        phase = np.outer(np.asarray(angles), n)
        rel = np.cos(phase) @ (w[:, None] * cy * np.cos(np.outer(n, py)))
        rel += np.sin(phase) @ (w[:, None] * cy * np.sin(np.outer(n, py)))
        return rel

    @staticmethod
    def _polar(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return np.hypot(p[:, 0], p[:, 1]), np.arctan2(p[:, 1], p[:, 0])


def _log_weights(n, s):
    """Product weights R_j(s) for int_0^{2pi} ln(4 sin^2((s - sig)/2)) f(sig)
    on the nodes sig_j = j pi / n, j = 0..2n-1.  Shape (len(s), 2n)."""
    sig = np.pi * np.arange(2 * n) / n
    diff = np.subtract.outer(np.atleast_1d(s), sig)
    m = np.arange(1, n)
    acc = np.zeros_like(diff)
    for mm in m:
        acc += np.cos(mm * diff) / mm
    return -(2 * np.pi / n) * acc - (np.pi / n ** 2) * np.cos(n * diff)


@dataclass
class ArcNodes:
    """Cosine-substitution nodes of one crack arc."""

    piece: object
    n: int
    s: np.ndarray = field(init=False)
    t: np.ndarray = field(init=False)
    points: np.ndarray = field(init=False)
    speed: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        self.s = np.pi * np.arange(self.n + 1) / self.n
        self.t = np.cos(self.s)
        self.points = self.at(self.t)
        self.speed = self.speed_at(self.t)
        w = np.full(self.n + 1, np.pi / self.n)
        w[[0, -1]] *= 0.5
        # trapezoid on [0, pi]: half the periodic rule folded onto even data
        self.weights = w

    def _native(self, t):
        p = self.piece
        return p.t0 + 0.5 * (np.asarray(t) + 1.0) * (p.t1 - p.t0)

    def at(self, t):
        return self.piece.points(self._native(t))

    def speed_at(self, t):
        p = self.piece
        tan = p.tangent(self._native(t)) * 0.5 * (p.t1 - p.t0)
        return np.hypot(tan[..., 0], tan[..., 1])

    @property
    def arclength_nodes(self):
        """Cumulative arclength at the nodes (for spacing diagnostics)."""
        seg = np.hypot(*np.diff(self.points, axis=0).T)
        return np.concatenate([[0.0], np.cumsum(seg)])


def _fold(mat, n):
    """Fold columns j and 2n - j of a (rows, 2n) matrix onto j = 0..n."""
    out = mat[:, : n + 1].copy()
    out[:, 1:n] += mat[:, 2 * n - 1 : n : -1]
    return out


def _phi_split(r, k):
    """Return A(r), B(r) with Phi(r) = A(r) ln r + B(r), B smooth at r = 0."""
    r = np.asarray(r, dtype=float)
    A = specfun.bessel_j_all(0, k * r)[0] / (2 * np.pi)
    B = np.empty(r.shape, dtype=complex)
    zero = r == 0
    B[zero] = -0.25j + (np.log(0.5 * k) + specfun.EULER_GAMMA) / (2 * np.pi)
    if (~zero).any():
        rr = r[~zero]
        B[~zero] = -0.25j * specfun.hankel1_0(k * rr) - A[~zero] * np.log(rr)
    return A, B


class CrackSolver:
    """Assembled and factorised Nystrom system for one crack and wavenumber."""

    def __init__(self, crack, k, n_nodes=64, cond_limit=1e12, guard=True):
        if len(crack.pieces) == 0:
            raise GeometryError("crack has no pieces")
        self.crack = crack
        self.k = float(k)
        self.n_nodes = int(n_nodes)
        if guard:
            neumann_guard(self.k)
        self.arcs = [ArcNodes(p, self.n_nodes) for p in crack.pieces]
        for arc in self.arcs:
            length = np.sum(arc.speed * arc.weights * np.sin(arc.s))
            if not np.all(np.isfinite(arc.points)) or not length > 1e-12:
                raise GeometryError(f"crack {crack.name!r} has a degenerate piece")
        r_max = max(np.hypot(*a.points.T).max() for a in self.arcs)
        dense = crack.max_radius(4000)
        if dense >= 1.0 - 1e-3:
            raise GeometryError(f"crack {crack.name!r} reaches the boundary "
                                f"(max radius {dense:.4f})")
        self.green = DiskGreen(self.k, max(r_max, dense))
        self.matrix = self._assemble()
        cond = np.linalg.cond(self.matrix)
        self.condition = float(cond)
        if not np.isfinite(cond) or cond > cond_limit:
            raise ResonanceError(
                f"modal resonance: condition number {cond:.3e} for crack "
                f"{crack.name!r} at k = {self.k:.12g}")
        self._lu = _lu_factor(self.matrix)

    @property
    def nodes(self):
        return np.concatenate([a.points for a in self.arcs])

    @property
    def weights(self):
        return np.concatenate([a.weights for a in self.arcs])

    def _row_block(self, arc_i, s, pts, arc_j):
        """Operator rows for targets at parameters ``s`` on ``arc_i``
        (points ``pts``) against the folded density on ``arc_j``."""
        n = arc_j.n
        sig = np.pi * np.arange(2 * n) / n
        tsig = np.cos(sig)
        src = arc_j.at(tsig)
        diff = pts[:, None, :] - src[None, :, :]
        r = np.hypot(diff[..., 0], diff[..., 1]).ravel()
        if arc_i is arc_j:
            A, B = _phi_split(r, self.k)
            A = A.reshape(len(pts), 2 * n)
            B = B.reshape(len(pts), 2 * n)
            dt = np.abs(np.subtract.outer(np.cos(s), tsig))
            r2 = r.reshape(len(pts), 2 * n)
            coincide = dt < 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                L = np.log(r2 / dt)
            if coincide.any():
                sp = np.broadcast_to(arc_i.speed_at(np.cos(s))[:, None], L.shape)
                L[coincide] = np.log(sp[coincide])
            R = _log_weights(n, s)
            full = 0.5 * (R * A + (np.pi / n) * (A * (L - np.log(2.0)) + B))
        else:
            phi = -0.25j * specfun.hankel1_0(self.k * r).reshape(len(pts), 2 * n)
            full = 0.5 * (np.pi / n) * phi
        block = _fold(full, n)
        block += self.green.correction(pts, arc_j.points) * arc_j.weights[None, :]
        return block

    def _assemble(self):
        rows = []
        for ai in self.arcs:
            rows.append(np.hstack([self._row_block(ai, ai.s, ai.points, aj)
                                   for aj in self.arcs]))
        return np.vstack(rows)

    def solve_density(self, rhs):
        """Density values (folded, per node) for crack data ``rhs``; ``rhs``
        may carry several right-hand sides in its last axis."""
        return _lu_solve(self._lu, np.asarray(rhs, dtype=complex))

    def solve_incident(self, dirs, amplitude=1.0):
        """Densities for plane waves ``amplitude * exp(i k theta . x)``."""
        thetas = dirs.directions if isinstance(dirs, DirectionSet) else np.atleast_2d(dirs)
        rhs = -amplitude * np.exp(1j * self.k * (self.nodes @ thetas.T))
        return self.solve_density(rhs)

    def boundary_field(self, density, angles):
        """Scattered field on the unit circle at ``angles``; (P, ncols)."""
        G = self.green.on_boundary(self.nodes, angles)
        return G @ (self.weights[:, None] * _as_cols(density))

    def field(self, density, points):
        """Scattered field at interior points away from the crack."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        src = self.nodes
        d = pts[:, None, :] - src[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        if np.any(r < 1e-12):
            raise GeometryError("field evaluation point coincides with a crack node")
        K = -0.25j * specfun.hankel1_0(self.k * r)
        K = K + self.green.correction(pts, src)
        return K @ (self.weights[:, None] * _as_cols(density))

    def crack_trace(self, density, piece, s):
        """Scattered field on arc ``piece`` at arbitrary parameters ``s``
        (Nystrom interpolation, accurate to quadrature order)."""
        arc = self.arcs[piece]
        s = np.atleast_1d(np.asarray(s, dtype=float))
        pts = arc.at(np.cos(s))
        rows = np.hstack([self._row_block(arc, s, pts, aj) for aj in self.arcs])
        return rows @ _as_cols(density), pts


def _as_cols(a):
    a = np.asarray(a)
    return a[:, None] if a.ndim == 1 else a


def _lu_factor(A):
    from scipy.linalg import lu_factor
    return lu_factor(A)


def _lu_solve(lu, b):
    from scipy.linalg import lu_solve
    return lu_solve(lu, b)


@dataclass(frozen=True)
class FieldData:
    """Boundary traces indexed ``[frequency, direction, boundary point]``."""

    wavenumbers: np.ndarray
    directions: np.ndarray
    angles: np.ndarray
    u_back: np.ndarray
    residual: np.ndarray
    crack_name: str = "custom"
    n_nodes: int = 0
    snr_db: object = None
    seed: object = None

    @property
    def u_total(self):
        return self.u_back + self.residual

    @property
    def shape(self):
        return self.residual.shape

    def select(self, f):
        """Single-frequency view as a FieldData with one wavenumber."""
        sl = slice(f, f + 1)
        return replace(self, wavenumbers=self.wavenumbers[sl],
                       u_back=self.u_back[sl], residual=self.residual[sl])

    def save(self, path):
        """Write an ``.npz`` archive; see the README for the layout."""
        meta = {"format": "mtdimaging.FieldData", "version": 1,
                "crack_name": self.crack_name, "n_nodes": int(self.n_nodes),
                "snr_db": self.snr_db, "seed": self.seed}
        with open(path, "wb") as fh:
            np.savez(fh, wavenumbers=self.wavenumbers, directions=self.directions,
                     angles=self.angles, u_back=self.u_back, residual=self.residual,
                     meta=np.array(json.dumps(meta, sort_keys=True)))

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("format") != "mtdimaging.FieldData":
                raise ValueError(f"{path}: not a FieldData archive")
            return cls(z["wavenumbers"], z["directions"], z["angles"],
                       z["u_back"], z["residual"], meta["crack_name"],
                       meta["n_nodes"], meta["snr_db"], meta["seed"])


def _background(k, thetas, bpoints):
    return np.exp(1j * k * (thetas @ bpoints.T))


def solve_forward(crack, k, dirs, bgrid, n_nodes=64):
    """Boundary data at one wavenumber for every direction in ``dirs``.

    ``crack=None`` (or a crack without pieces) short-circuits to the
    background field with an exactly zero residual.
    """
    thetas = dirs.directions
    u_back = _background(k, thetas, bgrid.points)
    name = "none" if crack is None else crack.name
    if crack is None or len(crack.pieces) == 0:
        res = np.zeros_like(u_back)
    else:
        solver = CrackSolver(crack, k, n_nodes)
        dens = solver.solve_incident(thetas)
        res = solver.boundary_field(dens, bgrid.angles).T
    return FieldData(np.array([float(k)]), thetas.copy(), bgrid.angles.copy(),
                     u_back[None], res[None], name, n_nodes)


def generate(crack, wavenumbers, dirs, bgrid, n_nodes=64, workers=1):
    """Noiseless data for several wavenumbers (solves are independent).

    Errors are re-raised with the index of the failing frequency.
    """
    ks = [float(k) for k in np.atleast_1d(wavenumbers)]

    def one(item):
        f, k = item
        try:
            return solve_forward(crack, k, dirs, bgrid, n_nodes)
        except ForwardError as exc:
            raise type(exc)(f"frequency index {f} (k = {k:.12g}): {exc}") from exc

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, enumerate(ks)))
    else:
        parts = [one(item) for item in enumerate(ks)]
    return concat(parts)


def concat(parts):
    first = parts[0]
    return replace(first,
                   wavenumbers=np.concatenate([p.wavenumbers for p in parts]),
                   u_back=np.concatenate([p.u_back for p in parts]),
                   residual=np.concatenate([p.residual for p in parts]))


def noise_stream(seed, f, m):
    """Generator for the noise of frequency ``f`` and direction ``m``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(f), int(m))))


def add_noise(data, snr_db, seed):
    """Add complex white Gaussian noise to the residuals.

    At each frequency the noise variance is the mean squared residual
    magnitude (over all directions and boundary points) divided by
    10^(snr_db / 10).  Each (frequency, direction) pair draws from its own
    seed-derived stream, so the realisation for a given pair does not depend
    on how many directions or frequencies are present.
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    res = data.residual
    if res.size == 0:
        raise ValueError("no data to corrupt")
    noisy = np.empty_like(res)
    F, M, P = res.shape
    for f in range(F):
        power = np.mean(np.abs(res[f]) ** 2)
        if power == 0:
            raise ValueError("no signal to scale noise against")
        sigma = np.sqrt(power / 10 ** (snr_db / 10))
        for m in range(M):
            z = noise_stream(seed, f, m).standard_normal((2, P))
            noisy[f, m] = res[f, m] + sigma * (z[0] + 1j * z[1]) / np.sqrt(2)
    return replace(data, residual=noisy, snr_db=float(snr_db), seed=int(seed))
