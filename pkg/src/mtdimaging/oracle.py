"""Closed-form structure of the multi-frequency map and the Bessel integral
identities behind it.

These are validation targets for the imaging engine.  The structure
functions are asymptotic shapes valid up to an unknown multiplicative
constant, so they are compared with computed maps through correlation.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import specfun
from .geometry import DirectionSet

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class StructureConfig:
    points: np.ndarray
    directions: DirectionSet
    eps: float = 1e-3

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")


def _geometry_terms(x_s, cfg, thetas):
    """Distances r (clamped at eps) and direction cosines, shape (npts, nc, nm)."""
    xs = np.atleast_2d(np.asarray(x_s, dtype=float))
    d = np.atleast_2d(cfg.points)[None, :, :] - xs[:, None, :]
    r = np.hypot(d[..., 0], d[..., 1])
    rc = np.maximum(r, cfg.eps)
    cos = np.einsum("pcj,mj->pcm", d, thetas) / rc[..., None]
    cos = np.clip(cos, -1.0, 1.0)
    sin = np.maximum(np.sqrt(1.0 - cos ** 2), cfg.eps)
    return rc[..., None], cos, sin


def _maybe_scalar(x_s, out):
    return float(out[0]) if np.asarray(x_s).ndim == 1 else out


def _chunked(fn, x_s, cfg, size=2_000_000):
    xs = np.atleast_2d(np.asarray(x_s, dtype=float))
    step = max(1, size // (len(np.atleast_2d(cfg.points)) * len(cfg.directions)))
    out = [fn(xs[i:i + step]) for i in range(0, len(xs), step)]
    return _maybe_scalar(x_s, np.concatenate(out))


def structure_symmetric(x_s, cfg):
    """Sum over crack points and the first half of a symmetric direction set
    of 1 / (|x_c - x_s| sqrt(1 - (theta . (x_c - x_s)/|x_c - x_s|)^2)).

    For a non-symmetric set every direction is used.  The square root and
    the distance are clamped below at ``cfg.eps``, so on replica lines the
    value is large but finite.
    """
    th = cfg.directions.directions
    if cfg.directions.symmetric:
        th = th[: len(th) // 2]

    def block(pts):
        r, _, sin = _geometry_terms(pts, cfg, th)
        return np.sum(1.0 / (r * sin), axis=(1, 2))

    return _chunked(block, x_s, cfg)


def structure_nonsymmetric(x_s, cfg):
    """Like :func:`structure_symmetric` with numerator 1 - (2/pi) asin(cos)
    and every direction of the set."""
    th = cfg.directions.directions

    def block(pts):
        r, cos, sin = _geometry_terms(pts, cfg, th)
        num = 1.0 - (2.0 / np.pi) * np.arcsin(cos)
        return np.sum(num / (r * sin), axis=(1, 2))

    return _chunked(block, x_s, cfg)


def lambda_fn(x, k):
    """k (J_0(k x)^2 + J_1(k x)^2)."""
    jj = specfun.bessel_j_all(1, k * np.asarray(x, dtype=float))
    return k * (jj[0] ** 2 + jj[1] ** 2)


def structure_many(x_s, x_c, k_1, k_F):
    """Lambda(|x_c - x_s|; k_F) - Lambda(|x_c - x_s|; k_1)."""
    if not 0 < k_1 < k_F:
        raise ValueError("need 0 < k_1 < k_F")
    d = np.asarray(x_c, dtype=float) - np.asarray(x_s, dtype=float)
    r = np.hypot(d[..., 0], d[..., 1])
    return lambda_fn(r, k_F) - lambda_fn(r, k_1)


def _j(order, t):
    return float(specfun.bessel_j(order, np.asarray(t, dtype=float)))


def _quad(fun, a, b):
    val, _ = integrate.quad(fun, a, b, limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


def theta_term(r, k_1, k_F):
    """int_{k_1}^{k_F} J_1(k r)^2 dk (the remainder dropped from Lambda)."""
    return _quad(lambda k: _j(1, k * r) ** 2, k_1, k_F)


def structure_many_by_quadrature(r, k_1, k_F):
    """(1/r) int_{k_1 r}^{k_F r} J_0(t)^2 dt - Theta, an independent route to
    :func:`structure_many` at separation ``r > 0``."""
    head = _quad(lambda t: _j(0, t) ** 2, k_1 * r, k_F * r) / r
    return head - theta_term(r, k_1, k_F)


def j0_squared_identity(alpha, beta):
    """Both sides of int J_0^2 = t (J_0^2 + J_1^2) + int J_1^2 on [alpha, beta]."""
    lhs = _quad(lambda t: _j(0, t) ** 2, alpha, beta)
    lam = lambda t: t * (_j(0, t) ** 2 + _j(1, t) ** 2)
    rhs = lam(beta) - lam(alpha) + _quad(lambda t: _j(1, t) ** 2, alpha, beta)
    return lhs, rhs


def structure_many_hwhm(k_1, k_F, r_max=2.0):
    """Half width at half maximum (first crossing) of structure_many in r."""
    peak = k_F - k_1
    rs = np.linspace(0.0, r_max, 4001)
    vals = lambda_fn(rs, k_F) - lambda_fn(rs, k_1)
    below = np.flatnonzero(vals < 0.5 * peak)
    if not below.size:
        raise ValueError("no half-maximum crossing below r_max")
    lo, hi = rs[below[0] - 1], rs[below[0]]
    f = lambda r: lambda_fn(r, k_F) - lambda_fn(r, k_1) - 0.5 * peak
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- semi-infinite oscillatory integrals -------------------------------------

def _gauss(fun, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return np.sum(fun(t) * _GL_WEIGHTS[None, :] * half[:, None])


def wynn_epsilon(seq):
    """Wynn epsilon-algorithm limit estimate of a sequence of partial sums."""
    s = list(seq)
    n = len(s)
    if n < 3:
        return s[-1]
    prev = [0.0] * (n + 1)
    cur = list(s)
    best = s[-1]
    col = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            diff = cur[i + 1] - cur[i]
            if diff == 0:
                return cur[i + 1] if col % 2 == 0 else best
            nxt.append(prev[i + 1] + 1.0 / diff)
        prev, cur = cur, nxt
        col += 1
        if col % 2 == 0:
            best = cur[-1]
    return best


def oscillatory_tail(fun, omega, t0, max_lobes=200, tol=1e-6, window=12):
    """int_{t0}^inf fun(t) dt for fun ~ A(t) exp(i omega t), A slowly varying.

    The range is cut into half-periods pi/|omega|; the partial sums over
    lobes are accelerated with the epsilon algorithm until two successive
    estimates agree to ``tol`` (or ``max_lobes`` is reached).
    """
    width = np.pi / abs(omega)
    partial, total = [], 0.0
    last, agree = None, 0
    for j in range(max_lobes):
        a = t0 + j * width
        total += _gauss(fun, a, a + width, 1)
        partial.append(total)
        if len(partial) >= 6:
            est = wynn_epsilon(partial[-window:])
            if last is not None and abs(est - last) <= tol * max(1.0, abs(est)):
                agree += 1
                if agree >= 3:
                    return est
            else:
                agree = 0
            last = est
    return last


def _head(fun, t0, freq):
    # the first panel goes to an adaptive rule: Y_0 has a log singularity at 0
    panels = int(np.ceil(t0 * freq / np.pi)) + 8
    width = t0 / panels
    first, _ = integrate.quad(lambda t: float(fun(np.array(t))), 0.0, width,
                              limit=200, epsabs=1e-14, epsrel=1e-13)
    return first + _gauss(fun, width, t0, panels - 1)


def _hankel(t):
    return specfun.hankel1_0(np.maximum(t, 1e-300))


def cos_j0_closed_form(a, b):
    """int_0^inf cos(a t) J_0(b t) dt in closed form: 1/sqrt(b^2 - a^2) below b, 0 above."""
    a = abs(a)
    if a < b:
        return 1.0 / np.sqrt(b * b - a * a)
    if a > b:
        return 0.0
    raise ValueError("a = b is the divergent boundary case")


def check_cos_j0_integral(a, b, tol=1e-8):
    """(numeric, closed form) for int_0^inf cos(a t) J_0(b t) dt."""
    if not b > 0:
        raise ValueError("b must be positive")
    a = abs(float(a))
    b = float(b)
    closed = cos_j0_closed_form(a, b)
    t0 = 20.0 / b
    head = _head(lambda t: np.cos(a * t) * specfun.bessel_j(0, t * b), t0, a + b)
    tail = 0.5 * np.real(
        oscillatory_tail(lambda t: np.exp(1j * a * t) * _hankel(b * t), b + a, t0, tol=tol)
        + oscillatory_tail(lambda t: np.exp(-1j * a * t) * _hankel(b * t), b - a, t0, tol=tol))
    return float(head + tail), float(closed)


def exp_y0_closed_form(a, b):
    """int_0^inf exp(i a t) Y_0(b t) dt as a complex number (a >= 0)."""
    if a < b:
        s = np.sqrt(b * b - a * a)
        return 2j / (np.pi * s) * np.arcsin(a / b)
    if a > b:
        s = np.sqrt(a * a - b * b)
        return 2j / (np.pi * s) * np.log((a - s) / b) - 1.0 / s
    raise ValueError("a = b is the divergent boundary case")


def check_exp_y0_integral(a, b, part="imag", tol=1e-8):
    """(numeric, closed form) for the imaginary (default) or real part of
    int_0^inf exp(i a t) Y_0(b t) dt.  Negative ``a`` uses the parity of
    sin and cos."""
    if not b > 0:
        raise ValueError("b must be positive")
    a = float(a)
    b = float(b)
    sign = -1.0 if (a < 0 and part == "imag") else 1.0
    a = abs(a)
    closed = exp_y0_closed_form(a, b)
    t0 = 20.0 / b
    if part == "imag":
        # sin(at) Y0(bt) = Re[e^{iat} conj(H) - e^{iat} H] / 2
        head = _head(lambda t: np.sin(a * t) * specfun.bessel_y0(t * b), t0, a + b)
        tail = 0.5 * np.real(
            oscillatory_tail(lambda t: np.exp(1j * a * t) * np.conj(_hankel(b * t)), a - b, t0, tol=tol)
            - oscillatory_tail(lambda t: np.exp(1j * a * t) * _hankel(b * t), a + b, t0, tol=tol))
        closed = closed.imag
    elif part == "real":
        # cos(at) Y0(bt) = Im[e^{iat} H + e^{-iat} H] / 2
        head = _head(lambda t: np.cos(a * t) * specfun.bessel_y0(t * b), t0, a + b)
        tail = 0.5 * np.imag(
            oscillatory_tail(lambda t: np.exp(1j * a * t) * _hankel(b * t), a + b, t0, tol=tol)
            + oscillatory_tail(lambda t: np.exp(-1j * a * t) * _hankel(b * t), b - a, t0, tol=tol))
        closed = closed.real
    else:
        raise ValueError("part must be 'imag' or 'real'")
    return sign * float(head + tail), sign * float(closed)


# --- comparison with computed maps ---------------------------------------------

def clamp_zone(x_s, cfg):
    """True where some structure term hits the eps clamp."""
    def block(pts):
        r, _, sin = _geometry_terms(pts, cfg, cfg.directions.directions)
        return np.any((sin <= cfg.eps) | (r <= cfg.eps), axis=(1, 2))

    xs = np.atleast_2d(np.asarray(x_s, dtype=float))
    step = max(1, 2_000_000 // (len(np.atleast_2d(cfg.points)) * len(cfg.directions)))
    return np.concatenate([block(xs[i:i + step]) for i in range(0, len(xs), step)])


def structure_correlation(image, cfg, crack_distance, exclude=0.05, kind="symmetric"):
    """Pearson correlation between a map and a structure function.

    Points within ``exclude`` of the crack and points in the clamp zone are
    dropped.  The map is sign-aligned so that its largest-magnitude value is
    positive (the structure holds up to an unknown constant).
    """
    pts = image.grid.points
    keep = (np.asarray(crack_distance) > exclude) & ~clamp_zone(pts, cfg)
    vals = image.values
    vals = vals * np.sign(vals[np.argmax(np.abs(vals))])
    fn = structure_symmetric if kind == "symmetric" else structure_nonsymmetric
    ref = fn(pts[keep], cfg)
    return float(np.corrcoef(vals[keep], ref)[0, 1])


# --- identity suite --------------------------------------------------------------

COS_J0_PAIRS = [(0.0, 1.0), (0.5, 1.0), (0.25, 2.0), (0.9, 1.5), (1.0, 3.0),
                (2.0, 1.0), (3.0, 1.5), (1.5, 0.5), (4.0, 1.0), (2.5, 2.0)]
EXP_Y0_PAIRS = [(0.0, 1.0), (0.5, 1.0), (0.25, 2.0), (0.9, 1.5), (1.0, 3.0),
                (2.0, 1.0), (3.0, 1.5), (1.5, 0.5), (4.0, 1.0), (2.5, 2.0)]
J0SQ_INTERVALS = [(0.0, 1.0), (0.5, 3.0), (1.0, 10.0), (2.0, 7.5), (5.0, 20.0),
                  (0.1, 0.2), (10.0, 40.0), (3.0, 4.0), (0.0, 25.0), (7.0, 60.0)]


def identity_suite():
    """Every identity check as (name, numeric, reference, error, tolerance, ok)."""
    rows = []
    for a, b in COS_J0_PAIRS:
        num, cf = check_cos_j0_integral(a, b)
        rows.append((f"cos_j0 a={a:g} b={b:g}", num, cf, abs(num - cf), 1e-3))
    for a, b in EXP_Y0_PAIRS:
        num, cf = check_exp_y0_integral(a, b)
        rows.append((f"exp_y0 a={a:g} b={b:g}", num, cf, abs(num - cf), 1e-3))
    for lo, hi in J0SQ_INTERVALS:
        lhs, rhs = j0_squared_identity(lo, hi)
        rows.append((f"j0sq [{lo:g},{hi:g}]", lhs, rhs, abs(lhs - rhs), 1e-6))
    return [row + (row[3] <= row[4],) for row in rows]
