"""Adjoint Neumann problem on the unit disk by Fourier-Bessel expansion.

With boundary data g(phi) = sum_n g_n exp(i n phi), the solution of
Delta v + k^2 v = 0 in the disk with dv/dr = g on r = 1 is

    v(r, phi) = sum_n g_n / (k J_n'(k)) J_n(k r) exp(i n phi).
"""

from dataclasses import dataclass

import numpy as np

from . import specfun
from .forward import EigenvalueProximityError, _jprime_all

EVAL_RADIUS = 0.95


class AliasingError(ValueError):
    pass


def default_order(k):
    return int(np.ceil(k)) + 20


@dataclass(frozen=True)
class AdjointExpansion:
    """Coefficients a_n, n = -n_max..n_max along the last axis.

    ``coeffs`` may carry leading batch axes (one row per direction).
    """

    k: float
    coeffs: np.ndarray
    n_max: int

    @property
    def orders(self):
        return np.arange(-self.n_max, self.n_max + 1)

    def coefficient(self, n):
        return self.coeffs[..., n + self.n_max]

    def tail_ratio(self, radius=EVAL_RADIUS):
        """max |a_{+-n_max} J_{n_max}(k r)| / max_n |a_n J_n(k r)|."""
        jj = np.abs(_bessel_signed(self.n_max, self.k * radius))
        terms = np.abs(self.coeffs) * jj
        top = terms.max(axis=-1)
        edge = np.maximum(terms[..., 0], terms[..., -1])
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(top > 0, edge / top, 0.0)


def _bessel_signed(n_max, x):
    """J_n(x) for n = -n_max..n_max along the first axis."""
    jj = specfun.bessel_j_all(n_max, x)
    sign = np.array([(-1) ** n for n in range(n_max, 0, -1)], dtype=float)
    neg = jj[:0:-1] * sign.reshape((-1,) + (1,) * (jj.ndim - 1))
    return np.concatenate([neg, jj], axis=0)


def fourier_coefficients(residual, n_max):
    """g_n for n = -n_max..n_max from samples on the equispaced circle."""
    residual = np.asarray(residual, dtype=complex)
    P = residual.shape[-1]
    if P < 4 * n_max:
        raise AliasingError(f"aliasing: {P} boundary points cannot resolve "
                            f"{n_max} modes (need P >= {4 * n_max})")
    g = np.fft.fft(residual, axis=-1) / P
    idx = np.arange(-n_max, n_max + 1) % P
    return g[..., idx]


def build_adjoint(residual, k, n_max=None, tol=1e-8):
    """Adjoint expansion whose normal derivative on the circle is ``residual``.

    ``residual`` holds samples at angles 2 pi p / P along its last axis.
    """
    k = float(k)
    n_max = default_order(k) if n_max is None else int(n_max)
    g = fourier_coefficients(residual, n_max)
    dj = _jprime_all(n_max, k)
    orders = np.arange(-n_max, n_max + 1)
    djs = dj[np.abs(orders)] * np.where((orders < 0) & (orders % 2 == 1), -1.0, 1.0)
    contributing = np.abs(g) > 1e-12 * np.linalg.norm(g, axis=-1, keepdims=True)
    near = (np.abs(djs) <= tol) & (np.abs(orders) < k)
    if np.any(contributing & near):
        n_bad = int(abs(orders[np.any(contributing & near, axis=tuple(range(g.ndim - 1)))][0]))
        raise EigenvalueProximityError(
            f"Neumann eigenvalue proximity: |J_{n_bad}'({k:.12g})| <= {tol:g}")
    return AdjointExpansion(k, g / (k * djs), n_max)


def adjoint_basis(k, n_max, points, check_domain=True):
    """J_n(k r) exp(i n phi) for n = -n_max..n_max, shape (2 n_max + 1, npts).

    ``check_domain=False`` allows points beyond the evaluation radius (the
    series itself converges on the closed disk); used by diagnostics.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.hypot(pts[:, 0], pts[:, 1])
    if check_domain and np.any(r > EVAL_RADIUS + 1e-12):
        raise ValueError(f"adjoint evaluated outside radius {EVAL_RADIUS}")
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    orders = np.arange(-n_max, n_max + 1)
    return _bessel_signed(n_max, k * r) * np.exp(1j * np.outer(orders, phi))


def eval_adjoint(expansion, points, basis=None):
    """Evaluate the truncated series at ``points`` (shape (..., 2)).

    A precomputed ``basis`` from :func:`adjoint_basis` can be passed to reuse
    the Bessel evaluations across directions.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if basis is None:
        basis = adjoint_basis(expansion.k, expansion.n_max, pts)
    out = expansion.coeffs @ basis
    return out[..., 0] if single else out
