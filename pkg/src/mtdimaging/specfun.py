"""Real-argument Bessel functions and the 2D Helmholtz fundamental solution.

Integer orders J_n come from the ascending series for small arguments and
from Miller's backward recurrence (normalised with J_0 + 2*sum J_2k = 1)
otherwise.  Y_0 and Y_1 are built from the Neumann series over the same
backward-recurrence values, and higher Y_n by forward recurrence, which is
stable for the second kind.

All functions are pure and vectorised over the argument.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061

# below this the ascending series is used for J_n
_SERIES_CUTOFF = 1.0
_RESCALE = 1e250


def _start_order(nmax, xmax):
    m = max(nmax, int(math.ceil(xmax))) + 20 + int(math.sqrt(40.0 * max(nmax, xmax, 1.0)))
    return m + (m % 2)


def _jn_series(nmax, x):
    """J_0..J_nmax by the ascending series; accurate for |x| <= 1."""
    out = np.empty((nmax + 1,) + x.shape)
    q = -0.25 * x * x
    lead = np.ones_like(x)  # (x/2)^n / n!
    for n in range(nmax + 1):
        term = lead.copy()
        total = lead.copy()
        for k in range(1, 30):
            term = term * q / (k * (n + k))
            total += term
        out[n] = total
        lead = lead * (0.5 * x) / (n + 1)
    return out


def _jn_miller(nmax, x):
    """J_0..J_nmax by normalised backward recurrence for x > 0."""
    m = _start_order(nmax, float(x.max()))
    out = np.zeros((nmax + 1,) + x.shape)
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    two_over_x = 2.0 / x
    for n in range(m, 0, -1):
        if n <= nmax:
            out[n] = j
        if n % 2 == 0:
            norm += 2.0 * j
        jm1 = n * two_over_x * j - jp1
        jp1, j = j, jm1
        big = np.abs(j) > _RESCALE
        if big.any():
            j[big] /= _RESCALE
            jp1[big] /= _RESCALE
            norm[big] /= _RESCALE
            lo = max(n - 1, 0)
            if lo <= nmax:
                out[lo:, big] /= _RESCALE
    out[0] = j
    norm += j
    return out / norm


def bessel_j_all(nmax, x):
    """Return J_0(x), ..., J_nmax(x) stacked along a new leading axis."""
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    x = np.asarray(x, dtype=float)
    shape = x.shape
    xf = x.ravel()
    ax = np.abs(xf)
    out = np.empty((nmax + 1, xf.size))
    small = ax <= _SERIES_CUTOFF
    if small.any():
        out[:, small] = _jn_series(nmax, ax[small])
    if (~small).any():
        out[:, ~small] = _jn_miller(nmax, ax[~small])
    neg = xf < 0
    if neg.any():
        out[1::2, neg] *= -1.0
    return out.reshape((nmax + 1,) + shape)


def bessel_j(n, x):
    """J_n(x) for integer n (negative orders via J_{-n} = (-1)^n J_n)."""
    n = int(n)
    sign = -1.0 if (n < 0 and n % 2) else 1.0
    vals = bessel_j_all(abs(n), x)[abs(n)]
    return sign * vals


def bessel_j_prime(n, x):
    """dJ_n/dx via (J_{n-1} - J_{n+1}) / 2."""
    n = abs(int(n))
    jj = bessel_j_all(n + 1, x)
    if n == 0:
        return -jj[1]
    return 0.5 * (jj[n - 1] - jj[n + 1])


def _neumann_y01(x):
    """Y_0 and Y_1 for x > 0 from the Neumann series in J_2k."""
    kmax = (_start_order(0, float(x.max())) // 2) + 2
    jj = bessel_j_all(2 * kmax + 1, x)
    log_term = np.log(0.5 * x) + EULER_GAMMA
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    for k in range(1, kmax + 1):
        sgn = -1.0 if k % 2 else 1.0
        s0 += sgn * jj[2 * k] / k
        s1 += sgn * 0.5 * (jj[2 * k - 1] - jj[2 * k + 1]) / k
    y0 = (2.0 / np.pi) * log_term * jj[0] - (4.0 / np.pi) * s0
    dy0 = (2.0 / np.pi) * (jj[0] / x - log_term * jj[1]) - (4.0 / np.pi) * s1
    return y0, -dy0


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("Bessel functions of the second kind need x > 0")
    return x


def bessel_y0(x):
    """Y_0(x) for x > 0.  Raises ValueError at or below the log singularity."""
    x = _check_positive(x)
    y0, _ = _neumann_y01(x.ravel())
    return y0.reshape(x.shape)


def bessel_y1(x):
    x = _check_positive(x)
    _, y1 = _neumann_y01(x.ravel())
    return y1.reshape(x.shape)


def bessel_y_all(nmax, x):
    """Y_0(x), ..., Y_nmax(x) by forward recurrence (may overflow to -inf)."""
    x = _check_positive(x)
    xf = x.ravel()
    y0, y1 = _neumann_y01(xf)
    out = np.empty((nmax + 1, xf.size))
    out[0] = y0
    if nmax >= 1:
        out[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, nmax):
            out[n + 1] = (2.0 * n / xf) * out[n] - out[n - 1]
    return out.reshape((nmax + 1,) + x.shape)


def hankel1_0(x):
    """H_0^(1)(x) = J_0(x) + i Y_0(x) for x > 0."""
    x = _check_positive(x)
    xf = x.ravel()
    y0, _ = _neumann_y01(xf)
    j0 = bessel_j_all(0, xf)[0]
    return (j0 + 1j * y0).reshape(x.shape)


def hankel1_1(x):
    x = _check_positive(x)
    xf = x.ravel()
    _, y1 = _neumann_y01(xf)
    j1 = bessel_j_all(1, xf)[1]
    return (j1 + 1j * y1).reshape(x.shape)


def fundamental_solution(x, y, k):
    """Phi(x, y; k) = -(i/4) H_0^(1)(k |x - y|).

    ``x`` and ``y`` are points (or broadcastable arrays of points) with the
    coordinate on the last axis.
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r < 1e-14):
        raise ValueError("fundamental solution is singular at coincident points")
    return -0.25j * hankel1_0(k * r)
