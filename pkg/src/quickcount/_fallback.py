"""Pure numpy implementations of the numerical core.

Same algorithms as the compiled ``_kernels`` module, vectorized over the
array argument instead of looped. Selected automatically when the extension
is not built.
"""
import numpy as np
from scipy.special import erfc, gammaln

SQRT1_2 = 0.70710678118654752440
SQRT2PI = 2.50662827463100050242
HALF_LOG_2PI = 0.91893853320467274178
EPS = np.finfo(float).eps
FPMIN = 1e-300
HUGE = 1e300
TINY = np.finfo(float).tiny
HALLEY_STOP = 1e-9
CF_MAXIT = 10000
PPF_MAXIT = 200

_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
P_LOW = 0.02425


def norm_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(-x * SQRT1_2)


def _norm_ppf_lower(p):
    x = np.empty_like(p)
    tail = p < P_LOW
    q = np.sqrt(-2.0 * np.log(p[tail]))
    x[tail] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
        ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p[~tail] - 0.5
    r = q * q
    x[~tail] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    e = norm_cdf(x) - p
    u = e * SQRT2PI * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def norm_ppf(p):
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    out[p <= 0.0] = -np.inf
    out[p >= 1.0] = np.inf
    low = (p > 0.0) & (p <= 0.5)
    high = (p > 0.5) & (p < 1.0)
    out[low] = _norm_ppf_lower(p[low])
    out[high] = -_norm_ppf_lower(1.0 - p[high])
    return out


def _stirling_tail(x):
    r = 1.0 / x
    r2 = r * r
    return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)))


def _log_front(a, b, x):
    """log of x**a (1-x)**b / B(a, b); scalar shapes, array x."""
    if a >= 10.0 and b >= 10.0:
        s = a + b
        return (a * np.log(x * s / a) + b * np.log1p(-x) + b * np.log(s / b)
                + 0.5 * np.log(a * b / s) - HALF_LOG_2PI
                + _stirling_tail(s) - _stirling_tail(a) - _stirling_tail(b))
    if b >= 10.0:
        lbeta = (gammaln(a) - (b - 0.5) * np.log1p(a / b) - a * np.log(a + b) + a
                 + _stirling_tail(b) - _stirling_tail(a + b))
    elif a >= 10.0:
        lbeta = (gammaln(b) - (a - 0.5) * np.log1p(b / a) - b * np.log(a + b) + b
                 + _stirling_tail(a) - _stirling_tail(a + b))
    else:
        lbeta = gammaln(a) + gammaln(b) - gammaln(a + b)
    return a * np.log(x) + b * np.log1p(-x) - lbeta


def _betacf(a, b, x):
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < FPMIN, FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    live = np.ones(x.shape, dtype=bool)
    for m in range(1, CF_MAXIT + 1):
        xs = x[live]
        dl, cl = d[live], c[live]
        m2 = 2 * m
        aa = m * (b - m) * xs / ((qam + m2) * (a + m2))
        dl = 1.0 + aa * dl
        dl = np.where(np.abs(dl) < FPMIN, FPMIN, dl)
        cl = 1.0 + aa / cl
        cl = np.where(np.abs(cl) < FPMIN, FPMIN, cl)
        dl = 1.0 / dl
        hl = h[live] * dl * cl
        aa = -(a + m) * (qab + m) * xs / ((a + m2) * (qap + m2))
        dl = 1.0 + aa * dl
        dl = np.where(np.abs(dl) < FPMIN, FPMIN, dl)
        cl = 1.0 + aa / cl
        cl = np.where(np.abs(cl) < FPMIN, FPMIN, cl)
        dl = 1.0 / dl
        delta = dl * cl
        hl *= delta
        idx = np.flatnonzero(live)
        h[idx], d[idx], c[idx] = hl, dl, cl
        done = np.abs(delta - 1.0) < EPS
        live[idx[done]] = False
        if not live.any():
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def betainc(a, b, x):
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0, 0.0)
    inner = (x > 0.0) & (x < 1.0)
    left = inner & (x < (a + 1.0) / (a + b + 2.0))
    right = inner & ~left
    if left.any():
        xl = x[left]
        out[left] = np.exp(_log_front(a, b, xl)) * _betacf(a, b, xl) / a
    if right.any():
        xr = 1.0 - x[right]
        out[right] = 1.0 - np.exp(_log_front(b, a, xr)) * _betacf(b, a, xr) / b
    return out


def _initial_guess(a, b, u):
    if a >= 1.0 and b >= 1.0:
        pp = np.where(u < 0.5, u, 1.0 - u)
        t = np.sqrt(-2.0 * np.log(pp))
        z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        z = np.where(u < 0.5, -z, z)
        al = (z * z - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = z * np.sqrt(al + h) / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * \
            (al + 5.0 / 6.0 - 2.0 / (3.0 * h))
        x = a / (a + b * np.exp(2.0 * w))
    else:
        tt = np.exp(a * np.log(a / (a + b))) / a
        uu = np.exp(b * np.log(b / (a + b))) / b
        w = tt + uu
        with np.errstate(over="ignore", under="ignore"):
            x = np.where(u < tt / w,
                         (a * w * u) ** (1.0 / a),
                         1.0 - (b * w * (1.0 - u)) ** (1.0 / b))
    return np.where((x > 0.0) & (x < 1.0), x, a / (a + b))


def _split(lo, hi):
    # geometric steps reach quantiles far below 1e-16 in few iterations
    with np.errstate(invalid="ignore"):
        geo = np.sqrt(lo) * np.sqrt(hi)
    return np.where(lo <= 0.0, np.maximum(np.minimum(hi * hi, 0.5 * hi), TINY),
                    np.where(hi > 2.0 * lo, geo, 0.5 * (lo + hi)))


def beta_ppf(a, b, u, tol=1e-13):
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1.0, 1.0, 0.0)
    live = np.flatnonzero((u > 0.0) & (u < 1.0))
    if live.size == 0:
        return out
    uu = u[live]
    x = _initial_guess(a, b, uu)
    lo = np.zeros_like(x)
    hi = np.ones_like(x)
    for _ in range(PPF_MAXIT):
        f = betainc(a, b, x) - uu
        fin = np.abs(f) <= tol
        out[live[fin]] = x[fin]
        lo = np.where(f < 0.0, x, lo)
        hi = np.where(f < 0.0, hi, x)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            pdf = np.exp(_log_front(a, b, x)) / (x * (1.0 - x))
            dx = f / pdf
            t = 0.5 * dx * ((a - 1.0) / x - (b - 1.0) / (1.0 - x))
            dx = np.where(np.abs(t) < 0.5, dx / (1.0 - t), dx)
        xn = x - dx
        newton = (pdf > 0.0) & (pdf < HUGE) & (xn > lo) & (xn < hi)
        conv = newton & (np.abs(dx) <= HALLEY_STOP * x)
        mid = _split(lo, hi)
        collapsed = ~newton & ((hi - lo <= 4.0 * EPS * hi) | (hi <= TINY))
        mid = np.where(collapsed, 0.5 * (lo + hi), mid)
        xn = np.where(newton, xn, mid)
        stop = ~fin & (conv | collapsed)
        out[live[stop]] = xn[stop]
        keep = ~(fin | stop)
        if not keep.any():
            return out
        live, uu, x, lo, hi = live[keep], uu[keep], xn[keep], lo[keep], hi[keep]
    raise ArithmeticError(
        f"beta quantile did not converge in {PPF_MAXIT} iterations (a={a}, b={b}, u={uu[0]})")


def beta_ppf_sorted(a, b, u, tol=1e-13):
    """Quantiles for ascending ``u`` (the vectorized solver needs no warm start)."""
    return beta_ppf(a, b, u, tol)


def minimal_window(xs, k):
    """Start index of the narrowest window of ``k`` consecutive sorted values."""
    xs = np.asarray(xs, dtype=float)
    widths = xs[k - 1:] - xs[:xs.size - k + 1]
    return int(np.argmin(widths))


def beta_ppf_many(a, b, u, tol=1e-13):
    """Elementwise quantiles for arrays of shapes and probabilities."""
    a, b, u = (np.asarray(v, dtype=float) for v in (a, b, u))
    out = np.empty_like(u)
    pairs = np.stack([a, b], axis=1)
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    for k, (ak, bk) in enumerate(uniq):
        sel = inverse == k
        out[sel] = beta_ppf(ak, bk, u[sel], tol)
    return out
