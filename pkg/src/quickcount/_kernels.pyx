# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical core: normal CDF/quantile, regularized incomplete beta
and its inverse, and the minimal-width window scan.

Mirrors ``quickcount._fallback`` function for function; the two must agree to
floating-point roundoff.
"""
import numpy as np

from libc.math cimport erfc, exp, fabs, lgamma, log, log1p, pow, sqrt

cdef double SQRT1_2 = 0.70710678118654752440
cdef double SQRT2PI = 2.50662827463100050242
cdef double HALF_LOG_2PI = 0.91893853320467274178
cdef double EPS = 2.220446049250313e-16
cdef double TINY = 2.2250738585072014e-308
cdef double FPMIN = 1e-300
cdef double HUGE = 1e300
cdef double HALLEY_STOP = 1e-9
cdef int CF_MAXIT = 10000
cdef int PPF_MAXIT = 200

# Acklam's rational approximation to the lower-tail normal quantile.
cdef double A1 = -3.969683028665376e+01
cdef double A2 = 2.209460984245205e+02
cdef double A3 = -2.759285104469687e+02
cdef double A4 = 1.383577518672690e+02
cdef double A5 = -3.066479806614716e+01
cdef double A6 = 2.506628277459239e+00
cdef double B1 = -5.447609879822406e+01
cdef double B2 = 1.615858368580409e+02
cdef double B3 = -1.556989798598866e+02
cdef double B4 = 6.680131188771972e+01
cdef double B5 = -1.328068155288572e+01
cdef double C1 = -7.784894002430293e-03
cdef double C2 = -3.223964580411365e-01
cdef double C3 = -2.400758277161838e+00
cdef double C4 = -2.549732539343734e+00
cdef double C5 = 4.374664141464968e+00
cdef double C6 = 2.938163982698783e+00
cdef double D1 = 7.784695709041462e-03
cdef double D2 = 3.224671290700398e-01
cdef double D3 = 2.445134137142996e+00
cdef double D4 = 3.754408661907416e+00
cdef double P_LOW = 0.02425


cdef inline double _norm_cdf(double x) nogil:
    return 0.5 * erfc(-x * SQRT1_2)


cdef double _norm_ppf_lower(double p) nogil:
    # p in (0, 0.5]
    cdef double q, r, x, e, u
    if p < P_LOW:
        q = sqrt(-2.0 * log(p))
        x = (((((C1 * q + C2) * q + C3) * q + C4) * q + C5) * q + C6) / \
            ((((D1 * q + D2) * q + D3) * q + D4) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((A1 * r + A2) * r + A3) * r + A4) * r + A5) * r + A6) * q / \
            (((((B1 * r + B2) * r + B3) * r + B4) * r + B5) * r + 1.0)
    # one Halley step against erfc restores full double precision
    e = _norm_cdf(x) - p
    u = e * SQRT2PI * exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return x


cdef double _norm_ppf(double p) nogil:
    if p <= 0.0:
        return -1.0 / 0.0
    if p >= 1.0:
        return 1.0 / 0.0
    if p <= 0.5:
        return _norm_ppf_lower(p)
    # 1 - p is exact for p in [0.5, 1]
    return -_norm_ppf_lower(1.0 - p)


cdef inline double _stirling_tail(double x) nogil:
    # lgamma(x) - [(x - 1/2) log x - x + log(2 pi)/2], valid for x >= 10
    cdef double r = 1.0 / x
    cdef double r2 = r * r
    return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)))


cdef double _log_front(double a, double b, double x) nogil:
    """log of x**a (1-x)**b / B(a, b)."""
    cdef double s, lbeta
    if a >= 10.0 and b >= 10.0:
        s = a + b
        return (a * log(x * s / a) + b * log1p(-x) + b * log(s / b)
                + 0.5 * log(a * b / s) - HALF_LOG_2PI
                + _stirling_tail(s) - _stirling_tail(a) - _stirling_tail(b))
    if b >= 10.0:
        lbeta = (lgamma(a) - (b - 0.5) * log1p(a / b) - a * log(a + b) + a
                 + _stirling_tail(b) - _stirling_tail(a + b))
    elif a >= 10.0:
        lbeta = (lgamma(b) - (a - 0.5) * log1p(b / a) - b * log(a + b) + b
                 + _stirling_tail(a) - _stirling_tail(a + b))
    else:
        lbeta = lgamma(a) + lgamma(b) - lgamma(a + b)
    return a * log(x) + b * log1p(-x) - lbeta


cdef double _betacf(double a, double b, double x, int *ok) nogil:
    cdef double qab = a + b
    cdef double qap = a + 1.0
    cdef double qam = a - 1.0
    cdef double c = 1.0
    cdef double d = 1.0 - qab * x / qap
    cdef double h, aa, delta
    cdef int m, m2
    if fabs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            return h
    ok[0] = 0
    return h


cdef double _betainc(double a, double b, double x, int *ok) nogil:
    cdef double lf
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        lf = _log_front(a, b, x)
        return exp(lf) * _betacf(a, b, x, ok) / a
    lf = _log_front(b, a, 1.0 - x)
    return 1.0 - exp(lf) * _betacf(b, a, 1.0 - x, ok) / b


cdef double _initial_guess(double a, double b, double u) nogil:
    cdef double pp, t, x, al, h, w, lna, lnb, tt, uu
    if a >= 1.0 and b >= 1.0:
        pp = u if u < 0.5 else 1.0 - u
        t = sqrt(-2.0 * log(pp))
        x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        if u < 0.5:
            x = -x
        al = (x * x - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = x * sqrt(al + h) / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * \
            (al + 5.0 / 6.0 - 2.0 / (3.0 * h))
        x = a / (a + b * exp(2.0 * w))
    else:
        lna = log(a / (a + b))
        lnb = log(b / (a + b))
        tt = exp(a * lna) / a
        uu = exp(b * lnb) / b
        w = tt + uu
        if u < tt / w:
            x = pow(a * w * u, 1.0 / a)
        else:
            x = 1.0 - pow(b * w * (1.0 - u), 1.0 / b)
    if not (x > 0.0 and x < 1.0):
        x = a / (a + b)
    return x


cdef double _beta_ppf(double a, double b, double u, double tol, int *ok) nogil:
    return _beta_ppf_from(a, b, u, tol, ok, -1.0, 0.0)


cdef inline double _split(double lo, double hi) nogil:
    # geometric steps reach quantiles far below 1e-16 in few iterations
    if lo <= 0.0:
        return max(min(hi * hi, 0.5 * hi), TINY)
    if hi > 2.0 * lo:
        return sqrt(lo) * sqrt(hi)
    return 0.5 * (lo + hi)


cdef double _beta_ppf_from(double a, double b, double u, double tol, int *ok,
                           double x0, double lo) nogil:
    # x0 outside (lo, 1) means: start from the closed-form initial guess
    cdef double hi = 1.0
    cdef double x, f, pdf, dx, xn, t
    cdef int it
    cdef int cf_ok = 1
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    if x0 > lo and x0 < 1.0:
        x = x0
    else:
        lo = 0.0
        x = _initial_guess(a, b, u)
    for it in range(PPF_MAXIT):
        f = _betainc(a, b, x, &cf_ok) - u
        if not cf_ok:
            ok[0] = 0
            return x
        if fabs(f) <= tol:
            return x
        if f < 0.0:
            lo = x
        else:
            hi = x
        pdf = exp(_log_front(a, b, x)) / (x * (1.0 - x))
        if pdf > 0.0 and pdf < HUGE:
            # Halley correction; the pdf's log-derivative is closed form
            dx = f / pdf
            t = 0.5 * dx * ((a - 1.0) / x - (b - 1.0) / (1.0 - x))
            if fabs(t) < 0.5:
                dx = dx / (1.0 - t)
            xn = x - dx
            if xn > lo and xn < hi:
                if fabs(dx) <= HALLEY_STOP * x:
                    return xn
                x = xn
                continue
        if hi - lo <= 4.0 * EPS * hi or hi <= TINY:
            return 0.5 * (lo + hi)
        x = _split(lo, hi)
    ok[0] = 0
    return x


def norm_cdf(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _norm_cdf(x[i])
    return out


def norm_ppf(double[::1] p):
    cdef Py_ssize_t i, n = p.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _norm_ppf(p[i])
    return out


def betainc(double a, double b, double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef int ok = 1
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _betainc(a, b, x[i], &ok)
    if not ok:
        raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")
    return out


def beta_ppf(double a, double b, double[::1] u, double tol=1e-13):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef Py_ssize_t bad = -1
    cdef int ok
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            ok = 1
            o[i] = _beta_ppf(a, b, u[i], tol, &ok)
            if not ok:
                bad = i
                break
    if bad >= 0:
        raise ArithmeticError(
            f"beta quantile did not converge in {PPF_MAXIT} iterations (a={a}, b={b}, u={u[bad]})")
    return out


def minimal_window(double[::1] xs, Py_ssize_t k):
    """Start index of the narrowest window of ``k`` consecutive sorted values."""
    cdef Py_ssize_t i, best = 0, n = xs.shape[0]
    cdef double w, best_w
    best_w = xs[k - 1] - xs[0]
    with nogil:
        for i in range(1, n - k + 1):
            w = xs[i + k - 1] - xs[i]
            if w < best_w:
                best_w = w
                best = i
    return best


def beta_ppf_many(double[::1] a, double[::1] b, double[::1] u, double tol=1e-13):
    """Elementwise quantiles for arrays of shapes and probabilities."""
    cdef Py_ssize_t i, n = u.shape[0]
    cdef Py_ssize_t bad = -1
    cdef int ok
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            ok = 1
            o[i] = _beta_ppf(a[i], b[i], u[i], tol, &ok)
            if not ok:
                bad = i
                break
    if bad >= 0:
        raise ArithmeticError(
            f"beta quantile did not converge in {PPF_MAXIT} iterations "
            f"(a={a[bad]}, b={b[bad]}, u={u[bad]})")
    return out


def beta_ppf_sorted(double a, double b, double[::1] u, double tol=1e-13):
    """Quantiles for ascending ``u``; each solve starts from its predecessor.

    The previous root bounds the new one from below and a first-order step
    from it is usually within one Halley correction of the answer.
    """
    cdef Py_ssize_t i, n = u.shape[0]
    cdef Py_ssize_t bad = -1
    cdef int ok
    cdef double xp = -1.0, up = 0.0, pdf, x0, lo
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            ok = 1
            x0 = -1.0
            lo = 0.0
            if xp > 0.0 and xp < 1.0 and u[i] >= up:
                pdf = exp(_log_front(a, b, xp)) / (xp * (1.0 - xp))
                if pdf > 0.0 and pdf < HUGE:
                    x0 = xp + (u[i] - up) / pdf
                    lo = xp
            o[i] = _beta_ppf_from(a, b, u[i], tol, &ok, x0, lo)
            if not ok:
                bad = i
                break
            xp = o[i]
            up = u[i]
    if bad >= 0:
        raise ArithmeticError(
            f"beta quantile did not converge in {PPF_MAXIT} iterations (a={a}, b={b}, u={u[bad]})")
    return out
