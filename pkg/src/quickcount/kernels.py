"""Numerical core with backend selection.

The compiled extension ``quickcount._kernels`` is used when it has been built;
otherwise the numpy implementation in ``quickcount._fallback`` is used. Set
``QUICKCOUNT_BACKEND=python`` to force the fallback.

Every function accepts array-likes and returns float64 arrays, except
``minimal_window`` which returns an index.
"""
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("QUICKCOUNT_BACKEND", "").lower() in ("python", "fallback", "numpy"):
        raise ImportError("fallback forced by QUICKCOUNT_BACKEND")
    from . import _kernels as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"


# batches at least this large are solved in sorted order with warm starts
SORT_THRESHOLD = 64


def _vec(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel())


def _shaped(fn, x):
    x = np.asarray(x, dtype=np.float64)
    out = fn(_vec(x))
    return out.reshape(x.shape) if x.ndim else float(out[0])


def norm_cdf(x):
    """Standard normal CDF."""
    return _shaped(_impl.norm_cdf, x)


def norm_ppf(p):
    """Standard normal quantile."""
    return _shaped(_impl.norm_ppf, p)


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    a, b = float(a), float(b)
    return _shaped(lambda v: _impl.betainc(a, b, v), x)


def beta_ppf(a, b, u, tol=1e-13):
    """Beta(a, b) quantile; raises ArithmeticError on non-convergence."""
    a, b = float(a), float(b)
    if not (a > 0 and b > 0):
        raise ValueError(f"beta shapes must be positive, got a={a}, b={b}")
    u = np.asarray(u, dtype=np.float64)
    if u.size < SORT_THRESHOLD:
        return _shaped(lambda v: _impl.beta_ppf(a, b, v, tol), u)
    flat = u.ravel()
    order = np.argsort(flat, kind="stable")
    out = np.empty_like(flat)
    out[order] = _impl.beta_ppf_sorted(a, b, np.ascontiguousarray(flat[order]), tol)
    return out.reshape(u.shape)


def minimal_window(sorted_values, k):
    """Start index of the narrowest run of ``k`` consecutive sorted values."""
    xs = _vec(sorted_values)
    if not 1 <= k <= xs.size:
        raise ValueError(f"window size {k} outside 1..{xs.size}")
    return int(_impl.minimal_window(xs, int(k)))


def beta_ppf_many(a, b, u, tol=1e-13):
    """Elementwise Beta quantiles; ``a``, ``b`` and ``u`` broadcast together."""
    a, b, u = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (a, b, u)))
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise ValueError("beta shapes must be positive")
    out = _impl.beta_ppf_many(_vec(a), _vec(b), _vec(u), tol)
    return out.reshape(u.shape)
