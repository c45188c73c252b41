"""Quadrature rules on finite and semi-infinite intervals.

Two rule families cover all operator discretizations in this package:

* Chebyshev-point interpolatory rules ("clenshaw_curtis") for smooth
  integrands on finite intervals, built at the first-kind Chebyshev
  points so every node is strictly interior and every weight positive.
* Gauss-Jacobi rules for integrands with algebraic endpoint
  singularities (x-a)^alpha (b-x)^beta; the returned weights absorb the
  singular factor, so callers supply plain integrand values.

Semi-infinite intervals are handled by a rational transform of a rule
on (0,1); the scale constant of the transform is configurable.
"""

from dataclasses import dataclass
import math
import threading

import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_TRANSFORM_SCALE = 10.0


def _readonly(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Interval:
    """A real interval (lo, hi); endpoints may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if not lo < hi:
            raise ValueError(f"interval requires lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def finite(self):
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def width(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and strictly positive weights of a fixed-order rule."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes))
        object.__setattr__(self, "weights", _readonly(self.weights))

    def integrate(self, values):
        return float(np.dot(self.weights, values))


_cache_lock = threading.Lock()
_cc_cache = {}
_gj_cache = {}


def _cc_canonical(m):
    """Nodes/weights on (-1,1) at the first-kind Chebyshev points.

    The m-point rule is interpolatory (exact for degree m-1), has
    strictly interior nodes and positive weights, and m=1 degenerates
    to the midpoint rule ({0},{2}).
    """
    with _cache_lock:
        hit = _cc_cache.get(m)
    if hit is not None:
        return hit
    j = np.arange(1, m + 1)
    theta = (2 * j - 1) * np.pi / (2 * m)
    # sine form keeps the node set exactly symmetric (and exactly 0 at
    # the center for odd m)
    x = np.sin((m + 1 - 2 * j) * np.pi / (2 * m))[::-1].copy()
    k = np.arange(1, m // 2 + 1)
    if k.size:
        # w_j = (2/m) * (1 - 2 sum_k cos(2 k theta_j) / (4k^2 - 1))
        c = np.cos(2.0 * np.outer(theta, k))
        w = (2.0 / m) * (1.0 - 2.0 * (c / (4.0 * k**2 - 1.0)).sum(axis=1))
    else:
        w = np.full(m, 2.0 / m)
    w = w[::-1].copy()
    pair = (_readonly(x), _readonly(w))
    with _cache_lock:
        _cc_cache.setdefault(m, pair)
        return _cc_cache[m]


def clenshaw_curtis(interval, m):
    """Interpolatory rule of order m on a finite interval."""
    if m < 1:
        raise ValueError(f"rule order must be >= 1, got {m}")
    if not interval.finite:
        raise ValueError("clenshaw_curtis requires finite endpoints")
    x, w = _cc_canonical(int(m))
    half = 0.5 * (interval.hi - interval.lo)
    mid = 0.5 * (interval.hi + interval.lo)
    return QuadratureRule(mid + half * x, half * w, int(m))


def semi_infinite_rule(base, endpoint, side, scale=DEFAULT_TRANSFORM_SCALE):
    """Transform a rule on (0,1) to (endpoint, inf) or (-inf, endpoint).

    Uses the rational map phi(u) = endpoint + scale*u/(1-u) (mirrored
    for the left-infinite side); weights pick up phi'(u) =
    scale/(1-u)^2 and stay positive.
    """
    if scale <= 0:
        raise ValueError(f"transform scale must be positive, got {scale}")
    u = np.asarray(base.nodes)
    w = np.asarray(base.weights)
    if u.min() <= 0.0 or u.max() >= 1.0:
        raise ValueError("base rule must have nodes strictly inside (0,1)")
    endpoint = float(endpoint)
    if not math.isfinite(endpoint):
        raise ValueError("endpoint must be finite")
    stretch = scale * u / (1.0 - u)
    wt = w * scale / (1.0 - u) ** 2
    if side == "right-infinite":
        return QuadratureRule(endpoint + stretch, wt, base.order)
    if side == "left-infinite":
        return QuadratureRule((endpoint - stretch)[::-1], wt[::-1], base.order)
    raise ValueError(f"side must be 'left-infinite' or 'right-infinite', got {side!r}")


def _jacobi_canonical(m, alpha, beta):
    """Gauss nodes/log-weights for the weight (1+t)^alpha (1-t)^beta on (-1,1).

    Golub-Welsch: the nodes are the eigenvalues of the symmetric
    tridiagonal Jacobi matrix of the three-term recurrence.  Weights
    come from the Christoffel function, w_j = 1/sum_k p_k(t_j)^2 over
    the orthonormal polynomials p_0..p_{m-1}; unlike the squared first
    eigenvector component this stays accurate when weights span many
    orders of magnitude (large alpha).
    """
    key = (m, float(alpha), float(beta))
    with _cache_lock:
        hit = _gj_cache.get(key)
    if hit is not None:
        return hit
    # Standard Jacobi parameters: weight (1-t)^A (1+t)^B.
    A, B = float(beta), float(alpha)
    s = A + B
    k = np.arange(m, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        diag = (B**2 - A**2) / ((2 * k + s) * (2 * k + s + 2))
    diag[0] = (B - A) / (s + 2)
    k = np.arange(1, m + 1, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        off2 = (
            4 * k * (k + A) * (k + B) * (k + s)
            / ((2 * k + s) ** 2 * (2 * k + s + 1) * (2 * k + s - 1))
        )
    off2[0] = 4 * (1 + A) * (1 + B) / ((s + 2) ** 2 * (s + 3))
    ofull = np.sqrt(off2)
    off = ofull[: m - 1]
    t = eigh_tridiagonal(diag, off, eigvals_only=True)
    if m > 1:
        # polish the eigenvalue nodes with Newton steps on the degree-m
        # orthonormal polynomial; the raw eigenvalues carry noise that
        # grows with order and, for singular weights, dominates the
        # quadrature error well before roundoff otherwise would
        for _ in range(2):
            p_prev = np.zeros(m)
            p_cur = np.ones(m)
            d_prev = np.zeros(m)
            d_cur = np.zeros(m)
            for j in range(m):
                b_lo = ofull[j - 1] if j else 0.0
                p_next = ((t - diag[j]) * p_cur - b_lo * p_prev) / ofull[j]
                d_next = (p_cur + (t - diag[j]) * d_cur - b_lo * d_prev) / ofull[j]
                p_prev, p_cur = p_cur, p_next
                d_prev, d_cur = d_cur, d_next
            step = p_cur / d_cur
            t = t - np.where(np.isfinite(step), step, 0.0)
    logmu0 = (
        (s + 1) * math.log(2.0)
        + math.lgamma(A + 1)
        + math.lgamma(B + 1)
        - math.lgamma(s + 2)
    )
    p_prev = np.zeros(m)
    p_cur = np.full(m, math.exp(-0.5 * logmu0))
    sumsq = p_cur**2
    for k in range(m - 1):
        p_next = ((t - diag[k]) * p_cur - (off[k - 1] * p_prev if k else 0.0)) / off[k]
        sumsq += p_next**2
        p_prev, p_cur = p_cur, p_next
    logw = -np.log(sumsq)
    pair = (_readonly(t), _readonly(logw))
    with _cache_lock:
        _gj_cache.setdefault(key, pair)
        return _gj_cache[key]


def gauss_jacobi(interval, alpha, beta, m):
    """Gauss rule matched to (x-a)^alpha (b-x)^beta endpoint behavior.

    The weights absorb the singular factor: for integrands f with
    f(x) ~ (x-a)^alpha near a and (b-x)^beta near b and smooth
    quotient, sum(w*f(x)) converges exponentially while the caller
    supplies plain f values at the (strictly interior) nodes.
    """
    if alpha <= -1 or beta <= -1:
        raise ValueError(f"exponents must exceed -1, got alpha={alpha}, beta={beta}")
    if m < 1:
        raise ValueError(f"rule order must be >= 1, got {m}")
    if not interval.finite:
        raise ValueError("gauss_jacobi requires finite endpoints")
    t, logw = _jacobi_canonical(int(m), alpha, beta)
    a, b = interval.lo, interval.hi
    half = 0.5 * (b - a)
    x = a + half * (t + 1.0)
    # Absorb the singular factor in log space to dodge over/underflow
    # when alpha or beta is large.
    logwt = (
        logw
        + (alpha + beta + 1.0) * math.log(half)
        - alpha * np.log(x - a)
        - beta * np.log(b - x)
    )
    return QuadratureRule(x, np.exp(logwt), int(m))


def rule_for_interval(interval, m, singular_exponent=None,
                      scale=DEFAULT_TRANSFORM_SCALE):
    """Build the natural rule for an interval.

    Finite intervals get the Chebyshev-point rule, or a Gauss-Jacobi
    rule with exponent pair (singular_exponent, 0) when a left-endpoint
    exponent is declared and the interval starts at 0.  Semi-infinite
    intervals get the rational-transformed rule.  Doubly-infinite
    intervals are rejected.
    """
    lo_inf = math.isinf(interval.lo)
    hi_inf = math.isinf(interval.hi)
    if lo_inf and hi_inf:
        raise ValueError("doubly-infinite intervals are unsupported")
    if lo_inf or hi_inf:
        base = clenshaw_curtis(Interval(0.0, 1.0), m)
        if hi_inf:
            return semi_infinite_rule(base, interval.lo, "right-infinite", scale)
        return semi_infinite_rule(base, interval.hi, "left-infinite", scale)
    if singular_exponent is not None and interval.lo == 0.0:
        return gauss_jacobi(interval, singular_exponent, 0.0, m)
    return clenshaw_curtis(interval, m)
