"""Spectral statistics of random-matrix ensembles via operator determinants.

Counting probabilities, k-th extreme-value laws, level spacing densities,
and two-point joint laws, each reduced to z-derivatives of a Fredholm
determinant of the matching kernel and evaluated under dimension-doubling
error control.  The orthogonal and symplectic families (beta 1 and 4) are
assembled algebraically from the reflection-split determinants, so every
value ultimately rests on scalar-kernel machinery.
"""

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.polynomial.chebyshev as cheb

from .chebapprox import (
    ChebInterpolant,
    _cheb_nodes,
    bary_eval,
    cheb_fit,
    derivative,
    moments,
    numerical_support,
)
from .errors import OutOfDomainError
from .fredholm import (
    DEFAULT_M_MAX,
    DEFAULT_M_MIN,
    DEFAULT_TOL,
    ValueWithError,
    _default_radius,
    _transformed_derivative,
    det_family,
    discretize,
    dzdet,
    partial_z_family,
    with_error_control,
)
from .kernels import (
    KernelSpec,
    airy_kernel,
    airy_process_kernel,
    bessel_kernel,
    gse_matrix_kernel,
    hermite_kernel,
    laguerre_kernel,
    sine_kernel,
    sine_kernel_even,
    sine_kernel_odd,
    v_airy_kernel,
    v_bessel_kernel,
)
from .quadrature import Interval, clenshaw_curtis

FINITE_N, BULK, SOFT, HARD = "finite-n", "bulk", "soft", "hard"
_REGIMES = (FINITE_N, BULK, SOFT, HARD)
_POINT_REGIMES = (BULK, SOFT, HARD)
_SIGNS = ("+", "-")


# ---------------------------------------------------------------------------
# small shared helpers

def _opts(tol, m_max):
    return {
        "tol": DEFAULT_TOL if tol is None else float(tol),
        "m_max": DEFAULT_M_MAX if m_max is None else int(m_max),
    }


def _real(v):
    """Fold the residual imaginary part of a contour result into its error."""
    value = complex(v.value)
    return ValueWithError(
        value=value.real, err=v.err + abs(value.imag), m_used=v.m_used
    )


def _certain(value):
    return ValueWithError(value=float(value), err=0.0)


def _merge_m(*parts):
    ms = [p.m_used for p in parts if p.m_used is not None]
    return max(ms) if ms else None


def _check_count(k):
    if not (isinstance(k, (int, np.integer)) and not isinstance(k, bool)) or k < 0:
        raise ValueError(f"count k must be a nonnegative integer, got {k!r}")
    return int(k)


def _check_beta(beta):
    if beta not in (1, 2, 4):
        raise ValueError(f"beta must be 1, 2, or 4, got {beta!r}")
    return int(beta)


def _norm_sign(sign):
    if sign == "−":
        return "-"
    if sign not in _SIGNS:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return sign


def _point(s, lower=None):
    s = float(s)
    if not math.isfinite(s):
        raise OutOfDomainError(f"point argument must be finite, got {s}")
    if lower is not None and s < lower:
        raise OutOfDomainError(f"point argument must be >= {lower}, got {s}")
    return s


def _as_interval(obj):
    """Interval passed through; a (lo, hi) pair likewise, with lo >= hi
    collapsing to None (the empty set)."""
    if obj is None or isinstance(obj, Interval):
        return obj
    lo, hi = float(obj[0]), float(obj[1])
    if not lo < hi:
        return None
    return Interval(lo, hi)


def _scaled(spec, factor):
    """The kernel multiplied by a constant, metadata preserved."""
    remake = None
    if spec.remake is not None:
        remake = lambda k: _scaled(spec.remake(k), factor)
    return KernelSpec(
        eval=lambda x, y: factor * spec.eval(x, y),
        diag=(lambda x: factor * spec.diag(x)) if spec.diag is not None else None,
        left_singular_exponent=spec.left_singular_exponent,
        inner_order=spec.inner_order,
        symmetric=spec.symmetric,
        cauchy_radius=spec.cauchy_radius,
        remake=remake,
    )


def _unitary_kernel(regime, *, n=None, alpha=None):
    """The determinantal (beta = 2) kernel for a regime: Hermite or
    Laguerre projection at finite n, sinc in the bulk, Airy at the soft
    edge, Bessel of order alpha at the hard edge."""
    if regime == FINITE_N:
        if n is None or int(n) < 1:
            raise ValueError("finite-n queries require n >= 1")
        if alpha is None:
            return hermite_kernel(int(n))
        return laguerre_kernel(int(n), float(alpha))
    if regime == BULK:
        return sine_kernel()
    if regime == SOFT:
        return airy_kernel()
    if regime == HARD:
        if alpha is None:
            raise ValueError("hard-edge queries require alpha")
        return bessel_kernel(float(alpha))
    raise ValueError(f"regime must be one of {_REGIMES}, got {regime!r}")


# ---------------------------------------------------------------------------
# counting probabilities

def e2_count(k, interval, regime=SOFT, *, n=None, alpha=None, tol=None, m_max=None):
    """Probability that exactly k levels of a determinantal (beta = 2)
    ensemble fall in the interval.

    Computed as (-1)^k/k! times the k-th z-derivative at z = 1 of
    det(I - z K) on the interval, with K chosen by the regime.  An empty
    interval gives the exact point mass at zero levels.
    """
    k = _check_count(k)
    iv = _as_interval(interval)
    if iv is None:
        return _certain(1.0 if k == 0 else 0.0)
    kern = _unitary_kernel(regime, n=n, alpha=alpha)
    return _real(dzdet(kern, iv, k=k, **_opts(tol, m_max)))


def e_pm(sign, k, s, regime=BULK, alpha=None, *, tol=None, m_max=None):
    """Reflection-split counting probabilities at a point s.

    Bulk: plain z-derivatives of the reduced even or odd sinc-kernel
    determinant on (0, s/2), the two halves of the sinc kernel on the
    symmetric interval (-s/2, s/2).  Soft and hard edge: derivatives of
    det(I -+ sqrt(z) V) at z = 1 with V the rank-compressed Airy kernel
    on (s, inf), or the rank-compressed Bessel kernel of order alpha on
    (0, sqrt(s)).
    """
    sign = _norm_sign(sign)
    k = _check_count(k)
    opts = _opts(tol, m_max)
    sqrt_sign = 1.0 if sign == "+" else -1.0
    if regime == BULK:
        s = _point(s, lower=0.0)
        if s == 0.0:
            return _certain(1.0 if k == 0 else 0.0)
        base = sine_kernel_even() if sign == "+" else sine_kernel_odd()
        kern = _scaled(base, 2.0)
        return _real(dzdet(kern, Interval(0.0, 0.5 * s), k=k, **opts))
    if regime == SOFT:
        s = _point(s)
        return _real(
            dzdet(
                v_airy_kernel(),
                Interval(s, np.inf),
                k=k,
                transform="det-of-sqrt-z",
                sqrt_sign=sqrt_sign,
                **opts,
            )
        )
    if regime == HARD:
        if alpha is None:
            raise ValueError("hard-edge queries require alpha")
        s = _point(s, lower=0.0)
        if s == 0.0:
            return _certain(1.0 if k == 0 else 0.0)
        return _real(
            dzdet(
                v_bessel_kernel(float(alpha)),
                Interval(0.0, math.sqrt(s)),
                k=k,
                transform="det-of-sqrt-z",
                sqrt_sign=sqrt_sign,
                **opts,
            )
        )
    raise ValueError(
        f"regime for sign queries must be one of {_POINT_REGIMES}, got {regime!r}"
    )


# ---------------------------------------------------------------------------
# beta families assembled from the split determinants

def _pm_cache(regime, s, alpha, tol, m_max):
    cache = {}

    def get(sign, j):
        key = (sign, j)
        if key not in cache:
            cache[key] = e_pm(sign, j, s, regime, alpha=alpha, tol=tol, m_max=m_max)
        return cache[key]

    return get


def _row_beta2(get, kmax):
    """E_2(k) = sum_j E_+(j) E_-(k-j) for k = 0..kmax."""
    out = []
    for k in range(kmax + 1):
        pairs = [(get("+", j), get("-", k - j)) for j in range(k + 1)]
        value = sum(a.value * b.value for a, b in pairs)
        err = sum(
            abs(a.value) * b.err + abs(b.value) * a.err + a.err * b.err
            for a, b in pairs
        )
        parts = [a for a, _ in pairs] + [b for _, b in pairs]
        out.append(ValueWithError(value=value, err=err, m_used=_merge_m(*parts)))
    return out


def _row_beta1_bulk(get, kmax):
    """The alternating bulk recursion: E_1(0) = E_+(0), then
    E_1(2j-1) = E_-(j-1) - E_1(2j-2) and E_1(2j) = E_+(j) - E_1(2j-1)."""
    out = []
    for k in range(kmax + 1):
        if k == 0:
            out.append(get("+", 0))
            continue
        a = get("-", (k - 1) // 2) if k % 2 else get("+", k // 2)
        b = out[k - 1]
        out.append(
            ValueWithError(
                value=a.value - b.value, err=a.err + b.err, m_used=_merge_m(a, b)
            )
        )
    return out


def _halving_coefficient(j):
    # Maclaurin coefficients of 1 - sqrt(1 - x^2), central binomials over
    # powers of two; they weight the odd back-references of the edge
    # recursion
    return math.comb(2 * j, j) / (2 ** (2 * j + 1) * (j + 1))


def _row_beta1_edge(get, kmax):
    """The edge recursion: E_1(2i) = E_+(i) - sum_j c_j E_1(2i-2j-1) and
    E_1(2i+1) = (E_+(i) + E_-(i))/2 - E_1(2i)."""
    out = []
    for k in range(kmax + 1):
        if k % 2 == 0:
            i = k // 2
            base = get("+", i)
            value, err = base.value, base.err
            parts = [base]
            for j in range(i):
                c = _halving_coefficient(j)
                prev = out[k - 2 * j - 1]
                value -= c * prev.value
                err += c * prev.err
                parts.append(prev)
            out.append(ValueWithError(value=value, err=err, m_used=_merge_m(*parts)))
        else:
            i = (k - 1) // 2
            p, q = get("+", i), get("-", i)
            prev = out[k - 1]
            out.append(
                ValueWithError(
                    value=0.5 * (p.value + q.value) - prev.value,
                    err=0.5 * (p.err + q.err) + prev.err,
                    m_used=_merge_m(p, q, prev),
                )
            )
    return out


def _midpoint(p, q):
    return ValueWithError(
        value=0.5 * (p.value + q.value),
        err=0.5 * (p.err + q.err),
        m_used=_merge_m(p, q),
    )


def e_bulk(beta, k, s, *, tol=None, m_max=None):
    """Probability of exactly k levels in a bulk window of length s.

    beta = 2 convolves the split probabilities, beta = 1 runs the
    alternating recursion, beta = 4 averages the split values at
    doubled window length.
    """
    beta = _check_beta(beta)
    k = _check_count(k)
    s = _point(s, lower=0.0)
    if s == 0.0:
        return _certain(1.0 if k == 0 else 0.0)
    if beta == 4:
        get = _pm_cache(BULK, 2.0 * s, None, tol, m_max)
        return _midpoint(get("+", k), get("-", k))
    get = _pm_cache(BULK, s, None, tol, m_max)
    row = _row_beta2(get, k) if beta == 2 else _row_beta1_bulk(get, k)
    return row[k]


def e_soft(beta, k, s, *, tol=None, m_max=None):
    """Probability of exactly k levels above s at the soft edge."""
    beta = _check_beta(beta)
    k = _check_count(k)
    s = _point(s)
    get = _pm_cache(SOFT, s, None, tol, m_max)
    if beta == 4:
        return _midpoint(get("+", k), get("-", k))
    row = _row_beta2(get, k) if beta == 2 else _row_beta1_edge(get, k)
    return row[k]


def _hard_order(beta, alpha):
    """Order of the split determinants backing a hard-edge beta family.

    The orthogonal family of parameter alpha rides on order 2 alpha + 1,
    the symplectic family on alpha - 1, the unitary family on alpha
    itself.
    """
    alpha = float(alpha)
    order = {1: 2.0 * alpha + 1.0, 2: alpha, 4: alpha - 1.0}[beta]
    if not order > -1.0:
        raise ValueError(
            f"hard-edge beta={beta} requires alpha > {beta - 2}, got {alpha}"
        )
    return order


def e_hard(beta, k, s, alpha, *, tol=None, m_max=None):
    """Probability of exactly k levels in (0, s) at the hard edge with
    ensemble parameter alpha."""
    beta = _check_beta(beta)
    k = _check_count(k)
    order = _hard_order(beta, alpha)
    s = _point(s, lower=0.0)
    if s == 0.0:
        return _certain(1.0 if k == 0 else 0.0)
    get = _pm_cache(HARD, s, order, tol, m_max)
    if beta == 4:
        return _midpoint(get("+", k), get("-", k))
    row = _row_beta2(get, k) if beta == 2 else _row_beta1_edge(get, k)
    return row[k]


# ---------------------------------------------------------------------------
# cumulative distributions of extreme levels

def _sum_row(row, offset=0.0, sign=1.0):
    value = offset + sign * sum(p.value for p in row)
    err = sum(p.err for p in row)
    return ValueWithError(value=value, err=err, m_used=_merge_m(*row))


def cdf_kth(beta, k, s, regime=SOFT, alpha=None, *, tol=None, m_max=None):
    """CDF of the k-th largest level (soft edge) or k-th smallest level
    (hard edge, parameter alpha).

    Partial sums of the counting probabilities; the symplectic case
    routes through the orthogonal one by interlacing, sharing the code
    path exactly.
    """
    beta = _check_beta(beta)
    k = int(k)
    if k < 1:
        raise ValueError(f"order statistic index must be >= 1, got {k}")
    if regime == SOFT:
        if beta == 4:
            return cdf_kth(1, 2 * k, s, SOFT, tol=tol, m_max=m_max)
        s = _point(s)
        get = _pm_cache(SOFT, s, None, tol, m_max)
        row = (_row_beta2 if beta == 2 else _row_beta1_edge)(get, k - 1)
        return _sum_row(row)
    if regime == HARD:
        if alpha is None:
            raise ValueError("hard-edge queries require alpha")
        if beta == 4:
            shifted = (float(alpha) - 2.0) / 2.0
            return cdf_kth(1, 2 * k, s, HARD, alpha=shifted, tol=tol, m_max=m_max)
        order = _hard_order(beta, alpha)
        s = _point(s, lower=0.0)
        if s == 0.0:
            return _certain(0.0)
        get = _pm_cache(HARD, s, order, tol, m_max)
        row = (_row_beta2 if beta == 2 else _row_beta1_edge)(get, k - 1)
        return _sum_row(row, offset=1.0, sign=-1.0)
    raise ValueError(f"cdf_kth supports soft and hard regimes, got {regime!r}")


def tracy_widom(beta, s, *, tol=None, m_max=None):
    """CDF of the largest level at the soft edge; the symplectic variant
    carries its customary sqrt(2) argument rescaling."""
    beta = _check_beta(beta)
    if beta == 4:
        return cdf_kth(4, 1, math.sqrt(2.0) * float(s), SOFT, tol=tol, m_max=m_max)
    return cdf_kth(beta, 1, float(s), SOFT, tol=tol, m_max=m_max)


# ---------------------------------------------------------------------------
# densities and moments

DEFAULT_FIT_TOL = 3e-14


def _spacing_fit(beta, k, domain, fit_tol, tol, m_max):
    """Chebyshev fit of the weighted count sum whose second derivative
    is the spacing density, with its scale factor.

    The symplectic family reads off the orthogonal one at doubled
    argument (p_4(k; s) = 2 p_1(2k+1; 2s)), so its sum is fitted at the
    stretched argument and the derivative carries a factor one half.
    """
    beta = _check_beta(beta)
    k = _check_count(k)
    if beta == 4:
        inner_beta, inner_k, stretch, scale = 1, 2 * k + 1, 2.0, 0.5
    else:
        inner_beta, inner_k, stretch, scale = beta, k, 1.0, 1.0
    if domain is None:
        domain = Interval(0.0, (inner_k + 8.0) / stretch)
    weights = [inner_k + 1 - j for j in range(inner_k + 1)]

    def weighted_sum(s):
        s = float(s)
        if s <= 0.0:
            return float(weights[0])
        get = _pm_cache(BULK, stretch * s, None, tol, m_max)
        row = (_row_beta2 if inner_beta == 2 else _row_beta1_bulk)(get, inner_k)
        return sum(w * p.value for w, p in zip(weights, row))

    return cheb_fit(weighted_sum, domain, fit_tol), scale


def spacing_density(beta, k, *, domain=None, fit_tol=DEFAULT_FIT_TOL, tol=None,
                    m_max=None):
    """Interpolant of the k-th spacing density in the bulk: the second
    derivative of sum_{j<=k} (k+1-j) E_beta(j; s)."""
    fit, scale = _spacing_fit(beta, k, domain, fit_tol, tol, m_max)
    dd = derivative(derivative(fit))
    if scale == 1.0:
        return dd
    return ChebInterpolant(
        interval=dd.interval, samples=scale * np.asarray(dd.samples), degree=dd.degree
    )


def _t_integral(c):
    # integral of a Chebyshev series over (-1, 1)
    n = np.arange(len(c))
    w = np.zeros(len(c))
    even = n % 2 == 0
    w[even] = 2.0 / (1.0 - n[even].astype(float) ** 2)
    return float(np.dot(w, c))


def _stats_of_curvature(fit, scale):
    """(mean, variance, skewness, excess kurtosis) of the density
    scale * W'' given the fit W, by parts: with W and W' vanishing at
    the right end, the raw moments are mu_0 = -W'(lo), mu_1 = W(lo),
    mu_j = j (j-1) integral of s^(j-2) W for j >= 2, times the scale."""
    iv = fit.interval
    half = 0.5 * iv.width
    coeff = fit.coefficients()
    smap = np.array([0.5 * (iv.lo + iv.hi), half])
    mu = np.empty(5)
    mu[0] = -scale * bary_eval(derivative(fit), iv.lo)
    mu[1] = scale * bary_eval(fit, iv.lo)
    acc = coeff
    for j in (2, 3, 4):
        mu[j] = j * (j - 1.0) * scale * half * _t_integral(acc)
        acc = cheb.chebmul(acc, smap)
    mean = mu[1] / mu[0]
    m = mu / mu[0]
    var = m[2] - mean**2
    mu3 = m[3] - 3.0 * mean * m[2] + 2.0 * mean**3
    mu4 = m[4] - 4.0 * mean * m[3] + 6.0 * mean**2 * m[2] - 3.0 * mean**4
    return np.array([mean, var, mu3 / var**1.5, mu4 / var**2 - 3.0])


def spacing_moments(beta, k, *, domain=None, fit_tol=DEFAULT_FIT_TOL, tol=None,
                    m_max=None):
    """Four moments (mean, variance, skewness, excess kurtosis) of the
    k-th bulk spacing distribution.

    Integration by parts trades both derivatives of the fitted count
    sum for integrals against low powers, so no spectral
    differentiation enters; the error field combines the change under
    halving the fit degree with the fit tolerance.
    """
    fit, scale = _spacing_fit(beta, k, domain, fit_tol, tol, m_max)
    full = _stats_of_curvature(fit, scale)
    mh = max(fit.degree - 2, 4)
    reduced = ChebInterpolant(
        interval=fit.interval,
        samples=bary_eval(fit, _cheb_nodes(fit.interval, mh)),
        degree=mh,
    )
    coarse = _stats_of_curvature(reduced, scale)
    return tuple(
        ValueWithError(value=v, err=abs(v - w) + 10.0 * fit_tol * max(1.0, abs(v)))
        for v, w in zip(full, coarse)
    )


def density_moments(p):
    """Four moments of the distribution whose density the interpolant
    represents, via its cumulative integral."""
    c = p.coefficients()
    ci = cheb.chebint(c) * (0.5 * p.interval.width)
    m = p.degree + 1
    t = -np.cos(np.arange(m + 1) * np.pi / m)
    vals = cheb.chebval(t, ci)
    cdf = ChebInterpolant(interval=p.interval, samples=vals - vals[0], degree=m)
    return moments(cdf)


def distribution_moments(cdf, seed, *, fit_tol=DEFAULT_FIT_TOL, support_tol=1e-15):
    """Four moments of a distribution given its CDF as a callable.

    The support is detected from the seed interval, the CDF fitted by
    Chebyshev interpolation, and the moments read off the fit.  The
    support tolerance sits at the evaluation noise floor because tail
    truncation enters the fourth moment amplified by the fourth power
    of the distance to the mean.
    """
    supp = numerical_support(cdf, seed, support_tol)
    fit = cheb_fit(cdf, supp, fit_tol)
    return moments(fit)


# ---------------------------------------------------------------------------
# matrix-kernel route for the symplectic soft edge

def _half_gse_blocks():
    return [[_scaled(kern, 0.5) for kern in row] for row in gse_matrix_kernel()]


def gse_soft_matrix(k, interval, *, tol=None, m_max=None):
    """Symplectic soft-edge counting probability from the 2x2 matrix
    kernel: k-th derivative of sqrt(det(I - (z/2) blocks)) at z = 1."""
    k = _check_count(k)
    iv = _as_interval(interval)
    if iv is None:
        return _certain(1.0 if k == 0 else 0.0)
    return _real(
        dzdet(
            _half_gse_blocks(),
            [iv, iv],
            k=k,
            transform="sqrt-of-det",
            **_opts(tol, m_max),
        )
    )


def d4_sqrt(z, s, *, tol=None, m_max=None):
    """Square root of the symplectic matrix-kernel determinant at complex
    z, on (s, inf).

    Taken factor by factor over the discretized eigenvalues, which keeps
    the branch that equals 1 at z = 0 wherever no single factor crosses
    the negative real axis.
    """
    z = complex(z)
    blocks = _half_gse_blocks()
    iv = Interval(float(s), np.inf)

    def compute(m):
        factor = max(1, m // DEFAULT_M_MIN)
        scaled = [
            [kern.with_inner_order(kern.inner_order * factor)
             if kern.inner_order is not None else kern
             for kern in row]
            for row in blocks
        ]
        a = discretize(scaled, [iv, iv], m)
        nu = np.linalg.eigvals(a.matrix)
        return complex(np.prod(np.sqrt(1.0 - z * nu)))

    return complex(with_error_control(compute, **_opts(tol, m_max)).value)


def d4_generating(z, s, *, tol=None, m_max=None):
    """Mean of the two square-root determinants det(I -+ sqrt(z) V) of
    the rank-compressed Airy kernel on (s, inf); entire in z, and equal
    to d4_sqrt on its branch domain."""
    z = complex(z)
    w = cmath.sqrt(z)
    iv = Interval(float(s), np.inf)

    def compute(m):
        fam = det_family(discretize(v_airy_kernel(), iv, m))
        return 0.5 * (fam(w) + fam(-w))

    return complex(with_error_control(compute, **_opts(tol, m_max)).value)


def d1_generating(z, s, *, tol=None, m_max=None):
    """Generating function of the orthogonal soft-edge counting
    probabilities in the variable (1 - z), assembled from the two
    determinants det(I -+ sqrt(z(2-z)) V) on (s, inf)."""
    z = complex(z)
    if z == 2.0:
        raise ValueError("the generating combination is singular at z = 2")
    w = cmath.sqrt(z * (2.0 - z))
    r = cmath.sqrt(z / (2.0 - z))
    iv = Interval(float(s), np.inf)

    def compute(m):
        fam = det_family(discretize(v_airy_kernel(), iv, m))
        return 0.5 * ((1.0 + r) * fam(w) + (1.0 - r) * fam(-w))

    return complex(with_error_control(compute, **_opts(tol, m_max)).value)


# ---------------------------------------------------------------------------
# joint laws on several intervals

def generalized_spacing(multi_index, intervals, regime=BULK, *, n=None, alpha=None,
                        tol=None, m_max=None):
    """Probability that interval J_j holds exactly multi_index[j] levels,
    for mutually disjoint intervals of a determinantal ensemble.

    Supports multi-indices with at most one nonzero entry: that block
    column's z-dependence is isolated and differentiated by a Cauchy
    contour, the other columns stay frozen at z = 1.
    """
    idx = [(int(a)) for a in multi_index]
    if any(a < 0 for a in idx) or not idx:
        raise ValueError(f"multi-index entries must be >= 0, got {multi_index!r}")
    ivs = [_as_interval(j) for j in intervals]
    if len(ivs) != len(idx):
        raise ValueError(
            f"got {len(idx)} counts for {len(ivs)} intervals"
        )
    if any(iv is None for iv in ivs):
        raise ValueError("intervals must be nonempty")
    for a, b in zip(sorted(ivs, key=lambda iv: iv.lo), sorted(ivs, key=lambda iv: iv.lo)[1:]):
        if b.lo < a.hi:
            raise ValueError(
                f"intervals must be mutually disjoint, got overlap at ({b.lo}, {a.hi})"
            )
    nonzero = [p for p, a in enumerate(idx) if a > 0]
    if len(nonzero) > 1:
        raise NotImplementedError(
            "multi-indices with two or more nonzero entries are not supported"
        )
    kern = _unitary_kernel(regime, n=n, alpha=alpha)
    grid = [[kern for _ in ivs] for _ in ivs]
    opts = _opts(tol, m_max)
    if not nonzero:
        return _real(dzdet(grid, ivs, k=0, **opts))
    pos, k = nonzero[0], idx[nonzero[0]]
    radius = _default_radius(grid)
    prefactor = (-1.0) ** k / math.factorial(k)

    def compute(m):
        factor = max(1, m // DEFAULT_M_MIN)
        scaled = [
            [kk.with_inner_order(kk.inner_order * factor)
             if kk.inner_order is not None else kk
             for kk in row]
            for row in grid
        ]
        a = discretize(scaled, ivs, m)
        fam = partial_z_family(a, [pos])
        return prefactor * _transformed_derivative(
            a, fam, k, 1.0, "identity", 1.0, radius, opts["tol"]
        )

    return _real(with_error_control(compute, **opts))


def joint_largest_two(x, y, *, tol=None, m_max=None):
    """Joint CDF of the two largest soft-edge levels of the unitary
    family: P(largest <= x, second largest <= y).

    For x <= y this is the marginal CDF of the largest level; otherwise
    the one-level correction on the split (y, x), (x, inf) is added to
    the marginal at y.
    """
    x, y = _point(x), _point(y)
    if x <= y:
        return tracy_widom(2, x, tol=tol, m_max=m_max)
    base = tracy_widom(2, y, tol=tol, m_max=m_max)
    corr = generalized_spacing(
        (1, 0), [Interval(y, x), Interval(x, np.inf)], SOFT, tol=tol, m_max=m_max
    )
    return ValueWithError(
        value=base.value + corr.value,
        err=base.err + corr.err,
        m_used=_merge_m(base, corr),
    )


def airy2_joint(t, s1, s2, *, tol=None, m_max=None):
    """Joint CDF of the two-time maximum-eigenvalue process at lag t:
    the 2x2 block determinant with the one-parameter Airy extension on
    the off-diagonal blocks."""
    t = float(t)
    blocks = [
        [airy_kernel(), airy_process_kernel(t)],
        [airy_process_kernel(-t), airy_kernel()],
    ]
    ivs = [Interval(_point(s1), np.inf), Interval(_point(s2), np.inf)]
    return _real(dzdet(blocks, ivs, k=0, **_opts(tol, m_max)))


_TW2_SEED = Interval(-6.0, 2.0)


def airy2_cov(t, *, tol=1e-6, m_max=None):
    """Covariance of the two-time maximum-eigenvalue process at lag t.

    Integrates the excess of the joint CDF over the product of its
    marginals on a tensor grid of Chebyshev points (the covariance
    identity for distribution functions), over the marginal support
    extended by 2 units.  The lag-zero value is the marginal variance.
    """
    t = abs(float(t))
    if t == 0.0:
        return distribution_moments(
            lambda x: tracy_widom(2, x, m_max=m_max).value, _TW2_SEED
        )[1]
    supp = numerical_support(
        lambda x: tracy_widom(2, x, m_max=m_max).value, _TW2_SEED, 1e-12
    )
    box = Interval(supp.lo - 2.0, supp.hi + 2.0)
    point_tol = max(1e-11, 2.5e-4 * tol)
    acc_err = {}

    def compute(npts):
        rule = clenshaw_curtis(box, npts)
        xs, ws = rule.nodes, rule.weights
        marg = [tracy_widom(2, xi, tol=point_tol, m_max=m_max) for xi in xs]
        total = 0.0
        point_err = 0.0
        for i in range(npts):
            for j in range(i, npts):
                joint = airy2_joint(t, xs[i], xs[j], tol=point_tol, m_max=m_max)
                excess = joint.value - marg[i].value * marg[j].value
                mult = (1.0 if i == j else 2.0) * ws[i] * ws[j]
                total += mult * excess
                point_err += mult * (joint.err + marg[i].err + marg[j].err)
        acc_err[npts] = point_err
        return total

    ladder = with_error_control(compute, tol=tol, m_min=12, m_max=48)
    value = complex(ladder.value).real
    err = ladder.err + acc_err.get(ladder.m_used, 0.0)
    if not abs(value) > err:
        warnings.warn(
            f"covariance at lag {t} is below the achievable tolerance "
            f"({value:.3e} with error {err:.1e})",
            stacklevel=2,
        )
    return ValueWithError(value=value, err=err, m_used=ladder.m_used)


# ---------------------------------------------------------------------------
# query record and dispatch

@dataclass(frozen=True)
class EnsembleQuery:
    """A validated point or interval query against one ensemble family.

    beta is 1, 2, 4 or one of the split signs '+', '-'; k a count or a
    multi-index; where a point s, an interval, or a sequence of
    intervals matching a multi-index.
    """

    beta: object
    k: object
    regime: str
    where: object
    n: Optional[int] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        beta = self.beta
        if beta == "−":
            beta = "-"
            object.__setattr__(self, "beta", beta)
        if beta not in (1, 2, 4, "+", "-"):
            raise ValueError(f"beta must be 1, 2, 4, '+', or '-', got {self.beta!r}")
        if self.regime not in _REGIMES:
            raise ValueError(f"regime must be one of {_REGIMES}, got {self.regime!r}")
        if self.regime == HARD:
            if self.alpha is None or not float(self.alpha) > -1.0:
                raise ValueError("hard regime requires alpha > -1")
        if self.regime == FINITE_N and (self.n is None or int(self.n) < 1):
            raise ValueError("finite-n regime requires n >= 1")
        if isinstance(self.k, (tuple, list)):
            object.__setattr__(self, "k", tuple(int(a) for a in self.k))
            if not isinstance(self.where, (tuple, list)) or len(self.where) != len(self.k):
                raise ValueError("a multi-index query needs one interval per entry")
        else:
            _check_count(self.k)
        if beta in _SIGNS:
            point = isinstance(self.where, (int, float)) and not isinstance(self.where, bool)
            if self.regime not in _POINT_REGIMES or not point:
                raise ValueError(
                    "split-sign queries take a point s in the bulk, soft, or hard regime"
                )


def evaluate(query, *, tol=None, m_max=None):
    """Dispatch a query record to the operation that answers it."""
    q = query
    if isinstance(q.k, tuple):
        return generalized_spacing(
            q.k, q.where, q.regime, n=q.n, alpha=q.alpha, tol=tol, m_max=m_max
        )
    if q.beta in _SIGNS:
        return e_pm(q.beta, q.k, q.where, q.regime, alpha=q.alpha, tol=tol, m_max=m_max)
    if isinstance(q.where, Interval) or isinstance(q.where, (tuple, list)):
        if q.beta == 2:
            return e2_count(
                q.k, q.where, q.regime, n=q.n, alpha=q.alpha, tol=tol, m_max=m_max
            )
        if q.beta == 4 and q.regime == SOFT:
            return gse_soft_matrix(q.k, q.where, tol=tol, m_max=m_max)
        raise NotImplementedError(
            "interval queries are supported for beta 2, and for beta 4 at the soft edge"
        )
    if q.regime == BULK:
        return e_bulk(q.beta, q.k, q.where, tol=tol, m_max=m_max)
    if q.regime == SOFT:
        return e_soft(q.beta, q.k, q.where, tol=tol, m_max=m_max)
    if q.regime == HARD:
        return e_hard(q.beta, q.k, q.where, q.alpha, tol=tol, m_max=m_max)
    raise ValueError(f"point queries need a bulk, soft, or hard regime, got {q.regime!r}")
