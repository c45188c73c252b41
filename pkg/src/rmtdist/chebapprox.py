"""Interpolation in Chebyshev points with spectral calculus.

Distribution functions produced by the determinant machinery are smooth
but expensive, so they are sampled once on a Chebyshev grid and all
post-processing (densities, moments, quantiles, support detection) runs
on the interpolant.
"""

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct
from scipy.optimize import brentq

from .errors import (
    BadBracketError,
    NoConvergenceError,
    NotACdfError,
    OutOfDomainError,
)
from .fredholm import ValueWithError
from .quadrature import Interval, _readonly

MAX_DEGREE = 4096


def _cheb_nodes(interval, m):
    """Second-kind Chebyshev points of the interval, ascending, m+1 of them."""
    mid = 0.5 * (interval.lo + interval.hi)
    half = 0.5 * (interval.hi - interval.lo)
    t = -np.cos(np.arange(m + 1) * np.pi / m)
    t[0], t[-1] = -1.0, 1.0
    x = mid + half * t
    x[0], x[-1] = interval.lo, interval.hi
    return x


@dataclass(frozen=True)
class ChebInterpolant:
    """Polynomial interpolant through samples at Chebyshev points."""

    interval: Interval
    samples: np.ndarray
    degree: int

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.degree + 1,):
            raise ValueError(
                f"expected {self.degree + 1} samples, got shape {s.shape}"
            )
        object.__setattr__(self, "samples", _readonly(s))

    @property
    def nodes(self):
        return _cheb_nodes(self.interval, self.degree)

    def coefficients(self):
        """Chebyshev expansion coefficients of the interpolant."""
        c = dct(self.samples[::-1], type=1) / self.degree
        c[0] *= 0.5
        c[-1] *= 0.5
        return c


def interpolate(f, interval, m):
    """Interpolant of f at the m+1 Chebyshev points of the interval."""
    x = _cheb_nodes(interval, m)
    try:
        vals = np.asarray(f(x), dtype=float)
        if vals.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f(xi)) for xi in x])
    return ChebInterpolant(interval=interval, samples=vals, degree=m)


def bary_eval(p, s):
    """Evaluate the interpolant by the second barycentric formula.

    Weights alternate in sign with halved endpoints; an exact node hit
    returns the stored sample, bypassing the 0/0 in the formula.
    """
    scalar = np.isscalar(s)
    sv = np.atleast_1d(np.asarray(s, dtype=float))
    lo, hi = p.interval.lo, p.interval.hi
    if np.any(sv < lo) or np.any(sv > hi) or not np.all(np.isfinite(sv)):
        raise OutOfDomainError(
            f"evaluation point outside interval ({lo}, {hi})"
        )
    x = p.nodes
    w = np.ones(p.degree + 1)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = sv[:, None] - x[None, :]
    hit_row, hit_col = np.nonzero(diff == 0.0)
    diff[hit_row, :] = 1.0
    ratio = w[None, :] / diff
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (ratio @ p.samples) / ratio.sum(axis=1)
    out[hit_row] = p.samples[hit_col]  # exact node hits bypass the formula
    return float(out[0]) if scalar else out


def cheb_fit(f, interval, tol):
    """Adaptive Chebyshev fit: double the degree until the coefficient
    tail drops below tol (relative to the largest coefficient), then
    truncate to the plateau."""
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    p = interpolate(f, interval, 16)
    m = 16
    while True:
        c = p.coefficients()
        scale = max(float(np.max(np.abs(c))), 1e-300)
        tail = float(np.max(np.abs(c[-3:])))
        if tail <= tol * scale:
            return _truncate_to_plateau(p, c, tol * scale)
        if 2 * m > MAX_DEGREE:
            raise NoConvergenceError(
                f"coefficient tail {tail / scale:.3e} still above tol {tol:.1e} "
                f"at degree {m}"
            )
        m *= 2
        x = _cheb_nodes(interval, m)
        new = x[1::2]
        try:
            vals = np.asarray(f(new), dtype=float)
            if vals.shape != new.shape:
                raise TypeError
        except (TypeError, ValueError):
            vals = np.array([float(f(xi)) for xi in new])
        merged = np.empty(m + 1)
        merged[0::2] = p.samples
        merged[1::2] = vals
        p = ChebInterpolant(interval=interval, samples=merged, degree=m)


def _truncate_to_plateau(p, c, cut):
    keep = np.nonzero(np.abs(c) > cut)[0]
    m = max(1, int(keep[-1]) if keep.size else 1)
    if m >= p.degree:
        return p
    vals = bary_eval(p, _cheb_nodes(p.interval, m))
    return ChebInterpolant(interval=p.interval, samples=vals, degree=m)


def derivative(p):
    """Interpolant of the derivative (spectral differentiation)."""
    width = p.interval.hi - p.interval.lo
    dc = cheb.chebder(p.coefficients()) * (2.0 / width)
    m = max(p.degree - 1, 1)
    t = -np.cos(np.arange(m + 1) * np.pi / m)
    return ChebInterpolant(
        interval=p.interval, samples=cheb.chebval(t, dc), degree=m
    )


def definite_integral(p):
    """Integral of the interpolant over its interval."""
    c = p.coefficients()
    k = np.arange(0, c.size, 2)
    return float((c[k] * 2.0 / (1.0 - k**2)).sum() * 0.5 * (p.interval.hi - p.interval.lo))


def _t_moments(coeffs, upto=4):
    """Integrals of t^k d(coeffs) over (-1,1) for k=0..upto."""
    out = []
    d = cheb.chebder(coeffs)
    for _ in range(upto + 1):
        kk = np.arange(0, d.size, 2)
        out.append(float((d[kk] * 2.0 / (1.0 - kk**2)).sum()) if d.size else 0.0)
        d = cheb.chebmulx(d)
    return out


_CDF_RANGE_SLACK = 1e-8


def _raw_moments_of_cdf(p):
    s = p.samples
    c = p.coefficients()
    scale = max(float(np.max(np.abs(c))), 1e-300)
    tail = float(np.max(np.abs(c[-3:]))) / scale
    tol_check = 10.0 * max(tail, _CDF_RANGE_SLACK)
    if abs(s[0]) > tol_check or abs(s[-1] - 1.0) > tol_check:
        raise NotACdfError(
            f"endpoint values {s[0]:.3e}, {s[-1]:.6f} not within {tol_check:.1e} "
            "of 0 and 1"
        )
    if np.min(np.diff(s)) < -tol_check:
        raise NotACdfError("samples decrease by more than the tolerance allows")
    i0, i1, i2, i3, i4 = _t_moments(c)
    mass = i0
    if not mass > 0.0:
        raise NotACdfError("nonpositive total mass")
    m1 = i1 / mass
    m2 = i2 / mass
    m3 = i3 / mass
    m4 = i4 / mass
    mid = 0.5 * (p.interval.lo + p.interval.hi)
    half = 0.5 * (p.interval.hi - p.interval.lo)
    mean = mid + half * m1
    var = half**2 * (m2 - m1**2)
    mu3 = half**3 * (m3 - 3.0 * m1 * m2 + 2.0 * m1**3)
    mu4 = half**4 * (m4 - 4.0 * m1 * m3 + 6.0 * m1**2 * m2 - 3.0 * m1**4)
    skew = mu3 / var**1.5
    kurt = mu4 / var**2 - 3.0
    return (mean, var, skew, kurt), max(tail, 1e-15)


def moments(p):
    """(mean, variance, skewness, excess kurtosis) of the distribution
    whose CDF the interpolant represents.

    The density is the spectral derivative of the fit; each moment's
    error field combines the change under halving the degree with the
    fit's own coefficient tail.
    """
    full, tail = _raw_moments_of_cdf(p)
    mh = max(p.degree - 2, 4)
    reduced_samples = bary_eval(p, _cheb_nodes(p.interval, mh))
    p_reduced = ChebInterpolant(interval=p.interval, samples=reduced_samples, degree=mh)
    try:
        coarse, _ = _raw_moments_of_cdf(p_reduced)
    except NotACdfError:
        coarse = full
    return tuple(
        ValueWithError(value=v, err=abs(v - w) + tail * max(1.0, abs(v)))
        for v, w in zip(full, coarse)
    )


def quantile(f, prob, bracket):
    """Solve f(s) = prob for s inside the bracket to 1e-12."""
    if not 0.0 < prob < 1.0:
        raise ValueError(f"probability must lie in (0,1), got {prob}")
    lo, hi = bracket.lo, bracket.hi
    flo = f(lo) - prob
    fhi = f(hi) - prob
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BadBracketError(
            f"bracket ({lo}, {hi}) does not straddle the level {prob}"
        )
    return brentq(lambda s: f(s) - prob, lo, hi, xtol=1e-12, rtol=8.9e-16)


def numerical_support(f, seed, tol):
    """Interval outside which the CDF f is within tol of 0 or 1.

    Expands the seed interval outward by doubling until both tails are
    captured, then shrinks back to the first grid points where the CDF
    leaves the tolerance bands.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    lo, hi = seed.lo, seed.hi
    width = hi - lo
    for _ in range(60):
        if f(lo) <= tol:
            break
        lo -= width
        width *= 2.0
    else:
        raise NoConvergenceError("left tail of the CDF not captured")
    width = hi - lo
    for _ in range(60):
        if f(hi) >= 1.0 - tol:
            break
        hi += width
        width *= 2.0
    else:
        raise NoConvergenceError("right tail of the CDF not captured")
    grid = _cheb_nodes(Interval(lo, hi), 256)
    vals = np.array([f(x) for x in grid])
    below = np.nonzero(vals <= tol)[0]
    above = np.nonzero(vals >= 1.0 - tol)[0]
    new_lo = grid[below[-1]] if below.size else lo
    new_hi = grid[above[0]] if above.size else hi
    return Interval(new_lo, new_hi)
