"""Special functions backing the integral-operator kernels.

Airy Ai and Ai', the Airy tail integral, Bessel J of real order with
its derivative, and the orthonormal Hermite and Laguerre function
systems.  Bessel J is evaluated by two independent routes (ascending
series for small argument, normalized backward recurrence for large)
whose agreement on the overlap window is a standing cross-check.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.special as sp

_LN2 = math.log(2.0)


def _as_float_array(x, name):
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} requires finite input")
    return a


def _maybe_scalar(a, scalar_in):
    return float(a) if scalar_in else a


@dataclass(frozen=True)
class OrthoFunctionValues:
    """Values phi_0(x)..phi_n(x) of an orthonormal function system."""

    values: np.ndarray
    n: int
    x: float


_AIRY_UNDERFLOW = 300.0  # Ai underflows to exact 0 far below this; the
# backend yields nan past ~1e6, so clamp the dead region explicitly


def airy_ai(x):
    """Airy function Ai, elementwise."""
    scalar = np.isscalar(x)
    a = _as_float_array(x, "airy_ai")
    out = np.where(a > _AIRY_UNDERFLOW, 0.0, sp.airy(np.minimum(a, _AIRY_UNDERFLOW))[0])
    return _maybe_scalar(out, scalar)


def airy_ai_prime(x):
    """Derivative Ai', elementwise."""
    scalar = np.isscalar(x)
    a = _as_float_array(x, "airy_ai_prime")
    out = np.where(a > _AIRY_UNDERFLOW, 0.0, sp.airy(np.minimum(a, _AIRY_UNDERFLOW))[1])
    return _maybe_scalar(out, scalar)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(128)
_GL_NODES01 = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS01 = 0.5 * _GL_WEIGHTS

_TAIL_CUT = 40.0
_TAIL_OFFSETS = np.array([0.0, 4.0, 12.0, _TAIL_CUT])


def _tail_remainder(y):
    # leading asymptotic term of the Ai tail beyond y (y large)
    zeta = (2.0 / 3.0) * y * np.sqrt(y)
    return np.exp(-zeta) / (2.0 * math.sqrt(math.pi) * y**0.75)


def airy_tail_integral(x):
    """Integral of Ai over (x, inf).

    For x >= 0: Gauss-Legendre over (x, x+40) plus an asymptotic
    remainder.  For x < 0: split through 0 and use the classical value
    1/3 for the right half; the oscillatory left part is integrated on
    panels short enough to resolve the oscillation.
    """
    scalar = np.isscalar(x)
    shaped = np.atleast_1d(_as_float_array(x, "airy_tail_integral"))
    a = shaped.ravel()
    out = np.empty_like(a)

    pos = a >= 0.0
    if np.any(pos):
        xs = a[pos]
        acc = _tail_remainder(xs + _TAIL_CUT)
        # graded panels resolve the fast decay right of the endpoint
        for lo, hi in zip(_TAIL_OFFSETS[:-1], _TAIL_OFFSETS[1:]):
            nodes = (xs[:, None] + lo) + (hi - lo) * _GL_NODES01[None, :]
            acc = acc + (hi - lo) * (airy_ai(nodes) @ _GL_WEIGHTS01)
        out[pos] = acc
    if np.any(~pos):
        for i in np.nonzero(~pos)[0]:
            xi = a[i]
            npan = max(1, int(math.ceil(abs(xi) ** 1.5 / 8.0)))
            edges = np.linspace(xi, 0.0, npan + 1)
            lo, hi = edges[:-1], edges[1:]
            nodes = lo[:, None] + (hi - lo)[:, None] * _GL_NODES01[None, :]
            vals = airy_ai(nodes)
            left = float(((hi - lo)[:, None] * vals * _GL_WEIGHTS01[None, :]).sum())
            out[i] = left + 1.0 / 3.0
    return _maybe_scalar(out[0] if scalar else out.reshape(shaped.shape), scalar)


def _bessel_series_pair(nu, x):
    """(J_nu, J_{nu+1}) by the ascending series; x positive array.

    Accumulated in extended precision: the alternating terms peak a few
    orders of magnitude above the result near the top of the small-x
    window, and double accumulation would lose the last digits there.
    """
    q = (0.25 * x * x).astype(np.longdouble)

    def one(mu):
        term = np.ones_like(q)
        total = term.copy()
        for k in range(1, 500):
            term = term * (-q) / (k * (mu + k))
            total += term
            if np.max(np.abs(term)) <= 1e-21 * max(np.max(np.abs(total)), 1e-300):
                break
        pref = np.exp(mu * np.log(0.5 * x) - math.lgamma(mu + 1))
        return pref * total.astype(float)

    return one(nu), one(nu + 1.0)


def _bessel_miller_pair(nu, x):
    """(J_nu, J_{nu+1}) by normalized backward recurrence; x a positive
    array swept downward together from the largest argument's start.

    Normalization: sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(x) = (x/2)^nu,
    with the k=0 coefficient read as Gamma(nu+1).
    """
    xmax = float(np.max(x))
    K = int(xmax + 12.0 * xmax ** (1.0 / 3.0) + 26.0)
    vals = np.zeros((K + 2,) + x.shape)
    vals[K] = 1e-280
    fkp1 = np.zeros_like(x)
    fk = np.full_like(x, 1e-280)
    for k in range(K, 0, -1):
        fkm1 = (2.0 * (nu + k) / x) * fk - fkp1
        fkp1, fk = fk, fkm1
        big = np.abs(fk) > 1e250
        if np.any(big):
            fk[big] *= 1e-250
            fkp1[big] *= 1e-250
            vals[k:, big] *= 1e-250
        vals[k - 1] = fk
    # log-space accumulation of the normalizing sum; the coefficient
    # (nu+2k) Gamma(nu+k)/k! is written through lgamma(nu+k+1) so that
    # the k=0 term degenerates cleanly to Gamma(nu+1) as nu -> 0
    ks = np.arange(0, K // 2 + 1)
    logcoef = np.array(
        [
            math.lgamma(nu + k + 1) - math.lgamma(k + 1)
            + math.log((nu + 2.0 * k) / (nu + k))
            if (k or nu)
            else 0.0
            for k in ks
        ]
    )
    v = vals[2 * ks]
    with np.errstate(divide="ignore"):
        logterm = logcoef.reshape((-1,) + (1,) * x.ndim) + np.log(np.abs(v))
    mx = logterm.max(axis=0)
    ssum = np.sum(np.sign(v) * np.exp(logterm - mx), axis=0)
    log_scale = nu * np.log(0.5 * x) - (mx + np.log(np.abs(ssum)))
    scale = np.copysign(np.exp(log_scale), ssum)
    return vals[0] * scale, vals[1] * scale


def _bessel_pair(nu, x):
    """(J_nu, J_{nu+1}) on a positive array, route chosen per element."""
    if nu == -0.5 or nu == 0.5:
        # half-integer orders reduce to trigonometric closed forms,
        # which keeps the heavily exercised hard-edge cases at one ulp
        c = np.sqrt(2.0 / (np.pi * x))
        s, cs = np.sin(x), np.cos(x)
        if nu == -0.5:
            return c * cs, c * s
        return c * s, c * (s / x - cs)
    jn = np.empty_like(x)
    jn1 = np.empty_like(x)
    # the series is safe while its terms decay essentially from the
    # start; past that the backward recurrence takes over
    cut = max(8.0, 2.0 * math.sqrt(nu + 1.0))
    small = x <= cut
    if np.any(small):
        jn[small], jn1[small] = _bessel_series_pair(nu, x[small])
    if np.any(~small):
        jn[~small], jn1[~small] = _bessel_miller_pair(nu, x[~small])
    return jn, jn1


def _check_bessel_args(nu, x, name):
    nu = float(nu)
    if not nu > -1.0:
        raise ValueError(f"{name} requires nu > -1, got {nu}")
    a = np.atleast_1d(_as_float_array(x, name))
    if np.any(a < 0.0):
        raise ValueError(f"{name} requires x >= 0")
    return nu, a


def bessel_j(nu, x):
    """Bessel function J_nu(x) for real order nu > -1 and x >= 0.

    At x=0 the value is 1 for nu=0 and 0 for nu>0; for nu<0 the origin
    is a pole, which callers handle through the kernels' singular
    exponent metadata, so a value request raises.
    """
    scalar = np.isscalar(x)
    nu, a = _check_bessel_args(nu, x, "bessel_j")
    out = np.empty_like(a)
    zero = a == 0.0
    if np.any(zero):
        if nu < 0.0:
            raise ValueError(
                "bessel_j is singular at x=0 for nu<0; use the kernel's "
                "singular-exponent metadata instead of a point value"
            )
        out[zero] = 1.0 if nu == 0.0 else 0.0
    if np.any(~zero):
        out[~zero] = _bessel_pair(nu, a[~zero])[0]
    return _maybe_scalar(out if not scalar else out[0], scalar)


def bessel_j_prime(nu, x):
    """Derivative J'_nu(x) via (nu/x) J_nu - J_{nu+1}."""
    scalar = np.isscalar(x)
    nu, a = _check_bessel_args(nu, x, "bessel_j_prime")
    out = np.empty_like(a)
    zero = a == 0.0
    if np.any(zero):
        if nu == 0.0:
            out[zero] = 0.0
        elif nu == 1.0:
            out[zero] = 0.5
        elif nu > 1.0:
            out[zero] = 0.0
        else:
            raise ValueError("bessel_j_prime is singular at x=0 for 0<nu<1 or nu<0")
    if np.any(~zero):
        xs = a[~zero]
        jn, jn1 = _bessel_pair(nu, xs)
        out[~zero] = (nu / xs) * jn - jn1
    return _maybe_scalar(out if not scalar else out[0], scalar)


_EXP_LIMIT = 256
_EXP_SCALE = 2.0**_EXP_LIMIT
_EXP_SCALE_INV = 2.0**-_EXP_LIMIT


def _renorm(mant_a, mant_b, expo):
    """Pull a shared power of two out of a recurrence pair, in place."""
    mag = np.maximum(np.abs(mant_a), np.abs(mant_b))
    hi = mag > _EXP_SCALE
    if np.any(hi):
        mant_a[hi] *= _EXP_SCALE_INV
        mant_b[hi] *= _EXP_SCALE_INV
        expo[hi] += _EXP_LIMIT
    lo = (mag < _EXP_SCALE_INV) & (mag > 0)
    if np.any(lo):
        mant_a[lo] *= _EXP_SCALE
        mant_b[lo] *= _EXP_SCALE
        expo[lo] -= _EXP_LIMIT


def _ldexp_clipped(mant, expo):
    return np.ldexp(mant, np.clip(expo, -2200, 2200).astype(np.int64))


def hermite_phi_pair(n, x):
    """Orthonormal Hermite functions (phi_n(x), phi_{n-1}(x)).

    Runs the three-term recurrence on mantissa/exponent pairs so the
    Gaussian prefactor cannot underflow intermediate values; safe for
    n up to 10^4.
    """
    if n < 1:
        raise ValueError(f"hermite_phi_pair requires n >= 1, got {n}")
    scalar = np.isscalar(x)
    a = np.atleast_1d(_as_float_array(x, "hermite_phi_pair"))
    e = -a * a / (2.0 * _LN2)
    expo = np.floor(e)
    prev = math.pi**-0.25 * np.exp2(e - expo)  # phi_0 mantissa
    cur = math.sqrt(2.0) * a * prev  # phi_1 mantissa
    expo = expo.astype(np.int64)
    for k in range(1, n):
        nxt = (a * cur - math.sqrt(k / 2.0) * prev) / math.sqrt((k + 1) / 2.0)
        prev, cur = cur, nxt
        _renorm(prev, cur, expo)
    phi_n = _ldexp_clipped(cur, expo)
    phi_nm1 = _ldexp_clipped(prev, expo)
    if scalar:
        return float(phi_n[0]), float(phi_nm1[0])
    return phi_n, phi_nm1


def hermite_phi_values(n, x):
    """All values phi_0(x)..phi_n(x) at a scalar x."""
    if n < 0:
        raise ValueError(f"hermite_phi_values requires n >= 0, got {n}")
    x = float(x)
    vals = np.empty(n + 1)
    vals[0] = math.pi**-0.25 * math.exp(-x * x / 2.0)
    if n >= 1:
        vals[1] = math.sqrt(2.0) * x * vals[0]
    for k in range(1, n):
        vals[k + 1] = (x * vals[k] - math.sqrt(k / 2.0) * vals[k - 1]) / math.sqrt(
            (k + 1) / 2.0
        )
    return OrthoFunctionValues(values=vals, n=n, x=x)


def laguerre_phi_pair(n, alpha, x):
    """Orthonormal Laguerre functions (phi_n, phi_{n-1}) at x >= 0.

    phi_k(x) = sqrt(k!/Gamma(k+alpha+1)) x^(alpha/2) e^(-x/2) L_k^(alpha)(x),
    evaluated with a log-scaled prefactor and exponent tracking; safe
    for n up to 200, alpha up to 100, x up to 10^3.
    """
    if n < 1:
        raise ValueError(f"laguerre_phi_pair requires n >= 1, got {n}")
    alpha = float(alpha)
    if alpha <= -1.0:
        raise ValueError(f"laguerre_phi_pair requires alpha > -1, got {alpha}")
    scalar = np.isscalar(x)
    a = np.atleast_1d(_as_float_array(x, "laguerre_phi_pair"))
    if np.any(a < 0.0):
        raise ValueError("laguerre_phi_pair requires x >= 0")
    zero = a == 0.0
    if np.any(zero) and alpha < 0.0:
        raise ValueError("laguerre_phi_pair is singular at x=0 for alpha<0")
    if alpha == 0.0:
        lnphi0 = -0.5 * a
    else:
        with np.errstate(divide="ignore"):
            loga = np.where(zero, -np.inf, np.log(np.where(zero, 1.0, a)))
        lnphi0 = 0.5 * alpha * loga - 0.5 * a - 0.5 * math.lgamma(alpha + 1.0)
    e = lnphi0 / _LN2
    neginf = np.isneginf(e)
    e = np.where(neginf, 0.0, e)
    expo = np.floor(e)
    prev = np.exp2(e - expo)
    prev[neginf] = 0.0
    cur = (1.0 + alpha - a) * prev / math.sqrt(1.0 + alpha)  # phi_1 mantissa
    expo = expo.astype(np.int64)
    for k in range(1, n):
        nxt = ((2 * k + 1 + alpha - a) * cur - math.sqrt(k * (k + alpha)) * prev) / math.sqrt(
            (k + 1) * (k + 1 + alpha)
        )
        prev, cur = cur, nxt
        _renorm(prev, cur, expo)
    phi_n = _ldexp_clipped(cur, expo)
    phi_nm1 = _ldexp_clipped(prev, expo)
    if scalar:
        return float(phi_n[0]), float(phi_nm1[0])
    return phi_n, phi_nm1
