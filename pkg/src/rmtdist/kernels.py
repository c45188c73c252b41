"""Integral-operator kernels with evaluation metadata.

Each factory returns a KernelSpec bundling a vectorized two-point
evaluator with the closed-form diagonal (where the off-diagonal form is
a difference quotient), the endpoint singular exponent that steers
quadrature selection, and the inner quadrature order for kernels that
are themselves integrals.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional
import math

import numpy as np

from .quadrature import (
    DEFAULT_TRANSFORM_SCALE,
    Interval,
    gauss_jacobi,
    clenshaw_curtis,
    semi_infinite_rule,
)
from .specfun import (
    airy_ai,
    airy_ai_prime,
    airy_tail_integral,
    bessel_j,
    bessel_j_prime,
    hermite_phi_pair,
    laguerre_phi_pair,
)

# relative diagonal-neighborhood width below which difference quotients
# switch to the closed-form diagonal (with a first-order correction)
_NEAR_DIAG = 1e-6


@dataclass(frozen=True)
class KernelSpec:
    """An integral-operator kernel plus evaluation metadata."""

    eval: Callable
    diag: Optional[Callable] = None
    left_singular_exponent: Optional[float] = None
    inner_order: Optional[int] = None
    symmetric: bool = False
    cauchy_radius: float = 0.1
    remake: Optional[Callable[[int], "KernelSpec"]] = field(
        default=None, repr=False, compare=False
    )

    def with_inner_order(self, inner_order):
        """The same kernel rebuilt at a different inner quadrature order."""
        if self.remake is None:
            return self
        return self.remake(inner_order)


def _binary(fn):
    """Wrap an array evaluator so scalar inputs give scalar output."""

    def wrapped(x, y):
        xb, yb = np.broadcast_arrays(
            np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        )
        out = fn(np.atleast_1d(xb), np.atleast_1d(yb))
        if xb.ndim == 0:
            return float(out[0])
        return out.reshape(xb.shape)

    return wrapped


def _unary(fn):
    def wrapped(x):
        xa = np.asarray(x, dtype=float)
        out = fn(np.atleast_1d(xa))
        if xa.ndim == 0:
            return float(out[0])
        return out.reshape(xa.shape)

    return wrapped


def _quotient_kernel(numerator, diag_fn):
    """Difference-quotient kernel with a midpoint diagonal switch.

    numerator(x, y) is antisymmetric and vanishes on the diagonal; near
    it the quotient loses digits, so the closed-form diagonal at the
    midpoint is used instead (the first-order term cancels there for
    these symmetric kernels).
    """

    def ev(x, y):
        h = y - x
        near = np.abs(h) < _NEAR_DIAG * np.maximum(1.0, np.abs(x))
        far = ~near
        out = np.empty_like(x)
        if np.any(far):
            out[far] = numerator(x[far], y[far]) / (x[far] - y[far])
        if np.any(near):
            out[near] = diag_fn(0.5 * (x[near] + y[near]))
        return out

    return ev


# ---------------------------------------------------------------------------
# sine kernels

def sine_kernel():
    """sinc kernel sin(pi(x-y))/(pi(x-y))."""
    return KernelSpec(
        eval=_binary(lambda x, y: np.sinc(x - y)),
        diag=_unary(lambda x: np.ones_like(x)),
        symmetric=True,
        cauchy_radius=1.0,
    )


def sine_kernel_even():
    """Even symmetrization (K(x,y) + K(x,-y))/2 of the sinc kernel."""
    return KernelSpec(
        eval=_binary(lambda x, y: 0.5 * (np.sinc(x - y) + np.sinc(x + y))),
        diag=_unary(lambda x: 0.5 * (1.0 + np.sinc(2.0 * x))),
        symmetric=True,
        cauchy_radius=1.0,
    )


def sine_kernel_odd():
    """Odd symmetrization (K(x,y) - K(x,-y))/2 of the sinc kernel."""
    return KernelSpec(
        eval=_binary(lambda x, y: 0.5 * (np.sinc(x - y) - np.sinc(x + y))),
        diag=_unary(lambda x: 0.5 * (1.0 - np.sinc(2.0 * x))),
        symmetric=True,
        cauchy_radius=1.0,
    )


# ---------------------------------------------------------------------------
# Airy family

def _airy_diag(x):
    return airy_ai_prime(x) ** 2 - x * airy_ai(x) ** 2


def _airy_numerator(x, y):
    return airy_ai(x) * airy_ai_prime(y) - airy_ai_prime(x) * airy_ai(y)


def airy_kernel():
    """Airy kernel in difference-quotient form."""
    return KernelSpec(
        eval=_binary(_quotient_kernel(_airy_numerator, _airy_diag)),
        diag=_unary(_airy_diag),
        symmetric=True,
    )


def v_airy_kernel():
    """Rank-compressed Airy-type kernel Ai((x+y)/2)/2."""
    return KernelSpec(
        eval=_binary(lambda x, y: 0.5 * airy_ai(0.5 * (x + y))),
        diag=_unary(lambda x: 0.5 * airy_ai(x)),
        symmetric=True,
    )


# ---------------------------------------------------------------------------
# Hermite and Laguerre (finite n) kernels

def hermite_kernel(n):
    """Projection kernel onto the first n orthonormal Hermite functions,
    in Christoffel-Darboux form."""
    if n < 1:
        raise ValueError(f"hermite_kernel requires n >= 1, got {n}")
    c = math.sqrt(n / 2.0)

    def numerator(x, y):
        pnx, pmx = hermite_phi_pair(n, x)
        pny, pmy = hermite_phi_pair(n, y)
        return c * (pnx * pmy - pmx * pny)

    def diag(x):
        pn, pm = hermite_phi_pair(n, x)
        if n == 1:
            return n * pm**2
        pmm = (x * pm - math.sqrt(n / 2.0) * pn) / math.sqrt((n - 1) / 2.0)
        return n * pm**2 - math.sqrt(n * (n - 1.0)) * pn * pmm

    return KernelSpec(
        eval=_binary(_quotient_kernel(numerator, diag)),
        diag=_unary(diag),
        symmetric=True,
        cauchy_radius=1.0,
    )


def laguerre_kernel(n, alpha):
    """Projection kernel onto the first n orthonormal Laguerre functions."""
    if n < 1:
        raise ValueError(f"laguerre_kernel requires n >= 1, got {n}")
    alpha = float(alpha)
    if alpha <= -1.0:
        raise ValueError(f"laguerre_kernel requires alpha > -1, got {alpha}")
    c = -math.sqrt(n * (n + alpha))

    def numerator(x, y):
        pnx, pmx = laguerre_phi_pair(n, alpha, x)
        pny, pmy = laguerre_phi_pair(n, alpha, y)
        return c * (pnx * pmy - pmx * pny)

    def diag(x):
        pn, pm = laguerre_phi_pair(n, alpha, x)
        acc = pn * pm - math.sqrt(n * (n + alpha)) * pm**2
        if n >= 2:
            pmm = (
                (2.0 * n - 1.0 + alpha - x) * pm - math.sqrt(n * (n + alpha)) * pn
            ) / math.sqrt((n - 1.0) * (n - 1.0 + alpha))
            acc = acc + math.sqrt((n - 1.0) * (n - 1.0 + alpha)) * pn * pmm
        return c * acc / x

    return KernelSpec(
        eval=_binary(_quotient_kernel(numerator, diag)),
        diag=_unary(diag),
        left_singular_exponent=alpha,
        symmetric=True,
        cauchy_radius=1.0,
    )


# ---------------------------------------------------------------------------
# Bessel (hard-edge) kernels

def _bessel_quotient(alpha):
    """Difference-quotient form of the hard-edge kernel (reference form;
    it cancels badly between close grid points, so evaluation uses the
    factored integral instead)."""

    def numerator(x, y):
        u, v = np.sqrt(x), np.sqrt(y)
        return 0.5 * (
            bessel_j(alpha, u) * v * bessel_j_prime(alpha, v)
            - u * bessel_j_prime(alpha, u) * bessel_j(alpha, v)
        )

    return _quotient_kernel(numerator, _bessel_diag(alpha))


def _bessel_diag(alpha):
    def diag(x):
        t = np.sqrt(x)
        j = bessel_j(alpha, t)
        jp = bessel_j_prime(alpha, t)
        return 0.25 * (jp**2 + (1.0 - alpha**2 / (t * t)) * j**2)

    return diag


def _bessel_inner_rule(alpha, inner_order):
    """Product-integral rule for the hard-edge kernel.

    For alpha < 0 the substitution t = u*u moves the origin exponent
    from alpha to 2*alpha + 1, which removes the singularity entirely
    at the heavily used alpha = -1/2 and softens it elsewhere.  Rules
    with exponent zero use the closed-form cosine nodes, whose accuracy
    does not drift with order the way computed Gauss nodes do.
    """
    iv = Interval(0.0, 1.0)
    if alpha == 0.0:
        return clenshaw_curtis(iv, inner_order), False
    if alpha > 0.0:
        return gauss_jacobi(iv, alpha, 0.0, inner_order), False
    exponent = 2.0 * alpha + 1.0
    if exponent == 0.0:
        return clenshaw_curtis(iv, inner_order), True
    return gauss_jacobi(iv, exponent, 0.0, inner_order), True


def bessel_kernel(alpha, inner_order=64):
    """Hard-edge kernel built from Bessel J of order alpha.

    Evaluated through the factored form: one quarter of the integral of
    J_alpha(sqrt(t x)) J_alpha(sqrt(t y)) over t in (0, 1).  The
    products form a positive sum with no cancellation, unlike the
    difference-quotient form, which loses digits between close grid
    points.
    """
    alpha = float(alpha)
    if alpha <= -1.0:
        raise ValueError(f"bessel_kernel requires alpha > -1, got {alpha}")
    if inner_order < 1:
        raise ValueError(f"inner_order must be >= 1, got {inner_order}")
    rule, substituted = _bessel_inner_rule(alpha, inner_order)
    if substituted:
        un, uw = rule.nodes, 0.5 * rule.weights * rule.nodes
    else:
        un, uw = np.sqrt(rule.nodes), 0.25 * rule.weights

    def core(ux, uy):
        fx = bessel_j(alpha, un[None, :] * np.sqrt(ux)[:, None])
        fy = bessel_j(alpha, un[:, None] * np.sqrt(uy)[None, :])
        return (fx * uw[None, :]) @ fy

    return KernelSpec(
        eval=_binary(lambda x, y: _factored_pairs(core, x, y)),
        diag=_unary(_bessel_diag(alpha)),
        left_singular_exponent=alpha,
        inner_order=inner_order,
        symmetric=True,
        remake=lambda k: bessel_kernel(alpha, k),
    )


def v_bessel_kernel(alpha):
    """Rank-compressed hard-edge kernel J_alpha(sqrt(xy))/2."""
    alpha = float(alpha)
    if alpha <= -1.0:
        raise ValueError(f"v_bessel_kernel requires alpha > -1, got {alpha}")
    return KernelSpec(
        eval=_binary(lambda x, y: 0.5 * bessel_j(alpha, np.sqrt(x * y))),
        diag=_unary(lambda x: 0.5 * bessel_j(alpha, x)),
        left_singular_exponent=alpha,
        symmetric=True,
    )


# ---------------------------------------------------------------------------
# 2x2 matrix-kernel block for the symplectic soft edge

def _airy_dy(x, y):
    """Analytic d/dy of the Airy kernel, with its own diagonal limit."""
    h = y - x
    near = np.abs(h) < _NEAR_DIAG * np.maximum(1.0, np.abs(x))
    far = ~near
    out = np.empty_like(x)
    if np.any(far):
        xf, yf = x[far], y[far]
        g = _airy_numerator(xf, yf)
        gp = airy_ai(xf) * yf * airy_ai(yf) - airy_ai_prime(xf) * airy_ai_prime(yf)
        out[far] = gp / (xf - yf) + g / (xf - yf) ** 2
    if np.any(near):
        xn = x[near]
        ai = airy_ai(xn)
        aip = airy_ai_prime(xn)
        # -g''(x)/2 - g'''(x) h / 3 with g(y) = Ai(x)Ai'(y) - Ai'(x)Ai(y)
        out[near] = -0.5 * ai**2 - (h[near] / 3.0) * (
            ai * aip + xn**2 * ai**2 - xn * aip**2
        )
    return out


def _factored_pairs(fn, x, y):
    """Evaluate fn over the distinct values of broadcast grids.

    Discretization grids repeat each x down a row and each y along a
    column; computing the distinct-value core once and gathering keeps
    separable kernels at O(m^2) special-function evaluations.
    """
    ux, xidx = np.unique(x.ravel(), return_inverse=True)
    uy, yidx = np.unique(y.ravel(), return_inverse=True)
    core = fn(ux, uy)
    return core[xidx, yidx].reshape(x.shape)


def gse_matrix_kernel(inner_order=64):
    """2x2 matrix kernel for the symplectic soft edge: rows of
    [[S, SD], [IS, S*]].

    S couples the Airy kernel with a rank-one tail correction; SD is
    its analytic y-derivative variant; IS carries the semi-infinite
    integral of the Airy kernel over (x, inf), folded into a single
    transformed inner rule of the given order via the tail integral;
    S* is the transpose of S.
    """
    if inner_order < 1:
        raise ValueError(f"inner_order must be >= 1, got {inner_order}")
    k_airy = _quotient_kernel(_airy_numerator, _airy_diag)

    def s_eval(x, y):
        return k_airy(x, y) - 0.5 * airy_ai(x) * airy_tail_integral(y)

    def sd_eval(x, y):
        return -_airy_dy(x, y) - 0.5 * airy_ai(x) * airy_ai(y)

    base = clenshaw_curtis(Interval(0.0, 1.0), inner_order)
    rule = semi_infinite_rule(base, 0.0, "right-infinite")
    xi, wxi = rule.nodes, rule.weights

    def is_core(ux, uy):
        # integral of K_Ai(t, y) over t in (x, inf) equals the integral
        # of tail(x + s) Ai(y + s) over s > 0, which separates x from y
        tails = airy_tail_integral(ux[:, None] + xi[None, :])
        core = -(tails * wxi[None, :]) @ airy_ai(xi[:, None] + uy[None, :])
        return core + 0.5 * np.outer(airy_tail_integral(ux), airy_tail_integral(uy))

    def is_eval(x, y):
        return _factored_pairs(is_core, x, y)

    s_spec = KernelSpec(eval=_binary(s_eval), diag=_unary(lambda x: s_eval(x, x)))
    sd_spec = KernelSpec(eval=_binary(sd_eval), diag=_unary(lambda x: sd_eval(x, x)))
    is_spec = KernelSpec(
        eval=_binary(is_eval),
        diag=_unary(lambda x: is_eval(x, x)),
        inner_order=inner_order,
        remake=lambda k: gse_matrix_kernel(k)[1][0],
    )
    sstar_spec = KernelSpec(
        eval=_binary(lambda x, y: s_eval(y, x)),
        diag=s_spec.diag,
    )
    return [[s_spec, sd_spec], [is_spec, sstar_spec]]


# ---------------------------------------------------------------------------
# one-parameter extension of the Airy kernel (process covariance)

def airy_process_kernel(t, inner_order=64):
    """Kernel exp(-xi t) Ai(x+xi) Ai(y+xi) integrated over xi > 0 for
    t >= 0, and minus the corresponding integral over xi < 0 for t < 0
    (truncated where the integrand drops below 1e-18)."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("airy_process_kernel requires finite t")
    if inner_order < 1:
        raise ValueError(f"inner_order must be >= 1, got {inner_order}")
    if t >= 0.0:
        base = clenshaw_curtis(Interval(0.0, 1.0), inner_order)
        rule = semi_infinite_rule(base, 0.0, "right-infinite")
        sign = 1.0
    else:
        # decay rate |t| of exp(-xi t) going left; cut where it reaches 1e-18
        depth = 42.0 / abs(t) + 10.0
        rule = clenshaw_curtis(Interval(-depth, 0.0), inner_order)
        sign = -1.0
    xi = rule.nodes
    damp = sign * rule.weights * np.exp(-t * xi)

    def core(ux, uy):
        return (airy_ai(ux[:, None] + xi[None, :]) * damp[None, :]) @ airy_ai(
            xi[:, None] + uy[None, :]
        )

    return KernelSpec(
        eval=_binary(lambda x, y: _factored_pairs(core, x, y)),
        inner_order=inner_order,
        symmetric=True,
        remake=lambda k: airy_process_kernel(t, k),
    )
