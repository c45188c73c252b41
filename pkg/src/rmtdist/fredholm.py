"""Finite-dimensional determinant approximations of integral operators.

Operators are discretized on quadrature grids with symmetrized weights;
determinants, their z-derivatives, and spectral quantities are then
plain linear algebra.  Accuracy is certified by doubling the grid and
comparing, which tracks the true error closely for analytic kernels.
"""

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .errors import (
    BadBracketError,
    IllConditionedRadiusWarning,
    NoConvergenceError,
    NumericalFailureError,
)
from .kernels import KernelSpec, airy_kernel
from .quadrature import Interval, _readonly, rule_for_interval

DEFAULT_TOL = 5e-15
DEFAULT_M_MIN = 8
DEFAULT_M_MAX = 256

# trapezoidal point counts tried by the contour derivative
_CONTOUR_LADDER = (16, 32, 64, 128, 256, 512)


@dataclass(frozen=True)
class ValueWithError:
    """A numerical result with a conservative absolute error estimate.

    err = +inf marks a value whose convergence could not be certified;
    callers must propagate it, never drop it.
    """

    value: complex
    err: float
    m_used: int | None = None

    def __post_init__(self):
        if not self.err >= 0.0:
            raise ValueError(f"error estimate must be nonnegative, got {self.err}")


@dataclass(frozen=True)
class DiscretizedOperator:
    """A dense Nystrom matrix with its grid layout.

    matrix holds the weight-symmetrized samples w_i^(1/2) K(x_i, x_j)
    w_j^(1/2), blocked when several intervals or kernels are coupled.
    block_layout records (interval, rule, kernel) per block index.
    """

    matrix: np.ndarray
    block_layout: tuple
    symmetric: bool

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(np.asarray(self.matrix)))

    @property
    def size(self):
        return self.matrix.shape[0]

    def column_slice(self, j):
        """Index range of block column j inside the assembled matrix."""
        m = self.block_layout[0][1].order
        return slice(j * m, (j + 1) * m)


def _normalize_blocks(blocks, intervals):
    """Accept a bare kernel/interval pair or full N x N block structure."""
    if isinstance(blocks, KernelSpec):
        blocks = [[blocks]]
    if isinstance(intervals, Interval):
        intervals = [intervals]
    intervals = list(intervals)
    n = len(intervals)
    if n == 0:
        raise ValueError("at least one interval is required")
    grid = [list(row) for row in blocks]
    if len(grid) != n or any(len(row) != n for row in grid):
        raise ValueError(
            f"blocks must form an {n}x{n} grid matching the {n} intervals"
        )
    for row in grid:
        for kern in row:
            if kern is not None and not isinstance(kern, KernelSpec):
                raise ValueError(f"block entries must be KernelSpec or None, got {kern!r}")
    return grid, intervals


def discretize(blocks, intervals, m):
    """Assemble the Nystrom matrix of a (block) kernel on quadrature grids.

    Each interval gets its own rule: Gauss-Jacobi with exponent pair
    (kernel.left_singular_exponent, 0) when a kernel acting on that
    interval declares one and the interval starts at 0, the transformed
    Chebyshev-point rule otherwise.  Entries are w_i^(1/2) K(x_i, x_j)
    w_j^(1/2); a single symmetric kernel is symmetrized exactly.
    """
    grid, intervals = _normalize_blocks(blocks, intervals)
    if m < 1:
        raise ValueError(f"discretization order must be >= 1, got {m}")
    n = len(intervals)
    rules = []
    for j, interval in enumerate(intervals):
        exponent = None
        for i in range(n):
            kern = grid[i][j]
            if kern is not None and kern.left_singular_exponent is not None:
                exponent = kern.left_singular_exponent
                break
        rules.append(rule_for_interval(interval, m, singular_exponent=exponent))
    sqw = [np.sqrt(rule.weights) for rule in rules]
    parts = []
    for i in range(n):
        row_parts = []
        for j in range(n):
            kern = grid[i][j]
            if kern is None:
                row_parts.append(np.zeros((m, m)))
                continue
            sub = kern.eval(rules[i].nodes[:, None], rules[j].nodes[None, :])
            row_parts.append(sub * (sqw[i][:, None] * sqw[j][None, :]))
        parts.append(row_parts)
    matrix = parts[0][0] if n == 1 else np.block(parts)
    symmetric = n == 1 and grid[0][0] is not None and grid[0][0].symmetric
    if symmetric:
        matrix = 0.5 * (matrix + matrix.T)
    layout = []
    for j in range(n):
        kern = grid[j][j]
        if kern is None:
            kern = next((grid[i][j] for i in range(n) if grid[i][j] is not None), None)
        layout.append((intervals[j], rules[j], kern))
    return DiscretizedOperator(matrix=matrix, block_layout=tuple(layout), symmetric=symmetric)


def _log_accumulated_product(factors):
    """Product of complex factors as phase * exp(sum of log magnitudes)."""
    factors = np.asarray(factors)
    if np.any(factors == 0.0):
        return complex(0.0)
    magnitudes = np.abs(factors)
    phase = complex(np.prod(factors / magnitudes))
    return phase * math.exp(float(np.sum(np.log(magnitudes))))


def det_at(a, z):
    """det(I - zA) by pivoted LU with log-magnitude accumulation."""
    matrix = a.matrix if isinstance(a, DiscretizedOperator) else np.asarray(a)
    z = complex(z)
    if z == 0.0:
        return complex(1.0)
    zc = z.real if z.imag == 0.0 and not np.iscomplexobj(matrix) else z
    resolvent = np.eye(matrix.shape[0], dtype=np.result_type(matrix, zc)) - zc * matrix
    lu, piv = scipy.linalg.lu_factor(resolvent, check_finite=False)
    parity = -1.0 if (piv != np.arange(len(piv))).sum() % 2 else 1.0
    return parity * _log_accumulated_product(np.diag(lu))


@dataclass(frozen=True)
class DeterminantFamily:
    """The map z -> prefactor * det(I - zA) with cheap per-z evaluation.

    Symmetric matrices are stored through their eigenvalues (O(M) per
    z); general ones through a one-time Hessenberg reduction evaluated
    by an O(M^2) pivoted elimination per z.
    """

    prefactor: complex = 1.0
    eigenvalues: np.ndarray | None = None
    hessenberg: np.ndarray | None = None

    def __post_init__(self):
        if (self.eigenvalues is None) == (self.hessenberg is None):
            raise ValueError("exactly one of eigenvalues/hessenberg must be set")
        for name in ("eigenvalues", "hessenberg"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _readonly(np.asarray(value)))

    def __call__(self, z):
        z = complex(z)
        if self.eigenvalues is not None:
            value = _log_accumulated_product(1.0 - z * self.eigenvalues)
        else:
            value = _hessenberg_resolvent_det(self.hessenberg, z)
        return self.prefactor * value

    def values(self, zs):
        return np.array([self(z) for z in np.asarray(zs).ravel()])


def _hessenberg_resolvent_det(h, z):
    """det(I - zH) for upper-Hessenberg H by adjacent-row elimination."""
    mm = h.shape[0]
    b = np.eye(mm, dtype=complex) - z * h
    diag = np.empty(mm, dtype=complex)
    sign = 1.0
    for i in range(mm - 1):
        if abs(b[i + 1, i]) > abs(b[i, i]):
            b[[i, i + 1], i:] = b[[i + 1, i], i:]
            sign = -sign
        pivot = b[i, i]
        if pivot == 0.0:
            return complex(0.0)
        if b[i + 1, i] != 0.0:
            b[i + 1, i:] -= (b[i + 1, i] / pivot) * b[i, i:]
        diag[i] = pivot
    diag[mm - 1] = b[mm - 1, mm - 1]
    return sign * _log_accumulated_product(diag)


def det_family(a):
    """Determinant family of a discretized operator."""
    matrix = a.matrix if isinstance(a, DiscretizedOperator) else np.asarray(a)
    symmetric = a.symmetric if isinstance(a, DiscretizedOperator) else False
    try:
        if symmetric:
            lam = scipy.linalg.eigh(matrix, eigvals_only=True, check_finite=False)
            return DeterminantFamily(eigenvalues=lam)
        hess = scipy.linalg.hessenberg(matrix, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"matrix reduction failed: {exc}") from exc
    return DeterminantFamily(hessenberg=hess)


def partial_z_family(a, z_columns):
    """Family z -> det(I - z A_z - A_fixed) with only some columns scaled.

    A_z keeps the matrix columns of the listed block columns, A_fixed
    the rest.  Factorizing det(T - z A_z) = det(T) det(I - z T^(-1)
    A_z) with T = I - A_fixed makes each z a cheap Hessenberg solve.
    """
    n = len(a.block_layout)
    z_columns = sorted(set(int(j) for j in z_columns))
    if not z_columns or not all(0 <= j < n for j in z_columns):
        raise ValueError(f"z_columns must be a nonempty subset of 0..{n - 1}")
    mask = np.zeros(a.size, dtype=bool)
    for j in z_columns:
        mask[a.column_slice(j)] = True
    a_z = np.where(mask[None, :], a.matrix, 0.0)
    t = np.eye(a.size) - np.where(mask[None, :], 0.0, a.matrix)
    try:
        with warnings.catch_warnings():
            # the zero-pivot check below turns singularity into a typed
            # error, so the library warning is redundant
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(t, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"fixed-column factor is singular: {exc}") from exc
    if np.any(np.diag(lu) == 0.0) or not np.all(np.isfinite(lu)):
        raise NumericalFailureError("fixed-column factor is singular")
    parity = -1.0 if (piv != np.arange(len(piv))).sum() % 2 else 1.0
    prefactor = parity * _log_accumulated_product(np.diag(lu))
    reduced = scipy.linalg.lu_solve((lu, piv), a_z, check_finite=False)
    if not np.all(np.isfinite(reduced)):
        raise NumericalFailureError("fixed-column solve overflowed")
    hess = scipy.linalg.hessenberg(reduced, check_finite=False)
    return DeterminantFamily(prefactor=prefactor, hessenberg=hess)


def _call_on_contour(f, zs):
    """Evaluate f on an array of contour points, scalar fallback included."""
    try:
        vals = np.asarray(f(zs), dtype=complex)
        if vals.shape == zs.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(z)) for z in zs])


def dz_derivative(f, z0, k, radius, tol=1e-13):
    """k-th derivative of analytic f at z0 by trapezoidal Cauchy integrals.

    The point count doubles from 16 to 512 until successive values
    agree within tol relative to max(1, |value|) or reach the rounding
    floor of the contour sum.  Cancellation beyond three digits raises
    an IllConditionedRadiusWarning (the kappa diagnostic).
    """
    z0 = complex(z0)
    k = int(k)
    if k < 0:
        raise ValueError(f"derivative order must be >= 0, got {k}")
    if not radius > 0.0:
        raise ValueError(f"contour radius must be positive, got {radius}")
    scale = math.factorial(k) / radius**k
    previous = None
    value = complex(0.0)
    for npts in _CONTOUR_LADDER:
        theta = 2.0 * np.pi * np.arange(npts) / npts
        vals = _call_on_contour(f, z0 + radius * np.exp(1j * theta))
        mean = complex(np.mean(np.exp(-1j * k * theta) * vals))
        value = scale * mean
        amplitude = scale * float(np.mean(np.abs(vals)))
        if previous is not None:
            floor = 8.0 * np.finfo(float).eps * amplitude
            if abs(value - previous) <= max(tol * max(1.0, abs(value)), floor):
                kappa = abs(value) / amplitude if amplitude > 0.0 else 1.0
                if kappa < 1e-3:
                    warnings.warn(
                        f"contour cancellation kappa={kappa:.2e} at radius {radius};"
                        " consider a larger radius",
                        IllConditionedRadiusWarning,
                        stacklevel=2,
                    )
                return value
        previous = value
    raise NoConvergenceError(
        f"contour derivative did not settle with {_CONTOUR_LADDER[-1]} points"
    )


def with_error_control(compute, tol=DEFAULT_TOL, m_min=DEFAULT_M_MIN, m_max=DEFAULT_M_MAX):
    """Run compute(m) on the doubling ladder m_min, 2 m_min, ...

    Successive differences estimate the error; the ladder stops at the
    first difference below tol.  Hitting m_max is not an exception: the
    last value is returned with the last difference as its error (or
    +inf when only one evaluation fit the ladder).
    """
    m_min, m_max = int(m_min), int(m_max)
    if m_min < 1 or m_max < m_min:
        raise ValueError(f"ladder requires 1 <= m_min <= m_max, got {m_min}, {m_max}")
    if not tol >= 0.0:
        raise ValueError(f"tolerance must be nonnegative, got {tol}")
    m = m_min
    value = complex(compute(m))
    err = math.inf
    while 2 * m <= m_max:
        m *= 2
        nxt = complex(compute(m))
        err = abs(nxt - value)
        value = nxt
        if err <= tol:
            break
    return ValueWithError(value=value, err=err, m_used=m)


_TRANSFORMS = ("identity", "sqrt-of-det", "det-of-sqrt-z")


def _default_radius(grid):
    radii = [kern.cauchy_radius for row in grid for kern in row if kern is not None]
    return min(radii) if radii else 0.1


def _family_eigenvalues(a, fam):
    if fam.eigenvalues is not None:
        return np.asarray(fam.eigenvalues, dtype=complex)
    return np.linalg.eigvals(a.matrix)


def _capped_radius(radius, a, fam, z0, transform):
    """Keep square-root contours clear of determinant zeros and branch cuts."""
    lam = _family_eigenvalues(a, fam)
    lam = lam[np.abs(lam) > 1e-14]
    cap = radius
    if lam.size:
        cap = min(cap, 0.9 * float(np.min(np.abs((1.0 - lam) / lam))))
    if transform == "det-of-sqrt-z":
        cap = min(cap, 0.9 * abs(z0))
    if not cap > 0.0:
        raise NumericalFailureError(
            "no contour radius separates the expansion point from a branch point"
        )
    return cap


def _transformed_derivative(a, fam, k, z0, transform, sqrt_sign, radius, tol):
    z0 = complex(z0)
    if k == 0:
        if transform == "identity":
            return fam(z0)
        if transform == "det-of-sqrt-z":
            return fam(sqrt_sign * cmath.sqrt(z0))
        return cmath.sqrt(fam(z0))
    if transform != "identity":
        radius = _capped_radius(radius, a, fam, z0, transform)

    if transform == "identity":
        f = fam.values
    elif transform == "det-of-sqrt-z":
        def f(zs):
            return fam.values(sqrt_sign * np.sqrt(zs.astype(complex)))
    else:
        def f(zs):
            # contour points arrive in path order, so unwrapping the
            # argument tracks the square root's branch continuously
            vals = fam.values(zs)
            angles = np.unwrap(np.angle(vals))
            return np.sqrt(np.abs(vals)) * np.exp(0.5j * angles)

    contour_tol = max(0.2 * tol, 2e-15)
    return dz_derivative(f, z0, k, radius, tol=contour_tol)


def dzdet(blocks, intervals, k=0, z0=1.0, transform="identity", *, sqrt_sign=1.0,
          radius=None, tol=DEFAULT_TOL, m_min=DEFAULT_M_MIN, m_max=DEFAULT_M_MAX):
    """(-1)^k / k! times the k-th z-derivative of a kernel determinant.

    Composes discretize, det_family and dz_derivative under the
    doubling ladder.  transform selects det(I - zK), sqrt(det(I - zK))
    or det(I - sqrt_sign sqrt(z) K); contour radii default per kernel
    class and are capped away from determinant zeros (and the branch
    point at z = 0) whenever a square root is involved.
    """
    grid, intervals = _normalize_blocks(blocks, intervals)
    if transform not in _TRANSFORMS:
        raise ValueError(f"transform must be one of {_TRANSFORMS}, got {transform!r}")
    k = int(k)
    if k < 0:
        raise ValueError(f"derivative order must be >= 0, got {k}")
    if sqrt_sign not in (1.0, -1.0, 1, -1):
        raise ValueError(f"sqrt_sign must be +1 or -1, got {sqrt_sign}")
    base_radius = _default_radius(grid) if radius is None else float(radius)
    prefactor = (-1.0) ** k / math.factorial(k)

    def compute(m):
        factor = max(1, m // DEFAULT_M_MIN)
        scaled = [
            [
                kern.with_inner_order(kern.inner_order * factor)
                if kern is not None and kern.inner_order is not None
                else kern
                for kern in row
            ]
            for row in grid
        ]
        a = discretize(scaled, intervals, m)
        fam = det_family(a)
        return prefactor * _transformed_derivative(
            a, fam, k, z0, transform, float(sqrt_sign), base_radius, tol
        )

    return with_error_control(compute, tol=tol, m_min=m_min, m_max=m_max)


def spectral_radius(a):
    """Largest eigenvalue of a symmetric discretized operator."""
    if not (isinstance(a, DiscretizedOperator) and a.symmetric):
        raise ValueError("spectral_radius requires a symmetric DiscretizedOperator")
    lam = scipy.linalg.eigh(a.matrix, eigvals_only=True, check_finite=False)
    return float(lam[-1])


# ---------------------------------------------------------------------------
# blow-up point of the resolvent-based representation

# right truncation of (s, inf) for the blow-up eigenproblem; the kernel
# trace beyond 16 is ~1e-38, far below the refined eigenvalue targets,
# and the finite Chebyshev grid resolves the oscillatory region better
_BLOWUP_CUTOFF = 16.0


def _airy_lnmu64(s, m):
    """log(1 - largest eigenvalue) of the Airy kernel on (s, inf), float64."""
    a = discretize(airy_kernel(), Interval(s, _BLOWUP_CUTOFF), m)
    mu = 1.0 - spectral_radius(a)
    if not mu > 0.0:
        raise NumericalFailureError(f"eigenvalue at s={s} reached 1 in float64")
    return math.log(mu)


def _airy_lnmu_mp(s, m, subspace, dps):
    """Refined log(1 - largest eigenvalue) via a high-precision
    Rayleigh-Ritz projection on the dominant float64 eigenspace.

    The quadrature rule is rebuilt in working precision: hardware
    rounding of nodes and weights perturbs the eigenvalue at absolute
    scale near machine epsilon, which the 1/(1 - lambda) amplification
    would otherwise blow up far past the target accuracy.
    """
    import mpmath as mp

    a = discretize(airy_kernel(), Interval(s, _BLOWUP_CUTOFF), m)
    _, vecs = scipy.linalg.eigh(a.matrix, check_finite=False)
    u = vecs[:, -subspace:]
    with mp.workdps(dps):
        half = (mp.mpf(_BLOWUP_CUTOFF) - mp.mpf(s)) / 2
        mid = (mp.mpf(_BLOWUP_CUTOFF) + mp.mpf(s)) / 2
        # first-kind Chebyshev rule in working precision, in the same
        # ascending order as the hardware rule behind the subspace
        nodes = [None] * m
        weights = [None] * m
        for i in range((m + 1) // 2):
            theta = (2 * i + 1) * mp.pi / (2 * m)
            tnode = mp.sin((2 * i + 1 - m) * mp.pi / (2 * m))
            acc = mp.mpf(0)
            for k in range(1, m // 2 + 1):
                acc += mp.cos(2 * k * theta) / (4 * k * k - 1)
            w = half * (1 - 2 * acc) * 2 / m
            nodes[i], nodes[m - 1 - i] = mid + half * tnode, mid - half * tnode
            weights[i] = weights[m - 1 - i] = w
        sqw = [mp.sqrt(w) for w in weights]
        ai = [mp.airyai(x) for x in nodes]
        aip = [mp.airyai(x, 1) for x in nodes]
        amp = mp.zeros(m, m)
        for i in range(m):
            amp[i, i] = (aip[i] ** 2 - nodes[i] * ai[i] ** 2) * sqw[i] * sqw[i]
            for j in range(i):
                kij = (ai[i] * aip[j] - aip[i] * ai[j]) / (nodes[i] - nodes[j])
                amp[i, j] = amp[j, i] = kij * sqw[i] * sqw[j]
        ump = mp.matrix(u.tolist())
        projected = ump.T * (amp * ump)
        gram = ump.T * ump
        linv = mp.inverse(mp.cholesky(gram))
        small = linv * projected * linv.T
        ritz = mp.eigsy(0.5 * (small + small.T), eigvals_only=True)
        mu = 1 - max(ritz[i] for i in range(subspace))
        if not mu > 0:
            raise NumericalFailureError(f"refined eigenvalue at s={s} reached 1")
        return float(mp.log(mu))


def blowup_point(epsilon, *, m=192, subspace=10, dps=40):
    """Leftmost point where the resolvent trace representation blows up.

    Solves rho(s) = (1 + epsilon)^(-2) for s, where rho is the largest
    eigenvalue of the Airy kernel on (s, inf).  A float64 profile of
    log(1 - rho) brackets the root; a high-precision Rayleigh-Ritz
    refinement on the dominant eigenspace resolves targets far below
    hardware epsilon.  Error control compares discretization orders.
    """
    epsilon = float(epsilon)
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    import mpmath as mp

    with mp.workdps(dps):
        ln_target = float(mp.log(1 - (1 + mp.mpf(epsilon)) ** -2))

    # float64 stage: bracket and locate a trustworthy proxy target
    m64 = min(m, 128)
    ln_clip = max(ln_target, math.log(1e-9))
    grid = np.arange(8.0, -25.0, -1.0)
    bracket = None
    prev = None
    for s in grid:
        cur = _airy_lnmu64(float(s), m64)
        if prev is not None and cur <= ln_clip <= prev[1]:
            bracket = (float(s), prev[0])
            break
        prev = (float(s), cur)
    if bracket is None:
        raise BadBracketError(
            f"no bracket for log(1-rho) = {ln_clip:.3f} on s in [{grid[-1]}, {grid[0]}]"
        )
    s_pre = brentq(
        lambda s: _airy_lnmu64(s, m64) - ln_clip, bracket[0], bracket[1],
        xtol=1e-10, rtol=8.9e-16,
    )
    step = 0.25
    slope = (_airy_lnmu64(s_pre + step, m64) - _airy_lnmu64(s_pre - step, m64)) / (
        2 * step
    )
    s0 = s_pre + (ln_target - ln_clip) / slope

    # high-precision stage: secant iteration on the refined profile
    def f_mp(s):
        return _airy_lnmu_mp(s, m, subspace, dps) - ln_target

    s1, f1 = s0, f_mp(s0)
    s2 = s1 - f1 / slope
    if s2 == s1:
        s2 = s1 + 1e-9
    f2 = f_mp(s2)
    step = abs(s2 - s1)
    for _ in range(10):
        if step <= 1e-13 * max(1.0, abs(s2)) or f2 == f1:
            break
        nxt = s2 - f2 * (s2 - s1) / (f2 - f1)
        fnxt = f_mp(nxt)
        if abs(fnxt) >= abs(f2):
            # working-precision floor reached; keep the better iterate
            step = abs(nxt - s2)
            break
        s1, f1, s2, f2 = s2, f2, nxt, fnxt
        step = abs(s2 - s1)
    if not abs(f2) < 1e-6:
        raise NoConvergenceError("blow-up secant iteration did not settle")

    lnmu_fine = _airy_lnmu_mp(s2, m + m // 2, subspace, dps)
    residual = abs((f2 + ln_target) - lnmu_fine)
    err = max(residual / abs(slope), step, 4e-16 * abs(s2))
    return ValueWithError(value=s2, err=err, m_used=m)
