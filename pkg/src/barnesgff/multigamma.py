"""Barnes multiple gamma functions.

``log_multi_gamma`` evaluates ``log Gamma_M(w | a)`` for ``Re(w) > 0`` from
the Malmsten-type integral, switching to the large-``|w|`` expansion beyond
``switch_radius`` and to closed forms for ``M <= 1``.  Arguments close to the
pole at the origin are first moved to the right with the functional equation
``Gamma_M(w) = Gamma_{M-1}(w | a^i) Gamma_M(w + a_i)``.

The integrand is split as

    e^{-wt} F(t) + sum_j f_j w^n e_n(wt) + B_{M,M}(w)/M! (1 - e^{-t}) / t,

with ``n = M + 1 - j``, ``F(t) = (f_M(t) - sum_{j<=M} f_j t^j) / t^{M+1}``
and ``e_n(x) = (e^{-x} - sum_{k<n} (-x)^k / k!) / x^n``, so no term carries
a removable singularity at ``t = 0``.  The contour is rotated into the lower
or upper half plane for complex ``w`` so ``e^{-wt}`` decays instead of
oscillating.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, loggamma

from .errors import DomainError, PoleError
from .numerics import DEFAULT_REL_TOL, SeriesCoeffs, integrate_semiline, series_product

__all__ = [
    "MultiGammaParams",
    "ComplexArg",
    "bernoulli_poly",
    "bernoulli_coefficients",
    "log_multi_gamma",
    "log_multi_gamma_asymptotic",
    "extend_by_functional_eq",
    "log_multi_gamma_extended",
    "multiple_sine",
    "functional_equation_residual",
    "scaling_residual",
    "multiplication_residual",
]

_LOG_2PI = math.log(2 * math.pi)
# Extra Taylor terms of F(t) used on the small-|t| disc.
_TAIL_TERMS = 40
# Terms of the 1/w correction series on the asymptotic path.
_ASYM_TERMS = 12
_CHUNK = 64


@dataclass(frozen=True)
class MultiGammaParams:
    """Order ``M`` and periods ``a`` (length ``M``, all positive)."""

    M: int
    a: tuple = ()

    def __post_init__(self):
        a = tuple(float(x) for x in np.atleast_1d(np.asarray(self.a, dtype=float))) if len(self.a) else ()
        if int(self.M) != self.M or self.M < 0:
            raise DomainError("M must be a non-negative integer")
        if len(a) != self.M:
            raise DomainError(f"expected {self.M} periods, got {len(a)}")
        if not all(x > 0 and math.isfinite(x) for x in a):
            raise DomainError("periods must be positive and finite")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "a", a)

    @property
    def total(self):
        """``|a| = sum a_i``."""
        return float(sum(self.a))

    def drop(self, i):
        """Parameters with period ``i`` removed."""
        return MultiGammaParams(self.M - 1, self.a[:i] + self.a[i + 1 :])

    def scaled(self, kappa):
        return MultiGammaParams(self.M, tuple(kappa * x for x in self.a))


@dataclass(frozen=True)
class ComplexArg:
    w: complex

    def __post_init__(self):
        if not complex(self.w).real > 0:
            raise DomainError("argument must have positive real part")


def _as_params(params):
    if isinstance(params, MultiGammaParams):
        return params
    M, a = params
    return MultiGammaParams(M, tuple(a))


# --------------------------------------------------------------------------
# Bernoulli data
# --------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _f_coeffs(a, K):
    """Taylor coefficients of ``f_M(t|a) = prod t / (1 - e^{-a_i t})``."""
    bplus = bernoulli(K).astype(float)
    if K >= 1:
        bplus[1] = 0.5
    fact = np.array([math.factorial(k) for k in range(K + 1)], dtype=float)
    factors = []
    for ai in a:
        factors.append(SeriesCoeffs(bplus * ai ** (np.arange(K + 1) - 1.0) / fact, 2 * math.pi / ai))
    c = series_product(factors, K).coefficients
    c.setflags(write=False)
    return c


def bernoulli_coefficients(params, K):
    """Taylor coefficients ``f_0..f_K`` of ``f_M(t|a)`` (read-only array)."""
    p = _as_params(params)
    return _f_coeffs(p.a, int(K))


def _bernoulli_poly_array(p, m, x):
    f = _f_coeffs(p.a, m)
    x = np.asarray(x)
    out = np.zeros(x.shape, dtype=np.result_type(x, float))
    for j in range(m + 1):
        out = out + f[j] * (-x) ** (m - j) / math.factorial(m - j)
    return math.factorial(m) * out


def bernoulli_poly(params, m, x, max_order=None):
    """Multiple Bernoulli polynomial ``B_{M,m}(x | a)``.

    The ``m``-th derivative at ``t = 0`` of ``f_M(t|a) e^{-xt}``.

    Parameters
    ----------
    params : MultiGammaParams
    m : int
        Order, at most ``max_order`` (default ``2M + 4``).
    x : complex or array_like
    """
    p = _as_params(params)
    cap = 2 * p.M + 4 if max_order is None else max_order
    if m < 0 or int(m) != m:
        raise DomainError("order must be a non-negative integer")
    if m > cap:
        raise DomainError(f"order {m} exceeds cap {cap}")
    out = _bernoulli_poly_array(p, int(m), x)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------


def _log_gamma0(w):
    if np.any(w == 0):
        raise PoleError("Gamma_0 has a pole at 0", location=0.0, lattice_point=0.0)
    return -np.log(w)


def _log_gamma1(a, w):
    z = w / a
    bad = (z.real <= 0) & (np.abs(z - np.round(z.real)) < 1e-14)
    if np.any(bad):
        loc = complex(w[bad][0])
        raise PoleError(
            f"Gamma_1 has a pole at {loc}", location=loc, lattice_point=float(np.round(z[bad][0].real)) * a
        )
    return (z - 0.5) * math.log(a) + loggamma(z) - 0.5 * _LOG_2PI


# --------------------------------------------------------------------------
# integral path
# --------------------------------------------------------------------------


def _e_n(x, n):
    """``(e^{-x} - sum_{k<n} (-x)^k/k!) / x^n``, stable near 0."""
    out = np.empty_like(x)
    small = np.abs(x) <= 2.0
    if small.any():
        xs = x[small]
        acc = np.zeros_like(xs)
        for m in range(30, -1, -1):
            acc = acc * xs + (-1) ** (n + m) / math.factorial(m + n)
        out[small] = acc
    big = ~small
    if big.any():
        xb = x[big]
        poly = np.zeros_like(xb)
        for k in range(n - 1, -1, -1):
            poly = poly * (-xb) + 1.0 / math.factorial(k)
        out[big] = (np.exp(-xb) - poly) / xb**n
    return out


def _integrand_factory(p, w, phi, bmm):
    M = p.M
    a = np.asarray(p.a)
    K = M + 1 + _TAIL_TERMS
    f = _f_coeffs(p.a, K)
    tail = f[M + 1 :]
    r_small = 0.25 * 2 * math.pi / a.max()
    rot = np.exp(1j * phi)[:, None]
    wcol = w[:, None]
    bcol = bmm[:, None]

    def g(s):
        t = s[None, :] * rot
        absval = np.abs(t)
        fr = np.empty(t.shape, dtype=complex)
        near = absval <= r_small
        if near.any():
            tn = t[near]
            acc = np.zeros_like(tn)
            for c in tail[::-1]:
                acc = acc * tn + c
            fr[near] = acc
        far = ~near
        if far.any():
            tf = t[far]
            full = np.ones_like(tf)
            for ai in a:
                full = full * (tf / (-np.expm1(-ai * tf)))
            poly = np.zeros_like(tf)
            for c in f[M::-1]:
                poly = poly * tf + c
            fr[far] = (full - poly) / tf ** (M + 1)
        x = wcol * t
        out = np.exp(-x) * fr
        for j in range(M + 1):
            n = M + 1 - j
            out = out + f[j] * wcol**n * _e_n(x, n)
        out = out + bcol * (-np.expm1(-t)) / t
        return out * rot

    return g


def _integral_path(p, w, rel_tol):
    """Vectorised Malmsten integral for ``Re(w) > 0``, ``M >= 1``."""
    out = np.empty(w.shape, dtype=complex)
    bmm = _bernoulli_poly_array(p, p.M, w) / math.factorial(p.M)
    phi = -np.clip(np.angle(w), -math.pi / 4, math.pi / 4)
    for start in range(0, w.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        g = _integrand_factory(p, w[sl], phi[sl], bmm[sl])
        out[sl] = integrate_semiline(g, split=1.0, rel_tol=rel_tol).value
    return out


def _asymptotic(p, w, n_terms):
    M = p.M
    K = M + 1 + n_terms
    f = _f_coeffs(p.a, max(K, M))
    logw = np.log(w)
    out = -_bernoulli_poly_array(p, M, w) / math.factorial(M) * logw
    for k in range(M + 1):
        bk0 = math.factorial(k) * f[k]
        harm = sum(1.0 / l for l in range(1, M - k + 1))
        if harm:
            out = out + bk0 * (-w) ** (M - k) / (math.factorial(k) * math.factorial(M - k)) * harm
    for j in range(M + 1, M + 1 + n_terms):
        out = out + f[j] * math.factorial(j - M - 1) * w ** (M - j)
    return out


def log_multi_gamma_asymptotic(params, w, n_terms=0):
    """Large-``|w|`` expansion of ``log Gamma_M(w | a)``.

    With ``n_terms = 0`` this is the leading form: the ``-B_{M,M}(w) log w / M!``
    term plus the harmonic-number polynomial, accurate to ``O(1/w)``.  Each
    further term adds ``f_j (j-M-1)! w^{M-j}`` for ``j = M+1, M+2, ...``,
    where ``f_j`` are the Taylor coefficients of ``f_M(t|a)``.
    """
    p = _as_params(params)
    warr = np.asarray(w, dtype=complex)
    if np.any(np.abs(np.angle(warr)) >= math.pi) or np.any(warr == 0):
        raise DomainError("asymptotic expansion needs |arg w| < pi")
    out = _asymptotic(p, np.atleast_1d(warr).ravel(), int(n_terms)).reshape(warr.shape)
    return out[()] if out.ndim == 0 else out


def switch_radius(params):
    p = _as_params(params)
    return 20.0 * max(p.a) if p.M else 0.0


def _lmg_core(p, w, rel_tol, method):
    """Vectorised evaluation on a flat array with ``Re(w) > 0``."""
    if p.M == 0:
        return _log_gamma0(w)
    if p.M == 1 and method == "auto":
        return _log_gamma1(p.a[0], w)
    out = np.empty(w.shape, dtype=complex)
    if method == "asymptotic":
        return _asymptotic(p, w, _ASYM_TERMS)
    rad = switch_radius(p)
    asym = np.abs(w) >= rad if method == "auto" else np.zeros(w.shape, bool)
    # near the pole at 0 the integrand spreads over a long range; step right
    shift = (~asym) & (np.abs(w) < 0.5 * max(p.a)) if method == "auto" else np.zeros(w.shape, bool)
    direct = ~(asym | shift)
    if asym.any():
        out[asym] = _asymptotic(p, w[asym], _ASYM_TERMS)
    if direct.any():
        out[direct] = _integral_path(p, w[direct], rel_tol)
    if shift.any():
        i = int(np.argmax(p.a))
        ws = w[shift]
        out[shift] = _lmg_core(p.drop(i), ws, rel_tol, method) + _lmg_core(p, ws + p.a[i], rel_tol, method)
    return out


def log_multi_gamma(params, w, rel_tol=DEFAULT_REL_TOL, method="auto"):
    """``log Gamma_M(w | a)`` for ``Re(w) > 0``.

    Parameters
    ----------
    params : MultiGammaParams or (M, a)
    w : complex or array_like
        Arguments with positive real part.
    method : {"auto", "integral", "asymptotic"}
        ``"auto"`` uses closed forms for ``M <= 1``, the expansion for
        ``|w| >= 20 max(a)`` and the integral otherwise.  ``"integral"``
        forces the integral (also for ``M = 1``).

    Returns
    -------
    complex or ndarray
        The branch analytic on the right half plane.

    Raises
    ------
    DomainError
        If any ``Re(w) <= 0``; see ``extend_by_functional_eq``.
    """
    p = _as_params(params)
    if method not in ("auto", "integral", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    warr = np.asarray(w, dtype=complex)
    flat = np.atleast_1d(warr).ravel()
    if not np.all(np.isfinite(flat)):
        raise DomainError("argument must be finite")
    if np.any(flat.real <= 0):
        raise DomainError("log_multi_gamma needs Re(w) > 0; use extend_by_functional_eq")
    out = _lmg_core(p, flat, rel_tol, method).reshape(warr.shape)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# continuation to Re(w) <= 0
# --------------------------------------------------------------------------


def _check_lattice(p, w):
    """Raise if ``w`` is (numerically) a point ``-Omega`` of the pole lattice."""
    if p.M == 0:
        if abs(w) < 1e-14:
            raise PoleError("pole at w = 0", location=w, lattice_point=0.0)
        return
    if w.real > 0 or abs(w.imag) > 1e-12:
        return
    ranges = [range(int(math.floor(-w.real / ai)) + 2) for ai in p.a]
    for n in itertools.product(*ranges):
        omega = sum(ni * ai for ni, ai in zip(n, p.a))
        if abs(w + omega) < 1e-12 * max(1.0, omega):
            raise PoleError(f"pole of Gamma_{p.M} at {w}", location=w, lattice_point=-omega)


def _extended_scalar(p, w, rel_tol, i=None):
    if p.M == 0:
        return complex(_log_gamma0(np.array([w]))[0])
    if p.M == 1:
        return complex(_log_gamma1(p.a[0], np.array([w]))[0])
    if w.real > 0:
        return complex(_lmg_core(p, np.array([w]), rel_tol, "auto")[0])
    _check_lattice(p, w)
    i = int(np.argmax(p.a)) if i is None else i
    ai = p.a[i]
    k = int(math.floor(-w.real / ai)) + 1
    sub = p.drop(i)
    acc = 0j
    for l in range(k):
        acc += _extended_scalar(sub, w + l * ai, rel_tol)
    return acc + complex(_lmg_core(p, np.array([w + k * ai]), rel_tol, "auto")[0])


def extend_by_functional_eq(params, w, i=0, rel_tol=DEFAULT_REL_TOL):
    """``log Gamma_M(w | a)`` for any ``w`` off the pole lattice.

    Applies ``log Gamma_M(w) = log Gamma_{M-1}(w | a^i) + log Gamma_M(w + a_i)``
    the minimal number of times along axis ``i`` so the last argument has
    positive real part; lower-order factors are continued recursively.
    The imaginary part is the sum of principal-branch pieces, so it may
    differ by a multiple of ``2 pi i`` from the analytic continuation.

    Raises
    ------
    PoleError
        When ``w`` lies on ``-Omega``, ``Omega = sum n_i a_i``.
    """
    p = _as_params(params)
    w = complex(w)
    if p.M == 0:
        return complex(_log_gamma0(np.array([w]))[0])
    if not 0 <= i < p.M:
        raise DomainError(f"axis index {i} out of range")
    if p.M == 1:
        _check_lattice(p, w)
        return complex(_log_gamma1(p.a[0], np.array([w]))[0])
    _check_lattice(p, w)
    ai = p.a[i]
    k = max(0, int(math.floor(-w.real / ai)) + 1)
    sub = p.drop(i)
    acc = 0j
    for l in range(k):
        acc += _extended_scalar(sub, w + l * ai, rel_tol)
    return acc + complex(_lmg_core(p, np.array([w + k * ai]), rel_tol, "auto")[0])


def log_multi_gamma_extended(params, w, rel_tol=DEFAULT_REL_TOL):
    """Vectorised ``log Gamma_M`` on the whole plane minus the pole lattice."""
    p = _as_params(params)
    warr = np.asarray(w, dtype=complex)
    flat = np.atleast_1d(warr).ravel()
    out = np.empty(flat.shape, dtype=complex)
    right = flat.real > 0
    if right.any():
        out[right] = _lmg_core(p, flat[right], rel_tol, "auto")
    for idx in np.flatnonzero(~right):
        out[idx] = _extended_scalar(p, complex(flat[idx]), rel_tol)
    out = out.reshape(warr.shape)
    return out[()] if out.ndim == 0 else out


def multiple_sine(params, w, rel_tol=DEFAULT_REL_TOL):
    """``S_M(w | a) = Gamma_M(|a| - w)^{(-1)^M} / Gamma_M(w)``."""
    p = _as_params(params)
    w = complex(w)
    sign = -1 if p.M % 2 else 1
    lhs = log_multi_gamma_extended(p, p.total - w, rel_tol)
    rhs = log_multi_gamma_extended(p, w, rel_tol)
    return complex(np.exp(sign * lhs - rhs))


# --------------------------------------------------------------------------
# identity residuals
# --------------------------------------------------------------------------


def functional_equation_residual(params, w, i=0, rel_tol=DEFAULT_REL_TOL):
    """``|log G_M(w) - log G_{M-1}(w | a^i) - log G_M(w + a_i)|``."""
    p = _as_params(params)
    w = np.asarray(w, dtype=complex)
    lhs = log_multi_gamma(p, w, rel_tol)
    rhs = log_multi_gamma(p.drop(i), w, rel_tol) + log_multi_gamma(p, w + p.a[i], rel_tol)
    return np.abs(lhs - rhs)


def scaling_residual(params, w, kappa, rel_tol=DEFAULT_REL_TOL):
    """``|log G_M(kw | ka) + B_{M,M}(w)/M! log k - log G_M(w)|``."""
    p = _as_params(params)
    w = np.asarray(w, dtype=complex)
    lhs = log_multi_gamma(p.scaled(kappa), kappa * w, rel_tol)
    b = _bernoulli_poly_array(p, p.M, w) / math.factorial(p.M)
    return np.abs(lhs + b * math.log(kappa) - log_multi_gamma(p, w, rel_tol))


def multiplication_residual(params, w, k=2, rel_tol=DEFAULT_REL_TOL):
    """Residual of ``G_M(kw) = k^{-B_{M,M}(kw)/M!} prod_p G_M(w + p.a/k)``."""
    p = _as_params(params)
    w = complex(w)
    shifts = [sum(pj * aj for pj, aj in zip(pp, p.a)) / k for pp in itertools.product(range(k), repeat=p.M)]
    args = w + np.asarray(shifts, dtype=complex)
    rhs = np.sum(log_multi_gamma(p, args, rel_tol))
    rhs -= complex(_bernoulli_poly_array(p, p.M, np.array(k * w))) / math.factorial(p.M) * math.log(k)
    return abs(complex(log_multi_gamma(p, k * w, rel_tol)) - rhs)
