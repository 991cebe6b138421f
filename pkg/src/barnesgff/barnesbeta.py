"""Barnes beta distributions beta_{M,N}(a, b) for M <= N + 1.

The Mellin transform is

    eta(q) = exp((S_N log Gamma_M)(q) - (S_N log Gamma_M)(0)),

where ``S_N`` is the alternating sum over subsets of ``b_1..b_N`` shifted
by ``b_0``.  ``-log beta`` is infinitely divisible with Levy density

    nu(t) = e^{-b_0 t} prod_j (1 - e^{-b_j t}) / prod_i (1 - e^{-a_i t}) / t,

which has finite mass for ``M < N`` (SUB), behaves like ``C/t`` at the
origin for ``M = N`` (CRITICAL) and like ``C/t^2`` for ``M = N + 1``
(SUPER, compensated and shifted by a drift).  Here
``C = prod b_j / prod a_i``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.special import bernoulli

from .errors import ContractError, DomainError, PoleError, VerificationError
from .multigamma import (
    MultiGammaParams,
    _bernoulli_poly_array,
    log_multi_gamma,
    log_multi_gamma_extended,
)
from .numerics import (
    DEFAULT_REL_TOL,
    as_seed_sequence,
    INVERSION_REL_TOL,
    SeriesCoeffs,
    exp_series,
    integrate_interval,
    integrate_semiline,
    invert_cf_to_cdf,
    series_product,
)

__all__ = [
    "Regime",
    "BarnesBetaSpec",
    "RatioSpec",
    "s_operator",
    "log_eta",
    "log_eta_lk",
    "log_eta_ratio",
    "atom_mass",
    "moment",
    "sample",
    "sample_ratio",
    "factorization_partial_product",
    "stieltjes_determinate",
    "functional_equation_residual",
    "scaling_residual",
    "composition_residual",
    "lemma_identity_residuals",
    "write_samples",
]

MAX_N = 20
SAMPLE_CHUNK = 1 << 14


class Regime(str, Enum):
    SUB = "SUB"
    CRITICAL = "CRITICAL"
    SUPER = "SUPER"


@dataclass(frozen=True)
class BarnesBetaSpec:
    """Parameters ``(M, N, a, b)`` of ``beta_{M,N}(a, b)``; ``b = (b_0..b_N)``."""

    M: int
    N: int
    a: tuple
    b: tuple

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        if int(self.M) != self.M or int(self.N) != self.N or self.M < 0 or self.N < 0:
            raise DomainError("M and N must be non-negative integers")
        if self.M > self.N + 1:
            raise DomainError("need M <= N + 1")
        if len(a) != self.M or len(b) != self.N + 1:
            raise DomainError(f"expected {self.M} periods and {self.N + 1} b-parameters")
        if not all(x > 0 and math.isfinite(x) for x in a + b):
            raise DomainError("all parameters must be positive and finite")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def regime(self):
        if self.M < self.N:
            return Regime.SUB
        if self.M == self.N:
            return Regime.CRITICAL
        return Regime.SUPER

    @property
    def params(self):
        return MultiGammaParams(self.M, self.a)

    @property
    def b0(self):
        return self.b[0]

    @property
    def drift_constant(self):
        """``C = prod_{j>=1} b_j / prod_i a_i``."""
        return math.prod(self.b[1:]) / math.prod(self.a)

    def scaled(self, kappa):
        return BarnesBetaSpec(self.M, self.N, tuple(kappa * x for x in self.a), tuple(kappa * x for x in self.b))

    def with_b0(self, b0):
        return BarnesBetaSpec(self.M, self.N, self.a, (b0,) + self.b[1:])

    def to_dict(self):
        return {"M": self.M, "N": self.N, "a": list(self.a), "b": list(self.b), "regime": self.regime.value}


@dataclass(frozen=True)
class RatioSpec:
    """``beta_{M,M-1}(a, b) / beta_{M,M-1}(a, bbar)`` with ``bbar = (bbar0, b_1..)``."""

    base: BarnesBetaSpec
    bbar0: float
    sine: bool = False

    def __post_init__(self):
        if self.base.regime is not Regime.SUPER:
            raise ContractError("ratio laws need a SUPER base spec")
        if not self.bbar0 > 0:
            raise DomainError("bbar0 must be positive")
        if self.sine:
            expected = sum(self.base.a) - sum(self.base.b)
            if not expected > 0:
                raise DomainError("sine choice needs |a| - sum b_j > 0")
            if abs(self.bbar0 - expected) > 1e-12 * max(1.0, expected):
                raise DomainError(f"sine flag requires bbar0 = |a| - sum b = {expected}")
        object.__setattr__(self, "bbar0", float(self.bbar0))

    @classmethod
    def sine_choice(cls, base):
        return cls(base, sum(base.a) - sum(base.b), sine=True)

    @property
    def bar(self):
        return self.base.with_b0(self.bbar0)

    def to_dict(self):
        return {"base": self.base.to_dict(), "bbar0": self.bbar0, "sine": self.sine}


# --------------------------------------------------------------------------
# S_N operator and the Mellin transform
# --------------------------------------------------------------------------


def _subset_shifts(b):
    """Shifts ``b_0 + sum_{k in S} b_k`` and signs ``(-1)^{|S|}`` over all subsets."""
    n = len(b) - 1
    if n > MAX_N:
        raise DomainError(f"S_N with N = {n} > {MAX_N} refused (2^N terms)")
    shifts = [b[0]]
    signs = [1]
    for p in range(1, n + 1):
        for combo in itertools.combinations(b[1:], p):
            shifts.append(b[0] + sum(combo))
            signs.append(-1 if p % 2 else 1)
    return np.array(shifts), np.array(signs, dtype=float)


def s_operator(h, q, b):
    """``(S_N h)(q | b) = sum_p (-1)^p sum_{k_1<..<k_p} h(q + b_0 + b_{k_1} + .. + b_{k_p})``."""
    shifts, signs = _subset_shifts(tuple(float(x) for x in b))
    return sum(s * h(q + x) for s, x in zip(signs, shifts))


def _check_ray(b0, q):
    q = np.asarray(q, dtype=complex)
    bad = (q.imag == 0) & (q.real <= -b0)
    if np.any(bad):
        loc = complex(q[bad].ravel()[0]) if q.ndim else complex(q)
        raise PoleError(
            f"q = {loc} lies on the forbidden ray (-inf, -b_0], b_0 = {b0}",
            location=loc,
            lattice_point=-b0,
        )


def _s_log_gamma(params, b, q, rel_tol):
    """``(S_N log Gamma_M)(q | a, b)`` for a flat complex array ``q``."""
    shifts, signs = _subset_shifts(tuple(b))
    args = q[:, None] + shifts[None, :]
    vals = log_multi_gamma_extended(params, args.ravel(), rel_tol).reshape(args.shape)
    return vals @ signs


def log_eta(spec, q, rel_tol=DEFAULT_REL_TOL):
    """``log E[beta^q]`` from the multiple gamma product.

    Parameters
    ----------
    spec : BarnesBetaSpec
    q : complex or array_like
        Off the ray ``(-inf, -b_0]``.

    Returns
    -------
    complex or ndarray
        Exactly ``0`` at ``q = 0``.
    """
    qarr = np.asarray(q, dtype=complex)
    _check_ray(spec.b0, qarr)
    flat = np.atleast_1d(qarr).ravel()
    out = np.zeros(flat.shape, dtype=complex)
    nz = flat != 0
    if nz.any():
        base = _s_log_gamma(spec.params, spec.b, np.zeros(1, dtype=complex), rel_tol)[0]
        out[nz] = _s_log_gamma(spec.params, spec.b, flat[nz], rel_tol) - base
    out = out.reshape(qarr.shape)
    return out[()] if out.ndim == 0 else out


def log_eta_ratio(rspec, q, rel_tol=DEFAULT_REL_TOL):
    """``log E[ratio^q] = log eta(q | b) + log eta(-q | bbar)`` for ``bbar_0 > Re q > -b_0``."""
    qarr = np.asarray(q, dtype=complex)
    if np.any(qarr.real <= -rspec.base.b0) or np.any(qarr.real >= rspec.bbar0):
        raise DomainError("ratio Mellin transform needs bbar_0 > Re(q) > -b_0")
    return log_eta(rspec.base, qarr, rel_tol) + log_eta(rspec.bar, -qarr, rel_tol)


# --------------------------------------------------------------------------
# Levy-Khinchine side
# --------------------------------------------------------------------------


def _ratio(spec, t):
    """``prod_j (1 - e^{-b_j t}) / prod_i (1 - e^{-a_i t})``."""
    out = np.ones_like(t)
    for bj in spec.b[1:]:
        out = out * -np.expm1(-bj * t)
    for ai in spec.a:
        out = out / -np.expm1(-ai * t)
    return out


def _tnu(spec, t):
    """``t nu(t) = e^{-b_0 t} R(t)``."""
    return np.exp(-spec.b0 * t) * _ratio(spec, t)


_LK_ORDER = 30


def _lk_series(spec, q):
    """Small-t Taylor series of the Levy-Khinchine integrand, batched over ``q``."""
    K = _LK_ORDER + 2
    k = np.arange(K + 1)
    fact = np.array([math.factorial(i) for i in range(K + 2)], dtype=float)
    # (e^{-tq} - 1)/t
    e1 = SeriesCoeffs((-q[:, None]) ** (k + 1) / fact[k + 1])
    factors = [e1, exp_series(-spec.b0, K)]
    for bj in spec.b[1:]:
        factors.append(SeriesCoeffs((-1.0) ** k * bj ** (k + 1) / fact[k + 1]))
    bplus = bernoulli(K).astype(float)
    if K >= 1:
        bplus[1] = 0.5
    for ai in spec.a:
        factors.append(SeriesCoeffs(bplus * ai ** (k - 1.0) / fact[: K + 1], 2 * math.pi / ai))
    P = series_product(factors, K).coefficients
    d = spec.N - spec.M
    if d >= 0:
        coeffs = np.concatenate([np.zeros((q.size, d)), P[:, : K + 1 - d]], axis=1)
    else:
        # SUPER: add q C e^{-t} and divide by t (the constant terms cancel)
        comp = q[:, None] * spec.drift_constant * (-1.0) ** k / fact[: K + 1]
        coeffs = (P + comp)[:, 1:]
    radius = 2 * math.pi / max(spec.a) if spec.M else math.inf
    return SeriesCoeffs(coeffs[:, :_LK_ORDER], radius)


def log_eta_lk(spec, q, rel_tol=DEFAULT_REL_TOL):
    """``log E[beta^q]`` from the Levy-Khinchine integral.

    For ``M <= N`` this is ``int (e^{-tq} - 1) t nu(t) dt / t``; for
    ``M = N + 1`` the integrand gains ``q C e^{-t} / t``, which keeps it finite
    at the origin.  Near ``t = 0`` a Taylor expansion replaces the direct
    formula.  For complex ``q`` the ray is turned by ``-arg(q + b_0) / 2``
    (the integrand is analytic for ``Re t > 0``), so ``e^{-(q + b_0) t}``
    decays instead of oscillating.  Needs ``Re(q) > -b_0``.
    """
    qarr = np.asarray(q, dtype=complex)
    if np.any(qarr.real <= -spec.b0):
        raise DomainError("Levy-Khinchine representation needs Re(q) > -b_0")
    flat = np.atleast_1d(qarr).ravel()
    C = spec.drift_constant
    sup = spec.regime is Regime.SUPER
    qcol = flat[:, None]
    phi = -0.5 * np.angle(flat + spec.b0)
    rot = np.exp(1j * phi)[:, None]

    def f(r):
        t = r[None, :] * rot
        tq = t * qcol
        with np.errstate(over="ignore", invalid="ignore"):
            near = np.expm1(-tq) * np.exp(-spec.b0 * t)
        far = np.exp(-t * (qcol + spec.b0)) - np.exp(-spec.b0 * t)
        val = np.where(np.abs(tq) < 1, near, far) * _ratio(spec, t)
        if sup:
            val = val + qcol * C * np.exp(-t)
        return val / t * rot

    series = _lk_series(spec, flat)
    k = np.arange(series.coefficients.shape[-1])
    # f(r e^{i phi}) e^{i phi} has coefficients c_k e^{i (k + 1) phi}
    series = SeriesCoeffs(series.coefficients * rot ** (k + 1), series.radius_hint)
    qmax = float(np.max(np.abs(flat))) if flat.size else 0.0
    t_switch = min(2.0**-6 * min(series.radius_hint, 64.0), 0.5 / max(qmax, 1e-300))
    res = integrate_semiline(f, split=1.0, rel_tol=rel_tol, series=series, t_switch=t_switch)
    out = np.asarray(res.value).reshape(qarr.shape)
    return out[()] if out.ndim == 0 else out


def atom_mass(spec, rel_tol=DEFAULT_REL_TOL):
    """``P[beta = 1]`` for a SUB spec.

    Computed as ``exp(-int nu)`` and cross-checked against
    ``exp(-(S_N log Gamma_M)(0))``.

    Raises
    ------
    ContractError
        Unless ``M < N``.
    VerificationError
        If the two values differ by more than ``1e-8``.
    """
    if spec.regime is not Regime.SUB:
        raise ContractError("atom_mass is defined only for M < N")
    lam = integrate_semiline(lambda t: _tnu(spec, t) / t, rel_tol=rel_tol).value
    by_integral = math.exp(-lam)
    by_gamma = math.exp(-_s_log_gamma(spec.params, spec.b, np.zeros(1, dtype=complex), rel_tol)[0].real)
    if abs(by_integral - by_gamma) > 1e-8:
        raise VerificationError(
            "atom mass: integral and gamma forms disagree",
            {"integral": by_integral, "gamma": by_gamma},
        )
    return by_integral


def _unit_axis(spec):
    for i, ai in enumerate(spec.a):
        if abs(ai - 1.0) <= 1e-14:
            return i
    raise ContractError("integer moment formulas need some a_i = 1")


def moment(spec, k, rel_tol=DEFAULT_REL_TOL):
    """Integer moment ``E[beta^k]`` from the ``S_N log Gamma_{M-1}`` sums.

    Needs an axis with ``a_i = 1``.  Negative ``k`` requires ``|k| < b_0``.
    """
    if int(k) != k:
        raise DomainError("k must be an integer")
    k = int(k)
    if k == 0:
        return 1.0
    i = _unit_axis(spec)
    sub = spec.params.drop(i)
    if k > 0:
        ls = np.arange(k, dtype=complex)
        return float(np.exp(-np.sum(_s_log_gamma(sub, spec.b, ls, rel_tol))).real)
    if -k >= spec.b0:
        raise DomainError(f"negative moment of order {-k} needs {-k} < b_0 = {spec.b0}")
    ls = -(np.arange(-k, dtype=complex) + 1)
    return float(np.exp(np.sum(_s_log_gamma(sub, spec.b, ls, rel_tol))).real)


def stieltjes_determinate(spec):
    """Moment determinacy of a SUPER law: ``prod b_j <= 2 prod a_i``.

    The comparison allows a few ulps so exact boundary cases are not lost
    to rounding in the products.
    """
    if spec.regime is not Regime.SUPER:
        raise ContractError("determinacy criterion applies to M = N + 1")
    lhs = math.prod(spec.b[1:])
    rhs = 2 * math.prod(spec.a)
    return lhs <= rhs * (1 + 8 * np.finfo(float).eps)


# --------------------------------------------------------------------------
# identities
# --------------------------------------------------------------------------


def functional_equation_residual(spec, q, i=0, rel_tol=DEFAULT_REL_TOL):
    """``|log eta(q + a_i) - log eta(q) + (S_N log Gamma_{M-1})(q | a^i, b)|``."""
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    lhs = log_eta(spec, q + spec.a[i], rel_tol) - log_eta(spec, q, rel_tol)
    return np.abs(lhs + _s_log_gamma(spec.params.drop(i), spec.b, q, rel_tol))


def scaling_residual(spec, q, kappa, rel_tol=DEFAULT_REL_TOL):
    """Residual of ``log eta(kq | ka, kb) = log eta(q | a, b) + [SUPER] C q log k``."""
    q = np.asarray(q, dtype=complex)
    lhs = log_eta(spec.scaled(kappa), kappa * q, rel_tol)
    rhs = log_eta(spec, q, rel_tol)
    if spec.regime is Regime.SUPER:
        rhs = rhs + spec.drift_constant * q * math.log(kappa)
    return np.abs(lhs - rhs)


def composition_residual(spec, q, x, rel_tol=DEFAULT_REL_TOL):
    """``|log eta(q | b_0 + x, ..) + log eta(x | b) - log eta(q + x | b)|``."""
    lhs = log_eta(spec.with_b0(spec.b0 + x), q, rel_tol) + log_eta(spec, x, rel_tol)
    return abs(lhs - log_eta(spec, q + x, rel_tol))


def lemma_identity_residuals(params, q, b):
    """Residuals of the three ``S_{M-1}`` identities for ``B_{M,k}``.

    With ``b = (b_0..b_{M-1})``: the ``S_{M-1}`` images of ``B_{M,k}`` vanish
    for ``k < M - 1``, are ``q``-independent for ``k = M - 1`` and differ
    from their value at ``0`` by ``-q M! prod b_j / prod a_i`` for ``k = M``.
    Returns the largest residual of each kind.
    """
    p = params
    M = p.M
    if len(b) != M:
        raise DomainError("need b of length M")
    shifts, signs = _subset_shifts(tuple(b))
    q = complex(q)

    def s_op(k, x):
        return complex(np.sum(signs * _bernoulli_poly_array(p, k, x + shifts)))

    scale = max(1.0, abs(q)) ** M * max(1.0, max(b)) ** M
    r1 = max((abs(s_op(k, q)) for k in range(M - 1)), default=0.0) / scale
    r2 = abs(s_op(M - 1, q) - s_op(M - 1, 0.0)) / scale if M >= 1 else 0.0
    drift = -q * math.factorial(M) * math.prod(b[1:]) / math.prod(p.a)
    r3 = abs(s_op(M, q) - s_op(M, 0.0) - drift) / scale
    return r1, r2, r3


# --------------------------------------------------------------------------
# factorizations
# --------------------------------------------------------------------------


def _lattice(a, bound):
    """All ``Omega = sum n_i a_i <= bound``."""
    pts = np.zeros(1)
    for ai in a:
        n = np.arange(int(math.floor(bound / ai)) + 1) * ai
        pts = (pts[:, None] + n[None, :]).ravel()
        pts = pts[pts <= bound * (1 + 1e-12)]
    return pts


def _barnes_log_terms(b, q, omega):
    shifts, signs = _subset_shifts(tuple(b))
    x = shifts[None, :] + omega[:, None]
    return -np.sum(signs[None, :] * np.log1p(q / x))


def factorization_partial_product(spec, q, mode="barnes", T=100, axis=0, rel_tol=DEFAULT_REL_TOL):
    """Truncated infinite-product form of the Mellin transform.

    ``mode="barnes"`` multiplies the rational factors over the lattice
    ``Omega = sum n_i a_i <= T min(a)``; ``mode="shintani"`` multiplies
    ``eta_{M-1,N}(q + k a_i) / eta_{M-1,N}(k a_i)`` for ``k < T`` along
    ``axis``.  Accepts a ``BarnesBetaSpec`` with ``M <= N`` or a
    ``RatioSpec``.
    """
    if T < 1:
        raise DomainError("truncation T must be >= 1")
    q = complex(q)
    if q == 0:
        return 1.0 + 0j
    ratio = isinstance(spec, RatioSpec)
    base = spec.base if ratio else spec
    if not ratio and base.regime is Regime.SUPER:
        raise ContractError("product factorizations of SUPER laws need the ratio form")
    if ratio and not (-base.b0 < q.real < spec.bbar0):
        raise DomainError("need bbar_0 > Re(q) > -b_0")
    _check_ray(base.b0, np.asarray(q))
    if base.M == 0:
        raise ContractError("M = 0 has no factorization")
    if mode == "barnes":
        omega = _lattice(base.a, T * min(base.a))
        total = _barnes_log_terms(base.b, q, omega)
        if ratio:
            total += _barnes_log_terms(spec.bar.b, -q, omega)
        return complex(np.exp(total))
    if mode == "shintani":
        ai = base.a[axis]
        sub = base.params.drop(axis)
        ks = np.arange(T) * ai
        total = np.sum(_s_log_gamma(sub, base.b, ks + q, rel_tol) - _s_log_gamma(sub, base.b, ks + 0j, rel_tol))
        if ratio:
            bb = spec.bar.b
            total += np.sum(_s_log_gamma(sub, bb, ks - q, rel_tol) - _s_log_gamma(sub, bb, ks + 0j, rel_tol))
        return complex(np.exp(total))
    raise ValueError(f"unknown mode {mode!r}")


# --------------------------------------------------------------------------
# samplers
# --------------------------------------------------------------------------


def _pair_bound(b_list, a_list):
    """``prod max(1, b/a)`` after pairing sorted ``b`` with sorted ``a``."""
    bs = sorted(b_list, reverse=True)
    as_ = sorted(a_list, reverse=True)
    return math.prod(max(1.0, x / y) for x, y in zip(bs, as_))


class _CompoundPoisson:
    """Exact sampler for SUB laws by thinning an exponential proposal.

    ``t nu(t) <= K b_l e^{-b_0 t}`` where one factor ``1 - e^{-b_l t} <= b_l t``
    is kept unpaired and the others are bounded through pairing.
    """

    path = "compound-poisson-thinning"

    def __init__(self, spec):
        self.spec = spec
        bs = list(spec.b[1:])
        best = math.inf
        for l in range(len(bs)):
            rest = bs[:l] + bs[l + 1 :]
            # pair the largest remaining b with the periods; the rest are <= 1
            rest = sorted(rest, reverse=True)
            K = _pair_bound(rest[: spec.M], spec.a)
            best = min(best, K * bs[l])
        self.gmax = best
        self.rate = best / spec.b0

    def draw(self, rng, m):
        s = self.spec
        counts = rng.poisson(self.rate, m)
        total = int(counts.sum())
        t = rng.exponential(1.0 / s.b0, total)
        u = rng.random(total)
        accept = u * self.gmax * t < _ratio(s, t)
        owner = np.repeat(np.arange(m), counts)
        x = np.bincount(owner[accept], weights=t[accept], minlength=m)
        return np.exp(-x)


class _InfiniteActivity:
    """CRITICAL laws: exact jumps above ``eps`` by thinning, Gamma-matched remainder."""

    path = "levy-thinning+gamma-small-jumps"

    def __init__(self, spec, eps=1e-8):
        self.spec = spec
        scale = max(max(spec.b), max(spec.a) if spec.a else 0.0)
        self.eps = eps / scale
        self.c = max(1.0 / spec.b0, 2 * self.eps)
        self.K = _pair_bound(spec.b[1:], spec.a)
        self.mass_near = self.K * math.log(self.c / self.eps)
        self.mass_far = self.K * math.exp(-spec.b0 * self.c) / (spec.b0 * self.c)
        m1 = integrate_interval(lambda t: _tnu(spec, t), 0.0, self.eps).value
        m2 = integrate_interval(lambda t: t * _tnu(spec, t), 0.0, self.eps).value
        self.shape = m1 * m1 / m2
        self.gscale = m2 / m1

    def draw(self, rng, m):
        s = self.spec
        n1 = rng.poisson(self.mass_near, m)
        n2 = rng.poisson(self.mass_far, m)
        t1 = self.eps * np.exp(rng.random(int(n1.sum())) * math.log(self.c / self.eps))
        t2 = self.c + rng.exponential(1.0 / s.b0, int(n2.sum()))
        env1 = self.K / t1
        env2 = self.K * np.exp(-s.b0 * t2) / self.c
        t = np.concatenate([t1, t2])
        env = np.concatenate([env1, env2])
        owner = np.concatenate([np.repeat(np.arange(m), n1), np.repeat(np.arange(m), n2)])
        u = rng.random(t.size)
        accept = u * env < _tnu(s, t) / t
        x = np.bincount(owner[accept], weights=t[accept], minlength=m)
        x = x + rng.gamma(self.shape, self.gscale, m)
        return np.minimum(np.exp(-x), np.nextafter(1.0, 0.0))


class _SuperLevy:
    """SUPER laws via compensated jumps, Gaussian small jumps and drift.

    ``log beta = D - (sum J - m_eps + sqrt(v_eps) Z)`` with
    ``D = int (C e^{-t}/t - t nu(t)) dt``, jumps ``J > eps`` from ``nu``,
    ``m_eps = int_eps^inf t nu`` and ``v_eps = int_0^eps t^2 nu``.
    """

    path = "levy-compensated+gaussian-small-jumps"

    def __init__(self, spec, eps=1e-3):
        self.spec = spec
        C = spec.drift_constant
        self.eps = eps / max(spec.a)
        self.c = max(1.0 / spec.b0, 2 * self.eps)
        # leave the largest period unpaired: 1/(1 - e^{-a t}) <= 1/(a t) + 1
        order = sorted(range(spec.M), key=lambda i: -spec.a[i])
        self.al = spec.a[order[0]]
        others = [spec.a[i] for i in order[1:]]
        self.K = _pair_bound(spec.b[1:], others)
        e, c, K, al = self.eps, self.c, self.K, self.al
        self.mass_sq = K / al * (1 / e - 1 / c)
        self.mass_log = K * math.log(c / e)
        self.tail_level = K * (1 / (al * c * c) + 1 / c)
        self.mass_tail = self.tail_level * math.exp(-spec.b0 * c) / spec.b0
        self.drift = integrate_semiline(
            lambda t: C * np.exp(-t) / t - _tnu(spec, t),
            rel_tol=1e-12,
            series=None,
        ).value
        self.m_eps = integrate_semiline(lambda t: _tnu(spec, self.eps + t)).value
        self.v_eps = integrate_interval(lambda t: t * _tnu(spec, t), 0.0, self.eps).value

    def draw(self, rng, m):
        s = self.spec
        e, c = self.eps, self.c
        n1 = rng.poisson(self.mass_sq, m)
        n2 = rng.poisson(self.mass_log, m)
        n3 = rng.poisson(self.mass_tail, m)
        u1 = rng.random(int(n1.sum()))
        t1 = 1.0 / (1.0 / e - u1 * (1.0 / e - 1.0 / c))
        t2 = e * np.exp(rng.random(int(n2.sum())) * math.log(c / e))
        t3 = c + rng.exponential(1.0 / s.b0, int(n3.sum()))
        t = np.concatenate([t1, t2, t3])
        near = t <= c
        env = np.where(near, self.K * (1 / (self.al * t * t) + 1 / t), self.tail_level * np.exp(-s.b0 * t))
        idx = np.arange(m)
        owner = np.concatenate([np.repeat(idx, n1), np.repeat(idx, n2), np.repeat(idx, n3)])
        u = rng.random(t.size)
        accept = u * env < _tnu(s, t) / t
        jumps = np.bincount(owner[accept], weights=t[accept], minlength=m)
        y = jumps - self.m_eps + math.sqrt(self.v_eps) * rng.standard_normal(m)
        return np.exp(self.drift - y)


class _Frechet:
    """``beta_{1,0}(a, b_0) = (a G)^{1/a}`` with ``G ~ Gamma(b_0 / a)``."""

    path = "exact-gamma-power"

    def __init__(self, spec):
        self.a = spec.a[0]
        self.k = spec.b0 / self.a

    def draw(self, rng, m):
        return (self.a * rng.gamma(self.k, 1.0, m)) ** (1.0 / self.a)


class _Inversion:
    """Tabulated inverse CDF of ``log beta`` from ``phi(u) = eta(iu)``."""

    path = "cf-inversion"
    grid_size = 8193

    def __init__(self, spec, rel_tol=INVERSION_REL_TOL):
        self.spec = spec
        C = spec.drift_constant
        mean = integrate_semiline(lambda t: C * np.exp(-t) / t - _tnu(spec, t), rel_tol=1e-12).value
        var = integrate_semiline(lambda t: t * _tnu(spec, t)).value
        sd = math.sqrt(var)
        lo = mean - max(12 * sd, 35.0 / spec.b0)
        hi = mean + 12 * sd
        grid = np.linspace(lo, hi, self.grid_size)

        def phi(u):
            u = np.asarray(u, dtype=float)
            return np.exp(log_eta(spec, 1j * u))

        self.table = invert_cf_to_cdf(phi, grid, rel_tol=rel_tol, center=mean)

    def draw(self, rng, m):
        return np.exp(self.table.quantile(rng.random(m)))


_SAMPLER_CACHE = {}
_SAMPLER_LOCK = threading.Lock()


def _sampler(spec, method):
    if method is None:
        if spec.regime is Regime.SUB:
            method = "poisson"
        elif spec.regime is Regime.CRITICAL:
            method = "levy"
        elif spec.M == 1:
            method = "exact"
        else:
            method = "inversion"
    key = (spec, method)
    with _SAMPLER_LOCK:
        hit = _SAMPLER_CACHE.get(key)
    if hit is not None:
        return hit
    if method == "poisson" and spec.regime is Regime.SUB:
        obj = _CompoundPoisson(spec)
    elif method == "levy" and spec.regime is Regime.CRITICAL:
        obj = _InfiniteActivity(spec)
    elif method == "levy" and spec.regime is Regime.SUPER:
        obj = _SuperLevy(spec)
    elif method == "exact" and spec.regime is Regime.SUPER and spec.M == 1:
        obj = _Frechet(spec)
    elif method == "inversion" and spec.regime is Regime.SUPER:
        obj = _Inversion(spec)
    else:
        raise ContractError(f"sampler {method!r} not available for regime {spec.regime.value}")
    with _SAMPLER_LOCK:
        _SAMPLER_CACHE.setdefault(key, obj)
    return obj


def _chunked(draw, n, seed, threads):
    """Draw ``n`` values in fixed chunks with spawned child seeds.

    The chunking does not depend on ``threads``, so the output is the same
    for any thread count.
    """
    if n == 0:
        return np.empty(0)
    nchunks = -(-n // SAMPLE_CHUNK)
    children = as_seed_sequence(seed).spawn(nchunks)
    sizes = [min(SAMPLE_CHUNK, n - i * SAMPLE_CHUNK) for i in range(nchunks)]

    def run(i):
        return draw(np.random.default_rng(children[i]), sizes[i])

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, range(nchunks)))
    else:
        parts = [run(i) for i in range(nchunks)]
    return np.concatenate(parts)


def sample(spec, n, seed=0, method=None, threads=1):
    """Independent draws of ``beta_{M,N}(a, b)``.

    ``method`` defaults to exact thinning for SUB, jump thinning with a
    Gamma-matched small-jump remainder for CRITICAL, the Gamma power for
    ``beta_{1,0}`` and characteristic-function inversion for other SUPER
    laws (``method="levy"`` gives an independent SUPER path).
    """
    n = int(n)
    if n < 0:
        raise DomainError("n must be >= 0")
    if n == 0:
        return np.empty(0)
    s = _sampler(spec, method)
    return _chunked(s.draw, n, seed, threads)


def sampler_path(spec, method=None):
    return _sampler(spec, method).path


def sample_ratio(rspec, n, seed=0, method=None, threads=1):
    """Draws of ``beta(a, b) / beta(a, bbar)`` from two independent samplers."""
    n = int(n)
    if n == 0:
        return np.empty(0)
    ss = as_seed_sequence(seed)
    s1, s2 = ss.spawn(2)
    num = sample(rspec.base, n, s1, method, threads)
    den = sample(rspec.bar, n, s2, method, threads)
    return num / den


def write_samples(path, values, metadata):
    """CSV ``index,value`` plus a ``.meta.json`` sidecar next to it."""
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(values):
            w.writerow([i, repr(float(v))])
    side = os.path.splitext(path)[0] + ".meta.json"
    meta = dict(metadata)
    meta["csv"] = os.path.basename(path)
    meta["count"] = int(values.size)
    with open(side, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return side


def _json_default(obj):
    if isinstance(obj, (BarnesBetaSpec, RatioSpec)):
        return obj.to_dict()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"not serialisable: {type(obj)}")
