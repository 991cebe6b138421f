"""Shared numerical kernels.

Double-exponential quadrature on ``[0, inf)`` and finite intervals, truncated
power-series algebra, Gil-Pelaez inversion of characteristic functions, and
scrambled low-discrepancy point sets.

All integrators accept *batched* integrands: ``f(t)`` receives a 1-D array of
nodes of shape ``(K,)`` and may return an array of shape ``(..., K)``.  The
quadrature then runs on every leading element at once and converges only when
all of them have converged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.special import expit
from scipy.stats import qmc

from .errors import InversionError, QuadratureError

__all__ = [
    "QuadratureResult",
    "SeriesCoeffs",
    "TabulatedCDF",
    "integrate_semiline",
    "integrate_interval",
    "integrate_line",
    "series_product",
    "exp_series",
    "invert_cf_to_cdf",
    "sobol_uniforms",
    "kolmogorov_distance",
]

_EPS = np.finfo(float).eps

# Function evaluation and inversion default tolerances.
DEFAULT_REL_TOL = 1e-10
INVERSION_REL_TOL = 1e-8
# Monotonicity repairs above this size mean the inversion itself failed.
MAX_CDF_REPAIR = 1e-4


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float | np.ndarray
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be >= 0")
        if self.evaluations < 1:
            raise ValueError("evaluations must be >= 1")


@dataclass(frozen=True)
class SeriesCoeffs:
    """Taylor coefficients ``c_0..c_K`` around ``t = 0``.

    ``coefficients`` may carry leading batch axes; the last axis is the
    power of ``t``.
    """

    coefficients: np.ndarray
    radius_hint: float = math.inf

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.ndim == 0 or c.shape[-1] < 1:
            raise ValueError("series needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("series coefficients must be finite")
        if not self.radius_hint > 0:
            raise ValueError("radius_hint must be positive")
        object.__setattr__(self, "coefficients", c)

    @property
    def order(self):
        return self.coefficients.shape[-1] - 1

    def __call__(self, t):
        """Evaluate the truncated series (Horner), batched over ``t``."""
        t = np.asarray(t)
        c = self.coefficients
        out = np.zeros(c.shape[:-1] + t.shape, dtype=np.result_type(c, t))
        for k in range(c.shape[-1] - 1, -1, -1):
            out = out * t + c[..., k, None] if c.ndim > 1 else out * t + c[k]
        return out


@dataclass(frozen=True)
class TabulatedCDF:
    """CDF of a real law tabulated on an increasing grid.

    ``atom_at_zero`` is the probability mass sitting exactly at ``x = 0``
    (for a log-Barnes-beta variable, ``P[beta = 1]``); it is not part of
    ``cdf``, which describes the continuous remainder scaled to its own mass.
    """

    grid: np.ndarray
    cdf: np.ndarray
    atom_at_zero: float = 0.0
    max_repair: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        c = np.asarray(self.cdf, dtype=float)
        if g.ndim != 1 or g.shape != c.shape or g.size < 2:
            raise ValueError("grid and cdf must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.diff(c) < 0) or c[0] < 0 or c[-1] > 1:
            raise ValueError("cdf must be nondecreasing within [0, 1]")
        if not 0 <= self.atom_at_zero <= 1:
            raise ValueError("atom_at_zero must lie in [0, 1]")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "cdf", c)

    def quantile(self, u):
        """Inverse CDF by linear interpolation, clipped to the grid."""
        c, idx = np.unique(self.cdf, return_index=True)
        g = self.grid[idx]
        return np.interp(u, c, g)


# --------------------------------------------------------------------------
# double-exponential quadrature
# --------------------------------------------------------------------------

_U_MAX = 4.0
_H0 = 0.5
_MIN_LEVEL = 3


@lru_cache(maxsize=64)
def _de_level_nodes(kind, level):
    """Nodes ``u`` (in the DE variable) that are new at ``level``."""
    h = _H0 / 2**level
    n = int(_U_MAX / h)
    k = np.arange(-n, n + 1)
    if level > 0:
        k = k[k % 2 != 0]
    return k * h


def _tanh_sinh_map(u, lo, hi):
    v = 0.5 * math.pi * np.sinh(u)
    width = hi - lo
    # expit keeps both ends free of cancellation
    p = expit(2 * v)
    q = expit(-2 * v)
    t = lo + width * p
    w = width * 2 * p * q * 0.5 * math.pi * np.cosh(u)
    return t, w


def _exp_sinh_map(u, lo):
    e = np.exp(0.5 * math.pi * np.sinh(u))
    return lo + e, 0.5 * math.pi * np.cosh(u) * e


def _eval(f, t, series, t_switch):
    if series is None:
        return np.asarray(f(t))
    mask = t <= t_switch
    if not mask.any():
        return np.asarray(f(t))
    if mask.all():
        return np.asarray(series(t))
    hi = np.asarray(f(t[~mask]))
    lo = np.asarray(series(t[mask]))
    shape = np.broadcast_shapes(hi.shape[:-1], lo.shape[:-1]) + t.shape
    out = np.empty(shape, dtype=np.result_type(hi, lo))
    out[..., ~mask] = hi
    out[..., mask] = lo
    return out


def _de_panel(f, mapping, rel_tol, max_level, series=None, t_switch=0.0):
    """Level-doubling DE rule on one panel.

    Returns ``(value, err, l1, evaluations)``.
    """
    raw = 0.0
    raw_abs = 0.0
    prev = None
    evals = 0
    err = np.inf
    for level in range(max_level + 1):
        u = _de_level_nodes(mapping[0], level)
        t, w = mapping[1](u)
        keep = w > 0
        t, w = t[keep], w[keep]
        vals = _eval(f, t, series, t_switch)
        if np.isnan(vals).any():
            raise ValueError("integrand returned NaN")
        vals = np.where(np.isfinite(w), vals, 0)
        evals += t.size
        raw = raw + np.sum(vals * w, axis=-1)
        raw_abs = raw_abs + np.sum(np.abs(vals) * w, axis=-1)
        h = _H0 / 2**level
        cur = h * raw
        if not np.all(np.isfinite(cur)):
            raise QuadratureError("integral diverged", partial=cur)
        if prev is not None:
            diff = np.abs(cur - prev)
            floor = 64 * _EPS * h * raw_abs
            err = float(np.max(diff))
            if level >= _MIN_LEVEL and np.all(diff <= np.maximum(rel_tol * np.abs(cur), floor)):
                return cur, err, h * raw_abs, evals
        prev = cur
    raise QuadratureError(
        f"no convergence after {max_level} refinements", partial=prev, error_estimate=err
    )


def integrate_semiline(f, split=1.0, rel_tol=DEFAULT_REL_TOL, series=None, t_switch=None, max_level=9):
    """Integrate ``f`` over ``[0, inf)``.

    ``[0, split]`` uses tanh-sinh nodes and ``[split, inf)`` exp-sinh nodes,
    each refined by halving the step until two successive levels agree to
    ``rel_tol`` (or to the round-off floor of the absolute integrand).

    Parameters
    ----------
    f : callable
        Vectorised integrand; receives a 1-D array of nodes.
    split : float
        Boundary between the two panels.
    series : SeriesCoeffs, optional
        Small-``t`` Taylor expansion used instead of ``f`` for
        ``t <= t_switch``, for integrands with a removable 0/0 at the origin.
    t_switch : float, optional
        Defaults to ``2**-6 * series.radius_hint``.

    Returns
    -------
    QuadratureResult

    Raises
    ------
    QuadratureError
        When a panel fails to converge; ``partial`` holds the last estimate.
    ValueError
        When the integrand produces NaN.
    """
    if not split > 0:
        raise ValueError("split must be positive")
    if series is not None and t_switch is None:
        t_switch = 2.0**-6 * min(series.radius_hint, 1e300)
    a, ea, _, na = _de_panel(
        f, ("ts", lambda u: _tanh_sinh_map(u, 0.0, split)), rel_tol, max_level, series, t_switch or 0.0
    )
    b, eb, _, nb = _de_panel(
        f, ("es", lambda u: _exp_sinh_map(u, split)), rel_tol, max_level, series, t_switch or 0.0
    )
    value = a + b
    if np.ndim(value) == 0:
        value = value.item() if hasattr(value, "item") else value
    return QuadratureResult(value, ea + eb, na + nb)


def integrate_interval(f, lo, hi, rel_tol=DEFAULT_REL_TOL, max_level=9):
    """Tanh-sinh quadrature of ``f`` over the finite interval ``[lo, hi]``."""
    if hi == lo:
        return QuadratureResult(0.0, 0.0, 1)
    if hi < lo:
        r = integrate_interval(f, hi, lo, rel_tol, max_level)
        return QuadratureResult(-r.value, r.error_estimate, r.evaluations)
    v, e, _, n = _de_panel(f, ("ts", lambda u: _tanh_sinh_map(u, lo, hi)), rel_tol, max_level)
    if np.ndim(v) == 0:
        v = v.item()
    return QuadratureResult(v, e, n)


def integrate_line(f, center=0.0, split=1.0, rel_tol=DEFAULT_REL_TOL):
    """Integrate over the whole real line as two semilines around ``center``."""
    right = integrate_semiline(lambda s: f(center + s), split, rel_tol)
    left = integrate_semiline(lambda s: f(center - s), split, rel_tol)
    return QuadratureResult(
        right.value + left.value,
        right.error_estimate + left.error_estimate,
        right.evaluations + left.evaluations,
    )


# --------------------------------------------------------------------------
# power series
# --------------------------------------------------------------------------


def series_product(factors, K):
    """Cauchy product of truncated series through order ``K``.

    An empty factor list yields the identity series ``1``.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    out = np.zeros(K + 1)
    out[0] = 1.0
    radius = math.inf
    for fac in factors:
        c = fac.coefficients
        if c.shape[-1] < K + 1:
            raise ValueError("factor shorter than K + 1")
        c = c[..., : K + 1]
        shape = np.broadcast_shapes(out.shape[:-1], c.shape[:-1]) + (K + 1,)
        new = np.zeros(shape, dtype=np.result_type(out, c))
        for k in range(K + 1):
            # new_k = sum_j out_j c_{k-j}
            new[..., k] = np.sum(out[..., : k + 1] * c[..., k::-1], axis=-1)
        out = new
        radius = min(radius, fac.radius_hint)
    return SeriesCoeffs(out, radius)


def exp_series(c, K):
    """Series of ``exp(c t)`` through order ``K`` (``c`` may be an array)."""
    c = np.asarray(c)
    k = np.arange(K + 1)
    fact = np.array([math.factorial(i) for i in k], dtype=float)
    return SeriesCoeffs(c[..., None] ** k / fact)


# --------------------------------------------------------------------------
# characteristic function inversion
# --------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _truncation_point(phi, damping, tail_tol, u_budget):
    u = 0.25
    history = []
    while True:
        mod = float(abs(phi(np.array([u]))[0])) * math.exp(-0.5 * (damping * u) ** 2)
        history.append((u, mod))
        if mod <= tail_tol:
            return u, False, history
        if u >= u_budget:
            return u, True, history
        u = min(2 * u, u_budget)


def invert_cf_to_cdf(
    phi,
    grid,
    damping=0.0,
    rel_tol=INVERSION_REL_TOL,
    atom_at_zero=0.0,
    u_budget=4096.0,
    center=None,
):
    """Tabulate a CDF from its characteristic function (Gil-Pelaez).

    ``F(x) = 1/2 - (1/pi) int_0^inf Im(exp(-iux) phi(u)) / u du``.

    ``damping`` is the standard deviation of a Gaussian kernel convolved
    with the law before inversion; use it for lattice laws whose
    characteristic function does not decay.  When ``|phi|`` decays but has
    not reached ``rel_tol`` at ``u_budget``, the remaining tail is
    approximated by two integrations by parts.

    Raises
    ------
    InversionError
        If ``|phi|`` shows no decay within ``u_budget`` or the monotone
        repair moves any value by more than ``MAX_CDF_REPAIR``.
    """
    grid = np.asarray(grid, dtype=float)
    phi0 = complex(np.asarray(phi(np.array([0.0])))[0])
    if abs(phi0 - 1) > 1e-8:
        raise InversionError("phi(0) must equal 1", {"phi0": phi0})

    def phid(u):
        return np.asarray(phi(u)) * np.exp(-0.5 * (damping * u) ** 2)

    U, truncated, history = _truncation_point(phi, damping, rel_tol * 1e-4, u_budget)
    if truncated:
        first = history[0][1]
        last = history[-1][1]
        if last > 1e-3 * max(first, 1e-300):
            raise InversionError(
                "characteristic function does not decay within the truncation budget",
                {"u_budget": u_budget, "modulus_trace": history},
            )
    if center is None:
        d = 1e-5
        center = float(np.imag(phid(np.array([d]))[0]) / d)
        if not np.isfinite(center):
            center = 0.5 * (grid[0] + grid[-1])
    omega = float(np.max(np.abs(grid - center))) + 1.0
    width = min(U / 64, 8.0 / omega)
    n_panels = int(math.ceil(U / width))
    edges = np.linspace(0.0, U, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    u = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    chi = phid(u) * np.exp(-1j * u * center)
    shifted = grid - center
    integral = np.empty(grid.size)
    for start in range(0, grid.size, 256):
        xs = shifted[start : start + 256, None]
        integrand = np.imag(np.exp(-1j * u[None, :] * xs) * chi[None, :]) / u[None, :]
        integral[start : start + 256] = integrand @ wts
    unresolved = 0
    if truncated:
        # int_U^inf e^{-iux} g(u) du ~ e^{-iUx}[g/(ix) + g'/(ix)^2], g = phi/u
        du = 1e-3 * U
        g0 = phid(np.array([U]))[0] / U
        g1 = phid(np.array([U + du]))[0] / (U + du)
        gp = (g1 - g0) / du
        ok = np.abs(grid) * U > 64
        unresolved = int(np.count_nonzero(~ok))
        ix = 1j * np.where(ok, grid, 1.0)
        tail = np.exp(-1j * U * grid) * (g0 / ix + gp / ix**2)
        integral += np.where(ok, np.imag(tail), 0.0)
    raw = 0.5 - integral / math.pi
    clipped = np.clip(raw, 0.0, 1.0)
    repaired = isotonic_regression(clipped).x
    max_repair = float(np.max(np.abs(repaired - raw)))
    diagnostics = {
        "u_max": U,
        "tail_corrected": truncated,
        "nodes": int(u.size),
        "center": center,
        "max_repair": max_repair,
        "tail_unresolved_points": unresolved,
    }
    if max_repair > MAX_CDF_REPAIR:
        raise InversionError("monotone repair too large; inversion failed", diagnostics)
    repaired = np.clip(repaired, 0.0, 1.0)
    return TabulatedCDF(grid, repaired, atom_at_zero, max_repair, diagnostics)


# --------------------------------------------------------------------------
# quasi-random points and distances
# --------------------------------------------------------------------------


def as_seed_sequence(seed):
    """Accept an int, ``None`` or an existing ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def sobol_uniforms(n, d, seed):
    """``n`` scrambled Sobol points in ``(0, 1)^d``.

    ``n`` is rounded up to a power of two so the balance properties hold.
    The scrambling is fully determined by ``seed``.
    """
    m = max(0, math.ceil(math.log2(max(n, 1))))
    engine = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(seed))
    pts = engine.random_base2(m)
    # scrambled points are never exactly 0 but guard the log/inverse maps
    return np.clip(pts, 1e-300, 1 - _EPS / 2)


def kolmogorov_distance(x, y):
    """Two-sample Kolmogorov-Smirnov statistic."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    allv = np.concatenate([x, y])
    fx = np.searchsorted(x, allv, side="right") / x.size
    fy = np.searchsorted(y, allv, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))
