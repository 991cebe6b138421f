"""Selberg and Morris integral probability distributions.

Both Mellin transforms are written as

    (2 pi tau^{1/tau} / Gamma(1 - 1/tau))^q * core(q | tau, l1, l2)

with ``core`` a product of double gamma ratios for periods ``(1, tau)``.
Keeping ``core`` separate lets the duality function and the tau -> 1 limit
cancel the ``Gamma(1 - 1/tau)`` powers analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincinv, gammaln, loggamma

from .barnesbeta import BarnesBetaSpec, log_eta, sample as bb_sample
from .errors import DomainError, VerificationError
from .multigamma import MultiGammaParams, log_multi_gamma
from .numerics import DEFAULT_REL_TOL, as_seed_sequence, sobol_uniforms

__all__ = [
    "SelbergParams",
    "DistributionComponents",
    "CriticalLaw",
    "selberg_mellin",
    "selberg_moment_formula",
    "selberg_components",
    "sample_selberg",
    "morris_mellin",
    "morris_moment_formula",
    "morris_components",
    "morris_negative_moment",
    "sample_morris",
    "components_mellin",
    "sample_components",
    "involution_residual",
    "duality_F",
    "critical_law",
    "critical_mellin",
    "critical_limit_sequence",
    "selberg_integral_qmc",
    "morris_integral_qmc",
    "verification_report",
]

_LOG_2PI = math.log(2 * math.pi)
QMC_SCRAMBLES = 16


@dataclass(frozen=True)
class SelbergParams:
    tau: float
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self):
        if not self.tau > 1:
            raise DomainError("tau must exceed 1")
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise DomainError("lambda1, lambda2 must be >= 0")
        for name in ("tau", "lambda1", "lambda2"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def to_dict(self):
        return {"tau": self.tau, "lambda1": self.lambda1, "lambda2": self.lambda2}


@dataclass(frozen=True)
class DistributionComponents:
    """Independent product ``c * L * prod X_k^{-1} * prod s Y_k^{-1} [* Y']``.

    ``inverse_bb_factors`` are Barnes beta specs entering through their
    reciprocals; ``frechet_factors`` are ``(a, b_0)`` of ``beta_{1,0}``, also
    inverted, and share the common scale ``frechet_scale``.
    ``unit_factors`` counts degenerate factors replaced by the constant 1.
    ``extra_gamma_factor`` adds an independent ``Y'`` with Mellin
    transform ``Gamma(1 - q)``.
    """

    constant: float
    lognormal_sigma2: float = 0.0
    inverse_bb_factors: tuple = ()
    frechet_factors: tuple = ()
    frechet_scale: float = 1.0
    extra_gamma_factor: bool = False
    unit_factors: int = 0

    def __post_init__(self):
        if not self.constant > 0 or not self.frechet_scale > 0:
            raise DomainError("constants must be positive")
        if self.lognormal_sigma2 < 0:
            raise DomainError("lognormal variance must be >= 0")

    @property
    def strip(self):
        """Upper end of the real Mellin strip."""
        ends = [s.b0 for s in self.inverse_bb_factors] + [b0 for _, b0 in self.frechet_factors]
        if self.extra_gamma_factor:
            ends.append(1.0)
        return min(ends, default=math.inf)

    def to_dict(self):
        return {
            "constant": self.constant,
            "lognormal_sigma2": self.lognormal_sigma2,
            "inverse_bb_factors": [s.to_dict() for s in self.inverse_bb_factors],
            "frechet_factors": [list(f) for f in self.frechet_factors],
            "frechet_scale": self.frechet_scale,
            "extra_gamma_factor": self.extra_gamma_factor,
            "unit_factors": self.unit_factors,
        }


@dataclass(frozen=True)
class CriticalLaw:
    kind: str
    lambda1: float
    lambda2: float
    components: DistributionComponents = field(compare=False)


def _params(tau):
    return MultiGammaParams(2, (1.0, float(tau)))


def _check_strip(p, q):
    q = np.asarray(q, dtype=complex)
    if np.any(q.real >= p.tau):
        raise DomainError(f"Mellin transform needs Re(q) < tau = {p.tau}")
    return q


def _prefactor_log(tau):
    return _LOG_2PI + math.log(tau) / tau - float(gammaln(1 - 1 / tau))


def _gamma_ratio_sum(tau, terms, rel_tol):
    """``sum sign * [logG2(x + c q) - logG2(x)]`` for ``terms = (sign, x, c)``."""

    def f(q):
        q = np.atleast_1d(q)
        args = np.concatenate([x + c * q for _, x, c in terms] + [np.array([x for _, x, _ in terms], dtype=complex)])
        vals = log_multi_gamma(_params(tau), args, rel_tol)
        n = q.size
        out = np.zeros(n, dtype=complex)
        for k, (s, _, _) in enumerate(terms):
            out += s * (vals[k * n : (k + 1) * n] - vals[len(terms) * n + k])
        return out

    return f


def _selberg_core(q, tau, l1, l2, rel_tol=DEFAULT_REL_TOL):
    terms = [
        (1, 1 + tau * (1 + l1), -1),
        (1, 1 + tau * (1 + l2), -1),
        (1, tau, -1),
    ]
    base = 2 + tau * (2 + l1 + l2)
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    part = _gamma_ratio_sum(tau, terms, rel_tol)(q)
    pr = _params(tau)
    last = log_multi_gamma(pr, np.concatenate([base - q, base - 2 * q]), rel_tol)
    return part + last[: q.size] - last[q.size :]


def _morris_core(q, tau, l1, l2, rel_tol=DEFAULT_REL_TOL):
    terms = [
        (1, tau * (l1 + l2 + 1) + 1, -1),
        (1, tau, -1),
        (-1, tau * (1 + l1) + 1, -1),
        (-1, tau * (1 + l2) + 1, -1),
    ]
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    return _gamma_ratio_sum(tau, terms, rel_tol)(q)


def _shape(out, q):
    q = np.asarray(q)
    out = out.reshape(q.shape)
    return out[()] if out.ndim == 0 else out


def log_selberg_mellin(p, q, rel_tol=DEFAULT_REL_TOL):
    q = _check_strip(p, q)
    out = q.ravel() * _prefactor_log(p.tau) + _selberg_core(q.ravel(), p.tau, p.lambda1, p.lambda2, rel_tol)
    return _shape(out, q)


def selberg_mellin(p, q, rel_tol=DEFAULT_REL_TOL):
    """``E[M^q]`` of the Selberg integral distribution, ``Re(q) < tau``."""
    return np.exp(log_selberg_mellin(p, q, rel_tol))


def log_morris_mellin(p, q, rel_tol=DEFAULT_REL_TOL):
    q = _check_strip(p, q)
    out = q.ravel() * _prefactor_log(p.tau) + _morris_core(q.ravel(), p.tau, p.lambda1, p.lambda2, rel_tol)
    return _shape(out, q)


def morris_mellin(p, q, rel_tol=DEFAULT_REL_TOL):
    """``E[M^q]`` of the Morris integral distribution, ``Re(q) < tau``."""
    return np.exp(log_morris_mellin(p, q, rel_tol))


# --------------------------------------------------------------------------
# moment products
# --------------------------------------------------------------------------


def _selberg_product(p, l):
    tau, l1, l2 = p.tau, p.lambda1, p.lambda2
    k = np.arange(l)
    logs = (
        loggamma(1 - (k + 1) / tau)
        - loggamma(1 - 1 / tau)
        + loggamma(1 + l1 - k / tau)
        + loggamma(1 + l2 - k / tau)
        - loggamma(2 + l1 + l2 - (l + k - 1) / tau)
    )
    return float(np.exp(np.sum(logs.real)))


def _morris_product(p, n):
    tau, l1, l2 = p.tau, p.lambda1, p.lambda2
    j = np.arange(n)
    logs = (
        gammaln(1 + l1 + l2 - j / tau)
        + gammaln(1 - (j + 1) / tau)
        - gammaln(1 + l1 - j / tau)
        - gammaln(1 + l2 - j / tau)
        - gammaln(1 - 1 / tau)
    )
    return float(np.exp(n * _LOG_2PI + np.sum(logs)))


def _assert_close(a, b, tol, what):
    if abs(a - b) > tol * max(1.0, abs(b)):
        raise VerificationError(f"{what}: {a} vs {b}", {"product": a, "mellin": complex(b)})


def selberg_moment_formula(p, l, check=True):
    """``E[M^l]`` as the finite gamma product (``l < tau``).

    Cross-checked against ``selberg_mellin(p, l)`` to ``1e-9``.
    """
    if int(l) != l or l < 0:
        raise DomainError("l must be a non-negative integer")
    if l >= p.tau:
        raise DomainError(f"moment of order {l} needs l < tau = {p.tau}")
    l = int(l)
    if l == 0:
        return 1.0
    val = _selberg_product(p, l)
    if check:
        _assert_close(val, complex(selberg_mellin(p, l)).real, 1e-9, "Selberg moment")
    return val


def morris_moment_formula(p, n, check=True):
    """``E[M^n]`` as the finite gamma product of the Morris integral (``n < tau``)."""
    if int(n) != n or n < 0:
        raise DomainError("n must be a non-negative integer")
    if n >= p.tau:
        raise DomainError(f"moment of order {n} needs n < tau = {p.tau}")
    n = int(n)
    if n == 0:
        return 1.0
    val = _morris_product(p, n)
    if check:
        _assert_close(val, complex(morris_mellin(p, n)).real, 1e-9, "Morris moment")
    return val


def morris_negative_moment(p, n, check=True):
    """``E[M^{-n}]`` of the Morris law from its closed product."""
    if int(n) != n or n < 0:
        raise DomainError("n must be a non-negative integer")
    n = int(n)
    if n == 0:
        return 1.0
    tau, l1, l2 = p.tau, p.lambda1, p.lambda2
    j = np.arange(n)
    logs = (
        gammaln(1 + l1 + (j + 1) / tau)
        + gammaln(1 + l2 + (j + 1) / tau)
        + gammaln(1 - 1 / tau)
        - gammaln(1 + l1 + l2 + (j + 1) / tau)
        - gammaln(1 + j / tau)
    )
    val = float(np.exp(-n * _LOG_2PI + np.sum(logs)))
    if check:
        _assert_close(val, complex(morris_mellin(p, -n)).real, 1e-9, "Morris negative moment")
    return val


# --------------------------------------------------------------------------
# decompositions
# --------------------------------------------------------------------------


def _selberg_factors(tau, l1, l2):
    a = (1.0, tau)
    factors = []
    units = 0
    if l1 == l2:
        units = 1
    else:
        # the law is symmetric in (l1, l2); keep b_1 = b_2 > 0
        d = tau * abs(l2 - l1) / 2
        factors.append(BarnesBetaSpec(2, 2, a, (1 + tau + tau * min(l1, l2), d, d)))
    factors.append(BarnesBetaSpec(2, 2, a, (1 + tau + tau * (l1 + l2) / 2, 0.5, tau / 2)))
    h = (1 + tau + tau * l1 + tau * l2) / 2
    factors.append(BarnesBetaSpec(2, 2, a, (1 + tau, h, h)))
    return tuple(factors), units


def selberg_components(p):
    """Product decomposition of the Selberg law.

    ``M = c L X_1 X_2 X_3 Y`` with ``c = 2 pi 2^{-[3(1+tau) + 2 tau (l1+l2)]/tau}
    / Gamma(1 - 1/tau)``, ``log L ~ N(0, 4 log 2 / tau)``, ``X_k`` inverse
    ``beta_{2,2}`` laws and ``Y = tau^{1/tau} beta_{1,0}^{-1}(tau, tau)``.
    ``X_1`` is the unit constant when ``l1 = l2``.
    """
    tau, l1, l2 = p.tau, p.lambda1, p.lambda2
    c = 2 * math.pi * 2 ** (-(3 * (1 + tau) + 2 * tau * (l1 + l2)) / tau) / math.gamma(1 - 1 / tau)
    factors, units = _selberg_factors(tau, l1, l2)
    return DistributionComponents(
        constant=c,
        lognormal_sigma2=4 * math.log(2) / tau,
        inverse_bb_factors=factors,
        frechet_factors=((tau, tau),),
        frechet_scale=tau ** (1 / tau),
        unit_factors=units,
    )


def morris_components(p):
    """Product decomposition of the Morris law.

    ``c beta_{2,2}^{-1}(tau; tau, 1 + tau l1, 1 + tau l2)
    beta_{1,0}^{-1}(tau; tau (l1 + l2 + 1) + 1)`` with
    ``c = 2 pi tau^{1/tau} / Gamma(1 - 1/tau)``; for ``l1 = l2 = 0`` the
    reduced form ``c beta_{1,0}^{-1}(tau, tau)``.
    """
    tau, l1, l2 = p.tau, p.lambda1, p.lambda2
    c = 2 * math.pi * tau ** (1 / tau) / math.gamma(1 - 1 / tau)
    if l1 == 0 and l2 == 0:
        return DistributionComponents(constant=c, frechet_factors=((tau, tau),))
    bb = BarnesBetaSpec(2, 2, (1.0, tau), (tau, 1 + tau * l1, 1 + tau * l2))
    return DistributionComponents(
        constant=c,
        inverse_bb_factors=(bb,),
        frechet_factors=((tau, tau * (l1 + l2 + 1) + 1),),
    )


def _morris_general_components(p):
    """Unreduced Morris decomposition, also at ``l1 = l2 = 0``."""
    tau, l1, l2 = p.tau, p.lambda1, p.lambda2
    c = 2 * math.pi * tau ** (1 / tau) / math.gamma(1 - 1 / tau)
    bb = BarnesBetaSpec(2, 2, (1.0, tau), (tau, 1 + tau * l1, 1 + tau * l2))
    return DistributionComponents(
        constant=c, inverse_bb_factors=(bb,), frechet_factors=((tau, tau * (l1 + l2 + 1) + 1),)
    )


def components_mellin(comp, q, rel_tol=DEFAULT_REL_TOL):
    """Mellin transform of the product as the product of factor transforms."""
    q = np.asarray(q, dtype=complex)
    flat = np.atleast_1d(q).ravel()
    if np.any(flat.real >= comp.strip):
        raise DomainError(f"outside the Mellin strip Re(q) < {comp.strip}")
    out = flat * (math.log(comp.constant) + len(comp.frechet_factors) * math.log(comp.frechet_scale))
    out = out + 0.5 * comp.lognormal_sigma2 * flat**2
    for spec in comp.inverse_bb_factors:
        out = out + log_eta(spec, -flat, rel_tol)
    for a, b0 in comp.frechet_factors:
        # E[beta_{1,0}^{-q}] = a^{-q/a} Gamma((b0 - q)/a) / Gamma(b0/a)
        out = out - flat / a * math.log(a) + loggamma((b0 - flat) / a) - loggamma(b0 / a)
    if comp.extra_gamma_factor:
        out = out + loggamma(1 - flat)
    return _shape(np.exp(out), q)


def sample_components(comp, n, seed=0, threads=1):
    """Independent draws of the product law."""
    n = int(n)
    if n == 0:
        return np.empty(0)
    ss = as_seed_sequence(seed)
    k = len(comp.inverse_bb_factors) + 2
    children = ss.spawn(k)
    rng = np.random.default_rng(children[0])
    logx = np.full(n, math.log(comp.constant))
    if comp.lognormal_sigma2 > 0:
        logx += math.sqrt(comp.lognormal_sigma2) * rng.standard_normal(n)
    for a, b0 in comp.frechet_factors:
        beta = (a * rng.gamma(b0 / a, 1.0, n)) ** (1 / a)
        logx += math.log(comp.frechet_scale) - np.log(beta)
    if comp.extra_gamma_factor:
        # Y' = 1 / Exp(1) has Mellin transform Gamma(1 - q)
        logx -= np.log(rng.exponential(1.0, n))
    for child, spec in zip(children[2:], comp.inverse_bb_factors):
        logx -= np.log(bb_sample(spec, n, child, threads=threads))
    return np.exp(logx)


def sample_selberg(p, n, seed=0, threads=1):
    return sample_components(selberg_components(p), n, seed, threads)


def sample_morris(p, n, seed=0, threads=1):
    return sample_components(morris_components(p), n, seed, threads)


# --------------------------------------------------------------------------
# involution and self-duality
# --------------------------------------------------------------------------


def _core(kind):
    if kind == "selberg":
        return _selberg_core
    if kind == "morris":
        return _morris_core
    raise ValueError(f"unknown kind {kind!r}")


def involution_residual(kind, p, q, rel_tol=DEFAULT_REL_TOL):
    """Relative mismatch of the two sides of the involution identity.

    Left: ``M(q/tau | 1/tau, tau l) (2 pi)^{-q/tau} Gamma(1-tau)^{q/tau}
    Gamma(1 - q/tau)``; right: ``M(q | tau, l) (2 pi)^{-q} Gamma(1-1/tau)^q
    Gamma(1 - q)``.  The gamma powers cancel the prefactors analytically, so
    both sides are formed from the core products.  Needs ``q < 1``.
    """
    tau, l1, l2 = p.tau, p.lambda1, p.lambda2
    q = complex(q)
    if q.real >= 1:
        raise DomainError("involution identity needs Re(q) < 1")
    core = _core(kind)
    lhs = -q * math.log(tau) + core(q / tau, 1 / tau, tau * l1, tau * l2, rel_tol)[0] + loggamma(1 - q / tau)
    rhs = q / tau * math.log(tau) + core(q, tau, l1, l2, rel_tol)[0] + loggamma(1 - q)
    return abs(np.expm1(lhs - rhs))


def _log_F(kind, q, beta, l1, l2, rel_tol):
    tau = 1 / beta**2
    qp = q / beta
    core = _core(kind)
    return qp / tau * math.log(tau) + core(qp, tau, beta * l1, beta * l2, rel_tol)[0] + loggamma(1 - qp)


@dataclass(frozen=True)
class DualityResult:
    F: complex
    F_dual: complex
    residual: float


def duality_F(p, q, beta=None, kind="selberg", rel_tol=DEFAULT_REL_TOL):
    """``F(q | beta, l1, l2)`` and its self-duality residual.

    ``F = M(q/beta | 1/beta^2, beta l1, beta l2) (2 pi)^{-q/beta}
    Gamma(1 - beta^2)^{q/beta} Gamma(1 - q/beta)``; the residual is
    ``|F(q | beta) - F(q | 1/beta)|``.  ``beta`` defaults to ``1/sqrt(tau)``.
    """
    beta = 1 / math.sqrt(p.tau) if beta is None else float(beta)
    if not beta > 0:
        raise DomainError("beta must be positive")
    q = complex(q)
    if q.real >= min(beta, 1 / beta):
        raise DomainError(f"F needs Re(q) < min(beta, 1/beta) = {min(beta, 1 / beta)}")
    f1 = complex(np.exp(_log_F(kind, q, beta, p.lambda1, p.lambda2, rel_tol)))
    f2 = f1 if beta == 1.0 else complex(np.exp(_log_F(kind, q, 1 / beta, p.lambda1, p.lambda2, rel_tol)))
    return DualityResult(f1, f2, abs(f1 - f2))


# --------------------------------------------------------------------------
# critical laws
# --------------------------------------------------------------------------


def critical_law(kind, lambda1=0.0, lambda2=0.0):
    """The ``tau -> 1`` law with the ``Gamma(1 - 1/tau) / 2 pi`` prefactor absorbed."""
    if lambda1 < 0 or lambda2 < 0:
        raise DomainError("lambdas must be >= 0")
    if kind == "selberg":
        factors, units = _selberg_factors(1.0, lambda1, lambda2)
        comp = DistributionComponents(
            constant=2.0 ** (-(6 + 2 * (lambda1 + lambda2))),
            lognormal_sigma2=4 * math.log(2),
            inverse_bb_factors=factors,
            frechet_factors=((1.0, 1.0),),
            unit_factors=units,
        )
    elif kind == "morris":
        if lambda1 != lambda2:
            raise DomainError("critical Morris law needs lambda1 = lambda2")
        alpha = lambda1
        if alpha == 0:
            comp = DistributionComponents(constant=1.0, frechet_factors=((1.0, 1.0),))
        else:
            bb = BarnesBetaSpec(2, 2, (1.0, 1.0), (1.0, 1 + alpha, 1 + alpha))
            comp = DistributionComponents(
                constant=1.0, inverse_bb_factors=(bb,), frechet_factors=((1.0, 2 * alpha + 2),)
            )
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return CriticalLaw(kind, float(lambda1), float(lambda2), comp)


def critical_mellin(law, q, rel_tol=DEFAULT_REL_TOL):
    return components_mellin(law.components, q, rel_tol)


def critical_limit_sequence(kind, lambda1, lambda2, q, taus=(1.1, 1.01, 1.001), rel_tol=DEFAULT_REL_TOL):
    """``(Gamma(1-1/tau)/2pi)^q M(q | tau, ...)`` along ``taus`` decreasing to 1."""
    core = _core(kind)
    q = complex(q)
    return [complex(np.exp(q / t * math.log(t) + core(q, t, lambda1, lambda2, rel_tol)[0])) for t in taus]


# --------------------------------------------------------------------------
# quasi-Monte-Carlo oracles
# --------------------------------------------------------------------------


def _dirichlet(u, alphas):
    g = np.column_stack([gammaincinv(al, u[:, k]) for k, al in enumerate(alphas)])
    g = np.maximum(g, np.finfo(float).tiny)
    s = g.sum(axis=1, keepdims=True)
    d = g / s
    al = np.asarray(alphas, dtype=float)
    logpdf = gammaln(al.sum()) - gammaln(al).sum() + np.sum((al - 1) * np.log(d), axis=1)
    return d, logpdf


def _scrambled_means(estimator, n_points, dim, seed, scrambles):
    per = max(1, n_points // scrambles)
    children = as_seed_sequence(seed).spawn(scrambles)
    vals = []
    for child in children:
        u = sobol_uniforms(per, dim, child)
        vals.append(np.mean(estimator(u)))
    vals = np.asarray(vals)
    est = vals.mean()
    err = vals.std(ddof=1) / math.sqrt(scrambles) if scrambles > 1 else float("nan")
    return est, float(np.abs(err)) if np.isrealobj(vals) else float(
        math.hypot(vals.real.std(ddof=1), vals.imag.std(ddof=1)) / math.sqrt(scrambles)
    )


def selberg_integral_qmc(n, p, samples=2**21, seed=0, scrambles=QMC_SCRAMBLES):
    """Randomised QMC estimate of the ``n``-dimensional Selberg integral.

    The ordered points are drawn from the Dirichlet law of their spacings,
    with exponents matching the boundary and pair singularities, so the
    weight ``n! f / pdf`` stays bounded for ``n = 2``.  Returns
    ``(estimate, stderr)`` from ``scrambles`` independent scramblings.
    """
    if not 1 <= n <= 4:
        raise DomainError("desk-scale oracle supports 1 <= n <= 4")
    if p.tau <= 1:
        raise DomainError("tau must exceed 1")
    l1, l2, tau = p.lambda1, p.lambda2, p.tau
    if n >= 2 and tau <= 2:
        raise DomainError("spacing transform needs tau > 2 for n >= 2")
    alphas = [1 + l1] + [1 - 2 / tau] * (n - 1) + [1 + l2]
    log_nfact = math.lgamma(n + 1)

    def est(u):
        d, logpdf = _dirichlet(u, alphas)
        s = np.cumsum(d[:, :-1], axis=1)
        logf = l1 * np.log(s).sum(axis=1) + l2 * np.log1p(-s).sum(axis=1)
        for i in range(n):
            for j in range(i + 1, n):
                # s_j - s_i from the spacings keeps tiny gaps accurate
                logf -= 2 / tau * np.log(d[:, i + 1 : j + 1].sum(axis=1))
        return np.exp(log_nfact + logf - logpdf)

    if n == 1 and l1 == 0 and l2 == 0:
        return 1.0, 0.0
    return _scrambled_means(est, samples, n + 1, seed, scrambles)


def morris_integral_qmc(n, p, samples=2**21, seed=0, scrambles=QMC_SCRAMBLES):
    """Randomised QMC estimate of the ``n``-dimensional Morris integral.

    The first angle is uniform and the ``n`` circular gaps follow a
    Dirichlet law with exponent ``1 - 2/tau``.  The estimate is complex; its
    imaginary part should vanish within the reported error.
    """
    if not 1 <= n <= 3:
        raise DomainError("desk-scale oracle supports 1 <= n <= 3")
    l1, l2, tau = p.lambda1, p.lambda2, p.tau
    if n >= 2 and tau <= 2:
        raise DomainError("gap transform needs tau > 2 for n >= 2")
    if n == 1 and l1 == 0 and l2 == 0:
        return complex(2 * math.pi), 0.0
    phase = (l1 - l2) / 2
    power = l1 + l2

    def single(theta):
        return np.exp(1j * theta * phase) * np.abs(1 + np.exp(1j * theta)) ** power

    if n == 1:

        def est1(u):
            theta = -math.pi + 2 * math.pi * u[:, 0]
            return 2 * math.pi * single(theta)

        return _scrambled_means(est1, samples, 1, seed, scrambles)
    alphas = [1 - 2 / tau] * n
    log_const = math.lgamma(n) + _LOG_2PI + (n - 1) * _LOG_2PI

    def est(u):
        theta1 = -math.pi + 2 * math.pi * u[:, 0]
        d, logpdf = _dirichlet(u[:, 1:], alphas)
        gaps = 2 * math.pi * d
        pos = np.column_stack([theta1, theta1[:, None] + np.cumsum(gaps[:, :-1], axis=1)])
        pos = np.mod(pos + math.pi, 2 * math.pi) - math.pi
        val = np.ones(theta1.shape, dtype=complex)
        for i in range(n):
            val *= single(pos[:, i])
        logpair = np.zeros(theta1.shape)
        for i in range(n):
            for j in range(i + 1, n):
                # both arcs from the gaps directly; 2 pi - arc cancels badly
                arc = np.minimum(gaps[:, i:j].sum(axis=1), gaps[:, j:].sum(axis=1) + gaps[:, :i].sum(axis=1))
                logpair -= 2 / tau * np.log(2 * np.sin(arc / 2))
        return val * np.exp(log_const + logpair - logpdf)

    return _scrambled_means(est, samples, n + 1, seed, scrambles)


def _num(v):
    v = complex(v)
    if v.imag == 0:
        return v.real
    return {"re": v.real, "im": v.imag}


def verification_report(params, quantity, formula_value, oracle_value, stderr, passed, **extra):
    """JSON-ready verification record."""
    rep = {
        "params": params,
        "quantity": quantity,
        "formula_value": _num(formula_value),
        "oracle_value": _num(oracle_value),
        "stderr": float(stderr),
        "verdict": "PASS" if passed else "FAIL",
    }
    rep.update(extra)
    return rep
