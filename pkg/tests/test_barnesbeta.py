import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from barnesgff.barnesbeta import (
    BarnesBetaSpec,
    RatioSpec,
    Regime,
    atom_mass,
    composition_residual,
    factorization_partial_product,
    functional_equation_residual,
    lemma_identity_residuals,
    log_eta,
    log_eta_lk,
    log_eta_ratio,
    moment,
    s_operator,
    sample,
    sample_ratio,
    sampler_path,
    scaling_residual,
    stieltjes_determinate,
    write_samples,
)
from barnesgff.errors import ContractError, DomainError, PoleError
from barnesgff.multigamma import MultiGammaParams, log_multi_gamma, log_multi_gamma_extended

B22 = BarnesBetaSpec(2, 2, (1.0, 3.0), (2.0, 1.0, 1.0))
B21 = BarnesBetaSpec(2, 1, (1.0, 2.0), (3.0, 1.0))
B12 = BarnesBetaSpec(1, 2, (1.0,), (0.5, 1 / 3, 0.75))

# 100-digit independent values of log eta
ORACLE = [
    (B22, 0.5, -0.10698060966660401),
    (B22, 1 + 1j, -0.21843473706714495 - 0.14107158225527177j),
    (B21, -1.5, -0.19579719635341839),
    (B21, 0.7, 0.30745993781156878),
    (B12, 1.0, -0.27443684570176029),
    (B12, -0.25, 0.31548680110166984),
]


@pytest.mark.parametrize("spec,q,expected", ORACLE)
def test_log_eta_oracle(spec, q, expected):
    assert abs(complex(log_eta(spec, q)) - expected) <= 1e-11


def test_spec_validation_and_regime():
    assert B22.regime is Regime.CRITICAL
    assert B21.regime is Regime.SUPER
    assert B12.regime is Regime.SUB
    with pytest.raises(DomainError):
        BarnesBetaSpec(3, 1, (1, 1, 1), (1, 1))
    with pytest.raises(DomainError):
        BarnesBetaSpec(1, 1, (1,), (1, 0))
    with pytest.raises(DomainError):
        BarnesBetaSpec(1, 1, (1,), (1,))


def test_s_operator_examples():
    h = lambda x: x**2  # noqa: E731
    assert s_operator(h, 0.3, (1.0, 2.0)) == h(1.3) - h(3.3)
    v = s_operator(np.exp, 0.0, (0.0, math.log(2), math.log(3)))
    assert abs(v - 2.0) <= 1e-14
    for b in [(1.0, 2.0), (0.5, 1, 2, 3)]:
        assert s_operator(lambda x: 7.0, 0.1, b) == 0


def test_s_operator_refuses_large_n():
    with pytest.raises(DomainError):
        s_operator(np.exp, 0.0, tuple([1.0] * 22))


def test_log_eta_zero_is_exact():
    for spec in (B22, B21, B12, BarnesBetaSpec(0, 1, (), (1, 1))):
        assert log_eta(spec, 0) == 0


def test_log_eta_matches_gamma_products():
    g = MultiGammaParams(2, B22.a)
    lg = lambda w: complex(log_multi_gamma(g, w))  # noqa: E731
    b0, b1, b2 = B22.b
    for q in [0.5, 1.7, 0.3 + 2j]:
        direct = (
            lg(q + b0) - lg(q + b0 + b1) - lg(q + b0 + b2) + lg(q + b0 + b1 + b2)
            - lg(b0) + lg(b0 + b1) + lg(b0 + b2) - lg(b0 + b1 + b2)
        )
        assert abs(complex(log_eta(B22, q)) - direct) <= 1e-10
    g = MultiGammaParams(2, B21.a)
    lg = lambda w: complex(log_multi_gamma_extended(g, w))  # noqa: E731
    b0, b1 = B21.b
    for q in [0.5, -2.0]:
        direct = lg(q + b0) - lg(q + b0 + b1) - lg(b0) + lg(b0 + b1)
        assert abs(complex(log_eta(B21, q)) - direct) <= 1e-10


def test_log_eta_forbidden_ray():
    with pytest.raises(PoleError):
        log_eta(B22, -2.0)
    with pytest.raises(PoleError):
        log_eta(B22, -5.5)


@pytest.mark.parametrize(
    "spec,qs,tol",
    [
        (BarnesBetaSpec(1, 1, (1.0,), (1.0, 1.0)), [1.0], 1e-8),
        (BarnesBetaSpec(2, 1, (1.0, 2.0), (1.0, 1.0)), [-0.5, 1.0, 2 + 1j], 1e-7),
        (B12, [1.0, -0.25, 0.5 - 1j], 1e-8),
        (B22, [0.5, 3.0, 1 + 1j], 1e-8),
    ],
)
def test_lk_matches_gamma(spec, qs, tol):
    assert log_eta_lk(spec, 0) == 0
    for q in qs:
        assert abs(log_eta_lk(spec, q) - log_eta(spec, q)) <= tol


@st.composite
def specs(draw, regimes=("SUB", "CRITICAL", "SUPER")):
    regime = draw(st.sampled_from(regimes))
    M = draw(st.integers(1, 3))
    N = {"SUB": M + 1, "CRITICAL": M, "SUPER": M - 1}[regime]
    if N > 3:
        M, N = M - 1, N - 1
    pos = st.floats(0.3, 3.0)
    a = tuple(draw(pos) for _ in range(M))
    b = tuple(draw(pos) for _ in range(N + 1))
    return BarnesBetaSpec(M, N, a, b)


@given(specs(), st.floats(-0.9, 3.0), st.floats(-2, 2))
def test_lk_equivalence_random(spec, x, y):
    q = complex(x * spec.b0, y)
    assert abs(log_eta_lk(spec, q) - log_eta(spec, q)) <= 1e-7


def test_atom_mass_examples():
    assert abs(atom_mass(BarnesBetaSpec(0, 1, (), (1, 1))) - 0.5) <= 1e-12
    assert abs(atom_mass(BarnesBetaSpec(0, 2, (), (1, 1, 1))) - 0.75) <= 1e-12
    masses = [atom_mass(BarnesBetaSpec(1, 2, (1.0,), (b0, 1.0, 2.0))) for b0 in (1, 4, 16)]
    assert masses[0] < masses[1] < masses[2] < 1


def test_atom_mass_contract():
    with pytest.raises(ContractError):
        atom_mass(B22)


def test_moment_examples():
    for k in (1, 2, 3):
        assert abs(moment(B22, k) / math.exp(log_eta(B22, k).real) - 1) <= 1e-9
    assert moment(B22, 0) == 1
    assert abs(moment(B21, -2) / math.exp(log_eta(B21, -2).real) - 1) <= 1e-9
    with pytest.raises(DomainError):
        moment(B21, -3)
    with pytest.raises(ContractError):
        moment(BarnesBetaSpec(1, 1, (2.0,), (1, 1)), 1)


def test_stieltjes():
    assert stieltjes_determinate(BarnesBetaSpec(1, 0, (1.0,), (0.4,)))
    assert not stieltjes_determinate(BarnesBetaSpec(2, 1, (1.0, 1.0), (1.0, 3.0)))
    assert stieltjes_determinate(BarnesBetaSpec(2, 1, (1.0, 1.0), (1.0, 2.0)))
    assert stieltjes_determinate(BarnesBetaSpec(3, 2, (0.1, 0.3, 0.7), (1.0, 0.3, 0.14)))
    with pytest.raises(ContractError):
        stieltjes_determinate(B22)


@given(specs(), st.floats(-0.5, 3.0), st.floats(-1, 1))
def test_functional_equation(spec, x, y):
    q = complex(x * spec.b0, y)
    for i in range(spec.M):
        assert functional_equation_residual(spec, q, i).max() <= 1e-8


@given(specs(), st.floats(-0.5, 3.0), st.floats(0.25, 4.0))
def test_scaling_invariance(spec, x, kappa):
    assert scaling_residual(spec, x * spec.b0, kappa) <= 1e-8


@given(specs(), st.floats(0.0, 2.0), st.floats(0.1, 2.0))
def test_composition(spec, q, x):
    assert composition_residual(spec, q, x) <= 1e-9


@given(
    st.lists(st.floats(0.3, 3.0), min_size=1, max_size=3),
    st.floats(-2, 2),
    st.floats(-1, 1),
    st.data(),
)
def test_lemma_identities(a, x, y, data):
    M = len(a)
    b = tuple(data.draw(st.floats(0.3, 3.0)) for _ in range(M))
    r = lemma_identity_residuals(MultiGammaParams(M, tuple(a)), complex(x, y), b)
    assert max(r) <= 1e-10


def test_factorization_barnes_converges():
    spec = BarnesBetaSpec(1, 1, (1.0,), (1.0, 1.5))
    exact = complex(np.exp(log_eta(spec, 0.7)))
    errs = [abs(factorization_partial_product(spec, 0.7, "barnes", T) - exact) for T in (10, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]
    assert factorization_partial_product(spec, 0, "barnes", 10) == 1


def test_factorization_shintani():
    exact = complex(np.exp(log_eta(B22, 0.8)))
    errs = [abs(factorization_partial_product(B22, 0.8, "shintani", T) / exact - 1) for T in (50, 200)]
    assert errs[1] <= 1e-2 and errs[1] < errs[0]


def test_factorization_ratio():
    r = RatioSpec(BarnesBetaSpec(1, 0, (1.0,), (0.25,)), 0.75, sine=True)
    exact = complex(np.exp(log_eta_ratio(r, 0.25)))
    assert abs(exact - math.sqrt(2) / 2) <= 1e-12
    errs = [abs(factorization_partial_product(r, 0.25, "barnes", T) - exact) for T in (10, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]


def _z(x, q, spec_log_eta):
    v = x**q
    return (v.mean() - math.exp(spec_log_eta)) / (v.std() / math.sqrt(len(v)))


@pytest.mark.parametrize(
    "spec",
    [
        BarnesBetaSpec(0, 1, (), (1, 1)),
        B12,
        BarnesBetaSpec(1, 1, (1.0,), (1.0, 1.0)),
        B22,
        B21,
        BarnesBetaSpec(1, 0, (1.0,), (0.25,)),
    ],
    ids=["sub01", "sub12", "crit11", "crit22", "super21", "super10"],
)
def test_sampler_mellin(spec):
    x = sample(spec, 20000, seed=3)
    assert np.all(x > 0)
    if spec.regime is Regime.SUB:
        assert np.all(x <= 1)
    if spec.regime is Regime.CRITICAL:
        assert np.all(x < 1)
    for q in (0.5, 1.0, 1.5):
        assert abs(_z(x, q, log_eta(spec, q).real)) <= 4


def test_sampler_atom_fraction():
    n = 20000
    x = sample(BarnesBetaSpec(0, 1, (), (1, 1)), n, seed=5)
    assert abs(np.mean(x == 1.0) - 0.5) <= 3 / math.sqrt(n)


def test_sampler_log_moments():
    spec = B12
    x = np.log(sample(spec, 40000, seed=11))
    h = 1e-4
    d1 = (log_eta(spec, h) - log_eta(spec, -h)).real / (2 * h)
    d2 = (log_eta(spec, h) - 2 * log_eta(spec, 0) + log_eta(spec, -h)).real / h**2
    n = len(x)
    assert abs(x.mean() - d1) <= 4 * x.std() / math.sqrt(n)
    se_var = math.sqrt(np.mean((x - x.mean()) ** 4) - x.var() ** 2) / math.sqrt(n)
    assert abs(x.var() - d2) <= 4 * se_var


def test_super_levy_path_cross_check():
    x = sample(B21, 20000, seed=4, method="levy")
    for q in (0.5, 1.0):
        assert abs(_z(x, q, log_eta(B21, q).real)) <= 4


def test_sample_empty_and_deterministic():
    assert sample(B22, 0).size == 0
    a = sample(B12, 5000, seed=9, threads=1)
    b = sample(B12, 5000, seed=9, threads=3)
    assert np.array_equal(a, b)
    assert sampler_path(B12) == sampler_path(B12)


def test_ratio_samplers():
    base = BarnesBetaSpec(1, 0, (1.0,), (0.25,))
    r = RatioSpec.sine_choice(base)
    assert sample_ratio(r, 0).size == 0
    x = sample_ratio(r, 40000, seed=2)
    v = x**0.25
    assert abs(v.mean() - math.sqrt(2) / 2) <= 4 * v.std() / math.sqrt(len(v))
    sym = RatioSpec(B21, B21.b0)
    y = np.log(sample_ratio(sym, 4000, seed=1))
    # median standard error for a roughly normal sample
    assert abs(np.median(y)) <= 3 * 1.2533 * y.std() / math.sqrt(len(y))


def test_ratio_spec_validation():
    with pytest.raises(ContractError):
        RatioSpec(B22, 1.0)
    with pytest.raises(DomainError):
        RatioSpec(BarnesBetaSpec(1, 0, (1.0,), (0.25,)), 0.5, sine=True)
    with pytest.raises(DomainError):
        RatioSpec(B21, -1.0)


def test_super_asymptotic_trend():
    # log eta / (q log q) approaches the drift constant, slowly
    rel = []
    for q in (1e2, 1e3, 1e4):
        rel.append(abs(log_eta(B21, q).real / (q * math.log(q)) / B21.drift_constant - 1))
    assert rel[0] > rel[1] > rel[2]


def test_write_samples(tmp_path):
    p = tmp_path / "s.csv"
    side = write_samples(str(p), [0.5, 0.25], {"spec": B12, "seed": 1})
    lines = p.read_text().splitlines()
    assert lines[0] == "index,value" and lines[1] == "0,0.5"
    import json

    meta = json.loads(open(side).read())
    assert meta["count"] == 2 and meta["spec"]["regime"] == "SUB"


def test_lk_near_strip_edge_complex():
    spec = BarnesBetaSpec(2, 3, (1.5, 1.16), (0.43, 1.35, 1.29, 1.71))
    for q in (-0.38 - 1.41j, -0.42 + 4j, -0.425 - 0.2j):
        assert abs(log_eta_lk(spec, q) - log_eta(spec, q)) <= 1e-9
