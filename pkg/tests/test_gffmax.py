import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gamma as G

from barnesgff.errors import ContractError, DomainError
from barnesgff.gffmax import (
    GFFConfig,
    compare_to_conjecture,
    conjecture_samples,
    covariance_factor,
    covariance_matrix,
    exponential_functional,
    fit_drift,
    freezing_demo,
    general_identity_check,
    sample_fields,
    sample_ladder_max,
    sample_max,
    z_moment_bridge,
    z_normalizer,
    z_second_moment_exact,
)
from barnesgff.numerics import kolmogorov_distance
from barnesgff.selbergmorris import SelbergParams, duality_F


def test_config_validation():
    with pytest.raises(DomainError):
        GFFConfig("sphere", 64)
    with pytest.raises(DomainError):
        GFFConfig("interval", 4)
    with pytest.raises(DomainError):
        GFFConfig("circle", 63)
    with pytest.raises(DomainError):
        GFFConfig("interval", 64, lambda1=-1)
    assert GFFConfig("interval", 64).kappa == 1.0
    assert GFFConfig("circle", 64).kappa == math.log(2 * math.pi)


def test_grid():
    g = GFFConfig("interval", 16).grid()
    assert g[0] == 1 / 16 and g[-1] == 1.0
    c = GFFConfig("circle", 16).grid()
    assert c.size == 16 and c[0] == -math.pi and c[-1] < math.pi


def test_covariance_examples():
    N = 64
    C = covariance_matrix(GFFConfig("interval", N))
    assert C[0, -1] == pytest.approx(-2 * math.log(1 - 1 / N), abs=1e-15)
    # the grid excludes x = 0, so |u - v| = 1 is approached by the corner entry
    assert covariance_matrix(GFFConfig("interval", 1024))[0, -1] == pytest.approx(0.0, abs=2.1e-3)
    assert np.allclose(np.diag(C), 2 * (1 - math.log(1 / N)), rtol=0, atol=1e-13)
    Cc = covariance_matrix(GFFConfig("circle", N))
    assert Cc[0, N // 2] == pytest.approx(-2 * math.log(2), abs=1e-13)
    kappa = 2.5
    Ck = covariance_matrix(GFFConfig("circle", N, kappa))
    assert np.allclose(np.diag(Ck), 2 * (kappa - math.log(2 * math.pi / N)), atol=1e-13)


@pytest.mark.parametrize("domain", ["interval", "circle"])
@pytest.mark.parametrize("N", [8, 64, 256, 1024])
def test_covariance_symmetric_psd(domain, N):
    cfg = GFFConfig(domain, N)
    C = covariance_matrix(cfg)
    assert np.array_equal(C, C.T)
    _, info = covariance_factor(cfg)
    assert info["min_eigenvalue"] >= -1e-10 * info["trace"]


def test_circle_covariance_below_threshold_refused():
    with pytest.raises(DomainError):
        covariance_matrix(GFFConfig("circle", 64, kappa=0.0))


def test_empirical_covariance():
    cfg = GFFConfig("interval", 64)
    V = sample_fields(cfg, 10_000, seed=1)
    C = covariance_matrix(cfg)
    d = np.sqrt(np.diag(C))
    target = C / np.outer(d, d)
    emp = np.corrcoef(V, rowvar=False)
    assert np.max(np.abs(emp - target)) <= 6 / math.sqrt(10_000)


def test_sample_fields_thread_independent():
    a = sample_fields(GFFConfig("circle", 32, threads=1), 600, seed=3)
    b = sample_fields(GFFConfig("circle", 32, threads=3), 600, seed=3)
    assert np.array_equal(a, b)


def test_max_bracket_and_monotone():
    means = {}
    for N in (64, 128, 256):
        means[N] = sample_max(GFFConfig("interval", N), 1000, seed=N).samples.mean()
    ln = math.log(64)
    assert 2 * ln - 3 * math.log(ln) <= means[64] <= 2 * ln
    assert means[64] < means[128] < means[256]


def test_potential_lowers_max():
    base = sample_max(GFFConfig("interval", 128), 500, seed=7).samples
    pot = sample_max(GFFConfig("interval", 128, lambda1=1, lambda2=1), 500, seed=7).samples
    # same fields, pointwise smaller values
    assert np.all(pot <= base)
    assert pot.mean() < base.mean()


def test_circle_rotation_invariance():
    cfg = GFFConfig("circle", 64)
    C = covariance_matrix(cfg)
    # covariance on a grid rotated by an arbitrary angle is the same matrix
    psi = cfg.grid() + 0.123
    d = np.abs(np.exp(1j * psi[:, None]) - np.exp(1j * psi[None, :]))
    off = ~np.eye(64, dtype=bool)
    assert np.allclose(-2 * np.log(d[off]), C[off], atol=1e-12)
    n = 2000
    a = sample_fields(cfg, n, seed=1).max(axis=1)
    b = np.roll(sample_fields(cfg, n, seed=2), 17, axis=1).max(axis=1)
    # same-law two-sample KS bound at the 99% level
    assert kolmogorov_distance(a, b) <= 1.63 * math.sqrt(2 / n)


def test_ladder_marginals_match_direct():
    cfg = GFFConfig("interval", 64)
    lad = sample_ladder_max(cfg, (32, 64, 128), 2000, seed=4)
    direct = sample_max(cfg.with_N(128), 2000, seed=5).samples
    assert kolmogorov_distance(lad[128], direct) <= 1.36 * math.sqrt(2 / 2000)
    assert set(lad) == {32, 64, 128}


def test_exponential_functional():
    cfg = GFFConfig("interval", 64, beta=1e-300)
    z = exponential_functional(cfg, 3, seed=0)
    assert np.all(z == 64)
    fields = np.zeros((1, 64))
    assert exponential_functional(GFFConfig("interval", 64, beta=0.5), fields=fields)[0] == 64


@given(st.integers(0, 31), st.floats(0.0, 3.0), st.floats(0.1, 2.0))
def test_z_monotone_in_field(i, bump, beta):
    cfg = GFFConfig("circle", 32, alpha=0.5, beta=beta)
    rng = np.random.default_rng(i)
    V = rng.standard_normal((1, 32))
    W = V.copy()
    W[0, i] += bump
    assert exponential_functional(cfg, fields=W)[0] >= exponential_functional(cfg, fields=V)[0]


def test_z_mean_normalisation():
    for N in (128, 256, 512):
        cfg = GFFConfig("interval", N, beta=0.5)
        z = exponential_functional(cfg, 2000, seed=N)
        assert abs(z.mean() / z_normalizer(cfg) - 1) <= 0.10


def test_z_second_moment_bridge():
    rep = z_moment_bridge(n_runs=200)
    target = rep["target"]
    assert target == pytest.approx(4.5, abs=1e-12)
    gaps = [r["gap"] for r in rep["rows"]]
    assert gaps[0] > gaps[1] > gaps[2]
    assert rep["verdict"] == "PASS"
    assert abs(rep["rows"][-1]["exact"] - target) < abs(rep["rows"][0]["exact"] - target)
    assert z_second_moment_exact(GFFConfig("interval", 128, beta=1 / math.sqrt(3))) > 1


def test_general_identity():
    assert general_identity_check(1.0, -1.0, 1.0) <= 1e-8
    assert general_identity_check(2.0, -0.5, 3.0) <= 1e-8
    # q -> 0^-: the integral tends to 1
    assert general_identity_check(1.0, -1e-3, 1.0) <= 1e-8
    with pytest.raises(DomainError):
        general_identity_check(1.0, 0.5, 1.0)


@given(st.floats(0.3, 3.0), st.floats(-3.0, -0.01), st.floats(0.05, 20.0))
def test_general_identity_random(beta, q, X):
    exact = X ** (q / beta) * G(1 - q / beta)
    assert general_identity_check(beta, q, X) <= 1e-8 * max(1.0, exact)


def test_fit_drift():
    Ns = np.array([64, 128, 256, 512])
    means = 2 * np.log(Ns) - 1.5 * np.log(np.log(Ns)) + 0.3
    c1, c2, c0 = fit_drift(Ns, means)
    assert abs(c1 - 2) < 1e-9 and abs(c2 + 1.5) < 1e-8 and abs(c0 - 0.3) < 1e-8
    with pytest.raises(ContractError):
        fit_drift([64, 128, 256], [1, 2, 3])


def test_conjecture_sampler_self_ks_and_circle_mellin():
    n = 20000
    cfg = GFFConfig("interval", 64)
    a = conjecture_samples(cfg, n, seed=1)
    b = conjecture_samples(cfg, n, seed=2)
    assert kolmogorov_distance(a, b) <= 1.36 * math.sqrt(2 / n)
    c = conjecture_samples(GFFConfig("circle", 64), n, seed=3)
    v = np.exp(0.3 * c)
    assert abs(v.mean() - G(0.7) ** 2) <= 4 * v.std() / math.sqrt(n)


def test_compare_refuses_few_runs():
    with pytest.raises(ContractError):
        compare_to_conjecture(GFFConfig("interval", 64), n_runs=100)


def test_compare_deterministic_and_structured():
    cfg = GFFConfig("circle", 64, seed=5)
    kw = dict(n_runs=500, ladder=(16, 32, 64, 128), n_conjecture=20000)
    r1 = compare_to_conjecture(cfg, **kw)
    r2 = compare_to_conjecture(cfg, **kw)
    assert r1.comparison == r2.comparison
    assert np.array_equal(r1.samples, r2.samples)
    comp = r1.comparison
    assert comp["verdict"] in ("PASS", "FAIL")
    assert all(0 <= row["ks"] <= 1 for row in comp["ladder"])
    assert r1.samples.size == 500 and len(r1.drift_fit) == 3
    assert comp["conjecture_self_ks"] <= comp["self_ks_bound"]
    assert abs(np.median(r1.centered_samples)) < 1e-12


def test_freezing_demo():
    out = freezing_demo([0.3, 0.5, 0.7, 0.9, 1.0], 0.2, 0.1, 0.2)
    assert out["verdict"] == "PASS"
    assert all(r["residual"] <= 1e-8 for r in out["rows"])
    frozen = duality_F(SelbergParams(2.0, 0.1, 0.2), 0.2, beta=1.0).F.real
    assert out["frozen_value"] == frozen
    assert np.isfinite(out["max_slope"]) and out["max_slope"] < 10
    with pytest.raises(DomainError):
        freezing_demo([0.5, 1.5], 0.1)
