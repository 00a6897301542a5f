"""Distribution specs, exact moments, variate streams, and E[g(.)]."""

import math

import numpy as np
import pytest

from ehsim.rate import Linear, Log2, LogE, ShannonHalfLog
from ehsim.stochastic import (
    Deterministic,
    DiscretePmf,
    Erlang,
    Exponential,
    HyperExponential,
    SampleStream,
    TruncatedPoisson,
    Uniform,
    discrete_support,
    dist_mean,
    dist_variance,
    expected_g,
    fit_truncated_poisson,
    has_zero_atom,
    hyperexp_recipe,
    scaled_to_mean,
)

ALL_SPECS = [
    Exponential(2.5),
    Uniform(0.0, 2.0),
    Uniform(0.5, 3.0),
    Erlang(5, 10.0),
    Erlang(1, 1.0),
    HyperExponential((0.5, 2.0), (0.25, 0.75)),
    hyperexp_recipe(1.0),
    TruncatedPoisson(0.8, 5),
    DiscretePmf((0.0, 1.0, 2.0), (0.5, 0.35, 0.15)),
    Deterministic(0.3),
]


def test_exact_means():
    assert dist_mean(Exponential(2.5)) == 2.5
    assert dist_mean(Uniform(0.0, 2.0)) == 1.0
    assert dist_mean(Erlang(5, 10.0)) == 10.0
    assert dist_mean(HyperExponential((1.0, 3.0), (0.5, 0.5))) == 2.0
    assert dist_mean(Deterministic(0.3)) == 0.3
    assert dist_mean(DiscretePmf((0.0, 2.0), (0.25, 0.75))) == 1.5
    # Truncated Poisson mean is sum k p(k) over the renormalized pmf.
    tp = TruncatedPoisson(0.8, 5)
    vals, probs = discrete_support(tp)
    assert dist_mean(tp) == pytest.approx(float(np.dot(vals, probs)), abs=0)


def test_exact_variances():
    assert dist_variance(Exponential(2.5)) == 2.5**2
    assert dist_variance(Uniform(0.0, 2.0)) == pytest.approx(4.0 / 12.0)
    assert dist_variance(Erlang(5, 10.0)) == pytest.approx(20.0)
    assert dist_variance(Deterministic(0.3)) == 0.0
    hx = HyperExponential((1.0, 3.0), (0.5, 0.5))
    # E[T^2] for a mixture of exponentials is sum p 2 m^2.
    assert dist_variance(hx) == pytest.approx(2 * (0.5 * 1 + 0.5 * 9) - 4.0)


def test_validation_errors():
    with pytest.raises(ValueError):
        Exponential(0.0)
    with pytest.raises(ValueError):
        Uniform(2.0, 1.0)
    with pytest.raises(ValueError):
        Erlang(0, 1.0)
    with pytest.raises(ValueError):
        HyperExponential((1.0,), (0.5,))  # probs must sum to 1
    with pytest.raises(ValueError):
        DiscretePmf((0.0, 1.0), (0.7, 0.4))
    with pytest.raises(ValueError):
        DiscretePmf((-1.0, 1.0), (0.5, 0.5))
    with pytest.raises(ValueError):
        TruncatedPoisson(0.5, 0)
    with pytest.raises(ValueError):
        Deterministic(-0.1)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
def test_sampled_moments_match_exact(spec):
    n = 200_000
    xs = SampleStream(spec, seed=42, substream=7).sample_n(n)
    assert xs.shape == (n,)
    assert np.all(xs >= 0.0)
    mu, var = dist_mean(spec), dist_variance(spec)
    se = math.sqrt(max(var, 1e-12) / n)
    assert abs(float(xs.mean()) - mu) < 5 * se + 1e-9


def test_sample_stream_determinism_and_independence():
    spec = Erlang(3, 2.0)
    a = SampleStream(spec, seed=11, substream=(4, 2)).sample_n(1000)
    b = SampleStream(spec, seed=11, substream=(4, 2)).sample_n(1000)
    c = SampleStream(spec, seed=11, substream=(4, 3)).sample_n(1000)
    d = SampleStream(spec, seed=12, substream=(4, 2)).sample_n(1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_sample_stream_reset_replays():
    s = SampleStream(Exponential(1.0), seed=5, substream=1)
    first = s.sample_n(100)
    s.reset()
    assert np.array_equal(first, s.sample_n(100))


def test_truncated_poisson_pmf_normalized():
    vals, probs = discrete_support(TruncatedPoisson(0.8, 5))
    assert np.array_equal(vals, np.arange(6.0))
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    # Renormalized Poisson ratios survive truncation: p(k+1)/p(k) = lam/(k+1)
    for k in range(5):
        assert probs[k + 1] / probs[k] == pytest.approx(0.8 / (k + 1), rel=1e-9)


@pytest.mark.parametrize("target", [0.3, 0.7, 0.95, 1.0, 3.0])
def test_fit_truncated_poisson_hits_mean(target):
    spec = fit_truncated_poisson(target, 5)
    assert isinstance(spec, TruncatedPoisson)
    assert dist_mean(spec) == pytest.approx(target, abs=1e-9)


def test_fit_truncated_poisson_rejects_unreachable_mean():
    # The truncated mean lives strictly inside (0, cutoff).
    with pytest.raises(ValueError):
        fit_truncated_poisson(5.0, 5)
    with pytest.raises(ValueError):
        fit_truncated_poisson(0.0, 5)


def test_hyperexp_recipe_mean_exact():
    for mean in (0.3, 1.0, 8.0):
        spec = hyperexp_recipe(mean)
        assert len(spec.means) == 5
        assert sum(p * m for p, m in zip(spec.probs, spec.means)) == (
            pytest.approx(mean, rel=1e-12)
        )
        assert dist_mean(spec) == pytest.approx(mean, rel=1e-12)


def test_has_zero_atom():
    assert has_zero_atom(DiscretePmf((0.0, 1.0), (0.5, 0.5)))
    assert has_zero_atom(TruncatedPoisson(0.7, 5))
    assert has_zero_atom(Deterministic(0.0))
    assert not has_zero_atom(Deterministic(1.0))
    assert not has_zero_atom(DiscretePmf((1.0, 2.0), (0.5, 0.5)))
    assert not has_zero_atom(Exponential(1.0))  # continuous: no atom
    assert not has_zero_atom(Uniform(0.0, 1.0))


def test_discrete_support_rejects_continuous():
    with pytest.raises(ValueError):
        discrete_support(Exponential(1.0))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(2000)


@pytest.mark.parametrize(
    "spec",
    [
        Exponential(10.0),
        Erlang(5, 10.0),
        Uniform(0.0, 2.0),
        hyperexp_recipe(1.0),
    ],
    ids=lambda s: type(s).__name__,
)
@pytest.mark.parametrize(
    "rf",
    [LogE(1.0), Log2(1.0), ShannonHalfLog(2.0), Linear(10.0)],
    ids=lambda r: r.family,
)
def test_expected_g_matches_quadrature_oracle(spec, rf):
    """Cross-check E[g(Y)] against an in-test Gauss-Legendre oracle."""
    from ehsim.rate import g_eval

    if isinstance(spec, Exponential):
        pdf = lambda t: np.exp(-t / spec.mean) / spec.mean
        hi = spec.mean * 60
    elif isinstance(spec, Erlang):
        k, th = spec.stages, spec.mean / spec.stages
        pdf = lambda t: (
            t ** (k - 1) * np.exp(-t / th) / (math.factorial(k - 1) * th**k)
        )
        hi = spec.mean * 30
    elif isinstance(spec, Uniform):
        width = spec.hi - spec.lo
        pdf = lambda t: np.where((t >= spec.lo) & (t <= spec.hi), 1.0 / width, 0.0)
        hi = spec.hi
    else:
        ps = np.asarray(spec.probs)[:, None]
        ms = np.asarray(spec.means)[:, None]
        pdf = lambda t: (ps * np.exp(-t[None, :] / ms) / ms).sum(axis=0)
        hi = max(spec.means) * 60
    ts = 0.5 * hi * (_GL_NODES + 1.0)
    ws = 0.5 * hi * _GL_WEIGHTS
    gs = np.array([g_eval(rf, t) for t in ts])
    oracle = float(np.sum(ws * pdf(ts) * gs))
    assert expected_g(spec, rf) == pytest.approx(oracle, abs=5e-6)


def test_expected_g_discrete_exact():
    from ehsim.rate import g_eval

    spec = DiscretePmf((0.0, 1.0, 3.0), (0.2, 0.5, 0.3))
    rf = LogE(1.0)
    exact = 0.2 * 0 + 0.5 * math.log(2.0) + 0.3 * math.log(4.0)
    assert expected_g(spec, rf) == pytest.approx(exact, abs=1e-12)
    assert g_eval(rf, 1.0) == math.log(2.0)


def test_expected_g_with_fading_pmf():
    # E[g(hY)] for discrete Y: plain double sum, exact.
    fading = DiscretePmf((0.5, 2.0), (0.5, 0.5))
    y = DiscretePmf((1.0,), (1.0,))
    rf = LogE(1.0)
    exact = 0.5 * math.log(1.5) + 0.5 * math.log(3.0)
    assert expected_g(y, rf, fading=fading) == pytest.approx(exact, abs=1e-12)


def test_scaled_to_mean_preserves_shape():
    # Exponential: same family, new mean.
    e = scaled_to_mean(Exponential(2.0), 5.0)
    assert isinstance(e, Exponential) and e.mean == 5.0
    # Uniform: both endpoints scale (shape/CV preserved).
    u = scaled_to_mean(Uniform(0.0, 2.0), 4.0)
    assert isinstance(u, Uniform)
    assert (u.lo, u.hi) == (0.0, 8.0)
    # Erlang keeps its stage count.
    g = scaled_to_mean(Erlang(5, 1.0), 15.0)
    assert isinstance(g, Erlang) and g.stages == 5 and g.mean == 15.0
    # Hyperexponential scales component means, keeps probs.
    hx = scaled_to_mean(hyperexp_recipe(1.0), 8.0)
    assert dist_mean(hx) == pytest.approx(8.0, rel=1e-12)
    assert hx.probs == hyperexp_recipe(1.0).probs
    # DiscretePmf stretches support, keeps probabilities.
    d = scaled_to_mean(DiscretePmf((0.0, 2.0), (0.5, 0.5)), 3.0)
    assert d.probs == (0.5, 0.5)
    assert dist_mean(d) == pytest.approx(3.0, rel=1e-12)
    # Truncated Poisson refits lam, keeping integer support and cutoff.
    tp = scaled_to_mean(TruncatedPoisson(0.7, 5), 0.9)
    assert isinstance(tp, TruncatedPoisson) and tp.cutoff == 5
    assert dist_mean(tp) == pytest.approx(0.9, abs=1e-9)
    # Deterministic becomes the target value.
    dt = scaled_to_mean(Deterministic(0.3), 0.6)
    assert dist_mean(dt) == pytest.approx(0.6, rel=1e-12)


def test_scaled_to_mean_coefficient_of_variation_invariant():
    rng = np.random.default_rng(123)
    for spec in ALL_SPECS:
        mu = dist_mean(spec)
        if mu == 0 or isinstance(spec, TruncatedPoisson):
            continue  # TP refit changes shape by design
        target = float(rng.uniform(0.2, 5.0)) * mu
        scaled = scaled_to_mean(spec, target)
        cv0 = math.sqrt(dist_variance(spec)) / mu
        cv1 = math.sqrt(dist_variance(scaled)) / dist_mean(scaled)
        assert cv1 == pytest.approx(cv0, rel=1e-9, abs=1e-12)
