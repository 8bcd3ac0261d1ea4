import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from auglik import augment, likelihood, numcore
from auglik import rng as rngmod
from auglik.datasets import Dataset, generate_synthetic
from auglik.errors import ConfigurationError, ContractError, DivergenceError, IngestionError
from auglik.inference import (
    Checkpoint,
    CyclicalSchedule,
    MlpPosterior,
    PriorSpec,
    TemperingSpec,
    VariationalPosterior,
    classification_metrics,
    elbo_estimate,
    epochs_for_budget,
    expected_update_equivalence_check,
    fit_vi,
    ggmc_step,
    init_state,
    kinetic_temperature,
    kinetic_temperature_groups,
    log_posterior,
    lr_at_epoch,
    predict_bma,
    predictive_probs,
    read_checkpoint,
    run_chain,
    sgld_step,
    train_sgd,
    write_checkpoint,
)
from auglik.inference.posterior import Target
from auglik.inference.toys import GaussianLinear, gaussian_location
from auglik.likelihood import LikelihoodSpec
from auglik.numcore import MlpModel


class StdGaussian(Target):
    """``N(0, I)`` in ``d`` dimensions, written as a prior with no data."""

    def __init__(self, d, tempering=None):
        self.d = d
        self.n_params = d
        self.tempering = TemperingSpec() if tempering is None else tempering

    def log_prior_and_grad(self, w):
        return float(-0.5 * w @ w), -w

    def log_lik_and_grad(self, w, rng=None):
        return 0.0, np.zeros_like(w)


class NanTarget(StdGaussian):
    def __init__(self, d, bad_step):
        super().__init__(d)
        self.calls = 0
        self.bad_step = bad_step

    def log_lik_and_grad(self, w, rng=None):
        self.calls += 1
        g = np.zeros_like(w)
        if self.calls > self.bad_step:
            g[0] = np.nan
        return 0.0, g


def location_data(n=10, seed=0):
    return rngmod.stream(seed, "data").normal(0.7, 1.0, size=n)


def quadratic_fit(f, x0, h=1e-3):
    """Mode and curvature of a 1-D quadratic from three evaluations."""
    a, b, c = f(x0 - h), f(x0), f(x0 + h)
    curv = (a - 2 * b + c) / h**2
    slope = (c - a) / (2 * h)
    return x0 - slope / curv, curv


# -- tempering ------------------------------------------------------------------


def test_tempering_spec_validation():
    with pytest.raises(ContractError):
        TemperingSpec(T=0)
    with pytest.raises(ContractError):
        TemperingSpec(S=0.5)
    with pytest.raises(ContractError):
        TemperingSpec(mode="prior_only")
    assert TemperingSpec(T=0.3).temperature == 0.3
    assert TemperingSpec(T=0.3, mode="likelihood_only", S=4).temperature == 1.0


def test_untempered_log_posterior_is_log_joint():
    train, _ = generate_synthetic("shift_digits", 20, 0, seed=0, dim=6, n_classes=3)
    model = MlpModel((6, 5, 3))
    w = model.init_params(rngmod.stream(0, "init"))
    orbit = augment.cyclic_shift_group(6)
    spec = LikelihoodSpec("prob_avg", "exact_finite")
    prior = PriorSpec.default_for(model)
    lp, _ = prior.log_prob_and_grad(w)
    ll = sum(likelihood.loglik_prob_exact(model, w, x, y, orbit) for x, y in zip(train.inputs, train.labels))
    got = log_posterior(model, w, train, orbit, spec, prior, TemperingSpec())
    assert got == pytest.approx(lp + ll, rel=1e-12)
    half = log_posterior(model, w, train, orbit, spec, prior, TemperingSpec(T=0.5))
    assert half == pytest.approx(2 * (lp + ll), rel=1e-12)
    s3 = log_posterior(model, w, train, orbit, spec, prior, TemperingSpec(mode="likelihood_only", S=3))
    assert s3 == pytest.approx(lp + 3 * ll, rel=1e-12)


def test_prior_default_variance_is_inverse_fan_in():
    model = MlpModel((4, 3, 2))
    var = np.broadcast_to(PriorSpec.default_for(model).variance, (model.n_params,))
    np.testing.assert_allclose(var[:12], 1 / 4)
    np.testing.assert_allclose(var[12:15], 1 / 4)
    np.testing.assert_allclose(var[15:21], 1 / 3)


def test_prior_log_density_matches_scipy():
    w = np.array([0.3, -1.2, 2.0])
    lp, g = PriorSpec(0.5).log_prob_and_grad(w)
    assert lp == pytest.approx(stats.norm(0, math.sqrt(0.5)).logpdf(w).sum(), rel=1e-14)
    np.testing.assert_allclose(g, -w / 0.5)


@pytest.mark.parametrize("T", [0.1, 0.25, 1.0])
def test_conjugate_full_tempering_closed_form(T):
    y = location_data()
    n = y.size
    tgt = gaussian_location(y, tempering=TemperingSpec(T))
    mode, curv = quadratic_fit(lambda v: tgt.log_joint(np.array([v])), 0.0)
    assert mode == pytest.approx(n * y.mean() / (n + 1), abs=1e-8)
    assert -1 / curv == pytest.approx(T / (n + 1), rel=1e-6)


@pytest.mark.parametrize("S", [1, 4])
def test_conjugate_likelihood_only_closed_form(S):
    y = location_data()
    n = y.size
    tgt = gaussian_location(y, tempering=TemperingSpec(mode="likelihood_only", S=S))
    mode, curv = quadratic_fit(lambda v: tgt.log_joint(np.array([v])), 0.0)
    assert mode == pytest.approx(S * n * y.mean() / (1 + S * n), abs=1e-8)
    assert -curv == pytest.approx(1 + S * n, rel=1e-6)


def test_full_tempering_preserves_argmax():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(15, 2))
    y = X @ np.array([1.0, -2.0]) + rng.normal(size=15)
    modes = []
    for T in (0.05, 0.3, 1.0, 3.0):
        tgt = GaussianLinear(X, y, prior_var=2.0, tempering=TemperingSpec(T))
        res = optimize.minimize(
            lambda w: -tgt.value_and_grad(w)[0], np.zeros(2), jac=lambda w: -tgt.value_and_grad(w)[1],
            method="BFGS", options={"gtol": 1e-12},
        )
        modes.append(res.x)
    for m in modes[1:]:
        np.testing.assert_allclose(m, modes[0], atol=1e-6)
    # and the mode is the ridge solution
    exact = np.linalg.solve(X.T @ X + np.eye(2) / 2.0, X.T @ y)
    np.testing.assert_allclose(modes[0], exact, atol=1e-6)


# -- samplers -------------------------------------------------------------------


def test_sgld_zero_gradient_noise():
    n, eps = 100_000, 0.01
    state = init_state(np.zeros(n), TemperingSpec(), rngmod.stream(0, "sgld"), eps, momentum=False)
    dw = sgld_step(state, np.zeros(n)).w
    assert abs(dw.mean()) < 3 * math.sqrt(eps / n)
    assert abs(dw.var() - eps) < 3 * eps * math.sqrt(2 / n)


def test_sgld_non_finite_gradient():
    state = init_state(np.zeros(3), TemperingSpec(), rngmod.stream(0, "s"), 0.1, momentum=False)
    state.step = 17
    with pytest.raises(DivergenceError) as exc:
        sgld_step(state, np.array([0.0, np.inf, 0.0]))
    assert exc.value.step == 17


def test_ggmc_full_refresh_resamples_momentum():
    n, T = 100_000, 0.3
    state = init_state(np.zeros(n), TemperingSpec(T), rngmod.stream(1, "g"), 1e-6)
    state.m = np.full(n, 1e3)
    new = ggmc_step(state, lambda w: np.zeros_like(w), friction=1.0)
    assert abs(new.m.mean()) < 3 * math.sqrt(T / n)
    assert abs(new.m.var() - T) < 3 * T * math.sqrt(2 / n)


def test_ggmc_friction_validated():
    state = init_state(np.zeros(2), TemperingSpec(), rngmod.stream(0, "g"), 0.1)
    with pytest.raises(ContractError):
        ggmc_step(state, lambda w: -w, friction=0.0)


def chain_moments(target, C, sampler, step, seed, epochs=80, keep=40, steps_per_epoch=50, friction=0.3):
    """Per-chain sample means and mean squared deviations over ``C`` independent replicas."""
    sch = CyclicalSchedule(1, epochs, keep, step, steps_per_epoch, shape="constant")
    res = run_chain(target, np.zeros(target.n_params), sch, sampler, rngmod.stream(seed, "chain"), friction=friction)
    S = np.array(res.samples).reshape(len(res.samples), C, -1)
    return S, res


def assert_moments(S, mean, var):
    """Check pooled moments against ``mean``/``var`` within 3 SE across independent chains."""
    C = S.shape[1]
    pc_mean = S.mean(axis=0)
    pc_sq = ((S - mean) ** 2).mean(axis=0)
    z_mean = (pc_mean.mean(axis=0) - mean) / (pc_mean.std(axis=0) / math.sqrt(C))
    z_var = (pc_sq.mean(axis=0) - var) / (pc_sq.std(axis=0) / math.sqrt(C))
    assert np.all(np.abs(z_mean) < 3), z_mean
    assert np.all(np.abs(z_var) < 3), z_var


@pytest.mark.parametrize("sampler, step", [("ggmc", 0.02), ("sgld", 1e-3)])
@pytest.mark.parametrize("T", [0.1, 0.25, 1.0])
def test_conjugate_location_moments(sampler, step, T):
    y = location_data()
    n = y.size
    C = 1000
    tgt = gaussian_location(y, copies=C, tempering=TemperingSpec(T))
    # SGLD's step is on the tempered potential, so shrink it with T to keep the same accuracy
    S, _ = chain_moments(tgt, C, sampler, step * T if sampler == "sgld" else step, seed=int(T * 100))
    assert_moments(S, n * y.mean() / (n + 1), T / (n + 1))


@pytest.mark.parametrize("sampler, step", [("ggmc", 0.02), ("sgld", 1e-3)])
@pytest.mark.parametrize("S_exp", [1, 4])
def test_conjugate_likelihood_only_moments(sampler, step, S_exp):
    y = location_data()
    n = y.size
    C = 1000
    tgt = gaussian_location(y, copies=C, tempering=TemperingSpec(mode="likelihood_only", S=S_exp))
    S, _ = chain_moments(tgt, C, sampler, step / S_exp, seed=S_exp, epochs=160, keep=80)
    prec = 1 + S_exp * n
    assert_moments(S, S_exp * n * y.mean() / prec, 1 / prec)


def test_ggmc_standard_gaussian_variance_and_kinetic_temperature():
    C = 2000
    S, res = chain_moments(StdGaussian(C), C, "ggmc", 0.05, seed=3)
    assert_moments(S, 0.0, 1.0)
    kt = np.mean([r["kinetic_temperature_mean"] for r in res.trace[16:]])
    assert abs(kt - 1.0) < 0.05


def test_ggmc_cold_kinetic_temperature():
    C = 2000
    S, res = chain_moments(StdGaussian(C, TemperingSpec(0.1)), C, "ggmc", 0.05, seed=4)
    kt = np.mean([r["kinetic_temperature_mean"] for r in res.trace[16:]])
    assert abs(kt - 0.1) < 0.005
    assert_moments(S, 0.0, 0.1)


def test_kinetic_temperature_examples():
    assert kinetic_temperature(np.zeros(5)) == 0.0
    rng = rngmod.stream(0, "kt")
    assert abs(kinetic_temperature(rng.standard_normal(10_000)) - 1.0) < 0.05
    assert abs(kinetic_temperature(math.sqrt(0.3) * rng.standard_normal(10_000)) - 0.3) < 0.02
    with pytest.raises(ContractError):
        kinetic_temperature(np.zeros(0))


def test_kinetic_temperature_groups():
    model = MlpModel((3, 4, 2))
    m = np.arange(model.n_params, dtype=float)
    groups = kinetic_temperature_groups(m, model)
    assert set(groups) == {"W0", "b0", "W1", "b1", "global"}
    assert groups["b0"] == pytest.approx(np.mean(m[12:16] ** 2))
    assert groups["global"] == pytest.approx(np.mean(m**2))


# -- schedule and chains ---------------------------------------------------------


def test_schedule_sample_counts():
    assert CyclicalSchedule(60, 45, 5, 0.1).n_samples == 300
    assert CyclicalSchedule(2, 3, 1, 0.1).sample_epochs() == [3, 6]
    with pytest.raises(ConfigurationError):
        CyclicalSchedule(2, 3, 4, 0.1)


def test_schedule_cosine_shape():
    sch = CyclicalSchedule(2, 4, 1, 0.2, steps_per_epoch=5)
    L = 20
    for j in range(40):
        expected = 0.1 * (1 + math.cos(math.pi * (j % L) / L))
        assert sch.step_size(j) == pytest.approx(expected, rel=1e-14)
    assert sch.step_size(0) == sch.step_size(20) == 0.2


def test_run_chain_collects_at_cycle_ends():
    sch = CyclicalSchedule(2, 3, 1, 0.05, steps_per_epoch=4)
    res = run_chain(StdGaussian(3), np.zeros(3), sch, "ggmc", rngmod.stream(0, "c"))
    assert res.sample_epochs == [3, 6]
    assert len(res.samples) == 2
    assert [r["epoch"] for r in res.trace] == list(range(1, 7))
    assert all(r["kinetic_temperature"] is not None for r in res.trace)
    assert res.final_state.step == 24


def test_run_chain_is_deterministic():
    sch = CyclicalSchedule(2, 3, 2, 0.05, steps_per_epoch=4)
    a = run_chain(StdGaussian(4), np.zeros(4), sch, "sgld", rngmod.stream(5, "c"))
    b = run_chain(StdGaussian(4), np.zeros(4), sch, "sgld", rngmod.stream(5, "c"))
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.samples, b.samples))


def test_run_chain_divergence_keeps_partial_trace():
    sch = CyclicalSchedule(2, 3, 1, 0.05, steps_per_epoch=2)
    with pytest.raises(DivergenceError) as exc:
        run_chain(NanTarget(2, bad_step=7), np.zeros(2), sch, "sgld", rngmod.stream(0, "c"))
    partial = exc.value.partial
    assert exc.value.step == 7
    assert len(partial.trace) == 3
    assert partial.sample_epochs == [3]


def test_run_chain_requires_rng():
    with pytest.raises(ContractError):
        run_chain(StdGaussian(2), np.zeros(2), CyclicalSchedule(1, 1, 1, 0.1), "sgld", None)


def test_minibatch_gradient_is_unbiased():
    train, _ = generate_synthetic("shift_digits", 12, 0, seed=1, dim=6, n_classes=3)
    model = MlpModel((6, 4, 3))
    w = model.init_params(rngmod.stream(0, "init"))
    spec = LikelihoodSpec("noaug", "exact_finite")
    full = MlpPosterior(model, train, augment.identity_orbit(), spec)
    mini = MlpPosterior(model, train, augment.identity_orbit(), spec, batch_size=4)
    _, g_full = full.log_lik_and_grad(w)
    rng = rngmod.stream(0, "mb")
    draws = np.array([mini.log_lik_and_grad(w, rng)[1] for _ in range(4000)])
    se = draws.std(axis=0) / math.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - g_full) < 4 * se + 1e-12)


# -- prediction -----------------------------------------------------------------


def test_predict_single_sample_identity_orbit():
    rng = np.random.default_rng(0)
    model = MlpModel((4, 6, 3))
    w = rng.normal(size=model.n_params)
    x = rng.normal(size=4)
    got = predict_bma(model, [w], x, augment.identity_orbit(), LikelihoodSpec("noaug", K_test=0))
    np.testing.assert_allclose(got, numcore.softmax_rows(numcore.forward_logits(model, w, x[None]))[0], rtol=1e-14)


def test_predict_two_opposite_samples():
    model = MlpModel((1, 2), bias=False)
    got = predict_bma(model, [np.array([1000.0, -1000.0]), np.array([-1000.0, 1000.0])], np.ones(1),
                      augment.identity_orbit(), LikelihoodSpec("noaug", K_test=0))
    np.testing.assert_array_equal(got, [0.5, 0.5])


def test_predict_empty_samples():
    with pytest.raises(ContractError):
        predict_bma(MlpModel((1, 2)), [], np.ones(1), augment.identity_orbit(), LikelihoodSpec())


def test_predict_exact_equals_tuple_mean_of_sampled():
    rng = np.random.default_rng(1)
    model = MlpModel((4, 5, 3), "tanh")
    w = rng.normal(size=model.n_params)
    x = rng.normal(size=4)
    orbit = augment.cyclic_shift_group(4)
    exact = predict_bma(model, [w], x, orbit, LikelihoodSpec("prob_avg", "exact_finite", 4, 4))
    views = augment.enumerate_orbit(orbit, x)
    K = 2
    tuples = [(a, b) for a in range(4) for b in range(4)]
    mean = np.mean([predictive_probs(model, w, views[list(t)][None], "prob_avg")[0] for t in tuples], axis=0)
    np.testing.assert_allclose(exact, mean, rtol=1e-13)


def test_predict_logits_rule():
    rng = np.random.default_rng(2)
    model = MlpModel((4, 3), bias=False)
    w = rng.normal(size=model.n_params)
    x = rng.normal(size=4)
    orbit = augment.cyclic_shift_group(4)
    got = predict_bma(model, [w], x, orbit, LikelihoodSpec("logits_avg", "exact_finite", 4, 4))
    logits = numcore.forward_logits(model, w, augment.enumerate_orbit(orbit, x)).mean(axis=0)
    np.testing.assert_allclose(got, numcore.softmax_rows(logits), rtol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["prob_avg", "logits_avg", "loss_avg"]), st.integers(0, 4))
def test_predict_outputs_are_distributions(seed, variant, K_test):
    rng = np.random.default_rng(seed)
    model = MlpModel((6, 8, 4))
    samples = [rng.normal(0, 3, size=model.n_params) for _ in range(3)]
    X = rng.normal(size=(5, 6))
    full = augment.Orbit.stochastic([augment.SamplerFactor("cyclic_shift", period=6)])
    probs = predict_bma(model, samples, X, full, LikelihoodSpec(variant, "mc_bound", 1, K_test), rngmod.stream(seed, "p"))
    assert np.all(probs >= 0)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-10)


def test_classification_metrics():
    probs = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]])
    m = classification_metrics(probs, [0, 1, 1])
    assert m["error"] == pytest.approx(1 / 3)
    assert m["nll"] == pytest.approx(-(math.log(0.9) + math.log(0.8) + math.log(0.4)) / 3)


# -- SGD baseline ------------------------------------------------------------------


def tiny_task(n=40, seed=0, noise=0.1):
    train, test = generate_synthetic("shift_digits", n, 40, seed=seed, dim=8, n_classes=3, noise=noise)
    return train, test, MlpModel((8, 16, 3))


def test_epochs_for_budget():
    assert epochs_for_budget(200, 4) == 50
    assert epochs_for_budget(200, 3) == 66
    with pytest.raises(ConfigurationError):
        epochs_for_budget(3, 4)


def test_lr_trace_eight_epochs():
    assert [lr_at_epoch(e, 8, 0.1) for e in range(1, 9)] == [0.1] * 6 + [0.1 * 0.1] * 2


def test_train_sgd_budget_and_forward_passes():
    train, _, model = tiny_task()
    full = augment.Orbit.stochastic([augment.SamplerFactor("cyclic_shift", period=8)])
    passes = set()
    for K in (1, 2, 4, 8):
        res = train_sgd(model, train, full, LikelihoodSpec("prob_avg", "mc_bound", K, K), budget=16, batch_size=16)
        assert res.epochs == 16 // K
        assert res.forward_passes == res.epochs * len(train) * K
        passes.add(res.forward_passes)
        assert [r["epoch"] for r in res.metrics] == list(range(1, res.epochs + 1))
    assert passes == {16 * len(train)}


def test_train_sgd_budget_error():
    train, _, model = tiny_task()
    with pytest.raises(ConfigurationError):
        train_sgd(model, train, augment.cyclic_shift_group(8), LikelihoodSpec("prob_avg", "exact_finite"), budget=4)


def test_train_sgd_reaches_full_training_accuracy():
    train, _, model = tiny_task(n=80)
    res = train_sgd(model, train, augment.identity_orbit(), LikelihoodSpec("noaug", "exact_finite"),
                    budget=200, lr=0.05, batch_size=16, seed=0)
    pred = numcore.forward_logits(model, res.w, train.inputs).argmax(axis=1)
    assert np.all(pred == train.labels)
    lrs = [r["lr"] for r in res.metrics]
    assert lrs[149] == 0.05 and lrs[150] == pytest.approx(0.005)


def test_train_sgd_deterministic_and_reports_test_metrics():
    train, test, model = tiny_task()
    orbit = augment.cyclic_shift_group(8)
    spec = LikelihoodSpec("logits_avg", "exact_finite")
    a = train_sgd(model, train, orbit, spec, budget=16, test=test, seed=3)
    b = train_sgd(model, train, orbit, spec, budget=16, test=test, seed=3)
    assert a.w.tobytes() == b.w.tobytes()
    assert a.epochs == 2
    assert {"test_error", "test_nll", "train_objective", "lr"} <= set(a.metrics[-1])


# -- variational inference -------------------------------------------------------


def log_evidence(y, prior_var=1.0):
    n = y.size
    return stats.multivariate_normal(np.zeros(n), np.eye(n) + prior_var * np.ones((n, n))).logpdf(y)


def test_elbo_point_mass_matches_direct_evaluation():
    y = location_data()
    tgt = gaussian_location(y)
    q = VariationalPosterior(np.array([0.4]), np.log(1e-8))
    est = elbo_estimate(tgt, q, 1, rngmod.stream(0, "elbo"))
    eta = rngmod.stream(0, "elbo").standard_normal(1)
    w = q.mean + q.std * eta
    direct = tgt.log_joint(w) + 0.5 * float(eta @ eta) + 0.5 * math.log(2 * math.pi) + math.log(1e-8)
    # log Q recovers eta as (w - mean) / 1e-8, which costs about eight digits
    assert est == pytest.approx(direct, abs=1e-6)
    assert est - tgt.log_joint(q.mean) == pytest.approx(0.5 * float(eta @ eta) + 0.5 * math.log(2 * math.pi) + math.log(1e-8), rel=1e-6)


def test_elbo_at_posterior_equals_evidence_and_beats_shifted():
    y = location_data()
    n = y.size
    tgt = gaussian_location(y)
    post = VariationalPosterior(np.array([n * y.mean() / (n + 1)]), 0.5 * np.log(1 / (n + 1)))
    ev = log_evidence(y)
    # zero-variance estimator: any single draw is exact
    assert elbo_estimate(tgt, post, 1, rngmod.stream(1, "e")) == pytest.approx(ev, abs=1e-10)
    shifted = VariationalPosterior(post.mean + 0.5, post.log_std)
    assert elbo_estimate(tgt, post, 200, rngmod.stream(2, "e")) >= elbo_estimate(tgt, shifted, 200, rngmod.stream(2, "e"))


def test_fit_vi_reaches_log_evidence():
    y = location_data()
    tgt = gaussian_location(y)
    q, trace = fit_vi(tgt, VariationalPosterior(np.zeros(1), -3.0), 3000, 0.02, 1, rngmod.stream(0, "vi"), trace_every=500)
    ev = log_evidence(y)
    assert abs(elbo_estimate(tgt, q, 100, rngmod.stream(1, "vi")) - ev) < 1e-3
    assert len(trace) == 6


def test_vi_requires_rng_and_positive_mc():
    tgt = gaussian_location(location_data())
    q = VariationalPosterior(np.zeros(1), 0.0)
    with pytest.raises(ContractError):
        fit_vi(tgt, q, 1, rng=None)
    with pytest.raises(ContractError):
        elbo_estimate(tgt, q, 0, rngmod.stream(0, "e"))


# -- checkpoints -------------------------------------------------------------------


def test_checkpoint_round_trip_is_byte_exact(tmp_path):
    model = MlpModel((5, 7, 3), "tanh")
    rng = rngmod.stream(4, "ck")
    w = rng.normal(size=model.n_params)
    w[0] = 5e-324
    ck = Checkpoint(model, w, rngmod.get_state(rng), {"cycle": 2, "epoch": 5}, TemperingSpec(0.1).to_dict(), {"seed": 4})
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    write_checkpoint(p1, ck)
    back = read_checkpoint(p1, model)
    assert back.w.tobytes() == w.tobytes()
    assert back.model == model and back.phase == ck.phase and back.tempering == ck.tempering
    write_checkpoint(p2, back)
    assert p1.read_bytes() == p2.read_bytes()
    restored = rngmod.set_state(back.rng)
    assert restored.standard_normal(3).tobytes() == rng.standard_normal(3).tobytes()


def test_checkpoint_model_mismatch(tmp_path):
    model = MlpModel((3, 2))
    p = tmp_path / "c.ckpt"
    write_checkpoint(p, Checkpoint(model, np.zeros(model.n_params)))
    with pytest.raises(ConfigurationError):
        read_checkpoint(p, MlpModel((3, 4, 2)))


@pytest.mark.parametrize("content", [b"", b"NOPE 1\n{}\n", b"AUGLIK-CHECKPOINT 1\n{bad json\n"])
def test_checkpoint_malformed(tmp_path, content):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(content)
    with pytest.raises(IngestionError):
        read_checkpoint(p)


def test_checkpoint_truncated_payload(tmp_path):
    model = MlpModel((3, 2))
    p = tmp_path / "c.ckpt"
    write_checkpoint(p, Checkpoint(model, np.ones(model.n_params)))
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(IngestionError):
        read_checkpoint(p)


# -- expected-update equivalence -----------------------------------------------------


def test_equivalence_identity_orbit():
    rng = np.random.default_rng(0)
    model = MlpModel((4, 5, 3))
    w = rng.normal(size=model.n_params)
    x = rng.normal(size=4)
    assert expected_update_equivalence_check(model, w, x, 1, augment.identity_orbit()) < 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_equivalence_random_three_element_orbit(seed):
    rng = np.random.default_rng(seed)
    model = MlpModel((6, 8, 8, 3), ("relu", "tanh")[seed % 2])
    w = rng.normal(size=model.n_params)
    x = rng.normal(size=6)
    full = augment.Orbit.stochastic([augment.SamplerFactor("cyclic_shift", period=6), augment.SamplerFactor("jitter", scale=0.3)])
    orbit = augment.freeze_orbit(full, 3, rngmod.stream(seed, "o"))
    assert expected_update_equivalence_check(model, w, x, int(rng.integers(3)), orbit) < 1e-10


# -- rng streams ---------------------------------------------------------------------


def test_streams_are_named_and_explicit():
    a = rngmod.stream(1, "x", 2).standard_normal(4)
    b = rngmod.stream(1, "x", 2).standard_normal(4)
    c = rngmod.stream(1, "x", 3).standard_normal(4)
    assert a.tobytes() == b.tobytes() and not np.array_equal(a, c)
    with pytest.raises(ContractError):
        rngmod.stream(None, "x")
    kids = rngmod.split(rngmod.stream(0, "p"), 3)
    draws = [k.standard_normal() for k in kids]
    assert len(set(draws)) == 3
