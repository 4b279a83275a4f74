import numpy as np
import pytest

import medshrink as ms
from medshrink import DataError, natural_effects, total_effect_fit
from conftest import random_dataset


def test_total_effect_noiseless_recovery(rng):
    n = 50
    x = np.column_stack([np.ones(n), rng.normal(size=n)])
    r = (rng.random(n) < 0.5).astype(float)
    y = 2.0 * x[:, 0] - 1.0 * x[:, 1] + 0.75 * r
    data = ms.TrialDataset(y=y, r=r, m=np.zeros(n), x=x)
    fit = total_effect_fit(data)
    assert fit.theta_r == pytest.approx(0.75, abs=1e-10)


def test_total_effect_matches_path_product():
    # eta=0, kappa=0.25: total effect = beta_r + beta_m * gamma_r since the
    # covariate is centered.
    spec = ms.ScenarioSpec(eta=0.0, kappa=0.25, n=100_000)
    data = ms.generate_dataset(spec, seed=21)
    fit = total_effect_fit(data)
    expected = 0.25 + 0.25 / np.sqrt(2.0)
    assert expected == pytest.approx(0.4267767, abs=1e-7)
    assert abs(fit.theta_r - expected) < 0.02


def test_total_effect_deterministic():
    spec = ms.ScenarioSpec(eta=0.25, kappa=0.25, n=500)
    data = ms.generate_dataset(spec, seed=3)
    f1 = total_effect_fit(data)
    f2 = total_effect_fit(data)
    assert f1.theta.values.tobytes() == f2.theta.values.tobytes()
    assert f1.sigma2 == f2.sigma2


def test_total_effect_design_has_no_mediator(rng):
    data = random_dataset(rng, n=60, k=2)
    fit = total_effect_fit(data)
    assert len(fit.theta.names) == data.k + 1
    assert data.mediator_name not in fit.theta.names


def test_natural_effects_no_mediation():
    eff = natural_effects(0.4, 0.4)
    assert eff.nie == 0.0
    assert eff.te == eff.nde


def test_natural_effects_reference_values():
    # Difference-of-estimates anchors: the same total effect with the
    # instrumented and the naive direct effect.
    tsls = natural_effects(-3.14, -2.38)
    assert tsls.nie == pytest.approx(-0.76, abs=1e-12)
    ols = natural_effects(-3.14, -2.66)
    assert ols.nie == pytest.approx(-0.48, abs=1e-12)


def test_natural_effects_identity_exact(rng):
    for _ in range(50):
        te, nde = rng.normal(size=2) * 10
        eff = natural_effects(te, nde)
        # nie is defined as te - nde, so the identity holds to rounding of
        # the largest participating magnitude.
        ulp = np.spacing(max(abs(eff.te), abs(eff.nde), abs(eff.nie)))
        assert abs(eff.te - (eff.nde + eff.nie)) <= 2 * ulp


def test_natural_effects_rejects_non_finite():
    with pytest.raises(DataError):
        natural_effects(np.inf, 0.0)
    with pytest.raises(DataError):
        natural_effects(0.0, np.nan)


def test_same_total_effect_for_all_estimator_paths(rng):
    data = random_dataset(rng, n=90, k=3)
    bundle = ms.build_designs(data)
    theta_r = total_effect_fit(data).theta_r
    ols = ms.ols_fit(data.y, bundle.v, names=bundle.v_names)
    tsls = ms.tsls_fit(data.y, bundle, warn_weak=False)
    spsl = ms.spsl_fit(data.y, bundle, ols=ols, tsls=tsls)
    effects = [
        natural_effects(theta_r, fit_beta)
        for fit_beta in (ols.coef.beta_r, tsls.coef.beta_r, spsl.coef.beta_r)
    ]
    assert len({e.te for e in effects}) == 1
    for e in effects:
        assert e.te == pytest.approx(e.nde + e.nie, abs=1e-14)
