import mpmath
import numpy as np
import pytest

import medshrink as ms
from medshrink import DataError, f_upper_tail, first_stage_f
from medshrink.diagnostics import f_statistic_nested


def test_f_zero_when_excluded_block_is_orthogonal():
    # Construct the mediator inside the span of the restricted design and
    # the excluded instrument orthogonal to everything: no RSS reduction.
    rng = np.random.default_rng(6)
    n = 16
    x1 = rng.normal(size=n)
    r = np.tile([1.0, 1.0, 0.0, 0.0], n // 4)
    excl = rng.normal(size=n)
    full = np.column_stack([np.ones(n), x1, r, excl])
    restricted = full[:, :3]
    # Mediator residuals constructed orthogonal to the excluded column:
    # project a noise draw off the whole instrument span, so the excluded
    # instrument cannot reduce the restricted RSS at all.
    q, _ = np.linalg.qr(full)
    noise = rng.normal(size=n)
    noise -= q @ (q.T @ noise)
    m = 0.3 + 0.5 * x1 + 0.2 * r + noise
    f, df1, df2 = f_statistic_nested(m, full, restricted)
    assert np.linalg.norm(noise) > 0.5  # the restricted fit is not exact
    assert f == pytest.approx(0.0, abs=1e-12)
    assert f_upper_tail(f, df1, df2) == pytest.approx(1.0, abs=1e-12)


def test_f_matches_two_regression_oracle_in_extended_precision():
    rng = np.random.default_rng(42)
    n = 12
    x1 = rng.normal(size=n)
    r = np.array([1.0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0])
    rx = r * x1
    m = 0.4 * x1 + 0.8 * r - 0.3 * rx + rng.normal(scale=0.7, size=n)
    full = np.column_stack([np.ones(n), x1, r, rx])
    restricted = full[:, :3]

    with mpmath.workdps(60):
        def rss(design):
            md = mpmath.matrix(design.tolist())
            my = mpmath.matrix(m.tolist())
            beta = mpmath.lu_solve(md.T * md, md.T * my)
            resid = my - md * beta
            return sum(resid[i] ** 2 for i in range(n))

        rss_full = rss(full)
        rss_restr = rss(restricted)
        q, dfree = 1, n - 4
        oracle = float((rss_restr - rss_full) / q / (rss_full / dfree))

    f, df1, df2 = f_statistic_nested(m, full, restricted)
    assert df1 == 1 and df2 == 8
    assert f == pytest.approx(oracle, abs=1e-8)


def test_first_stage_f_on_simulated_trial():
    spec = ms.ScenarioSpec(eta=0.25, kappa=0.5, n=2000)
    data = ms.generate_dataset(spec, seed=8)
    bundle = ms.build_designs(data)
    res = first_stage_f(data, bundle)
    assert res.df1 == 1
    assert res.df2 == 2000 - 4
    assert res.f > 10.0  # strong instrument cell
    assert 0.0 <= res.p < 0.001


def test_first_stage_f_requires_excluded_block(rng):
    data = ms.TrialDataset(
        y=np.zeros(8),
        r=np.array([1.0, 0, 1, 0, 1, 0, 1, 0]),
        m=np.arange(8.0),
        x=np.ones((8, 1)),
    )
    bundle = ms.build_designs(data)
    assert bundle.z_excluded == ()
    with pytest.raises(DataError, match="no excluded instruments"):
        first_stage_f(data, bundle)


def test_f_upper_tail_trivials():
    assert f_upper_tail(0.0, 3, 7) == 1.0
    # F(1,1) has median 1.
    assert f_upper_tail(1.0, 1, 1) == pytest.approx(0.5, abs=1e-12)


def test_f_upper_tail_reference_point_against_quadrature():
    # High-precision numerical integration of the F density as the oracle.
    d1, d2, f0 = 6, 282, 9.10
    with mpmath.workdps(40):
        def pdf(t):
            a, b = mpmath.mpf(d1) / 2, mpmath.mpf(d2) / 2
            c = mpmath.gamma(a + b) / (mpmath.gamma(a) * mpmath.gamma(b))
            c *= (mpmath.mpf(d1) / d2) ** a
            return c * t ** (a - 1) * (1 + mpmath.mpf(d1) * t / d2) ** (-(a + b))

        oracle = float(mpmath.quad(pdf, [f0, mpmath.inf]))
    p = f_upper_tail(f0, d1, d2)
    assert p == pytest.approx(oracle, abs=1e-8)
    assert p < 0.001


def test_f_upper_tail_monotone_in_f():
    values = [f_upper_tail(f, 4, 60) for f in np.linspace(0.0, 12.0, 40)]
    assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))


def test_f_upper_tail_rejects_bad_input():
    with pytest.raises(DataError):
        f_upper_tail(1.0, 0, 5)
    with pytest.raises(DataError):
        f_upper_tail(-0.5, 2, 5)
    with pytest.raises(DataError):
        f_upper_tail(np.nan, 2, 5)


@pytest.mark.slow
def test_null_p_values_are_uniform():
    # gamma_rx = 0 at kappa = 0.25: the excluded instrument is irrelevant,
    # the F statistic is exactly F(1, n-4), and p-values are uniform.
    reps = 2000
    pvals = np.empty(reps)
    spec = ms.ScenarioSpec(eta=0.25, kappa=0.25, n=300)
    for rep in range(reps):
        data = ms.generate_dataset(spec, seed=77, replicate_index=rep)
        bundle = ms.build_designs(data)
        pvals[rep] = first_stage_f(data, bundle).p
    grid = np.sort(pvals)
    ks = np.max(np.abs(grid - (np.arange(1, reps + 1) - 0.5) / reps)) + 0.5 / reps
    assert ks < 0.05
