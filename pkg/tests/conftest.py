import numpy as np
import pytest

from medshrink import TrialDataset, build_designs


def random_dataset(rng, n=60, k=3, binary_m=False):
    """Generic full-rank trial dataset for property-style checks."""
    x = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
    r = (rng.random(n) < 0.5).astype(float)
    if not r.any() or r.all():
        r[0], r[1] = 0.0, 1.0
    m = rng.normal(size=n) + 0.5 * r
    if binary_m:
        m = (m > 0).astype(float)
    y = rng.normal(size=n) + m + r + x[:, 1:].sum(axis=1)
    return TrialDataset(y=y, r=r, m=m, x=x)


def prospect_shaped_dataset(rng, n=300):
    """Simulated trial with the k=7 covariate layout and a binary mediator:
    baseline severity, a binary symptom flag, two medication-history flags,
    and two site dummies."""
    hdrs0 = rng.normal(17.0, 5.0, size=n)
    ideation = (rng.random(n) < 0.3).astype(float)
    past_med = (rng.random(n) < 0.4).astype(float)
    antidep = (rng.random(n) < 0.35).astype(float)
    site = rng.integers(0, 3, size=n)
    site2 = (site == 1).astype(float)
    site3 = (site == 2).astype(float)
    r = (rng.random(n) < 0.5).astype(float)
    u = rng.normal(size=n)
    m_latent = (
        -0.8
        + 0.03 * hdrs0
        + 0.9 * r
        + 0.35 * r * (hdrs0 - 17.0) / 5.0
        - 0.4 * r * antidep
        + 0.5 * antidep
        + 0.6 * u
        + rng.normal(scale=0.8, size=n)
    )
    m = (m_latent > 0).astype(float)
    y = (
        2.0
        + 0.6 * hdrs0
        + 1.2 * ideation
        + 1.4 * past_med
        - 0.2 * antidep
        - 0.5 * site2
        - 2.0 * site3
        - 2.5 * r
        - 1.5 * m
        + 1.2 * u
        + rng.normal(scale=3.0, size=n)
    )
    x = np.column_stack([np.ones(n), hdrs0, ideation, past_med, antidep, site2, site3])
    names = ("const", "hdrs0", "ideation", "past_med", "antidep", "site2", "site3")
    return TrialDataset(
        y=y, r=r, m=m, x=x, u=u, x_names=names,
        mediator_name="med_use", treatment_name="intervention",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
