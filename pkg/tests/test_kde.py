import math

import numpy as np
import pytest

from hypkde.errors import EmptySample
from hypkde.helgason import SpectralGrid, hf_forward, transform_points
from hypkde.kde import KdeConfig, clipped, default_kernel, empirical_hf, estimate, schedule, scheduled_config
from hypkde.measures import SampleSet, integrate, l2_distance, l2_norm, sample

TINY = SpectralGrid.template(3.0, 6, 2)


def test_default_kernel(template):
    K = default_kernel(template)
    assert np.allclose(K.values[:, 0].real, np.exp(-template.lam**2))
    assert np.all(K.values == K.values[:, :1])


@pytest.mark.parametrize("n,h,T", [(16, 0.5, 2.0), (1024, 0.17678, 5.657)])
def test_schedule_examples(n, h, T):
    hh, TT = schedule(n, 1.0)
    assert hh == pytest.approx(h, abs=1e-5)
    assert TT == pytest.approx(T, abs=1e-3)


def test_schedule_monotone():
    hs, Ts = zip(*(schedule(n, 1.0) for n in (10, 100, 1000, 10000)))
    assert all(a > b for a, b in zip(hs, hs[1:]))
    assert all(a < b for a, b in zip(Ts, Ts[1:]))
    with pytest.raises(ValueError):
        schedule(0, 1.0)


def test_config_validation(template):
    with pytest.raises(ValueError):
        KdeConfig(0.0, 1.0, default_kernel(template))
    with pytest.raises(ValueError):
        KdeConfig(0.1, -1.0, default_kernel(template))


def test_empirical_single_point_at_base(template):
    e = empirical_hf(SampleSet(np.array([0.0]), np.array([1.0])), template)
    assert np.allclose(e.values, 1.0, atol=1e-13)


def test_empirical_duplicates_idempotent(b1, template):
    s = sample(b1, 50, seed=1)
    doubled = SampleSet(np.concatenate([s.x, s.x]), np.concatenate([s.y, s.y]))
    a = empirical_hf(s, template).values
    b = empirical_hf(doubled, template).values
    assert np.allclose(a, b, atol=1e-13)


def test_empirical_empty(template):
    with pytest.raises(EmptySample):
        empirical_hf(SampleSet(np.empty(0), np.empty(0)), template)


def test_empirical_cutoff_matches_masked_full(b1, template):
    s = sample(b1, 200, seed=4)
    full = empirical_hf(s, template).values
    cut = empirical_hf(s, template, cutoff=4.0).values
    mask = np.abs(template.lam) <= 4.0
    assert np.allclose(cut[mask], full[mask], atol=1e-12)
    assert np.all(cut[~mask] == 0)


def test_empirical_mean_matches_forward(b1):
    n = 10**4
    s = sample(b1, n, seed=77)
    per_point = np.stack([transform_points(s.x[i:i + 1], s.y[i:i + 1], [1.0], TINY) for i in range(n)])
    mean = per_point.mean(axis=0)
    se = per_point.std(axis=0, ddof=1) / math.sqrt(n)
    F = hf_forward(b1, TINY).values
    assert np.allclose(empirical_hf(s, TINY).values, mean, atol=1e-12)
    z_re = np.abs(mean.real - F.real) / se.real
    z_im = np.abs(mean.imag - F.imag) / np.maximum(se.imag, 1e-300)
    assert np.all(z_re < 4)
    assert np.all(z_im[se.imag > 0] < 4)


def test_empirical_unbiased_over_replications(b1):
    reps, n = 200, 100
    F = hf_forward(b1, TINY).values
    nodes = [(3, 0), (4, 1), (5, 0)]
    draws = np.array([[empirical_hf(sample(b1, n, seed=1000 + k, batch=4096), TINY).values[j, p] for j, p in nodes]
                      for k in range(reps)])
    mean = draws.mean(axis=0)
    se_re = draws.real.std(axis=0, ddof=1) / math.sqrt(reps)
    se_im = draws.imag.std(axis=0, ddof=1) / math.sqrt(reps)
    for c, (j, p) in enumerate(nodes):
        assert abs(mean[c].real - F[j, p].real) < 4 * se_re[c]
        assert abs(mean[c].imag - F[j, p].imag) < 4 * se_im[c] + 1e-15


def test_estimate_zero_cutoff(b1, template):
    s = sample(b1, 100, seed=2)
    cfg = KdeConfig(0.3, 1e-6, default_kernel(template))
    est = estimate(s, cfg, b1.grid)
    assert np.all(est.values == 0)


def test_estimate_flat_kernel_beats_zero(b1, template):
    s = sample(b1, 10**4, seed=8)
    ones = template.with_values(np.ones(template.values.shape))
    est = estimate(s, KdeConfig(0.2, template.lambda_max, ones), b1.grid)
    assert l2_distance(est, b1) < l2_norm(b1)


def test_estimate_deterministic(b1):
    s = sample(b1, 300, seed=6)
    cfg = scheduled_config(300, 1.0)
    a = estimate(s, cfg, b1.grid)
    b = estimate(s, cfg, b1.grid)
    assert np.array_equal(a.values, b.values)


def test_estimate_mass_near_one(b1):
    s = sample(b1, 2000, seed=13)
    est = estimate(s, scheduled_config(2000, 1.0), b1.grid)
    assert integrate(est) == pytest.approx(1.0, abs=0.05)


def test_clipped(b1):
    s = sample(b1, 200, seed=21)
    est = estimate(s, scheduled_config(200, 1.0), b1.grid)
    c = clipped(est)
    assert c.values.min() >= 0
    assert integrate(c) == pytest.approx(1.0, abs=1e-12)
