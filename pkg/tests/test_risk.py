import math

import numpy as np
import pytest

from hypkde.errors import DegenerateFit
from hypkde.kde import KdeConfig, default_kernel, scheduled_config
from hypkde.measures import l2_norm
from hypkde.risk import (
    RiskRecord,
    fit_rate,
    l2_risk,
    rate_sweep,
    read_records_csv,
    records_csv,
    replicate_risks,
    sandwich_experiment,
    sweep_csv,
    target_slope,
)


def test_zero_cutoff_risk_is_norm(b1, template):
    cfg = KdeConfig(0.3, 1e-9, default_kernel(template))
    rec = l2_risk(b1, cfg, 100, 3, seed=0)
    assert rec.mean_sq_risk == l2_norm(b1) ** 2
    assert rec.std_error == 0.0


def test_reps_precondition(b1):
    with pytest.raises(ValueError):
        l2_risk(b1, scheduled_config(100, 1.0), 100, 1, seed=0)


def test_replicates_are_prefix_consistent(b1):
    cfg = scheduled_config(256, 1.0)
    a = replicate_risks(b1, cfg, 256, 3, seed=5)
    b = replicate_risks(b1, cfg, 256, 6, seed=5)
    assert np.array_equal(a, b[:3])


def test_std_error_shrinks_with_reps(b1):
    cfg = scheduled_config(256, 1.0)
    risks = replicate_risks(b1, cfg, 256, 40, seed=3)
    se20 = risks[:20].std(ddof=1) / math.sqrt(20)
    se40 = risks.std(ddof=1) / math.sqrt(40)
    assert se40 / se20 == pytest.approx(1 / math.sqrt(2), rel=0.3)


def test_beats_zero_estimator(b1):
    rec = l2_risk(b1, scheduled_config(1024, 1.0), 1024, 20, seed=1, alpha=1.0)
    assert 0 <= rec.mean_sq_risk < l2_norm(b1) ** 2
    assert rec.std_error >= 0
    assert (rec.n, rec.replications, rec.seed) == (1024, 20, 1)


def test_rate_sweep_properties(b1):
    ns = [256, 1024, 4096]
    recs = rate_sweep(b1, 1.0, ns, 20, seed=11)
    assert [r.n for r in recs] == ns
    for a, b in zip(recs, recs[1:]):
        assert b.mean_sq_risk <= a.mean_sq_risk + 2 * (a.std_error + b.std_error)
    assert recs[-1].mean_sq_risk < recs[0].mean_sq_risk


def test_rate_sweep_reproducible(b1):
    a = rate_sweep(b1, 1.0, [64, 128, 256], 3, seed=2)
    b = rate_sweep(b1, 1.0, [64, 128, 256], 3, seed=2)
    assert a == b


def test_rate_sweep_validation(b1):
    with pytest.raises(ValueError):
        rate_sweep(b1, 1.0, [256, 128, 512], 3, seed=0)
    with pytest.raises(ValueError):
        rate_sweep(b1, 1.0, [256, 512], 3, seed=0)


def _records(ns, risks):
    return [RiskRecord(n, 1.0, 2, r, 0.0, 0) for n, r in zip(ns, risks)]


def test_fit_exact_power_law():
    ns = [256, 512, 1024, 2048, 4096]
    slope, intercept, r2 = fit_rate(_records(ns, [3.0 * n**-0.5 for n in ns]))
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert r2 == pytest.approx(1.0)


def test_fit_constant():
    slope, _, _ = fit_rate(_records([10, 20, 40], [0.2, 0.2, 0.2]))
    assert slope == pytest.approx(0.0, abs=1e-12)


def test_fit_errors():
    with pytest.raises(DegenerateFit):
        fit_rate(_records([10, 10, 10], [0.1, 0.2, 0.3]))
    with pytest.raises(ValueError):
        fit_rate(_records([10, 20], [0.1, 0.2]))
    with pytest.raises(ValueError):
        fit_rate(_records([10, 20, 30], [0.1, 0.0, 0.2]))


def test_target_slope():
    assert target_slope(1.0) == -0.5
    assert target_slope(2.0) == pytest.approx(-2 / 3)


def test_records_csv_round_trip(tmp_path):
    recs = _records([10, 20, 40], [0.3, 0.2, 0.1])
    path = tmp_path / "r.csv"
    path.write_text(records_csv(recs))
    assert read_records_csv(path) == recs


def test_small_sandwich():
    rep = sandwich_experiment(1.0, [256, 512, 1024], reps=3, seed=4)
    assert rep["all_ordered"]
    for row in rep["rows"]:
        assert row["lower_bound"] <= row["upper"]
        assert {"hellinger_sq_max", "variation_lb", "single_draw_variation_min"} <= set(row)
        assert set(row["probes"]) == {"zero", "one_hot", "all_ones"}
    text = sweep_csv(rep)
    assert text.splitlines()[0] == "n,alpha,mean_sq_risk,std_error,lower_bound"
    assert len(text.splitlines()) == 4
    assert rep["lower_slope"] is not None and rep["upper_slope"] is not None
