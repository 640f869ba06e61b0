import math

import numpy as np
import pytest

import underreport as ur


def test_marginal_matches_poisson():
    lam, p, x = 6.0, 0.3, 2
    mu = lam * p
    want = x * math.log(mu) - mu - math.lgamma(x + 1)
    assert ur.marginal_log_pmf(x, lam, p) == pytest.approx(want, abs=1e-12)


def test_percapita_anchor():
    assert ur.percapita_scaling(0.82, 2.0) == pytest.approx(1.133, abs=1e-3)


def test_prior_reporting_median():
    draws = np.asarray(ur.prior_reporting_draws(100000, seed=3))
    assert np.median(draws) == pytest.approx(0.22, abs=0.01)


def test_simulate_is_deterministic():
    a = ur.simulate(n_schools=5, n_years=2, seed=4)
    b = ur.simulate(n_schools=5, n_years=2, seed=4)
    assert a["data"].to_csv() == b["data"].to_csv()
    assert len(a["data"]) == 10
    assert all(r.reported <= z for r, z in zip(a["data"].records, a["z_true"]))


def test_fit_returns_draws():
    data = ur.simulate(n_schools=4, n_years=3, seed=5)["data"]
    batch = ur.fit(data, pooling="complete", chains=2, warmup=50, iters=30, seed=6)
    assert batch.draws.shape == (60, len(batch.names))
    assert np.isfinite(batch.draws).all()
    rows = ur.coefficient_summary(batch)
    assert [r.name for r in rows][:2] == ["beta1", "beta2"]


def test_invalid_records_raise():
    r = ur.Record()
    r.school_id = "a"
    r.year = 2014
    r.reported = -1
    r.students = 100
    r.urbanization = 1
    r.frac_women = 0.5
    r.pell_frac = 0.3
    with pytest.raises(ur.DataError):
        ur.Dataset.from_records([r])


def test_cli_help():
    status, out, _ = ur.run_cli(["--help"])
    assert status == 0
    assert "simulate" in out
