"""Smoke test of the convention A/B experiment."""

import pytest

from convention_experiment import run_convention_experiment


@pytest.mark.slow
def test_consistent_readings_win():
    results = run_convention_experiment(n=24, mus=(2.0,), lambdas=(2.0,), verbose=False)
    assert set(results) == {"conjugation order", "riccati coefficients", "sign of *Q_hat",
                            "curvature projectors"}
    riccati = results["riccati coefficients"]
    assert riccati["2 *Q(a-1) + T*AT"]["mean"] < riccati["*Q(a-1) + 2 T*AT"]["mean"]
    proj = results["curvature projectors"]
    assert proj["(l-1) pi_perp + (1/l-1) pi_E"]["mean"] < proj["(l-1) pi_E + (1/l-1) pi_perp"]["mean"]
    assert len(results["conjugation order"]["T^-1 S T"]["values"]) == 1
