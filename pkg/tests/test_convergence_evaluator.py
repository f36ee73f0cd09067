"""Tests for the acceptance-study runner."""

import json

import numpy as np
import pytest

from convergence_evaluator import ConvergenceEvaluator, observed_order


class TestObservedOrder:
    def test_second_order(self):
        sizes = (16, 32, 64)
        assert observed_order(sizes, [3.0 / n ** 2 for n in sizes]) == pytest.approx(2.0)

    def test_rounding_floor(self):
        assert observed_order((16, 32), [1e-13, 1e-14]) == float("inf")
        assert observed_order((16, 32, 64), [1e-3, 1e-12, 1e-13]) == float("inf")


class TestJudge:
    """Case criteria."""

    def test_min_order(self):
        ok, detail = ConvergenceEvaluator.judge({"min_order": 1.8}, [16, 32], [4e-2, 1e-2])
        assert ok and detail.startswith("order 2.00")

    def test_bounds(self):
        assert ConvergenceEvaluator.judge({"max": 0.1}, [8, 16], [0.05, 0.01])[0]
        assert not ConvergenceEvaluator.judge({"max": 0.1}, [8, 16], [0.2, 0.01])[0]
        assert ConvergenceEvaluator.judge({"min": 0.05}, [8], [0.07])[0]
        assert ConvergenceEvaluator.judge({"max_abs": 1e-5}, [8, 16], [-4e-6, -2e-8])[0]
        assert not ConvergenceEvaluator.judge({"max_abs": 1e-5}, [8], [-3e-5])[0]

    def test_target_and_label(self):
        assert ConvergenceEvaluator.judge({"target": 2.0, "rel_tol": 0.01}, [8], [2.01])[0]
        assert not ConvergenceEvaluator.judge({"target": 2.0, "rel_tol": 0.001}, [8], [2.01])[0]
        assert ConvergenceEvaluator.judge({"equals": "point"}, [8], ["point"])[0]

    def test_no_criterion(self):
        with pytest.raises(KeyError):
            ConvergenceEvaluator.judge({"name": "empty"}, [8], [1.0])


class TestEvaluate:
    def test_small_run(self, tmp_path):
        cases = [
            {"name": "clifford energy", "quantity": "willmore_energy_hopf",
             "surface": {"kind": "clifford", "stencil": "spectral"}, "grids": [24],
             "target": 2 * np.pi ** 2, "rel_tol": 1e-3},
            {"name": "too fine", "quantity": "sup_dS", "surface": {"kind": "mercator"},
             "grids": [256], "max": 1.0},
        ]
        path = tmp_path / "cases.json"
        path.write_text(json.dumps(cases))
        assert ConvergenceEvaluator(str(path), max_grid=64).evaluate(verbose=False) == 1.0

    def test_unknown_quantity(self):
        ev = ConvergenceEvaluator()
        with pytest.raises(KeyError):
            ev.measure({"quantity": "color", "surface": {"kind": "clifford"}}, 8)

    def test_missing_file(self, tmp_path):
        assert ConvergenceEvaluator(str(tmp_path / "absent.json")).evaluate(verbose=False) == 0.0
