"""Tests for Baecklund lines, sequence classification and the normal bundle degree."""

import numpy as np
import pytest

from errors import HopfFieldZero, NotClosed, NotWillmore
from grid_calc import Grid
from immersion import LineBundle, SurfaceSpec, generate
from meancurvsphere import conformal_gauss_map, hopf_fields
from sequences import (backlund_forward, classify, constant_threshold, energy_bound_check,
                       normal_bundle_degree, projective_variance, willmore_sequence)


class TestClassify:
    """Shape codes from the two ends of the sequence."""

    def test_two_points(self):
        out = classify("point", "point", 0, 0, 4)
        assert out["shape"] == "(1)"
        assert out["pictogram"] == "∘–f–∘"
        assert out["surfaces"] == 1

    def test_point_and_hopf_zero(self):
        assert classify("point", "A_zero", 0, 0, 4)["shape"] == "(2)"
        assert classify("Q_zero", "point", 0, 0, 4)["shape"] == "(2)"

    def test_hopf_zero_both_sides(self):
        assert classify("Q_zero", "A_zero", 0, 0, 4)["shape"] == "(3)"
        out = classify("Q_zero", "A_zero", 0, 1, 4)
        assert out["shape"] == "(4)"
        assert out["pictogram"] == "(–f–•–)"
        assert out["surfaces"] == 2

    def test_open(self):
        out = classify("open", "open", 4, 4, 4)
        assert out["shape"] == "undetermined(4)"
        assert out["shape_candidate"] == 5
        assert classify("point", "open", 0, 4, 4)["shape_candidate"] is None

    def test_inconsistent(self):
        assert classify("point", "point", 1, 0, 4)["shape"] == "inconsistent"


class TestEnergyBound:
    """W / 4pi >= -4 n (n + 1)(g - 1) - n deg_perp."""

    def test_torus(self):
        ok, slack = energy_bound_check(2 * np.pi ** 2, 1, 1, 0)
        assert ok
        assert np.isclose(slack, np.pi / 2)

    def test_sphere_violation(self):
        ok, slack = energy_bound_check(0.0, 1, 0, 0)
        assert not ok
        assert np.isclose(slack, -8.0)

    def test_no_transforms_leaves_positivity(self):
        ok, slack = energy_bound_check(3.0, 0, 0, 5)
        assert ok
        assert slack == pytest.approx(3.0 / (4 * np.pi))
        assert not energy_bound_check(-1e-3, 0, 1, 0)[0]


class TestNormalBundleDegree:
    def test_clifford(self, clifford_spectral):
        deg = normal_bundle_degree(clifford_spectral[0])
        assert deg["closed"]
        assert deg["nearest"] == 0
        assert deg["distance"] < 1e-3

    def test_patch(self, catenoid):
        deg = normal_bundle_degree(catenoid[0])
        assert not deg["closed"]
        assert deg["nearest"] is None
        with pytest.raises(NotClosed):
            normal_bundle_degree(catenoid[0], require_closed=True)


class TestBacklund:
    """Forward and backward lines."""

    def test_constant_line_has_no_variance(self):
        g = Grid.patch(8)
        v = np.zeros((8, 8, 4), dtype=complex)
        v[..., 0] = 1.0
        assert projective_variance(LineBundle.from_complex(v, g)) < 1e-20

    def test_constant_threshold_floor(self):
        assert constant_threshold(Grid.torus(20000)) == pytest.approx(1e-6)
        assert constant_threshold(Grid.torus(64)) == pytest.approx(100.0 / 64 ** 2)
        assert constant_threshold(Grid.patch(16)) > 1e-6

    def test_twistor_forward_vanishes(self):
        hp = hopf_fields(conformal_gauss_map(generate(SurfaceSpec("twistor", n=32))))
        with pytest.raises(HopfFieldZero) as info:
            backlund_forward(hp)
        assert info.value.side == "forward"

    def test_not_willmore(self, revolution_spectral):
        with pytest.raises(NotWillmore):
            willmore_sequence(revolution_spectral[0])


class TestSequence:
    @pytest.mark.slow
    def test_catenoid_ends_in_a_point(self):
        report = willmore_sequence(generate(SurfaceSpec("catenoid", n=48)), n_max=2)
        assert report["forward_end"] == "point"
        assert report["shape"] in ("(1)", "(2)")
        assert report["local_only"]
        assert report["steps"][0]["index"] <= 0
        assert "normal_bundle_degree" not in report

    @pytest.mark.slow
    def test_clifford_stays_open(self):
        report = willmore_sequence(generate(SurfaceSpec("clifford", n=32)))
        assert report["shape"] == "undetermined(4)"
        assert report["shape_candidate"] == 5
        assert report["normal_bundle_degree"]["nearest"] == 0
        bound = report["energy_bound"]
        assert bound["holds"]
        assert bound["n"] == report["verified_transforms"]
        assert bound["n"] == sum(1 for s in report["steps"] if s["index"] > 0 and s["status"] == "surface")
        assert bound["slack"] == pytest.approx(np.pi / 2, rel=0.05)
