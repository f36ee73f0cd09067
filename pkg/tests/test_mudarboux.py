"""Tests for the mu-Darboux transform on the cut-open Clifford torus."""

import numpy as np
import pytest

from convergence_evaluator import observed_order
from errors import TSingular
from flatfam import ConnectionFamily, parallel_sections
from immersion import SurfaceSpec, generate
from meancurvsphere import analyze
from mudarboux import (ALGEBRAIC_TOL, basis_independence, build_abT, darboux_report,
                       frame_matrix, pointwise_darboux_check, resolve_convention, transform_L,
                       transform_S)
from quatlin import right_j


@pytest.fixture(scope="module")
def family(clifford_patch):
    _, sf, hp, _ = clifford_patch
    return ConnectionFamily.from_hopf(sf, hp)


@pytest.fixture(scope="module")
def tfield(clifford_patch, family):
    _, sf, _, _ = clifford_patch
    return build_abT(sf, parallel_sections(family, 2.0))


class TestBuildABT:
    """a, b and T from the parallel frame."""

    def test_frame_columns(self):
        p1 = np.array([1.0, 2j, 0.0, 0.5])
        p2 = np.array([0.0, 1.0, 1j, 0.0])
        G = frame_matrix(p1, p2)
        assert np.allclose(G[:, 0], p1)
        assert np.allclose(G[:, 1], right_j(p1))
        assert np.allclose(G[:, 3], right_j(p2))

    def test_pythagoras_and_commutator(self, tfield):
        assert tfield.residuals["a2_plus_b2"] < 1e-8
        assert tfield.residuals["ab_commutator"] < 1e-8

    def test_mu_one_is_singular(self, clifford_patch, family):
        _, sf, _, _ = clifford_patch
        with pytest.raises(TSingular):
            build_abT(sf, parallel_sections(family, 1.0))


class TestTransformS:
    """S_hat = T^-1 S T and its algebraic identities."""

    def test_algebraic(self, clifford_patch, tfield):
        _, sf, hp, _ = clifford_patch
        _, _, rep = transform_S(tfield, sf, hp)
        assert rep["eq11_hatS"] < 1e-8
        assert rep["hatS_squared"] < 1e-6

    @pytest.mark.parametrize("theta", [np.pi / 3, np.pi / 2, np.pi])
    def test_unit_circle_is_trivial(self, clifford_patch, family, theta):
        """mu = e^(i theta) gives a = cos theta, b = sin theta and S_hat = S."""
        _, sf, hp, _ = clifford_patch
        tf = build_abT(sf, parallel_sections(family, np.exp(1j * theta)))
        _, _, rep = transform_S(tf, sf, hp)
        assert rep["hatS_minus_S"] < 1e-10

    def test_complex_mu_selects_inverse(self, clifford_patch, family):
        _, sf, hp, _ = clifford_patch
        tf = build_abT(sf, parallel_sections(family, 1 + 1j))
        res = resolve_convention(tf, sf, hp, sf.line)
        assert res["winner"] == "inverse"
        assert res["inverse"]["eq11_hatS"] < ALGEBRAIC_TOL
        assert res["direct"]["eq11_hatS"] > ALGEBRAIC_TOL
        assert res["inverse"]["hatS_stability"] < 1e-8

    def test_real_mu_cannot_separate(self, clifford_patch, tfield):
        """For real mu both conjugations give the same S_hat."""
        _, sf, hp, _ = clifford_patch
        res = resolve_convention(tfield, sf, hp, sf.line)
        assert res["winner"] == "ambiguous"
        assert abs(res["inverse"]["eq11_hatS"] - res["direct"]["eq11_hatS"]) < 1e-10
        for conv in ("inverse", "direct"):
            assert res[conv]["hatS_stability"] < 1e-8

    def test_unknown_convention(self, clifford_patch, tfield):
        _, sf, hp, _ = clifford_patch
        with pytest.raises(ValueError):
            transform_S(tfield, sf, hp, convention="sideways")

    def test_basis_independence(self, clifford_patch, family):
        _, sf, _, _ = clifford_patch
        assert basis_independence(family, sf, 1 + 1j) < 1e-8


class TestTransformL:
    """L_hat = T (a - 1)^-1 L."""

    def test_unit_normalized(self, clifford_patch, tfield):
        _, sf, hp, _ = clifford_patch
        sf_hat, hp_hat, _ = transform_S(tfield, sf, hp)
        L_hat, rep = transform_L(tfield, sf.line, sf_hat, hp_hat)
        assert np.allclose(np.sum(L_hat.psi ** 2, axis=(-2, -1)), 1.0)
        assert rep["points_at_infinity"] >= 0
        assert rep["eq12_incidence"] == max(rep["eq12_imA"], rep["eq12_kerQ"])

    def test_darboux_check_is_finite(self, clifford_patch, family, tfield):
        _, sf, hp, _ = clifford_patch
        out = pointwise_darboux_check(parallel_sections(family, 2.0), sf.line, tfield, hp)
        assert set(out) == {"darboux_residual", "darboux_in_L"}
        assert all(np.isfinite(v) and v >= 0 for v in out.values())


class TestReport:
    """darboux_report layout."""

    def test_keys(self, clifford_patch):
        _, sf, hp, _ = clifford_patch
        report, sf_hat, L_hat = darboux_report(sf, hp, 0.5 - 2j, check_basis=False)
        assert report["mu"] == [0.5, -2.0]
        assert report["basis_independence"] is None
        for key in ("eq11_hatS", "eq10_riccati", "eq10_riccati_printed", "eq9_A_residual",
                    "eq9_Q_residual", "hatS_stability", "eq12_incidence", "darboux_residual",
                    "points_at_infinity", "convention", "path_independence_residual"):
            assert key in report
        assert sf_hat.line is L_hat
        assert L_hat.psi.shape == sf.line.psi.shape


class TestRiccatiRefinement:
    """dT = 2 *Q (a - 1) + T *A T is a discretization-limited identity."""

    @pytest.mark.slow
    def test_order(self):
        sizes, values = (24, 48), []
        for n in sizes:
            sf, hp, _ = analyze(generate(SurfaceSpec("clifford", n=n, patch=True)))
            frame = parallel_sections(ConnectionFamily.from_hopf(sf, hp), 2.0)
            _, _, rep = transform_S(build_abT(sf, frame), sf, hp)
            values.append(rep["eq10_riccati"])
        assert observed_order(sizes, values) >= 1.5


REFINED_KEYS = ("eq9_A_residual", "eq9_Q_residual", "eq12_incidence", "hatS_harmonicity",
                "darboux_residual")


@pytest.fixture(scope="module")
def refined_reports():
    """darboux_report on the Clifford square at 24 and 48 points for three values of mu."""
    out = {}
    for n in (24, 48):
        sf, hp, _ = analyze(generate(SurfaceSpec("clifford", n=n, patch=True)))
        for mu in (2.0, 1 + 1j, 0.3):
            out[(n, mu)] = darboux_report(sf, hp, mu, check_basis=False)[0]
    return out


class TestResidualRefinement:
    """Every discretization-limited Darboux identity converges at second order."""

    @pytest.mark.slow
    @pytest.mark.parametrize("mu", [2.0, 1 + 1j, 0.3])
    @pytest.mark.parametrize("key", REFINED_KEYS)
    def test_order(self, refined_reports, mu, key):
        values = [refined_reports[(n, mu)][key] for n in (24, 48)]
        assert observed_order((24, 48), values) >= 1.5

    @pytest.mark.slow
    def test_real_mu_transform_is_willmore(self):
        gaps, harm = [], []
        for n in (32, 64):
            sf, hp, _ = analyze(generate(SurfaceSpec("clifford", n=n, patch=True)))
            rep = darboux_report(sf, hp, 2.0, check_basis=False)[0]
            assert rep["hat_S_gap"] is not None
            gaps.append(rep["hat_S_gap"])
            harm.append(rep["hat_willmore_residual"])
        assert gaps[1] < gaps[0] / 2
        assert harm[1] < harm[0] / 2
        assert gaps[1] < 0.02

    def test_complex_mu_skips_willmore_check(self, clifford_patch):
        _, sf, hp, _ = clifford_patch
        rep = darboux_report(sf, hp, 1 + 1j, check_basis=False)[0]
        assert rep["hat_S_gap"] is None
        assert rep["hat_willmore_residual"] is None
