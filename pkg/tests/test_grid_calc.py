"""Tests for grids, discrete exterior calculus and field serialization."""

import numpy as np
import pandas as pd
import pytest

from errors import BadSpec, GridTooSmall, NotComplexStructure
from grid_calc import (Grid, OneForm, d_field, d_oneform, fields_frame, integrate, partial,
                       save_fields_csv, star, sup, type_split_I, type_split_S, wedge_trace)
from quatlin import I4, QI, complexify_mat


class TestGrid:
    """Construction, geometry and validation."""

    def test_torus(self):
        g = Grid.torus(16)
        assert g.shape == (16, 16)
        assert np.isclose(g.hx, 2 * np.pi / 16)
        assert np.allclose(g.extent, (2 * np.pi, 2 * np.pi))
        assert np.isclose(g.chart_scale, 1.0)
        assert np.isclose(g.discretization_floor, 1 / 256)
        assert g.interior_mask().all()
        assert g.center_index() == (0, 0)

    def test_patch(self):
        g = Grid.patch(9)
        assert np.isclose(g.hx, 0.25)
        assert np.allclose(g.extent, (2.0, 2.0))
        X, Y = g.coords()
        assert np.isclose(X[0, 0], -1.0) and np.isclose(X[-1, 0], 1.0)
        assert np.isclose(Y[0, -1], 1.0)
        assert g.interior_mask().sum() == 25
        assert g.center_index() == (4, 4)

    def test_as_patch(self):
        g = Grid.torus(12, stencil="spectral").as_patch()
        assert g.topology == "patch"
        assert not g.periodic_x and not g.periodic_y
        assert g.stencil == "central"

    def test_too_small(self):
        with pytest.raises(GridTooSmall):
            Grid.torus(4)
        with pytest.raises(GridTooSmall):
            Grid.patch(8, 5)

    def test_bad_stencil(self):
        with pytest.raises(BadSpec):
            Grid.torus(16, stencil="upwind")


class TestDerivatives:
    """Central, spectral and one-sided stencils."""

    def test_central_second_order(self):
        errs = []
        for n in (32, 64):
            g = Grid.torus(n)
            X, _ = g.coords()
            errs.append(np.max(np.abs(partial(np.sin(X), g, 0) - np.cos(X))))
        assert errs[1] < errs[0] / 3.5

    def test_spectral_exact(self):
        g = Grid.torus(32, stencil="spectral")
        X, Y = g.coords()
        f = np.sin(2 * X) * np.cos(Y)
        assert np.allclose(partial(f, g, 0), 2 * np.cos(2 * X) * np.cos(Y), atol=1e-10)
        assert np.allclose(partial(f, g, 1), -np.sin(2 * X) * np.sin(Y), atol=1e-10)

    def test_patch_quadratic_exact(self):
        g = Grid.patch(17)
        X, Y = g.coords()
        df = d_field(X ** 2 + 3 * X * Y, g)
        assert np.allclose(df.x, 2 * X + 3 * Y)
        assert np.allclose(df.y, 3 * X)

    @pytest.mark.parametrize("grid", [Grid.torus(24), Grid.patch(24), Grid.torus(24, stencil="spectral")])
    def test_d_squared_vanishes(self, grid):
        X, Y = grid.coords()
        f = np.exp(np.cos(X) * np.sin(Y))
        assert np.max(np.abs(d_oneform(d_field(f, grid), grid))) < 1e-10

    def test_star_squared(self):
        w = OneForm(np.arange(4.0), np.arange(4.0) + 10)
        ss = star(star(w))
        assert np.allclose(ss.x, -w.x) and np.allclose(ss.y, -w.y)


class TestTypeSplits:
    """Splits with respect to S and to right multiplication by i."""

    def test_split_S(self):
        rng = np.random.default_rng(3)
        S = complexify_mat(np.array([[QI, np.zeros(4)], [np.zeros(4), QI]]))
        w = OneForm(rng.normal(size=(4, 4)) + 0j, rng.normal(size=(4, 4)) + 0j)
        p, q = type_split_S(w, S)
        assert np.allclose((p + q).x, w.x)
        assert np.allclose(star(p).x, S @ p.x) and np.allclose(star(p).y, S @ p.y)
        assert np.allclose(star(q).x, -S @ q.x)

    def test_split_S_rejects(self):
        w = OneForm(np.zeros((4, 4)), np.zeros((4, 4)))
        with pytest.raises(NotComplexStructure):
            type_split_S(w, I4)

    def test_split_I(self):
        rng = np.random.default_rng(4)
        w = OneForm(rng.normal(size=(4, 4)) + 0j, rng.normal(size=(4, 4)) + 0j)
        a, b = type_split_I(w)
        assert np.allclose(star(a).x, 1j * a.x)
        assert np.allclose(star(b).x, -1j * b.x)

    def test_wedge_trace_antisymmetric(self):
        rng = np.random.default_rng(5)
        a = OneForm(*rng.normal(size=(2, 4, 4)))
        b = OneForm(*rng.normal(size=(2, 4, 4)))
        assert np.isclose(wedge_trace(a, b), -wedge_trace(b, a))


class TestIntegration:
    """Quadrature and statistics."""

    def test_area(self):
        assert np.isclose(integrate(np.ones((16, 16)), Grid.torus(16)), 4 * np.pi ** 2)
        assert np.isclose(integrate(np.ones((9, 9)), Grid.patch(9)), 4.0)

    def test_mask(self):
        g = Grid.patch(9)
        assert integrate(np.ones((9, 9)), g, mask=g.interior_mask()) < 4.0

    def test_sup_ignores_border(self):
        g = Grid.patch(11)
        v = np.zeros((11, 11))
        v[0, 0] = 100.0
        v[5, 5] = 1.0
        assert sup(v, g) == 1.0


class TestSerialization:
    """Per-vertex CSV export through pandas."""

    def test_frame_columns(self):
        g = Grid.patch(9)
        frame = fields_frame(g, {"u": np.ones((9, 9)), "v": np.ones((9, 9, 2)) * (1 + 2j)})
        assert list(frame.columns) == ["x", "y", "u_0", "v_0_re", "v_0_im", "v_1_re", "v_1_im"]
        assert len(frame) == 81
        assert np.allclose(frame["v_1_im"], 2.0)

    def test_csv(self, tmp_path):
        g = Grid.torus(8)
        path = tmp_path / "fields.csv"
        save_fields_csv(path, g, {"u": np.arange(64.0).reshape(8, 8)})
        back = pd.read_csv(path)
        assert np.allclose(back["u_0"], np.arange(64.0))
