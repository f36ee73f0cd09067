"""Tests for quaternionic linear algebra and the complex identification."""

import numpy as np
import pytest

from errors import NotComplexStructure, SingularMatrix
from quatlin import (E2, I4, ONE, QI, QJ, QK, cinv, cnorm, complexify, complexify_mat, ctrace,
                     decomplexify, decomplexify_mat, eigenprojections, left_matrix, line_distance,
                     line_projector, mat2_apply, mat2_inverse, mat2_mul, mat2_norm, qconj, qinv,
                     qmul, qnorm, quaternionic_defect, real_trace, right_j, right_matrix, vec2_rmul)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


class TestQuaternions:
    """Hamilton product and friends."""

    def test_hamilton_rules(self):
        assert np.allclose(qmul(QI, QJ), QK)
        assert np.allclose(qmul(QJ, QK), QI)
        assert np.allclose(qmul(QK, QI), QJ)
        assert np.allclose(qmul(QJ, QI), -QK)
        assert np.allclose(qmul(QI, QI), -ONE)

    def test_associative(self, rng):
        p, q, r = rng.normal(size=(3, 10, 4))
        assert np.allclose(qmul(qmul(p, q), r), qmul(p, qmul(q, r)))

    def test_norm_multiplicative(self, rng):
        p, q = rng.normal(size=(2, 10, 4))
        assert np.allclose(qnorm(qmul(p, q)), qnorm(p) * qnorm(q))

    def test_inverse(self, rng):
        q = rng.normal(size=(5, 4))
        assert np.allclose(qmul(q, qinv(q)), np.broadcast_to(ONE, q.shape))
        assert np.allclose(qconj(qconj(q)), q)

    def test_inverse_of_zero(self):
        with pytest.raises(SingularMatrix):
            qinv(np.zeros(4))

    def test_left_right_matrices(self, rng):
        p, q = rng.normal(size=(2, 4))
        assert np.allclose(left_matrix(p) @ q, qmul(p, q))
        assert np.allclose(right_matrix(p) @ q, qmul(q, p))


class TestComplexRepresentation:
    """(H^2, right i) = C^4 and the left action of quaternionic matrices."""

    def test_vector_round_trip(self, rng):
        psi = rng.normal(size=(6, 2, 4))
        assert np.allclose(decomplexify(complexify(psi)), psi)

    def test_matrix_round_trip(self, rng):
        m = rng.normal(size=(6, 2, 2, 4))
        assert np.allclose(decomplexify_mat(complexify_mat(m)), m)

    def test_left_action_matches(self, rng):
        m = rng.normal(size=(5, 2, 2, 4))
        psi = rng.normal(size=(5, 2, 4))
        lhs = complexify(mat2_apply(m, psi))
        rhs = np.einsum("...ij,...j->...i", complexify_mat(m), complexify(psi))
        assert np.allclose(lhs, rhs)

    def test_product_is_homomorphism(self, rng):
        m, n = rng.normal(size=(2, 4, 2, 2, 4))
        assert np.allclose(complexify_mat(mat2_mul(m, n)), complexify_mat(m) @ complexify_mat(n))

    def test_right_i_is_scalar_i(self, rng):
        psi = rng.normal(size=(4, 2, 4))
        assert np.allclose(complexify(vec2_rmul(psi, QI)), 1j * complexify(psi))

    def test_right_j(self, rng):
        psi = rng.normal(size=(4, 2, 4))
        assert np.allclose(complexify(vec2_rmul(psi, QJ)), right_j(complexify(psi)))
        assert np.allclose(right_j(right_j(complexify(psi))), -complexify(psi))

    def test_quaternionic_defect(self, rng):
        c = complexify_mat(rng.normal(size=(3, 2, 2, 4)))
        assert np.all(quaternionic_defect(c) < 1e-14)
        assert np.all(quaternionic_defect(c + 1j * I4) > 0.5)

    def test_norm_and_trace(self, rng):
        m = rng.normal(size=(4, 2, 2, 4))
        c = complexify_mat(m)
        assert np.allclose(cnorm(c), mat2_norm(m))
        assert np.allclose(ctrace(c), real_trace(m))


class TestInverses:
    """Batched inverses with vertex-located failures."""

    def test_mat2_inverse(self, rng):
        m = rng.normal(size=(5, 2, 2, 4))
        assert np.allclose(mat2_mul(m, mat2_inverse(m)), np.broadcast_to(E2, m.shape))

    def test_singular_vertex_reported(self):
        c = np.broadcast_to(I4, (3, 3, 4, 4)).copy()
        c[1, 2] = 0.0
        with pytest.raises(SingularMatrix) as info:
            cinv(c, "frame")
        assert info.value.vertex == (1, 2)
        assert "frame" in str(info.value)

    def test_custom_error_class(self):
        with pytest.raises(NotComplexStructure):
            cinv(np.zeros((4, 4), dtype=complex), error=NotComplexStructure)


class TestComplexStructures:
    """Eigenprojections of S and quaternionic line projectors."""

    def test_eigenprojections(self):
        s = np.zeros((2, 2, 4))
        s[0, 0] = s[1, 1] = QI
        pe, pp = eigenprojections(s)
        assert np.allclose(pe + pp, I4)
        assert np.allclose(pe @ pe, pe)
        assert np.allclose(pe @ pp, 0.0)

    def test_not_a_complex_structure(self):
        with pytest.raises(NotComplexStructure):
            eigenprojections(E2)

    def test_line_projector(self, rng):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        P = line_projector(v)
        assert np.allclose(P @ P, P)
        assert np.allclose(P @ v, v)
        assert np.allclose(P @ right_j(v), right_j(v))
        assert np.isclose(np.trace(P).real, 2.0)

    def test_line_distance(self, rng):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert line_distance((2 - 3j) * v + right_j(v), v) < 1e-12
        assert line_distance(np.zeros(4, dtype=complex), v) == 0.0
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        w = w - line_projector(v) @ w
        assert np.isclose(line_distance(w, v), 1.0)
