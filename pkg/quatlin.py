"""
Quaternionic Linear Algebra

This module implements the algebra every other stage is built on: quaternions,
the right H-module H^2, quaternionic 2x2 matrices acting from the left, and the
identification (H^2, I) = C^4 where I is right multiplication by i.

Action:
All objects are plain numpy arrays so that whole grid fields are processed in
one vectorized call:
- Quaternion:   real array, last axis 4, components [w, x, y, z] of w + xi + yj + zk
- QuatVec2:     real array, last axes (2, 4)
- QuatMat2:     real array, last axes (2, 2, 4), entry [k, l] acts on component l
- ComplexVec4:  complex array, last axis 4, ordering (alpha1, beta1, alpha2, beta2)
                with psi_k = alpha_k + j beta_k
- complex 4x4:  complex array, last axes (4, 4), the left action of a QuatMat2

Connection:
Used by grid_calc (type splits), immersion (normals, lifts), meancurvsphere
(the w solve and S), flatfam (eigenprojections), mudarboux (a, b, T) and
sequences (kernel/image lines).

Process:
1. Quaternion products are written out componentwise (Hamilton rules).
2. q = alpha + j beta with alpha = w + ix and beta = y - iz. Left multiplication
   by p = a + jb is the block [[a, -conj(b)], [b, conj(a)]].
3. Right multiplication by j is the antilinear map (alpha, beta) -> (-conj(beta), conj(alpha)).
4. Inverses of quaternionic matrices are taken in the complex representation.
"""

import numpy as np
from typing import Tuple

from errors import NotComplexStructure, SingularMatrix

# --- Configuration ---
SINGULAR_RTOL = 1e-12          # |det C| < SINGULAR_RTOL * ||m||^4 counts as singular
COMPLEX_STRUCTURE_TOL = 1e-10  # ||s^2 + 1|| tolerance for eigenprojections
# ---------------------

ONE = np.array([1.0, 0.0, 0.0, 0.0])
QI = np.array([0.0, 1.0, 0.0, 0.0])
QJ = np.array([0.0, 0.0, 1.0, 0.0])
QK = np.array([0.0, 0.0, 0.0, 1.0])
E2 = np.zeros((2, 2, 4))
E2[0, 0, 0] = E2[1, 1, 0] = 1.0
I4 = np.eye(4, dtype=complex)


# ==========================================
# Quaternions
# ==========================================

def quat(w=0.0, x=0.0, y=0.0, z=0.0) -> np.ndarray:
    """Stacks (possibly array-valued) components into a quaternion array."""
    w, x, y, z = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (w, x, y, z)))
    return np.stack([w, x, y, z], axis=-1)


def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p0, p1, p2, p3 = (p[..., k] for k in range(4))
    q0, q1, q2, q3 = (q[..., k] for k in range(4))
    return np.stack([
        p0 * q0 - p1 * q1 - p2 * q2 - p3 * q3,
        p0 * q1 + p1 * q0 + p2 * q3 - p3 * q2,
        p0 * q2 - p1 * q3 + p2 * q0 + p3 * q1,
        p0 * q3 + p1 * q2 - p2 * q1 + p3 * q0,
    ], axis=-1)


def qconj(q: np.ndarray) -> np.ndarray:
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm(q: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(q * q, axis=-1))


def qinv(q: np.ndarray) -> np.ndarray:
    n2 = np.sum(q * q, axis=-1)
    if np.any(n2 == 0.0):
        raise SingularMatrix("inverse of the zero quaternion")
    return qconj(q) / n2[..., None]


def qimag(q: np.ndarray) -> np.ndarray:
    """Imaginary part (real component set to zero)."""
    out = np.array(q, dtype=float, copy=True)
    out[..., 0] = 0.0
    return out


def qunit(q: np.ndarray) -> np.ndarray:
    return q / qnorm(q)[..., None]


def left_matrix(p: np.ndarray) -> np.ndarray:
    """Real 4x4 matrix of q -> p q."""
    p0, p1, p2, p3 = (p[..., k] for k in range(4))
    rows = [
        [p0, -p1, -p2, -p3],
        [p1, p0, -p3, p2],
        [p2, p3, p0, -p1],
        [p3, -p2, p1, p0],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def right_matrix(p: np.ndarray) -> np.ndarray:
    """Real 4x4 matrix of q -> q p."""
    p0, p1, p2, p3 = (p[..., k] for k in range(4))
    rows = [
        [p0, -p1, -p2, -p3],
        [p1, p0, p3, -p2],
        [p2, -p3, p0, p1],
        [p3, p2, -p1, p0],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


# ==========================================
# H^2 and quaternionic 2x2 matrices
# ==========================================

def mat2_mul(m: np.ndarray, n: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(m.shape, n.shape))
    for k in range(2):
        for l in range(2):
            out[..., k, l, :] = qmul(m[..., k, 0, :], n[..., 0, l, :]) + qmul(m[..., k, 1, :], n[..., 1, l, :])
    return out


def mat2_apply(m: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Left action M psi of a QuatMat2 on a QuatVec2."""
    return np.stack([
        qmul(m[..., k, 0, :], psi[..., 0, :]) + qmul(m[..., k, 1, :], psi[..., 1, :])
        for k in range(2)
    ], axis=-2)


def vec2_rmul(psi: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Right scalar multiplication psi * lam."""
    return qmul(psi, lam[..., None, :])


def mat2_norm(m: np.ndarray) -> np.ndarray:
    """Quaternionic Frobenius norm."""
    return np.sqrt(np.sum(m * m, axis=(-3, -2, -1)))


def real_trace(m: np.ndarray) -> np.ndarray:
    """Re(m11) + Re(m22) of a QuatMat2."""
    return m[..., 0, 0, 0] + m[..., 1, 1, 0]


def ctrace(c: np.ndarray) -> np.ndarray:
    """Real trace of a quaternionic endomorphism given in its complex 4x4 representation."""
    return 0.5 * np.real(np.trace(c, axis1=-2, axis2=-1))


# ==========================================
# Complex identification (H^2, I) = C^4
# ==========================================

def _alpha_beta(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return q[..., 0] + 1j * q[..., 1], q[..., 2] - 1j * q[..., 3]


def complexify(psi: np.ndarray) -> np.ndarray:
    """QuatVec2 (..., 2, 4) -> ComplexVec4 (..., 4)."""
    a1, b1 = _alpha_beta(psi[..., 0, :])
    a2, b2 = _alpha_beta(psi[..., 1, :])
    return np.stack([a1, b1, a2, b2], axis=-1)


def decomplexify(v: np.ndarray) -> np.ndarray:
    """ComplexVec4 (..., 4) -> QuatVec2 (..., 2, 4)."""
    comps = []
    for k in range(2):
        a, b = v[..., 2 * k], v[..., 2 * k + 1]
        comps.append(np.stack([a.real, a.imag, b.real, -b.imag], axis=-1))
    return np.stack(comps, axis=-2)


def left_block(p: np.ndarray) -> np.ndarray:
    """Complex 2x2 matrix of left multiplication by the quaternion p."""
    a, b = _alpha_beta(p)
    return np.stack([
        np.stack([a, -np.conj(b)], axis=-1),
        np.stack([b, np.conj(a)], axis=-1),
    ], axis=-2)


def complexify_mat(m: np.ndarray) -> np.ndarray:
    """QuatMat2 (..., 2, 2, 4) -> complex 4x4 (..., 4, 4)."""
    out = np.zeros(m.shape[:-3] + (4, 4), dtype=complex)
    for k in range(2):
        for l in range(2):
            out[..., 2 * k:2 * k + 2, 2 * l:2 * l + 2] = left_block(m[..., k, l, :])
    return out


def decomplexify_mat(c: np.ndarray) -> np.ndarray:
    """Inverse of complexify_mat; reads the (even, even) and (odd, even) entries of each block."""
    out = np.zeros(c.shape[:-2] + (2, 2, 4))
    for k in range(2):
        for l in range(2):
            a = c[..., 2 * k, 2 * l]
            b = c[..., 2 * k + 1, 2 * l]
            out[..., k, l, :] = np.stack([a.real, a.imag, b.real, -b.imag], axis=-1)
    return out


def right_j(v: np.ndarray) -> np.ndarray:
    """Right multiplication by j on ComplexVec4 (antilinear)."""
    out = np.empty_like(v, dtype=complex)
    out[..., 0::2] = -np.conj(v[..., 1::2])
    out[..., 1::2] = np.conj(v[..., 0::2])
    return out


def quaternionic_defect(c: np.ndarray) -> np.ndarray:
    """
    How far a complex 4x4 matrix is from commuting with right multiplication by j.
    Zero exactly for matrices coming from a QuatMat2.
    """
    d1 = np.abs(c[..., 1::2, 1::2] - np.conj(c[..., 0::2, 0::2]))
    d2 = np.abs(c[..., 0::2, 1::2] + np.conj(c[..., 1::2, 0::2]))
    return np.maximum(d1.max(axis=(-2, -1)), d2.max(axis=(-2, -1)))


def cnorm(c: np.ndarray) -> np.ndarray:
    """Norm of a quaternionic endomorphism from its complex representation (equals mat2_norm)."""
    return np.sqrt(0.5 * np.sum(np.abs(c) ** 2, axis=(-2, -1)))


def vnorm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))


def _first_bad(mask: np.ndarray):
    idx = np.argwhere(mask)
    if idx.size == 0 or mask.ndim < 2:
        return None
    return tuple(idx[0][:2])


def cinv(c: np.ndarray, what: str = "matrix", error=SingularMatrix) -> np.ndarray:
    """
    Batched inverse of quaternionic endomorphisms in complex representation.
    Raises `error` with the first offending vertex when |det| < 1e-12 ||m||^4.
    """
    det = np.abs(np.linalg.det(c))
    scale = cnorm(c) ** 4
    bad = det <= SINGULAR_RTOL * scale
    if np.any(bad):
        raise error(f"{what} is singular", vertex=_first_bad(np.atleast_1d(bad)))
    return np.linalg.inv(c)


def mat2_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a QuatMat2 through its complex 4x4 representation."""
    return decomplexify_mat(cinv(complexify_mat(m)))


# ==========================================
# Complex structures and lines
# ==========================================

def eigenprojections(s: np.ndarray, tol: float = COMPLEX_STRUCTURE_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Projections onto the +i and -i eigenspaces of a complex structure S.

    Accepts a QuatMat2 (real array) or its complex 4x4 representation. Returns
    (pi_E, pi_Eperp) = (1/2 (1 - iS), 1/2 (1 + iS)).
    """
    c = s if np.iscomplexobj(s) else complexify_mat(s)
    defect = cnorm(c @ c + I4)
    if np.any(defect > tol):
        raise NotComplexStructure(f"S^2 + 1 has norm {float(np.max(defect)):.3e}",
                                  vertex=_first_bad(np.atleast_1d(defect > tol)))
    return 0.5 * (I4 - 1j * c), 0.5 * (I4 + 1j * c)


def line_projector(v: np.ndarray) -> np.ndarray:
    """Orthogonal projector of C^4 onto the quaternionic line span{v, vj}."""
    w = right_j(v)
    n2 = np.sum(np.abs(v) ** 2, axis=-1)[..., None, None]
    return (v[..., :, None] * np.conj(v[..., None, :]) + w[..., :, None] * np.conj(w[..., None, :])) / n2


def line_distance(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Relative distance |(1 - P) x| / |x| of x from the line spanned by v (0 where x = 0)."""
    p = line_projector(v)
    off = x - np.einsum("...ij,...j->...i", p, x)
    nx = vnorm(x)
    return np.where(nx > 0, vnorm(off) / np.where(nx > 0, nx, 1.0), 0.0)
