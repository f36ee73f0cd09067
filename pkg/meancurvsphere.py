"""
Mean Curvature Sphere Congruence and Hopf Fields

This module builds the conformal Gauss map S of a conformal immersion and
everything derived from it: the Hopf fields A and Q, the Willmore energy (in the
Hopf-field form and in the classical |H|^2 - K - K_perp form), the harmonicity
residual d*A, and the d_+ / d_- decomposition of the trivial connection.

Action:
1. In the affine frame G = [[1, f], [0, 1]] the mean curvature sphere reads
   S = G [[N, 0], [w, -R]] G^-1. The off-diagonal w is found per vertex from two
   real-linear conditions: w N = R w (which makes S^2 = -1) and the condition
   L in ker Q, i.e. *(dR + w df) = -R (dR + w df).
2. dS is differentiated with the grid stencils and projected onto the tangent
   space of complex structures, 1/2 (dS + S dS S).
3. A = 1/2 (*dS)' and Q = -1/2 (*dS)'' with respect to S.

Connection:
Consumes immersion.AffineImmersion and NormalPair; produces SField and
HopfFieldPair for flatfam, mudarboux and sequences.

Inputs:
- AffineImmersion (conformal chart), optional NormalPair

Outputs:
- SField, HopfFieldPair, analysis report dictionaries

Process:
All fields are carried as complex 4x4 arrays (the complex representation of
quaternionic endomorphisms), so products are batched matmuls.
"""

import time
import numpy as np
from dataclasses import dataclass, field
from typing import Dict, Optional

from errors import ConformalityTooPoor, NotComplexStructure, WSolveSingular
from grid_calc import (Grid, OneForm, d_field, d_oneform, integrate, matvec, partial,
                       star, sup, sup_form, type_split_S, wedge_trace)
from immersion import AffineImmersion, LineBundle, NormalPair, lift, normals
from quatlin import (I4, cnorm, complexify, complexify_mat, left_matrix, qinv, qmul,
                     right_matrix, vec2_rmul, vnorm)

# --- Configuration ---
CONFORMALITY_MAX = 1e-2      # normals residual accepted before building S
W_SINGULAR_RTOL = 1e-12      # s_min / s_max of the w system
S_SQUARE_TOL = 1e-8
TINY = 1e-300
# ---------------------


@dataclass
class SField:
    """
    Conformal Gauss map.

    Attributes:
        S: complex 4x4 field (nx, ny, 4, 4), S^2 = -1
        grid: Sampling grid
        w: Quaternion field of the affine-frame off-diagonal entry (None if S was built otherwise)
        line: The line bundle L that S envelopes, if known
    """
    S: np.ndarray
    grid: Grid
    w: Optional[np.ndarray] = None
    line: Optional[LineBundle] = None
    right_normal: Optional[np.ndarray] = None


@dataclass
class HopfFieldPair:
    """
    Hopf fields of a complex structure S.

    Attributes:
        A, Q: OneForms of complex 4x4 fields
        dS: The projected derivative of S they were built from
        grid: Sampling grid
    """
    A: OneForm
    Q: OneForm
    dS: OneForm
    grid: Grid
    residuals: Dict[str, float] = field(default_factory=dict)


# ==========================================
# Conformal Gauss map
# ==========================================

def solve_w(imm: AffineImmersion, nr: NormalPair) -> np.ndarray:
    """
    Pointwise solve for the affine-frame entry w of S.

    The solution space of w N = R w (real dimension 2) is taken from the SVD of
    its 4x4 matrix; within it the ker Q condition
        w f_y + R w f_x = -(R_y + R R_x)
    is solved in the least-squares sense.
    """
    grid = imm.grid
    df = d_field(imm.f, grid)
    dR = d_field(nr.R, grid)
    N, R = nr.N, nr.R

    m_sq = right_matrix(N) - left_matrix(R)
    _, _, vt = np.linalg.svd(m_sq)
    basis = np.swapaxes(vt[..., 2:, :], -1, -2)          # (nx, ny, 4, 2)

    m_q = right_matrix(df.y) + left_matrix(R) @ right_matrix(df.x)
    rhs = -(dR.y + qmul(R, dR.x))
    m_red = m_q @ basis
    u, s, vt2 = np.linalg.svd(m_red, full_matrices=False)
    ratio = s[..., -1] / np.maximum(s[..., 0], TINY)
    if np.any(ratio < W_SINGULAR_RTOL):
        bad = np.argwhere(ratio < W_SINGULAR_RTOL)[0]
        raise WSolveSingular("pointwise w system is degenerate", vertex=tuple(bad))
    c = np.einsum("...ji,...j->...i", u, rhs) / s
    c = np.einsum("...ji,...j->...i", vt2, c)
    return matvec(basis, c)


def w_closed_form(imm: AffineImmersion, nr: NormalPair) -> np.ndarray:
    """w = 1/2 (R R_y - R_x) f_x^-1, exact for conformal data; for surfaces in Im H it is the mean curvature."""
    df = d_field(imm.f, imm.grid)
    dR = d_field(nr.R, imm.grid)
    return qmul(0.5 * (qmul(nr.R, dR.y) - dR.x), qinv(df.x))


def assemble_S(f: np.ndarray, N: np.ndarray, R: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Complex representation of G [[N, 0], [w, -R]] G^-1 with G = [[1, f], [0, 1]]."""
    fw = qmul(f, w)
    m = np.zeros(f.shape[:-1] + (2, 2, 4))
    m[..., 0, 0, :] = N + fw
    m[..., 0, 1, :] = -qmul(N, f) - qmul(fw, f) - qmul(f, R)
    m[..., 1, 0, :] = w
    m[..., 1, 1, :] = -qmul(w, f) - R
    return complexify_mat(m)


def conformal_gauss_map(imm: AffineImmersion, nr: Optional[NormalPair] = None,
                        conformality_max: float = CONFORMALITY_MAX) -> SField:
    """Mean curvature sphere congruence of a conformal immersion."""
    if nr is None:
        nr = normals(imm)
    if nr.conformality_residual > conformality_max:
        raise ConformalityTooPoor(
            f"conformality residual {nr.conformality_residual:.3e} exceeds {conformality_max:.1e}")
    w = solve_w(imm, nr)
    S = assemble_S(imm.f, nr.N, nr.R, w)
    defect = cnorm(S @ S + I4)
    if np.any(defect > S_SQUARE_TOL * np.maximum(cnorm(S) ** 2, 1.0)):
        bad = np.argwhere(defect > S_SQUARE_TOL * np.maximum(cnorm(S) ** 2, 1.0))[0]
        raise NotComplexStructure("assembled S does not square to -1", vertex=tuple(bad))
    return SField(S, imm.grid, w=w, line=lift(imm), right_normal=nr.R)


def d_complex_structure(S: np.ndarray, grid: Grid) -> OneForm:
    """Derivative of S projected onto the maps anticommuting with S."""
    dS = d_field(S, grid)
    return OneForm(0.5 * (dS.x + S @ dS.x @ S), 0.5 * (dS.y + S @ dS.y @ S))


def hopf_fields(sf: SField) -> HopfFieldPair:
    """A = 1/2 (*dS)', Q = -1/2 (*dS)''."""
    dS = d_complex_structure(sf.S, sf.grid)
    first, second = type_split_S(star(dS), sf.S)
    return HopfFieldPair(0.5 * first, -0.5 * second, dS, sf.grid)


# ==========================================
# Energies and residuals
# ==========================================

def willmore_energy(hp: HopfFieldPair, mask: Optional[np.ndarray] = None) -> float:
    """W = 2 integral <A ^ *A> with trapezoid weights over M, or over `mask` only."""
    density = wedge_trace(hp.A, star(hp.A))
    return 2.0 * integrate(density, hp.grid, mask)


def classical_curvatures(imm: AffineImmersion) -> Dict[str, np.ndarray]:
    """
    |H|^2, K, K_perp and the conformal factor e^{2u} from the second fundamental
    form of f in R^4, computed with the grid stencils.

    The normal frame comes from the normal projector and is oriented so that
    (e1, e2, n1, n2) is positive; with that choice complex curves for right
    multiplication by i have K + K_perp = 0.
    """
    grid = imm.grid
    fx = partial(imm.f, grid, 0)
    fy = partial(imm.f, grid, 1)
    fxx = partial(fx, grid, 0)
    fyy = partial(fy, grid, 1)
    fxy = 0.5 * (partial(fx, grid, 1) + partial(fy, grid, 0))
    e2u = 0.5 * (np.sum(fx * fx, -1) + np.sum(fy * fy, -1))

    F = np.stack([fx, fy], axis=-1)                           # (..., 4, 2)
    gram = np.swapaxes(F, -1, -2) @ F
    tangent = F @ np.linalg.inv(gram) @ np.swapaxes(F, -1, -2)
    normal_proj = np.eye(4) - tangent
    _, vecs = np.linalg.eigh(normal_proj)
    n1, n2 = vecs[..., :, 2], vecs[..., :, 3]

    e1 = fx / np.linalg.norm(fx, axis=-1)[..., None]
    e2 = fy - np.sum(fy * e1, -1)[..., None] * e1
    e2 = e2 / np.linalg.norm(e2, axis=-1)[..., None]
    orient = np.linalg.det(np.stack([e1, e2, n1, n2], axis=-1))
    n2 = np.where((orient < 0)[..., None], -n2, n2)

    def comp(v, n):
        return np.sum(v * n, -1) / e2u

    h1 = [comp(fxx, n1), comp(fxy, n1), comp(fyy, n1)]
    h2 = [comp(fxx, n2), comp(fxy, n2), comp(fyy, n2)]
    H2 = (0.5 * (h1[0] + h1[2])) ** 2 + (0.5 * (h2[0] + h2[2])) ** 2
    K = (h1[0] * h1[2] - h1[1] ** 2) + (h2[0] * h2[2] - h2[1] ** 2)
    Kperp = (h2[0] * h1[1] + h2[1] * h1[2]) - (h1[0] * h2[1] + h1[1] * h2[2])
    return {"H2": H2, "K": K, "Kperp": Kperp, "e2u": e2u}


def willmore_energy_classical(imm: AffineImmersion, mask: Optional[np.ndarray] = None) -> float:
    """W = integral (|H|^2 - K - K_perp) dA over M, or over `mask` only."""
    c = classical_curvatures(imm)
    density = (c["H2"] - c["K"] - c["Kperp"]) * c["e2u"]
    return integrate(density, imm.grid, mask)


def harmonicity_residual(hp: HopfFieldPair) -> Dict[str, float]:
    """
    chart_scale * sup|d*A| / max(sup|A|, sup|Q|), and the same for d*Q.
    Zero Hopf fields give zero residuals.
    """
    grid = hp.grid
    scale = max(sup_form(hp.A, grid), sup_form(hp.Q, grid))
    if scale < TINY:
        return {"residual": 0.0, "residual_Q": 0.0}
    dsa = sup(cnorm(d_oneform(star(hp.A), grid)), grid)
    dsq = sup(cnorm(d_oneform(star(hp.Q), grid)), grid)
    ell = grid.chart_scale
    return {"residual": ell * dsa / scale, "residual_Q": ell * dsq / scale}


def _rel(num: float, den: float) -> float:
    return num / den if den > TINY else num


def identity_residuals(sf: SField, hp: HopfFieldPair) -> Dict[str, float]:
    """
    Pointwise identities of S and its Hopf fields:
    - s_squared: sup |S^2 + 1|
    - eq3: *A = SA = -AS, *Q = -SQ = QS (relative to the Hopf field size)
    - ds_identity: dS = 2(*Q - *A) relative to sup|dS|
    - eq4: sup|Q psi| / sup|Q| with |psi| = 1, and im A in L
    - stability: S psi = -psi R
    - eq1: *delta = S delta = delta S on delta = dpsi mod L
    """
    grid = hp.grid
    S = sf.S
    A, Q = hp.A, hp.Q
    sA, sQ = star(A), star(Q)
    scale = max(sup_form(A, grid), sup_form(Q, grid))

    def worst(*forms):
        return max(sup_form(f, grid) for f in forms)

    out = {"s_squared": sup(cnorm(S @ S + I4), grid)}
    eq3 = worst(sA - A.left(S), sA + A.right(S), sQ + Q.left(S), sQ - Q.right(S))
    out["eq3"] = _rel(eq3, scale)
    ds_scale = sup_form(hp.dS, grid)
    out["ds_identity"] = _rel(sup_form(hp.dS - 2.0 * (sQ - sA), grid), ds_scale)

    if sf.line is not None:
        psi = sf.line.complex()
        P = sf.line.projector()
        q_psi = max(sup(vnorm(matvec(Q.x, psi)), grid), sup(vnorm(matvec(Q.y, psi)), grid))
        out["eq4"] = _rel(q_psi, sup_form(Q, grid))
        off = max(sup(cnorm(A.x - P @ A.x), grid), sup(cnorm(A.y - P @ A.y), grid))
        out["imA_in_L"] = _rel(off, sup_form(A, grid))

        dpsi = d_field(sf.line.psi, grid)                       # QuatVec2 derivatives
        quot = np.eye(4) - P
        dx, dy = complexify(dpsi.x), complexify(dpsi.y)
        delta = OneForm(matvec(quot, dx), matvec(quot, dy))
        delta_scale = max(sup(vnorm(delta.x), grid), sup(vnorm(delta.y), grid))
        s_delta = OneForm(matvec(quot, matvec(S, dx)), matvec(quot, matvec(S, dy)))
        e1 = max(sup(vnorm(delta.y - s_delta.x), grid), sup(vnorm(-delta.x - s_delta.y), grid))
        if sf.right_normal is not None:
            R = sf.right_normal
            dR_x = complexify(vec2_rmul(dpsi.x, R))
            dR_y = complexify(vec2_rmul(dpsi.y, R))
            dr = OneForm(matvec(quot, dR_x), matvec(quot, dR_y))
            e1 = max(e1, sup(vnorm(delta.y + dr.x), grid), sup(vnorm(-delta.x + dr.y), grid))
            s_psi = matvec(S, psi)
            psi_r = complexify(vec2_rmul(sf.line.psi, R))
            out["stability"] = sup(vnorm(s_psi + psi_r), grid)
        out["eq1"] = _rel(e1, delta_scale)
    return out


def connection_split(sf: SField, hp: HopfFieldPair, probe: Optional[np.ndarray] = None) -> Dict[str, float]:
    """
    d = d_+ + d_- with d_- phi = 1/2 (d phi + S d(S phi)) compared against (A + Q) phi,
    and the holomorphicity identity d*A(d/dx, d/dy) = -2 (dbar_{d/dx} A)(d/dx), where
    dbar_X A(X) = 1/2 (nabla_X A(X) + S nabla_{J X} A(X)) and nabla = d - [A + Q, .].
    """
    grid = sf.grid
    S = sf.S
    if probe is None:
        probe = sf.line.complex() if sf.line is not None else np.broadcast_to(
            np.array([1, 0, 0, 0], dtype=complex), grid.shape + (4,))
    elif not np.iscomplexobj(probe):
        probe = complexify(probe)

    dphi = d_field(probe, grid)
    dsphi = d_field(matvec(S, probe), grid)
    d_minus = 0.5 * (dphi + OneForm(matvec(S, dsphi.x), matvec(S, dsphi.y)))
    B = hp.A + hp.Q
    bphi = B.apply(probe)
    scale = max(sup(vnorm(dphi.x), grid), sup(vnorm(dphi.y), grid))
    split = max(sup(vnorm(d_minus.x - bphi.x), grid), sup(vnorm(d_minus.y - bphi.y), grid))

    Ax = hp.A.x
    dAx = d_field(Ax, grid)
    nab_x = dAx.x - (B.x @ Ax - Ax @ B.x)
    nab_y = dAx.y - (B.y @ Ax - Ax @ B.y)
    dbar = 0.5 * (nab_x + S @ nab_y)
    dsa = d_oneform(star(hp.A), grid)
    hol_scale = max(sup(cnorm(dAx.x), grid), sup(cnorm(dAx.y), grid))
    return {
        "d_minus_residual": _rel(split, scale),
        "d_minus_size": max(sup(vnorm(d_minus.x), grid), sup(vnorm(d_minus.y), grid)),
        "holomorphicity_residual": _rel(sup(cnorm(dsa + 2.0 * dbar), grid), hol_scale),
    }


# ==========================================
# Report
# ==========================================

def analyze(imm: AffineImmersion, conformality_max: float = CONFORMALITY_MAX, verbose: bool = False):
    """
    Runs the whole stage on one surface. Returns (sf, hp, report) where report
    follows the analysis JSON schema.
    """
    if verbose:
        print(f"\n{'=' * 60}")
        print(f"ANALYSIS | surface: {imm.name} | grid: {imm.grid.nx}x{imm.grid.ny} ({imm.grid.topology})")
        print(f"{'=' * 60}")
    t0 = time.time()
    nr = normals(imm)
    sf = conformal_gauss_map(imm, nr, conformality_max=conformality_max)
    if verbose:
        print(f"  conformal Gauss map built ({time.time() - t0:.2f}s)")
    hp = hopf_fields(sf)
    ids = identity_residuals(sf, hp)
    harm = harmonicity_residual(hp)
    interior = imm.grid.interior_mask()
    w_hopf = willmore_energy(hp)
    w_classical = willmore_energy_classical(imm)
    split = connection_split(sf, hp)
    if verbose:
        print(f"  Hopf fields, energies and residuals done ({time.time() - t0:.2f}s)")

    report = {
        "surface": imm.name,
        "grid": {"nx": imm.grid.nx, "ny": imm.grid.ny, "topology": imm.grid.topology,
                 "stencil": imm.grid.stencil},
        "conformality_residual": nr.conformality_residual,
        "willmore_energy_hopf": w_hopf,
        "willmore_energy_classical": w_classical,
        "willmore_energy_hopf_interior": willmore_energy(hp, interior),
        "willmore_energy_classical_interior": willmore_energy_classical(imm, interior),
        "harmonicity_residual": harm["residual"],
        "harmonicity_residual_Q": harm["residual_Q"],
        "eq1_residual": ids.get("eq1", 0.0),
        "eq3_residual": ids["eq3"],
        "eq4_residual": ids.get("eq4", 0.0),
        "imA_in_L_residual": ids.get("imA_in_L", 0.0),
        "ds_identity_residual": ids["ds_identity"],
        "s_squared_residual": ids["s_squared"],
        "stability_residual": ids.get("stability", 0.0),
        "sup_dS": sup_form(hp.dS, imm.grid),
        "connection_split": split,
    }
    if verbose:
        print(f"{'-' * 60}")
        print(f"{'Willmore energy (Hopf)':<28} | {w_hopf:>12.6f}")
        print(f"{'Willmore energy (classical)':<28} | {w_classical:>12.6f}")
        print(f"{'Harmonicity residual':<28} | {harm['residual']:>12.3e}")
        print(f"{'=' * 60}")
    return sf, hp, report
