"""
The mu-Darboux Transform

Given two d^mu-parallel sections psi_1, psi_2 spanning W_mu, this module builds

    a = G ((mu + mu^-1)/2) G^-1,   b = G (I (mu^-1 - mu)/2) G^-1,   T = S(a - 1) + b,

with G = (psi_1, psi_2), transforms the complex structure to S_hat = T^-1 S T and
the line bundle to L_hat = T (a - 1)^-1 L, and exposes every identity relating
the old and new data as a residual.

Action:
Residuals reported by transform_S / transform_L / pointwise_darboux_check:
- eq11:      S_hat = 2 T^-1 + b (a - 1)^-1 (algebraic)
- riccati:   dT = 2 *Q (a - 1) + T *A T          ('printed': *Q (a - 1) + 2 T *A T)
- eq9_A:     *A_hat = 1/2 T (1 - a)^-1 *A T
- eq9_Q:     *Q_hat = -2 T^-1 *Q (a - 1) T^-1    ('printed': with the opposite sign)
- dT_inverse: dT^-1 = -2 T^-1 *Q (a - 1) T^-1 - *A
- stability: S_hat L_hat = L_hat (algebraic)
- eq12:      im A_hat in L_hat in ker Q_hat
- darboux:   d psi_l = -*A T psi_l, d psi_l in L
- hat_S_gap: S(f_hat) = S_hat and d*A(f_hat) = 0 for real mu

Connection:
Consumes meancurvsphere (SField, HopfFieldPair, hopf_fields), flatfam
(ConnectionFamily, ParallelFrame) and immersion (LineBundle). Used by wforge.py
and convention_experiment.py.

Process:
a and b are built in the complex representation: G is the 4x4 matrix with
columns psi_1, psi_1 j, psi_2, psi_2 j and the complex scalar c acts in the
G-frame as diag(c, conj(c), c, conj(c)).
"""

import numpy as np
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from errors import AminusOneSingular, PointAtInfinity, SpanningFailed, TSingular, WforgeError
from flatfam import ConnectionFamily, ParallelFrame, parallel_sections, spanning_check
from grid_calc import OneForm, d_field, matvec, star, sup, sup_form
from immersion import LineBundle, infinity_mask, normals, project
from meancurvsphere import (HopfFieldPair, SField, conformal_gauss_map, harmonicity_residual,
                            hopf_fields)
from quatlin import I4, cinv, cnorm, line_distance, right_j, vnorm

# --- Configuration ---
ALGEBRAIC_TOL = 1e-6         # convention winner: algebraic residuals below this
CHART_TOL = 1e-6             # |psi_hat_2| / |psi_hat| below this is masked from conformality statistics
DEFAULT_BASIS_CHANGE = np.array([[1.0, 0.5j], [0.3, 2.0]])
CONVENTIONS = ("inverse", "direct")   # S_hat = T^-1 S T, S_hat = T S T^-1
REAL_MU_TOL = 1e-12          # |Im mu| below this: f_hat is checked for the Willmore property
TINY = 1e-300
# ---------------------


@dataclass
class TField:
    """
    mu-Darboux data.

    Attributes:
        a, b, T, T_inv: complex 4x4 fields
        mu: Spectral parameter
        G: Frame matrix (columns psi_1, psi_1 j, psi_2, psi_2 j)
        residuals: a^2 + b^2 - 1 and [a, b]
    """
    a: np.ndarray
    b: np.ndarray
    T: np.ndarray
    T_inv: np.ndarray
    mu: complex
    G: np.ndarray
    residuals: Dict[str, float]


def frame_matrix(psi1: np.ndarray, psi2: np.ndarray) -> np.ndarray:
    return np.stack([psi1, right_j(psi1), psi2, right_j(psi2)], axis=-1)


def build_abT(sf: SField, frame: ParallelFrame) -> TField:
    ok, margin = spanning_check(frame)
    if not ok:
        raise SpanningFailed(f"W_mu meets W_mu j (spanning margin {margin:.3e})")
    mu = complex(frame.mu)
    if mu == 1:
        raise TSingular("mu = 1 gives T = 0")
    G = frame_matrix(frame.psi1, frame.psi2)
    G_inv = cinv(G, "frame matrix", error=SpanningFailed)
    ca = 0.5 * (mu + 1 / mu)
    cb = 0.5j * (1 / mu - mu)
    da = np.array([ca, np.conj(ca), ca, np.conj(ca)])
    db = np.array([cb, np.conj(cb), cb, np.conj(cb)])
    a = (G * da[None, :]) @ G_inv
    b = (G * db[None, :]) @ G_inv
    T = sf.S @ (a - I4) + b
    T_inv = cinv(T, "T", error=TSingular)
    grid = sf.grid
    residuals = {
        "a2_plus_b2": float(np.max(cnorm(a @ a + b @ b - I4))),
        "ab_commutator": float(np.max(cnorm(a @ b - b @ a))),
    }
    return TField(a, b, T, T_inv, mu, G, residuals)


def _rel(diff: np.ndarray, ref: np.ndarray, grid) -> float:
    den = sup(cnorm(ref), grid)
    num = sup(cnorm(diff), grid)
    return num / den if den > TINY else num


def _rel_form(diff: OneForm, ref: OneForm, grid) -> float:
    den = sup_form(ref, grid)
    num = sup_form(diff, grid)
    return num / den if den > TINY else num


def conjugate_S(tf: TField, S: np.ndarray, convention: str = "inverse") -> np.ndarray:
    if convention == "inverse":
        return tf.T_inv @ S @ tf.T
    if convention == "direct":
        return tf.T @ S @ tf.T_inv
    raise ValueError(f"unknown convention '{convention}'")


def transform_S(tf: TField, sf: SField, hp: HopfFieldPair,
                convention: str = "inverse") -> Tuple[SField, HopfFieldPair, Dict[str, float]]:
    """S_hat and the identities that involve it, dT and the Hopf fields."""
    grid = sf.grid
    S, T, Ti, a, b = sf.S, tf.T, tf.T_inv, tf.a, tf.b
    am1 = a - I4
    am1_inv = cinv(am1, "a - 1", error=AminusOneSingular)
    S_hat = conjugate_S(tf, S, convention)
    sf_hat = SField(S_hat, grid)
    hp_hat = hopf_fields(sf_hat)

    sA, sQ = star(hp.A), star(hp.Q)
    dT = d_field(T, grid)
    riccati = 2.0 * sQ.right(am1) + sA.left(T).right(T)
    riccati_printed = sQ.right(am1) + 2.0 * sA.left(T).right(T)
    dTi = d_field(Ti, grid)
    dTi_rhs = -2.0 * sQ.right(am1).left(Ti).right(Ti) - sA

    one_minus_a_inv = cinv(I4 - a, "1 - a", error=AminusOneSingular)
    eq9A_rhs = 0.5 * sA.left(T @ one_minus_a_inv).right(T)
    eq9Q_rhs = -2.0 * sQ.right(am1).left(Ti).right(Ti)
    s_hat_A, s_hat_Q = star(hp_hat.A), star(hp_hat.Q)

    report = {
        "eq11_hatS": _rel(S_hat - (2.0 * Ti + b @ am1_inv), S_hat, grid),
        "eq10_riccati": _rel_form(dT - riccati, dT, grid),
        "eq10_riccati_printed": _rel_form(dT - riccati_printed, dT, grid),
        "dT_inverse": _rel_form(dTi - dTi_rhs, dTi, grid),
        "eq9_A_residual": _rel_form(s_hat_A - eq9A_rhs, eq9A_rhs, grid),
        "eq9_Q_residual": _rel_form(s_hat_Q - eq9Q_rhs, eq9Q_rhs, grid),
        "eq9_Q_printed": _rel_form(s_hat_Q + eq9Q_rhs, eq9Q_rhs, grid),
        "hatS_squared": sup(cnorm(S_hat @ S_hat + I4), grid),
        "hatS_minus_S": sup(cnorm(S_hat - S), grid),
        "hatS_harmonicity": harmonicity_residual(hp_hat)["residual"],
        "a2_plus_b2": tf.residuals["a2_plus_b2"],
        "ab_commutator": tf.residuals["ab_commutator"],
    }
    return sf_hat, hp_hat, report


def transform_L(tf: TField, L: LineBundle, sf_hat: SField,
                hp_hat: HopfFieldPair) -> Tuple[LineBundle, Dict]:
    """
    L_hat = T (a - 1)^-1 L with its incidence residuals. For real mu the projected
    f_hat gets its own mean curvature sphere, which must be harmonic and equal S_hat.
    """
    grid = L.grid
    am1_inv = cinv(tf.a - I4, "a - 1", error=AminusOneSingular)
    psi_hat = matvec(tf.T @ am1_inv, L.complex())
    L_hat = LineBundle.from_complex(psi_hat, grid)
    v = L_hat.complex()
    P = L_hat.projector()
    A_hat, Q_hat = hp_hat.A, hp_hat.Q

    im_a = max(sup(cnorm(A_hat.x - P @ A_hat.x), grid), sup(cnorm(A_hat.y - P @ A_hat.y), grid))
    ker_q = max(sup(vnorm(matvec(Q_hat.x, v)), grid), sup(vnorm(matvec(Q_hat.y, v)), grid))
    a_size, q_size = sup_form(A_hat, grid), sup_form(Q_hat, grid)
    report = {
        "hatS_stability": sup(line_distance(matvec(sf_hat.S, v), v), grid),
        "eq12_imA": im_a / a_size if a_size > TINY else im_a,
        "eq12_kerQ": ker_q / q_size if q_size > TINY else ker_q,
    }
    report["eq12_incidence"] = max(report["eq12_imA"], report["eq12_kerQ"])

    masked = infinity_mask(L_hat, CHART_TOL)
    report["points_at_infinity"] = int(np.count_nonzero(masked))
    report["hat_conformality"] = None
    report["hat_willmore_residual"] = None
    report["hat_S_gap"] = None
    if not masked.any():
        try:
            f_hat = project(L_hat, "darboux")
            nr = normals(f_hat)
            report["hat_conformality"] = nr.conformality_residual
            if abs(complex(tf.mu).imag) < REAL_MU_TOL:
                # S(f_hat) rebuilt from the projected surface, compared with S_hat
                sf_f = conformal_gauss_map(f_hat, nr)
                report["hat_willmore_residual"] = harmonicity_residual(hopf_fields(sf_f))["residual"]
                report["hat_S_gap"] = _rel(sf_f.S - sf_hat.S, sf_hat.S, grid)
        except WforgeError as exc:
            report["hat_conformality_error"] = str(exc)
    return L_hat, report


def pointwise_darboux_check(frame: ParallelFrame, L: LineBundle, tf: TField,
                            hp: HopfFieldPair) -> Dict[str, float]:
    """sup |d psi_l + *A T psi_l| / |psi_l| and the distance of d psi_l from L."""
    grid = L.grid
    sA = star(hp.A)
    line = L.complex()
    out = {"darboux_residual": 0.0, "darboux_in_L": 0.0}
    for psi in (frame.psi1, frame.psi2):
        dpsi = d_field(psi, grid)
        n = np.maximum(vnorm(psi), TINY)
        for dp, sa in ((dpsi.x, sA.x), (dpsi.y, sA.y)):
            r = vnorm(dp + matvec(sa @ tf.T, psi)) / n
            out["darboux_residual"] = max(out["darboux_residual"], sup(r, grid))
            out["darboux_in_L"] = max(out["darboux_in_L"], sup(line_distance(dp, line), grid))
    return out


def basis_independence(fam: ConnectionFamily, sf: SField, mu: complex,
                       C: np.ndarray = DEFAULT_BASIS_CHANGE, accept_torus: bool = False,
                       convention: str = "inverse") -> float:
    """sup |S_hat - S_hat'| / sup |S_hat| for frames with init' = init C."""
    init = np.array([[1, 0, 0, 0], [0, 0, 1, 0]], dtype=complex)
    init2 = np.stack([init[0] * C[0, l] + init[1] * C[1, l] for l in range(2)])
    f1 = parallel_sections(fam, mu, init, accept_torus=accept_torus)
    f2 = parallel_sections(fam, mu, init2, accept_torus=accept_torus)
    s1 = conjugate_S(build_abT(sf, f1), sf.S, convention)
    s2 = conjugate_S(build_abT(sf, f2), sf.S, convention)
    return _rel(s1 - s2, s1, sf.grid)


def resolve_convention(tf: TField, sf: SField, hp: HopfFieldPair, L: LineBundle) -> Dict:
    """
    Evaluates both S_hat = T^-1 S T and S_hat = T S T^-1. The winner is the one whose
    algebraic identities (eq11 and S_hat stability of L_hat) hold to ALGEBRAIC_TOL.
    """
    results = {}
    for conv in CONVENTIONS:
        sf_hat, hp_hat, rep = transform_S(tf, sf, hp, conv)
        _, lrep = transform_L(tf, L, sf_hat, hp_hat)
        results[conv] = {
            "eq11_hatS": rep["eq11_hatS"],
            "hatS_stability": lrep["hatS_stability"],
            "eq9_A_residual": rep["eq9_A_residual"],
            "eq9_Q_residual": rep["eq9_Q_residual"],
            "eq12_incidence": lrep["eq12_incidence"],
            "hatS_harmonicity": rep["hatS_harmonicity"],
        }
    passing = [c for c in CONVENTIONS
               if results[c]["eq11_hatS"] < ALGEBRAIC_TOL and results[c]["hatS_stability"] < ALGEBRAIC_TOL]
    results["winner"] = passing[0] if len(passing) == 1 else ("ambiguous" if passing else "none")
    return results


def darboux_report(sf: SField, hp: HopfFieldPair, mu: complex, accept_torus: bool = False,
                   check_basis: bool = True, verbose: bool = False) -> Tuple[Dict, SField, LineBundle]:
    """Full mu-Darboux pipeline in the transform JSON schema."""
    fam = ConnectionFamily.from_hopf(sf, hp)
    frame = parallel_sections(fam, mu, accept_torus=accept_torus)
    tf = build_abT(sf, frame)
    sf_hat, hp_hat, srep = transform_S(tf, sf, hp)
    L_hat, lrep = transform_L(tf, sf.line, sf_hat, hp_hat)
    sf_hat.line = L_hat
    drep = pointwise_darboux_check(frame, sf.line, tf, hp)
    report = {"mu": [complex(mu).real, complex(mu).imag],
              "path_independence_residual": frame.path_independence_residual}
    report.update(srep)
    report.update(lrep)
    report.update(drep)
    report["basis_independence"] = (basis_independence(fam, sf, mu, accept_torus=accept_torus)
                                    if check_basis else None)
    report["convention"] = resolve_convention(tf, sf, hp, sf.line)
    if verbose:
        print(f"  mu = {complex(mu):.4g}: eq11 {srep['eq11_hatS']:.2e} | riccati {srep['eq10_riccati']:.2e} "
              f"| hatS harmonicity {srep['hatS_harmonicity']:.2e} | convention {report['convention']['winner']}")
    return report, sf_hat, L_hat
