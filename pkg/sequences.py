"""
Baecklund Transforms and the Willmore Sequence

The forward Baecklund transform of a Willmore surface is the line bundle
L_1 = ker A, the backward one L_-1 = im Q. Iterating them gives the Willmore
sequence ... L_-1 <- L -> L_1 -> L_2 ... which either keeps producing
surfaces or stops at a constant point or at a Hopf field that vanishes
identically.

Action:
1. backlund_forward / backlund_backward: per-vertex SVD of the complex 4x4
   Hopf field values. Vertices where the field is zero (or the rank is unclear
   near the trimmed patch border) take the line of the nearest valid vertex.
2. willmore_sequence: walks forward and backward up to n_max steps, re-charting
   each line by a constant Moebius matrix so the affine projection stays finite,
   recomputes the conformal Gauss map and classifies the outcome.
3. normal_bundle_degree: (1/2pi) integral K_perp dA.
4. energy_bound_check: W/(4pi) >= -4 n (n + 1)(g - 1) - n deg_perp.

Connection:
Consumes meancurvsphere (S, Hopf fields, classical curvatures) and immersion
(projection to the affine chart). Used by wforge.py 'sequence'.

Shape codes:
- "(1)"  o-f-o      both sides end in a point
- "(2)"  o-f-) or (-f-o
- "(3)"  (-f-)      both Hopf fields vanish on f
- "(4)"  (-f-*-) or (-*-f-)   two surfaces between vanishing Hopf fields
- "undetermined(n_max)" when a side stays open; shape_candidate 5 if both do
Markers: 'o' point, ')' A = 0 on the forward side, '(' Q = 0 on the backward side,
'*' further surface, '...' open.
"""

import time
import numpy as np
from dataclasses import dataclass
from scipy.ndimage import distance_transform_edt
from typing import Dict, List, Optional, Tuple

from errors import (HopfFieldZero, NotClosed, NotWillmore, RankAmbiguous, StepDegenerate,
                    WforgeError)
from grid_calc import Grid, integrate, sup_form
from immersion import AffineImmersion, LineBundle, project
from meancurvsphere import (HopfFieldPair, SField, classical_curvatures, conformal_gauss_map,
                            harmonicity_residual, hopf_fields, willmore_energy)
from quatlin import E2, QI, QJ, cinv, complexify_mat, vnorm

# --- Configuration ---
ZERO_RTOL = 1e-6             # sup|A| < max(ZERO_RTOL, ZERO_FLOOR * h_rel) * sup|dS| counts as A = 0
ZERO_FLOOR = 10.0
CONSTANT_TOL = 1e-6          # projective variance below max(CONSTANT_TOL, (CONSTANT_FLOOR * h_rel)^2) is a point
CONSTANT_FLOOR = 10.0
RANK_GAP = 10.0
WILLMORE_ACCEPT = 0.02       # harmonicity residual accepted for the input surface
STEP_CONFORMALITY_MAX = 0.1
DEFAULT_N_MAX = 4
POINT, OPEN = "point", "open"
# ---------------------


@dataclass
class BacklundLine(LineBundle):
    """Line bundle from a Baecklund step with its fill diagnostics."""
    filled_vertices: int = 0
    zero_vertices: int = 0


@dataclass
class SequenceStep:
    """
    One member of the Willmore sequence.

    Attributes:
        index: Position (negative = backward)
        status: surface, constant_point, A_zero or Q_zero
        diagnostics: Residuals and sizes recorded for this step
    """
    index: int
    status: str
    diagnostics: Dict


def _chart_matrices() -> List[np.ndarray]:
    """Constant Moebius transformations tried when a line leaves the affine chart."""
    mats = []
    ident = E2.copy()
    swap = np.zeros((2, 2, 4))
    swap[0, 1, 0] = swap[1, 0, 0] = 1.0
    mats.append(ident)
    mats.append(swap)
    for q in (np.array([1.0, 0, 0, 0]), -np.array([1.0, 0, 0, 0]), QI, QJ):
        m = E2.copy()
        m[1, 0, :] = q
        mats.append(m)
    return [complexify_mat(m) for m in mats]


CHARTS = _chart_matrices()


def _zero_threshold(hp: HopfFieldPair) -> float:
    grid = hp.grid
    return max(ZERO_RTOL, ZERO_FLOOR * np.sqrt(grid.discretization_floor)) * sup_form(hp.dS, grid)


def constant_threshold(grid: Grid) -> float:
    return max(CONSTANT_TOL, CONSTANT_FLOOR ** 2 * grid.discretization_floor)


def _line_from_basis(basis: np.ndarray, valid: np.ndarray, grid: Grid) -> BacklundLine:
    """Representative from projecting e1 or e3 onto the 2-dim subspace spanned by `basis` (..., 4, 2)."""
    v1 = basis @ np.conj(basis[..., 0, :])[..., None]
    v3 = basis @ np.conj(basis[..., 2, :])[..., None]
    v1, v3 = v1[..., 0], v3[..., 0]
    v = np.where((vnorm(v1) >= vnorm(v3))[..., None], v1, v3)
    invalid = ~valid
    filled = int(np.count_nonzero(invalid))
    if filled:
        if filled == invalid.size:
            raise StepDegenerate("no vertex carries a well-defined line")
        _, (ii, jj) = distance_transform_edt(invalid, return_indices=True)
        v = v[ii, jj]
    line = BacklundLine.from_complex(v, grid)
    return BacklundLine(line.psi, grid, filled_vertices=filled)


def _check_gap(s: np.ndarray, valid: np.ndarray, grid: Grid, gap: float, what: str) -> np.ndarray:
    ratio = s[..., 1] / np.maximum(s[..., 2], 1e-300)
    ambiguous = valid & (ratio < gap)
    region = grid.interior_mask()
    if np.any(ambiguous & region):
        raise RankAmbiguous(f"{what}: singular value gap below {gap:g}",
                            vertex=tuple(np.argwhere(ambiguous & region)[0]))
    return valid & ~ambiguous


def backlund_forward(hp: HopfFieldPair, gap: float = RANK_GAP) -> BacklundLine:
    """L_1 = ker A from the SVD of [A(d/dx); A(d/dy)]."""
    grid = hp.grid
    thr = _zero_threshold(hp)
    if sup_form(hp.A, grid) < thr:
        raise HopfFieldZero("A vanishes identically", side="forward")
    M = np.concatenate([hp.A.x, hp.A.y], axis=-2)
    _, s, vh = np.linalg.svd(M)
    valid = _check_gap(s, s[..., 0] >= thr, grid, gap, "ker A")
    kernel = np.swapaxes(np.conj(vh[..., 2:, :]), -1, -2)
    line = _line_from_basis(kernel, valid, grid)
    line.zero_vertices = int(np.count_nonzero(s[..., 0] < thr))
    return line


def backlund_backward(hp: HopfFieldPair, gap: float = RANK_GAP) -> BacklundLine:
    """L_-1 = im Q from the SVD of [Q(d/dx), Q(d/dy)]."""
    grid = hp.grid
    thr = _zero_threshold(hp)
    if sup_form(hp.Q, grid) < thr:
        raise HopfFieldZero("Q vanishes identically", side="backward")
    M = np.concatenate([hp.Q.x, hp.Q.y], axis=-1)
    u, s, _ = np.linalg.svd(M)
    valid = _check_gap(s, s[..., 0] >= thr, grid, gap, "im Q")
    line = _line_from_basis(u[..., :, :2], valid, grid)
    line.zero_vertices = int(np.count_nonzero(s[..., 0] < thr))
    return line


def projective_variance(L: LineBundle) -> float:
    """Mean of |P - P_mean|_F^2 / 4 over the statistics region (1 for orthogonal lines)."""
    mask = L.grid.interior_mask()
    P = L.projector()[mask]
    mean = P.mean(axis=0)
    return float(np.mean(np.sum(np.abs(P - mean) ** 2, axis=(-2, -1))) / 4.0)


def _apply_chart(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("ij,...j->...i", M, v)


def _best_chart(v: np.ndarray, grid: Grid) -> int:
    mask = grid.interior_mask()
    scores = []
    for M in CHARTS:
        w = _apply_chart(M, v)
        scores.append(float(np.min((vnorm(w[..., 2:]) / vnorm(w))[mask])))
    return int(np.argmax(scores))


def _surface_step(L: LineBundle, name: str):
    """Re-chart, project and rebuild S for a Baecklund line. Returns (chart, imm, sf, hp)."""
    v = L.complex()
    k = _best_chart(v, L.grid)
    M = CHARTS[k]
    try:
        imm = project(LineBundle.from_complex(_apply_chart(M, v), L.grid), name)
        sf = conformal_gauss_map(imm, conformality_max=STEP_CONFORMALITY_MAX)
    except WforgeError as exc:
        raise StepDegenerate(f"{name}: {exc}") from exc
    return M, imm, sf, hopf_fields(sf)


def _walk(hp0: HopfFieldPair, chart0: np.ndarray, direction: int, n_max: int,
          grid: Grid, verbose: bool) -> Tuple[List[SequenceStep], str]:
    steps = []
    hp, chart = hp0, chart0
    for k in range(1, n_max + 1):
        idx = direction * k
        try:
            line = backlund_forward(hp) if direction > 0 else backlund_backward(hp)
        except HopfFieldZero:
            status = "A_zero" if direction > 0 else "Q_zero"
            steps.append(SequenceStep(idx - direction, status, {"sup_dS": sup_form(hp.dS, grid)}))
            return steps, status
        # line in the chart of the original surface
        v = _apply_chart(cinv(chart), line.complex())
        L = LineBundle.from_complex(v, grid)
        var = projective_variance(L)
        diag = {"projective_variance": var, "filled_vertices": line.filled_vertices,
                "zero_vertices": line.zero_vertices}
        if var < constant_threshold(grid):
            steps.append(SequenceStep(idx, "constant_point", diag))
            return steps, POINT
        M, imm, sf, hp = _surface_step(L, f"f_{idx}")
        chart = M
        diag["harmonicity_residual"] = harmonicity_residual(hp)["residual"]
        diag["willmore_energy"] = willmore_energy(hp)
        steps.append(SequenceStep(idx, "surface", diag))
        if verbose:
            print(f"  step {idx:+d}: surface (variance {var:.3e}, "
                  f"harmonicity {diag['harmonicity_residual']:.2e})")
    return steps, OPEN


def classify(backward_end: str, forward_end: str, n_back: int, n_fwd: int, n_max: int) -> Dict:
    """Shape code and pictogram from how each side of the sequence ended."""
    left = {POINT: "∘", "Q_zero": "(", OPEN: "…"}[backward_end]
    right = {POINT: "∘", "A_zero": ")", OPEN: "…"}[forward_end]
    body = "–".join(["•"] * n_back + ["f"] + ["•"] * n_fwd)
    picto = f"{left}–{body}–{right}"
    n_surfaces = 1 + n_back + n_fwd
    ends = {backward_end, forward_end}
    candidate = None
    if OPEN in ends:
        code = f"undetermined({n_max})"
        if backward_end == OPEN and forward_end == OPEN:
            candidate = 5
    elif backward_end == POINT and forward_end == POINT and n_surfaces == 1:
        code = "(1)"
    elif POINT in ends and n_surfaces == 1:
        code = "(2)"
    elif backward_end == "Q_zero" and forward_end == "A_zero" and n_surfaces == 1:
        code = "(3)"
    elif backward_end == "Q_zero" and forward_end == "A_zero" and n_surfaces == 2:
        code = "(4)"
    else:
        code = "inconsistent"
    return {"shape": code, "pictogram": picto, "shape_candidate": candidate, "surfaces": n_surfaces}


def willmore_sequence(imm: AffineImmersion, n_max: int = DEFAULT_N_MAX,
                      willmore_accept: float = WILLMORE_ACCEPT, verbose: bool = False) -> Dict:
    """Walks the Willmore sequence in both directions and classifies it."""
    t0 = time.time()
    grid = imm.grid
    sf = conformal_gauss_map(imm)
    hp = hopf_fields(sf)
    harm = harmonicity_residual(hp)["residual"]
    if harm > willmore_accept:
        raise NotWillmore(f"harmonicity residual {harm:.3e} exceeds {willmore_accept:g}")
    if verbose:
        print(f"\n{'=' * 60}")
        print(f"WILLMORE SEQUENCE | surface: {imm.name} | n_max: {n_max}")
        print(f"{'=' * 60}")
    ident = CHARTS[0]
    fwd, fwd_end = _walk(hp, ident, +1, n_max, grid, verbose)
    bwd, bwd_end = _walk(hp, ident, -1, n_max, grid, verbose)
    n_fwd = sum(1 for s in fwd if s.status == "surface")
    n_back = sum(1 for s in bwd if s.status == "surface")
    shape = classify(bwd_end, fwd_end, n_back, n_fwd, n_max)

    energy = willmore_energy(hp)
    steps = [SequenceStep(0, "surface", {"harmonicity_residual": harm, "willmore_energy": energy})]
    steps += fwd + bwd
    steps.sort(key=lambda s: (s.index, s.status))
    report = {
        "surface": imm.name,
        "n_max": n_max,
        "forward_end": fwd_end,
        "backward_end": bwd_end,
        "steps": [{"index": s.index, "status": s.status, **s.diagnostics} for s in steps],
        "local_only": grid.topology != "torus",
        "smoothing_used": any(s.diagnostics.get("filled_vertices", 0) for s in steps),
        "verified_transforms": n_fwd,
    }
    report.update(shape)
    if grid.topology == "torus":
        deg = normal_bundle_degree(imm)
        # n counts verified forward transforms; n = 0 leaves only W >= 0
        ok, slack = energy_bound_check(energy, n_fwd, 1, deg["nearest"])
        report["normal_bundle_degree"] = deg
        report["energy_bound"] = {"holds": ok, "slack": slack, "n": n_fwd, "g": 1,
                                  "trivial": n_fwd == 0}
    if verbose:
        print(f"{'-' * 60}")
        print(f"Shape: {report['shape']}  {report['pictogram']}  ({time.time() - t0:.2f}s)")
        print(f"{'=' * 60}")
    return report


def normal_bundle_degree(imm: AffineImmersion, require_closed: bool = False) -> Dict:
    """(1/2pi) integral K_perp dA; the integer claim is made only on closed (torus) grids."""
    grid = imm.grid
    closed = grid.topology == "torus"
    if require_closed and not closed:
        raise NotClosed("normal bundle degree needs a closed surface")
    c = classical_curvatures(imm)
    value = integrate(c["Kperp"] * c["e2u"], grid) / (2 * np.pi)
    out = {"value": value, "closed": closed, "nearest": None, "distance": None}
    if closed:
        nearest = int(np.rint(value))
        out["nearest"] = nearest
        out["distance"] = abs(value - nearest)
    return out


def energy_bound_check(W: float, n: int, g: int, deg_perp: int) -> Tuple[bool, float]:
    """W/(4pi) >= -4 n (n + 1)(g - 1) - n deg_perp; returns (holds, slack)."""
    rhs = -4 * n * (n + 1) * (g - 1) - n * deg_perp
    slack = W / (4 * np.pi) - rhs
    return slack >= 0, float(slack)
