"""
The Associated Family of Flat Connections

For a complex structure S with Hopf field A this module builds the family

    d^lambda = d + (lambda - 1) A^(1,0) + (lambda^-1 - 1) A^(0,1),   lambda in C*,

on (H^2, I) = C^4, computes its curvature, checks the curvature identity that
ties it to d*A, integrates parallel sections on simply connected grids and
measures monodromy around the cycles of a torus.

Action:
1. A^(1,0) = 1/2 (A - I*A) = pi_E A and A^(0,1) = pi_Eperp A, with I acting as 1j.
2. Curvature: d omega + omega ^ omega, collocated on vertices.
3. The identity used as a check:
       R^lambda = (d*A) S ((lambda - 1) pi_Eperp + (lambda^-1 - 1) pi_E)
   The projector assignment with E and Eperp exchanged is reported as the
   'printed' variant next to it.
4. Parallel transport: RK4 per edge with the midpoint connection, rows first
. Torus monodromies H_x, H_y around the two cycles; flatness makes them commute.

Connection:
Consumes meancurvsphere.SField / HopfFieldPair; ParallelFrame feeds mudarboux.

Outputs:
- ConnectionFamily, ParallelFrame, flatness report dictionaries
"""

import numpy as np
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from errors import BlowUp, LambdaZero, NotClosed, NotSimplyConnected
from grid_calc import Grid, OneForm, d_field, d_oneform, matvec, star, sup, type_split_I, wedge
from meancurvsphere import HopfFieldPair, SField
from quatlin import I4, cnorm, complexify, eigenprojections, right_j, vnorm

# --- Configuration ---
BLOWUP_NORM = 1e6
SPANNING_THRESHOLD = 1e-8
TINY = 1e-300
# ---------------------


@dataclass
class ConnectionFamily:
    """
    Attributes:
        sf: Base complex structure
        hp: Its Hopf fields
        A10, A01: Type parts of A with respect to I
    """
    sf: SField
    hp: HopfFieldPair
    A10: OneForm
    A01: OneForm

    @property
    def grid(self) -> Grid:
        return self.sf.grid

    @classmethod
    def from_hopf(cls, sf: SField, hp: HopfFieldPair) -> "ConnectionFamily":
        a10, a01 = type_split_I(hp.A)
        return cls(sf, hp, a10, a01)

    def omega(self, lam: complex) -> OneForm:
        """Connection form omega^lambda, complex 4x4 valued."""
        lam = complex(lam)
        if lam == 0:
            raise LambdaZero("lambda must be nonzero")
        return (lam - 1) * self.A10 + (1 / lam - 1) * self.A01


@dataclass
class ParallelFrame:
    """
    Two d^mu-parallel sections.

    Attributes:
        psi1, psi2: ComplexVec4 fields (nx, ny, 4)
        mu: Spectral parameter
        basepoint: Grid index where psi_l = init_l
        propagator: Transport matrices U with psi = U init (None for hand-built frames)
        path_independence_residual: Rows-first vs columns-first discrepancy
    """
    psi1: np.ndarray
    psi2: np.ndarray
    mu: complex = 1.0
    basepoint: Tuple[int, int] = (0, 0)
    propagator: Optional[np.ndarray] = None
    path_independence_residual: float = 0.0
    grid: Optional[Grid] = None


def _as_complex(v: np.ndarray) -> np.ndarray:
    return v if np.iscomplexobj(v) else complexify(v)


def dlambda_apply(fam: ConnectionFamily, lam: complex, phi: np.ndarray) -> OneForm:
    """d^lambda phi = d phi + omega^lambda phi."""
    phi = _as_complex(phi)
    omega = fam.omega(lam)
    return d_field(phi, fam.grid) + omega.apply(phi)


# ==========================================
# Curvature
# ==========================================

def curvature(fam: ConnectionFamily, lam: complex) -> np.ndarray:
    """R^lambda(d/dx, d/dy) = d omega + omega ^ omega."""
    omega = fam.omega(lam)
    return d_oneform(omega, fam.grid) + wedge(omega, omega)


def curvature_rhs(fam: ConnectionFamily, lam: complex, printed: bool = False) -> np.ndarray:
    lam = complex(lam)
    if lam == 0:
        raise LambdaZero("lambda must be nonzero")
    S = fam.sf.S
    pi_e, pi_perp = eigenprojections(S)
    dsa = d_oneform(star(fam.hp.A), fam.grid)
    if printed:
        mix = (lam - 1) * pi_e + (1 / lam - 1) * pi_perp
    else:
        mix = (lam - 1) * pi_perp + (1 / lam - 1) * pi_e
    return dsa @ S @ mix


def curvature_identity_residual(fam: ConnectionFamily, lam: complex) -> Dict[str, float]:
    """Relative sup distance between the plaquette curvature and both readings of the identity."""
    grid = fam.grid
    F = curvature(fam, lam)
    size = sup(cnorm(F), grid)
    rhs = curvature_rhs(fam, lam)
    rhs_printed = curvature_rhs(fam, lam, printed=True)
    den = size if size > TINY else 1.0
    return {
        "curvature_sup": size,
        "residual": sup(cnorm(F - rhs), grid) / den,
        "residual_printed": sup(cnorm(F - rhs_printed), grid) / den,
    }


# ==========================================
# Parallel transport
# ==========================================

def _rk4(U: np.ndarray, w0: np.ndarray, w1: np.ndarray, h: float) -> np.ndarray:
    """One edge of dU/ds = -omega U with omega sampled at both ends and the midpoint."""
    wm = 0.5 * (w0 + w1)
    k1 = -w0 @ U
    k2 = -wm @ (U + 0.5 * h * k1)
    k3 = -wm @ (U + 0.5 * h * k2)
    k4 = -w1 @ (U + h * k3)
    return U + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _sweep_line(U: np.ndarray, wx: np.ndarray, h: float, start: int) -> None:
    """Fills U along axis 0 from index `start` outward; leading axes beyond 0 are batched."""
    n = U.shape[0]
    for i in range(start + 1, n):
        U[i] = _rk4(U[i - 1], wx[i - 1], wx[i], h)
    for i in range(start - 1, -1, -1):
        U[i] = _rk4(U[i + 1], wx[i + 1], wx[i], -h)


def transport_propagator(fam: ConnectionFamily, mu: complex, basepoint: Tuple[int, int],
                         order: str = "rows") -> np.ndarray:
    """
    Propagator U(p) with psi(p) = U(p) psi(basepoint) for d^mu psi = 0 on the cut grid.
    order='rows' integrates the basepoint row first, then every column;
    order='columns' the other way round.
    """
    grid = fam.grid
    omega = fam.omega(mu)
    i0, j0 = basepoint
    U = np.zeros(grid.shape + (4, 4), dtype=complex)
    if order == "rows":
        U[i0, j0] = I4
        _sweep_line(U[:, j0], omega.x[:, j0], grid.hx, i0)
        Ut = np.swapaxes(U, 0, 1)                       # view: axis 0 is y
        _sweep_line(Ut, np.swapaxes(omega.y, 0, 1), grid.hy, j0)
    elif order == "columns":
        U[i0, j0] = I4
        _sweep_line(U[i0], omega.y[i0], grid.hy, j0)
        _sweep_line(U, omega.x, grid.hx, i0)
    else:
        raise ValueError(f"unknown sweep order '{order}'")
    peak = float(np.max(np.abs(U)))
    if not np.isfinite(peak) or peak > BLOWUP_NORM:
        raise BlowUp(f"parallel transport grew to {peak:.3e}")
    return U


def parallel_sections(fam: ConnectionFamily, mu: complex, init: Optional[np.ndarray] = None,
                      basepoint: Optional[Tuple[int, int]] = None,
                      accept_torus: bool = False) -> ParallelFrame:
    """
    Two d^mu-parallel sections with psi_l(basepoint) = init_l.

    init: two ComplexVec4 (2, 4) or two QuatVec2 (2, 2, 4); default the standard
    basis (1, 0), (0, 1). On a torus the cut fundamental square is used and only
    if accept_torus is set.
    """
    grid = fam.grid
    if grid.topology == "torus" and not accept_torus:
        raise NotSimplyConnected("parallel sections on a torus need accept_torus=True (cut square)")
    mu = complex(mu)
    if mu == 0:
        raise LambdaZero("mu must be nonzero")
    if init is None:
        init = np.array([[1, 0, 0, 0], [0, 0, 1, 0]], dtype=complex)
    init = _as_complex(np.asarray(init))
    base = grid.center_index() if basepoint is None else tuple(basepoint)

    U = transport_propagator(fam, mu, base, "rows")
    Uc = transport_propagator(fam, mu, base, "columns")
    psi1, psi2 = U @ init[0], U @ init[1]
    stats_grid = grid.as_patch()
    resid = 0.0
    for vec in init:
        a, b = U @ vec, Uc @ vec
        resid = max(resid, sup(vnorm(a - b), stats_grid) / max(sup(vnorm(a), stats_grid), TINY))
    psi1[base] = init[0]
    psi2[base] = init[1]
    return ParallelFrame(psi1, psi2, mu, base, U, resid, grid)


def spanning_margin(psi1: np.ndarray, psi2: np.ndarray) -> np.ndarray:
    """|det[psi1, psi1 j, psi2, psi2 j]| divided by the product of column norms, per vertex."""
    cols = [psi1, right_j(psi1), psi2, right_j(psi2)]
    M = np.stack(cols, axis=-1)
    norms = np.prod([vnorm(c) for c in cols], axis=0)
    return np.abs(np.linalg.det(M)) / np.maximum(norms, TINY)


def spanning_check(frame: ParallelFrame, threshold: float = SPANNING_THRESHOLD) -> Tuple[bool, float]:
    """W_mu and W_mu j meet only in 0 at every vertex; returns (passed, minimum margin)."""
    margin = float(np.min(spanning_margin(_as_complex(frame.psi1), _as_complex(frame.psi2))))
    return margin > threshold, margin


def monodromy(fam: ConnectionFamily, mu: complex, loop: str = "x", windings: int = 1,
              basepoint: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Path-ordered transport around the x- or y-cycle through the basepoint."""
    grid = fam.grid
    if grid.topology != "torus":
        raise NotClosed("monodromy needs a torus grid")
    omega = fam.omega(mu)
    i0, j0 = grid.center_index() if basepoint is None else basepoint
    if loop == "x":
        w, h, n = omega.x[:, j0], grid.hx, grid.nx
        idx = [(i0 + k) % n for k in range(n + 1)]
    elif loop == "y":
        w, h, n = omega.y[i0, :], grid.hy, grid.ny
        idx = [(j0 + k) % n for k in range(n + 1)]
    else:
        raise ValueError(f"unknown loop '{loop}'")
    U = I4.copy()
    for a, b in zip(idx[:-1], idx[1:]):
        U = _rk4(U, w[a], w[b], h)
    if windings < 0:
        return np.linalg.matrix_power(np.linalg.inv(U), -windings)
    return np.linalg.matrix_power(U, windings)


def monodromy_commutator(fam: ConnectionFamily, mu: complex,
                         basepoint: Optional[Tuple[int, int]] = None) -> float:
    """|H_x H_y - H_y H_x| / (|H_x| |H_y|); zero for a flat family on a torus."""
    mx = monodromy(fam, mu, "x", basepoint=basepoint)
    my = monodromy(fam, mu, "y", basepoint=basepoint)
    return _commutator(mx, my)


def _commutator(mx: np.ndarray, my: np.ndarray) -> float:
    return float(cnorm(mx @ my - my @ mx) / (cnorm(mx) * cnorm(my)))


def flatness_report(fam: ConnectionFamily, mu: complex, lambdas=(), accept_torus: bool = True) -> Dict:
    """Report in the flatness JSON schema (complex numbers as [re, im])."""
    grid = fam.grid
    frame = parallel_sections(fam, mu, accept_torus=accept_torus)
    ok, margin = spanning_check(frame)
    report = {
        "mu": [complex(mu).real, complex(mu).imag],
        "path_independence_residual": frame.path_independence_residual,
        "spanning_margin": margin,
        "spanning_ok": ok,
        "monodromy_x": None,
        "monodromy_y": None,
        "curvature": {},
    }
    if grid.topology == "torus":
        mx = monodromy(fam, mu, "x")
        my = monodromy(fam, mu, "y")
        report["monodromy_x"] = [[[z.real, z.imag] for z in row] for row in mx]
        report["monodromy_y"] = [[[z.real, z.imag] for z in row] for row in my]
        report["monodromy_commutator"] = _commutator(mx, my)
    for lam in list(lambdas) + [mu]:
        key = f"{complex(lam).real:g}{complex(lam).imag:+g}i"
        report["curvature"][key] = curvature_identity_residual(fam, lam)
    return report
