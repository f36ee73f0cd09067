"""
Conformal Immersions into S^4 = HP^1

This module generates the test surfaces and moves between the two pictures of a
map into the quaternionic projective line: the affine chart f: M -> H and the
line bundle L = psi H inside the trivial H^2 bundle.

Action:
1. generate(spec) samples a surface in a conformal chart:
   - MercatorSphere: unit sphere in Im H, Mercator coordinates on a patch
   - CliffordTorus: (cos x + i sin x + j cos y + k sin y)/sqrt(2) on a 2pi torus
   - RevolutionTorus(R, r): torus of revolution in Im H, meridian re-parametrized
     conformally so that the chart is isothermal
   - CatenoidPatch, EnneperPatch: closed-form Weierstrass integrals in Im H
   - TwistorCurve: twistor projection CP^3 -> HP^1 of a polynomial curve
2. normals(f) returns the left and right normals N, R with *df = N df = -df R and
   the conformality residual.
3. lift/project convert between f and L.
4. OBJ export with stereographic projection R^4 -> R^3.

Connection:
Feeds meancurvsphere (conformal Gauss map), sequences (re-projection of
Baecklund lines) and wforge.py (export).

Inputs:
- SurfaceSpec (from the CLI config or built in code)

Outputs:
- AffineImmersion, LineBundle, NormalPair; surface.obj files
"""

import numpy as np
from numpy.polynomial import polynomial as P
from dataclasses import dataclass
from typing import List, Optional, Tuple

from errors import BadSpec, DegenerateDifferential, PointAtInfinity
from grid_calc import Grid, d_field, sup
from quatlin import (ONE, complexify, decomplexify, line_projector, qimag, qinv, qmul,
                     qnorm, qunit, quat)

# --- Configuration ---
DEFAULT_N = 64
DEGENERATE_TOL = 1e-10       # |df| below this is not an immersion
INFINITY_TOL = 1e-12         # |psi_2| / |psi| below this is the point at infinity
CLAMP_TOL = 1e-9             # stereographic denominators below this are clamped
DEFAULT_POLE = (0.0, 0.0, 0.0, 1.0)
TWISTOR_DEFAULT = [[0.0, 1.0], [0.0, 0.0, 0.5], [1.0], [0.0]]   # (w, w^2/2, 1, 0), ascending
KIND_ALIASES = {
    "mercator": "mercator", "mercatorsphere": "mercator", "sphere": "mercator",
    "clifford": "clifford", "cliffordtorus": "clifford",
    "revolution": "revolution", "revolutiontorus": "revolution", "torus": "revolution",
    "catenoid": "catenoid", "catenoidpatch": "catenoid",
    "enneper": "enneper", "enneperpatch": "enneper",
    "twistor": "twistor", "twistorcurve": "twistor",
}
DEFAULT_HALF_WIDTH = {"mercator": 1.5, "catenoid": 1.0, "enneper": 1.0, "twistor": 0.5}
# ---------------------


@dataclass
class SurfaceSpec:
    """
    Which surface to sample and how.

    Attributes:
        kind: One of mercator, clifford, revolution, catenoid, enneper, twistor
        n: Samples per direction
        R, r: Radii of the torus of revolution
        half_width: Half side of the patch square (patch surfaces only)
        coeffs: Twistor curve, four ascending coefficient lists (complex allowed)
        convention: 'jleft' maps [z1:z2:z3:z4] to (z1 + j z2, z3 + j z4); 'jright' to (z1 + z2 j, z3 + z4 j)
        stencil: 'central' or 'spectral'
        patch: Sample a torus surface on its cut fundamental square
    """
    kind: str
    n: int = DEFAULT_N
    R: float = 3.0
    r: float = 1.0
    half_width: Optional[float] = None
    coeffs: Optional[List[List[complex]]] = None
    convention: str = "jleft"
    stencil: str = "central"
    patch: bool = False

    def normalized_kind(self) -> str:
        key = self.kind.lower().replace("_", "").replace("-", "")
        if key not in KIND_ALIASES:
            raise BadSpec(f"unknown surface kind '{self.kind}'")
        return KIND_ALIASES[key]


@dataclass
class AffineImmersion:
    """
    Affine chart of a map into HP^1.

    Attributes:
        f: Quaternion field (nx, ny, 4)
        grid: Sampling grid
        name: Surface label used in reports and exports
    """
    f: np.ndarray
    grid: Grid
    name: str = "surface"


@dataclass
class LineBundle:
    """
    Line subbundle L = psi H of the trivial H^2 bundle, |psi| = 1.

    Attributes:
        psi: QuatVec2 field (nx, ny, 2, 4)
        grid: Sampling grid
    """
    psi: np.ndarray
    grid: Grid

    @classmethod
    def from_complex(cls, v: np.ndarray, grid: Grid) -> "LineBundle":
        v = v / np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))[..., None]
        return cls(decomplexify(v), grid)

    def complex(self) -> np.ndarray:
        return complexify(self.psi)

    def projector(self) -> np.ndarray:
        return line_projector(self.complex())


@dataclass
class NormalPair:
    N: np.ndarray
    R: np.ndarray
    conformality_residual: float = 0.0


# ==========================================
# Surface generators
# ==========================================

def _patch_grid(spec: SurfaceSpec, kind: str) -> Grid:
    hw = spec.half_width if spec.half_width is not None else DEFAULT_HALF_WIDTH[kind]
    if hw <= 0:
        raise BadSpec("half_width must be positive")
    return Grid.patch(spec.n, spec.n, (-hw, hw), (-hw, hw), stencil=spec.stencil)


def _torus_grid(spec: SurfaceSpec, Lx: float, Ly: float) -> Grid:
    grid = Grid.torus(spec.n, spec.n, Lx, Ly, stencil=spec.stencil)
    return grid.as_patch() if spec.patch else grid


def revolution_meridian(t: np.ndarray, R: float, r: float) -> np.ndarray:
    """Meridian angle v as a function of the conformal coordinate t."""
    c = np.sqrt(R * R - r * r)
    s = t * c / r
    v = 2 * np.arctan2(np.sqrt(R + r) * np.sin(s / 2), np.sqrt(R - r) * np.cos(s / 2))
    # unwrap so v increases monotonically with t
    return v + 2 * np.pi * np.floor((s + np.pi) / (2 * np.pi))


def twistor_lift(Z: np.ndarray, coeffs, convention: str = "jleft") -> np.ndarray:
    """ComplexVec4 field of the line over the curve z -> [z1(z):...:z4(z)] evaluated at Z = x + iy."""
    if len(coeffs) != 4:
        raise BadSpec("a twistor curve needs four coefficient lists")
    comps = [P.polyval(Z, np.asarray(c, dtype=complex)) for c in coeffs]
    if all(np.all(np.asarray(c) == 0) for c in coeffs):
        raise BadSpec("zero polynomial curve")
    z1, z2, z3, z4 = comps
    if convention == "jleft":
        return np.stack([z1, z2, z3, z4], axis=-1)
    if convention == "jright":
        return np.stack([z1, np.conj(z2), z3, np.conj(z4)], axis=-1)
    raise BadSpec(f"unknown twistor convention '{convention}'")


def generate(spec: SurfaceSpec) -> AffineImmersion:
    """Samples the requested surface in a conformal chart."""
    kind = spec.normalized_kind()

    if kind == "mercator":
        grid = _patch_grid(spec, kind)
        X, Y = grid.coords()
        sech = 1.0 / np.cosh(Y)
        f = quat(0.0, sech * np.cos(X), sech * np.sin(X), np.tanh(Y))
        return AffineImmersion(f, grid, "mercator")

    if kind == "clifford":
        grid = _torus_grid(spec, 2 * np.pi, 2 * np.pi)
        X, Y = grid.coords()
        f = quat(np.cos(X), np.sin(X), np.cos(Y), np.sin(Y)) / np.sqrt(2.0)
        return AffineImmersion(f, grid, "clifford")

    if kind == "revolution":
        R, r = float(spec.R), float(spec.r)
        if r <= 0 or R <= r:
            raise BadSpec(f"revolution torus needs 0 < r < R, got R={R}, r={r}")
        grid = _torus_grid(spec, 2 * np.pi, 2 * np.pi * r / np.sqrt(R * R - r * r))
        X, Y = grid.coords()
        v = revolution_meridian(Y, R, r)
        rho = R + r * np.cos(v)
        f = quat(0.0, rho * np.cos(X), rho * np.sin(X), r * np.sin(v))
        return AffineImmersion(f, grid, f"revolution({R:g},{r:g})")

    if kind == "catenoid":
        # Weierstrass data g = e^z, eta = 1/2 e^-z dz, integrated in closed form
        grid = _patch_grid(spec, kind)
        X, Y = grid.coords()
        f = quat(0.0, -np.cosh(X) * np.cos(Y), -np.cosh(X) * np.sin(Y), X)
        return AffineImmersion(f, grid, "catenoid")

    if kind == "enneper":
        # Weierstrass data g = z, eta = dz
        grid = _patch_grid(spec, kind)
        U, V = grid.coords()
        f = quat(0.0, U - U ** 3 / 3 + U * V ** 2, -V + V ** 3 / 3 - U ** 2 * V, U ** 2 - V ** 2)
        return AffineImmersion(f, grid, "enneper")

    if kind == "twistor":
        grid = _patch_grid(spec, kind)
        X, Y = grid.coords()
        coeffs = spec.coeffs if spec.coeffs is not None else TWISTOR_DEFAULT
        v = twistor_lift(X + 1j * Y, coeffs, spec.convention)
        return AffineImmersion(project(LineBundle.from_complex(v, grid)).f, grid, "twistor")

    raise BadSpec(f"unknown surface kind '{spec.kind}'")


# ==========================================
# Normals and lifts
# ==========================================

def normals(imm: AffineImmersion) -> NormalPair:
    """
    Left and right normals from *df = N df = -df R.

    N = Im(f_y f_x^-1) and R = Im(-f_x^-1 f_y), both re-unitized; the residual is
    the sup over X in {d/dx, d/dy} of |*df(X) - N df(X)| + |*df(X) + df(X) R|
    divided by the conformal factor |df|.
    """
    df = d_field(imm.f, imm.grid)
    fx, fy = df.x, df.y
    nfx = qnorm(fx)
    if np.any(nfx < DEGENERATE_TOL):
        bad = np.argwhere(nfx < DEGENERATE_TOL)[0]
        raise DegenerateDifferential("df vanishes", vertex=tuple(bad))
    fx_inv = qinv(fx)
    N = qunit(qimag(qmul(fy, fx_inv)))
    R = qunit(qimag(-qmul(fx_inv, fy)))

    scale = np.sqrt(0.5 * (nfx ** 2 + qnorm(fy) ** 2))
    res_x = qnorm(fy - qmul(N, fx)) + qnorm(fy + qmul(fx, R))
    res_y = qnorm(-fx - qmul(N, fy)) + qnorm(-fx + qmul(fy, R))
    residual = sup(np.maximum(res_x, res_y) / scale, imm.grid)
    return NormalPair(N, R, residual)


def lift(imm: AffineImmersion) -> LineBundle:
    """psi = (f, 1) / |(f, 1)|."""
    ones = np.broadcast_to(ONE, imm.f.shape)
    psi = np.stack([imm.f, ones], axis=-2)
    n = np.sqrt(np.sum(imm.f * imm.f, axis=-1) + 1.0)
    return LineBundle(psi / n[..., None, None], imm.grid)


def project(L: LineBundle, name: str = "surface") -> AffineImmersion:
    """f = psi_1 psi_2^-1; raises PointAtInfinity where psi_2 vanishes."""
    psi1, psi2 = L.psi[..., 0, :], L.psi[..., 1, :]
    n2 = qnorm(psi2)
    n = np.sqrt(qnorm(psi1) ** 2 + n2 ** 2)
    bad = n2 < INFINITY_TOL * n
    if np.any(bad):
        raise PointAtInfinity("line passes through the point at infinity",
                              vertex=tuple(np.argwhere(bad)[0]))
    return AffineImmersion(qmul(psi1, qinv(psi2)), L.grid, name)


def infinity_mask(L: LineBundle, tol: float = INFINITY_TOL) -> np.ndarray:
    psi1, psi2 = L.psi[..., 0, :], L.psi[..., 1, :]
    n2 = qnorm(psi2)
    return n2 < tol * np.sqrt(qnorm(psi1) ** 2 + n2 ** 2)


# ==========================================
# Export
# ==========================================

def stereographic(points: np.ndarray, pole=DEFAULT_POLE) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stereographic projection R^4 -> R^3 from a unit pole p:
    x -> (x - <x,p> p) / (1 - <x,p>), expressed in an orthonormal basis of p-perp.
    Returns (points3, clamped_mask); clamped points are set to the origin.
    """
    p = np.asarray(pole, dtype=float)
    if np.linalg.norm(p) == 0:
        raise BadSpec("pole must be nonzero")
    p = p / np.linalg.norm(p)
    Qm, _ = np.linalg.qr(np.column_stack([p, np.eye(4)]))
    basis = Qm[:, 1:4]
    for k in range(3):
        if basis[np.argmax(np.abs(basis[:, k])), k] < 0:
            basis[:, k] *= -1
    s = points @ p
    denom = 1.0 - s
    clamped = np.abs(denom) < CLAMP_TOL
    safe = np.where(clamped, 1.0, denom)
    proj = (points - s[..., None] * p) @ basis / safe[..., None]
    proj[clamped] = 0.0
    return proj, clamped


def save_obj(path, imm: AffineImmersion, projection: str = "stereographic",
             pole=DEFAULT_POLE) -> int:
    """
    Writes the surface as a triangulated OBJ mesh. Faces wrap across periodic
    directions. Returns the number of clamped vertices (listed in '<path>.clamped.txt').
    """
    grid = imm.grid
    if projection == "stereographic":
        pts, clamped = stereographic(imm.f, pole)
    elif projection == "first3":
        pts, clamped = imm.f[..., :3], np.zeros(grid.shape, dtype=bool)
    elif projection == "imag":
        pts, clamped = imm.f[..., 1:], np.zeros(grid.shape, dtype=bool)
    else:
        raise BadSpec(f"unknown projection '{projection}'")

    def vid(i, j):
        return (i % grid.nx) * grid.ny + (j % grid.ny) + 1

    ix = grid.nx if grid.periodic_x else grid.nx - 1
    iy = grid.ny if grid.periodic_y else grid.ny - 1
    with open(path, "w") as fh:
        fh.write(f"o {imm.name}\n")
        for v in pts.reshape(-1, 3):
            fh.write(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}\n")
        for i in range(ix):
            for j in range(iy):
                a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
                fh.write(f"f {a} {b} {c}\n")
                fh.write(f"f {a} {c} {d}\n")

    n_clamped = int(np.count_nonzero(clamped))
    if n_clamped:
        with open(f"{path}.clamped.txt", "w") as fh:
            fh.write("# vertex i j\n")
            for i, j in np.argwhere(clamped):
                fh.write(f"{vid(i, j)} {i} {j}\n")
    return n_clamped
