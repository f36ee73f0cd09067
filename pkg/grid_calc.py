"""
Discrete Calculus on Conformal Grids

This module discretizes the Riemann surface M by a rectangular grid sampled in a
conformal coordinate z = x + iy, so the complex structure of the chart is the
constant rotation J_M d/dx = d/dy, J_M d/dy = -d/dx.

Action:
It provides the calculus the geometry stages use:
1. Fields: arrays whose first two axes are the grid (axis 0 = x, axis 1 = y).
2. 1-forms: the pair (omega(d/dx), omega(d/dy)) stored collocated on vertices.
3. 2-forms: the value sigma(d/dx, d/dy) per vertex.
4. d on fields and 1-forms, the Hodge-type star, the type splits with respect to
   a complex structure S and to I (right multiplication by i), the wedge-trace
   and integration.

Connection:
Every geometric module (immersion, meancurvsphere, flatfam, mudarboux,
sequences) differentiates through `d_field` so all derivatives share one stencil.

Inputs:
- Grid definitions (torus or patch), the stencil choice ('central' or 'spectral')

Outputs:
- Fields, OneForm and TwoForm arrays; optional CSV dump of fields via pandas

Process:
1. Periodic directions: central differences via np.roll, or FFT differentiation
   when the grid stencil is 'spectral'.
2. Patch directions: np.gradient with second-order one-sided boundary stencils.
3. Statistics on patches (sup norms, energies) are taken over an interior region
   because every derivative level loses one order in the one-sided rows.
"""

import numpy as np
import pandas as pd
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

from errors import GridTooSmall, NotComplexStructure, BadSpec
from quatlin import I4, cnorm, ctrace

# --- Configuration ---
MIN_POINTS = 8
BOUNDARY_FRACTION = 0.2     # share of a patch extent trimmed from each side for statistics
STENCILS = ("central", "spectral")
S_SQUARE_TOL = 1e-8         # ||S^2 + 1|| accepted by type_split_S
# ---------------------


@dataclass(frozen=True)
class Grid:
    """
    Rectangular sample of a conformal chart.

    Attributes:
        nx, ny: Sample counts
        hx, hy: Coordinate spacings
        periodic_x, periodic_y: Whether the direction wraps
        topology: 'torus' (periodic both ways) or 'patch' (simply connected)
        x0, y0: Coordinates of vertex (0, 0)
        stencil: 'central' or 'spectral' (spectral only affects periodic directions)
    """
    nx: int
    ny: int
    hx: float
    hy: float
    periodic_x: bool
    periodic_y: bool
    topology: str
    x0: float = 0.0
    y0: float = 0.0
    stencil: str = "central"

    def __post_init__(self):
        if self.nx < MIN_POINTS or self.ny < MIN_POINTS:
            raise GridTooSmall(f"grid {self.nx}x{self.ny} is below the minimum of {MIN_POINTS} points")
        if self.topology == "torus" and not (self.periodic_x and self.periodic_y):
            raise BadSpec("a torus grid must be periodic in both directions")
        if self.topology == "patch" and (self.periodic_x or self.periodic_y):
            raise BadSpec("a patch grid cannot be periodic")
        if self.topology not in ("torus", "patch"):
            raise BadSpec(f"unknown topology '{self.topology}'")
        if self.stencil not in STENCILS:
            raise BadSpec(f"unknown stencil '{self.stencil}'")

    @classmethod
    def torus(cls, nx: int, ny: Optional[int] = None, Lx: float = 2 * np.pi,
              Ly: Optional[float] = None, stencil: str = "central") -> "Grid":
        ny = nx if ny is None else ny
        Ly = Lx if Ly is None else Ly
        return cls(nx, ny, Lx / nx, Ly / ny, True, True, "torus", 0.0, 0.0, stencil)

    @classmethod
    def patch(cls, nx: int, ny: Optional[int] = None, xrange: Tuple[float, float] = (-1.0, 1.0),
              yrange: Optional[Tuple[float, float]] = None, stencil: str = "central") -> "Grid":
        ny = nx if ny is None else ny
        yrange = xrange if yrange is None else yrange
        if nx < MIN_POINTS or ny < MIN_POINTS:
            raise GridTooSmall(f"grid {nx}x{ny} is below the minimum of {MIN_POINTS} points")
        hx = (xrange[1] - xrange[0]) / (nx - 1)
        hy = (yrange[1] - yrange[0]) / (ny - 1)
        return cls(nx, ny, hx, hy, False, False, "patch", xrange[0], yrange[0], stencil)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def extent(self) -> Tuple[float, float]:
        lx = self.nx * self.hx if self.periodic_x else (self.nx - 1) * self.hx
        ly = self.ny * self.hy if self.periodic_y else (self.ny - 1) * self.hy
        return lx, ly

    @property
    def chart_scale(self) -> float:
        lx, ly = self.extent
        return float(np.sqrt(lx * ly) / (2 * np.pi))

    @property
    def discretization_floor(self) -> float:
        """(h/L)^2 of the coarser direction; thresholds that must survive O(h^2) error scale with it."""
        lx, ly = self.extent
        return float(max(self.hx / lx, self.hy / ly) ** 2)

    def coords(self) -> Tuple[np.ndarray, np.ndarray]:
        x = self.x0 + self.hx * np.arange(self.nx)
        y = self.y0 + self.hy * np.arange(self.ny)
        return np.meshgrid(x, y, indexing="ij")

    def as_patch(self) -> "Grid":
        """The same vertices viewed as a cut fundamental square (no wrapping)."""
        if self.topology == "patch":
            return self
        return replace(self, periodic_x=False, periodic_y=False, topology="patch", stencil="central")

    def with_stencil(self, stencil: str) -> "Grid":
        return replace(self, stencil=stencil)

    def interior_mask(self) -> np.ndarray:
        """Vertices used for statistics; the whole grid on periodic directions."""
        mx = np.ones(self.nx, dtype=bool)
        my = np.ones(self.ny, dtype=bool)
        if not self.periodic_x:
            i = np.arange(self.nx) / (self.nx - 1)
            mx = (i >= BOUNDARY_FRACTION - 1e-12) & (i <= 1 - BOUNDARY_FRACTION + 1e-12)
        if not self.periodic_y:
            j = np.arange(self.ny) / (self.ny - 1)
            my = (j >= BOUNDARY_FRACTION - 1e-12) & (j <= 1 - BOUNDARY_FRACTION + 1e-12)
        return mx[:, None] & my[None, :]

    def center_index(self) -> Tuple[int, int]:
        if self.topology == "torus":
            return (0, 0)
        return (self.nx // 2, self.ny // 2)


@dataclass
class OneForm:
    """
    A 1-form stored by its values on the coordinate fields.

    Attributes:
        x: omega(d/dx), field array
        y: omega(d/dy), field array
    """
    x: np.ndarray
    y: np.ndarray

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "OneForm":
        return OneForm(-self.x, -self.y)

    def __mul__(self, c) -> "OneForm":
        return OneForm(c * self.x, c * self.y)

    __rmul__ = __mul__

    def left(self, m: np.ndarray) -> "OneForm":
        """m . omega for matrix fields (complex 4x4)."""
        return OneForm(m @ self.x, m @ self.y)

    def right(self, m: np.ndarray) -> "OneForm":
        return OneForm(self.x @ m, self.y @ m)

    def apply(self, v: np.ndarray) -> "OneForm":
        """omega(X) v for a matrix-valued form and a ComplexVec4 field."""
        return OneForm(matvec(self.x, v), matvec(self.y, v))

    def components(self):
        return (self.x, self.y)


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", m, v)


# ==========================================
# Derivatives
# ==========================================

def _spectral(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    n = f.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = n
    df = np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis)
    return df if np.iscomplexobj(f) else df.real


def partial(f: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Partial derivative along grid axis 0 (x) or 1 (y)."""
    h = grid.hx if axis == 0 else grid.hy
    periodic = grid.periodic_x if axis == 0 else grid.periodic_y
    if f.shape[axis] < MIN_POINTS:
        raise GridTooSmall(f"field has {f.shape[axis]} samples along axis {axis}")
    if periodic:
        if grid.stencil == "spectral":
            return _spectral(f, h, axis)
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2 * h)
    return np.gradient(f, h, axis=axis, edge_order=2)


def d_field(f: np.ndarray, grid: Grid) -> OneForm:
    """df = (f_x, f_y)."""
    return OneForm(partial(f, grid, 0), partial(f, grid, 1))


def star(omega: OneForm) -> OneForm:
    """(*omega)(X) = omega(J_M X): (*omega)_x = omega_y, (*omega)_y = -omega_x."""
    return OneForm(omega.y, -omega.x)


def d_oneform(omega: OneForm, grid: Grid) -> np.ndarray:
    """d omega (d/dx, d/dy) = d/dx omega_y - d/dy omega_x."""
    return partial(omega.y, grid, 0) - partial(omega.x, grid, 1)


# ==========================================
# Type decompositions
# ==========================================

def type_split_S(omega: OneForm, S: np.ndarray, tol: float = S_SQUARE_TOL) -> Tuple[OneForm, OneForm]:
    """
    Split a matrix-valued 1-form into parts with *w' = S w' and *w'' = -S w''.

    omega' = 1/2 (omega - S *omega), omega'' = 1/2 (omega + S *omega).
    """
    defect = cnorm(S @ S + I4)
    if np.any(defect > tol):
        vertex = tuple(np.argwhere(defect > tol)[0][:2]) if defect.ndim >= 2 else None
        raise NotComplexStructure(f"S^2 + 1 reaches {float(defect.max()):.3e}", vertex=vertex)
    s_star = star(omega).left(S)
    return 0.5 * (omega - s_star), 0.5 * (omega + s_star)


def type_split_I(omega: OneForm) -> Tuple[OneForm, OneForm]:
    """omega^(1,0) = 1/2 (omega - I *omega), omega^(0,1) = 1/2 (omega + I *omega); I acts as 1j."""
    i_star = 1j * star(omega)
    return 0.5 * (omega - i_star), 0.5 * (omega + i_star)


def wedge(alpha: OneForm, beta: OneForm) -> np.ndarray:
    """Matrix-valued 2-form (alpha ^ beta)(d/dx, d/dy) = alpha_x beta_y - alpha_y beta_x."""
    return alpha.x @ beta.y - alpha.y @ beta.x


def wedge_trace(alpha: OneForm, beta: OneForm) -> np.ndarray:
    """<alpha ^ beta>(d/dx, d/dy) with <B> the real trace."""
    return ctrace(wedge(alpha, beta))


# ==========================================
# Integration and statistics
# ==========================================

def weights(grid: Grid) -> np.ndarray:
    wx = np.full(grid.nx, grid.hx)
    wy = np.full(grid.ny, grid.hy)
    if not grid.periodic_x:
        wx[[0, -1]] *= 0.5
    if not grid.periodic_y:
        wy[[0, -1]] *= 0.5
    return wx[:, None] * wy[None, :]


def integrate(sigma: np.ndarray, grid: Grid, mask: Optional[np.ndarray] = None) -> float:
    """Sum of sigma hx hy with trapezoid weights on patch edges, optionally restricted to a mask."""
    w = weights(grid)
    if mask is not None:
        w = w * mask
    return float(np.sum(sigma * w))


def sup(values: np.ndarray, grid: Grid) -> float:
    """Maximum of a scalar field over the statistics region of the grid."""
    return float(np.max(values[grid.interior_mask()]))


def sup_form(omega: OneForm, grid: Grid) -> float:
    """Sup over vertices of max(|omega_x|, |omega_y|) for matrix-valued forms."""
    return max(sup(cnorm(omega.x), grid), sup(cnorm(omega.y), grid))


# ==========================================
# Serialization
# ==========================================

def fields_frame(grid: Grid, fields: Dict[str, np.ndarray]) -> pd.DataFrame:
    """One row per vertex: x, y, then the flattened payload components of every field."""
    X, Y = grid.coords()
    columns = {"x": X.ravel(), "y": Y.ravel()}
    n = grid.nx * grid.ny
    for name, arr in fields.items():
        flat = np.asarray(arr).reshape(n, -1)
        for k in range(flat.shape[1]):
            if np.iscomplexobj(flat):
                columns[f"{name}_{k}_re"] = flat[:, k].real
                columns[f"{name}_{k}_im"] = flat[:, k].imag
            else:
                columns[f"{name}_{k}"] = flat[:, k]
    return pd.DataFrame(columns)


def save_fields_csv(path, grid: Grid, fields: Dict[str, np.ndarray]) -> None:
    fields_frame(grid, fields).to_csv(path, index=False, float_format="%.10g")
