"""Assembly and solution of the normal system of the least-squares
reconstruction, plus rasterization of the result.

The system operator is a small-kernel 2-D convolution: its matrix entries
depend only on index differences, scaled by radius/2, thanks to the isometry
between object and data inner products and the translation structure of the
basis.  The right-hand side pairs the simulated waves of the basis functions
with the measured data under the time-weighted quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .basis import BasisGrid, GeneratingFunction, GramKernel, eval_generator, gram_kernel
from .wave import (
    DetectorGeometry,
    RadialWaveTable,
    Sinogram,
    TimeGrid,
    forward_basis_radial,
    pixel_wave_rows,
)

__all__ = [
    "NumericalError",
    "Coefficients",
    "GalerkinSystem",
    "CGResult",
    "Reconstruction",
    "RadialWaveAccessor",
    "PixelWaveAccessor",
    "make_accessor",
    "assemble_rhs",
    "apply_system",
    "cg_solve",
    "dense_system_matrix",
    "reconstruct_image",
    "galerkin_reconstruct",
]


class NumericalError(RuntimeError):
    """Raised when a solver or quadrature produces non-finite values."""


@dataclass
class Coefficients:
    """Coefficient field on the bounding box of the active index set.

    Entries outside the active disc mask are structurally zero.
    """

    grid: BasisGrid
    box: np.ndarray

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float)
        if self.box.shape != self.grid.box_shape:
            raise ValueError("coefficient box does not match the grid")
        self.box = np.where(self.grid.mask, self.box, 0.0)

    @classmethod
    def zeros(cls, grid: BasisGrid) -> "Coefficients":
        return cls(grid, np.zeros(grid.box_shape))

    def active(self) -> np.ndarray:
        """Masked entries as a flat vector (row-major over the box)."""
        return self.box[self.grid.mask]

    @classmethod
    def from_active(cls, grid: BasisGrid, vec) -> "Coefficients":
        box = np.zeros(grid.box_shape)
        box[grid.mask] = np.asarray(vec, dtype=float)
        return cls(grid, box)


@dataclass
class GalerkinSystem:
    """System kernel (pre-scaled by radius/2) and right-hand side."""

    grid: BasisGrid
    kernel: GramKernel
    rhs: Coefficients


def apply_system(system: GalerkinSystem, coeffs: Coefficients) -> Coefficients:
    """Apply the system operator: out[k] = sum_l kernel[l - k] c[l] on the
    active set (2-D correlation with the small kernel table)."""
    if coeffs.grid is not system.grid and coeffs.grid.box_shape != system.grid.box_shape:
        raise ValueError("coefficient index set does not match the system")
    masked = np.where(system.grid.mask, coeffs.box, 0.0)
    out = ndimage.correlate(masked, system.kernel.table, mode="constant", cval=0.0)
    return Coefficients(system.grid, out)


@dataclass
class CGResult:
    x: np.ndarray
    residuals: list[float]
    converged: bool
    iterations: int


def cg_solve(apply_op, b: np.ndarray, max_iter: int = 40, tol: float = 1e-10) -> CGResult:
    """Conjugate gradients from the zero start for a symmetric positive
    (semi-)definite operator given as a callable on arrays.

    Stops at max_iter or when the residual norm falls below tol times the
    initial one; the full residual-norm history is returned.  Non-finite
    values abort with a diagnostic.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(np.vdot(r, r))
    r0 = math.sqrt(rs)
    residuals = [r0]
    if r0 == 0.0:
        return CGResult(x, residuals, True, 0)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        ap = np.asarray(apply_op(p), dtype=float)
        if not np.all(np.isfinite(ap)):
            raise NumericalError(f"operator produced non-finite values at iteration {it}")
        denom = float(np.vdot(p, ap))
        if denom <= 0.0:
            # numerically singular direction; cannot proceed further
            break
        alpha = rs / denom
        x = x + alpha * p
        r = r - alpha * ap
        rs_new = float(np.vdot(r, r))
        if not math.isfinite(rs_new):
            raise NumericalError(f"residual became non-finite at iteration {it}")
        residuals.append(math.sqrt(rs_new))
        if residuals[-1] <= tol * r0:
            converged = True
            rs = rs_new
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return CGResult(x, residuals, converged, it)


def dense_system_matrix(system: GalerkinSystem) -> np.ndarray:
    """Materialized system matrix over the active set; for validation and
    direct solves of small systems."""
    grid = system.grid
    n = grid.n_active
    if n > 2500:
        raise ValueError(f"dense solve limited to 2500 unknowns, got {n}")
    kx = grid.kx[grid.mask]
    ky = grid.ky[grid.mask]
    K = system.kernel.half_width
    d1 = kx[None, :] - kx[:, None] + K
    d2 = ky[None, :] - ky[:, None] + K
    size = 2 * K + 1
    ok = (d1 >= 0) & (d1 < size) & (d2 >= 0) & (d2 < size)
    A = np.zeros((n, n))
    A[ok] = system.kernel.table[d1[ok], d2[ok]]
    return A


# ---------------------------------------------------------------------------
# wave accessors: matrix-free application of the data-side operator


class RadialWaveAccessor:
    """Forward/adjoint sampling of basis waves for a radial generator.

    The wave table is built once in unit-scale coordinates (detector radius
    divided by the grid scale, times divided by the grid scale); every
    translate is then a radius lookup, and the full data matrix is never
    materialized.
    """

    def __init__(
        self,
        gf: GeneratingFunction,
        grid: BasisGrid,
        geometry: DetectorGeometry,
        timegrid: TimeGrid,
        n_r: int = 1200,
        n_phi: int = 720,
        n_u: int | None = None,
        table: RadialWaveTable | None = None,
    ):
        if not gf.is_radial:
            raise ValueError("radial accessor requires a radially symmetric generator")
        self.gf = gf
        self.grid = grid
        self.geometry = geometry
        self.timegrid = timegrid
        T = grid.scale
        if table is None:
            scaled_geo = DetectorGeometry(geometry.radius / T, geometry.n_det)
            scaled_tg = timegrid.scaled(1.0 / T)
            table = forward_basis_radial(gf, grid.step, n_r, scaled_geo, scaled_tg, n_phi, n_u)
        self.table = table
        dets = self.table.geometry.positions  # unit coordinates = physical / T
        centers_x = grid.kx[grid.mask] * grid.step
        centers_y = grid.ky[grid.mask] * grid.step
        rq = np.hypot(
            dets[None, :, 0] - centers_x[:, None], dets[None, :, 1] - centers_y[:, None]
        )
        dr = self.table.radii[1] - self.table.radii[0]
        n_rad = self.table.radii.size
        pos = np.clip(rq / dr, 0.0, n_rad - 1 - 1e-12)
        self._idx = pos.astype(int)  # (n_active, n_det)
        self._lam = pos - self._idx

    def forward(self, coeffs: Coefficients) -> np.ndarray:
        """Data samples (n_det, n_t) of the wave of the coefficient field."""
        c = coeffs.active()
        n_det = self.geometry.n_det
        n_rad = self.table.radii.size
        bins = np.zeros((n_det, n_rad))
        det_idx = np.broadcast_to(np.arange(n_det)[None, :], self._idx.shape)
        flat = det_idx * n_rad + self._idx
        np.add.at(bins.ravel(), flat.ravel(), (c[:, None] * (1.0 - self._lam)).ravel())
        np.add.at(bins.ravel(), flat.ravel() + 1, (c[:, None] * self._lam).ravel())
        return (bins @ self.table.values) / self.grid.scale

    def adjoint(self, values: np.ndarray) -> Coefficients:
        """Plain (unweighted) adjoint: out[k] = sum_ij wave_k(i,j) values(i,j)."""
        C = np.asarray(values, dtype=float) @ self.table.values.T  # (n_det, n_r)
        det_idx = np.arange(self.geometry.n_det)[None, :]
        gathered = C[det_idx, self._idx] * (1.0 - self._lam) + C[det_idx, self._idx + 1] * self._lam
        return Coefficients.from_active(self.grid, gathered.sum(axis=1) / self.grid.scale)

    def adjoint_multi(self, values_list) -> list[Coefficients]:
        return [self.adjoint(v) for v in values_list]


class PixelWaveAccessor:
    """Matrix-free basis-wave sampling for the pixel generator.

    Wave blocks are recomputed chunk-wise from the analytic square means;
    nothing of size (basis x data) is ever stored.
    """

    def __init__(
        self,
        grid: BasisGrid,
        geometry: DetectorGeometry,
        timegrid: TimeGrid,
        n_window: int = 64,
        chunk: int = 40000,
    ):
        self.grid = grid
        self.geometry = geometry
        self.timegrid = timegrid
        self.n_window = n_window
        self.chunk = chunk
        T = grid.scale
        dets = geometry.positions / T
        centers_x = grid.kx[grid.mask] * grid.step
        centers_y = grid.ky[grid.mask] * grid.step
        n_active, n_det = centers_x.size, geometry.n_det
        self._offsets = np.empty((n_active, n_det, 2))
        self._offsets[..., 0] = dets[None, :, 0] - centers_x[:, None]
        self._offsets[..., 1] = dets[None, :, 1] - centers_y[:, None]
        self._tg_unit = timegrid.scaled(1.0 / T)

    def _blocks(self):
        n_active, n_det, _ = self._offsets.shape
        pairs = self._offsets.reshape(-1, 2)
        rows_per_chunk = max(1, self.chunk // n_det) * n_det
        for start in range(0, pairs.shape[0], rows_per_chunk):
            stop = min(start + rows_per_chunk, pairs.shape[0])
            rows = pixel_wave_rows(pairs[start:stop], self._tg_unit, self.n_window)
            yield start // n_det, rows.reshape(-1, n_det, self.timegrid.n_t) / self.grid.scale

    def forward(self, coeffs: Coefficients) -> np.ndarray:
        c = coeffs.active()
        out = np.zeros((self.geometry.n_det, self.timegrid.n_t))
        for k0, block in self._blocks():
            out += np.einsum("k,kij->ij", c[k0 : k0 + block.shape[0]], block)
        return out

    def adjoint(self, values: np.ndarray) -> Coefficients:
        return self.adjoint_multi([values])[0]

    def adjoint_multi(self, values_list) -> list[Coefficients]:
        """Adjoint of several data arrays in a single sweep over the wave
        blocks; the block computation dominates, so n data sets cost barely
        more than one."""
        vals = np.stack([np.asarray(v, dtype=float) for v in values_list])
        out = np.empty((len(values_list), self.grid.n_active))
        for k0, block in self._blocks():
            out[:, k0 : k0 + block.shape[0]] = np.einsum("kij,nij->nk", block, vals)
        return [Coefficients.from_active(self.grid, row) for row in out]


def make_accessor(
    gf: GeneratingFunction,
    grid: BasisGrid,
    geometry: DetectorGeometry,
    timegrid: TimeGrid,
    **quad,
):
    if gf.is_radial:
        return RadialWaveAccessor(gf, grid, geometry, timegrid, **quad)
    if gf.kind == "pixel":
        quad.pop("n_r", None)
        quad.pop("n_phi", None)
        quad.pop("n_u", None)
        return PixelWaveAccessor(grid, geometry, timegrid, **quad)
    raise ValueError(f"no forward path for generator kind {gf.kind!r}")


def assemble_rhs(gf: GeneratingFunction, grid: BasisGrid, accessor, g: Sinogram) -> Coefficients:
    """Right-hand side: time-weighted data inner products of each basis wave
    with the measured data."""
    if accessor.grid is not grid and accessor.grid.box_shape != grid.box_shape:
        raise ValueError("accessor was built for a different grid")
    tg = g.timegrid
    fac = tg.t_final / (tg.n_t - 1) * g.geometry.weight
    weighted = g.values * tg.times[None, :] * fac
    return accessor.adjoint(weighted)


# ---------------------------------------------------------------------------
# reconstruction


@dataclass
class Reconstruction:
    grid: BasisGrid
    coefficients: Coefficients
    raster: tuple[np.ndarray, np.ndarray]
    image: np.ndarray
    method: str = ""
    residuals: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True


def reconstruct_image(
    gf: GeneratingFunction,
    grid: BasisGrid,
    coeffs: Coefficients,
    raster: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Sample sum_k c_k phi_k on the raster (default: the lattice of basis
    centers inside [-radius, radius]^2); only support-overlapping indices
    contribute."""
    if raster is None:
        raster = grid.raster_axes()
    xs, ys = np.asarray(raster[0], dtype=float), np.asarray(raster[1], dtype=float)
    image = np.zeros((xs.size, ys.size))
    reach = gf.support_halfwidth * grid.scale
    kx = grid.kx[grid.mask]
    ky = grid.ky[grid.mask]
    c = coeffs.active()
    sp = grid.spacing
    for k1, k2, ck in zip(kx, ky, c):
        if ck == 0.0:
            continue
        cxk, cyk = k1 * sp, k2 * sp
        i0 = np.searchsorted(xs, cxk - reach - 1e-12)
        i1 = np.searchsorted(xs, cxk + reach + 1e-12, side="right")
        j0 = np.searchsorted(ys, cyk - reach - 1e-12)
        j1 = np.searchsorted(ys, cyk + reach + 1e-12, side="right")
        if i0 >= i1 or j0 >= j1:
            continue
        X, Y = np.meshgrid(xs[i0:i1], ys[j0:j1], indexing="ij")
        pts = np.stack([X / grid.scale - grid.step * k1, Y / grid.scale - grid.step * k2], axis=-1)
        image[i0:i1, j0:j1] += ck * eval_generator(gf, pts) / grid.scale
    return image


def galerkin_reconstruct(
    gf: GeneratingFunction,
    grid: BasisGrid,
    g: Sinogram,
    solver: str = "cg",
    max_iter: int = 40,
    tol: float = 1e-10,
    gram_quad: int = 401,
    accessor=None,
    raster=None,
    **quad,
) -> Reconstruction:
    """Full reconstruction: assemble kernel and right-hand side, solve the
    normal system, rasterize.

    solver is "cg" (default, matching the reference experiments) or "dense"
    (direct solve, limited to 2500 unknowns).  The pixel generator has the
    identity kernel up to the radius/2 scale and is solved directly.
    """
    R = g.geometry.radius
    kernel = gram_kernel(gf, grid, gram_quad).scaled(R / 2.0)
    if accessor is None:
        accessor = make_accessor(gf, grid, g.geometry, g.timegrid, **quad)
    rhs = assemble_rhs(gf, grid, accessor, g)
    system = GalerkinSystem(grid, kernel, rhs)

    if gf.kind == "pixel":
        coeffs = Coefficients(grid, rhs.box / (R / 2.0))
        result = CGResult(coeffs.active(), [0.0], True, 0)
    elif solver == "dense":
        A = dense_system_matrix(system)
        x = np.linalg.solve(A, rhs.active())
        coeffs = Coefficients.from_active(grid, x)
        result = CGResult(x, [0.0], True, 0)
    elif solver == "cg":

        def apply_flat(vec):
            c = Coefficients.from_active(grid, vec)
            return apply_system(system, c).active()

        result = cg_solve(apply_flat, rhs.active(), max_iter=max_iter, tol=tol)
        coeffs = Coefficients.from_active(grid, result.x)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    if raster is None:
        raster = grid.raster_axes()
    image = reconstruct_image(gf, grid, coeffs, raster)
    if not np.all(np.isfinite(image)):
        raise NumericalError("reconstruction produced non-finite image values")
    return Reconstruction(
        grid,
        coeffs,
        raster,
        image,
        method=f"galerkin-{solver}",
        residuals=result.residuals,
        iterations=result.iterations,
        converged=result.converged,
    )
