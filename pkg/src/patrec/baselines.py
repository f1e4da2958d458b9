"""Reference reconstructions: explicit filtered backprojection and the
discrete-data least-squares fit.

Both consume the same sinograms as the normal-system path.  Backprojection
implements the exact inversion formula for the circular geometry; the
discrete-data approach fits the basis expansion to the raw samples by
conjugate gradients on the matrix-free normal equations.
"""

from __future__ import annotations

import math

import numpy as np

from .basis import BasisGrid, GeneratingFunction
from .galerkin import (
    Coefficients,
    NumericalError,
    Reconstruction,
    cg_solve,
    make_accessor,
    reconstruct_image,
)
from .wave import Sinogram, time_derivative

__all__ = ["fbp_reconstruct", "dd_reconstruct"]


def fbp_reconstruct(g: Sinogram, raster, n_u: int | None = None) -> np.ndarray:
    """Filtered backprojection image on the raster (xs, ys).

    f(x) = -(1/pi) * integral over the detector circle of
    integral_{|x-p|}^{t_final} d_t(t g(p, t)) / sqrt(t^2 - |x-p|^2) dt.
    The substitution t = sqrt(rho^2 + u^2) removes the lower-endpoint
    singularity (integrand becomes h(t)/t du); the data integral is truncated
    at the final measurement time, beyond which the signal has decayed.
    """
    xs, ys = np.asarray(raster[0], dtype=float), np.asarray(raster[1], dtype=float)
    tg = g.timegrid
    if n_u is None:
        n_u = tg.n_t
    h = time_derivative(g.values * tg.times[None, :], tg.dt, axis=1)
    # interpolation table for h with a zero anchor at t = 0 (no signal before
    # the wave reaches the detector)
    t_tab = np.concatenate([[0.0], tg.times])
    h_tab = np.concatenate([np.zeros((g.geometry.n_det, 1)), h], axis=1)

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pix = np.stack([X.ravel(), Y.ravel()], axis=-1)
    acc = np.zeros(pix.shape[0])
    v = np.linspace(0.0, 1.0, n_u)
    t_final = tg.t_final
    for i, p in enumerate(g.geometry.positions):
        rho = np.hypot(pix[:, 0] - p[0], pix[:, 1] - p[1])
        u_max = np.sqrt(np.maximum(t_final**2 - rho**2, 0.0))
        u = u_max[:, None] * v[None, :]
        t = np.sqrt(rho[:, None] ** 2 + u * u)
        vals = np.interp(t, t_tab, h_tab[i]) / np.maximum(t, 1e-300)
        inner = (vals.sum(axis=1) - 0.5 * (vals[:, 0] + vals[:, -1])) * u_max / (n_u - 1)
        acc += g.geometry.weight * inner
    image = (-acc / math.pi).reshape(X.shape)
    if not np.all(np.isfinite(image)):
        raise NumericalError("backprojection produced non-finite values")
    return image


def dd_reconstruct(
    gf: GeneratingFunction,
    grid: BasisGrid,
    g: Sinogram,
    max_iter: int = 40,
    tol: float = 1e-10,
    accessor=None,
    raster=None,
    **quad,
) -> Reconstruction:
    """Least-squares fit of the basis expansion to the raw data samples.

    Minimizes |B c - g|^2 in the plain sample l2 norm by conjugate gradients
    on the normal equations; B maps coefficients to wave samples and is never
    materialized (it is dense, so only matrix-free products are practical).
    """
    if accessor is None:
        accessor = make_accessor(gf, grid, g.geometry, g.timegrid, **quad)
    b = accessor.adjoint(g.values).active()

    def normal_op(vec):
        c = Coefficients.from_active(grid, vec)
        return accessor.adjoint(accessor.forward(c)).active()

    result = cg_solve(normal_op, b, max_iter=max_iter, tol=tol)
    coeffs = Coefficients.from_active(grid, result.x)
    if raster is None:
        raster = grid.raster_axes()
    image = reconstruct_image(gf, grid, coeffs, raster)
    return Reconstruction(
        grid,
        coeffs,
        raster,
        image,
        method="dd-cg",
        residuals=result.residuals,
        iterations=result.iterations,
        converged=result.converged,
    )
