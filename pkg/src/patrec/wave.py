"""Discrete acoustic forward operator on a circular measurement geometry.

The 2-D wave solution with initial pressure f and zero initial velocity,
restricted to the measurement circle, is computed from the classical
representation: circular means of f, followed by the weighted radial
integral with kernel r / sqrt(t^2 - r^2), followed by a time derivative.
The substitution r = sqrt(t^2 - u^2) turns the singular radial integral into
a plain integral over u in [0, t], which is what all quadratures below use.

Three forward paths exist:

* phantoms (disc superpositions) use their closed-form circular means;
* radially symmetric generators get a distance/time table reused for every
  translate (waves of translates are rotations of one radial solution);
* the pixel generator uses the exact circle-square intersection arc length.

Scales: all routines here are scale-agnostic.  Callers that need the wave of
a scaled generator T^{-1} phi(./T) evaluate the unit-scale table at
(distance / T, time / T) and multiply by 1/T, which is exact for the wave
equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import BasisGrid, GeneratingFunction
from .phantom import Phantom

__all__ = [
    "DetectorGeometry",
    "TimeGrid",
    "Sinogram",
    "RadialWaveTable",
    "spherical_mean_numeric",
    "abel_transform",
    "abel_weight_matrix",
    "time_derivative",
    "forward_phantom",
    "forward_basis_radial",
    "basis_wave_at",
    "square_arc_fraction",
    "pixel_wave_rows",
    "forward_pixel",
    "t_inner",
    "add_noise",
]


@dataclass(frozen=True)
class DetectorGeometry:
    """Equispaced detectors on the circle of the given radius, with uniform
    arc-length quadrature weights summing to the circumference."""

    radius: float
    n_det: int

    def __post_init__(self):
        if self.radius <= 0 or self.n_det < 1:
            raise ValueError("need a positive radius and at least one detector")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(1, self.n_det + 1) / self.n_det

    @property
    def positions(self) -> np.ndarray:
        ang = self.angles
        return self.radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)

    @property
    def weight(self) -> float:
        """Arc-length weight per detector (uniform circle)."""
        return 2.0 * math.pi * self.radius / self.n_det


@dataclass(frozen=True)
class TimeGrid:
    """Uniform samples t_j = j * t_final / n_t for j = 1..n_t (t_1 > 0)."""

    t_final: float
    n_t: int

    def __post_init__(self):
        if self.t_final <= 0 or self.n_t < 3:
            raise ValueError("need t_final > 0 and at least 3 time samples")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_t

    @property
    def times(self) -> np.ndarray:
        return np.arange(1, self.n_t + 1) * self.dt

    def scaled(self, factor: float) -> "TimeGrid":
        return TimeGrid(self.t_final * factor, self.n_t)


@dataclass
class Sinogram:
    geometry: DetectorGeometry
    timegrid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.geometry.n_det, self.timegrid.n_t):
            raise ValueError(
                f"sinogram shape {self.values.shape} does not match "
                f"({self.geometry.n_det}, {self.timegrid.n_t})"
            )

    def copy_with(self, values) -> "Sinogram":
        return Sinogram(self.geometry, self.timegrid, np.array(values, dtype=float))


@dataclass
class RadialWaveTable:
    """Wave samples of a radially symmetric generator.

    values[n, j] is the solution at distance radii[n] from the generator
    center at the j-th time of the table's time grid.  The radii span
    [0, 2 * geometry.radius] so that any detector/center pair of the build
    geometry falls inside the table.
    """

    generator: GeneratingFunction
    step: float
    geometry: DetectorGeometry
    timegrid: TimeGrid
    radii: np.ndarray
    values: np.ndarray


# ---------------------------------------------------------------------------
# generic quadrature pieces


def spherical_mean_numeric(f_eval, z, r: float, n_phi: int) -> float:
    """Mean of f over the circle of radius r at z, by the periodic trapezoid
    rule with n_phi nodes; returns f(z) when r = 0."""
    if n_phi < 4:
        raise ValueError("need at least 4 angular nodes")
    z = np.asarray(z, dtype=float)
    if r == 0.0:
        return float(f_eval(z))
    ang = 2.0 * math.pi * np.arange(n_phi) / n_phi
    pts = z[None, :] + r * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    try:
        vals = np.asarray(f_eval(pts), dtype=float)
        if vals.shape != (n_phi,):
            raise TypeError
    except TypeError:
        vals = np.array([float(f_eval(p)) for p in pts])
    return float(vals.mean())


def abel_transform(g_radial, t: float, n_u: int) -> float:
    """Integral of r g(r) / sqrt(t^2 - r^2) over r in [0, t].

    Evaluated after the substitution r = sqrt(t^2 - u^2), which removes the
    endpoint singularity exactly: integral of g(sqrt(t^2 - u^2)) du over
    [0, t], by the n_u-node trapezoid rule.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0.0:
        return 0.0
    u = np.linspace(0.0, t, n_u)
    rho = np.sqrt(np.maximum(t * t - u * u, 0.0))
    try:
        vals = np.asarray(g_radial(rho), dtype=float)
        if vals.shape != rho.shape:
            raise TypeError
    except TypeError:
        vals = np.array([float(g_radial(r)) for r in rho])
    return float(np.trapezoid(vals, u))


def abel_weight_matrix(times: np.ndarray, r_grid: np.ndarray, n_u: int) -> np.ndarray:
    """Matrix W with (W @ g)[j] equal to abel_transform of the linear
    interpolant of samples g on the uniform r_grid at times[j].

    Shares the exact nodes and weights of abel_transform (u = t * v with
    n_u trapezoid nodes on [0, 1]); radii beyond the grid contribute zero.
    Assembling the matrix once lets many radial profiles (e.g. one per
    detector) reuse the quadrature as a single matmul.
    """
    times = np.asarray(times, dtype=float)
    r_grid = np.asarray(r_grid, dtype=float)
    dr = r_grid[1] - r_grid[0]
    n_r = r_grid.size
    W = np.zeros((times.size, n_r))
    v = np.linspace(0.0, 1.0, n_u)
    wv = np.full(n_u, 1.0 / (n_u - 1))
    wv[0] *= 0.5
    wv[-1] *= 0.5
    rows = np.arange(times.size)
    for vk, wk in zip(v, wv):
        rho = times * math.sqrt(max(1.0 - vk * vk, 0.0))
        inside = rho <= r_grid[-1] + 1e-12
        pos = np.clip((rho - r_grid[0]) / dr, 0.0, n_r - 1 - 1e-12)
        idx = pos.astype(int)
        lam = pos - idx
        wrow = times * wk * inside
        W[rows, idx] += wrow * (1.0 - lam)
        W[rows, idx + 1] += wrow * lam
    return W


def _windowed_abel_rows(times: np.ndarray, rho_nodes: np.ndarray, g_nodes: np.ndarray, n_u: int):
    """abel_transform of a profile supported on [rho_nodes[0], rho_nodes[-1]]
    for every time at once; the u-range is restricted to the support window,
    which changes nothing in the integral but concentrates the nodes."""
    w0, w1 = float(rho_nodes[0]), float(rho_nodes[-1])
    t = np.asarray(times, dtype=float)
    u_hi = np.sqrt(np.maximum(t * t - w0 * w0, 0.0))
    u_lo = np.sqrt(np.maximum(t * t - w1 * w1, 0.0))
    v = np.linspace(0.0, 1.0, n_u)
    u = u_lo[:, None] + (u_hi - u_lo)[:, None] * v[None, :]
    rho = np.sqrt(np.maximum(t[:, None] ** 2 - u * u, 0.0))
    vals = np.interp(rho, rho_nodes, g_nodes, left=0.0, right=0.0)
    du = (u_hi - u_lo) / (n_u - 1)
    acc = vals.sum(axis=1) - 0.5 * (vals[:, 0] + vals[:, -1])
    return acc * du


def time_derivative(values: np.ndarray, dt: float, axis: int = -1) -> np.ndarray:
    """Second-order time derivative: central differences inside, one-sided
    three-point stencils at the first and last sample."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    if v.shape[-1] < 3:
        raise ValueError("need at least 3 samples along the time axis")
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2.0 * dt)
    out[..., 0] = (-3.0 * v[..., 0] + 4.0 * v[..., 1] - v[..., 2]) / (2.0 * dt)
    out[..., -1] = (3.0 * v[..., -1] - 4.0 * v[..., -2] + v[..., -3]) / (2.0 * dt)
    return np.moveaxis(out, -1, axis)


# ---------------------------------------------------------------------------
# forward paths


def forward_phantom(
    phantom: Phantom,
    geometry: DetectorGeometry,
    timegrid: TimeGrid,
    n_u: int | None = None,
    n_fine: int | None = None,
) -> Sinogram:
    """Simulated data for a disc phantom.

    Circular means come from the closed-form arc angles (no rasterization);
    the radial integral uses the substitution trapezoid on a fine radius grid
    with linear interpolation of the means; the time derivative is the
    second-order stencil above.
    """
    if phantom.max_extent() >= geometry.radius:
        raise ValueError("phantom must be supported strictly inside the measurement disc")
    n_t = timegrid.n_t
    if n_u is None:
        n_u = 2 * n_t
    if n_fine is None:
        n_fine = max(2000, 2 * n_t)
    times = timegrid.times
    r_fine = np.linspace(0.0, timegrid.t_final, n_fine)
    W = abel_weight_matrix(times, r_fine, n_u)
    dets = geometry.positions
    means = np.empty((geometry.n_det, n_fine))
    for i in range(geometry.n_det):
        means[i] = phantom.exact_spherical_mean(dets[i], r_fine)
    integrals = means @ W.T
    values = time_derivative(integrals, timegrid.dt, axis=1)
    return Sinogram(geometry, timegrid, values)


def forward_basis_radial(
    gf: GeneratingFunction,
    step: float,
    n_r: int,
    geometry: DetectorGeometry,
    timegrid: TimeGrid,
    n_phi: int = 720,
    n_u: int | None = None,
    n_window: int = 512,
) -> RadialWaveTable:
    """Wave table of a radially symmetric generator at n_r equidistant
    distances in [0, 2 * geometry.radius] and the grid times.

    The circular mean of the generator about a point at distance r is
    supported on the radius window [r - a, r + a]; it is sampled there by the
    angular trapezoid rule (profile values via a dense 1-D interpolation
    table) and fed to the substitution quadrature restricted to the window.
    """
    if not gf.is_radial:
        raise ValueError("radial wave table requires a radially symmetric generator")
    if n_r < 2:
        raise ValueError("need at least two radii")
    if n_u is None:
        n_u = 2 * timegrid.n_t
    a = gf.a
    radii = np.linspace(0.0, 2.0 * geometry.radius, n_r)
    times = timegrid.times

    prof_r = np.linspace(0.0, a, 4096)
    prof_v = gf.radial_profile(prof_r)
    n_theta = max(8, n_phi // 2 + 1)
    theta = np.linspace(0.0, math.pi, n_theta)
    ct = np.cos(theta)
    wt = np.full(n_theta, 1.0 / (n_theta - 1))
    wt[0] *= 0.5
    wt[-1] *= 0.5

    integrals = np.zeros((n_r, timegrid.n_t))
    for n, rn in enumerate(radii):
        w0 = max(rn - a, 0.0)
        w1 = rn + a
        rho = np.linspace(w0, w1, n_window)
        dist = np.sqrt(
            np.maximum(rn * rn + rho[:, None] ** 2 - 2.0 * rn * rho[:, None] * ct[None, :], 0.0)
        )
        vals = np.interp(dist, prof_r, prof_v)  # profile is 0 at r = a; clamping is exact
        means = vals @ wt
        integrals[n] = _windowed_abel_rows(times, rho, means, n_u)
    values = time_derivative(integrals, timegrid.dt, axis=1)
    return RadialWaveTable(gf, step, geometry, timegrid, radii, values)


def basis_wave_at(table: RadialWaveTable, grid: BasisGrid, k, i: int, j: int) -> float:
    """Wave value of the scaled translate with index k at detector i, time j.

    The table lives in unit-scale coordinates (its geometry radius is
    R / scale and its times are the physical times divided by the scale), so
    the query distance is |z_i - m_k| / scale and the result carries the
    1/scale amplitude of the scaled generator.  Distances beyond the table
    contribute zero.
    """
    det = table.geometry.positions[i]
    center = table.step * np.asarray(k, dtype=float)
    r_q = float(np.hypot(det[0] - center[0], det[1] - center[1]))
    if r_q > table.radii[-1]:
        return 0.0
    val = float(np.interp(r_q, table.radii, table.values[:, j]))
    return val / grid.scale


# ---------------------------------------------------------------------------
# pixel path


def square_arc_fraction(centers, rho) -> np.ndarray:
    """Fraction of the circle |x - c| = rho lying inside the unit square
    [-1/2, 1/2)^2, for an array of centers (..., 2) and matching radii.

    Exact: the circle is cut at its (at most eight) crossings with the four
    edge lines, and whole arcs are classified by their midpoint.  rho = 0
    degenerates to the indicator of the square at the center.
    """
    c = np.asarray(centers, dtype=float)
    r = np.asarray(rho, dtype=float)
    cx, cy = np.broadcast_arrays(c[..., 0], c[..., 1])
    cx, cy, r = np.broadcast_arrays(cx, cy, r)
    shape = cx.shape
    cx, cy, r = cx.ravel(), cy.ravel(), r.ravel()
    n = cx.size
    ang = np.full((n, 8), -math.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        for idx, edge in enumerate((-0.5, 0.5)):
            q = np.where(r > 0, (edge - cx) / np.where(r > 0, r, 1.0), 2.0)
            ok = (np.abs(q) <= 1.0) & (r > 0)
            acos = np.arccos(np.clip(q, -1.0, 1.0))
            ang[:, 2 * idx] = np.where(ok, acos, -math.pi)
            ang[:, 2 * idx + 1] = np.where(ok, -acos, -math.pi)
        for idx, edge in enumerate((-0.5, 0.5)):
            q = np.where(r > 0, (edge - cy) / np.where(r > 0, r, 1.0), 2.0)
            ok = (np.abs(q) <= 1.0) & (r > 0)
            asin = np.arcsin(np.clip(q, -1.0, 1.0))
            other = np.where(asin >= 0, math.pi - asin, -math.pi - asin)
            ang[:, 4 + 2 * idx] = np.where(ok, asin, -math.pi)
            ang[:, 4 + 2 * idx + 1] = np.where(ok, other, -math.pi)
    ang.sort(axis=1)
    ext = np.concatenate([ang, ang[:, :1] + 2.0 * math.pi], axis=1)
    widths = np.diff(ext, axis=1)
    mids = 0.5 * (ext[:, :-1] + ext[:, 1:])
    px = cx[:, None] + r[:, None] * np.cos(mids)
    py = cy[:, None] + r[:, None] * np.sin(mids)
    inside = (np.abs(px) <= 0.5) & (np.abs(py) <= 0.5)
    frac = np.sum(widths * inside, axis=1) / (2.0 * math.pi)
    return frac.reshape(shape)


def pixel_wave_rows(
    offsets: np.ndarray,
    timegrid: TimeGrid,
    n_window: int = 64,
    far_margin: float = 2.5,
) -> np.ndarray:
    """Wave time series of the unit pixel for many center offsets at once.

    offsets has shape (P, 2) = observation point minus pixel center (unit
    coordinates); the result is (P, n_t).  The circular means vanish outside
    the distance window |D - rho| <= sqrt(2)/2; early times use the windowed
    substitution quadrature, late times (beyond the window by far_margin)
    a second-order moment expansion of the integral weight about the center
    distance, whose relative error stays at the 1e-3 level.
    """
    off = np.asarray(offsets, dtype=float)
    times = timegrid.times
    n_t = times.size
    P = off.shape[0]
    D = np.hypot(off[:, 0], off[:, 1])
    half_diag = math.sqrt(2.0) / 2.0
    w0 = np.maximum(D - half_diag, 0.0)
    w1 = D + half_diag

    # circle of radius rho about the observation point = circle centered at
    # the offset relative to the square at the origin
    rho = w0[:, None] + (w1 - w0)[:, None] * np.linspace(0.0, 1.0, n_window)[None, :]
    means = square_arc_fraction(off[:, None, :], rho)
    q = rho * means
    drho = (w1 - w0) / (n_window - 1)
    trap = np.ones(n_window)
    trap[0] = trap[-1] = 0.5
    dev = rho - D[:, None]
    m0 = (q * trap).sum(axis=1) * drho
    m1 = (q * dev * trap).sum(axis=1) * drho
    m2 = (q * dev * dev * trap).sum(axis=1) * drho

    integrals = np.zeros((P, n_t))
    t_cut = w1 + far_margin

    far = times[None, :] >= t_cut[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(far, times[None, :] ** 2 - D[:, None] ** 2, 1.0)
        W0 = base**-0.5
        W1 = D[:, None] * base**-1.5
        W2 = base**-1.5 + 3.0 * D[:, None] ** 2 * base**-2.5
        far_vals = m0[:, None] * W0 + m1[:, None] * W1 + 0.5 * m2[:, None] * W2
    integrals[far] = far_vals[far]

    near = (~far) & (times[None, :] > w0[:, None])
    pi_idx, tj_idx = np.nonzero(near)
    if pi_idx.size:
        t = times[tj_idx]
        u_hi = np.sqrt(np.maximum(t * t - w0[pi_idx] ** 2, 0.0))
        u_lo = np.sqrt(np.maximum(t * t - w1[pi_idx] ** 2, 0.0))
        v = np.linspace(0.0, 1.0, n_window)
        u = u_lo[:, None] + (u_hi - u_lo)[:, None] * v[None, :]
        rr = np.sqrt(np.maximum(t[:, None] ** 2 - u * u, 0.0))
        pos = np.clip((rr - w0[pi_idx, None]) / drho[pi_idx, None], 0.0, n_window - 1 - 1e-12)
        i0 = pos.astype(int)
        lam = pos - i0
        g = means[pi_idx[:, None], i0] * (1 - lam) + means[pi_idx[:, None], i0 + 1] * lam
        acc = g.sum(axis=1) - 0.5 * (g[:, 0] + g[:, -1])
        integrals[pi_idx, tj_idx] = acc * (u_hi - u_lo) / (n_window - 1)

    return time_derivative(integrals, timegrid.dt, axis=1)


def forward_pixel(
    grid: BasisGrid,
    geometry: DetectorGeometry,
    timegrid: TimeGrid,
    k,
    i: int,
    j: int,
    n_window: int = 96,
) -> float:
    """Wave value of the scaled pixel translate k at detector i, time j.

    Works in unit coordinates (offset and time divided by the grid scale) and
    applies the 1/scale amplitude of the scaled generator.
    """
    T = grid.scale
    det = geometry.positions[i]
    center = grid.spacing * np.asarray(k, dtype=float)
    offset = (det - center) / T
    rows = pixel_wave_rows(offset[None, :], timegrid.scaled(1.0 / T), n_window=n_window)
    return float(rows[0, j]) / T


# ---------------------------------------------------------------------------
# data-space inner product and noise


def t_inner(g1: Sinogram, g2: Sinogram) -> float:
    """Time-weighted data inner product:
    t_final/(n_t - 1) * sum_ij w_i g1(i,j) g2(i,j) t_j."""
    if g1.geometry != g2.geometry or g1.timegrid != g2.timegrid:
        raise ValueError("sinograms live on different geometries")
    tg = g1.timegrid
    fac = tg.t_final / (tg.n_t - 1)
    return float(fac * g1.geometry.weight * np.sum(g1.values * g2.values * tg.times[None, :]))


def add_noise(g: Sinogram, level: float, seed) -> Sinogram:
    """Additive Gaussian noise rescaled so that its discrete l2 norm equals
    level times the l2 norm of the data; deterministic for a given seed."""
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    if level == 0.0:
        return g.copy_with(g.values)
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(g.values.shape)
    norm_g = float(np.linalg.norm(g.values))
    norm_e = float(np.linalg.norm(e))
    if norm_e == 0.0 or norm_g == 0.0:
        return g.copy_with(g.values)
    return g.copy_with(g.values + e * (level * norm_g / norm_e))
