"""Generating functions, their scaled/translated families and Gram structure.

Three generators are supported:

* ``pixel``     -- indicator of the half-open square [-1/2, 1/2)^2,
* ``kb``        -- generalized Kaiser-Bessel function with the standard
                   parameters (order m, taper gamma, support radius a),
* ``bilinear``  -- tensor-product hat function on [-1, 1]^2.

The reconstruction family is phi_k(x) = T^{-1} phi(x/T - s k) for scale T and
step s, so every member has the same L2 norm as the generator.  This module
also provides the frequency-domain diagnostics for such families: Riesz/frame
bounds, the orthonormalized generator, the pointwise approximation error
kernel, the partition-of-unity defect and the saturation error.

Fourier convention: phihat(xi) = (2 pi)^{-1} * integral phi(x) e^{-i<xi,x>} dx
(d = 2 throughout).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .specfun import bessel_i, bessel_j, sinc

__all__ = [
    "GeneratingFunction",
    "BasisGrid",
    "GramKernel",
    "eval_generator",
    "eval_generator_hat",
    "eval_basis",
    "gram_kernel",
    "folded_spectrum",
    "error_kernel",
    "approx_error_main",
    "riesz_bounds",
    "orthonormalized_hat",
    "partition_of_unity_defect",
    "saturation_error",
]

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class GeneratingFunction:
    """Tagged description of a basis generator.

    For ``kb`` the fields (m, gamma, a) are the usual order, taper and
    support-radius parameters; they are ignored for the other kinds.
    """

    kind: str
    m: int = 0
    gamma: float = 0.0
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in ("pixel", "kb", "bilinear"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == "kb":
            if self.m < 0 or self.gamma < 0 or self.a <= 0:
                raise ValueError("kb generator needs m >= 0, gamma >= 0, a > 0")

    @staticmethod
    def pixel() -> "GeneratingFunction":
        return GeneratingFunction("pixel")

    @staticmethod
    def kaiser_bessel(m: int, gamma: float, a: float) -> "GeneratingFunction":
        return GeneratingFunction("kb", m=m, gamma=gamma, a=a)

    @staticmethod
    def bilinear() -> "GeneratingFunction":
        return GeneratingFunction("bilinear")

    @staticmethod
    def from_dict(spec) -> "GeneratingFunction":
        kind = spec["kind"]
        if kind == "kb":
            return GeneratingFunction.kaiser_bessel(int(spec["m"]), float(spec["gamma"]), float(spec["a"]))
        return GeneratingFunction(kind)

    def to_dict(self):
        if self.kind == "kb":
            return {"kind": "kb", "m": self.m, "gamma": self.gamma, "a": self.a}
        return {"kind": self.kind}

    @property
    def is_radial(self) -> bool:
        return self.kind == "kb"

    @property
    def is_separable(self) -> bool:
        return self.kind in ("pixel", "bilinear")

    @property
    def support_halfwidth(self) -> float:
        """Half-width of the axis-aligned bounding box of the support."""
        return {"pixel": 0.5, "bilinear": 1.0, "kb": self.a}[self.kind]

    @property
    def support_radius(self) -> float:
        """Radius of the smallest disc containing the support."""
        if self.kind == "kb":
            return self.a
        return self.support_halfwidth * math.sqrt(2.0)

    @property
    def fourier_decay(self) -> float:
        """Decay exponent p with phihat = O(|xi|^-p)."""
        if self.kind == "kb":
            return 1.0 + self.m + 0.5  # d/2 + m + 1/2 in d = 2
        return {"pixel": 1.0, "bilinear": 2.0}[self.kind]

    def radial_profile(self, r):
        """KB profile as a function of the radius; zero outside [0, a]."""
        if self.kind != "kb":
            raise ValueError("radial_profile is only defined for the kb generator")
        r = np.asarray(r, dtype=float)
        w2 = np.clip(1.0 - (r / self.a) ** 2, 0.0, None)
        w = np.sqrt(w2)
        return np.where(r <= self.a, w**self.m * bessel_i(self.m, self.gamma * w), 0.0) / bessel_i(
            self.m, self.gamma
        )


def eval_generator(gf: GeneratingFunction, x) -> np.ndarray:
    """Generator value at points x of shape (..., 2)."""
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    x1, x2 = pts[..., 0], pts[..., 1]
    if gf.kind == "pixel":
        out = ((x1 >= -0.5) & (x1 < 0.5) & (x2 >= -0.5) & (x2 < 0.5)).astype(float)
    elif gf.kind == "bilinear":
        out = np.clip(1.0 - np.abs(x1), 0.0, None) * np.clip(1.0 - np.abs(x2), 0.0, None)
    else:
        out = gf.radial_profile(np.hypot(x1, x2))
    return float(out[0]) if scalar else out


def _bessel_ratio_even(nu: float, w, branch_eps: float = 1e-6):
    """I_nu(sqrt(w)) / sqrt(w)^nu continued through w <= 0.

    As a function of w = z^2 this is entire: for w < 0 it equals
    J_nu(sqrt(-w)) / sqrt(-w)^nu, and near w = 0 a short Taylor expansion in w
    avoids the removable 0/0.  branch_eps bounds sqrt(|w|) below which the
    expansion is used.
    """
    w = np.asarray(w, dtype=float)
    z = np.sqrt(np.abs(w))
    out = np.empty_like(w)
    pos = (w > 0) & (z > branch_eps)
    neg = (w < 0) & (z > branch_eps)
    mid = ~(pos | neg)
    if np.any(pos):
        zp = z[pos]
        out[pos] = bessel_i(nu, zp) / zp**nu
    if np.any(neg):
        zn = z[neg]
        out[neg] = bessel_j(nu, zn) / zn**nu
    if np.any(mid):
        wm = w[mid]
        acc = np.zeros_like(wm)
        for k in range(5, -1, -1):
            coef = 1.0 / (2.0 ** (2 * k + nu) * math.factorial(k) * math.gamma(nu + k + 1))
            acc = acc * wm + coef
        out[mid] = acc
    return out


def eval_generator_hat(gf: GeneratingFunction, xi) -> np.ndarray:
    """Closed-form Fourier transform of the generator at frequencies (..., 2).

    All three generators are even, so the transform is real.
    """
    pts = np.asarray(xi, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    x1, x2 = pts[..., 0], pts[..., 1]
    if gf.kind == "pixel":
        out = sinc(x1 / 2.0) * sinc(x2 / 2.0) / TWO_PI
    elif gf.kind == "bilinear":
        out = (sinc(x1 / 2.0) * sinc(x2 / 2.0)) ** 2 / TWO_PI
    else:
        rho2 = x1 * x1 + x2 * x2
        w = gf.gamma**2 - gf.a**2 * rho2
        nu = 1.0 + gf.m  # d/2 + m with d = 2
        front = gf.a**2 * gf.gamma**gf.m / bessel_i(gf.m, gf.gamma)
        out = front * _bessel_ratio_even(nu, w)
    return float(out[0]) if scalar else out


def _hat_factor_1d(gf: GeneratingFunction, y):
    """One axis factor f with phihat(xi) = f(xi_1) f(xi_2) (separable kinds)."""
    c = 1.0 / math.sqrt(TWO_PI)
    if gf.kind == "pixel":
        return c * sinc(np.asarray(y) / 2.0)
    if gf.kind == "bilinear":
        return c * sinc(np.asarray(y) / 2.0) ** 2
    raise ValueError("not separable")


# ---------------------------------------------------------------------------
# basis grid


class BasisGrid:
    """Scaled lattice of basis centers restricted to the measurement disc.

    The active index set holds every integer pair k with |T s k| < radius
    (strict inequality); centers are m_k = T s k.
    """

    def __init__(self, scale: float, step: float, radius: float = 1.0):
        if scale <= 0 or step <= 0 or radius <= 0:
            raise ValueError("scale, step and radius must be positive")
        self.scale = float(scale)
        self.step = float(step)
        self.radius = float(radius)
        spacing = self.scale * self.step
        kmax = int(math.ceil(self.radius / spacing)) - 1
        self.kmax = max(kmax, 0)
        idx = np.arange(-self.kmax, self.kmax + 1)
        kx, ky = np.meshgrid(idx, idx, indexing="ij")
        self.kx = kx
        self.ky = ky
        self.mask = (kx.astype(float) ** 2 + ky.astype(float) ** 2) * spacing**2 < self.radius**2

    @classmethod
    def from_count(cls, n: int, step: float, radius: float = 1.0) -> "BasisGrid":
        """Grid with n lattice points per axis across [-radius, radius],
        i.e. scale T = 2 radius / (step (n - 1))."""
        if n < 2:
            raise ValueError("need at least a 2x2 lattice")
        return cls(2.0 * radius / (step * (n - 1)), step, radius)

    @property
    def spacing(self) -> float:
        """Center-to-center distance T s."""
        return self.scale * self.step

    @property
    def n_active(self) -> int:
        return int(self.mask.sum())

    @property
    def box_shape(self):
        return self.mask.shape

    def centers(self) -> np.ndarray:
        """(n_active, 2) array of active basis centers."""
        return np.stack(
            [self.kx[self.mask] * self.spacing, self.ky[self.mask] * self.spacing], axis=-1
        )

    def raster_axes(self):
        """1-D coordinate arrays of the lattice points inside [-radius, radius]^2
        (the default evaluation raster)."""
        m = int(math.floor(self.radius / self.spacing + 1e-12))
        idx = np.arange(-m, m + 1)
        return idx * self.spacing, idx * self.spacing


def eval_basis(gf: GeneratingFunction, grid: BasisGrid, k, x):
    """Value of the scaled translate with index k = (k1, k2) at points x."""
    pts = np.asarray(x, dtype=float)
    shifted = pts / grid.scale - grid.step * np.asarray(k, dtype=float)
    return eval_generator(gf, shifted) / grid.scale


# ---------------------------------------------------------------------------
# Gram kernel


@dataclass(frozen=True)
class GramKernel:
    """Inner products of the unit-scale translate family.

    table[n1 + K, n2 + K] = <phi(.), phi(. - s n)> for |n_i| <= K; entries with
    non-overlapping supports are exactly zero.  By the change of variables
    x -> x / T these numbers equal the scale-T inner products as well.
    """

    step: float
    half_width: int
    table: np.ndarray

    def entry(self, n1: int, n2: int) -> float:
        K = self.half_width
        if abs(n1) > K or abs(n2) > K:
            return 0.0
        return float(self.table[n1 + K, n2 + K])

    def scaled(self, factor: float) -> "GramKernel":
        return GramKernel(self.step, self.half_width, self.table * factor)


def _pixel_gram_entry(s: float, n1: int, n2: int) -> float:
    return max(0.0, 1.0 - s * abs(n1)) * max(0.0, 1.0 - s * abs(n2))


def _hat_autocorr_1d(d: float) -> float:
    """Autocorrelation of the 1-D hat on [-1, 1] at offset d (piecewise cubic)."""
    d = abs(d)
    if d >= 2.0:
        return 0.0
    if d <= 1.0:
        return d**3 / 2.0 - d**2 + 2.0 / 3.0
    return (2.0 - d) ** 3 / 6.0


def gram_kernel(gf: GeneratingFunction, grid_or_step, m_quad: int = 401) -> GramKernel:
    """Inner-product table of the unit-scale family.

    Pixel entries are exact tiling overlaps.  For the other generators each
    entry is the rectangle-rule sum (2 a')^2/(M-1)^2 * sum phi(x_ij) phi(x_ij - s n)
    over the M x M grid on [-a', a']^2, a' being the support half-width.
    """
    step = grid_or_step.step if isinstance(grid_or_step, BasisGrid) else float(grid_or_step)
    if m_quad < 2:
        raise ValueError("quadrature resolution must be at least 2")
    K = int(math.ceil(2.0 * gf.support_radius / step))
    size = 2 * K + 1
    table = np.zeros((size, size))
    if gf.kind == "pixel":
        for n1 in range(-K, K + 1):
            for n2 in range(-K, K + 1):
                table[n1 + K, n2 + K] = _pixel_gram_entry(step, n1, n2)
        return GramKernel(step, K, table)

    half = gf.support_halfwidth
    axis = np.linspace(-half, half, m_quad)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    base_pts = np.stack([X, Y], axis=-1)
    base = eval_generator(gf, base_pts)
    cell = (2.0 * half) ** 2 / (m_quad - 1) ** 2
    # even, axis-symmetric generators: the entry depends on (|n1|, |n2|) only
    for n1 in range(0, K + 1):
        for n2 in range(0, n1 + 1):
            if step * math.hypot(n1, n2) >= 2.0 * gf.support_radius:
                val = 0.0
            else:
                shifted_pts = np.stack([X - step * n1, Y - step * n2], axis=-1)
                val = cell * float(np.sum(base * eval_generator(gf, shifted_pts)))
            for s1 in (n1, -n1):
                for s2 in (n2, -n2):
                    table[s1 + K, s2 + K] = val
                    table[s2 + K, s1 + K] = val
    return GramKernel(step, K, table)


# ---------------------------------------------------------------------------
# lattice sums in frequency


def _separable_folded_1d(gf: GeneratingFunction, s: float, y: np.ndarray) -> np.ndarray:
    """Exact 1-D folded spectrum sum_k |f(y + 2 pi k / s)|^2 for one axis factor.

    Uses the finite cosine series with the axis autocorrelation samples as
    coefficients, which converges with no truncation error; the direct
    frequency sum would decay too slowly for these generators.
    """
    if gf.kind == "pixel":
        g = lambda n: max(0.0, 1.0 - s * abs(n))
        n_max = int(math.ceil(1.0 / s))
    else:
        g = lambda n: _hat_autocorr_1d(s * n)
        n_max = int(math.ceil(2.0 / s))
    y = np.asarray(y, dtype=float)
    out = np.full_like(y, g(0))
    for n in range(1, n_max + 1):
        coef = g(n)
        if coef != 0.0:
            out = out + 2.0 * coef * np.cos(s * n * y)
    return out * (s / TWO_PI)


def folded_spectrum(gf: GeneratingFunction, s: float, xi, kmax: int = 64) -> np.ndarray:
    """sum over k in Z^2 of |phihat(xi + 2 pi k / s)|^2 at frequencies (..., 2).

    Separable generators use an exact finite identity; the KB sum is truncated
    at |k|_inf <= kmax with a monotone-tail estimate (warns if the estimated
    truncation error exceeds 1e-8 of the central term).
    """
    pts = np.asarray(xi, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if gf.is_separable:
        out = _separable_folded_1d(gf, s, pts[..., 0]) * _separable_folded_1d(gf, s, pts[..., 1])
        return float(out[0]) if scalar else out

    offs = np.arange(-kmax, kmax + 1) * (TWO_PI / s)
    o1, o2 = np.meshgrid(offs, offs, indexing="ij")
    flat1, flat2 = o1.ravel(), o2.ravel()
    shape = pts.shape[:-1]
    flat_pts = pts.reshape(-1, 2)
    out = np.zeros(flat_pts.shape[0])
    shell = np.zeros(flat_pts.shape[0])
    outer = np.maximum(np.abs(o1.ravel()), np.abs(o2.ravel())) >= kmax * (TWO_PI / s) - 1e-12
    chunk = max(1, int(2e6) // flat1.size)
    for start in range(0, flat_pts.shape[0], chunk):
        blk = flat_pts[start : start + chunk]
        args = np.stack(
            [blk[:, None, 0] + flat1[None, :], blk[:, None, 1] + flat2[None, :]], axis=-1
        )
        vals = eval_generator_hat(gf, args) ** 2
        out[start : start + chunk] = vals.sum(axis=1)
        shell[start : start + chunk] = vals[:, outer].sum(axis=1)
    # tail bound from the outermost shell assuming |phihat|^2 ~ |xi|^(-2p);
    # compared against the accumulated sum (the returned quantity)
    p = gf.fourier_decay
    tail_est = shell * kmax / max(2.0 * p - 2.0, 1.0)
    bad = tail_est > 1e-8 * np.maximum(out, 1e-300)
    if np.any(bad):
        warnings.warn(
            "folded-spectrum truncation tail above 1e-8 of the sum; increase kmax",
            RuntimeWarning,
            stacklevel=2,
        )
    out = out.reshape(shape)
    return float(out.ravel()[0]) if scalar else out


def error_kernel(gf: GeneratingFunction, s: float, scale: float, xi, kmax: int = 64):
    """Pointwise approximation-error kernel of the (scale, s) family.

    Value 1 - |phihat(T xi)|^2 / sum_k |phihat(T xi + 2 pi k / s)|^2, in [0, 1].
    Raises if the folded spectrum underflows (no Riesz lower bound there).
    """
    pts = np.asarray(xi, dtype=float)
    scalar = pts.ndim == 1
    y = np.atleast_2d(pts) * scale
    den = np.asarray(folded_spectrum(gf, s, y, kmax=kmax))
    if np.any(den < 1e-300):
        raise ArithmeticError("folded spectrum vanished; translates are not a Riesz family here")
    num = eval_generator_hat(gf, y) ** 2
    out = np.clip(1.0 - num / den, 0.0, 1.0)
    return float(out.ravel()[0]) if scalar else out


def approx_error_main(
    gf: GeneratingFunction,
    s: float,
    scale: float,
    fhat_sq_sampler,
    resolution: int = 129,
    kmax: int = 64,
) -> float:
    """Main term of the L2 approximation error for a target with spectral
    density fhat_sq_sampler(xi) = |fhat(xi)|^2.

    Tensor trapezoid quadrature of |fhat|^2 * error kernel over the centered
    square of half-width pi / (scale * s); the Sobolev-remainder part of the
    error is not computed.
    """
    half = math.pi / (scale * s)
    axis = np.linspace(-half, half, resolution)
    w = np.full(resolution, axis[1] - axis[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    ek = error_kernel(gf, s, scale, pts, kmax=kmax)
    dens = np.asarray(fhat_sq_sampler(pts), dtype=float)
    total = float(np.sum(dens * ek * w[:, None] * w[None, :]))
    return math.sqrt(max(total, 0.0))


def riesz_bounds(gf: GeneratingFunction, s: float, sample_resolution: int = 64, kmax: int = 64):
    """Estimated frame bounds (A, B) of the unit-scale translate family,
    from extrema of the folded spectrum over one frequency period."""
    axis = np.linspace(0.0, TWO_PI / s, sample_resolution)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    vals = folded_spectrum(gf, s, np.stack([X, Y], axis=-1), kmax=kmax) / s**2
    return TWO_PI**2 * float(vals.min()), TWO_PI**2 * float(vals.max())


def orthonormalized_hat(gf: GeneratingFunction, s: float, xi, kmax: int = 64):
    """Fourier transform of the orthonormalized generator,
    s * phihat(xi) / (2 pi sqrt(folded spectrum))."""
    pts = np.asarray(xi, dtype=float)
    scalar = pts.ndim == 1
    pts2 = np.atleast_2d(pts)
    den = np.asarray(folded_spectrum(gf, s, pts2, kmax=kmax))
    if np.any(den < 1e-300):
        raise ArithmeticError("folded spectrum vanished; cannot orthonormalize")
    out = s * eval_generator_hat(gf, pts2) / (TWO_PI * np.sqrt(den))
    return float(out.ravel()[0]) if scalar else out


def partition_of_unity_defect(gf: GeneratingFunction, s: float, sample_resolution: int = 64) -> float:
    """Largest relative deviation of sum_m phi(x - m s) from its target
    constant 2 pi phihat(0) / s^2, sampled over one period cell [0, s]^2."""
    hat0 = float(eval_generator_hat(gf, np.array([0.0, 0.0])))
    if hat0 == 0.0:
        raise ArithmeticError("generator has zero mean; partition target undefined")
    target = TWO_PI * hat0 / s**2
    axis = np.linspace(0.0, s, sample_resolution)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    reach = int(math.ceil(gf.support_halfwidth / s)) + 1
    total = np.zeros_like(X)
    for m1 in range(-reach, reach + 1):
        for m2 in range(-reach, reach + 1):
            pts = np.stack([X - m1 * s, Y - m2 * s], axis=-1)
            total += eval_generator(gf, pts)
    return float(np.max(np.abs(total - target))) / abs(target)


def saturation_error(gf: GeneratingFunction, s: float, kmax: int = 64) -> float:
    """Stationary limit of the relative squared approximation error,
    sum_{k != 0} |phihat(2 pi k / s)|^2 / sum_k |phihat(2 pi k / s)|^2."""
    offs = np.arange(-kmax, kmax + 1) * (TWO_PI / s)
    o1, o2 = np.meshgrid(offs, offs, indexing="ij")
    pts = np.stack([o1, o2], axis=-1).reshape(-1, 2)
    vals = eval_generator_hat(gf, pts) ** 2
    center = vals[(pts[:, 0] == 0.0) & (pts[:, 1] == 0.0)].sum()
    total = vals.sum()
    if total <= 0.0:
        return 0.0
    return float((total - center) / total)
