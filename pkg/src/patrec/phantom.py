"""Analytic test objects built from disc indicator functions.

A phantom is a superposition of scaled disc indicators.  Discs admit
closed-form circular (spherical in 2-D) means, so measurement data can be
simulated without rasterizing the object -- the simulation path shares no
discretization with the reconstruction system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Disc", "Phantom", "default_phantom"]


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    radius: float
    amplitude: float


@dataclass(frozen=True)
class Phantom:
    """Superposition of disc indicators; immutable and safe to share."""

    components: tuple[Disc, ...] = ()

    def __post_init__(self):
        for d in self.components:
            if not (d.radius > 0):
                raise ValueError(f"disc radius must be positive, got {d.radius}")
            if not math.isfinite(d.amplitude):
                raise ValueError("disc amplitude must be finite")

    @staticmethod
    def from_dicts(specs) -> "Phantom":
        return Phantom(tuple(Disc(s["cx"], s["cy"], s["radius"], s["amplitude"]) for s in specs))

    def to_dicts(self):
        return [
            {"cx": d.cx, "cy": d.cy, "radius": d.radius, "amplitude": d.amplitude}
            for d in self.components
        ]

    def max_extent(self) -> float:
        """Largest distance from the origin reached by any component disc."""
        if not self.components:
            return 0.0
        return max(math.hypot(d.cx, d.cy) + d.radius for d in self.components)

    def eval(self, points) -> np.ndarray:
        """Pointwise value; points with shape (..., 2).

        A point exactly on a disc boundary counts as inside (<= convention),
        which only affects a measure-zero set.
        """
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[:-1])
        for d in self.components:
            dist2 = (pts[..., 0] - d.cx) ** 2 + (pts[..., 1] - d.cy) ** 2
            out += d.amplitude * (dist2 <= d.radius**2)
        return float(out[0]) if scalar else out

    def exact_spherical_mean(self, z, r):
        """Mean of the phantom over the circle of radius r centered at z.

        Closed form: each disc contributes its amplitude times the angular
        fraction of the circle lying inside the disc (an arccos of the
        triangle cosine at the circle center).  Accepts scalar or array r.
        """
        r_arr = np.asarray(r, dtype=float)
        scalar = r_arr.ndim == 0
        r_arr = np.atleast_1d(r_arr)
        out = np.zeros_like(r_arr)
        zx, zy = float(z[0]), float(z[1])
        for d in self.components:
            dist = math.hypot(zx - d.cx, zy - d.cy)
            out += d.amplitude * _disc_arc_fraction(dist, d.radius, r_arr)
        return float(out[0]) if scalar else out

    def squared_norm(self) -> float:
        """L2 norm squared, exact for pairwise disjoint components."""
        total = sum(d.amplitude**2 * math.pi * d.radius**2 for d in self.components)
        for i, a in enumerate(self.components):
            for b in self.components[i + 1 :]:
                if math.hypot(a.cx - b.cx, a.cy - b.cy) < a.radius + b.radius:
                    total += 2 * a.amplitude * b.amplitude * _disc_overlap_area(a, b)
        return total

    def total_mass(self) -> float:
        return sum(d.amplitude * math.pi * d.radius**2 for d in self.components)


def _disc_arc_fraction(center_dist, disc_radius, r):
    """Fraction of the circle of radius r at distance center_dist from the
    disc center that lies inside the disc of radius disc_radius.

    1 if the circle is fully inside, 0 if fully outside, otherwise
    arccos((D^2 + r^2 - rho^2) / (2 D r)) / pi.  The degenerate D = 0 case is
    covered by the first two branches.
    """
    D, rho = center_dist, disc_radius
    out = np.zeros_like(r)
    full = r <= rho - D
    out[full] = 1.0
    mid = ~full & (r < D + rho) & (r > D - rho)
    if np.any(mid):
        rm = r[mid]
        c = (D * D + rm * rm - rho * rho) / (2.0 * D * rm)
        out[mid] = np.arccos(np.clip(c, -1.0, 1.0)) / math.pi
    return out


def _disc_overlap_area(a: Disc, b: Disc) -> float:
    """Lens area of two overlapping discs."""
    d = math.hypot(a.cx - b.cx, a.cy - b.cy)
    r1, r2 = a.radius, b.radius
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        rmin = min(r1, r2)
        return math.pi * rmin * rmin
    alpha = math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    beta = math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    return r1 * r1 * (alpha - math.sin(2 * alpha) / 2) + r2 * r2 * (beta - math.sin(2 * beta) / 2)


def default_phantom() -> Phantom:
    """Reference phantom used by the bundled experiments: three disjoint discs
    well inside the unit disc."""
    return Phantom(
        (
            Disc(-0.35, 0.2, 0.25, 1.0),
            Disc(0.3, -0.25, 0.18, 0.8),
            Disc(0.1, 0.35, 0.12, 1.2),
        )
    )
