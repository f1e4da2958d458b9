"""Experiment configuration: JSON-backed, validated, with explicit defaults.

The default sampling mirrors the bundled reference experiments: unit
measurement radius, final time 3, 100 detectors, 376 time samples, and the
side condition step * scale = 2 / (N - 1) tying the lattice count to the
basis size.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

from .basis import BasisGrid, GeneratingFunction
from .phantom import Phantom, default_phantom
from .wave import DetectorGeometry, TimeGrid

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULT_CONFIG"]

METHODS = ("galerkin", "galerkin-cg", "dd-cg", "fbp", "pixel")

DEFAULT_CONFIG = {
    "phantom": [d for d in (
        {"cx": -0.35, "cy": 0.2, "radius": 0.25, "amplitude": 1.0},
        {"cx": 0.3, "cy": -0.25, "radius": 0.18, "amplitude": 0.8},
        {"cx": 0.1, "cy": 0.35, "radius": 0.12, "amplitude": 1.2},
    )],
    "generator": {"kind": "kb", "m": 1, "gamma": 2.0, "a": 2.0},
    "grid": {"N": 50, "s": 1.3265},
    "geometry": {"R": 1.0, "n_det": 100},
    "time": {"t_final": 3.0, "n_t": 376},
    "method": "galerkin-cg",
    "noise": 0.0,
    "seed": 0,
    "solver": {"max_iter": 40, "tol": 1e-10},
    "quadrature": {
        "n_r": 1200,
        "n_phi": 720,
        "n_u": None,  # defaults to 2 * n_t
        "n_fine": None,  # defaults to max(2000, 2 * n_t)
        "gram_m": 401,
        "pixel_window": 64,
        "fbp_n_u": None,  # defaults to n_t
    },
    "out": "out",
}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class ExperimentConfig:
    def __init__(self, data: dict):
        self.data = _merge(copy.deepcopy(DEFAULT_CONFIG), data)
        self.validate()

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            return cls(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def validate(self):
        d = self.data
        if d["method"] not in METHODS:
            raise ConfigError(f"unknown method {d['method']!r}; choose from {METHODS}")
        geo, tm, gr = d["geometry"], d["time"], d["grid"]
        for key, val in (("R", geo["R"]), ("n_det", geo["n_det"]), ("t_final", tm["t_final"]),
                         ("n_t", tm["n_t"])):
            if val <= 0:
                raise ConfigError(f"{key} must be positive, got {val}")
        if d["noise"] < 0:
            raise ConfigError("noise level must be nonnegative")
        s = gr.get("s")
        if s is None or s <= 0:
            raise ConfigError("grid.s must be a positive step")
        n, t = gr.get("N"), gr.get("T")
        if n is None and t is None:
            raise ConfigError("grid needs N or T")
        if n is not None:
            if n < 2:
                raise ConfigError("grid.N must be at least 2")
            implied = 2.0 / (s * (n - 1))
            if t is not None and abs(t - implied) > 1e-9 * implied:
                raise ConfigError(
                    f"grid is over-determined: T={t} but N={n}, s={s} imply T={implied}"
                )
        try:
            GeneratingFunction.from_dict(d["generator"])
            Phantom.from_dicts(d["phantom"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    # constructors for the domain objects -----------------------------------

    def phantom(self) -> Phantom:
        return Phantom.from_dicts(self.data["phantom"]) if self.data["phantom"] else default_phantom()

    def generator(self) -> GeneratingFunction:
        gen = GeneratingFunction.from_dict(self.data["generator"])
        if self.data["method"] == "pixel":
            gen = GeneratingFunction.pixel()
        return gen

    def geometry(self) -> DetectorGeometry:
        g = self.data["geometry"]
        return DetectorGeometry(float(g["R"]), int(g["n_det"]))

    def timegrid(self) -> TimeGrid:
        t = self.data["time"]
        return TimeGrid(float(t["t_final"]), int(t["n_t"]))

    def grid(self, step: float | None = None) -> BasisGrid:
        g = self.data["grid"]
        s = float(step if step is not None else g["s"])
        radius = float(self.data["geometry"]["R"])
        if g.get("N") is not None:
            return BasisGrid.from_count(int(g["N"]), s, radius)
        return BasisGrid(float(g["T"]), s, radius)

    def quad_kwargs(self) -> dict:
        q = self.data["quadrature"]
        out = {"n_r": int(q["n_r"]), "n_phi": int(q["n_phi"])}
        if q["n_u"] is not None:
            out["n_u"] = int(q["n_u"])
        return out

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)


def _merge(base, override):
    if not isinstance(override, dict) or not isinstance(base, dict):
        return override
    out = dict(base)
    for key, val in override.items():
        out[key] = _merge(base.get(key), val) if key in base else val
    return out
