"""Command-line experiment runner.

Subcommands: simulate | reconstruct | sweep-s | compare | analyze-basis.
Every run is driven by a JSON config (defaults dumped via --print-config),
writes deterministic CSV/PGM/binary outputs into --out, and records
provenance (config hash, seed) in JSON sidecars.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .baselines import dd_reconstruct, fbp_reconstruct
from .basis import (
    GeneratingFunction,
    partition_of_unity_defect,
    riesz_bounds,
    saturation_error,
)
from .config import ConfigError, ExperimentConfig
from .galerkin import NumericalError, Reconstruction, galerkin_reconstruct, make_accessor
from .metrics import relative_l2_error
from .wave import Sinogram, add_noise, forward_phantom, t_inner

__all__ = [
    "main",
    "cmd_simulate",
    "cmd_reconstruct",
    "cmd_sweep_s",
    "cmd_compare",
    "cmd_analyze_basis",
]

COMPARE_METHODS = ("galerkin-cg", "dd-cg", "fbp", "pixel")


def _simulate_sinogram(config: ExperimentConfig) -> Sinogram:
    q = config.data["quadrature"]
    g = forward_phantom(
        config.phantom(),
        config.geometry(),
        config.timegrid(),
        n_u=q["n_u"],
        n_fine=q["n_fine"],
    )
    if config.data["noise"] > 0:
        g = add_noise(g, config.data["noise"], config.data["seed"])
    return g


def cmd_simulate(config: ExperimentConfig, out_dir) -> Path:
    """Write the simulated sinogram (CSV + binary cache + provenance JSON)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = _simulate_sinogram(config)
    io.write_sinogram_csv(out / "sinogram.csv", g)
    io.write_sinogram_binary(out / "sinogram.bin", g)
    io.write_json(
        out / "sinogram.json",
        {
            "config_hash": io.config_hash(config.to_dict()),
            "seed": config.data["seed"],
            "noise": config.data["noise"],
            "n_det": g.geometry.n_det,
            "n_t": g.timegrid.n_t,
        },
    )
    return out / "sinogram.bin"


def _load_sinogram(config: ExperimentConfig, path) -> Sinogram:
    path = Path(path)
    geometry, timegrid = config.geometry(), config.timegrid()
    try:
        if path.suffix == ".csv":
            return io.read_sinogram_csv(path, geometry, timegrid)
        return io.read_sinogram_binary(path, geometry, timegrid)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"sinogram {path} incompatible with config: {exc}") from exc


def run_method(config: ExperimentConfig, method: str, g: Sinogram, accessors=None):
    """Dispatch one reconstruction method; returns (image, reconstruction-or-None)."""
    grid = config.grid()
    gen = GeneratingFunction.from_dict(config.data["generator"])
    solver = config.data["solver"]
    quad = config.quad_kwargs()
    accessors = accessors if accessors is not None else {}

    if method == "fbp":
        warnings.warn("fbp ignores the generator spec", RuntimeWarning, stacklevel=2)
        q = config.data["quadrature"]
        image = fbp_reconstruct(g, grid.raster_axes(), n_u=q["fbp_n_u"])
        return image, None
    if method == "pixel":
        # non-overlapping pixel family: step 1, identity kernel
        gen = GeneratingFunction.pixel()
        grid = config.grid(step=1.0)
        key = ("pixel", grid.scale, grid.step)
        if key not in accessors:
            accessors[key] = make_accessor(
                gen, grid, g.geometry, g.timegrid,
                n_window=int(config.data["quadrature"]["pixel_window"]),
            )
        rec = galerkin_reconstruct(gen, grid, g, solver="cg", accessor=accessors[key],
                                   max_iter=solver["max_iter"], tol=solver["tol"])
        return rec.image, rec
    key = (gen.kind, grid.scale, grid.step)
    if key not in accessors:
        accessors[key] = make_accessor(gen, grid, g.geometry, g.timegrid, **quad)
    if method == "galerkin":
        rec = galerkin_reconstruct(gen, grid, g, solver="dense", accessor=accessors[key])
    elif method == "galerkin-cg":
        rec = galerkin_reconstruct(gen, grid, g, solver="cg", accessor=accessors[key],
                                   max_iter=solver["max_iter"], tol=solver["tol"])
    elif method == "dd-cg":
        rec = dd_reconstruct(gen, grid, g, accessor=accessors[key],
                             max_iter=solver["max_iter"], tol=solver["tol"])
    else:
        raise ConfigError(f"unknown method {method!r}")
    return rec.image, rec


def _truth_image(config: ExperimentConfig, grid) -> np.ndarray:
    xs, ys = grid.raster_axes()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return config.phantom().eval(np.stack([X, Y], axis=-1))


def cmd_reconstruct(config: ExperimentConfig, sinogram_path, out_dir) -> float:
    """Run the configured method on a stored sinogram; write image, coefficients
    and an error row.  Returns the relative error."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = _load_sinogram(config, sinogram_path)
    method = config.data["method"]
    image, rec = run_method(config, method, g)
    grid = config.grid()
    truth = _truth_image(config, grid)
    err = relative_l2_error(image, truth)

    pgm_map = io.write_pgm16(out / f"recon_{method}.pgm", image)
    io.write_json(
        out / f"recon_{method}.json",
        {
            "config_hash": io.config_hash(config.to_dict()),
            "method": method,
            "value_map": pgm_map,
            "relative_l2": err,
            "iterations": 0 if rec is None else rec.iterations,
        },
    )
    if rec is not None:
        io.write_coefficients_csv(out / f"coeffs_{method}.csv", grid, rec.coefficients)
    err_path = out / "errors.csv"
    row = [method, io.fmt(config.data["noise"]), io.fmt(err),
           str(0 if rec is None else rec.iterations)]
    if not err_path.exists():
        err_path.write_text("method,noise,relative_l2,iterations\n")
    with open(err_path, "a") as fh:
        fh.write(",".join(row) + "\n")
    return err


def cmd_sweep_s(config: ExperimentConfig, s_values, out_dir, threads: int = 1) -> Path:
    """Reconstruction error for each step value at fixed lattice count N
    (the scale follows from step * scale = 2/(N-1)); one CSV row per step."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[list] = []
    path = out / "sweep_s.csv"
    if s_values:
        g = _simulate_sinogram(config)
        gen = GeneratingFunction.from_dict(config.data["generator"])
        solver = config.data["solver"]
        quad = config.quad_kwargs()

        def one(s_val: float):
            grid = config.grid(step=s_val)
            rec = galerkin_reconstruct(
                gen, grid, g, solver="cg",
                max_iter=solver["max_iter"], tol=solver["tol"], **quad,
            )
            truth = _truth_image(config, grid)
            return relative_l2_error(rec.image, truth), grid.scale

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, s_values))
        else:
            results = [one(s) for s in s_values]
        rows = [[s, scale, err] for s, (err, scale) in zip(s_values, results)]
    io.write_table_csv(path, ["s", "T", "relative_l2"], rows)
    return path


def cmd_compare(config: ExperimentConfig, levels, methods=None, out_dir="out", threads: int = 1) -> Path:
    """Error grid noise level x method on shared data; the noise realization
    is fixed per level (seed derived from the config seed and level index)."""
    methods = list(methods) if methods else list(COMPARE_METHODS)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clean = _simulate_sinogram_noise_free(config)
    grid = config.grid()
    truth = _truth_image(config, grid)
    accessors: dict = {}
    seed = config.data["seed"]

    noisy = []
    deltas = []
    for li, level in enumerate(levels):
        g = add_noise(clean, level, [seed, li])
        e = g.copy_with(g.values - clean.values)
        noisy.append(g)
        deltas.append(t_inner(e, e) ** 0.5)

    results: dict[tuple[int, str], list] = {}
    if "pixel" in methods and levels:
        # one sweep over the pixel wave blocks serves every noise level
        for li, err, iters in _pixel_compare_rows(config, config.grid(step=1.0), noisy, truth):
            results[(li, "pixel")] = [levels[li], "pixel", err, iters, deltas[li]]

    entries = [
        (li, level, method)
        for li, level in enumerate(levels)
        for method in methods
        if (li, method) not in results
    ]

    def one(entry):
        li, level, method = entry
        image, rec = run_method(config, method, noisy[li], accessors)
        err = relative_l2_error(image, truth)
        return [level, method, err, 0 if rec is None else rec.iterations, deltas[li]]

    # accessors are built lazily; warm them sequentially to keep the parallel
    # section read-only
    for method in {m for m in methods if m not in ("fbp", "pixel")}:
        run_method(config, method, clean, accessors)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            computed = list(pool.map(one, entries))
    else:
        computed = [one(e) for e in entries]
    for entry, row in zip(entries, computed):
        results[(entry[0], entry[2])] = row

    rows = [results[(li, method)] for li in range(len(levels)) for method in methods]
    path = out / "compare.csv"
    io.write_table_csv(path, ["noise", "method", "relative_l2", "iterations", "delta_t"],
                       [[io.fmt(r[0]), r[1], r[2], str(r[3]), r[4]] for r in rows])
    return path


def _pixel_compare_rows(config: ExperimentConfig, grid, sinograms, truth):
    """Identity-kernel reconstructions of several sinograms sharing one pass
    over the pixel wave blocks."""
    from .galerkin import Coefficients, reconstruct_image

    gen = GeneratingFunction.pixel()
    g0 = sinograms[0]
    accessor = make_accessor(
        gen, grid, g0.geometry, g0.timegrid,
        n_window=int(config.data["quadrature"]["pixel_window"]),
    )
    tg = g0.timegrid
    fac = tg.t_final / (tg.n_t - 1) * g0.geometry.weight
    weighted = [g.values * tg.times[None, :] * fac for g in sinograms]
    rhs_list = accessor.adjoint_multi(weighted)
    half_r = g0.geometry.radius / 2.0
    for li, rhs in enumerate(rhs_list):
        coeffs = Coefficients(grid, rhs.box / half_r)
        image = reconstruct_image(gen, grid, coeffs, grid.raster_axes())
        yield li, relative_l2_error(image, truth), 0


def _simulate_sinogram_noise_free(config: ExperimentConfig) -> Sinogram:
    q = config.data["quadrature"]
    return forward_phantom(
        config.phantom(), config.geometry(), config.timegrid(),
        n_u=q["n_u"], n_fine=q["n_fine"],
    )


def cmd_analyze_basis(config: ExperimentConfig, s_values, out_dir) -> Path:
    """Dump frame bounds, saturation error and partition-of-unity defect of
    the configured generator over a range of steps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gen = GeneratingFunction.from_dict(config.data["generator"])
    rows = []
    for s in s_values:
        lo, hi = riesz_bounds(gen, s)
        rows.append([s, lo, hi, saturation_error(gen, s), partition_of_unity_defect(gen, s)])
    path = out / "basis_analysis.csv"
    io.write_table_csv(path, ["s", "riesz_lower", "riesz_upper", "saturation", "pou_defect"], rows)
    return path


# ---------------------------------------------------------------------------
# argument parsing


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()] if text else []


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patrec", description=__doc__)
    parser.add_argument("--print-config", action="store_true",
                        help="print the effective config as JSON and exit")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", type=str, default=None, help="JSON config path")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--method", type=str, default=None)
        p.add_argument("--noise", type=float, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--print-config", action="store_true")

    p = sub.add_parser("simulate", help="simulate and store a sinogram")
    common(p)
    p = sub.add_parser("reconstruct", help="reconstruct from a stored sinogram")
    common(p)
    p.add_argument("--sinogram", type=str, required=True)
    p = sub.add_parser("sweep-s", help="error versus basis step at fixed N")
    common(p)
    p.add_argument("--s-values", type=str, default="")
    p = sub.add_parser("compare", help="error grid: noise levels x methods")
    common(p)
    p.add_argument("--levels", type=str, default="0,0.025,0.05")
    p.add_argument("--methods", type=str, default=",".join(COMPARE_METHODS))
    p = sub.add_parser("analyze-basis", help="generator diagnostics over steps")
    common(p)
    p.add_argument("--s-values", type=str, default="1.0,0.5,0.25")
    return parser


def _effective_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig({})
    if getattr(args, "seed", None) is not None:
        config.data["seed"] = args.seed
    if getattr(args, "method", None) is not None:
        config.data["method"] = args.method
    if getattr(args, "noise", None) is not None:
        config.data["noise"] = args.noise
    if getattr(args, "out", None) is not None:
        config.data["out"] = args.out
    config.validate()
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command is None:
            if args.print_config:
                import json

                print(json.dumps(ExperimentConfig({}).to_dict(), sort_keys=True, indent=2))
                return 0
            build_parser().print_help()
            return 0
        config = _effective_config(args)
        if args.print_config:
            import json

            print(json.dumps(config.to_dict(), sort_keys=True, indent=2))
            return 0
        out = config.data["out"]
        if args.command == "simulate":
            cmd_simulate(config, out)
        elif args.command == "reconstruct":
            cmd_reconstruct(config, args.sinogram, out)
        elif args.command == "sweep-s":
            cmd_sweep_s(config, _parse_floats(args.s_values), out, threads=args.threads)
        elif args.command == "compare":
            cmd_compare(config, _parse_floats(args.levels),
                        [m for m in args.methods.split(",") if m], out, threads=args.threads)
        elif args.command == "analyze-basis":
            cmd_analyze_basis(config, _parse_floats(args.s_values), out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
