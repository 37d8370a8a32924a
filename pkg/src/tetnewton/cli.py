"""Command-line front end: scenario configs, strategy comparisons, CSV output.

Exit codes: 0 converged / completed, 1 configuration error, 2 iteration
budget exhausted, 3 line-search or factorization failure.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import bench, kernels, toy2d
from .materials import MaterialModel, MaterialParams, lame_from_young_poisson
from .mesh import (
    Bend,
    Compress,
    HalfSpaceSelect,
    MeshParseError,
    Shear,
    Stretch,
    TetMesh,
    Translate,
    Twist,
    generate_beam,
    load_tetgen,
    save_tetgen,
    signed_volumes,
)
from .projection import (
    EigAbs,
    EigClamp,
    GlobalAbs,
    GlobalShift,
    LocalShift,
    NoProjection,
    OnDemand,
)
from .scenario import SolveSettings, build_scenario
from .solver import SolveReport, SolveStatus, run_quasistatic


class ConfigError(ValueError):
    """Invalid benchmark configuration; message carries the field path."""


_MODEL_NAMES = {m.value: m for m in MaterialModel}

_STATUS_EXIT = {
    SolveStatus.CONVERGED: 0,
    SolveStatus.MAX_ITERS: 2,
    SolveStatus.LINE_SEARCH_FAILURE: 3,
    SolveStatus.FACTORIZATION_FAILURE: 3,
}


# ---------------------------------------------------------------------------
# Strict config parsing
# ---------------------------------------------------------------------------


def _require_keys(obj: dict, allowed: set, path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")


def _parse_transform(obj, path: str):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{path}: transform must be an object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind in ("stretch", "compress"):
            _require_keys(obj, {"kind", "axis", "factor"}, path)
            cls = Stretch if kind == "stretch" else Compress
            return cls(axis=obj["axis"], factor=float(obj["factor"]))
        if kind == "shear":
            _require_keys(obj, {"kind", "shear_axis", "along_axis", "amount"}, path)
            return Shear(obj["shear_axis"], obj["along_axis"], float(obj["amount"]))
        if kind == "twist":
            _require_keys(obj, {"kind", "axis", "angle_deg"}, path)
            return Twist(obj["axis"], float(obj["angle_deg"]))
        if kind == "bend":
            _require_keys(obj, {"kind", "axis", "bend_axis", "angle_deg"}, path)
            return Bend(obj["axis"], obj["bend_axis"], float(obj["angle_deg"]))
        if kind == "translate":
            _require_keys(obj, {"kind", "offset"}, path)
            return Translate(tuple(obj["offset"]))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: unknown transform kind {kind!r}")


def strategy_label(strategy) -> str:
    if isinstance(strategy, EigClamp):
        return f"clamp{strategy.eps:g}"
    if isinstance(strategy, EigAbs):
        return "abs"
    if isinstance(strategy, LocalShift):
        return "local_shift"
    if isinstance(strategy, NoProjection):
        return "none"
    if isinstance(strategy, GlobalShift):
        return "global_shift"
    if isinstance(strategy, GlobalAbs):
        return "global_abs"
    if isinstance(strategy, OnDemand):
        return f"on_demand_{strategy_label(strategy.fallback)}"
    raise ConfigError(f"unknown strategy object: {strategy!r}")


def parse_strategy(desc, path: str = "strategy"):
    """Strategy descriptor: a name string or an object with 'kind'."""
    names = {
        "abs": EigAbs(),
        "clamp": EigClamp(0.0),
        "clamp0": EigClamp(0.0),
        "local_shift": LocalShift(),
        "none": NoProjection(),
        "global_shift": GlobalShift(),
        "global_abs": GlobalAbs(),
        "on_demand": OnDemand(EigAbs()),
    }
    if isinstance(desc, str):
        if desc in names:
            return names[desc]
        raise ConfigError(f"{path}: unknown strategy {desc!r}")
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ConfigError(f"{path}: strategy must be a name or an object with 'kind'")
    kind = desc["kind"]
    try:
        if kind == "clamp":
            _require_keys(desc, {"kind", "eps"}, path)
            return EigClamp(float(desc.get("eps", 0.0)))
        if kind == "global_shift":
            _require_keys(desc, {"kind", "beta0", "growth"}, path)
            return GlobalShift(
                float(desc.get("beta0", 1e-6)), float(desc.get("growth", 10.0))
            )
        if kind == "on_demand":
            _require_keys(desc, {"kind", "fallback"}, path)
            fb = parse_strategy(desc.get("fallback", "abs"), f"{path}.fallback")
            if isinstance(fb, (GlobalShift, GlobalAbs, OnDemand, NoProjection)):
                raise ConfigError(f"{path}.fallback: must be a projecting local filter")
            return OnDemand(fb)
        if kind in names:
            _require_keys(desc, {"kind"}, path)
            return names[kind]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: unknown strategy kind {kind!r}")


@dataclass(frozen=True)
class BenchConfig:
    mesh_generator: Optional[dict]
    mesh_files: Optional[tuple]
    transform: object
    handles: tuple
    young: float
    poisson: float
    model: MaterialModel
    strategies: tuple
    settings: SolveSettings
    warp_free_vertices: bool = True
    seed: int = 0
    out_dir: str = "tetnewton_out"

    def material(self) -> MaterialParams:
        mu, lam = lame_from_young_poisson(self.young, self.poisson)
        return MaterialParams(mu, lam, self.model)

    def mesh(self) -> TetMesh:
        if self.mesh_generator is not None:
            g = self.mesh_generator
            return generate_beam(g["nx"], g["ny"], g["nz"], g["dims"])
        node_path, ele_path = self.mesh_files
        return load_tetgen(
            Path(node_path).read_text(), Path(ele_path).read_text()
        )

    def scenario(self, strategy, mesh: Optional[TetMesh] = None):
        settings = replace(self.settings, strategy=strategy)
        return build_scenario(
            mesh if mesh is not None else self.mesh(),
            self.transform,
            list(self.handles),
            self.material(),
            settings,
            warp_free_vertices=self.warp_free_vertices,
        )


_TOP_KEYS = {
    "mesh",
    "transform",
    "handles",
    "material",
    "strategies",
    "settings",
    "warp_free_vertices",
    "seed",
    "out_dir",
}


def parse_config(text: str) -> BenchConfig:
    """Parse and validate the benchmark JSON document (strict schema)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _require_keys(raw, _TOP_KEYS, "config")

    mesh_obj = raw.get("mesh")
    if not isinstance(mesh_obj, dict):
        raise ConfigError("config.mesh: required object")
    generator, files = None, None
    if "generator" in mesh_obj:
        _require_keys(mesh_obj, {"generator"}, "config.mesh")
        gen = mesh_obj["generator"]
        _require_keys(gen, {"nx", "ny", "nz", "dims"}, "config.mesh.generator")
        try:
            generator = dict(
                nx=int(gen["nx"]),
                ny=int(gen["ny"]),
                nz=int(gen["nz"]),
                dims=tuple(float(v) for v in gen["dims"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"config.mesh.generator: {exc}") from exc
        if min(generator["nx"], generator["ny"], generator["nz"]) < 1:
            raise ConfigError("config.mesh.generator: cell counts must be >= 1")
        if len(generator["dims"]) != 3 or min(generator["dims"]) <= 0:
            raise ConfigError("config.mesh.generator.dims: 3 positive extents")
    elif "node_file" in mesh_obj or "ele_file" in mesh_obj:
        _require_keys(mesh_obj, {"node_file", "ele_file"}, "config.mesh")
        if "node_file" not in mesh_obj or "ele_file" not in mesh_obj:
            raise ConfigError("config.mesh: need both node_file and ele_file")
        files = (str(mesh_obj["node_file"]), str(mesh_obj["ele_file"]))
    else:
        raise ConfigError("config.mesh: need 'generator' or node_file/ele_file")

    transform = _parse_transform(raw.get("transform"), "config.transform")

    handles_raw = raw.get("handles")
    if not isinstance(handles_raw, list) or not handles_raw:
        raise ConfigError("config.handles: non-empty list required")
    handles = []
    for i, h in enumerate(handles_raw):
        path = f"config.handles[{i}]"
        if not isinstance(h, dict):
            raise ConfigError(f"{path}: expected an object")
        _require_keys(h, {"axis", "op", "fraction"}, path)
        try:
            handles.append(
                HalfSpaceSelect(h["axis"], h["op"], float(h["fraction"]))
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    mat = raw.get("material", {})
    _require_keys(mat, {"E", "nu", "model"}, "config.material")
    young = float(mat.get("E", 1e8))
    poisson = float(mat.get("nu", 0.495))
    if not young > 0:
        raise ConfigError("config.material.E: must be > 0")
    if not 0.0 <= poisson < 0.5:
        raise ConfigError("config.material.nu: must lie in [0, 0.5)")
    model_name = mat.get("model", MaterialModel.STABLE_NEO_HOOKEAN.value)
    if model_name not in _MODEL_NAMES:
        raise ConfigError(
            f"config.material.model: unknown model {model_name!r} "
            f"(choose from {sorted(_MODEL_NAMES)})"
        )

    strat_raw = raw.get("strategies")
    if not isinstance(strat_raw, list) or not strat_raw:
        raise ConfigError("config.strategies: non-empty list required")
    strategies = tuple(
        parse_strategy(s, f"config.strategies[{i}]") for i, s in enumerate(strat_raw)
    )

    settings_obj = raw.get("settings", {})
    allowed = {
        "max_iters",
        "tol_scale",
        "ls_c",
        "ls_shrink",
        "ls_max_backtracks",
        "global_abs_dof_cap",
    }
    _require_keys(settings_obj, allowed, "config.settings")
    try:
        settings = SolveSettings(
            max_iters=int(settings_obj.get("max_iters", 200)),
            tol_scale=float(settings_obj.get("tol_scale", 1e-5)),
            ls_c=float(settings_obj.get("ls_c", 1e-4)),
            ls_shrink=float(settings_obj.get("ls_shrink", 0.5)),
            ls_max_backtracks=int(settings_obj.get("ls_max_backtracks", 64)),
            global_abs_dof_cap=int(settings_obj.get("global_abs_dof_cap", 3000)),
        )
    except ValueError as exc:
        raise ConfigError(f"config.settings: {exc}") from exc

    return BenchConfig(
        mesh_generator=generator,
        mesh_files=files,
        transform=transform,
        handles=tuple(handles),
        young=young,
        poisson=poisson,
        model=_MODEL_NAMES[model_name],
        strategies=strategies,
        settings=settings,
        warp_free_vertices=bool(raw.get("warp_free_vertices", True)),
        seed=int(raw.get("seed", 0)),
        out_dir=str(raw.get("out_dir", "tetnewton_out")),
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

RUN_CSV_HEADER = "iter,energy,decrement,step_size,negative_elements,wall_ms"
SUMMARY_CSV_HEADER = (
    "strategy,iterations,status,final_energy,total_wall_ms,speedup_iters,speedup_wall"
)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_run_csv(path: Path, report: SolveReport) -> None:
    lines = [RUN_CSV_HEADER]
    for r in report.records:
        if not all(np.isfinite(v) for v in (r.energy, r.decrement, r.step_size)):
            lines.append(f"# iter={r.iteration} dropped: non-finite fields")
            continue
        lines.append(
            f"{r.iteration},{_fmt(r.energy)},{_fmt(r.decrement)},"
            f"{_fmt(r.step_size)},{r.negative_elements},{r.wall_ms:.3f}"
        )
    lines.append(f"# status={report.status.value}")
    path.write_text("\n".join(lines) + "\n")


def write_toy_csv(path: Path, trajectory) -> None:
    lines = ["iter,x,y,f"]
    for i, (p, f) in enumerate(zip(trajectory.points, trajectory.energies)):
        lines.append(f"{i},{_fmt(p[0])},{_fmt(p[1])},{_fmt(f)}")
    lines.append(f"# status={trajectory.status.value}")
    path.write_text("\n".join(lines) + "\n")


def _speedup(candidate: SolveReport, baseline: SolveReport) -> Optional[float]:
    """Iterations(candidate) / iterations(baseline): the baseline's advantage.

    Defined only when both solves converged; two zero-iteration runs count
    as speedup 1.0 by convention.
    """
    if not (candidate.converged and baseline.converged):
        return None
    if candidate.iterations == 0 and baseline.iterations == 0:
        return 1.0
    if baseline.iterations == 0:
        return None
    return candidate.iterations / baseline.iterations


def run_compare(config: BenchConfig, out_dir: Path) -> dict:
    """Run every strategy on the identical scenario; per-run failures are
    recorded in the summary and do not abort the other runs."""
    mesh = config.mesh()
    results: dict[str, object] = {}
    for strategy in config.strategies:
        label = strategy_label(strategy)
        try:
            report = run_quasistatic(config.scenario(strategy, mesh))
        except ValueError as exc:  # e.g. GlobalAbs over the DOF cap
            results[label] = str(exc)
            continue
        results[label] = report
        write_run_csv(out_dir / f"{label}.csv", report)
    return results


def write_summary_csv(path: Path, config: BenchConfig, results: dict) -> None:
    baseline_label = strategy_label(config.strategies[0])
    baseline = results.get(baseline_label)
    lines = [SUMMARY_CSV_HEADER]
    speedups = []
    for strategy in config.strategies:
        label = strategy_label(strategy)
        res = results[label]
        if not isinstance(res, SolveReport):
            lines.append(f"{label},,invalid-argument,,,,")
            continue
        s_it = s_wall = ""
        if isinstance(baseline, SolveReport):
            sp = _speedup(res, baseline)
            if sp is not None:
                s_it = _fmt(sp)
                if label != baseline_label:
                    speedups.append(sp)
            if baseline.total_wall_ms > 0 and res.converged and baseline.converged:
                s_wall = _fmt(res.total_wall_ms / baseline.total_wall_ms)
        final_e = _fmt(res.final_energy) if res.records else _fmt(float("nan"))
        lines.append(
            f"{label},{res.iterations},{res.status.value},{final_e},"
            f"{res.total_wall_ms:.3f},{s_it},{s_wall}"
        )
    if speedups:
        lines.append(f"# mean_speedup_iters={_fmt(statistics.fmean(speedups))}")
        lines.append(f"# median_speedup_iters={_fmt(statistics.median(speedups))}")
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _load_config(args) -> BenchConfig:
    config = parse_config(Path(args.config).read_text())
    if getattr(args, "out", None):
        config = replace(config, out_dir=args.out)
    if getattr(args, "max_iters", None):
        config = replace(
            config, settings=replace(config.settings, max_iters=args.max_iters)
        )
    warp = getattr(args, "warp_free_vertices", None)
    if warp is not None:
        config = replace(config, warp_free_vertices=warp == "true")
    return config


def _run_with_thread_limit(args) -> int:
    n = getattr(args, "threads", 0) or 0
    if n <= 0:
        return args.func(args)
    try:
        from threadpoolctl import threadpool_limits  # noqa: PLC0415
    except ImportError as exc:
        raise ConfigError("--threads needs the threadpoolctl package") from exc
    with threadpool_limits(limits=n):
        return args.func(args)


def _cmd_run(args) -> int:
    config = _load_config(args)
    strategy = (
        parse_strategy(args.strategy) if args.strategy else config.strategies[0]
    )
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = run_quasistatic(config.scenario(strategy))
    label = strategy_label(strategy)
    write_run_csv(out_dir / f"{label}.csv", report)
    print(
        f"{label}: {report.status.value} after {report.iterations} iterations "
        f"({report.total_wall_ms:.1f} ms)"
    )
    return _STATUS_EXIT[report.status]


def _cmd_compare(args) -> int:
    config = _load_config(args)
    if len(config.strategies) < 2:
        raise ConfigError("compare needs at least 2 strategies")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_compare(config, out_dir)
    write_summary_csv(out_dir / "summary.csv", config, results)
    for label, res in results.items():
        if isinstance(res, SolveReport):
            print(f"{label}: {res.status.value} in {res.iterations} iterations")
        else:
            print(f"{label}: invalid-argument ({res})")
    print(f"summary written to {out_dir / 'summary.csv'}")
    return 0


def _cmd_toy2d(args) -> int:
    strategy = parse_strategy(args.strategy)
    if args.eps is not None:
        strategy = EigClamp(args.eps)
    start = (1.0 - 1e-6, 1e-8) if args.start is None else tuple(args.start)
    trajectory = toy2d.run_toy_newton(
        start, strategy, tol=args.tol, max_iters=args.max_iters
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"toy2d_{strategy_label(strategy)}.csv"
    write_toy_csv(path, trajectory)
    print(
        f"toy2d {strategy_label(strategy)}: {trajectory.status.value} in "
        f"{trajectory.iterations} iterations, final f = {trajectory.final_f:.3e}"
    )
    return _STATUS_EXIT[trajectory.status]


def _sweep_configs(config: BenchConfig, axis: str, values):
    for v in values:
        if axis == "nu":
            yield v, replace(config, poisson=float(v))
        elif axis == "stretch_factor":
            if not isinstance(config.transform, Stretch):
                raise ConfigError(
                    "stretch_factor sweep needs a stretch/compress transform"
                )
            yield v, replace(
                config, transform=replace(config.transform, factor=float(v))
            )
        elif axis == "resolution":
            if config.mesh_generator is None:
                raise ConfigError("resolution sweep needs a generated mesh")
            cells = int(v)
            gen = dict(config.mesh_generator, nx=cells, ny=cells, nz=cells)
            yield v, replace(config, mesh_generator=gen)
        else:
            raise ConfigError(f"unknown sweep axis {axis!r}")


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    values = [float(v) for v in args.values.split(",")]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("sweep values must be strictly increasing")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["axis_value,strategy,iterations,status,final_energy"]
    for value, cfg in _sweep_configs(config, args.axis, values):
        mesh = cfg.mesh()
        for strategy in cfg.strategies:
            label = strategy_label(strategy)
            try:
                report = run_quasistatic(cfg.scenario(strategy, mesh))
            except ValueError:
                lines.append(f"{value:g},{label},,invalid-argument,")
                continue
            final_e = _fmt(report.final_energy) if report.records else ""
            lines.append(
                f"{value:g},{label},{report.iterations},{report.status.value},{final_e}"
            )
            print(f"{args.axis}={value:g} {label}: {report.status.value} "
                  f"in {report.iterations}")
    path = out_dir / f"sweep_{args.axis}.csv"
    path.write_text("\n".join(lines) + "\n")
    print(f"sweep written to {path}")
    return 0


def _cmd_gen_mesh(args) -> int:
    dims = tuple(float(v) for v in args.dims.split(","))
    mesh = generate_beam(args.nx, args.ny, args.nz, dims)
    node_text, ele_text = save_tetgen(mesh)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    prefix.with_suffix(".node").write_text(node_text)
    prefix.with_suffix(".ele").write_text(ele_text)
    print(
        f"wrote {prefix.with_suffix('.node')} ({mesh.num_vertices} vertices) and "
        f"{prefix.with_suffix('.ele')} ({mesh.num_tets} tets)"
    )
    return 0


def _cmd_mesh_info(args) -> int:
    mesh = load_tetgen(Path(args.node).read_text(), Path(args.ele).read_text())
    lo, hi = mesh.bounding_box()
    vols = signed_volumes(mesh.rest_positions, mesh.tets)
    print(f"vertices: {mesh.num_vertices}")
    print(f"tets: {mesh.num_tets}")
    print(f"bounding box: {lo.tolist()} .. {hi.tolist()}")
    print(f"total volume: {vols.sum():g} (min tet {vols.min():g})")
    return 0


def _cmd_bench_kernels(args) -> int:
    rows = bench.benchmark_kernels(cells=args.cells, repeats=args.repeats)
    from .mesh import generate_beam as _gen  # noqa: PLC0415

    num_tets = _gen(args.cells, args.cells, 3 * args.cells, (1, 1, 3)).num_tets
    print(f"active backend: {kernels.active()}")
    print(bench.format_table(rows, num_tets))
    if args.csv:
        path = Path(args.csv)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["kernel,backend,ms_per_call"]
        lines += [f"{r.kernel},{r.backend},{r.ms_per_call:.4f}" for r in rows]
        path.write_text("\n".join(lines) + "\n")
        print(f"timings written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tetnewton",
        description="Projected-Newton hyperelastic quasistatics with "
        "switchable per-element eigenvalue filters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, threads=True):
        p.add_argument("--config", required=True, help="benchmark JSON config")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--max-iters", type=int, help="override settings.max_iters")
        p.add_argument(
            "--warp-free-vertices",
            choices=["true", "false"],
            help="override whether free vertices start warped",
        )
        if threads:
            p.add_argument(
                "--threads", type=int, default=0, help="BLAS thread cap (0 = auto)"
            )

    p = sub.add_parser("run", help="solve one scenario with one strategy")
    add_common(p)
    p.add_argument("--strategy", help="strategy name (default: first in config)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="run all configured strategies and summarize")
    add_common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("toy2d", help="trace the 2-variable example trajectory")
    p.add_argument("--strategy", default="abs")
    p.add_argument("--eps", type=float, help="shorthand for a clamp(eps) strategy")
    p.add_argument("--start", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out", default="tetnewton_out")
    p.set_defaults(func=_cmd_toy2d)

    p = sub.add_parser("sweep", help="repeat a comparison along one axis")
    add_common(p)
    p.add_argument(
        "--axis", required=True, choices=["nu", "stretch_factor", "resolution"]
    )
    p.add_argument("--values", required=True, help="comma-separated increasing values")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gen-mesh", help="write a generated beam as .node/.ele")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--nz", type=int, required=True)
    p.add_argument("--dims", required=True, help="extents, e.g. 1,1,3")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_gen_mesh)

    p = sub.add_parser("mesh-info", help="summarize a .node/.ele mesh")
    p.add_argument("--node", required=True)
    p.add_argument("--ele", required=True)
    p.set_defaults(func=_cmd_mesh_info)

    p = sub.add_parser(
        "bench-kernels", help="compare compiled vs python kernel timings"
    )
    p.add_argument("--cells", type=int, default=6)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--csv", help="optional timings CSV path")
    p.set_defaults(func=_cmd_bench_kernels)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run_with_thread_limit(args)
    except (ConfigError, MeshParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
