"""Command-line entry point and benchmark campaigns.

Subcommands::

    rosia build-catalog --input <csv> --output <cat> --mag-limit <f> --min-sep-deg <f>
    rosia simulate --catalog <cat> --out <jsonl> --scenes <n> --pos-sigma-px <f>
                   --mag-sigma <f> --false-stars <n> --seed <u64>
    rosia solve --catalog <cat> --scene <jsonl[:line]> --config <S1|S2|S3|file>
                [--baseline-bound]
    rosia bench --catalog <cat> --sweep <pos|mag|false> --configs <list>
                --scenes <n> --seed <u64> --out <dir> [--compare-bounds]

Exit codes: 0 ok, 2 I/O or format error, 3 empty catalog, 4 too few
stars.  The environment variable ROSIA_THREADS caps campaign
parallelism (default 1: scenes run serially, which keeps per-scene
runtimes meaningful).

A scene is scored as identified only when every reported match agrees
with the simulator's ground truth; any wrong identification makes the
scene a false positive, and solver no-results (including iteration-cap
aborts) count as no-result.  The three rates sum to one.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .catalog import (
    EmptyCatalog,
    FormatError,
    OnboardCatalog,
    build_onboard_catalog,
    load_catalog,
    read_raw_csv,
    save_catalog,
)
from .simulator import (
    CameraModel,
    NoiseSpec,
    SimulatedScene,
    generate_scene,
    pixel_to_angle,
    scene_from_json,
    write_scenes,
)
from .solver import (
    PRESETS,
    SolveResult,
    SolveStatus,
    SolverConfig,
    TooFewStars,
    solve,
)

EXIT_OK = 0
EXIT_IO = 2
EXIT_EMPTY_CATALOG = 3
EXIT_TOO_FEW_STARS = 4

# Noise levels per sweep; the swept axis varies, the others sit at the
# standard 1-pixel / 0.3-magnitude operating point.
SWEEP_LEVELS = {
    "pos": [0.0, 0.5, 1.0, 1.5, 2.0],  # pixels of positional SD
    "mag": [0.0, 0.25, 0.5, 0.75, 1.0],  # magnitude SD
    "false": [0, 2, 5, 8, 10],  # injected false stars
}

REPORT_FIELDS = [
    "config",
    "sweep",
    "level",
    "scenes",
    "id_rate",
    "no_result_rate",
    "false_positive_rate",
    "mean_runtime",
    "mean_iterations",
    "mean_bound_evals",
]


@dataclass(slots=True)
class ReportRow:
    config: str
    sweep: str
    level: float
    scenes: int
    id_rate: float
    no_result_rate: float
    false_positive_rate: float
    mean_runtime: float
    mean_iterations: float
    mean_bound_evals: float


@dataclass(slots=True)
class ExperimentReport:
    rows: list[ReportRow]
    environment: dict


def score_scene(result: SolveResult, truth_ids: np.ndarray) -> str:
    """Classify one solved scene: 'identified', 'no_result', 'false_positive'.

    Identified requires that every reported match names the true catalog
    id of a real scene star; a single wrong id (including any match on a
    false star) reclassifies the scene as a false positive.
    """
    if result.status is SolveStatus.NO_RESULT:
        return "no_result"
    for scene_index, catalog_id in result.matches:
        if truth_ids[scene_index] != catalog_id:
            return "false_positive"
    return "identified"


def _n_threads() -> int:
    raw = os.environ.get("ROSIA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _solve_scene(args) -> tuple[str, SolveResult]:
    scene, catalog, config = args
    try:
        result = solve(scene.vectors, scene.mags, catalog, config)
    except TooFewStars:
        return "no_result", None
    return score_scene(result, scene.truth_ids), result


def run_campaign(
    catalog: OnboardCatalog,
    sweep: str,
    configs: dict[str, SolverConfig],
    n_scenes: int,
    base_seed: int,
    camera: CameraModel | None = None,
    levels: list | None = None,
) -> list[ReportRow]:
    """Sweep one noise axis over shared scene sets and aggregate rates.

    Scene k at level index li is generated with seed base_seed + li *
    n_scenes + k, so every config sees identical scenes and reruns with
    the same base seed reproduce the same rows (runtime fields aside).
    """
    camera = camera or CameraModel(mag_limit=catalog.mag_limit)
    levels = SWEEP_LEVELS[sweep] if levels is None else levels
    rows = []
    pool_size = _n_threads()
    for li, level in enumerate(levels):
        noise_kw = {"pos_sigma_deg": pixel_to_angle(1.0, camera), "mag_sigma": 0.3}
        if sweep == "pos":
            noise_kw["pos_sigma_deg"] = pixel_to_angle(float(level), camera)
        elif sweep == "mag":
            noise_kw["mag_sigma"] = float(level)
        elif sweep == "false":
            noise_kw["false_star_count"] = int(level)
        else:
            raise ValueError(f"unknown sweep {sweep!r}")
        scenes = [
            generate_scene(
                catalog,
                camera,
                NoiseSpec(seed=base_seed + li * n_scenes + k, **noise_kw),
            )
            for k in range(n_scenes)
        ]
        for name, config in configs.items():
            tasks = [(scene, catalog, config) for scene in scenes]
            if pool_size > 1:
                with ThreadPoolExecutor(max_workers=pool_size) as pool:
                    outcomes = list(pool.map(_solve_scene, tasks))
            else:
                outcomes = [_solve_scene(t) for t in tasks]
            counts = {"identified": 0, "no_result": 0, "false_positive": 0}
            runtimes, iterations, bound_evals = [], [], []
            for verdict, result in outcomes:
                counts[verdict] += 1
                if result is not None:
                    runtimes.append(result.stats.wall_time)
                    iterations.append(result.stats.iterations)
                    bound_evals.append(result.stats.bound_evals)
            total = max(1, n_scenes)
            rows.append(
                ReportRow(
                    config=name,
                    sweep=sweep,
                    level=float(level),
                    scenes=n_scenes,
                    id_rate=counts["identified"] / total,
                    no_result_rate=counts["no_result"] / total,
                    false_positive_rate=counts["false_positive"] / total,
                    mean_runtime=float(np.mean(runtimes)) if runtimes else 0.0,
                    mean_iterations=float(np.mean(iterations)) if iterations else 0.0,
                    mean_bound_evals=float(np.mean(bound_evals)) if bound_evals else 0.0,
                )
            )
    return rows


def compare_bounds(
    catalog: OnboardCatalog,
    config: SolverConfig,
    n_scenes: int,
    base_seed: int,
    camera: CameraModel | None = None,
    baseline_cap: int = 20_000,
) -> dict:
    """Solve identical scenes with and without the triplet constraint.

    Baseline runs are capped at ``baseline_cap`` iterations and capped
    runs are counted at the cap, which makes the reported iteration
    ratio a conservative lower bound.
    """
    camera = camera or CameraModel(mag_limit=catalog.mag_limit)
    noise = {"pos_sigma_deg": pixel_to_angle(1.0, camera), "mag_sigma": 0.3}
    tight_cfg = config
    base_cfg = SolverConfig(
        alpha_eps=config.alpha_eps,
        eps_v=config.eps_v,
        triplet_k=config.triplet_k,
        min_matches=config.min_matches,
        min_match_fraction=config.min_match_fraction,
        use_triplet_bound=False,
        max_iterations=baseline_cap,
    )
    tight_iters, base_iters = [], []
    tight_time, base_time = [], []
    for k in range(n_scenes):
        scene = generate_scene(catalog, camera, NoiseSpec(seed=base_seed + k, **noise))
        if len(scene) < 3:
            continue
        r_tight = solve(scene.vectors, scene.mags, catalog, tight_cfg)
        r_base = solve(scene.vectors, scene.mags, catalog, base_cfg)
        tight_iters.append(r_tight.stats.iterations)
        base_iters.append(r_base.stats.iterations)
        tight_time.append(r_tight.stats.wall_time)
        base_time.append(r_base.stats.wall_time)
    mean_tight = float(np.mean(tight_iters)) if tight_iters else 0.0
    mean_base = float(np.mean(base_iters)) if base_iters else 0.0
    return {
        "scenes": len(tight_iters),
        "baseline_cap": baseline_cap,
        "mean_iterations_triplet": mean_tight,
        "mean_iterations_baseline": mean_base,
        "iteration_ratio": mean_base / mean_tight if mean_tight else 0.0,
        "mean_runtime_triplet": float(np.mean(tight_time)) if tight_time else 0.0,
        "mean_runtime_baseline": float(np.mean(base_time)) if base_time else 0.0,
    }


def _environment(seed: int) -> dict:
    return {
        "cpu": platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "threads": _n_threads(),
        "seed": seed,
    }


def _load_config(spec: str, baseline: bool = False) -> SolverConfig:
    if spec in PRESETS:
        config = PRESETS[spec]
    else:
        with open(spec, encoding="utf-8") as fh:
            raw = json.load(fh)
        config = SolverConfig(
            alpha_eps=math.radians(raw["alpha_eps_deg"]),
            eps_v=raw.get("eps_v", 0.6),
            triplet_k=raw.get("triplet_k", 2),
            min_matches=raw.get("min_matches", 3),
            min_match_fraction=raw.get("min_match_fraction", 0.30),
            use_triplet_bound=raw.get("use_triplet_bound", True),
            max_iterations=raw.get("max_iterations", 1_000_000),
        )
    if baseline:
        config = SolverConfig(
            alpha_eps=config.alpha_eps,
            eps_v=config.eps_v,
            triplet_k=config.triplet_k,
            min_matches=config.min_matches,
            min_match_fraction=config.min_match_fraction,
            use_triplet_bound=False,
            max_iterations=config.max_iterations,
        )
    return config


def _axis_angle_to_quat(rotation: np.ndarray) -> list[float]:
    theta = float(np.linalg.norm(rotation))
    if theta < 1e-15:
        return [1.0, 0.0, 0.0, 0.0]
    axis = rotation / theta
    half = theta / 2.0
    s = math.sin(half)
    return [math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s]


def _cmd_build_catalog(args) -> int:
    raw = read_raw_csv(args.input)
    cat = build_onboard_catalog(raw, args.mag_limit, math.radians(args.min_sep_deg))
    save_catalog(cat, args.output)
    reloaded = load_catalog(args.output)
    size = os.path.getsize(args.output)
    print(f"stars: {len(reloaded)}")
    print(f"file: {args.output} ({size} bytes, {size / 1e6:.3f} MB)")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cat = load_catalog(args.catalog)
    camera = CameraModel(mag_limit=cat.mag_limit)
    scenes = []
    for k in range(args.scenes):
        noise = NoiseSpec(
            pos_sigma_deg=pixel_to_angle(args.pos_sigma_px, camera),
            mag_sigma=args.mag_sigma,
            false_star_count=args.false_stars,
            seed=args.seed + k,
        )
        scenes.append(generate_scene(cat, camera, noise))
    write_scenes(args.out, scenes)
    mean_stars = float(np.mean([len(s) for s in scenes])) if scenes else 0.0
    print(f"wrote {len(scenes)} scenes to {args.out} (mean stars {mean_stars:.1f})")
    return EXIT_OK


def _read_scene_arg(spec: str) -> SimulatedScene:
    path, line_no = spec, 1
    if ":" in spec:
        head, _, tail = spec.rpartition(":")
        if tail.isdigit():
            path, line_no = head, int(tail)
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not 1 <= line_no <= len(lines):
        raise FormatError(f"scene file {path} has no line {line_no}")
    return scene_from_json(lines[line_no - 1])


def _cmd_solve(args) -> int:
    cat = load_catalog(args.catalog)
    scene = _read_scene_arg(args.scene)
    config = _load_config(args.config, baseline=args.baseline_bound)
    result = solve(scene.vectors, scene.mags, cat, config)
    payload = {
        "status": result.status.value,
        "consensus": result.consensus,
        "matches": [[i, j] for i, j in result.matches],
        "rotation_axis_angle": (
            None if result.rotation is None else [float(x) for x in result.rotation]
        ),
        "quaternion_wxyz": (
            None if result.rotation is None else _axis_angle_to_quat(result.rotation)
        ),
        "stats": {
            "iterations": result.stats.iterations,
            "max_queue_len": result.stats.max_queue_len,
            "bound_evals": result.stats.bound_evals,
            "objective_evals": result.stats.objective_evals,
            "wall_time": result.stats.wall_time,
            "iteration_cap_hit": result.stats.iteration_cap_hit,
        },
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def write_report(report: ExperimentReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    rows = [asdict(r) for r in report.rows]
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump({"environment": report.environment, "rows": rows}, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out_dir, "report.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


def _cmd_bench(args) -> int:
    cat = load_catalog(args.catalog)
    names = [c.strip() for c in args.configs.split(",") if c.strip()]
    configs = {name: _load_config(name) for name in names}
    if args.compare_bounds:
        summary = compare_bounds(
            cat, configs[names[0]], args.scenes, args.seed, baseline_cap=args.baseline_cap
        )
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "bound_comparison.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"environment": _environment(args.seed), **summary}, fh, indent=2)
            fh.write("\n")
        print(json.dumps(summary, indent=2))
        return EXIT_OK
    rows = run_campaign(cat, args.sweep, configs, args.scenes, args.seed)
    for row in rows:
        total = row.id_rate + row.no_result_rate + row.false_positive_rate
        assert abs(total - 1.0) < 1e-9 or row.scenes == 0
    report = ExperimentReport(rows=rows, environment=_environment(args.seed))
    write_report(report, args.out)
    for row in rows:
        print(
            f"{row.config} {row.sweep}={row.level:g}: id {row.id_rate:.3f} "
            f"nores {row.no_result_rate:.3f} fp {row.false_positive_rate:.3f} "
            f"iters {row.mean_iterations:.0f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rosia", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-catalog", help="build and save an onboard catalog")
    p.add_argument("--input", required=True, help="raw catalog CSV")
    p.add_argument("--output", required=True, help="onboard catalog file")
    p.add_argument("--mag-limit", type=float, default=6.0)
    p.add_argument("--min-sep-deg", type=float, default=0.04)
    p.set_defaults(func=_cmd_build_catalog)

    p = sub.add_parser("simulate", help="generate simulated scenes (JSON Lines)")
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scenes", type=int, default=100)
    p.add_argument("--pos-sigma-px", type=float, default=0.0)
    p.add_argument("--mag-sigma", type=float, default=0.0)
    p.add_argument("--false-stars", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("solve", help="identify one scene")
    p.add_argument("--catalog", required=True)
    p.add_argument("--scene", required=True, help="scene file, optionally path:line")
    p.add_argument("--config", default="S2", help="S1, S2, S3, or a JSON config file")
    p.add_argument("--baseline-bound", action="store_true")
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run a noise-sweep campaign")
    p.add_argument("--catalog", required=True)
    p.add_argument("--sweep", choices=sorted(SWEEP_LEVELS), default="pos")
    p.add_argument("--configs", default="S1,S2,S3")
    p.add_argument("--scenes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--compare-bounds", action="store_true")
    p.add_argument("--baseline-cap", type=int, default=20_000)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EmptyCatalog as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_CATALOG
    except TooFewStars as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_FEW_STARS
    except (FormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
