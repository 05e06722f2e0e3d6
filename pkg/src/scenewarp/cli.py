"""Command-line interface.

Verbs:
  init    ingest or synthesize the source video + depth into a workdir
  build   complete the view-time matrix, streaming cells to the dataset
  export  re-serialize a dataset directory (validating every invariant)
  verify  compare a dataset against its oracle scene and write a report
  all     init + build + verify in one process

Settings resolve as: built-in defaults, then command-line flags, then a
--config JSON file (the file wins), with SCENEWARP_ADAPTER_BASE_URL
overriding the adapter endpoint on top. The resolved configuration is
echoed into the dataset manifest.

Exit codes: 0 ok, 2 configuration error, 3 adapter unavailable,
4 incomplete or corrupt matrix.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from .adapters import AdapterConfig, CAPABILITIES
from .camera import TrajectorySpec
from .errors import (
    AdapterUnavailable,
    FormatError,
    IncompleteMatrix,
    InvalidConfig,
    InvalidInput,
    MissingCell,
)
from .pipeline import (
    Pipeline,
    PipelineConfig,
    ViewTimeMatrix,
    export_dataset,
    import_dataset,
    read_cell,
    verify,
    write_cell,
)
from .report import write_report

ENV_ADAPTER_URL = "SCENEWARP_ADAPTER_BASE_URL"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADAPTER = 3
EXIT_INCOMPLETE = 4


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file of PipelineConfig fields; overrides flags")
    p.add_argument("--prompt", help="text prompt for the generative source")
    p.add_argument("--input-dir", help="directory of source frames (PNG, plus optional depth/*.f32)")
    p.add_argument("--views", type=int, help="number of virtual cameras (default 25)")
    p.add_argument("--traj-kind", choices=["orbit-arc", "lateral-line"], help="rig layout")
    p.add_argument("--radius", type=float, help="orbit radius in world units")
    p.add_argument("--total-angle", type=float, help="orbit arc span in degrees")
    p.add_argument("--baseline", type=float, help="lateral-line total extent")
    p.add_argument("--look-at", help="orbit target as x,y,z")
    p.add_argument("--base-fraction", type=float, help="where the source camera sits on the path")
    p.add_argument("--timestamps", type=int, help="number of timestamps (default 49)")
    p.add_argument("--width", type=int, help="working width (default 720)")
    p.add_argument("--height", type=int, help="working height (default 480)")
    p.add_argument("--fov", type=float, dest="fov_h_deg", help="horizontal field of view in degrees")
    p.add_argument("--hole-threshold", type=int, help="large-hole area threshold at 160x96")
    p.add_argument("--bilateral-sizes", help="comma list of odd filter sizes, e.g. 3,5")
    p.add_argument("--sigma-space", type=float, help="bilateral spatial sigma in px")
    p.add_argument("--sigma-range", type=float, help="bilateral range sigma in world units")
    p.add_argument("--rho", type=float, help="background majority needed for temporal copies")
    p.add_argument("--seg-alpha", type=float, help="depth-threshold segmentation fraction")
    p.add_argument("--candidates", type=int, help="external inpaint candidates per hole")
    p.add_argument("--telea-radius", type=int, help="fast-marching fill radius in px")
    p.add_argument("--adapter-url", help="HTTP base URL for all five capabilities")
    p.add_argument("--seed", type=int, help="global seed (also keys the oracle scene)")
    p.add_argument("--workers", type=int, help="worker threads for pixel-level stages")


def _flag_overrides(args) -> dict:
    traj = {}
    for flag, key in [
        ("views", "num_views"),
        ("traj_kind", "kind"),
        ("radius", "radius"),
        ("total_angle", "total_angle"),
        ("baseline", "baseline"),
    ]:
        val = getattr(args, flag, None)
        if val is not None:
            traj[key] = val
    if getattr(args, "look_at", None) is not None:
        traj["look_at"] = tuple(float(x) for x in args.look_at.split(","))

    fields = {}
    for flag, key in [
        ("prompt", "prompt"),
        ("input_dir", "input_dir"),
        ("base_fraction", "base_fraction"),
        ("timestamps", "timestamps"),
        ("width", "width"),
        ("height", "height"),
        ("fov_h_deg", "fov_h_deg"),
        ("hole_threshold", "hole_threshold_base"),
        ("sigma_space", "bilateral_sigma_space"),
        ("sigma_range", "bilateral_sigma_range"),
        ("rho", "cim_rho"),
        ("seg_alpha", "seg_alpha"),
        ("candidates", "n_candidates"),
        ("telea_radius", "telea_radius"),
        ("seed", "seed"),
        ("workers", "workers"),
    ]:
        val = getattr(args, flag, None)
        if val is not None:
            fields[key] = val
    if getattr(args, "bilateral_sizes", None) is not None:
        fields["bilateral_sizes"] = tuple(int(s) for s in args.bilateral_sizes.split(","))
    if getattr(args, "adapter_url", None) is not None:
        fields["adapters"] = AdapterConfig.all_remote(args.adapter_url)
    return fields, traj


def resolve_config(args) -> PipelineConfig:
    """defaults < flags < config file, then the env adapter override."""
    cfg = PipelineConfig()
    fields, traj = _flag_overrides(args)
    if traj:
        cfg = replace(cfg, trajectory=replace(cfg.trajectory, **traj))
    if fields:
        cfg = replace(cfg, **fields)
    if getattr(args, "config", None):
        try:
            file_fields = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config file: {exc}") from exc
        merged = cfg.to_jsonable()
        merged.update(file_fields)
        cfg = PipelineConfig.from_jsonable(merged)
    env_url = os.environ.get(ENV_ADAPTER_URL)
    if env_url:
        cfg = replace(cfg, adapters=AdapterConfig.all_remote(env_url))
    return cfg


def _workdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_init(args) -> int:
    cfg = resolve_config(args)
    out = _workdir(args)
    pipe = Pipeline(cfg)
    colors, depths = pipe._ingest()
    src = out / "source"
    (src / "frames").mkdir(parents=True, exist_ok=True)
    (src / "depth").mkdir(parents=True, exist_ok=True)
    from .pipeline import _depth_bytes

    for t, (c, d) in enumerate(zip(colors, depths)):
        Image.fromarray(np.asarray(c, dtype=np.uint8), mode="RGB").save(src / "frames" / f"t{t:03d}.png")
        (src / "depth" / f"t{t:03d}.f32").write_bytes(_depth_bytes(d))
    (out / "init.json").write_text(json.dumps(cfg.to_jsonable(), indent=1))
    print(f"ingested {len(colors)} frames at {cfg.width}x{cfg.height} into {src}")
    return EXIT_OK


def cmd_build(args) -> int:
    out = _workdir(args)
    init_path = out / "init.json"
    if init_path.exists() and not getattr(args, "config", None):
        cfg = PipelineConfig.from_jsonable(json.loads(init_path.read_text()))
        # flags may still override an init.json baseline; the config file wins
        fields, traj = _flag_overrides(args)
        if traj:
            cfg = replace(cfg, trajectory=replace(cfg.trajectory, **traj))
        if fields:
            cfg = replace(cfg, **fields)
    else:
        cfg = resolve_config(args)
    src_frames = out / "source" / "frames"
    if cfg.input_dir is None and src_frames.exists():
        cfg = replace(cfg, input_dir=str(out / "source"))
    if not init_path.exists():
        # persist the resolved settings so later --resume runs agree
        init_path.write_text(json.dumps(cfg.to_jsonable(), indent=1))

    pipe = Pipeline(cfg)
    dataset = out / "dataset"
    progress_path = out / "progress.json"
    v_total = len(pipe.network)

    preloaded = None
    start_t = 0
    if args.resume and progress_path.exists():
        state = json.loads(progress_path.read_text())
        start_t = int(state.get("completed_timestamps", 0))
        if start_t > 0:
            preloaded = _load_partial(dataset, pipe, start_t, state.get("schedule"))
            print(f"resuming after {start_t} completed timestamps")

    state = {"schedule": None, "cells": set()}

    def on_schedule(sched):
        state["schedule"] = sched.to_jsonable()

    def progress(v, t, frame):
        # stream every completed cell; record whole completed timestamps so
        # an aborted build can resume at the timestamp boundary
        write_cell(frame, dataset, v, t)
        state["cells"].add((v, t))
        done_t = start_t
        while done_t < cfg.timestamps and all(
            (vv, done_t) in state["cells"] for vv in range(v_total)
        ):
            done_t += 1
        progress_path.write_text(
            json.dumps({"completed_timestamps": done_t, "schedule": state["schedule"]})
        )

    try:
        matrix = pipe.run(
            progress=progress, preloaded=preloaded, start_t=start_t, on_schedule=on_schedule
        )
    except (IncompleteMatrix, MissingCell) as exc:
        print(f"build aborted: {exc}", file=sys.stderr)
        print(f"partial state recorded in {progress_path}", file=sys.stderr)
        return EXIT_INCOMPLETE

    manifest = export_dataset(matrix, dataset)
    progress_path.write_text(
        json.dumps({"completed_timestamps": cfg.timestamps, "schedule": manifest["schedule"]})
    )
    print(f"built {matrix.num_views} views x {matrix.num_timestamps} timestamps into {dataset}")
    return EXIT_OK


def _load_partial(dataset: Path, pipe: Pipeline, t_done: int, schedule_json) -> ViewTimeMatrix:
    from .warping import WarpSchedule

    v_count = len(pipe.network)
    frames = [[None] * len(pipe.times) for _ in range(v_count)]
    for v in range(v_count):
        for t in range(t_done):
            frames[v][t] = read_cell(dataset, v, t, pipe.k.width, pipe.k.height)
    sched = None
    if schedule_json:
        sched = WarpSchedule.from_jsonable(schedule_json, pipe.network.base_index, v_count)
    return ViewTimeMatrix(
        network=pipe.network,
        frames=frames,
        meta=[[None] * len(pipe.times) for _ in range(v_count)],
        times=pipe.times,
        seed=pipe.config.seed,
        schedule=sched,
    )


def cmd_export(args) -> int:
    matrix = import_dataset(args.dataset)
    export_dataset(matrix, args.to)
    print(f"re-exported {matrix.num_views}x{matrix.num_timestamps} dataset to {args.to}")
    return EXIT_OK


def cmd_verify(args) -> int:
    matrix = import_dataset(args.dataset)
    report = verify(matrix)
    paths = write_report(report, args.report)
    s = report["summary"]
    print(
        f"verified {matrix.num_views}x{matrix.num_timestamps}: "
        f"mean trusted PSNR {s['mean_psnr_db'] and round(s['mean_psnr_db'], 2)} dB, "
        f"{s['exact_cells']} bit-exact cells"
    )
    print(f"report written to {paths['report']}")
    return EXIT_OK


def cmd_all(args) -> int:
    cfg = resolve_config(args)
    out = _workdir(args)
    pipe = Pipeline(cfg)
    matrix = pipe.run()
    dataset = out / "dataset"
    export_dataset(matrix, dataset)
    report = verify(matrix) if cfg.oracle_mode else None
    if report is not None:
        write_report(report, out / "report")
        print(f"report written to {out / 'report'}")
    print(f"dataset written to {dataset}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scenewarp", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="ingest or synthesize the source video and depth")
    _add_config_flags(p_init)
    p_init.add_argument("--out", "-o", required=True, help="workdir")
    p_init.set_defaults(fn=cmd_init)

    p_build = sub.add_parser("build", help="complete the view-time matrix")
    _add_config_flags(p_build)
    p_build.add_argument("--out", "-o", required=True, help="workdir (from init, or fresh)")
    p_build.add_argument("--resume", action="store_true", help="continue from progress.json")
    p_build.set_defaults(fn=cmd_build)

    p_export = sub.add_parser("export", help="validate and re-serialize a dataset")
    p_export.add_argument("--dataset", required=True)
    p_export.add_argument("--to", required=True)
    p_export.set_defaults(fn=cmd_export)

    p_verify = sub.add_parser("verify", help="compare a dataset against its oracle scene")
    p_verify.add_argument("--dataset", required=True)
    p_verify.add_argument("--report", required=True, help="report output directory")
    p_verify.set_defaults(fn=cmd_verify)

    p_all = sub.add_parser("all", help="init + build + verify in one process")
    _add_config_flags(p_all)
    p_all.add_argument("--out", "-o", required=True, help="workdir")
    p_all.set_defaults(fn=cmd_all)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidConfig, InvalidInput) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdapterUnavailable as exc:
        print(f"adapter unavailable: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except (IncompleteMatrix, MissingCell, FormatError) as exc:
        print(f"incomplete or corrupt matrix: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
