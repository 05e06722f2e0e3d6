"""Orchestration: scene ingest, schedule-driven completion, dataset I/O.

The run proceeds timestamp by timestamp. At t = 0 the completion order
of the virtual views is decided greedily (always the view with minimal
coverage from everything already completed) and that order is replayed
for every later timestamp. Each cell is completed by warping all
previously completed views of the same timestamp into it, routing the
remaining holes (temporal copy, external backend, fast-marching fill),
and resolving depth for the freshly painted pixels by aligning a depth
estimate of the completed image against the warped depth.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .adapters import AdapterConfig, GenerateRequest, ModelAdapters, OracleBackend
from .camera import CameraNetwork, Intrinsics, Pose, TrajectorySpec, build_trajectory, make_intrinsics
from .depth import AlignmentResult, DepthMap, align_depth, apply_alignment, sharpen_depth
from .errors import (
    FormatError,
    IncompleteMatrix,
    InvalidConfig,
    InvalidInput,
    MissingCell,
    SingularSystem,
)
from .frame import (
    PROV_COPIED_PREV_T,
    PROV_ORIGINAL,
    PROV_WARPED,
    PROVENANCE_NAMES,
    Frame,
    frames_equal,
)
from .inpaint import InpaintRequestSpec, fmm_fill_float, partition_holes, scaled_hole_threshold
from .oracle import SceneSpec, occlusion_mask, render_oracle, standard_scene, time_grid
from .temporal import SegMask, bootstrap_plan, execute_plan, plan_fills, segment_fg
from .warping import WarpSchedule, merge_warps, overlap, schedule as make_schedule, warp

DATASET_VERSION = "1"
DEPTH_MAGIC = b"PS4D"


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; flags and config files map onto this 1:1."""

    prompt: str | None = None
    input_dir: str | None = None
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    base_fraction: float = 0.5
    timestamps: int = 49
    width: int = 720
    height: int = 480
    fov_h_deg: float = 60.0
    hole_threshold_base: int = 64
    bilateral_sizes: tuple = (3, 5)
    bilateral_sigma_space: float = 2.0
    bilateral_sigma_range: float = 0.5
    cim_rho: float = 0.8
    seg_alpha: float = 0.35
    n_candidates: int = 10
    telea_radius: int = 3
    adapters: AdapterConfig = field(default_factory=AdapterConfig.all_stub)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.timestamps < 1:
            raise InvalidConfig("timestamps must be >= 1")
        if self.workers < 1:
            raise InvalidConfig("workers must be >= 1")
        if not (0.0 < self.cim_rho <= 1.0):
            raise InvalidConfig("cim_rho must lie in (0, 1]")

    @property
    def oracle_mode(self) -> bool:
        return self.prompt is None and self.input_dir is None

    def to_jsonable(self) -> dict:
        d = {
            "prompt": self.prompt,
            "input_dir": self.input_dir,
            "trajectory": {
                "kind": self.trajectory.kind,
                "num_views": self.trajectory.num_views,
                "radius": self.trajectory.radius,
                "baseline": self.trajectory.baseline,
                "total_angle": self.trajectory.total_angle,
                "look_at": list(self.trajectory.look_at),
            },
            "base_fraction": self.base_fraction,
            "timestamps": self.timestamps,
            "width": self.width,
            "height": self.height,
            "fov_h_deg": self.fov_h_deg,
            "hole_threshold_base": self.hole_threshold_base,
            "bilateral_sizes": list(self.bilateral_sizes),
            "bilateral_sigma_space": self.bilateral_sigma_space,
            "bilateral_sigma_range": self.bilateral_sigma_range,
            "cim_rho": self.cim_rho,
            "seg_alpha": self.seg_alpha,
            "n_candidates": self.n_candidates,
            "telea_radius": self.telea_radius,
            "adapters": dict(self.adapters.backends),
            "seed": self.seed,
            "workers": self.workers,
        }
        return d

    @classmethod
    def from_jsonable(cls, d: dict) -> "PipelineConfig":
        traj = d.get("trajectory", {})
        kw = dict(d)
        kw.pop("trajectory", None)
        adapters = kw.pop("adapters", None)
        cfg = cls(
            trajectory=TrajectorySpec(
                kind=traj.get("kind", "orbit-arc"),
                num_views=traj.get("num_views", 25),
                radius=traj.get("radius", 3.0),
                baseline=traj.get("baseline", 1.0),
                total_angle=traj.get("total_angle", 40.0),
                look_at=tuple(traj.get("look_at", (0.0, 0.0, 3.0))),
            ),
            adapters=AdapterConfig(backends=adapters) if adapters else AdapterConfig.all_stub(),
            **{k: (tuple(v) if k == "bilateral_sizes" else v) for k, v in kw.items()},
        )
        return cfg


@dataclass
class CellMeta:
    """Per-cell completion record kept in memory (not part of the dataset)."""

    sources: tuple = ()
    alignment: AlignmentResult | None = None
    alignment_note: str = ""
    pre_inpaint_holes: np.ndarray | None = None
    seg_mask: np.ndarray | None = None
    copied_pixels: int = 0
    external_pixels: int = 0
    telea_pixels: int = 0
    fallbacks: int = 0

    def provenance_histogram(self, frame: Frame) -> dict:
        counts = np.bincount(frame.provenance.ravel(), minlength=5)
        return {PROVENANCE_NAMES[i]: int(counts[i]) for i in range(5)}


@dataclass
class ViewTimeMatrix:
    """V x T grid of completed frames plus the rig that produced them."""

    network: CameraNetwork
    frames: list
    meta: list
    times: np.ndarray
    seed: int
    schedule: WarpSchedule | None = None
    config: dict | None = None

    @property
    def num_views(self) -> int:
        return len(self.network)

    @property
    def num_timestamps(self) -> int:
        return len(self.times)

    def cell(self, v: int, t: int) -> Frame:
        f = self.frames[v][t]
        if f is None:
            raise MissingCell(f"cell ({v}, {t}) was never completed")
        return f

    def validate_complete(self):
        base = self.network.base_index
        for v in range(self.num_views):
            for t in range(self.num_timestamps):
                f = self.frames[v][t]
                if f is None:
                    raise IncompleteMatrix(f"cell ({v}, {t}) missing")
                if f.hole_mask.any():
                    raise IncompleteMatrix(f"cell ({v}, {t}) still has holes")
                prov_original = f.provenance == PROV_ORIGINAL
                if v == base and not prov_original.all():
                    raise IncompleteMatrix("base view cells must be fully original")
                if v != base and prov_original.any():
                    raise IncompleteMatrix("non-base cells must not claim original provenance")


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.k: Intrinsics = make_intrinsics(config.fov_h_deg, config.width, config.height)
        self.network = build_trajectory(config.trajectory, self.k, config.base_fraction)
        self.times = time_grid(config.timestamps)
        self.scene: SceneSpec | None = standard_scene(config.seed) if config.oracle_mode else None
        backend = OracleBackend(
            scene=self.scene,
            base_pose=self.network.poses[self.network.base_index],
            fov_h_deg=config.fov_h_deg,
        )
        self.adapters = ModelAdapters(config.adapters, backend)
        self.threshold = scaled_hole_threshold(config.width, config.height, config.hole_threshold_base)

    # -- source ingestion ---------------------------------------------------

    def _ingest(self):
        cfg = self.config
        base_pose = self.network.poses[self.network.base_index]
        depths = None
        if cfg.input_dir is not None:
            colors, depths = _load_source_dir(
                Path(cfg.input_dir), cfg.width, cfg.height, cfg.timestamps
            )
        else:
            req = GenerateRequest(
                prompt=cfg.prompt or "",
                seed=cfg.seed,
                num_frames=cfg.timestamps,
                width=cfg.width,
                height=cfg.height,
            )
            colors = self.adapters.generate_video(req)
        if depths is None:
            metas = [(base_pose, float(t)) for t in self.times]
            depths = self.adapters.estimate_depth(colors, metas=metas)
        return colors, depths

    # -- per-cell work ------------------------------------------------------

    def _condition_base_depth(self, d_hat: DepthMap, prev: Frame | None):
        """Anchor or align the ingested depth, then sharpen its edges."""
        note = "anchor"
        result = None
        d = d_hat
        if prev is not None:
            try:
                result = align_depth(d_hat, prev.depth, mask=d_hat.mask & prev.depth.mask)
                d = apply_alignment(d_hat, result)
                note = "aligned_prev_t"
            except SingularSystem:
                note = "raw_predicted"
        for size in self.config.bilateral_sizes:
            d = sharpen_depth(
                d,
                filter_size=size,
                sigma_space=self.config.bilateral_sigma_space,
                sigma_range=self.config.bilateral_sigma_range,
            )
        return d.quantized(), result, note

    def _cell_seed(self, v: int, t: int) -> int:
        return self.config.seed + 100000 * t + 1000 * v

    def _complete_depth(self, frame: Frame, pose: Pose, t_index: int):
        """Fill depth at freshly painted pixels from an aligned estimate."""
        known = frame.depth.mask
        need = ~known
        if not need.any():
            return frame, None, "complete"
        d_hat = self.adapters.estimate_depth(
            [frame.color], metas=[(pose, float(self.times[t_index]))]
        )[0]
        note = "aligned_rendered"
        result = None
        try:
            result = align_depth(d_hat, frame.depth, mask=d_hat.mask & known)
            aligned = apply_alignment(d_hat, result)
        except SingularSystem:
            aligned = d_hat
            note = "raw_predicted"
        vals = np.where(known, frame.depth.values, aligned.values)
        mask = known | aligned.mask
        if not mask.all():
            vals = fmm_fill_float(np.where(mask, vals, 0.0), ~mask, self.config.telea_radius)
        frame.depth = DepthMap(vals, None).quantized()
        return frame, result, note

    def _build_cell(self, v: int, t_index: int, sources: tuple, matrix: ViewTimeMatrix) -> None:
        cfg = self.config
        poses = self.network.poses
        src_frames = [(matrix.cell(s, t_index), poses[s]) for s in sources]

        if cfg.workers > 1 and len(src_frames) > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                warped = list(
                    pool.map(lambda fp: warp(fp[0], fp[1], poses[v], self.k), src_frames)
                )
        else:
            warped = [warp(f, p, poses[v], self.k) for f, p in src_frames]
        merged = merge_warps(warped)
        pre_holes = merged.hole_mask.copy()

        part = partition_holes(pre_holes, self.threshold)
        prev_frame = matrix.frames[v][t_index - 1] if t_index > 0 else None
        if t_index == 0:
            plan = bootstrap_plan(part, merged.shape)
            seg_now = None
        else:
            seg_now = segment_fg(merged, self.adapters, alpha=cfg.seg_alpha)
            prev_meta = matrix.meta[v][t_index - 1]
            if prev_meta is not None and prev_meta.seg_mask is not None:
                seg_prev = SegMask(prev_meta.seg_mask, "cached")
            else:
                seg_prev = segment_fg(prev_frame, self.adapters, alpha=cfg.seg_alpha)
            plan = plan_fills(part, seg_now, seg_prev, prev_frame, rho=cfg.cim_rho)

        request = InpaintRequestSpec(
            prompt=cfg.prompt or "", n_candidates=cfg.n_candidates, seed=self._cell_seed(v, t_index)
        )
        outcome = execute_plan(merged, plan, prev_frame, self.adapters, request, cfg.telea_radius)
        frame, alignment, note = self._complete_depth(outcome.frame, poses[v], t_index)
        frame.depth = frame.depth.quantized()

        if frame.hole_mask.any():
            raise IncompleteMatrix(f"cell ({v}, {t_index}) left {int(frame.hole_mask.sum())} holes")

        seg_cache = segment_fg(frame, self.adapters, alpha=cfg.seg_alpha)
        matrix.frames[v][t_index] = frame
        matrix.meta[v][t_index] = CellMeta(
            sources=sources,
            alignment=alignment,
            alignment_note=note,
            pre_inpaint_holes=pre_holes,
            seg_mask=seg_cache.mask,
            copied_pixels=outcome.copied_pixels,
            external_pixels=outcome.external_pixels,
            telea_pixels=outcome.telea_pixels,
            fallbacks=outcome.fallbacks,
        )

    def _commit_base(self, t_index: int, color, d_hat: DepthMap, matrix: ViewTimeMatrix) -> None:
        base = self.network.base_index
        prev = matrix.frames[base][t_index - 1] if t_index > 0 else None
        d, alignment, note = self._condition_base_depth(d_hat, prev)
        frame = Frame.from_color_depth(np.asarray(color, dtype=np.uint8), d, PROV_ORIGINAL)
        seg = segment_fg(frame, self.adapters, alpha=self.config.seg_alpha)
        matrix.frames[base][t_index] = frame
        matrix.meta[base][t_index] = CellMeta(
            sources=(), alignment=alignment, alignment_note=note, seg_mask=seg.mask
        )

    # -- the run ------------------------------------------------------------

    def run(
        self,
        progress=None,
        preloaded: ViewTimeMatrix | None = None,
        start_t: int = 0,
        on_schedule=None,
    ) -> ViewTimeMatrix:
        cfg = self.config
        v_count, t_count = len(self.network), len(self.times)
        matrix = ViewTimeMatrix(
            network=self.network,
            frames=[[None] * t_count for _ in range(v_count)],
            meta=[[None] * t_count for _ in range(v_count)],
            times=self.times,
            seed=cfg.seed,
            schedule=None,
            config=cfg.to_jsonable(),
        )
        if preloaded is not None:
            for v in range(v_count):
                for t in range(min(start_t, t_count)):
                    matrix.frames[v][t] = preloaded.frames[v][t]
                    meta = CellMeta()
                    meta.seg_mask = segment_fg(matrix.frames[v][t], self.adapters, alpha=cfg.seg_alpha).mask
                    matrix.meta[v][t] = meta
            matrix.schedule = preloaded.schedule

        colors, depths = self._ingest()
        base = self.network.base_index

        for ti in range(start_t, t_count):
            self._commit_base(ti, colors[ti], depths[ti], matrix)
            if progress:
                progress(base, ti, matrix.frames[base][ti])

            if v_count == 1:
                continue

            if matrix.schedule is None:
                # the greedy scheduler only asks for overlap against views it
                # has already committed to, and the completed tuple grows by
                # one view per step, so each view's warp sources are exactly
                # the prefix of the tuple it first appears in
                built = {base}

                def building_overlap(completed: tuple, target: int) -> float:
                    for i, s in enumerate(completed):
                        if s not in built:
                            self._build_cell(s, 0, tuple(completed[:i]), matrix)
                            built.add(s)
                            if progress:
                                progress(s, 0, matrix.frames[s][0])
                    pairs = [(matrix.cell(s, 0), self.network.poses[s]) for s in completed]
                    return overlap(pairs, self.network.poses[target], self.k)

                matrix.schedule = make_schedule(self.network, building_overlap)
                if on_schedule:
                    on_schedule(matrix.schedule)
                for step in matrix.schedule.steps:
                    if step.target not in built:
                        self._build_cell(step.target, 0, step.sources, matrix)
                        built.add(step.target)
                        if progress:
                            progress(step.target, 0, matrix.frames[step.target][0])
            else:
                for step in matrix.schedule.steps:
                    self._build_cell(step.target, ti, step.sources, matrix)
                    if progress:
                        progress(step.target, ti, matrix.frames[step.target][ti])

        matrix.validate_complete()
        return matrix


def run(config: PipelineConfig, progress=None) -> ViewTimeMatrix:
    return Pipeline(config).run(progress=progress)


def _load_source_dir(path: Path, width: int, height: int, timestamps: int):
    """Frames (and optional depth) from a flat PNG dir or an init bundle."""
    frame_dir = path / "frames" if (path / "frames").is_dir() else path
    files = sorted(frame_dir.glob("*.png"))
    if len(files) < timestamps:
        raise InvalidConfig(f"{frame_dir} holds {len(files)} frames, {timestamps} requested")
    colors = []
    for f in files[:timestamps]:
        img = Image.open(f).convert("RGB")
        if img.size != (width, height):
            img = img.resize((width, height), Image.BILINEAR)
        colors.append(np.asarray(img, dtype=np.uint8))

    depth_dir = path / "depth"
    depths = None
    if depth_dir.is_dir():
        dfiles = sorted(depth_dir.glob("*.f32"))
        if len(dfiles) >= timestamps:
            depths = []
            for f in dfiles[:timestamps]:
                d = _depth_from_bytes(f.read_bytes(), str(f))
                if d.shape != (height, width):
                    raise InvalidConfig(f"{f}: depth size {d.shape} does not match {height}x{width}")
                depths.append(d)
    return colors, depths


# --------------------------------------------------------------------------
# dataset I/O


def _depth_bytes(d: DepthMap) -> bytes:
    h, w = d.shape
    return DEPTH_MAGIC + struct.pack("<II", w, h) + d.values.astype("<f4").tobytes()


def _depth_from_bytes(raw: bytes, path: str) -> DepthMap:
    if len(raw) < 12 or raw[:4] != DEPTH_MAGIC:
        raise FormatError(f"{path}: bad depth magic")
    w, h = struct.unpack("<II", raw[4:12])
    if len(raw) != 12 + 4 * w * h:
        raise FormatError(f"{path}: depth payload is {len(raw)} bytes, expected {12 + 4 * w * h}")
    vals = np.frombuffer(raw[12:], dtype="<f4").reshape(h, w).astype(np.float64)
    return DepthMap.full(vals)


def export_dataset(matrix: ViewTimeMatrix, out_dir) -> dict:
    """Write the dataset layout; returns the manifest dict."""
    matrix.validate_complete()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for v in range(matrix.num_views):
        for t in range(matrix.num_timestamps):
            write_cell(matrix.cell(v, t), out, v, t)

    cameras = {
        "intrinsics": matrix.network.intrinsics.to_dict(),
        "poses": [p.matrix4.tolist() for p in matrix.network.poses],
        "base_index": matrix.network.base_index,
    }
    (out / "cameras.json").write_text(json.dumps(cameras, indent=1))

    manifest = {
        "version": DATASET_VERSION,
        "views": matrix.num_views,
        "timestamps": matrix.num_timestamps,
        "resolution": [matrix.network.intrinsics.width, matrix.network.intrinsics.height],
        "seed": matrix.seed,
        "times": [float(t) for t in matrix.times],
        "schedule": matrix.schedule.to_jsonable() if matrix.schedule else None,
        "config": matrix.config,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


def write_cell(frame: Frame, out: Path, v: int, t: int) -> None:
    cdir = out / "frames" / f"cam{v:03d}"
    ddir = out / "depth" / f"cam{v:03d}"
    pdir = out / "provenance" / f"cam{v:03d}"
    for d in (cdir, ddir, pdir):
        d.mkdir(parents=True, exist_ok=True)
    Image.fromarray(frame.color, mode="RGB").save(cdir / f"t{t:03d}.png")
    (ddir / f"t{t:03d}.f32").write_bytes(_depth_bytes(frame.depth))
    Image.fromarray(frame.provenance, mode="L").save(pdir / f"t{t:03d}.png")


def read_cell(root: Path, v: int, t: int, w: int, h: int) -> Frame:
    cpath = Path(root) / "frames" / f"cam{v:03d}" / f"t{t:03d}.png"
    dpath = Path(root) / "depth" / f"cam{v:03d}" / f"t{t:03d}.f32"
    ppath = Path(root) / "provenance" / f"cam{v:03d}" / f"t{t:03d}.png"
    for p in (cpath, dpath, ppath):
        if not p.exists():
            raise MissingCell(f"missing dataset file {p}")
    color = np.asarray(Image.open(cpath).convert("RGB"), dtype=np.uint8)
    if color.shape != (h, w, 3):
        raise FormatError(f"{cpath}: frame is {color.shape}, expected {(h, w, 3)}")
    depth = _depth_from_bytes(dpath.read_bytes(), str(dpath))
    if depth.shape != (h, w):
        raise FormatError(f"{dpath}: depth raster does not match the manifest resolution")
    prov = np.asarray(Image.open(ppath), dtype=np.uint8)
    if prov.shape != (h, w):
        raise FormatError(f"{ppath}: provenance raster has wrong shape")
    if prov.max() > 4:
        raise FormatError(f"{ppath}: provenance codes exceed the label set")
    return Frame(
        color=color,
        depth=depth,
        hole_mask=np.zeros((h, w), dtype=bool),
        provenance=prov,
    )


def import_dataset(in_dir) -> ViewTimeMatrix:
    """Inverse of export_dataset; validates every invariant on load."""
    root = Path(in_dir)
    try:
        manifest = json.loads((root / "manifest.json").read_text())
        cameras = json.loads((root / "cameras.json").read_text())
    except FileNotFoundError as exc:
        raise MissingCell(f"dataset metadata missing: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"dataset metadata unreadable: {exc}") from exc
    if manifest.get("version") != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {manifest.get('version')!r}")

    intrinsics = Intrinsics.from_dict(cameras["intrinsics"])
    poses = tuple(Pose.from_matrix4(np.asarray(m)) for m in cameras["poses"])
    network = CameraNetwork(intrinsics, poses, int(cameras["base_index"]))
    v_count = int(manifest["views"])
    t_count = int(manifest["timestamps"])
    if len(poses) != v_count:
        raise FormatError("cameras.json pose count disagrees with the manifest")
    w, h = manifest["resolution"]
    if (intrinsics.width, intrinsics.height) != (w, h):
        raise FormatError("intrinsics resolution disagrees with the manifest")

    frames = [[None] * t_count for _ in range(v_count)]
    meta = [[CellMeta() for _ in range(t_count)] for _ in range(v_count)]
    for v in range(v_count):
        for t in range(t_count):
            frames[v][t] = read_cell(root, v, t, w, h)

    sched = None
    if manifest.get("schedule"):
        sched = WarpSchedule.from_jsonable(manifest["schedule"], network.base_index, v_count)
    matrix = ViewTimeMatrix(
        network=network,
        frames=frames,
        meta=meta,
        times=np.asarray(manifest.get("times", time_grid(t_count))),
        seed=int(manifest.get("seed", 0)),
        schedule=sched,
        config=manifest.get("config"),
    )
    matrix.validate_complete()
    return matrix


def matrices_equal(a: ViewTimeMatrix, b: ViewTimeMatrix) -> bool:
    if a.num_views != b.num_views or a.num_timestamps != b.num_timestamps:
        return False
    if not np.allclose(a.times, b.times, atol=0):
        return False
    for v in range(a.num_views):
        for t in range(a.num_timestamps):
            if not frames_equal(a.cell(v, t), b.cell(v, t)):
                return False
    return True


# --------------------------------------------------------------------------
# verification against the oracle scene


def _psnr(a: np.ndarray, b: np.ndarray, sel: np.ndarray):
    if not sel.any():
        return None, 0
    diff = a[sel].astype(np.float64) - b[sel].astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf"), int(sel.sum())
    return float(10.0 * np.log10(255.0**2 / mse)), int(sel.sum())


def verify(matrix: ViewTimeMatrix, scene: SceneSpec | None = None) -> dict:
    """Per-cell quality report against the oracle scene.

    PSNR is computed on pixels whose provenance is original, warped, or
    copied (painted pixels are synthesized content with no ground
    truth). Hole-mask IoU against the analytic occlusion mask is only
    available when the matrix still carries its in-memory build
    metadata; datasets loaded from disk report it as null.
    """
    if scene is None:
        cfg = matrix.config or {}
        if cfg.get("prompt") or cfg.get("input_dir"):
            raise InvalidInput("verification needs an oracle-mode matrix or an explicit scene")
        scene = standard_scene(matrix.seed)
    k = matrix.network.intrinsics
    cells = []
    for v in range(matrix.num_views):
        pose = matrix.network.poses[v]
        for t in range(matrix.num_timestamps):
            frame = matrix.cell(v, t)
            gt, _ = render_oracle(scene, pose, k, float(matrix.times[t]))
            sel = np.isin(frame.provenance, (PROV_ORIGINAL, PROV_WARPED, PROV_COPIED_PREV_T))
            psnr, n = _psnr(frame.color, gt.color, sel)
            meta = matrix.meta[v][t] or CellMeta()
            iou = None
            if meta.pre_inpaint_holes is not None and meta.sources:
                occ = None
                for s in meta.sources:
                    m = occlusion_mask(scene, matrix.network.poses[s], pose, k, float(matrix.times[t]))
                    occ = m if occ is None else (occ & m)
                union = (occ | meta.pre_inpaint_holes).sum()
                iou = float((occ & meta.pre_inpaint_holes).sum() / union) if union else 1.0
            cells.append(
                {
                    "view": v,
                    "t": t,
                    "psnr_db": None if psnr == float("inf") else psnr,
                    "exact": psnr == float("inf"),
                    "trusted_pixels": n,
                    "trusted_fraction": float(n) / frame.hole_mask.size,
                    "hole_iou": iou,
                    "provenance": meta.provenance_histogram(frame),
                    "alignment": None
                    if meta.alignment is None
                    else {
                        "gamma": meta.alignment.gamma,
                        "beta": meta.alignment.beta,
                        "rms_residual": meta.alignment.rms_residual,
                        "n_pixels": meta.alignment.n_pixels,
                    },
                }
            )

    finite = [c["psnr_db"] for c in cells if c["psnr_db"] is not None]
    report = {
        "views": matrix.num_views,
        "timestamps": matrix.num_timestamps,
        "seed": matrix.seed,
        "schedule": matrix.schedule.to_jsonable() if matrix.schedule else None,
        "cells": cells,
        "summary": {
            "min_psnr_db": float(min(finite)) if finite else None,
            "mean_psnr_db": float(np.mean(finite)) if finite else None,
            "exact_cells": sum(1 for c in cells if c["exact"]),
            "mean_trusted_fraction": float(np.mean([c["trusted_fraction"] for c in cells])),
        },
    }
    return report
