"""Clients for the neural-model wire protocol, plus in-process stubs.

Five capabilities (generate, depth, inpaint, segment, score) share one
HTTP protocol so a real sidecar and the deterministic stubs are
interchangeable per capability. With every capability in stub mode the
whole pipeline runs with zero network I/O and is bit-reproducible from
the seed.

Wire format (POST {base}/v1/<capability>): JSON bodies, version field
"v1" mandatory both ways. Color images travel as base64 PNG; depth
rasters as base64 little-endian float32 with explicit width/height;
masks as single-channel PNG where byte 255 selects a pixel (the hole
for inpainting, the foreground for segmentation). Errors come back as
JSON {code, message} and map onto the typed errors of this package.
"""

from __future__ import annotations

import base64
import io
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .camera import Pose, make_intrinsics
from .depth import DepthMap
from .errors import AdapterUnavailable, InvalidConfig, InvalidInput, ProtocolViolation
from .oracle import SceneSpec, base_video, render_depth, standard_scene, time_grid

PROTOCOL_VERSION = "v1"
CAPABILITIES = ("generate", "depth", "inpaint", "segment", "score")

# appended to user prompts so generated footage keeps a fixed camera
STATIONARY_CAMERA_SUFFIX = (
    "The camera remains stationary, with a fixed frame, stable composition, and no shifts."
)

_ERROR_CODES = {
    "invalid_request": InvalidInput,
    "unavailable": AdapterUnavailable,
    "model_unavailable": AdapterUnavailable,
    "protocol_violation": ProtocolViolation,
}


# --------------------------------------------------------------------------
# payload codec, shared by client and any server implementation


def encode_image_b64(arr: np.ndarray) -> str:
    arr = np.asarray(arr, dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_image_b64(data: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(base64.b64decode(data)))
        return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ProtocolViolation(f"undecodable image payload: {exc}") from exc


def encode_mask_b64(mask: np.ndarray) -> str:
    mask = np.asarray(mask, dtype=bool)
    buf = io.BytesIO()
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_mask_b64(data: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(base64.b64decode(data)))
        return np.asarray(img.convert("L")) >= 128
    except Exception as exc:
        raise ProtocolViolation(f"undecodable mask payload: {exc}") from exc


def encode_depth_payload(values: np.ndarray) -> dict:
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    raw = values.astype("<f4").tobytes()
    return {"width": w, "height": h, "data": base64.b64encode(raw).decode("ascii")}


def decode_depth_payload(payload: dict) -> np.ndarray:
    try:
        w, h = int(payload["width"]), int(payload["height"])
        raw = base64.b64decode(payload["data"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolViolation(f"malformed depth payload: {exc}") from exc
    if len(raw) != 4 * w * h:
        raise ProtocolViolation(f"depth payload holds {len(raw)} bytes, expected {4 * w * h}")
    return np.frombuffer(raw, dtype="<f4").reshape(h, w).astype(np.float64)


# --------------------------------------------------------------------------
# requests and configuration


@dataclass(frozen=True)
class GenerateRequest:
    prompt: str
    augmentation: str = STATIONARY_CAMERA_SUFFIX
    seed: int = 0
    num_frames: int = 49
    width: int = 720
    height: int = 480
    steps: int = 50
    guidance: float = 6.0

    def __post_init__(self):
        if self.num_frames < 1:
            raise InvalidConfig("num_frames must be >= 1")
        if self.width < 1 or self.height < 1:
            raise InvalidConfig("frame size must be at least 1x1")


@dataclass(frozen=True)
class AdapterConfig:
    """Backend selection per capability: "stub" or an http(s) base URL."""

    backends: dict = field(default_factory=lambda: {c: "stub" for c in CAPABILITIES})
    timeout: float = 10.0
    retries: int = 2
    backoff_base: float = 0.5
    in_flight_limit: int = 4

    def __post_init__(self):
        if self.retries < 0:
            raise InvalidConfig("retries must be >= 0")
        if self.in_flight_limit < 1:
            raise InvalidConfig("in_flight_limit must be >= 1")
        for cap in CAPABILITIES:
            b = self.backends.get(cap, "stub")
            if b != "stub" and not str(b).startswith(("http://", "https://")):
                raise InvalidConfig(f"backend for {cap!r} must be 'stub' or an http(s) URL")

    @classmethod
    def all_stub(cls, **kw) -> "AdapterConfig":
        return cls(backends={c: "stub" for c in CAPABILITIES}, **kw)

    @classmethod
    def all_remote(cls, base_url: str, **kw) -> "AdapterConfig":
        return cls(backends={c: base_url for c in CAPABILITIES}, **kw)


class _HttpTransport:
    """POST with bounded concurrency, retries, and typed error mapping."""

    def __init__(self, config: AdapterConfig):
        import requests

        self._session = requests.Session()
        self._requests = requests
        self._timeout = config.timeout
        self._retries = config.retries
        self._backoff = config.backoff_base
        self._gate = threading.BoundedSemaphore(config.in_flight_limit)

    def post(self, base_url: str, capability: str, payload: dict) -> dict:
        url = f"{base_url.rstrip('/')}/v1/{capability}"
        payload = dict(payload, version=PROTOCOL_VERSION)
        last = None
        for attempt in range(self._retries + 1):
            if attempt:
                time.sleep(self._backoff * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    resp = self._session.post(url, json=payload, timeout=self._timeout)
            except self._requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code >= 500:
                last = AdapterUnavailable(f"{url} answered {resp.status_code}")
                continue
            try:
                body = resp.json()
            except ValueError as exc:
                raise ProtocolViolation(f"{url} returned non-JSON body") from exc
            if resp.status_code != 200:
                code = body.get("code", "protocol_violation")
                raise _ERROR_CODES.get(code, ProtocolViolation)(
                    f"{url}: {body.get('message', 'unspecified error')}"
                )
            if body.get("version") != PROTOCOL_VERSION:
                raise ProtocolViolation(
                    f"{url} answered protocol version {body.get('version')!r}"
                )
            return body
        raise AdapterUnavailable(f"{url} unreachable after {self._retries + 1} attempts: {last}")


# --------------------------------------------------------------------------
# deterministic in-process stubs


class OracleBackend:
    """Scene context the generate/depth stubs draw their pixels from."""

    def __init__(self, scene: SceneSpec | None = None, base_pose: Pose | None = None, fov_h_deg: float = 60.0):
        self.scene = scene
        self.base_pose = base_pose or Pose.identity()
        self.fov_h_deg = fov_h_deg

    def resolve_scene(self, seed: int) -> SceneSpec:
        return self.scene if self.scene is not None else standard_scene(seed)


class StubGenerate:
    """Source video from the oracle scene keyed by the request seed."""

    def __init__(self, backend: OracleBackend | None = None):
        self.backend = backend or OracleBackend()

    def generate(self, req: GenerateRequest) -> list:
        scene = self.backend.resolve_scene(req.seed)
        k = make_intrinsics(self.backend.fov_h_deg, req.width, req.height)
        frames = base_video(scene, self.backend.base_pose, k, time_grid(req.num_frames))
        return [f.color for f in frames]


class StubDepth:
    """Ground-truth depth per frame; needs (pose, t) metadata per frame."""

    def __init__(self, backend: OracleBackend | None = None, seed: int = 0):
        self.backend = backend or OracleBackend()
        self.seed = seed

    def estimate(self, frames: list, metas: list | None = None) -> list:
        if metas is None or len(metas) != len(frames):
            raise InvalidInput("depth stub needs one (pose, t) meta per frame")
        scene = self.backend.resolve_scene(self.seed)
        out = []
        for frame, (pose, t) in zip(frames, metas):
            h, w = np.asarray(frame).shape[:2]
            k = make_intrinsics(self.backend.fov_h_deg, w, h)
            out.append(DepthMap.full(render_depth(scene, pose, k, float(t))).quantized())
        return out


class StubInpaint:
    """Fills the hole with the mean color of a 2 px dilated boundary ring."""

    def inpaint(self, image: np.ndarray, mask: np.ndarray, prompt: str = "", seed: int = 0) -> np.ndarray:
        image = np.asarray(image, dtype=np.uint8)
        mask = np.asarray(mask, dtype=bool)
        out = image.copy()
        if not mask.any():
            return out
        ring = ndimage.binary_dilation(mask, iterations=2) & ~mask
        if ring.any():
            fill = np.rint(image[ring].mean(axis=0))
        elif (~mask).any():
            fill = np.rint(image[~mask].mean(axis=0))
        else:
            fill = np.full(3, 127.0)
        out[mask] = fill.astype(np.uint8)
        return out


class StubSegment:
    """Near-surface pixels count as foreground: depth below min + alpha * range."""

    def __init__(self, alpha: float = 0.35):
        self.alpha = alpha

    def segment(self, image: np.ndarray, prompt: str = "", depth_hint: DepthMap | None = None) -> np.ndarray:
        h, w = np.asarray(image).shape[:2]
        if depth_hint is None or not depth_hint.mask.any():
            return np.zeros((h, w), dtype=bool)
        valid = depth_hint.values[depth_hint.mask]
        lo, hi = float(valid.min()), float(valid.max())
        if hi <= lo:
            return np.zeros((h, w), dtype=bool)
        thr = lo + self.alpha * (hi - lo)
        return depth_hint.mask & (depth_hint.values < thr)


class StubScore:
    """All candidates score 0.0; the argmax tie rule then picks index 0."""

    def score(self, prompt: str, candidates: list) -> list:
        return [0.0] * len(candidates)


# --------------------------------------------------------------------------
# facade


class ModelAdapters:
    """Per-capability dispatch between stubs and the HTTP protocol."""

    def __init__(self, config: AdapterConfig | None = None, backend: OracleBackend | None = None):
        self.config = config or AdapterConfig.all_stub()
        self.backend = backend or OracleBackend()
        self._transport = None
        if any(self.config.backends.get(c, "stub") != "stub" for c in CAPABILITIES):
            self._transport = _HttpTransport(self.config)
        self._stub_generate = StubGenerate(self.backend)
        self._stub_depth = StubDepth(self.backend)
        self._stub_inpaint = StubInpaint()
        self._stub_segment = StubSegment()
        self._stub_score = StubScore()

    def _url(self, capability: str):
        b = self.config.backends.get(capability, "stub")
        return None if b == "stub" else str(b)

    def generate_video(self, req: GenerateRequest) -> list:
        url = self._url("generate")
        if url is None:
            return self._stub_generate.generate(req)
        body = self._transport.post(
            url,
            "generate",
            {
                "prompt": req.prompt,
                "augmentation": req.augmentation,
                "seed": req.seed,
                "num_frames": req.num_frames,
                "width": req.width,
                "height": req.height,
                "steps": req.steps,
                "guidance": req.guidance,
            },
        )
        frames = [decode_image_b64(f) for f in body.get("frames", [])]
        if len(frames) != req.num_frames:
            raise ProtocolViolation(f"asked for {req.num_frames} frames, received {len(frames)}")
        for f in frames:
            if f.shape != (req.height, req.width, 3):
                raise ProtocolViolation("generated frame size does not match the request")
        return frames

    def estimate_depth(self, frames: list, metas: list | None = None) -> list:
        url = self._url("depth")
        if url is None:
            return self._stub_depth.estimate(frames, metas)
        h, w = np.asarray(frames[0]).shape[:2]
        body = self._transport.post(
            url,
            "depth",
            {"frames": [encode_image_b64(f) for f in frames], "width": w, "height": h},
        )
        payloads = body.get("depths", [])
        if len(payloads) != len(frames):
            raise ProtocolViolation(f"sent {len(frames)} frames, received {len(payloads)} depths")
        out = []
        for p in payloads:
            vals = decode_depth_payload(p)
            if vals.shape != (h, w):
                raise ProtocolViolation("depth raster size does not match the frames")
            out.append(DepthMap.full(vals).quantized())
        return out

    def inpaint(self, image: np.ndarray, mask: np.ndarray, prompt: str = "", seed: int = 0) -> np.ndarray:
        url = self._url("inpaint")
        if url is None:
            return self._stub_inpaint.inpaint(image, mask, prompt=prompt, seed=seed)
        body = self._transport.post(
            url,
            "inpaint",
            {
                "image": encode_image_b64(image),
                "mask": encode_mask_b64(mask),
                "prompt": prompt,
                "seed": seed,
            },
        )
        out = decode_image_b64(body.get("image", ""))
        if out.shape != np.asarray(image).shape:
            raise ProtocolViolation("inpainted image size changed")
        return out

    def segment(self, image: np.ndarray, prompt: str = "foreground", depth_hint: DepthMap | None = None) -> np.ndarray:
        url = self._url("segment")
        if url is None:
            return self._stub_segment.segment(image, prompt=prompt, depth_hint=depth_hint)
        body = self._transport.post(
            url, "segment", {"image": encode_image_b64(image), "prompt": prompt}
        )
        mask = decode_mask_b64(body.get("mask", ""))
        if mask.shape != np.asarray(image).shape[:2]:
            raise ProtocolViolation("segmentation mask size does not match the image")
        return mask

    def score(self, prompt: str, candidates: list) -> list:
        url = self._url("score")
        if url is None:
            return self._stub_score.score(prompt, candidates)
        body = self._transport.post(
            url,
            "score",
            {"prompt": prompt, "candidates": [encode_image_b64(c) for c in candidates]},
        )
        scores = body.get("scores", [])
        if len(scores) != len(candidates):
            raise ProtocolViolation("scorer returned a different number of scores")
        return [float(s) for s in scores]
