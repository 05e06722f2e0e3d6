"""Typed errors raised across the pipeline.

Every failure mode that callers are expected to branch on gets its own
class; everything else propagates as the nearest builtin.
"""


class SceneWarpError(Exception):
    """Base class for all package errors."""


class InvalidConfig(SceneWarpError):
    """A configuration value is out of its documented range."""


class InvalidInput(SceneWarpError):
    """Runtime inputs disagree (shape mismatch, empty candidate list, ...)."""


class InvalidDepth(SceneWarpError):
    """A depth value that must be positive is not."""


class BehindCamera(SceneWarpError):
    """Projection of a point with non-positive camera-space depth."""


class SingularSystem(SceneWarpError):
    """Least-squares alignment has no unique solution."""


class NothingToInpaintFrom(SceneWarpError):
    """An inpainting mask leaves no known pixels to propagate from."""


class AdapterUnavailable(SceneWarpError):
    """A model backend could not be reached after retries."""


class ProtocolViolation(SceneWarpError):
    """A model backend answered outside the wire contract."""


class FormatError(SceneWarpError):
    """A dataset file is malformed (bad magic, bad dimensions, bad labels)."""


class MissingCell(SceneWarpError):
    """A dataset directory lacks a frame the manifest promises."""


class IncompleteMatrix(SceneWarpError):
    """A view-time matrix still contains hole pixels."""
