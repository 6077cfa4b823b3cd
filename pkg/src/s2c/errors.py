"""Exception types shared across the toolkit.

Every error carries a stable machine-readable ``code`` plus an optional
``context`` dict so the CLI can emit a structured error envelope.
"""

from __future__ import annotations


class S2CError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message: str, context: dict | None = None):
        super().__init__(message)
        self.context = dict(context or {})


class DegenerateCloud(S2CError):
    """Point cloud is collinear, coplanar or collapsed within tolerance."""

    code = "degenerate_cloud"


class EmptySurface(S2CError):
    """Surface sphere sampling was requested but no surface points exist."""

    code = "empty_surface"


class InsufficientInputCameras(S2CError):
    """Trajectory planning needs at least two input cameras."""

    code = "insufficient_input_cameras"


class DimensionMismatch(S2CError):
    """Two images that must share dimensions do not."""

    code = "dimension_mismatch"


class MissingGroundTruth(S2CError):
    """A ground-truth based repair oracle was requested without GT views."""

    code = "missing_ground_truth"


class SceneBundleError(S2CError):
    """A scene bundle is missing files or is internally inconsistent."""

    code = "scene_bundle_error"


class PlyParseError(S2CError):
    """A PLY file could not be parsed."""

    code = "ply_parse_error"

    def __init__(self, message: str, path: str = "", line: int | None = None):
        ctx: dict = {"path": str(path)}
        if line is not None:
            ctx["line"] = line
        super().__init__(message, ctx)
