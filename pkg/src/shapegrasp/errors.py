"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class ShapeGraspError(Exception):
    """Base class; ``code`` is the machine-readable name used in CLI/API errors."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class FileFormatError(ShapeGraspError):
    code = "file_format"


class DimensionMismatch(ShapeGraspError):
    code = "dimension_mismatch"


class EmptyMask(ShapeGraspError):
    code = "empty_mask"


class DegeneratePointCloud(ShapeGraspError):
    code = "degenerate_point_cloud"


class DegenerateGeometry(ShapeGraspError):
    code = "degenerate_geometry"


class NonSimplePolygon(DegenerateGeometry):
    code = "non_simple_polygon"


class DegeneratePart(ShapeGraspError):
    code = "degenerate_part"


class NoValidDepth(ShapeGraspError):
    code = "no_valid_depth"


class BackendUnavailable(ShapeGraspError):
    code = "backend_unavailable"


class SchemaViolation(ShapeGraspError):
    code = "schema_violation"


class MissingNodeInResponse(SchemaViolation):
    code = "missing_node_in_response"


class RulebookMissingEntry(ShapeGraspError):
    code = "rulebook_missing_entry"


class SpecOverlapError(ShapeGraspError):
    code = "spec_overlap"


class ConfigError(ShapeGraspError):
    code = "config"
