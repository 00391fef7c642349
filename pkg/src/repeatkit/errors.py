"""Exception types shared across the toolkit."""


class RepeatkitError(Exception):
    """Base class for toolkit-specific errors."""


class InvalidDepthError(RepeatkitError):
    """Depth value is missing, non-positive, or non-finite."""


class BehindCameraError(RepeatkitError):
    """3D point has non-positive depth in the target camera frame."""


class DegenerateMappingError(RepeatkitError):
    """Homography is singular or maps a pixel to the plane at infinity."""


class ManifestParseError(RepeatkitError):
    """Dataset manifest or pose file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class DataFormatError(RepeatkitError):
    """Raster file is truncated, has an unknown magic, or violates its format."""


class ConfigError(RepeatkitError):
    """Run configuration is inconsistent with the data it is applied to."""
