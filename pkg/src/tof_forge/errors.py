"""Exception taxonomy shared across the package.

The CLI maps ConfigError to exit code 2 and GenerationError (and any other
TofForgeError raised mid-run) to exit code 3.
"""


class TofForgeError(Exception):
    """Base class for all package errors."""


class ConfigError(TofForgeError):
    """Invalid specification, configuration file, or argument value."""


class DepthGridError(ConfigError):
    """Malformed depth-grid text; message carries row/column location."""


class OutOfWindowError(TofForgeError):
    """A surface's round-trip delay falls outside the histogram window."""

    def __init__(self, message, offending_distances=()):
        super().__init__(message)
        self.offending_distances = tuple(offending_distances)


class GenerationError(TofForgeError):
    """Dataset generation aborted; carries the per-cell error report."""

    def __init__(self, message, cell_errors=()):
        super().__init__(message)
        self.cell_errors = tuple(cell_errors)


class DatasetFormatError(TofForgeError):
    """Base for on-disk dataset format violations."""


class SchemaVersionError(DatasetFormatError):
    """Manifest schema_version is not supported by this reader."""


class TruncatedPayloadError(DatasetFormatError):
    """samples.bin is shorter than the manifest says it should be."""


class PayloadChecksumError(DatasetFormatError):
    """samples.bin content does not match the manifest checksum."""
