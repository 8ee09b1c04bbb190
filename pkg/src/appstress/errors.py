"""Exception hierarchy shared across the pipeline.

Fatal errors carry a module-prefixed message so CLI output identifies the
failing stage. ``ConfigError`` maps to exit code 2, everything else fatal
maps to exit code 1.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Fatal, non-recoverable pipeline failure."""

    def __init__(self, module: str, message: str) -> None:
        super().__init__(f"{module}: {message}")
        self.module = module


class ConfigError(PipelineError):
    """Invalid configuration (bad paths, unknown timezone, bad values)."""


class SchemaError(PipelineError):
    """Input file does not match the expected column schema."""


class DataError(PipelineError):
    """Input data violates a hard precondition (e.g. single-class training set)."""
