"""Exception hierarchy shared across the runtime.

ConfigError subclasses map to CLI exit code 2 (usage/configuration),
everything else to exit code 1 (runtime failure).
"""


class EdgeTaggerError(Exception):
    pass


class ConfigError(EdgeTaggerError):
    """Invalid configuration, manifest, or plan supplied by the operator."""


class ManifestError(ConfigError):
    """Model manifest fails validation."""


class DeviceUnavailableError(EdgeTaggerError):
    """Audio capture device cannot be opened. Fatal at startup."""


class ModelGraphError(EdgeTaggerError):
    """Model file is missing, unparseable, or inconsistent with its manifest."""


class BackendExecutionError(EdgeTaggerError):
    """Inference backend failed on one window. Recoverable: window is skipped."""
