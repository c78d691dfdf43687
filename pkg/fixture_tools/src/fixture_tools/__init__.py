"""Offline generator for test fixtures: tiny ONNX models with constructed
behavior, their manifests and labels, and golden log-mel vectors produced by
an independent reference implementation."""

__version__ = "0.1.0"
