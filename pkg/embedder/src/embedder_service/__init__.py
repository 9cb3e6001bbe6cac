"""Embedding-provider sidecar for the counterspeech matching pipeline."""

__version__ = "0.1.0"
