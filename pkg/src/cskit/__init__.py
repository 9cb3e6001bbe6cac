"""Counterspeech generation, post-editing, and evaluation toolkit."""

__version__ = "0.1.0"
