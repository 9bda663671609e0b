"""Compile Stan, with guide and network extensions, to a small generative IR."""

__version__ = "0.1.0"
