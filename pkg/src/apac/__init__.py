"""Automatic task-based parallelization of a C++ subset by source rewriting."""

__version__ = "0.1.0"
