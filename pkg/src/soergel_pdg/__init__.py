"""Exact engine for p-dg differentials on the diagrammatic Hecke category in simply-laced type."""

__version__ = "0.1.0"
