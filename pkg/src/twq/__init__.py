"""Temporal object-warehouse engine: historization, archival and a temporal query algebra."""

__version__ = "0.1.0"
