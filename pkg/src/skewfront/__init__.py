"""FKPP front speeds on symmetric random metric trees."""

__version__ = "0.1.0"
