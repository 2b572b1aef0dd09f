"""Curriculum RL workbench for wheeled mobility on heightmap terrain."""

__version__ = "0.1.0"
