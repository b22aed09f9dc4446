"""dtrecon - decision-tree reconstruction, tolerant testing and proper learning."""

__version__ = "0.1.0"
