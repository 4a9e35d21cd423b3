"""Single-qubit quantum embedding workbench."""

__version__ = "0.1.0"
