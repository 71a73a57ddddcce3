"""CLI module for qeilab."""

from qeilab.cli.main import app

__all__ = ["app"]
