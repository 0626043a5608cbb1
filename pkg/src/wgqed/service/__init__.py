"""HTTP service exposing simulation, correlation, and fitting."""

from .app import create_app

__all__ = ["create_app"]
