"""HTTP service wrapping the computational core."""

from .app import create_app

__all__ = ["create_app"]
