"""HTTP service backing the annotation UI."""

from .app import create_app

__all__ = ["create_app"]
