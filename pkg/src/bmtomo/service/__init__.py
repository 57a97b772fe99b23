"""HTTP front end over the estimators and experiment harness."""

from .app import app

__all__ = ["app"]
