"""FastAPI service wrapping the simulator, trainer and reconstruction core."""

from cdmscan.service.app import create_app

__all__ = ["create_app"]
