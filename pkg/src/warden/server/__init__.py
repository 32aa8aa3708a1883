"""Central server: journaled store plus the HTTP/JSON API."""

from .app import create_app, serve
from .journal import Journal
from .store import SyncStore

__all__ = ["Journal", "SyncStore", "create_app", "serve"]
