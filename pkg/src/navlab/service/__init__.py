"""Service layer: persistence, job workers, and the REST API."""

from .api import create_app
from .jobs import JobManager
from .store import DocumentStore, FileStore

__all__ = ["create_app", "JobManager", "DocumentStore", "FileStore"]
