"""HTTP service: app factory, configuration, sessions, and background jobs."""

from .app import create_app, default_provider_factory, zip_bundle
from .auth import Session, SessionManager
from .config import ServiceConfig
from .jobs import Job, JobManager

__all__ = [
    "Job",
    "JobManager",
    "ServiceConfig",
    "Session",
    "SessionManager",
    "create_app",
    "default_provider_factory",
    "zip_bundle",
]
