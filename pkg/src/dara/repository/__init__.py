"""Versioned storage and HTTP service for DARPAL documents."""

from .store import (
    DocumentStore,
    HashMismatch,
    IntegrityError,
    NameMismatch,
    ProviderNotFound,
    ValidationFailed,
    VersionConflict,
)
from .service import create_app
from .client import RepositoryClient, RepositoryError, RepositoryUnreachable

__all__ = [
    "DocumentStore",
    "HashMismatch",
    "IntegrityError",
    "NameMismatch",
    "ProviderNotFound",
    "RepositoryClient",
    "RepositoryError",
    "RepositoryUnreachable",
    "ValidationFailed",
    "VersionConflict",
    "create_app",
]
