"""Service configuration, sourced from environment variables so a container
can run the server with no config files."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from ..errors import InputError

ENV_PREFIX = "LABELKIT_"

_TRUTHY = {"1", "true", "yes", "on"}


def _flag(value: str) -> bool:
    return value.strip().lower() in _TRUTHY


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    data_dir: Path = field(default_factory=lambda: Path("labelkit-data"))
    provider_kind: str = "mock"
    sidecar_endpoint: str = ""
    session_ttl_seconds: int = 24 * 3600
    default_username: str = "admin"
    default_password: str = "admin"
    allow_registration: bool = False
    mock_seed: int = 0
    mock_truth_path: str = ""
    static_dir: Optional[Path] = None

    def __post_init__(self):
        if self.provider_kind not in ("mock", "sidecar"):
            raise InputError(f"unknown provider kind {self.provider_kind!r}")
        if self.provider_kind == "sidecar" and not self.sidecar_endpoint:
            raise InputError("sidecar provider needs an endpoint")
        if self.session_ttl_seconds <= 0:
            raise InputError("session TTL must be positive")
        if not (0 < self.port < 65536):
            raise InputError(f"port out of range: {self.port}")

    @classmethod
    def from_env(cls, env: Optional[Mapping[str, str]] = None) -> "ServiceConfig":
        source = os.environ if env is None else env

        def get(name: str, default: str) -> str:
            return source.get(ENV_PREFIX + name, default)

        static = get("STATIC_DIR", "")
        try:
            return cls(
                host=get("HOST", "127.0.0.1"),
                port=int(get("PORT", "8000")),
                data_dir=Path(get("DATA_DIR", "labelkit-data")),
                provider_kind=get("PROVIDER", "mock"),
                sidecar_endpoint=get("SIDECAR_ENDPOINT", ""),
                session_ttl_seconds=int(get("SESSION_TTL", str(24 * 3600))),
                default_username=get("USERNAME", "admin"),
                default_password=get("PASSWORD", "admin"),
                allow_registration=_flag(get("ALLOW_REGISTRATION", "")),
                mock_seed=int(get("SEED", "0")),
                mock_truth_path=get("MOCK_TRUTH", ""),
                static_dir=Path(static) if static else None,
            )
        except ValueError as exc:
            raise InputError(f"bad numeric environment value: {exc}") from exc
