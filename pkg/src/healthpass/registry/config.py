"""Registry configuration: a JSON file, overridden by environment variables."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Tuple

from healthpass.crypto.group import DEFAULT_GROUP
from healthpass.errors import ConfigurationError

ENV_OVERRIDES = {
    "HEALTHPASS_LISTEN": "listen",
    "HEALTHPASS_STORE": "store",
    "HEALTHPASS_SITES": "sites",
    "HEALTHPASS_GROUP": "group",
    "HEALTHPASS_KEYSTORE": "keystore",
}


@dataclass(frozen=True)
class RegistryConfig:
    listen: str = "127.0.0.1:8080"
    store: str = "registry.log"
    sites: str = "sites.json"
    group: str = DEFAULT_GROUP
    keystore: str = "issuer.key"

    @property
    def address(self) -> Tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        try:
            return host or "127.0.0.1", int(port)
        except ValueError:
            raise ConfigurationError(f"bad listen address {self.listen!r}") from None


def load_config(path: Optional["str | os.PathLike"] = None,
                env: Mapping[str, str] = os.environ) -> RegistryConfig:
    config = RegistryConfig()
    if path is not None:
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        unknown = set(obj) - set(ENV_OVERRIDES.values())
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        config = replace(config, **obj)
    overrides = {attr: env[var] for var, attr in ENV_OVERRIDES.items() if env.get(var)}
    return replace(config, **overrides)
