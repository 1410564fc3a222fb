from healthpass.registry.client import (
    FailingTransport,
    HttpTransport,
    InProcessTransport,
    RegistryClient,
)
from healthpass.registry.config import RegistryConfig, load_config
from healthpass.registry.service import (
    NOT_FOUND_BODY,
    RegistryService,
    ServerThread,
    SiteCredential,
    load_sites,
    make_server,
)
from healthpass.registry.store import RecordStore

__all__ = [
    "FailingTransport", "HttpTransport", "InProcessTransport", "NOT_FOUND_BODY",
    "RecordStore", "RegistryClient", "RegistryConfig", "RegistryService", "ServerThread",
    "SiteCredential", "load_config", "load_sites", "make_server",
]
