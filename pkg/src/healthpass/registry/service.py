"""The issuer's registry: issues results on upload and hosts ``sess_id -> C``.

``RegistryService.handle`` is the whole HTTP surface as a pure function of
(method, path, headers, body); :func:`make_server` wraps it in a stdlib
threading HTTP server.

    POST /v1/records            Authorization: Bearer <site secret>
    GET  /v1/records/{sess_id}
    GET  /v1/issuer_pk
"""

from __future__ import annotations

import hmac
import json
import logging
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Dict, Mapping, Optional, Tuple

from healthpass.crypto.elgamal import KeyPair
from healthpass.crypto.group import GroupElement
from healthpass.errors import (
    ConflictError,
    CorruptRecordError,
    DecodeError,
    HealthPassError,
    MembershipError,
    NotFoundError,
    UnauthorizedError,
)
from healthpass.model import (
    OT_ID_SIZE,
    SESS_ID_SIZE,
    EncryptedResult,
    InvalidMessageError,
    RegistrationTicket,
    StoredRecord,
    TestResult,
)
from healthpass.protocol.phases import issue_result
from healthpass.registry.store import RecordStore
from healthpass.wire import b64u_decode, b64u_encode, encode

log = logging.getLogger(__name__)

SECRET_SIZE = 32
NOT_FOUND_BODY = {"error": "not_found"}
MAX_BODY = 64 * 1024

Response = Tuple[int, dict]


@dataclass(frozen=True)
class SiteCredential:
    site_id: str
    secret: bytes

    def __post_init__(self) -> None:
        if len(self.secret) != SECRET_SIZE:
            raise ValueError("site secret must be 32 bytes")


class BadRequest(HealthPassError):
    pass


def _field(body: dict, name: str, size: Optional[int] = None) -> bytes:
    value = body.get(name)
    if not isinstance(value, str):
        raise BadRequest(f"missing field {name}")
    try:
        raw = b64u_decode(value)
    except DecodeError:
        raise BadRequest(f"field {name} is not base64url") from None
    if size is not None and len(raw) != size:
        raise BadRequest(f"field {name} must be {size} bytes")
    return raw


class RegistryService:
    def __init__(self, issuer: KeyPair, store: RecordStore,
                 sites: Mapping[str, bytes], rng,
                 clock: Callable[[], float] = time.time) -> None:
        self.issuer = issuer
        self.group = issuer.group
        self.store = store
        self.sites = [SiteCredential(k, v) for k, v in sites.items()]
        self.rng = rng
        self.clock = clock
        # issue_result draws from the shared rng; keep draws ordered
        self._rng_lock = threading.Lock()

    # -- operations --------------------------------------------------------

    def authenticate(self, secret: Optional[bytes]) -> SiteCredential:
        match = None
        for cred in self.sites:
            if secret is not None and hmac.compare_digest(cred.secret, secret):
                match = cred
        if match is None:
            raise UnauthorizedError("unknown site credential")
        return match

    def upload_record(self, secret: Optional[bytes], sess_id: bytes, ot_id: bytes,
                      holder_pk: GroupElement, result: TestResult) -> StoredRecord:
        """Issue C for an uploaded result and keep only ``(sess_id, C)``."""
        site = self.authenticate(secret)
        if sess_id in self.store:
            raise ConflictError("a record already exists for this session id")
        ticket = RegistrationTicket(ot_id, holder_pk, sess_id)
        with self._rng_lock:
            _, c = issue_result(self.issuer.sk, ticket, result, self.group, self.rng)
        record = StoredRecord(sess_id, c, int(self.clock()))
        self.store.put(record)
        log.info("stored record for site %s", site.site_id)
        return record

    def download_record(self, sess_id: bytes) -> EncryptedResult:
        return self.store.get(sess_id).c

    # -- HTTP surface ------------------------------------------------------

    def handle(self, method: str, path: str, headers: Mapping[str, str],
               body: bytes = b"") -> Response:
        try:
            if method == "POST" and path == "/v1/records":
                return self._post_record(headers, body)
            if method == "GET" and path.startswith("/v1/records/"):
                return self._get_record(path[len("/v1/records/"):])
            if method == "GET" and path == "/v1/issuer_pk":
                return 200, {"pk": b64u_encode(self.issuer.pk.to_bytes()), "group": self.group.name}
            return 404, dict(NOT_FOUND_BODY)
        except UnauthorizedError:
            return 401, {"error": "unauthorized"}
        except ConflictError:
            return 409, {"error": "conflict"}
        except NotFoundError:
            return 404, dict(NOT_FOUND_BODY)
        except CorruptRecordError:
            log.error("corrupt record while serving %s %s", method, path)
            return 500, {"error": "internal"}
        except (BadRequest, DecodeError, MembershipError, InvalidMessageError) as exc:
            return 400, {"error": "bad_request", "detail": str(exc)}

    def _post_record(self, headers: Mapping[str, str], body: bytes) -> Response:
        auth = {k.lower(): v for k, v in headers.items()}.get("authorization", "")
        secret = None
        if auth.startswith("Bearer "):
            try:
                secret = b64u_decode(auth[len("Bearer "):].strip())
            except DecodeError:
                secret = None
        self.authenticate(secret)
        try:
            obj = json.loads(body)
        except (ValueError, UnicodeDecodeError):
            raise BadRequest("body is not JSON") from None
        if not isinstance(obj, dict):
            raise BadRequest("body must be a JSON object")
        sess_id = _field(obj, "sess_id", SESS_ID_SIZE)
        ot_id = _field(obj, "ot_id", OT_ID_SIZE)
        holder_pk = GroupElement.from_bytes(_field(obj, "holder_pk"), self.group)
        try:
            result = TestResult.from_json(obj.get("result"))
        except (TypeError, KeyError):
            raise BadRequest("result object is malformed") from None
        record = self.upload_record(secret, sess_id, ot_id, holder_pk, result)
        return 201, {"sess_id": b64u_encode(record.sess_id)}

    def _get_record(self, token: str) -> Response:
        try:
            sess_id = b64u_decode(token)
        except DecodeError:
            raise NotFoundError() from None
        if len(sess_id) != SESS_ID_SIZE:
            raise NotFoundError()
        c = self.download_record(sess_id)
        return 200, {"c": b64u_encode(encode(c, self.group))}


class _Handler(BaseHTTPRequestHandler):
    service: RegistryService
    protocol_version = "HTTP/1.1"

    def _dispatch(self, method: str) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            status, payload = 413, {"error": "too_large"}
        else:
            body = self.rfile.read(length) if length else b""
            status, payload = self.service.handle(method, self.path, dict(self.headers), body)
        data = json.dumps(payload, sort_keys=True).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s " + fmt, self.address_string(), *args)


def make_server(service: RegistryService, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    """Bind an HTTP server for ``service``; port 0 picks an ephemeral port."""
    handler = type("RegistryHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


class ServerThread:
    """Run a registry server in a background thread (tests, harness)."""

    def __init__(self, service: RegistryService, host: str = "127.0.0.1", port: int = 0) -> None:
        self.server = make_server(service, host, port)
        self._thread = threading.Thread(target=self.server.serve_forever, kwargs={"poll_interval": 0.05},
                                        daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "ServerThread":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()
        self._thread.join()


def load_sites(obj: Mapping[str, str]) -> Dict[str, bytes]:
    """Parse a ``{site_id: base64url secret}`` mapping."""
    sites = {}
    for site_id, secret in obj.items():
        raw = b64u_decode(secret)
        SiteCredential(site_id, raw)
        sites[site_id] = raw
    return sites
