"""Registry client and the transports it can run over."""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from typing import Mapping, Optional, Protocol, Tuple

from healthpass.crypto.group import GroupElement, GroupParams
from healthpass.errors import (
    ConflictError,
    HealthPassError,
    NotFoundError,
    TransportError,
    UnauthorizedError,
)
from healthpass.model import EncryptedResult, UploadRecord
from healthpass.wire import b64u_decode, b64u_encode, decode


class Transport(Protocol):
    def request(self, method: str, path: str, headers: Optional[Mapping[str, str]] = None,
                body: Optional[bytes] = None) -> Tuple[int, dict]:
        ...


class HttpTransport:
    def __init__(self, base_url: str, timeout: float = 10.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def request(self, method, path, headers=None, body=None):
        req = urllib.request.Request(self.base_url + path, data=body, method=method,
                                     headers=dict(headers or {}))
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.status, json.loads(resp.read() or b"{}")
        except urllib.error.HTTPError as exc:
            try:
                payload = json.loads(exc.read() or b"{}")
            except ValueError:
                payload = {}
            return exc.code, payload
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"registry unreachable: {exc}") from None


class InProcessTransport:
    """Calls a ``RegistryService`` directly, still round-tripping through JSON."""

    def __init__(self, service) -> None:
        self.service = service

    def request(self, method, path, headers=None, body=None):
        status, payload = self.service.handle(method, path, dict(headers or {}), body or b"")
        return status, json.loads(json.dumps(payload))


class FailingTransport:
    """Stands in for a disconnected network: every request fails and is recorded."""

    def __init__(self) -> None:
        self.attempts = 0

    def request(self, method, path, headers=None, body=None):
        self.attempts += 1
        raise TransportError("network access is disabled")


class RegistryClient:
    def __init__(self, transport: Transport, group: GroupParams) -> None:
        self.transport = transport
        self.group = group

    def upload(self, site_secret: bytes, record: UploadRecord) -> None:
        body = json.dumps({
            "sess_id": b64u_encode(record.sess_id),
            "ot_id": b64u_encode(record.ot_id),
            "holder_pk": b64u_encode(record.holder_pk.to_bytes()),
            "result": record.result.to_json(),
        }).encode()
        status, payload = self.transport.request(
            "POST", "/v1/records",
            {"Authorization": f"Bearer {b64u_encode(site_secret)}",
             "Content-Type": "application/json"},
            body)
        if status == 201:
            return
        if status == 401:
            raise UnauthorizedError("registry rejected the site credential")
        if status == 409:
            raise ConflictError("registry already holds a record for this session id")
        raise HealthPassError(f"upload failed ({status}): {payload.get('detail', payload)}")

    def download(self, sess_id: bytes) -> EncryptedResult:
        status, payload = self.transport.request("GET", f"/v1/records/{b64u_encode(sess_id)}")
        if status == 404:
            raise NotFoundError("no record for this session id")
        if status != 200 or "c" not in payload:
            raise HealthPassError(f"download failed ({status})")
        return decode(b64u_decode(payload["c"]), EncryptedResult, self.group)

    def issuer_pk(self) -> GroupElement:
        status, payload = self.transport.request("GET", "/v1/issuer_pk")
        if status != 200 or payload.get("group") != self.group.name:
            raise HealthPassError("registry returned no usable issuer key")
        return GroupElement.from_bytes(b64u_decode(payload["pk"]), self.group)
