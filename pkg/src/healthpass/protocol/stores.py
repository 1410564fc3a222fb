"""Local state kept by the testing site and by the holder's wallet."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from healthpass import wire
from healthpass.crypto.group import GroupElement, GroupParams
from healthpass.errors import (
    DecodeError,
    DuplicateRegistrationError,
    HealthPassError,
    MalformedError,
)
from healthpass.model import (
    EncryptedResult,
    RegistrationPayload,
    RegistrationTicket,
    TestResult,
    new_sess_id,
)
from healthpass.wire import b64u_decode, b64u_encode


def _write_private_json(path: Path, obj) -> None:
    tmp = path.with_name(path.name + ".tmp")
    fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
    os.replace(tmp, path)


class SiteStore:
    """Registration tickets held at one testing site, keyed by ot_id.

    Persists to a JSON file when ``path`` is given; otherwise in memory only.
    """

    def __init__(self, group: GroupParams, path: "str | os.PathLike | None" = None) -> None:
        self.group = group
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._by_ot_id: Dict[bytes, RegistrationTicket] = {}
        if self.path is not None and self.path.exists():
            for entry in json.loads(self.path.read_text())["tickets"]:
                ticket = RegistrationTicket(
                    b64u_decode(entry["ot_id"]),
                    GroupElement.from_bytes(b64u_decode(entry["holder_pk"]), group),
                    b64u_decode(entry["sess_id"]),
                )
                self._by_ot_id[ticket.ot_id] = ticket

    def __len__(self) -> int:
        return len(self._by_ot_id)

    def tickets(self) -> List[RegistrationTicket]:
        return list(self._by_ot_id.values())

    def by_sess_id(self, sess_id: bytes) -> Optional[RegistrationTicket]:
        for ticket in self._by_ot_id.values():
            if ticket.sess_id == sess_id:
                return ticket
        return None

    def add(self, ticket: RegistrationTicket) -> None:
        with self._lock:
            if ticket.ot_id in self._by_ot_id:
                raise DuplicateRegistrationError("ot_id already registered at this site")
            if any(t.sess_id == ticket.sess_id for t in self._by_ot_id.values()):
                raise DuplicateRegistrationError("sess_id collision")
            self._by_ot_id[ticket.ot_id] = ticket
            self._save()

    def _save(self) -> None:
        if self.path is None:
            return
        _write_private_json(self.path, {"group": self.group.name, "tickets": [
            {"ot_id": b64u_encode(t.ot_id), "holder_pk": b64u_encode(t.holder_pk.to_bytes()),
             "sess_id": b64u_encode(t.sess_id)}
            for t in self._by_ot_id.values()
        ]})


def site_register(payload: "RegistrationPayload | bytes | str", rng, store: SiteStore) -> bytes:
    """Issue a fresh sess_id for a holder's registration payload and keep the ticket.

    ``payload`` may be the decoded message, its frame, or base64url text.
    """
    if isinstance(payload, str):
        payload = b64u_decode(payload.strip())
    if isinstance(payload, (bytes, bytearray)):
        payload = wire.decode(bytes(payload), RegistrationPayload, store.group)
    if not isinstance(payload, RegistrationPayload) or payload.holder_pk.group != store.group:
        raise MalformedError("not a registration payload for this group")
    sess_id = new_sess_id(rng)
    store.add(RegistrationTicket(payload.ot_id, payload.holder_pk, sess_id))
    return sess_id


@dataclass
class WalletRecord:
    ot_id: bytes
    sess_id: Optional[bytes] = None
    c: Optional[EncryptedResult] = None
    result: Optional[TestResult] = None
    downloaded_at: Optional[int] = None

    @property
    def complete(self) -> bool:
        return self.c is not None and self.result is not None


@dataclass
class WalletState:
    """Holder-side records.  The secret key is never stored here, only its keystore path."""

    keystore: str
    group: str
    records: List[WalletRecord] = field(default_factory=list)

    def pending(self) -> List[WalletRecord]:
        return [r for r in self.records if not r.complete]

    def latest(self) -> Optional[WalletRecord]:
        done = [r for r in self.records if r.complete]
        return max(done, key=lambda r: r.downloaded_at or 0) if done else None

    def to_json(self, group: GroupParams) -> dict:
        def rec(r: WalletRecord) -> dict:
            return {
                "ot_id": b64u_encode(r.ot_id),
                "sess_id": b64u_encode(r.sess_id) if r.sess_id else None,
                "c": b64u_encode(wire.encode(r.c, group)) if r.c else None,
                "result": r.result.to_json() if r.result else None,
                "downloaded_at": r.downloaded_at,
            }
        return {"version": 1, "keystore": self.keystore, "group": self.group,
                "records": [rec(r) for r in self.records]}

    @classmethod
    def from_json(cls, obj: dict, group: GroupParams) -> "WalletState":
        records = []
        for r in obj.get("records", []):
            records.append(WalletRecord(
                ot_id=b64u_decode(r["ot_id"]),
                sess_id=b64u_decode(r["sess_id"]) if r.get("sess_id") else None,
                c=wire.decode(b64u_decode(r["c"]), EncryptedResult, group) if r.get("c") else None,
                result=TestResult.from_json(r["result"]) if r.get("result") else None,
                downloaded_at=r.get("downloaded_at"),
            ))
        return cls(keystore=obj["keystore"], group=obj["group"], records=records)

    def save(self, path: "str | os.PathLike", group: GroupParams) -> None:
        _write_private_json(Path(path), self.to_json(group))

    @classmethod
    def load(cls, path: "str | os.PathLike", group: GroupParams) -> "WalletState":
        try:
            return cls.from_json(json.loads(Path(path).read_text()), group)
        except (OSError, ValueError, KeyError, DecodeError) as exc:
            raise HealthPassError(f"cannot load wallet {path}: {exc}") from None
