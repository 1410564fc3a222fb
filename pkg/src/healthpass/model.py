"""Protocol messages exchanged between holder, testing site, issuer and verifier."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from healthpass.crypto.group import GroupElement
from healthpass.crypto.signatures import RecoverySignature, SchnorrSignature
from healthpass.crypto.symmetric import NONCE_SIZE
from healthpass.errors import HealthPassError

OT_ID_SIZE = 32
SESS_ID_SIZE = 16
PRESENTATION_VERSION = 1
QR_CAPACITY = 2953  # QR version 40-L, byte mode

_TEST_TYPE = re.compile(r"[A-Za-z0-9_.-]{1,32}\Z")


class InvalidMessageError(HealthPassError, ValueError):
    """A message violates its own field invariants."""


def new_ot_id(rng) -> bytes:
    return rng.randbytes(OT_ID_SIZE)


def new_sess_id(rng) -> bytes:
    return rng.randbytes(SESS_ID_SIZE)


def _check_len(name: str, value: bytes, size: int) -> None:
    if not isinstance(value, bytes) or len(value) != size:
        raise InvalidMessageError(f"{name} must be {size} bytes")


class Outcome(enum.Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"
    INDETERMINATE = "indeterminate"

    @property
    def code(self) -> int:
        return _OUTCOME_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "Outcome":
        for outcome, c in _OUTCOME_CODES.items():
            if c == code:
                return outcome
        raise InvalidMessageError(f"unknown outcome code {code}")


_OUTCOME_CODES = {Outcome.NEGATIVE: 1, Outcome.POSITIVE: 2, Outcome.INDETERMINATE: 3}


@dataclass(frozen=True)
class TestResult:
    """The health status R.  Carries no identity fields by construction."""

    __test__ = False  # not a pytest test class

    outcome: Outcome
    test_type: str
    specimen_collected_at: int
    result_issued_at: int

    def __post_init__(self) -> None:
        if not isinstance(self.outcome, Outcome):
            raise InvalidMessageError("outcome must be an Outcome")
        if not isinstance(self.test_type, str) or not _TEST_TYPE.match(self.test_type):
            raise InvalidMessageError("test_type must be a short ASCII code")
        for ts in (self.specimen_collected_at, self.result_issued_at):
            if not isinstance(ts, int) or not 0 <= ts < 2**63:
                raise InvalidMessageError("timestamps must be non-negative unix seconds")
        if self.result_issued_at < self.specimen_collected_at:
            raise InvalidMessageError("result issued before specimen was collected")

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "test_type": self.test_type,
            "specimen_collected_at": self.specimen_collected_at,
            "result_issued_at": self.result_issued_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TestResult":
        if not isinstance(obj, dict) or set(obj) != {
            "outcome", "test_type", "specimen_collected_at", "result_issued_at"
        }:
            raise InvalidMessageError("result object has unexpected fields")
        try:
            outcome = Outcome(obj["outcome"])
        except ValueError:
            raise InvalidMessageError("unknown outcome") from None
        return cls(outcome, obj["test_type"], obj["specimen_collected_at"], obj["result_issued_at"])


@dataclass(frozen=True)
class RegistrationPayload:
    """What the holder shows the testing site: ``(ot_id, A_pk)``."""

    ot_id: bytes
    holder_pk: GroupElement

    def __post_init__(self) -> None:
        _check_len("ot_id", self.ot_id, OT_ID_SIZE)


@dataclass(frozen=True)
class RegistrationTicket:
    """The testing site's local tuple ``(ot_id, A_pk, sess_id)``."""

    ot_id: bytes
    holder_pk: GroupElement
    sess_id: bytes

    def __post_init__(self) -> None:
        _check_len("ot_id", self.ot_id, OT_ID_SIZE)
        _check_len("sess_id", self.sess_id, SESS_ID_SIZE)


@dataclass(frozen=True)
class UploadRecord:
    """What a testing site sends the issuer once the result is ready."""

    sess_id: bytes
    ot_id: bytes
    holder_pk: GroupElement
    result: TestResult

    def __post_init__(self) -> None:
        _check_len("sess_id", self.sess_id, SESS_ID_SIZE)
        _check_len("ot_id", self.ot_id, OT_ID_SIZE)


@dataclass(frozen=True)
class EncryptedResult:
    """C: the issuer-signed result, sealed under a key derived from ot_id."""

    nonce: bytes
    ciphertext: bytes

    def __post_init__(self) -> None:
        _check_len("nonce", self.nonce, NONCE_SIZE)
        if not isinstance(self.ciphertext, bytes):
            raise InvalidMessageError("ciphertext must be bytes")


@dataclass(frozen=True)
class ResultPayload:
    """The byte string the issuer signs: the result bound to a holder key."""

    result: TestResult
    holder_pk: GroupElement


@dataclass(frozen=True)
class SealedPayload:
    """Plaintext inside C: the encoded ResultPayload plus the issuer signature."""

    payload: bytes
    signature: SchnorrSignature


@dataclass(frozen=True)
class Presentation:
    """Q: what the holder shows at the door."""

    sig: RecoverySignature
    encrypted_result: EncryptedResult
    ot_id: bytes
    holder_pk: GroupElement
    version: int = PRESENTATION_VERSION

    def __post_init__(self) -> None:
        _check_len("ot_id", self.ot_id, OT_ID_SIZE)
        if self.version != PRESENTATION_VERSION:
            raise InvalidMessageError("unsupported presentation version")


@dataclass(frozen=True)
class StoredRecord:
    """What the registry keeps at rest: an opaque C under its session id."""

    sess_id: bytes
    c: EncryptedResult
    stored_at: int

    def __post_init__(self) -> None:
        _check_len("sess_id", self.sess_id, SESS_ID_SIZE)
