"""Canonical binary frames for every protocol message, plus the QR text form.

Frame layout::

    version (1 byte, 0x01) | type tag (1 byte) | field*

Each field is a 2-byte big-endian length followed by that many bytes, in a
fixed order per message type.  Group elements are minimal big-endian,
scalars are fixed-width (``GroupParams.scalar_width``), integers are
8-byte unsigned big-endian.  Nested messages are embedded as whole frames.
See FORMAT.md for the per-type grammar and test vectors.
"""

from __future__ import annotations

import base64
import binascii
import re
import zlib
from dataclasses import dataclass
from typing import Callable, Dict, List, Type

from healthpass.crypto.group import GroupElement, GroupParams
from healthpass.crypto.signatures import CHALLENGE_SIZE, RecoverySignature, SchnorrSignature
from healthpass.crypto.symmetric import NONCE_SIZE, TAG_SIZE
from healthpass.errors import (
    BudgetExceededError,
    CorruptRecordError,
    DecodeError,
    MalformedError,
    MembershipDecodeError,
    MembershipError,
    NonCanonicalError,
    WrongTypeError,
)
from healthpass.model import (
    OT_ID_SIZE,
    QR_CAPACITY,
    SESS_ID_SIZE,
    EncryptedResult,
    InvalidMessageError,
    Outcome,
    Presentation,
    RegistrationPayload,
    ResultPayload,
    SealedPayload,
    StoredRecord,
    TestResult,
    UploadRecord,
)

VERSION = 0x01
HEADER_SIZE = 2
PREFIX_SIZE = 2
MAX_FIELD = 0xFFFF

TYPE_TAGS: Dict[type, int] = {
    RegistrationPayload: 0x01,
    UploadRecord: 0x02,
    EncryptedResult: 0x03,
    TestResult: 0x04,
    ResultPayload: 0x05,
    SealedPayload: 0x06,
    Presentation: 0x07,
    StoredRecord: 0x08,
}
_KNOWN_TAGS = set(TYPE_TAGS.values())


# -- primitives ------------------------------------------------------------

def _frame(tag: int, *fields: bytes) -> bytes:
    out = bytearray((VERSION, tag))
    for f in fields:
        if len(f) > MAX_FIELD:
            raise ValueError("field too long for a 2-byte length prefix")
        out += len(f).to_bytes(2, "big")
        out += f
    return bytes(out)


def _split(data: bytes, tag: int, count: int) -> List[bytes]:
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise MalformedError("input must be bytes")
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise MalformedError("truncated frame header")
    if data[0] != VERSION:
        raise MalformedError(f"unknown frame version {data[0]:#04x}")
    if data[1] != tag:
        if data[1] in _KNOWN_TAGS:
            raise WrongTypeError(f"expected type {tag:#04x}, got {data[1]:#04x}")
        raise MalformedError(f"unknown type tag {data[1]:#04x}")
    fields = []
    pos = HEADER_SIZE
    for _ in range(count):
        if pos + PREFIX_SIZE > len(data):
            raise MalformedError("truncated field prefix")
        n = int.from_bytes(data[pos:pos + PREFIX_SIZE], "big")
        pos += PREFIX_SIZE
        if pos + n > len(data):
            raise MalformedError("truncated field body")
        fields.append(data[pos:pos + n])
        pos += n
    if pos != len(data):
        raise NonCanonicalError("trailing bytes after final field")
    return fields


def _fixed(name: str, raw: bytes, size: int) -> bytes:
    if len(raw) != size:
        raise MalformedError(f"{name} must be {size} bytes")
    return raw


def _u64(value: int) -> bytes:
    return value.to_bytes(8, "big")


def _read_u64(name: str, raw: bytes) -> int:
    return int.from_bytes(_fixed(name, raw, 8), "big")


def _element(raw: bytes, group: GroupParams) -> GroupElement:
    if not raw:
        raise MalformedError("empty group element")
    if raw[0] == 0:
        raise NonCanonicalError("group element has a leading zero byte")
    try:
        return GroupElement(int.from_bytes(raw, "big"), group)
    except MembershipError:
        raise MembershipDecodeError("decoded value is not a subgroup member") from None


def _scalar(raw: bytes, group: GroupParams) -> int:
    _fixed("scalar", raw, group.scalar_width)
    s = int.from_bytes(raw, "big")
    if s >= group.q:
        raise NonCanonicalError("scalar not reduced mod q")
    return s


def _build(factory: Callable, *args):
    try:
        return factory(*args)
    except InvalidMessageError as exc:
        raise MalformedError(str(exc)) from None


# -- per-type codecs -------------------------------------------------------

def _enc_result(m: TestResult, group: GroupParams) -> bytes:
    return _frame(TYPE_TAGS[TestResult], bytes((m.outcome.code,)),
                  m.test_type.encode("ascii"), _u64(m.specimen_collected_at),
                  _u64(m.result_issued_at))


def _dec_result(data: bytes, group: GroupParams) -> TestResult:
    code, test_type, collected, issued = _split(data, TYPE_TAGS[TestResult], 4)
    _fixed("outcome", code, 1)
    try:
        outcome = Outcome.from_code(code[0])
        test_type = test_type.decode("ascii")
    except (InvalidMessageError, UnicodeDecodeError) as exc:
        raise MalformedError(str(exc)) from None
    return _build(TestResult, outcome, test_type, _read_u64("collected", collected),
                  _read_u64("issued", issued))


def _enc_registration(m: RegistrationPayload, group: GroupParams) -> bytes:
    return _frame(TYPE_TAGS[RegistrationPayload], m.ot_id, m.holder_pk.to_bytes())


def _dec_registration(data: bytes, group: GroupParams) -> RegistrationPayload:
    ot_id, pk = _split(data, TYPE_TAGS[RegistrationPayload], 2)
    return _build(RegistrationPayload, _fixed("ot_id", ot_id, OT_ID_SIZE), _element(pk, group))


def _enc_upload(m: UploadRecord, group: GroupParams) -> bytes:
    return _frame(TYPE_TAGS[UploadRecord], m.sess_id, m.ot_id, m.holder_pk.to_bytes(),
                  _enc_result(m.result, group))


def _dec_upload(data: bytes, group: GroupParams) -> UploadRecord:
    sess_id, ot_id, pk, result = _split(data, TYPE_TAGS[UploadRecord], 4)
    return _build(UploadRecord, _fixed("sess_id", sess_id, SESS_ID_SIZE),
                  _fixed("ot_id", ot_id, OT_ID_SIZE), _element(pk, group),
                  _dec_result(result, group))


def _enc_encrypted(m: EncryptedResult, group: GroupParams) -> bytes:
    return _frame(TYPE_TAGS[EncryptedResult], m.nonce, m.ciphertext)


def _dec_encrypted(data: bytes, group: GroupParams) -> EncryptedResult:
    nonce, ct = _split(data, TYPE_TAGS[EncryptedResult], 2)
    if len(ct) < TAG_SIZE:
        raise MalformedError("ciphertext shorter than its authentication tag")
    return _build(EncryptedResult, _fixed("nonce", nonce, NONCE_SIZE), ct)


def _enc_payload(m: ResultPayload, group: GroupParams) -> bytes:
    return _frame(TYPE_TAGS[ResultPayload], _enc_result(m.result, group), m.holder_pk.to_bytes())


def _dec_payload(data: bytes, group: GroupParams) -> ResultPayload:
    result, pk = _split(data, TYPE_TAGS[ResultPayload], 2)
    return ResultPayload(_dec_result(result, group), _element(pk, group))


def _enc_sealed(m: SealedPayload, group: GroupParams) -> bytes:
    return _frame(TYPE_TAGS[SealedPayload], m.payload, m.signature.c,
                  group.scalar_to_bytes(m.signature.s))


def _dec_sealed(data: bytes, group: GroupParams) -> SealedPayload:
    payload, c, s = _split(data, TYPE_TAGS[SealedPayload], 3)
    return SealedPayload(payload, SchnorrSignature(_fixed("challenge", c, CHALLENGE_SIZE),
                                                   _scalar(s, group)))


def _enc_presentation(m: Presentation, group: GroupParams) -> bytes:
    return _frame(TYPE_TAGS[Presentation], bytes((m.version,)), m.sig.r.to_bytes(),
                  group.scalar_to_bytes(m.sig.s), _enc_encrypted(m.encrypted_result, group),
                  m.ot_id, m.holder_pk.to_bytes())


def _dec_presentation(data: bytes, group: GroupParams) -> Presentation:
    version, r, s, c, ot_id, pk = _split(data, TYPE_TAGS[Presentation], 6)
    _fixed("version", version, 1)
    sig = RecoverySignature(_element(r, group), _scalar(s, group))
    return _build(Presentation, sig, _dec_encrypted(c, group), _fixed("ot_id", ot_id, OT_ID_SIZE),
                  _element(pk, group), version[0])


def _stored_body(m: StoredRecord) -> List[bytes]:
    return [m.sess_id, m.c.nonce, m.c.ciphertext, _u64(m.stored_at)]


def _enc_stored(m: StoredRecord, group: GroupParams) -> bytes:
    body = _stored_body(m)
    checksum = zlib.crc32(b"".join(body)).to_bytes(4, "big")
    return _frame(TYPE_TAGS[StoredRecord], *body, checksum)


def _dec_stored(data: bytes, group: GroupParams) -> StoredRecord:
    sess_id, nonce, ct, stored_at, checksum = _split(data, TYPE_TAGS[StoredRecord], 5)
    _fixed("checksum", checksum, 4)
    if zlib.crc32(sess_id + nonce + ct + stored_at).to_bytes(4, "big") != checksum:
        raise CorruptRecordError("stored record checksum mismatch")
    c = _build(EncryptedResult, _fixed("nonce", nonce, NONCE_SIZE), ct)
    return _build(StoredRecord, _fixed("sess_id", sess_id, SESS_ID_SIZE), c,
                  _read_u64("stored_at", stored_at))


_ENCODERS: Dict[type, Callable] = {
    TestResult: _enc_result,
    RegistrationPayload: _enc_registration,
    UploadRecord: _enc_upload,
    EncryptedResult: _enc_encrypted,
    ResultPayload: _enc_payload,
    SealedPayload: _enc_sealed,
    Presentation: _enc_presentation,
    StoredRecord: _enc_stored,
}
_DECODERS: Dict[type, Callable] = {
    TestResult: _dec_result,
    RegistrationPayload: _dec_registration,
    UploadRecord: _dec_upload,
    EncryptedResult: _dec_encrypted,
    ResultPayload: _dec_payload,
    SealedPayload: _dec_sealed,
    Presentation: _dec_presentation,
    StoredRecord: _dec_stored,
}


def encode(message, group: GroupParams) -> bytes:
    """Canonical frame for any protocol message."""
    try:
        encoder = _ENCODERS[type(message)]
    except KeyError:
        raise TypeError(f"no wire encoding for {type(message).__name__}") from None
    return encoder(message, group)


def decode(data: bytes, expected: Type, group: GroupParams):
    """Parse a frame of type ``expected``; every failure is a :class:`DecodeError`.

    Stored records with a bad checksum raise ``CorruptRecordError`` instead.
    """
    return _DECODERS[expected](data, group)


# -- QR text -----------------------------------------------------------------

_B64U = re.compile(r"[A-Za-z0-9_-]*\Z")
MAX_QR_TEXT = (QR_CAPACITY * 4 + 2) // 3


def b64u_encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def b64u_decode(text: str) -> bytes:
    """Strict unpadded base64url: rejects padding, stray characters and non-zero tail bits."""
    if isinstance(text, bytes):
        try:
            text = text.decode("ascii")
        except UnicodeDecodeError:
            raise MalformedError("invalid base64url text") from None
    if not isinstance(text, str) or not _B64U.match(text) or len(text) % 4 == 1:
        raise MalformedError("invalid base64url text")
    try:
        raw = base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))
    except (binascii.Error, ValueError):
        raise MalformedError("invalid base64url text") from None
    if b64u_encode(raw) != text:
        raise NonCanonicalError("non-canonical base64url text")
    return raw


def to_qr_text(presentation: Presentation, group: GroupParams) -> str:
    raw = encode(presentation, group)
    if len(raw) > QR_CAPACITY:
        raise BudgetExceededError(f"presentation is {len(raw)} bytes, budget {QR_CAPACITY}")
    return b64u_encode(raw)


def from_qr_text(text: str, group: GroupParams) -> Presentation:
    text = text.strip() if isinstance(text, str) else text
    if len(text) > MAX_QR_TEXT:
        raise BudgetExceededError("QR text exceeds the presentation budget")
    raw = b64u_decode(text)
    if len(raw) > QR_CAPACITY:
        raise BudgetExceededError("decoded presentation exceeds the QR budget")
    return decode(raw, Presentation, group)


# -- size accounting -------------------------------------------------------

@dataclass(frozen=True)
class SizeReport:
    """Byte breakdown of an encoded presentation."""

    signature: int       # S = (r, s)
    holder_pk: int
    ot_id: int
    encrypted_result: int  # C content: nonce, AEAD tag, R, embedded key, issuer signature
    framing: int         # headers and length prefixes at every nesting level

    @property
    def total(self) -> int:
        return self.signature + self.holder_pk + self.ot_id + self.encrypted_result + self.framing

    @property
    def framing_ratio(self) -> float:
        return self.framing / self.total

    def as_dict(self) -> dict:
        return {
            "S": self.signature, "A_pk": self.holder_pk, "ot_id": self.ot_id,
            "C": self.encrypted_result, "framing": self.framing, "total": self.total,
        }


# Frames nested inside a presentation: (header, number of fields).
_Q_FIELDS = 6
_C_FIELDS = 2
_SEALED_FIELDS = 3
_PAYLOAD_FIELDS = 2
_RESULT_FIELDS = 4
_RESULT_FIXED = 1 + 8 + 8


def _framing(fields: int) -> int:
    return HEADER_SIZE + fields * PREFIX_SIZE


_INNER_FRAMING = _framing(_SEALED_FIELDS) + _framing(_PAYLOAD_FIELDS) + _framing(_RESULT_FIELDS)


def payload_size_report(group_bits: int, result_bytes: int) -> SizeReport:
    """Analytic size of a presentation for a group of ``group_bits`` bits.

    ``result_bytes`` is the variable part of R (its test-type code); elements
    are assumed full width.  Everything is linear in the group size.
    """
    width = (group_bits + 7) // 8
    sealed_content = result_bytes + _RESULT_FIXED + width + CHALLENGE_SIZE + width
    c_content = NONCE_SIZE + TAG_SIZE + sealed_content
    framing = 1 + _framing(_Q_FIELDS) + _framing(_C_FIELDS) + _INNER_FRAMING
    return SizeReport(signature=2 * width, holder_pk=width, ot_id=OT_ID_SIZE,
                      encrypted_result=c_content, framing=framing)


def presentation_size(presentation: Presentation, group: GroupParams) -> SizeReport:
    """Measured breakdown of an actual presentation."""
    sig = len(presentation.sig.r.to_bytes()) + group.scalar_width
    c = presentation.encrypted_result
    c_content = len(c.nonce) + len(c.ciphertext) - _INNER_FRAMING
    framing = 1 + _framing(_Q_FIELDS) + _framing(_C_FIELDS) + _INNER_FRAMING
    report = SizeReport(signature=sig, holder_pk=len(presentation.holder_pk.to_bytes()),
                        ot_id=len(presentation.ot_id), encrypted_result=c_content,
                        framing=framing)
    return report


__all__ = [
    "DecodeError", "SizeReport", "TYPE_TAGS", "b64u_decode", "b64u_encode", "decode",
    "encode", "from_qr_text", "payload_size_report", "presentation_size", "to_qr_text",
]
