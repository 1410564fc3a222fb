"""The five protocol phases and the verifier's decision.

Setup     issuer and holder generate key pairs.
Test      holder shows (ot_id, A_pk); the site answers with a sess_id.
Upload    the issuer signs (R, A_pk) under a key blinded by ot_id and seals
          it under a key derived from ot_id, giving C.
Download  holder fetches C by sess_id and opens it with (PHA_pk, ot_id).
Verify    holder signs enc(C) * enc(t) with a message-recovery signature;
          the verifier strips the time element, checks C against the
          issuer and the holder key inside it, then applies its policy.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import FrozenSet, Iterator, Optional, Tuple, Union

from healthpass import wire
from healthpass.crypto.elgamal import (
    KeyPair,
    derive_issuance_public,
    derive_issuance_secret,
    keygen,
)
from healthpass.crypto.group import (
    ExpCounter,
    GroupElement,
    GroupParams,
    encode_to_group,
    invert,
    time_window,
)
from healthpass.crypto.signatures import nr_recover, nr_sign, schnorr_sign, schnorr_verify
from healthpass.crypto.symmetric import NONCE_SIZE, aead_open, aead_seal, kdf
from healthpass.errors import (
    BudgetExceededError,
    ConfigurationError,
    DecodeError,
    HealthPassError,
    HolderKeyMismatchError,
    IssuerAuthError,
    KeystoreError,
    OpaqueError,
)
from healthpass.model import (
    PRESENTATION_VERSION,
    QR_CAPACITY,
    EncryptedResult,
    Outcome,
    Presentation,
    RegistrationPayload,
    RegistrationTicket,
    ResultPayload,
    SealedPayload,
    TestResult,
    new_ot_id,
)
from healthpass.protocol.keystore import write_keystore

RESULT_KEY_CONTEXT = b"healthpass/v1/result-key"
RESULT_AD = b"healthpass/v1/encrypted-result"
WINDOW_PREFIX = b"healthpass/v1/window:"

DEFAULT_MAX_AGE = 7 * 24 * 3600
DEFAULT_WINDOW = 300
DEFAULT_SLACK = 1


# -- Setup -----------------------------------------------------------------

def setup_issuer(group: GroupParams, rng) -> KeyPair:
    return keygen(group, rng)


def setup_holder(group: GroupParams, rng, keystore_path: "str | os.PathLike") -> KeyPair:
    """Generate holder keys and persist the secret; an existing keystore is never replaced."""
    if os.path.exists(keystore_path):
        raise KeystoreError(f"keystore {keystore_path} already exists; refusing to overwrite")
    keys = keygen(group, rng)
    write_keystore(keystore_path, keys)
    return keys


# -- Test ------------------------------------------------------------------

def begin_registration(holder: KeyPair, rng) -> Tuple[bytes, RegistrationPayload]:
    ot_id = new_ot_id(rng)
    return ot_id, RegistrationPayload(ot_id, holder.pk)


# -- Upload ------------------------------------------------------------------

def result_key(ot_id: bytes) -> bytes:
    return kdf(ot_id, RESULT_KEY_CONTEXT)


def issue_result(issuer_sk: int, ticket: RegistrationTicket, result: TestResult,
                 group: GroupParams, rng,
                 counter: Optional[ExpCounter] = None) -> Tuple[bytes, EncryptedResult]:
    """Sign ``(R, A_pk)`` under the ot_id-blinded issuer key, then seal it under ``kdf(ot_id)``."""
    if not isinstance(ticket, RegistrationTicket) or ticket.holder_pk.group != group:
        raise ConfigurationError("ticket is not valid for this group")
    if not isinstance(result, TestResult):
        raise ConfigurationError("result must be a TestResult")
    payload = wire.encode(ResultPayload(result, ticket.holder_pk), group)
    signing_key = derive_issuance_secret(issuer_sk, ticket.ot_id, group)
    sig = schnorr_sign(payload, signing_key, group, rng, counter)
    sealed = wire.encode(SealedPayload(payload, sig), group)
    nonce = rng.randbytes(NONCE_SIZE)
    c = EncryptedResult(nonce, aead_seal(result_key(ticket.ot_id), nonce, sealed, RESULT_AD))
    return ticket.sess_id, c


# -- Download ----------------------------------------------------------------

def open_result(c: EncryptedResult, issuer_pk: GroupElement, ot_id: bytes,
                counter: Optional[ExpCounter] = None) -> Tuple[TestResult, GroupElement]:
    """Open C and check the issuer signature inside it.

    Raises :class:`OpaqueError` when the box does not open (wrong ot_id or
    tampering) and :class:`IssuerAuthError` when it opens but was not
    signed by the issuer for this ot_id.
    """
    group = issuer_pk.group
    sealed_bytes = aead_open(result_key(ot_id), c.nonce, c.ciphertext, RESULT_AD)
    try:
        sealed = wire.decode(sealed_bytes, SealedPayload, group)
    except DecodeError:
        raise IssuerAuthError("sealed payload is malformed") from None
    verification_key = derive_issuance_public(issuer_pk, ot_id, counter)
    if not schnorr_verify(sealed.payload, sealed.signature, verification_key, counter):
        raise IssuerAuthError("issuer signature does not verify")
    try:
        payload = wire.decode(sealed.payload, ResultPayload, group)
    except DecodeError:
        raise IssuerAuthError("signed payload is malformed") from None
    return payload.result, payload.holder_pk


def holder_accept_download(opened: Tuple[TestResult, GroupElement],
                           own_pk: GroupElement) -> TestResult:
    result, embedded_pk = opened
    if embedded_pk != own_pk:
        raise HolderKeyMismatchError("record is bound to a different holder key")
    return result


# -- Verification --------------------------------------------------------------

def _window_bytes(index: int) -> bytes:
    return WINDOW_PREFIX + index.to_bytes(8, "big", signed=True)


def window_element(index: int, group: GroupParams,
                   counter: Optional[ExpCounter] = None) -> GroupElement:
    return encode_to_group(_window_bytes(index), group, counter)


def _presentation_aux(ot_id: bytes, holder_pk: GroupElement, version: int) -> bytes:
    return ot_id + holder_pk.to_bytes() + bytes((version,))


def present(c: EncryptedResult, ot_id: bytes, holder: KeyPair, now: int,
            window: int, rng, counter: Optional[ExpCounter] = None) -> Presentation:
    """Build Q offline: a recovery signature over ``enc(C) * enc(window(now))``."""
    group = holder.group
    t = window_element(time_window(now, window), group, counter)
    c_element = encode_to_group(wire.encode(c, group), group, counter)
    aux = _presentation_aux(ot_id, holder.pk, PRESENTATION_VERSION)
    sig = nr_sign(c_element * t, aux, holder.sk, rng, counter)
    q = Presentation(sig, c, ot_id, holder.pk)
    size = len(wire.encode(q, group))
    if size > QR_CAPACITY:
        raise BudgetExceededError(f"presentation is {size} bytes, over the {QR_CAPACITY}-byte budget")
    return q


class Reason(enum.Enum):
    OK = "ok"
    BAD_SIGNATURE = "bad_signature"
    STALE_WINDOW = "stale_window"
    HOLDER_KEY_MISMATCH = "holder_key_mismatch"
    ISSUER_CHECK_FAILED = "issuer_check_failed"
    POLICY_FAILED = "policy_failed"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class VerificationOutcome:
    reason: Reason
    result: Optional[TestResult] = field(default=None, compare=False)

    @property
    def accepted(self) -> bool:
        return self.reason is Reason.OK

    def __str__(self) -> str:
        return f"{'accepted' if self.accepted else 'rejected'}: {self.reason.value}"


@dataclass(frozen=True)
class VerifierPolicy:
    max_result_age: int = DEFAULT_MAX_AGE
    accepted_outcomes: FrozenSet[Outcome] = frozenset({Outcome.NEGATIVE})
    window: int = DEFAULT_WINDOW
    window_slack: int = DEFAULT_SLACK
    # >0 widens the window search past the slack band so that a signature
    # from an old window is reported as stale_window instead of bad_signature
    diagnostic_sweep: int = 0

    def __post_init__(self) -> None:
        if self.max_result_age <= 0:
            raise ConfigurationError("max_result_age must be positive")
        if self.window <= 0:
            raise ConfigurationError("window must be positive")
        if self.window_slack < 0 or self.diagnostic_sweep < 0:
            raise ConfigurationError("slack and sweep must be non-negative")
        object.__setattr__(self, "accepted_outcomes", frozenset(self.accepted_outcomes))

    def to_json(self) -> dict:
        return {
            "max_result_age": self.max_result_age,
            "accepted_outcomes": sorted(o.value for o in self.accepted_outcomes),
            "window": self.window,
            "window_slack": self.window_slack,
            "diagnostic_sweep": self.diagnostic_sweep,
        }


def _offsets(slack: int) -> Iterator[int]:
    # current window first: the synchronised case costs one window element
    yield 0
    for i in range(1, slack + 1):
        yield -i
        yield i


def _coerce(q, group: GroupParams) -> Presentation:
    if isinstance(q, Presentation):
        if q.holder_pk.group != group or q.sig.r.group != group:
            raise DecodeError("presentation is for a different group")
        return q
    if isinstance(q, str):
        return wire.from_qr_text(q, group)
    return wire.decode(q, Presentation, group)


def verify(q: Union[Presentation, str, bytes], issuer_pk: GroupElement, now: int,
           policy: VerifierPolicy = VerifierPolicy(),
           counter: Optional[ExpCounter] = None) -> VerificationOutcome:
    """Decide on a presentation using only its contents, the issuer key and ``now``.

    Accepts a decoded :class:`Presentation`, its QR text, or its raw frame.
    Never raises for bad input; the reason says what failed.
    """
    group = issuer_pk.group
    try:
        q = _coerce(q, group)
    except (DecodeError, HealthPassError):
        return VerificationOutcome(Reason.MALFORMED)

    aux = _presentation_aux(q.ot_id, q.holder_pk, q.version)
    recovered = nr_recover(q.sig, aux, q.holder_pk, counter)
    c_element = encode_to_group(wire.encode(q.encrypted_result, group), group, counter)
    current = time_window(now, policy.window)

    def matches(offset: int) -> bool:
        return recovered * invert(window_element(current + offset, group, counter)) == c_element

    if not any(matches(off) for off in _offsets(policy.window_slack)):
        for i in range(policy.window_slack + 1, policy.window_slack + policy.diagnostic_sweep + 1):
            if matches(-i) or matches(i):
                return VerificationOutcome(Reason.STALE_WINDOW)
        return VerificationOutcome(Reason.BAD_SIGNATURE)

    try:
        result, embedded_pk = open_result(q.encrypted_result, issuer_pk, q.ot_id, counter)
    except (OpaqueError, IssuerAuthError):
        return VerificationOutcome(Reason.ISSUER_CHECK_FAILED)
    if embedded_pk != q.holder_pk:
        return VerificationOutcome(Reason.HOLDER_KEY_MISMATCH)
    if result.outcome not in policy.accepted_outcomes \
            or now - result.result_issued_at > policy.max_result_age:
        return VerificationOutcome(Reason.POLICY_FAILED, result)
    return VerificationOutcome(Reason.OK, result)
