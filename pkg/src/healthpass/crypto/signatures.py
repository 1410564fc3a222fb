"""Schnorr signatures and Nyberg-Rueppel style message-recovery signatures."""

from __future__ import annotations

import hashlib
import hmac
from typing import NamedTuple, Optional

from healthpass.crypto.group import (
    TAG_RECOVERY,
    TAG_SCHNORR,
    ExpCounter,
    GroupElement,
    GroupParams,
)
from healthpass.errors import MalformedError, ScalarRangeError

CHALLENGE_SIZE = 32


def _framed(element: GroupElement) -> bytes:
    raw = element.to_bytes()
    return len(raw).to_bytes(2, "big") + raw


class SchnorrSignature(NamedTuple):
    c: bytes  # 32-byte challenge digest
    s: int

    def to_bytes(self, group: GroupParams) -> bytes:
        return self.c + group.scalar_to_bytes(self.s)

    @classmethod
    def from_bytes(cls, data: bytes, group: GroupParams) -> "SchnorrSignature":
        if len(data) != CHALLENGE_SIZE + group.scalar_width:
            raise MalformedError("schnorr signature has the wrong length")
        try:
            s = group.scalar_from_bytes(data[CHALLENGE_SIZE:])
        except ScalarRangeError as exc:
            raise MalformedError(str(exc)) from None
        return cls(bytes(data[:CHALLENGE_SIZE]), s)


class RecoverySignature(NamedTuple):
    r: GroupElement
    s: int


def _schnorr_challenge(commitment: GroupElement, msg: bytes) -> bytes:
    return hashlib.sha256(TAG_SCHNORR + _framed(commitment) + msg).digest()


def schnorr_sign(msg: bytes, sk: int, group: GroupParams, rng,
                 counter: Optional[ExpCounter] = None) -> SchnorrSignature:
    k = group.random_scalar(rng)
    c = _schnorr_challenge(group.gpow(k, counter), msg)
    e = int.from_bytes(c, "big") % group.q
    return SchnorrSignature(c, (k + sk * e) % group.q)


def schnorr_verify(msg: bytes, sig: SchnorrSignature, pk: GroupElement,
                   counter: Optional[ExpCounter] = None) -> bool:
    group = pk.group
    c, s = sig
    if len(c) != CHALLENGE_SIZE or not 0 <= s < group.q:
        return False
    e = int.from_bytes(c, "big") % group.q
    u = group.gpow(s, counter) * group.power(pk, -e, counter)
    return hmac.compare_digest(_schnorr_challenge(u, msg), c)


def _recovery_challenge(r: GroupElement, aux: bytes) -> int:
    return r.group.hash_to_scalar(TAG_RECOVERY, _framed(r), aux)


def nr_sign(m: GroupElement, aux: bytes, sk: int, rng,
            counter: Optional[ExpCounter] = None) -> RecoverySignature:
    """Sign a subgroup element so that it can be recovered from the signature.

    ``r = m * g**k`` hides the message under a fresh mask; ``s = k + sk*h``
    lets anyone holding the public key strip the mask again.  ``aux`` is
    bound into the challenge but not recovered.
    """
    group = m.group
    k = group.random_scalar(rng)
    r = m * group.gpow(k, counter)
    h = _recovery_challenge(r, aux)
    return RecoverySignature(r, (k + sk * h) % group.q)


def nr_recover(sig: RecoverySignature, aux: bytes, pk: GroupElement,
               counter: Optional[ExpCounter] = None) -> GroupElement:
    """Strip the mask from ``sig.r``.

    Always yields some element; it equals the signed message only for the
    right (aux, pk), so callers must compare against an expected value.
    """
    group = pk.group
    r, s = sig
    h = _recovery_challenge(r, aux)
    mask = group.gpow(s, counter) * group.power(pk, -h, counter)
    return r * mask.inverse()
