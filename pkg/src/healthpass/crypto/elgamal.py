"""Key generation, El Gamal encryption and issuance-key blinding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from healthpass.crypto.group import (
    TAG_ISSUANCE_BLIND,
    ExpCounter,
    GroupElement,
    GroupParams,
)
from healthpass.errors import ScalarRangeError


@dataclass(frozen=True, repr=False)
class KeyPair:
    sk: int
    pk: GroupElement

    @property
    def group(self) -> GroupParams:
        return self.pk.group

    @classmethod
    def from_secret(cls, sk: int, group: GroupParams,
                    counter: Optional[ExpCounter] = None) -> "KeyPair":
        """Rebuild a key pair from a stored secret; 0 and out-of-range secrets are refused."""
        if not 0 < sk < group.q:
            raise ScalarRangeError("secret key must lie in [1, q-1]")
        return cls(sk, group.gpow(sk, counter))

    def __repr__(self) -> str:
        return f"KeyPair(pk={self.pk!r})"


class ElGamalCiphertext(NamedTuple):
    c1: GroupElement
    c2: GroupElement


def keygen(group: GroupParams, rng, counter: Optional[ExpCounter] = None) -> KeyPair:
    return KeyPair.from_secret(group.random_scalar(rng), group, counter)


def elgamal_encrypt(m: GroupElement, pk: GroupElement, rng,
                    counter: Optional[ExpCounter] = None) -> ElGamalCiphertext:
    """Encrypt a subgroup element under ``pk``: two exponentiations."""
    group = pk.group
    d = group.random_scalar(rng)
    return ElGamalCiphertext(group.gpow(d, counter), m * group.power(pk, d, counter))


def elgamal_decrypt(ct: ElGamalCiphertext, sk: int,
                    counter: Optional[ExpCounter] = None) -> GroupElement:
    """Recover the plaintext element: one exponentiation plus an inversion."""
    c1, c2 = ct
    return c2 * c1.group.power(c1, sk, counter).inverse()


def issuance_offset(ot_id: bytes, group: GroupParams) -> int:
    return group.hash_to_scalar(TAG_ISSUANCE_BLIND, ot_id)


def blind_secret(sk: int, offset: int, group: GroupParams) -> int:
    return (sk + offset) % group.q


def blind_public(pk: GroupElement, offset: int,
                 counter: Optional[ExpCounter] = None) -> GroupElement:
    return pk * pk.group.gpow(offset, counter)


def derive_issuance_secret(pha_sk: int, ot_id: bytes, group: GroupParams) -> int:
    """Per-record issuer signing key ``pha_sk + H_q(ot_id)``."""
    return blind_secret(pha_sk, issuance_offset(ot_id, group), group)


def derive_issuance_public(pha_pk: GroupElement, ot_id: bytes,
                           counter: Optional[ExpCounter] = None) -> GroupElement:
    """Matching public key ``pha_pk * g ** H_q(ot_id)``, computable by anyone holding ot_id."""
    return blind_public(pha_pk, issuance_offset(ot_id, pha_pk.group), counter)
