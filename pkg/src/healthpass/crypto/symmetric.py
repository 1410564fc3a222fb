"""HKDF-SHA-256 key derivation and ChaCha20-Poly1305 sealing."""

from __future__ import annotations

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from healthpass.errors import OpaqueError

KEY_SIZE = 32
NONCE_SIZE = 12
TAG_SIZE = 16


def kdf(ikm: bytes, context: bytes) -> bytes:
    """Derive a 32-byte symmetric key; ``context`` is the HKDF info string."""
    return HKDF(algorithm=hashes.SHA256(), length=KEY_SIZE, salt=None, info=context).derive(ikm)


def aead_seal(key: bytes, nonce: bytes, plaintext: bytes, ad: bytes = b"") -> bytes:
    return ChaCha20Poly1305(key).encrypt(nonce, plaintext, ad)


def aead_open(key: bytes, nonce: bytes, ciphertext: bytes, ad: bytes = b"") -> bytes:
    """Open a sealed box or raise :class:`OpaqueError`; never returns partial plaintext."""
    if len(key) != KEY_SIZE or len(nonce) != NONCE_SIZE:
        raise OpaqueError()
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, ciphertext, ad)
    except InvalidTag:
        raise OpaqueError() from None
