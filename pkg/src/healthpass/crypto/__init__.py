from healthpass.crypto.elgamal import (
    ElGamalCiphertext,
    KeyPair,
    blind_public,
    blind_secret,
    derive_issuance_public,
    derive_issuance_secret,
    elgamal_decrypt,
    elgamal_encrypt,
    issuance_offset,
    keygen,
)
from healthpass.crypto.group import (
    DEFAULT_GROUP,
    MODP1024,
    MODP2048,
    TOY23,
    ExpCounter,
    GroupElement,
    GroupParams,
    encode_to_group,
    get_group,
    group_by_id,
    invert,
    time_window,
)
from healthpass.crypto.signatures import (
    RecoverySignature,
    SchnorrSignature,
    nr_recover,
    nr_sign,
    schnorr_sign,
    schnorr_verify,
)
from healthpass.crypto.symmetric import aead_open, aead_seal, kdf

__all__ = [
    "DEFAULT_GROUP", "MODP1024", "MODP2048", "TOY23",
    "ElGamalCiphertext", "ExpCounter", "GroupElement", "GroupParams", "KeyPair",
    "RecoverySignature", "SchnorrSignature",
    "aead_open", "aead_seal", "blind_public", "blind_secret",
    "derive_issuance_public", "derive_issuance_secret",
    "elgamal_decrypt", "elgamal_encrypt", "encode_to_group", "get_group",
    "group_by_id", "invert", "issuance_offset", "kdf", "keygen",
    "nr_recover", "nr_sign", "schnorr_sign", "schnorr_verify", "time_window",
]
