import random

import pytest

from conftest import toy_subgroup
from healthpass.crypto.elgamal import keygen
from healthpass.crypto.signatures import (
    CHALLENGE_SIZE,
    RecoverySignature,
    SchnorrSignature,
    nr_recover,
    nr_sign,
    schnorr_sign,
    schnorr_verify,
)
from healthpass.crypto.symmetric import KEY_SIZE, aead_open, aead_seal, kdf
from healthpass.errors import MalformedError, OpaqueError


def flip_bit(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


def test_schnorr_roundtrip(big):
    r = random.Random(1)
    for _ in range(100):
        kp = keygen(big, r)
        msg = r.randbytes(r.randrange(1, 200))
        sig = schnorr_sign(msg, kp.sk, big, r)
        assert len(sig.c) == CHALLENGE_SIZE and 0 <= sig.s < big.q
        assert schnorr_verify(msg, sig, kp.pk)


def test_schnorr_tampered_message(big):
    r = random.Random(2)
    kp = keygen(big, r)
    for _ in range(100):
        msg = r.randbytes(64)
        sig = schnorr_sign(msg, kp.sk, big, r)
        assert not schnorr_verify(flip_bit(msg, r.randrange(512)), sig, kp.pk)


def test_schnorr_wrong_key(big):
    r = random.Random(3)
    for _ in range(100):
        a, b = keygen(big, r), keygen(big, r)
        sig = schnorr_sign(b"msg", a.sk, big, r)
        assert not schnorr_verify(b"msg", sig, b.pk)


def test_schnorr_out_of_range_components(big, rng):
    kp = keygen(big, rng)
    sig = schnorr_sign(b"m", kp.sk, big, rng)
    assert not schnorr_verify(b"m", SchnorrSignature(sig.c, big.q), kp.pk)
    assert not schnorr_verify(b"m", SchnorrSignature(sig.c[:-1], sig.s), kp.pk)


def test_schnorr_bytes(big, rng):
    kp = keygen(big, rng)
    sig = schnorr_sign(b"m", kp.sk, big, rng)
    assert SchnorrSignature.from_bytes(sig.to_bytes(big), big) == sig
    with pytest.raises(MalformedError):
        SchnorrSignature.from_bytes(sig.to_bytes(big)[:-1], big)
    with pytest.raises(MalformedError):
        SchnorrSignature.from_bytes(b"\x00" * CHALLENGE_SIZE + big.q.to_bytes(256, "big"), big)


def test_schnorr_exhaustive_toy(toy):
    r = random.Random(4)
    for sk in range(1, 11):
        pk = toy.gpow(sk)
        for msg in (b"a", b"b", b""):
            assert schnorr_verify(msg, schnorr_sign(msg, sk, toy, r), pk)


def test_nr_roundtrip(big):
    r = random.Random(5)
    for _ in range(100):
        kp = keygen(big, r)
        m = big.gpow(r.randrange(big.q))
        aux = r.randbytes(40)
        assert nr_recover(nr_sign(m, aux, kp.sk, r), aux, kp.pk) == m


def test_nr_aux_tamper(big):
    r = random.Random(6)
    kp = keygen(big, r)
    for _ in range(100):
        m = big.gpow(r.randrange(big.q))
        aux = r.randbytes(40)
        sig = nr_sign(m, aux, kp.sk, r)
        assert nr_recover(sig, flip_bit(aux, r.randrange(320)), kp.pk) != m


def test_nr_identity_message(big, rng):
    kp = keygen(big, rng)
    assert nr_recover(nr_sign(big.identity, b"x", kp.sk, rng), b"x", kp.pk) == big.identity


def test_nr_any_component_changes_recovery(big):
    r = random.Random(7)
    for _ in range(50):
        kp, other = keygen(big, r), keygen(big, r)
        m = big.gpow(r.randrange(big.q))
        sig = nr_sign(m, b"aux", kp.sk, r)
        assert nr_recover(sig, b"aux", other.pk) != m
        assert nr_recover(RecoverySignature(sig.r, (sig.s + 1) % big.q), b"aux", kp.pk) != m
        assert nr_recover(RecoverySignature(sig.r * big.generator, sig.s), b"aux", kp.pk) != m


def test_nr_toy_exhaustive(toy):
    r = random.Random(8)
    for sk in range(1, 11):
        pk = toy.gpow(sk)
        for m in toy_subgroup():
            assert nr_recover(nr_sign(toy.element(m), b"t", sk, r), b"t", pk).value == m


def test_kdf():
    assert kdf(b"ikm", b"ctx") == kdf(b"ikm", b"ctx")
    assert len(kdf(b"", b"ctx")) == KEY_SIZE
    r = random.Random(9)
    for _ in range(100):
        ikm = r.randbytes(32)
        assert kdf(ikm, b"a") != kdf(ikm, b"b")


def test_aead_roundtrip_and_tamper():
    r = random.Random(10)
    for _ in range(100):
        key, nonce = r.randbytes(32), r.randbytes(12)
        pt = r.randbytes(r.randrange(0, 300))
        ct = aead_seal(key, nonce, pt, b"ad")
        assert aead_open(key, nonce, ct, b"ad") == pt
        with pytest.raises(OpaqueError):
            aead_open(key, nonce, flip_bit(ct, r.randrange(len(ct) * 8)), b"ad")


def test_aead_mismatches():
    key, nonce = bytes(32), bytes(12)
    ct = aead_seal(key, nonce, b"payload", b"ad")
    wrong_key = bytes(31) + b"\x01"
    for args in ((wrong_key, nonce, ct, b"ad"), (key, b"\x01" + bytes(11), ct, b"ad"),
                 (key, nonce, ct, b"other")):
        with pytest.raises(OpaqueError, match="opaque/unauthorized"):
            aead_open(*args)
