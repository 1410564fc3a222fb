import random

import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

from conftest import FixedRng, toy_subgroup
from healthpass.crypto.elgamal import (
    ElGamalCiphertext,
    KeyPair,
    derive_issuance_public,
    derive_issuance_secret,
    elgamal_decrypt,
    elgamal_encrypt,
    keygen,
)
from healthpass.crypto.group import (
    GROUPS,
    MILLER_RABIN_ROUNDS,
    ExpCounter,
    GroupElement,
    GroupParams,
    encode_to_group,
    get_group,
    invert,
    time_window,
)
from healthpass.errors import ConfigurationError, MembershipError, ScalarRangeError


def test_toy_subgroup_oracle():
    # brute force: the 11 quadratic residues mod 23
    assert toy_subgroup() == [1, 2, 3, 4, 6, 8, 9, 12, 13, 16, 18]
    assert sorted({pow(4, e, 23) for e in range(11)}) == toy_subgroup()


@pytest.mark.parametrize("name", sorted(GROUPS))
def test_group_params_valid(name):
    grp = get_group(name, allow_test=True)
    assert gmpy2.is_prime(grp.p, MILLER_RABIN_ROUNDS) and gmpy2.is_prime(grp.q, MILLER_RABIN_ROUNDS)
    assert grp.p == 2 * grp.q + 1
    assert pow(grp.g, grp.q, grp.p) == 1 and grp.g != 1


def test_toy_group_refused_without_flag():
    with pytest.raises(ConfigurationError):
        get_group("toy23")
    with pytest.raises(ConfigurationError):
        get_group("nope")


def test_invalid_params_rejected():
    with pytest.raises(ConfigurationError):
        GroupParams("bad", 23, 11, 5).validate()  # 5 has order 22
    with pytest.raises(ConfigurationError):
        GroupParams("bad", 21, 10, 4).validate()
    with pytest.raises(ConfigurationError):
        GroupParams("bad", 23, 11, 1).validate()


def test_membership_matches_exponent_oracle(toy):
    for x in range(-2, 30):
        assert toy.is_member(x) == (0 < x < 23 and pow(x, 11, 23) == 1)


def test_membership_jacobi_matches_exponent_big(big, rng):
    for _ in range(50):
        x = rng.randrange(1, big.p)
        assert big.is_member(x) == (pow(x, big.q, big.p) == 1)


def test_element_rejects_non_member(toy):
    with pytest.raises(MembershipError):
        toy.element(5)
    with pytest.raises(MembershipError):
        toy.element(0)


def test_keygen_forced_sk(toy):
    kp = keygen(toy, FixedRng(3))
    assert kp.sk == 3 and kp.pk.value == 18  # 4^3 = 64 = 18 mod 23


def test_sk_zero_rejected(toy):
    with pytest.raises(ScalarRangeError):
        KeyPair.from_secret(0, toy)
    with pytest.raises(ScalarRangeError):
        KeyPair.from_secret(11, toy)


def test_keygen_samples_in_range(toy):
    members = set(toy_subgroup())
    r = random.Random(7)
    for _ in range(1000):
        kp = keygen(toy, r)
        assert 1 <= kp.sk <= 10
        assert kp.pk.value in members


def test_encrypt_forced_d(toy):
    pk = toy.element(18)
    ct = elgamal_encrypt(toy.element(9), pk, FixedRng(7))
    assert (ct.c1.value, ct.c2.value) == (8, 8)


def test_decrypt_vector(toy):
    ct = ElGamalCiphertext(toy.element(8), toy.element(8))
    assert elgamal_decrypt(ct, 3).value == 9


def test_encrypt_identity_message(toy):
    pk = toy.element(18)
    for d in range(1, 11):
        ct = elgamal_encrypt(toy.identity, pk, FixedRng(d))
        assert ct.c2.value == pow(18, d, 23)
        assert elgamal_decrypt(ct, 3).value == 1


def test_decrypt_unblinded(toy):
    for m in toy_subgroup():
        for sk in range(1, 11):
            assert elgamal_decrypt(ElGamalCiphertext(toy.identity, toy.element(m)), sk).value == m


def test_encrypt_exhaustive_oracle(toy):
    # independent oracle: textbook formulas with builtin pow
    for sk in range(1, 11):
        pk = pow(4, sk, 23)
        for d in range(1, 11):
            for m in toy_subgroup():
                ct = elgamal_encrypt(toy.element(m), toy.element(pk), FixedRng(d))
                assert (ct.c1.value, ct.c2.value) == (pow(4, d, 23), m * pow(pk, d, 23) % 23)
                assert elgamal_decrypt(ct, sk).value == m


def test_encryptions_randomized(big, rng):
    kp = keygen(big, rng)
    m = big.gpow(12345)
    c1s = {elgamal_encrypt(m, kp.pk, rng).c1 for _ in range(20)}
    assert len(c1s) == 20


def test_elgamal_roundtrip_2048(big):
    r = random.Random(99)
    for _ in range(1000):
        kp = keygen(big, r)
        m = big.gpow(big.random_scalar(r))
        assert elgamal_decrypt(elgamal_encrypt(m, kp.pk, r), kp.sk) == m


def test_derive_with_stub_hash(toy, monkeypatch):
    monkeypatch.setattr(GroupParams, "hash_to_scalar", lambda self, tag, *parts: 5)
    assert derive_issuance_secret(3, b"\x00" * 32, toy) == 8
    y = derive_issuance_public(toy.element(18), b"\x00" * 32)
    assert y.value == 18 * pow(4, 5, 23) % 23 == 9 == pow(4, 8, 23)


def test_derive_zero_blinding(toy, monkeypatch):
    monkeypatch.setattr(GroupParams, "hash_to_scalar", lambda self, tag, *parts: 0)
    assert derive_issuance_secret(3, b"\x01" * 32, toy) == 3
    assert derive_issuance_public(toy.element(18), b"\x01" * 32).value == 18


def test_derive_consistency_and_distinct(big, rng):
    kp = keygen(big, rng)
    seen = set()
    for _ in range(50):
        ot_id = rng.randbytes(32)
        y = derive_issuance_public(kp.pk, ot_id)
        assert big.gpow(derive_issuance_secret(kp.sk, ot_id, big)) == y
        seen.add(y)
    assert len(seen) == 50


def test_encode_to_group_stub(toy, monkeypatch):
    monkeypatch.setattr(GroupParams, "hash_to_scalar", lambda self, tag, *parts: 5)
    assert encode_to_group(b"anything", toy).value == 12


def test_encode_to_group_deterministic(big, rng):
    outputs = {}
    for _ in range(10_000):
        data = rng.randbytes(16)
        outputs[data] = encode_to_group(data, big).value
    assert len(set(outputs.values())) == len(outputs)
    data = next(iter(outputs))
    assert encode_to_group(data, big).value == outputs[data]
    assert all(pow(v, big.q, big.p) == 1 for v in list(outputs.values())[:20])


def test_invert(toy):
    assert invert(toy.identity).value == 1
    assert invert(toy.element(6)).value == 4
    for x in toy_subgroup():
        assert x * invert(toy.element(x)).value % 23 == 1


def test_time_window():
    assert time_window(1600000000, 300) == 5333333
    assert time_window(1600000000, 60) == 26666666
    assert time_window(1500, 300) == time_window(1799, 300)
    assert time_window(1800, 300) == time_window(1500, 300) + 1
    for bad in (0, -300):
        with pytest.raises(ConfigurationError):
            time_window(1600000000, bad)


@given(st.integers(min_value=0, max_value=2**40), st.integers(min_value=1, max_value=10**6))
def test_time_window_floor(t, w):
    i = time_window(t, w)
    assert i * w <= t < (i + 1) * w
    assert time_window(t + w, w) == i + 1


def test_scalar_bytes(toy, big):
    assert big.scalar_width == 256 and toy.scalar_width == 1
    assert big.scalar_from_bytes(big.scalar_to_bytes(big.q - 1)) == big.q - 1
    with pytest.raises(ScalarRangeError):
        toy.scalar_to_bytes(11)
    with pytest.raises(ScalarRangeError):
        toy.scalar_from_bytes(bytes([11]))


def test_element_bytes_minimal(big, rng):
    x = big.gpow(rng.randrange(big.q))
    raw = x.to_bytes()
    assert raw[0] != 0 and GroupElement.from_bytes(raw, big) == x
    with pytest.raises(MembershipError):
        GroupElement.from_bytes(b"\x00" + raw, big)


def test_counter_phases(big):
    c = ExpCounter()
    with c.phase("a"):
        big.gpow(3, c)
        big.gpow(4, c)
    big.gpow(5, c)
    assert c.counts == {"a": 2, "default": 1} and c.total == 3


@settings(max_examples=200)
@given(st.integers(min_value=1, max_value=10), st.integers(min_value=1, max_value=10),
       st.sampled_from(toy_subgroup()))
def test_elgamal_property_toy(sk, d, m):
    toy = get_group("toy23", allow_test=True)
    kp = KeyPair.from_secret(sk, toy)
    assert elgamal_decrypt(elgamal_encrypt(toy.element(m), kp.pk, FixedRng(d)), sk).value == m
