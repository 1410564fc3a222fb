import json
import random
import struct
import zlib
from pathlib import Path

import pytest

from healthpass import wire
from healthpass.crypto.elgamal import KeyPair
from healthpass.model import (
    EncryptedResult,
    Outcome,
    Presentation,
    RegistrationPayload,
    RegistrationTicket,
    StoredRecord,
    TestResult,
    UploadRecord,
)
from healthpass.protocol.phases import VerifierPolicy, issue_result, open_result, present, verify

VECTORS = json.loads((Path(__file__).parent / "fixtures" / "toy_vectors.json").read_text())
TYPES = {t.__name__: t for t in (TestResult, RegistrationPayload, UploadRecord, EncryptedResult,
                                  Presentation, StoredRecord)}


def frame(tag, *fields):
    """Grammar written out by hand: version, tag, then u16-length-prefixed fields."""
    return bytes((1, tag)) + b"".join(struct.pack(">H", len(f)) + f for f in fields)


@pytest.fixture(scope="module")
def fixed(toy):
    holder = KeyPair.from_secret(VECTORS["holder_sk"], toy)
    issuer = KeyPair.from_secret(VECTORS["issuer_sk"], toy)
    ot_id, sess_id = bytes.fromhex(VECTORS["ot_id"]), bytes.fromhex(VECTORS["sess_id"])
    result = TestResult(Outcome.NEGATIVE, "PCR", 1_700_000_000, 1_700_003_600)
    return holder, issuer, ot_id, sess_id, result


def test_hand_built_frames(fixed):
    holder, _, ot_id, sess_id, _ = fixed
    assert holder.pk.value == 18  # 4^3 mod 23
    r = frame(0x04, b"\x01", b"PCR", struct.pack(">Q", 1_700_000_000), struct.pack(">Q", 1_700_003_600))
    v = {k: bytes.fromhex(h) for k, h in VECTORS["vectors"].items()}
    assert v["TestResult"] == r
    assert v["RegistrationPayload"] == frame(0x01, ot_id, b"\x12")
    assert v["UploadRecord"] == frame(0x02, sess_id, ot_id, b"\x12", r)
    c = wire.decode(v["EncryptedResult"], EncryptedResult, holder.group)
    assert v["EncryptedResult"] == frame(0x03, c.nonce, c.ciphertext)
    body = (sess_id, c.nonce, c.ciphertext, struct.pack(">Q", 1_700_003_700))
    crc = struct.pack(">I", zlib.crc32(b"".join(body)))
    assert v["StoredRecord"] == frame(0x08, *body, crc)


@pytest.mark.parametrize("name", sorted(VECTORS["vectors"]))
def test_vector_roundtrip(toy, name):
    data = bytes.fromhex(VECTORS["vectors"][name])
    assert wire.encode(wire.decode(data, TYPES[name], toy), toy) == data


def test_vectors_reproducible(toy, fixed):
    holder, issuer, ot_id, sess_id, result = fixed
    _, c = issue_result(issuer.sk, RegistrationTicket(ot_id, holder.pk, sess_id), result, toy,
                        random.Random(VECTORS["issue_seed"]))
    q = present(c, ot_id, holder, VECTORS["present_now"], VECTORS["window"],
                random.Random(VECTORS["present_seed"]))
    assert wire.encode(c, toy).hex() == VECTORS["vectors"]["EncryptedResult"]
    assert wire.encode(q, toy).hex() == VECTORS["vectors"]["Presentation"]


def test_vector_presentation_verifies(toy, fixed):
    holder, issuer, ot_id, _, result = fixed
    q = wire.decode(bytes.fromhex(VECTORS["vectors"]["Presentation"]), Presentation, toy)
    assert open_result(q.encrypted_result, issuer.pk, ot_id) == (result, holder.pk)
    assert verify(q, issuer.pk, VECTORS["present_now"], VerifierPolicy()).accepted
