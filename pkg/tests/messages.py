"""Random protocol messages for codec round trips and fuzz seeds."""

import random
import string

from healthpass import wire
from healthpass.crypto.signatures import RecoverySignature, SchnorrSignature
from healthpass.model import (
    EncryptedResult,
    Outcome,
    Presentation,
    RegistrationPayload,
    ResultPayload,
    SealedPayload,
    StoredRecord,
    TestResult,
    UploadRecord,
)

_TYPE_CHARS = string.ascii_letters + string.digits + "_.-"


def element(group, rng: random.Random):
    # squares are exactly the order-q subgroup of a safe-prime group
    while True:
        x = pow(rng.randrange(2, group.p - 1), 2, group.p)
        if x != 1:
            return group.element(x)


def result(rng: random.Random) -> TestResult:
    collected = rng.randrange(2**40)
    return TestResult(rng.choice(list(Outcome)),
                      "".join(rng.choice(_TYPE_CHARS) for _ in range(rng.randrange(1, 33))),
                      collected, collected + rng.randrange(2**20))


def encrypted(rng: random.Random) -> EncryptedResult:
    return EncryptedResult(rng.randbytes(12), rng.randbytes(rng.randrange(16, 800)))


def message(kind: type, group, rng: random.Random):
    if kind is TestResult:
        return result(rng)
    if kind is RegistrationPayload:
        return RegistrationPayload(rng.randbytes(32), element(group, rng))
    if kind is UploadRecord:
        return UploadRecord(rng.randbytes(16), rng.randbytes(32), element(group, rng), result(rng))
    if kind is EncryptedResult:
        return encrypted(rng)
    if kind is ResultPayload:
        return ResultPayload(result(rng), element(group, rng))
    if kind is SealedPayload:
        return SealedPayload(rng.randbytes(rng.randrange(0, 600)),
                             SchnorrSignature(rng.randbytes(32), rng.randrange(group.q)))
    if kind is Presentation:
        return Presentation(RecoverySignature(element(group, rng), rng.randrange(group.q)),
                            encrypted(rng), rng.randbytes(32), element(group, rng))
    if kind is StoredRecord:
        return StoredRecord(rng.randbytes(16), encrypted(rng), rng.randrange(2**63))
    raise TypeError(kind)


MESSAGE_TYPES = tuple(wire.TYPE_TAGS)
