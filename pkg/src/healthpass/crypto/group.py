"""Prime-order subgroups of Z_p^* and their elements.

All arithmetic is multi-precision; modular exponentiation goes through
``gmpy2.powmod``.  Every exponentiation performed on behalf of a protocol
operation can be tallied by passing an :class:`ExpCounter`.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

import gmpy2

from healthpass.errors import ConfigurationError, MembershipError, ScalarRangeError

MILLER_RABIN_ROUNDS = 64

# Domain-separation tags, one per hash-to-scalar call site.
TAG_ISSUANCE_BLIND = b"healthpass/v1/issuance-blind"
TAG_SCHNORR = b"healthpass/v1/schnorr-challenge"
TAG_RECOVERY = b"healthpass/v1/recovery-challenge"
TAG_ENCODE = b"healthpass/v1/encode-to-group"


@dataclass
class ExpCounter:
    """Accumulates modular exponentiation counts, optionally split by phase."""

    counts: Counter = field(default_factory=Counter)
    label: str = "default"

    def tick(self) -> None:
        self.counts[self.label] += 1

    @contextmanager
    def phase(self, name: str) -> Iterator["ExpCounter"]:
        previous, self.label = self.label, name
        try:
            yield self
        finally:
            self.label = previous

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def merge(self, other: "ExpCounter") -> None:
        self.counts.update(other.counts)


@dataclass(frozen=True)
class GroupParams:
    """A prime modulus ``p``, prime subgroup order ``q`` and generator ``g``."""

    name: str
    p: int
    q: int
    g: int
    test_only: bool = False

    def validate(self) -> "GroupParams":
        if not gmpy2.is_prime(self.p, MILLER_RABIN_ROUNDS):
            raise ConfigurationError(f"{self.name}: p is not prime")
        if not gmpy2.is_prime(self.q, MILLER_RABIN_ROUNDS):
            raise ConfigurationError(f"{self.name}: q is not prime")
        if (self.p - 1) % self.q:
            raise ConfigurationError(f"{self.name}: q does not divide p - 1")
        if self.g in (0, 1) or not 1 < self.g < self.p:
            raise ConfigurationError(f"{self.name}: degenerate generator")
        if gmpy2.powmod(self.g, self.q, self.p) != 1:
            raise ConfigurationError(f"{self.name}: g does not have order q")
        return self

    @property
    def is_safe_prime(self) -> bool:
        return self.p == 2 * self.q + 1

    @property
    def bits(self) -> int:
        return self.p.bit_length()

    @property
    def element_width(self) -> int:
        """Maximum byte length of an encoded element."""
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_width(self) -> int:
        """Fixed byte length of an encoded scalar."""
        return (self.q.bit_length() + 7) // 8

    def is_member(self, x: int) -> bool:
        if not 0 < x < self.p:
            return False
        if self.is_safe_prime:
            # order-q subgroup of a safe-prime group == quadratic residues
            return gmpy2.jacobi(x, self.p) == 1
        return gmpy2.powmod(x, self.q, self.p) == 1

    def element(self, x: int) -> "GroupElement":
        return GroupElement(x, self)

    @property
    def generator(self) -> "GroupElement":
        return GroupElement(self.g, self)

    @property
    def identity(self) -> "GroupElement":
        return GroupElement(1, self)

    def power(self, base: "GroupElement | int", exponent: int,
              counter: Optional[ExpCounter] = None) -> "GroupElement":
        """``base ** exponent mod p``; negative exponents are taken mod q."""
        b = base.value if isinstance(base, GroupElement) else base
        if counter is not None:
            counter.tick()
        return GroupElement(int(gmpy2.powmod(b, exponent % self.q, self.p)), self)

    def gpow(self, exponent: int, counter: Optional[ExpCounter] = None) -> "GroupElement":
        return self.power(self.g, exponent, counter)

    def scalar(self, value: int) -> int:
        """Reduce an integer into ``[0, q-1]``."""
        return value % self.q

    def random_scalar(self, rng) -> int:
        """Uniform scalar in ``[1, q-1]`` drawn from an injected source."""
        return 1 + rng.randrange(self.q - 1)

    def scalar_to_bytes(self, s: int) -> bytes:
        if not 0 <= s < self.q:
            raise ScalarRangeError("scalar out of range")
        return s.to_bytes(self.scalar_width, "big")

    def scalar_from_bytes(self, data: bytes) -> int:
        if len(data) != self.scalar_width:
            raise ScalarRangeError("scalar has the wrong width")
        s = int.from_bytes(data, "big")
        if s >= self.q:
            raise ScalarRangeError("scalar not reduced mod q")
        return s

    def hash_to_scalar(self, tag: bytes, *parts: bytes) -> int:
        """SHA-256 over ``tag || parts``, read big-endian, reduced mod q."""
        h = hashlib.sha256(tag)
        for part in parts:
            h.update(part)
        return int.from_bytes(h.digest(), "big") % self.q

    def __repr__(self) -> str:
        return f"GroupParams({self.name!r}, bits={self.bits})"


@dataclass(frozen=True, repr=False)
class GroupElement:
    """A member of the order-q subgroup; construction checks membership."""

    value: int
    group: GroupParams

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or not self.group.is_member(self.value):
            raise MembershipError("value is not a member of the order-q subgroup")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        if not isinstance(other, GroupElement):
            return NotImplemented
        return GroupElement(self.value * other.value % self.group.p, self.group)

    def inverse(self) -> "GroupElement":
        return GroupElement(int(gmpy2.invert(self.value, self.group.p)), self.group)

    def to_bytes(self) -> bytes:
        """Minimal-length big-endian encoding."""
        return self.value.to_bytes((self.value.bit_length() + 7) // 8, "big")

    @classmethod
    def from_bytes(cls, data: bytes, group: GroupParams) -> "GroupElement":
        if not data or data[0] == 0:
            raise MembershipError("element encoding is empty or not minimal")
        return cls(int.from_bytes(data, "big"), group)

    def __repr__(self) -> str:
        text = hex(self.value)
        if len(text) > 20:
            text = f"{text[:10]}...{text[-6:]}"
        return f"GroupElement({text}, {self.group.name})"


def invert(x: GroupElement) -> GroupElement:
    """Multiplicative inverse of a subgroup element (extended gcd, no exponentiation)."""
    return x.inverse()


def encode_to_group(data: bytes, group: GroupParams,
                    counter: Optional[ExpCounter] = None) -> GroupElement:
    """Deterministically map bytes into the subgroup as ``g ** H_q(data)``."""
    return group.gpow(group.hash_to_scalar(TAG_ENCODE, data), counter)


def time_window(unix_time: float, window: int) -> int:
    """Index of the clock window containing ``unix_time``."""
    if window <= 0:
        raise ConfigurationError("window must be positive")
    return int(unix_time // window)


# RFC 3526 section 3, 2048-bit MODP group.
_MODP2048_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
    "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
    "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF", 16)

# RFC 2409 section 6.2, 1024-bit MODP group (size comparisons only).
_MODP1024_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE65381"
    "FFFFFFFFFFFFFFFF", 16)

# p ≡ 7 (mod 8) for both, so 2 is a quadratic residue and generates the order-q subgroup.
MODP2048 = GroupParams("modp2048", _MODP2048_P, (_MODP2048_P - 1) // 2, 2)
MODP1024 = GroupParams("modp1024", _MODP1024_P, (_MODP1024_P - 1) // 2, 2)
TOY23 = GroupParams("toy23", 23, 11, 4, test_only=True)

GROUPS = {grp.name: grp for grp in (MODP2048, MODP1024, TOY23)}
GROUP_IDS = {"modp2048": 0x01, "modp1024": 0x02, "toy23": 0x7F}
DEFAULT_GROUP = "modp2048"


@lru_cache(maxsize=None)
def _validated(name: str) -> GroupParams:
    return GROUPS[name].validate()


def get_group(name: str = DEFAULT_GROUP, *, allow_test: bool = False) -> GroupParams:
    """Look up a named group, validating it once per process.

    The 23-element toy group exists for oracles and test vectors and is
    refused unless ``allow_test`` is set.
    """
    if name not in GROUPS:
        raise ConfigurationError(f"unknown group {name!r}")
    if GROUPS[name].test_only and not allow_test:
        raise ConfigurationError(f"group {name!r} is for tests only")
    return _validated(name)


def group_by_id(group_id: int, *, allow_test: bool = False) -> GroupParams:
    for name, gid in GROUP_IDS.items():
        if gid == group_id:
            return get_group(name, allow_test=allow_test)
    raise ConfigurationError(f"unknown group id {group_id:#x}")
