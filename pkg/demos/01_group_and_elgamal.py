"""El Gamal in a group small enough to check by hand, then in the real one."""
import random

from healthpass.crypto.elgamal import KeyPair, elgamal_decrypt, elgamal_encrypt, keygen
from healthpass.crypto.group import get_group

# p = 23, q = 11, g = 4: the squares mod 23 form the order-11 subgroup
toy = get_group("toy23", allow_test=True)
keys = KeyPair.from_secret(3, toy)
print("pk = 4^3 mod 23 =", keys.pk.value)

rng = random.Random(0)
m = toy.element(9)
ct = elgamal_encrypt(m, keys.pk, rng)
print("encrypt 9 ->", (ct.c1.value, ct.c2.value), "-> decrypt", elgamal_decrypt(ct, keys.sk).value)

# non-members never become elements
for x in (5, 22):
    print(x, "in subgroup:", toy.is_member(x))

# same thing at 2048 bits
big = get_group("modp2048")
keys = keygen(big, rng)
m = keygen(big, rng).pk  # any subgroup element will do
assert elgamal_decrypt(elgamal_encrypt(m, keys.pk, rng), keys.sk) == m
print("2048-bit roundtrip ok, q has", big.q.bit_length(), "bits")
