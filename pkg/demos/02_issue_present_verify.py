"""One health pass from registration to the door, with no registry in between."""
import random
import time

from healthpass import wire
from healthpass.crypto.elgamal import keygen
from healthpass.crypto.group import get_group
from healthpass.model import Outcome, RegistrationTicket, TestResult
from healthpass.protocol.phases import (
    VerifierPolicy,
    begin_registration,
    holder_accept_download,
    issue_result,
    open_result,
    present,
    verify,
)

group = get_group("modp2048")
rng = random.Random(42)
now = int(time.time())

issuer = keygen(group, rng)
holder = keygen(group, rng)

# the holder shows (ot_id, A_pk) at the testing site and keeps ot_id to itself
ot_id, payload = begin_registration(holder, rng)
ticket = RegistrationTicket(ot_id, payload.holder_pk, rng.randbytes(16))

# the issuer signs the result under a key blinded by ot_id and seals it
result = TestResult(Outcome.NEGATIVE, "PCR", now - 7200, now - 3600)
sess_id, c = issue_result(issuer.sk, ticket, result, group, rng)

# only someone holding ot_id can open C
holder_accept_download(open_result(c, issuer.pk, ot_id), holder.pk)

q = present(c, ot_id, holder, now, 300, rng)
text = wire.to_qr_text(q, group)
print("QR text:", len(text), "chars,", len(wire.b64u_decode(text)), "bytes")
print(wire.presentation_size(q, group).as_dict())

print("verify now:       ", verify(text, issuer.pk, now).reason.value)
print("verify +4 min:    ", verify(text, issuer.pk, now + 240).reason.value)
print("verify +20 min:   ", verify(text, issuer.pk, now + 1200).reason.value)
print("  with a sweep:   ", verify(text, issuer.pk, now + 1200, VerifierPolicy(diagnostic_sweep=5)).reason.value)

# a second presentation of the same credential shares nothing visible but ot_id and A_pk
q2 = present(c, ot_id, holder, now, 300, rng)
print("signatures differ:", q.sig != q2.sig)
