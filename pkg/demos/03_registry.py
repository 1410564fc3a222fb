"""A registry over real HTTP: a site uploads, the holder downloads by session id."""
import random
import tempfile
import time
from pathlib import Path

from healthpass.crypto.elgamal import keygen
from healthpass.crypto.group import get_group
from healthpass.model import Outcome, TestResult, UploadRecord
from healthpass.protocol.phases import begin_registration, open_result, present, verify
from healthpass.registry import HttpTransport, RecordStore, RegistryClient, RegistryService, ServerThread

group = get_group("modp2048")
rng = random.Random(7)
now = int(time.time())
secret = rng.randbytes(32)  # site credential, shared with the issuer out of band

tmp = Path(tempfile.mkdtemp())
store = RecordStore(tmp / "registry.log", group)
service = RegistryService(keygen(group, rng), store, {"site-1": secret}, rng)

with ServerThread(service) as server:
    client = RegistryClient(HttpTransport(server.url), group)
    holder = keygen(group, rng)
    ot_id, payload = begin_registration(holder, rng)
    sess_id = rng.randbytes(16)

    result = TestResult(Outcome.NEGATIVE, "antigen", now - 1800, now - 600)
    client.upload(secret, UploadRecord(sess_id, ot_id, holder.pk, result))
    c = client.download(sess_id)
    issuer_pk = client.issuer_pk()
    print("server", server.url, "holds", len(store), "record(s)")

# the server is gone; presenting and verifying need nothing from it
print("opened:", open_result(c, issuer_pk, ot_id)[0])
q = present(c, ot_id, holder, now, 300, rng)
print("verify:", verify(q, issuer_pk, now).reason.value)

# what sits on disk is the session id and an AEAD blob
image = (tmp / "registry.log").read_bytes()
print("log bytes:", len(image), "| ot_id on disk:", ot_id in image)
store.close()
