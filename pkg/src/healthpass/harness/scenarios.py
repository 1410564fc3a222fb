"""Seeded honest and adversarial multi-party runs against the full stack.

Every scenario builds its own :class:`Stack` (issuer keys, record store in
a temporary directory, registry server on an ephemeral port, testing site)
and returns a :class:`RunReport` of (expected, observed) verification
attempts.  Clocks and randomness are derived from the seed, so a report's
content hash is reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import inspect
import json
import random
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from healthpass import wire
from healthpass.crypto.elgamal import KeyPair, keygen
from healthpass.crypto.group import ExpCounter, GroupParams, encode_to_group, get_group, time_window
from healthpass.crypto.signatures import nr_sign
from healthpass.crypto.symmetric import aead_open, aead_seal
from healthpass.errors import HealthPassError, NotFoundError, OpaqueError
from healthpass.harness.network import no_network
from healthpass.model import (
    QR_CAPACITY,
    EncryptedResult,
    Outcome,
    Presentation,
    ResultPayload,
    SealedPayload,
    TestResult,
    UploadRecord,
)
from healthpass.protocol.phases import (
    RESULT_AD,
    Reason,
    VerifierPolicy,
    begin_registration,
    holder_accept_download,
    open_result,
    present,
    result_key,
    verify,
    window_element,
)
from healthpass.protocol.stores import SiteStore, site_register
from healthpass.registry import (
    FailingTransport,
    HttpTransport,
    InProcessTransport,
    RecordStore,
    RegistryClient,
    RegistryService,
    ServerThread,
)

OK = (Reason.OK.value,)
REJECT = tuple(r.value for r in Reason if r is not Reason.OK)
VERIFY_EXP_BUDGET = 7
BASE_TIME = 1_700_000_000


@dataclass(frozen=True)
class HarnessConfig:
    group: str = "modp2048"
    transport: str = "http"  # "http" (ephemeral-port server) or "inprocess"
    policy: VerifierPolicy = VerifierPolicy()
    records: int = 5  # uploads per instance in the storage and probe scenarios
    rounds: int = 1  # repetitions of each attack strategy per instance
    allow_test_group: bool = False


@dataclass(frozen=True)
class Attempt:
    label: str
    expected: Tuple[str, ...]
    observed: str

    @property
    def ok(self) -> bool:
        return self.observed in self.expected


@dataclass
class RunReport:
    scenario: str
    seed: int
    attempts: List[Attempt] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.attempts) and all(a.ok for a in self.attempts)

    @property
    def accepted(self) -> int:
        return sum(a.observed == Reason.OK.value for a in self.attempts)

    @property
    def false_accepts(self) -> int:
        return sum(a.observed == Reason.OK.value and not a.ok for a in self.attempts)

    def content(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "attempts": [dataclasses.asdict(a) for a in self.attempts],
            "metrics": dict(sorted(self.metrics.items())),
        }

    def content_hash(self) -> str:
        """Hash of everything except wall-clock timing."""
        blob = json.dumps(self.content(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_json(self) -> dict:
        return {**self.content(), "passed": self.passed, "wall_time": round(self.wall_time, 4),
                "hash": self.content_hash()}


@dataclass
class Enrollment:
    holder: KeyPair
    ot_id: bytes
    sess_id: bytes
    c: EncryptedResult
    result: TestResult


class Stack:
    """One isolated deployment: issuer, registry, testing site and actors."""

    def __init__(self, scenario: str, seed: int, config: HarnessConfig, workdir: Path) -> None:
        self.seed = seed
        self.config = config
        self.policy = config.policy
        self.group: GroupParams = get_group(config.group, allow_test=config.allow_test_group)
        self._scenario = scenario
        self.now = BASE_TIME + self.rng("clock").randrange(10**6)
        self.counter = ExpCounter()
        self.q_sizes: List[int] = []

        self.issuer = keygen(self.group, self.rng("issuer"))
        self.site_secret = self.rng("site-secret").randbytes(32)
        self.store = RecordStore(workdir / "registry.log", self.group)
        self.service = RegistryService(self.issuer, self.store, {"site-1": self.site_secret},
                                       self.rng("registry"), clock=lambda: self.now)
        self.server: Optional[ServerThread] = None
        if config.transport == "http":
            self.server = ServerThread(self.service).__enter__()
            self.transport = HttpTransport(self.server.url)
        else:
            self.transport = InProcessTransport(self.service)
        self.client = RegistryClient(self.transport, self.group)
        self.site = SiteStore(self.group)
        self._site_rng = self.rng("site")
        self._holder_rngs: Dict[str, random.Random] = {}

    def rng(self, actor: str) -> random.Random:
        return random.Random(f"{self._scenario}/{self.seed}/{actor}")

    def holder_rng(self, name: str) -> random.Random:
        return self._holder_rngs.setdefault(name, self.rng(f"holder-{name}"))

    def close(self) -> None:
        if self.server is not None:
            self.server.__exit__(None, None, None)
        self.store.close()

    # -- honest actor steps -------------------------------------------------

    def new_holder(self, name: str) -> KeyPair:
        return keygen(self.group, self.holder_rng(name))

    def result(self, outcome: Outcome = Outcome.NEGATIVE, age: int = 3600) -> TestResult:
        issued = self.now - age
        return TestResult(outcome, "PCR", issued - 1800, issued)

    def enroll(self, holder: KeyPair, name: str, result: TestResult) -> Enrollment:
        ot_id, payload = begin_registration(holder, self.holder_rng(name))
        qr_text = wire.b64u_encode(wire.encode(payload, self.group))
        sess_id = site_register(qr_text, self._site_rng, self.site)
        self.client.upload(self.site_secret, UploadRecord(sess_id, ot_id, holder.pk, result))
        c = self.client.download(sess_id)
        issuer_pk = self.client.issuer_pk()
        holder_accept_download(open_result(c, issuer_pk, ot_id), holder.pk)
        return Enrollment(holder, ot_id, sess_id, c, result)

    def present(self, e: Enrollment, name: str, at: Optional[int] = None,
                c: Optional[EncryptedResult] = None, holder: Optional[KeyPair] = None) -> Presentation:
        q = present(c or e.c, e.ot_id, holder or e.holder, self.now if at is None else at,
                    self.policy.window, self.holder_rng(name))
        self.q_sizes.append(len(wire.encode(q, self.group)))
        return q

    def verify(self, q, at: Optional[int] = None, policy: Optional[VerifierPolicy] = None) -> str:
        return verify(q, self.issuer.pk, self.now if at is None else at,
                      policy or self.policy, self.counter).reason.value


# -- scenario bodies -----------------------------------------------------------

def _happy_path(s: Stack) -> List[Attempt]:
    out = []
    alice = s.new_holder("alice")
    e = s.enroll(alice, "alice", s.result())
    out.append(Attempt("fresh_negative", OK, s.verify(s.present(e, "alice"))))

    # every outcome at fresh and boundary age, under a policy accepting all outcomes
    permissive = dataclasses.replace(s.policy, accepted_outcomes=frozenset(Outcome))
    for outcome in Outcome:
        for label, age in (("fresh", 60), ("boundary_age", s.policy.max_result_age)):
            e = s.enroll(alice, "alice", s.result(outcome, age))
            q = s.present(e, "alice")
            out.append(Attempt(f"{outcome.value}_{label}", OK, s.verify(q, policy=permissive)))

    e = s.enroll(alice, "alice", s.result())
    probe = ExpCounter()
    verify(s.present(e, "alice"), s.issuer.pk, s.now, s.policy, probe)
    out.append(Attempt("verify_exponentiations", ("within_budget",),
                       "within_budget" if probe.total <= VERIFY_EXP_BUDGET else f"count={probe.total}"))
    out.append(Attempt("presentation_size", ("within_budget",),
                       "within_budget" if max(s.q_sizes) <= QR_CAPACITY else f"bytes={max(s.q_sizes)}"))
    fields = tuple(f.name for f in dataclasses.fields(TestResult))
    minimal = fields == ("outcome", "test_type", "specimen_collected_at", "result_issued_at")
    out.append(Attempt("result_schema", ("minimal",), "minimal" if minimal else repr(fields)))
    return out


def _reseal(e: Enrollment, group: GroupParams, rng: random.Random,
            edit: Callable[[TestResult], TestResult]) -> EncryptedResult:
    """What a holder who knows ot_id can do: open C, edit R, seal it again."""
    key = result_key(e.ot_id)
    sealed = wire.decode(aead_open(key, e.c.nonce, e.c.ciphertext, RESULT_AD), SealedPayload, group)
    payload = wire.decode(sealed.payload, ResultPayload, group)
    forged = wire.encode(ResultPayload(edit(payload.result), payload.holder_pk), group)
    body = wire.encode(SealedPayload(forged, sealed.signature), group)
    nonce = rng.randbytes(12)
    return EncryptedResult(nonce, aead_seal(key, nonce, body, RESULT_AD))


def _altered_result(s: Stack) -> List[Attempt]:
    out = []
    mallory = s.new_holder("mallory")
    e = s.enroll(mallory, "mallory", s.result(Outcome.POSITIVE, age=3600))
    rng = s.rng("attacker")
    expect = (Reason.ISSUER_CHECK_FAILED.value,)

    to_negative = _reseal(e, s.group, rng, lambda r: dataclasses.replace(r, outcome=Outcome.NEGATIVE))
    out.append(Attempt("reseal_outcome", expect, s.verify(s.present(e, "mallory", c=to_negative))))

    stale = s.enroll(mallory, "mallory", s.result(Outcome.NEGATIVE, age=10 * 86400))
    refreshed = _reseal(stale, s.group, rng, lambda r: dataclasses.replace(
        r, result_issued_at=s.now - 60, specimen_collected_at=s.now - 120))
    out.append(Attempt("reseal_timestamp", expect,
                       s.verify(s.present(stale, "mallory", c=refreshed))))

    # raw bit flip inside the region of the ciphertext that carries R
    result_len = len(wire.encode(e.result, s.group))
    start = 2 * (wire.HEADER_SIZE + wire.PREFIX_SIZE)
    bit = rng.randrange(result_len * 8)
    ct = bytearray(e.c.ciphertext)
    ct[start + bit // 8] ^= 1 << (bit % 8)
    flipped = EncryptedResult(e.c.nonce, bytes(ct))
    out.append(Attempt("bitflip_result", expect, s.verify(s.present(e, "mallory", c=flipped))))
    return out


def _borrowed_credential(s: Stack) -> List[Attempt]:
    out = []
    alice, bob = s.new_holder("alice"), s.new_holder("bob")
    ea = s.enroll(alice, "alice", s.result())
    s.enroll(bob, "bob", s.result(Outcome.POSITIVE))
    later = s.now + s.policy.window * (s.policy.window_slack + 1) + 1
    message = encode_to_group(wire.encode(ea.c, s.group), s.group) * window_element(
        time_window(s.now, s.policy.window), s.group)

    for i in range(s.config.rounds):
        # Bob wraps Alice's C and ot_id in a presentation signed with his own key
        rewrapped = s.present(ea, "bob", holder=bob)
        out.append(Attempt(f"rewrap_under_own_key_{i}", (Reason.HOLDER_KEY_MISMATCH.value,),
                           s.verify(rewrapped)))

        q_alice = s.present(ea, "alice")
        swapped = dataclasses.replace(q_alice, holder_pk=bob.pk)
        out.append(Attempt(f"replay_with_own_pk_{i}", (Reason.BAD_SIGNATURE.value,),
                           s.verify(swapped)))

        # Bob signs the correct message for Alice's presentation, keeping her key in place
        aux = ea.ot_id + alice.pk.to_bytes() + bytes((q_alice.version,))
        resigned = dataclasses.replace(q_alice, sig=nr_sign(message, aux, bob.sk, s.holder_rng("bob")))
        out.append(Attempt(f"resign_alice_presentation_{i}", (Reason.BAD_SIGNATURE.value,),
                           s.verify(resigned)))

        out.append(Attempt(f"replay_screenshot_later_{i}", (Reason.BAD_SIGNATURE.value,),
                           s.verify(q_alice, at=later)))
    return out


def _replay_stale(s: Stack) -> List[Attempt]:
    alice = s.new_holder("alice")
    e = s.enroll(alice, "alice", s.result())
    q = s.present(e, "alice")
    beyond = s.policy.window * (s.policy.window_slack + 1) + 1
    diagnostic = dataclasses.replace(s.policy, diagnostic_sweep=2)
    return [
        Attempt("offset_0", OK, s.verify(q)),
        Attempt("offset_plus_beyond", (Reason.BAD_SIGNATURE.value,), s.verify(q, at=s.now + beyond)),
        Attempt("offset_minus_beyond", (Reason.BAD_SIGNATURE.value,), s.verify(q, at=s.now - beyond)),
        Attempt("diagnostic_stale", (Reason.STALE_WINDOW.value,),
                s.verify(q, at=s.now + beyond, policy=diagnostic)),
    ]


def frame_regions(frame: bytes) -> List[Tuple[str, int, int]]:
    """(name, start, end) for the header, each length prefix and each field body."""
    regions = [("header", 0, wire.HEADER_SIZE)]
    pos = wire.HEADER_SIZE
    i = 0
    while pos < len(frame):
        n = int.from_bytes(frame[pos:pos + wire.PREFIX_SIZE], "big")
        regions.append((f"prefix{i}", pos, pos + wire.PREFIX_SIZE))
        if n:
            regions.append((f"field{i}", pos + wire.PREFIX_SIZE, pos + wire.PREFIX_SIZE + n))
        pos += wire.PREFIX_SIZE + n
        i += 1
    return regions


def _tampered_presentation(s: Stack) -> List[Attempt]:
    alice = s.new_holder("alice")
    e = s.enroll(alice, "alice", s.result())
    raw = wire.encode(s.present(e, "alice"), s.group)
    rng = s.rng("tamper")
    out = [Attempt("untouched", OK, s.verify(raw))]
    for name, start, end in frame_regions(raw):
        bit = rng.randrange((end - start) * 8)
        data = bytearray(raw)
        data[start + bit // 8] ^= 1 << (bit % 8)
        out.append(Attempt(f"flip_{name}", REJECT, s.verify(bytes(data))))
    return out


def _otid_probe(s: Stack) -> List[Attempt]:
    out = []
    rng = s.rng("probe")
    enrolled = [s.enroll(s.new_holder(f"h{i}"), f"h{i}", s.result()) for i in range(s.config.records)]
    for i, e in enumerate(enrolled):
        c = s.client.download(e.sess_id)  # downloads are public by design
        try:
            open_result(c, s.issuer.pk, rng.randbytes(32))
            observed = "opened"
        except OpaqueError:
            observed = "opaque"
        out.append(Attempt(f"guess_ot_id_{i}", ("opaque",), observed))

    try:
        s.client.download(rng.randbytes(16))
        observed = "found"
    except NotFoundError:
        observed = "not_found"
    out.append(Attempt("random_sess_id", ("not_found",), observed))

    # registered at the site but never uploaded vs. never existed
    holder = s.new_holder("late")
    _, payload = begin_registration(holder, s.holder_rng("late"))
    pending = site_register(payload, s._site_rng, s.site)
    a = s.transport.request("GET", f"/v1/records/{wire.b64u_encode(pending)}")
    b = s.transport.request("GET", f"/v1/records/{wire.b64u_encode(rng.randbytes(16))}")
    out.append(Attempt("constant_not_found", ("identical",), "identical" if a == b else "distinct"))
    return out


def _storage_privacy(s: Stack) -> List[Attempt]:
    enrolled = [s.enroll(s.new_holder(f"h{i}"), f"h{i}", s.result()) for i in range(s.config.records)]
    image = s.store.path.read_bytes()
    out = []
    for i, e in enumerate(enrolled):
        secrets_ = {
            "result": wire.encode(e.result, s.group),
            "holder_pk": e.holder.pk.to_bytes(),
            "ot_id": e.ot_id,
        }
        leaks = [k for k, v in secrets_.items() if v in image]
        out.append(Attempt(f"record_{i}_plaintext", ("clean",), ",".join(leaks) or "clean"))

    # the image is exactly the stored records re-encoded: nothing else at rest
    rebuilt = b""
    for record in s.store:
        frame = wire.encode(record, s.group)
        rebuilt += len(frame).to_bytes(4, "big") + frame
    out.append(Attempt("image_schema", ("exact",), "exact" if rebuilt == image else "extra_bytes"))
    return out


def _offline_verify(s: Stack) -> List[Attempt]:
    alice = s.new_holder("alice")
    e = s.enroll(alice, "alice", s.result())
    failing = FailingTransport()
    s.client.transport = failing  # any registry call from here on fails
    with no_network() as attempts:
        q = s.present(e, "alice")
        observed = s.verify(wire.to_qr_text(q, s.group))
    out = [
        Attempt("present_and_verify_offline", OK, observed),
        Attempt("network_attempts", ("0",), str(len(attempts) + failing.attempts)),
    ]
    params = set(inspect.signature(verify).parameters)
    has_registry = bool(params & {"client", "transport", "registry", "server"})
    out.append(Attempt("verifier_registry_interface", ("absent",),
                       "present" if has_registry else "absent"))
    return out


@dataclass(frozen=True)
class ScenarioSpec:
    run: Callable[[Stack], List[Attempt]]
    requirements: Tuple[str, ...]
    description: str


SCENARIOS: Dict[str, ScenarioSpec] = {
    "happy_path": ScenarioSpec(_happy_path, ("F3", "P2"),
                               "honest runs over every outcome and age boundary"),
    "altered_result": ScenarioSpec(_altered_result, ("F4",),
                                   "holder edits R inside C"),
    "borrowed_credential": ScenarioSpec(_borrowed_credential, ("F4",),
                                        "holder B uses holder A's credential"),
    "replay_stale": ScenarioSpec(_replay_stale, ("F4",),
                                 "presentation replayed outside the window slack"),
    "tampered_presentation": ScenarioSpec(_tampered_presentation, ("F4",),
                                          "single-bit flips in every field of Q"),
    "otid_probe": ScenarioSpec(_otid_probe, ("P3", "P4"),
                               "semi-honest party fetches records without ot_id"),
    "storage_privacy": ScenarioSpec(_storage_privacy, ("P4",),
                                    "server image scanned for plaintext"),
    "offline_verify": ScenarioSpec(_offline_verify, ("F1", "F2", "P1"),
                                   "present and verify with the network disabled"),
}
REJECTION_FAMILIES = ("altered_result", "borrowed_credential", "replay_stale",
                      "tampered_presentation", "otid_probe", "storage_privacy")
REQUIREMENTS = ("F1", "F2", "F3", "F4", "P1", "P2", "P3", "P4")


def requirement_coverage() -> Dict[str, List[str]]:
    """Requirement -> scenarios asserting it; raises if any requirement is unmapped."""
    coverage: Dict[str, List[str]] = {r: [] for r in REQUIREMENTS}
    for name, spec in SCENARIOS.items():
        for req in spec.requirements:
            coverage[req].append(name)
    missing = [r for r, names in coverage.items() if not names]
    if missing:
        raise HealthPassError(f"requirements without a scenario: {missing}")
    return coverage


def run_scenario(name: str, seed: int, config: HarnessConfig = HarnessConfig()) -> RunReport:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}")
    report = RunReport(name, seed)
    started = time.perf_counter()
    stack = None
    with tempfile.TemporaryDirectory(prefix="healthpass-") as tmp:
        try:
            stack = Stack(name, seed, config, Path(tmp))
            report.attempts = SCENARIOS[name].run(stack)
        except Exception as exc:  # a crash is a failed run, not a harness abort
            report.attempts.append(Attempt("crash", ("no_crash",), f"{type(exc).__name__}: {exc}"))
        finally:
            if stack is not None:
                stack.close()
    report.wall_time = time.perf_counter() - started
    if stack is not None:
        report.metrics = {
            "verify_exponentiations": stack.counter.total,
            "max_presentation_bytes": max(stack.q_sizes, default=0),
        }
    return report


def check_reproducible(name: str, seed: int, config: HarnessConfig = HarnessConfig()) -> bool:
    return run_scenario(name, seed, config).content_hash() == run_scenario(name, seed, config).content_hash()
