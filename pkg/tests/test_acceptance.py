"""Acceptance criteria 1-8, one test each.

Every test records a PASS/FAIL line in RESULTS; conftest prints them in the
terminal summary.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import os
import random
import statistics
import subprocess
import sys
import tempfile
import textwrap
import time
from pathlib import Path

import pytest

import messages
from conftest import FixedRng
from healthpass import wire
from healthpass.crypto.elgamal import KeyPair, elgamal_decrypt, elgamal_encrypt, keygen
from healthpass.crypto.group import get_group, time_window
from healthpass.errors import DecodeError
from healthpass.harness.scenarios import REJECTION_FAMILIES, HarnessConfig, run_scenario
from healthpass.model import QR_CAPACITY, Outcome, TestResult, UploadRecord
from healthpass.protocol.accounting import VERIFY_BREAKDOWN, count_exponentiations
from healthpass.protocol.phases import (
    VerifierPolicy,
    begin_registration,
    holder_accept_download,
    open_result,
    present,
    verify,
)
from healthpass.protocol.stores import SiteStore, site_register
from healthpass.registry import InProcessTransport, RecordStore, RegistryClient, RegistryService

RESULTS = []
TESTS_DIR = Path(__file__).parent


def record(n, ok, detail):
    RESULTS.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# -- 1 -----------------------------------------------------------------------

def _mul_pow(base, e, p):
    """Repeated multiplication, deliberately not pow()."""
    acc = 1
    for _ in range(e):
        acc = acc * base % p
    return acc


def test_criterion_1_small_group_oracle():
    toy = get_group("toy23", allow_test=True)
    p, g = 23, 4
    members = [x for x in range(1, p) if _mul_pow(x, 11, p) == 1]
    started = time.perf_counter()
    mismatches = cases = 0
    for sk in range(1, 11):
        keys = KeyPair.from_secret(sk, toy)
        for d in range(1, 11):
            for m in members:
                cases += 1
                ct = elgamal_encrypt(toy.element(m), keys.pk, FixedRng(d))
                expect = (_mul_pow(g, d, p), m * _mul_pow(_mul_pow(g, sk, p), d, p) % p)
                # brute-force decryption: the unique member m' with m' * c1^sk = c2
                c1sk = _mul_pow(ct.c1.value, sk, p)
                brute = [x for x in members if x * c1sk % p == ct.c2.value]
                if (ct.c1.value, ct.c2.value) != expect or brute != [m] \
                        or elgamal_decrypt(ct, sk).value != m:
                    mismatches += 1
    elapsed = time.perf_counter() - started
    record(1, cases == 1100 and mismatches == 0 and elapsed < 1.0,
           f"{cases} cases, {mismatches} mismatches, {elapsed:.3f}s (limit 1s)")


# -- 2 and 4 -----------------------------------------------------------------

@pytest.fixture(scope="module")
def thousand_runs(tmp_path_factory):
    group = get_group("modp2048")
    r = random.Random(2024)
    issuer = keygen(group, r)
    secret = r.randbytes(32)
    now = 1_700_000_000
    with RecordStore(tmp_path_factory.mktemp("reg") / "registry.log", group) as store:
        service = RegistryService(issuer, store, {"site": secret}, r, clock=lambda: now)
        client = RegistryClient(InProcessTransport(service), group)
        site = SiteStore(group)
        accepted, verify_times, sizes = 0, [], []
        started = time.perf_counter()
        for i in range(1000):
            holder = keygen(group, r)
            now = 1_700_000_000 + i * 977
            ot_id, payload = begin_registration(holder, r)
            sess_id = site_register(wire.b64u_encode(wire.encode(payload, group)), r, site)
            issued = now - r.randrange(1, 6 * 86400)
            result = TestResult(Outcome.NEGATIVE, r.choice(["PCR", "antigen", "LAMP"]), issued - 600, issued)
            client.upload(secret, UploadRecord(sess_id, ot_id, holder.pk, result))
            c = client.download(sess_id)
            holder_accept_download(open_result(c, client.issuer_pk(), ot_id), holder.pk)
            holder_clock = now + r.randrange(-30, 31)  # a little honest drift
            q = present(c, ot_id, holder, holder_clock, 300, r)
            text = wire.to_qr_text(q, group)
            sizes.append(wire.presentation_size(q, group))
            t = time.perf_counter()
            outcome = verify(text, issuer.pk, now, VerifierPolicy())
            verify_times.append(time.perf_counter() - t)
            accepted += outcome.accepted
        total = time.perf_counter() - started
    return accepted, total, verify_times, sizes


def test_criterion_2_end_to_end(thousand_runs):
    accepted, total, times, _ = thousand_runs
    median_ms = 1000 * statistics.median(times)
    record(2, accepted == 1000 and total < 300 and median_ms < 50,
           f"{accepted}/1000 accepted, total {total:.1f}s (limit 300s), "
           f"median verify {median_ms:.1f}ms (limit 50ms)")


def test_criterion_4_communication_budget(thousand_runs):
    sizes = thousand_runs[3]
    analytic = wire.payload_size_report(2048, 3)
    worst = max(s.total for s in sizes)
    worst_ratio = max(s.framing_ratio for s in sizes)
    terms_ok = (analytic.signature, analytic.holder_pk, analytic.ot_id) == (512, 256, 32)
    # measured S and A_pk equal the full width unless an element happens to have leading zero bytes
    measured_ok = all(s.signature <= 512 and s.holder_pk <= 256 and s.ot_id == 32 for s in sizes)
    full_width = sum(s.signature == 512 and s.holder_pk == 256 for s in sizes)
    record(4, worst <= QR_CAPACITY and worst_ratio <= 0.10 and terms_ok and measured_ok,
           f"max {worst} bytes (limit {QR_CAPACITY}), S/A_pk/ot_id = "
           f"{analytic.signature}/{analytic.holder_pk}/{analytic.ot_id}, "
           f"{full_width}/1000 at full width, framing <= {100 * worst_ratio:.1f}% (limit 10%)")


# -- 3 -----------------------------------------------------------------------

def test_criterion_3_adversarial_completeness():
    per_family = {}
    for name in REJECTION_FAMILIES:
        false_accepts = crashes = failed = 0
        for seed in range(1, 101):
            report = run_scenario(name, seed, HarnessConfig())
            false_accepts += report.false_accepts
            crashes += sum(a.label == "crash" for a in report.attempts)
            failed += not report.passed
        per_family[name] = (false_accepts, crashes, failed)
    ok = all(v == (0, 0, 0) for v in per_family.values())
    detail = ", ".join(f"{k} fa={v[0]} crash={v[1]}" for k, v in per_family.items())
    record(3, ok, f"100 seeds x {len(per_family)} families over HTTP; {detail}")


# -- 5 -----------------------------------------------------------------------

def test_criterion_5_computation_accounting():
    counts = count_exponentiations(get_group("modp2048"))
    documented = sum(VERIFY_BREAKDOWN.values())
    ok = (counts["elgamal_encrypt"] == 2 and counts["elgamal_decrypt"] == 1
          and counts["verify"] <= 7 and counts["verify"] == documented and counts["verify_accepted"])
    record(5, ok, f"encrypt {counts['elgamal_encrypt']}, decrypt {counts['elgamal_decrypt']}, "
                  f"verify {counts['verify']} (limit 7, documented {documented})")


# -- 6 -----------------------------------------------------------------------

def _offline_pytest(*targets):
    env = dict(os.environ, HEALTHPASS_OFFLINE="1")
    return subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *targets],
                          cwd=TESTS_DIR.parent, env=env, capture_output=True, text=True)


def test_criterion_6_offline_contract():
    # the CLI suite needs a live registry for setup; its verify step is checked
    # offline inside test_cli.py::test_verify_offline
    suites = _offline_pytest("tests/test_protocol.py", "tests/test_wire.py::test_qr_text_roundtrip")
    scenario = run_scenario("offline_verify", 1)
    # negative control: the guard must turn a real connection attempt into a failure
    with tempfile.TemporaryDirectory(dir=TESTS_DIR) as tmp:
        probe = Path(tmp) / "test_probe.py"
        probe.write_text(textwrap.dedent("""
            import socket
            def test_connect():
                try:
                    socket.create_connection(("127.0.0.1", 9), timeout=1)
                except OSError:
                    pass
        """))
        control = _offline_pytest(str(probe.relative_to(TESTS_DIR.parent)))
    summary = suites.stdout.strip().splitlines()[-1] if suites.stdout.strip() else suites.stderr
    ok = suites.returncode == 0 and scenario.passed and control.returncode != 0
    record(6, ok, f"offline suites: {summary}; offline_verify scenario "
                  f"{'passed' if scenario.passed else 'FAILED'}; network probe "
                  f"{'caught' if control.returncode else 'NOT caught'}")


# -- 7 -----------------------------------------------------------------------

def test_criterion_7_window_semantics():
    group = get_group("modp2048")
    r = random.Random(7)
    policy = VerifierPolicy()
    w, slack = policy.window, policy.window_slack
    from healthpass.crypto.elgamal import keygen as _keygen
    from healthpass.model import RegistrationTicket
    from healthpass.protocol.phases import issue_result

    issuer, holder = _keygen(group, r), _keygen(group, r)
    base = 1_700_000_000 - 1_700_000_000 % w
    disagreements, checks = [], 0
    for phase in (0, 1, w // 2, w - 1):  # holder clock position inside its window
        t = base + phase
        ot_id = r.randbytes(32)
        result = TestResult(Outcome.NEGATIVE, "PCR", t - 7200, t - 3600)
        _, c = issue_result(issuer.sk, RegistrationTicket(ot_id, holder.pk, r.randbytes(16)), result, group, r)
        q = present(c, ot_id, holder, t, w, r)
        for offset in range(-2 * w, 2 * w + 1, 30):
            # oracle: accept iff the window indices differ by at most the slack (inclusive)
            expect = abs(time_window(t + offset, w) - time_window(t, w)) <= slack
            got = verify(q, issuer.pk, t + offset, policy).accepted
            checks += 1
            if got != expect:
                disagreements.append((phase, offset, got))
    record(7, not disagreements,
           f"{checks} offsets in [-{2 * w}, +{2 * w}] step 30s, rule |dw| <= {slack} inclusive, "
           f"{len(disagreements)} disagreements {disagreements[:3]}")


# -- 8 -----------------------------------------------------------------------

def _mutate(data: bytes, r: random.Random) -> bytes:
    op = r.randrange(6)
    b = bytearray(data)
    if op == 0 and b:
        for _ in range(r.randrange(1, 4)):
            i = r.randrange(len(b))
            b[i] ^= 1 << r.randrange(8)
    elif op == 1:
        b = b[:r.randrange(len(b) + 1)]
    elif op == 2:
        i = r.randrange(len(b) + 1)
        b[i:i] = r.randbytes(r.randrange(1, 8))
    elif op == 3 and b:
        i = r.randrange(len(b))
        b[i] = r.choice((0x00, 0xFF, 0x01, 0x7F))
    elif op == 4 and len(b) > 4:
        # rewrite a length prefix
        i = r.randrange(2, len(b) - 1)
        b[i:i + 2] = r.randrange(0x10000).to_bytes(2, "big")
    else:
        b = bytearray(r.randbytes(r.randrange(0, 64)))
    return bytes(b)


def test_criterion_8_codec_robustness():
    group = get_group("modp2048")
    r = random.Random(8)
    kinds = messages.MESSAGE_TYPES
    seeds = [(k, wire.encode(messages.message(k, group, r), group)) for k in kinds for _ in range(20)]
    crashes, accepted, typed = [], 0, 0
    n = 1_000_000
    for i in range(n):
        kind, valid = seeds[i % len(seeds)]
        target = r.choice(kinds) if i % 10 == 0 else kind
        data = _mutate(valid, r)
        try:
            wire.decode(data, target, group)
            accepted += 1
        except DecodeError:
            typed += 1
        except Exception as exc:  # anything untyped counts as a crash
            crashes.append((target.__name__, data.hex()[:40], repr(exc)))
    record(8, not crashes and accepted + typed == n,
           f"{n} fuzzed decodes: {typed} typed rejections, {accepted} accepted, "
           f"{len(crashes)} crashes {crashes[:2]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
