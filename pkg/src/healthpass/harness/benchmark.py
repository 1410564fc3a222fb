"""Timing, exponentiation counts, payload size and issuance scaling."""

from __future__ import annotations

import os
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Sequence

from healthpass import wire
from healthpass.crypto.elgamal import keygen
from healthpass.crypto.group import get_group
from healthpass.model import Outcome, RegistrationTicket, TestResult
from healthpass.protocol.accounting import count_exponentiations
from healthpass.protocol.phases import VerifierPolicy, issue_result, present, verify

NOW = 1_700_000_100


def _issue_batch(args) -> int:
    group_name, seed, n = args
    group = get_group(group_name, allow_test=True)
    rng = random.Random(seed)
    issuer = keygen(group, rng)
    holder = keygen(group, rng)
    result = TestResult(Outcome.NEGATIVE, "PCR", NOW - 7200, NOW - 3600)
    for _ in range(n):
        ticket = RegistrationTicket(rng.randbytes(32), holder.pk, rng.randbytes(16))
        issue_result(issuer.sk, ticket, result, group, rng)
    return n


def issuance_throughput(workers: int, per_worker: int = 20, group: str = "modp2048") -> float:
    """Issuances per second with ``workers`` independent processes."""
    jobs = [(group, i, per_worker) for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        list(pool.map(_issue_batch, [(group, 10_000 + w, 1) for w in range(workers)]))  # warm up
        started = time.perf_counter()
        done = sum(pool.map(_issue_batch, jobs))
        elapsed = time.perf_counter() - started
    return done / elapsed


def verify_timings(n: int = 50, group: str = "modp2048", seed: int = 0) -> Sequence[float]:
    grp = get_group(group, allow_test=True)
    rng = random.Random(seed)
    issuer, holder = keygen(grp, rng), keygen(grp, rng)
    result = TestResult(Outcome.NEGATIVE, "PCR", NOW - 7200, NOW - 3600)
    policy = VerifierPolicy()
    times = []
    for _ in range(n):
        ot_id = rng.randbytes(32)
        _, c = issue_result(issuer.sk, RegistrationTicket(ot_id, holder.pk, rng.randbytes(16)),
                            result, grp, rng)
        text = wire.to_qr_text(present(c, ot_id, holder, NOW, policy.window, rng), grp)
        started = time.perf_counter()
        outcome = verify(text, issuer.pk, NOW, policy)
        times.append(time.perf_counter() - started)
        assert outcome.accepted
    return times


def benchmark(verifications: int = 50, workers: Sequence[int] = (1, 2, 4),
              per_worker: int = 20, group: str = "modp2048") -> Dict[str, object]:
    times = verify_timings(verifications, group)
    grp = get_group(group, allow_test=True)
    rng = random.Random(1)
    issuer, holder = keygen(grp, rng), keygen(grp, rng)
    ot_id = rng.randbytes(32)
    _, c = issue_result(issuer.sk, RegistrationTicket(ot_id, holder.pk, rng.randbytes(16)),
                        TestResult(Outcome.NEGATIVE, "PCR", NOW - 7200, NOW - 3600), grp, rng)
    q = present(c, ot_id, holder, NOW, VerifierPolicy().window, rng)
    throughput = {w: issuance_throughput(w, per_worker, group) for w in workers}
    return {
        "group": group,
        "cpu_count": os.cpu_count(),
        "verify_ms_median": 1000 * statistics.median(times),
        "verify_ms_p95": 1000 * sorted(times)[int(0.95 * (len(times) - 1))],
        "exponentiations": count_exponentiations(grp),
        "presentation_bytes": len(wire.encode(q, grp)),
        "size_report": wire.presentation_size(q, grp).as_dict(),
        "issuance_per_second": throughput,
        "scaling": {w: throughput[w] / throughput[workers[0]] for w in workers},
    }
