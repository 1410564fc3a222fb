from healthpass.harness.benchmark import benchmark
from healthpass.harness.network import NetworkAttempt, no_network
from healthpass.harness.scenarios import (
    REJECTION_FAMILIES,
    REQUIREMENTS,
    SCENARIOS,
    Attempt,
    HarnessConfig,
    RunReport,
    check_reproducible,
    requirement_coverage,
    run_scenario,
)

__all__ = [
    "Attempt", "HarnessConfig", "NetworkAttempt", "REJECTION_FAMILIES", "REQUIREMENTS",
    "RunReport", "SCENARIOS", "benchmark", "check_reproducible", "no_network",
    "requirement_coverage", "run_scenario",
]
