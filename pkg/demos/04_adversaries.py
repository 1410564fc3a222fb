"""Run every attack scenario once and print what each attempt produced."""
from healthpass.harness import SCENARIOS, HarnessConfig, run_scenario
from healthpass.protocol.accounting import VERIFY_BREAKDOWN, count_exponentiations

config = HarnessConfig(transport="inprocess")
for name in sorted(SCENARIOS):
    report = run_scenario(name, seed=1, config=config)
    print(f"{name:24s} {'pass' if report.passed else 'FAIL'}  "
          f"{len(report.attempts)} attempts, {report.false_accepts} false accepts")
    for a in report.attempts[:3]:
        print(f"    {a.label:36s} -> {a.observed}")

# where the exponentiations in one verification go
counts = count_exponentiations()
print("\nverify:", counts["verify"], "exponentiations")
for step, n in VERIFY_BREAKDOWN.items():
    print(f"    {n}  {step}")
