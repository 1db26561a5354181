"""Acceptance criteria at full scale, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are also collected into
the pytest terminal summary.  Run directly with ``python tests/test_acceptance.py``
for the same report without pytest.
"""

import sys

import pytest

from ppsc import verify

CRITERIA = [
    (1, "example", "worked example symbolic outputs and covariance"),
    (2, "conservation", "sum conservation over 10^4 D-PPSC and R-PPSC runs"),
    (3, "non_identifiability", "rank(C) <= n-1, zero tail row, kernel certificate"),
    (4, "noise_structure", "D full column rank, D D^T tree Laplacian"),
    (5, "dependence", "dependence predicates equal the symbolic oracle"),
    (6, "covariance", "empirical covariance within 5 standard errors of sigma^2 L"),
    (7, "differential_privacy", "log density ratio below the epsilon bound"),
    (8, "adversary", "MLE singular with truth in solution set; MAP unique"),
    (9, "mean_limit", "expected state limit of randomized gossip"),
    (10, "encryption", "encryption probability and encryption time bounds"),
    (11, "tradeoff", "closed-form trade-off optimum"),
    (12, "reproducibility", "byte-identical repeated runs"),
]


def evaluate(number, name, description):
    """Run one criterion; the suite's wall-clock limit is part of the criterion."""
    result = verify.run_suite(name, "full")
    in_time = result.limit is None or result.elapsed <= result.limit
    passed = result.passed and in_time
    failed = [c.label for c in result.checks if not c.passed]
    note = f" failed: {'; '.join(failed)}" if failed else ""
    if not in_time:
        note += f" over time limit {result.limit}s"
    status = "PASS" if passed else "FAIL"
    return passed, f"criterion {number:2d} {status} [{result.elapsed:6.1f}s] {description}{note}", result


@pytest.mark.parametrize("number,name,description", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_criterion(number, name, description):
    from conftest import ACCEPTANCE_LINES

    passed, line, result = evaluate(number, name, description)
    print(line)
    ACCEPTANCE_LINES.append(line)
    details = "\n".join(f"  {'ok ' if c.passed else 'BAD'} {c.label}: {c.value}" for c in result.checks)
    assert passed, f"{line}\n{details}"


if __name__ == "__main__":
    ok = True
    for number, name, description in CRITERIA:
        passed, line, _ = evaluate(number, name, description)
        print(line, flush=True)
        ok &= passed
    sys.exit(0 if ok else 1)
