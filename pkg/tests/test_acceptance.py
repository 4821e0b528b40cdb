"""Acceptance criteria A1-A13 at their pinned tolerances.

Each test runs (or reuses) the experiment that carries the criterion and
asserts every metric row tagged with it. One verdict line per criterion is
printed and repeated in the terminal summary.
"""

import pytest
from conftest import ACCEPTANCE_LINES

from neumann_hardy.lab import make_config, run_experiment

CRITERIA = {
    "A1": ["reflection-identities"],
    "A2": ["norm-equivalence"],
    "A3": ["norm-equivalence"],
    "A4": ["kernel-identities"],
    "A5": ["kernel-identities"],
    "A6": ["kernel-identities"],
    "A7a": ["bmo-inclusion"],
    "A7b": ["counterexample"],
    "A8": ["two-bump"],
    "A9": ["riesz-mass"],
    "A10": ["factorize-atom"],
    "A11": ["weak-factorize"],
    "A12": ["commutator-bound", "duality-pairing"],
    "A13": ["fs-synthesis"],
}

_cache = {}


def _report(name):
    if name not in _cache:
        _cache[name] = run_experiment(make_config(name))
    return _cache[name]


@pytest.mark.parametrize("criterion", list(CRITERIA))
def test_acceptance(criterion):
    metrics = [m for exp in CRITERIA[criterion] for m in _report(exp).by_criterion(criterion)]
    assert metrics, f"no metric rows tagged {criterion}"
    failed = [m for m in metrics if not m.passed]
    worst = failed[0] if failed else metrics[0]
    line = (
        f"{criterion} {'PASS' if not failed else 'FAIL'}  "
        f"{len(metrics) - len(failed)}/{len(metrics)} checks; "
        f"{worst.name} = {worst.value:.4g} {worst.op} {worst.tolerance:g}"
    )
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failed, "; ".join(f"{m.name} = {m.value:.4g} (need {m.op} {m.tolerance:g})" for m in failed)
