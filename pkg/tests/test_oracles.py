import json

import pytest

from mlcircle.oracles import FAST, REGISTRY, run_oracle

SLOW = [n for n in REGISTRY if n not in FAST]


@pytest.mark.parametrize("name", FAST)
def test_oracle(name):
    r = run_oracle(name)
    json.dumps(r.to_json())
    assert r.passed, f"{name}: expected {r.expected}, actual {r.actual}, tol {r.tol}"


@pytest.mark.slow
@pytest.mark.parametrize("name", SLOW)
def test_oracle_slow(name):
    r = run_oracle(name)
    assert r.passed, f"{name}: expected {r.expected}, actual {r.actual}, tol {r.tol}"
