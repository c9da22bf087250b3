import numpy as np
import pytest

from shufflab import make_rng
from shufflab.oracles import ORACLE_CHECKS, family_gate, run_checks


def test_family_gate_small_family_strict():
    passed, _ = family_gate(np.array([0.1, -2.9, 1.5]))
    assert passed
    passed, _ = family_gate(np.array([0.1, 3.2]))
    assert not passed


def test_family_gate_large_family_tolerates_chance_exceedances():
    rng = make_rng(200)
    z = rng.standard_normal(200_000)
    passed, detail = family_gate(z)
    assert passed, detail


def test_family_gate_catches_shifted_block():
    rng = make_rng(201)
    z = rng.standard_normal(200_000)
    z[:500] += 10.0  # a defect shifts a block of comparisons far out
    passed, _ = family_gate(z)
    assert not passed


def test_family_gate_catches_single_wild_score():
    rng = make_rng(202)
    z = rng.standard_normal(200_000)
    z[7] = 40.0
    passed, _ = family_gate(z)
    assert not passed


def test_run_checks_unknown_name():
    with pytest.raises(KeyError):
        run_checks(["no-such-check"])


def test_fast_checks_pass():
    for name in ("inner-expansion", "gauss-exp", "gauss-quad", "submatrix-density"):
        res = ORACLE_CHECKS[name](seed=7)
        assert res.passed, f"{name}: {res.detail}"
        assert res.name == name
