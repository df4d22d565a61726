import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bowforge.errors import NegativeDimension
from bowforge.topology import (
    TopologicalData,
    chern_summary,
    compute_dimensions,
    validate_topology,
)

from _suites import oracle_dimensions, random_valid_topology


def topo(**kw):
    base = dict(n=1, k=1, ell=1.0, lam=(0.3,), m=(1,), nd=(1,), m0=0, z=(0.0,))
    base.update(kw)
    return TopologicalData(**base)


def test_u1_single_nut_is_consistent():
    assert validate_topology(topo()) == []


def test_charge_imbalance_reported():
    report = validate_topology(topo(m=(2,)))
    assert any("charge balance" in v.message for v in report)
    assert all(v.kind == "semantic" for v in report)


def test_duplicate_nut_positions_reported():
    report = validate_topology(topo(k=2, nd=(1, 0), z=(0.0, 0.0)))
    assert any("distinct" in v.message for v in report)


def test_structural_errors_are_distinct():
    report = validate_topology(topo(m=(1, 2)))  # wrong length for n=1
    assert report and all(v.kind == "structural" for v in report)


def test_lambda_ordering_enforced():
    report = validate_topology(topo(n=2, lam=(0.7, 0.3), m=(0, 1)))
    assert any("lam" in v.message for v in report)
    assert validate_topology(topo(n=2, lam=(0.3, 0.7), m=(0, 1))) == []


def test_negative_dimension_flagged_and_raised():
    bad = topo(n=2, lam=(0.3, 0.7), m=(3, -2), m0=0, nd=(1,))
    # d_1 = n(n+1)/2 + m0 - m_1 = 1 + 0 - 3 < 0
    assert any("negative" in v.message for v in validate_topology(bad))
    with pytest.raises(NegativeDimension):
        compute_dimensions(bad)


def test_dimensions_u2_basic():
    t = topo(n=2, lam=(0.25, 0.75), m=(0, 1), nd=(1,), m0=1)
    dims = compute_dimensions(t)
    assert dims.d == (2, 2, 1)
    assert dims.dn == (1, 2)


def test_dimensions_u1_single_nut():
    dims = compute_dimensions(topo())
    assert dims.d == (1, 0)
    assert dims.dn == (0, 1)


def test_dimensions_all_zero_charges():
    t = topo(n=3, k=2, lam=(0.2, 0.4, 0.6), m=(0, 0, 0), nd=(0, 0), m0=0, z=(0.0, 1.0))
    dims = compute_dimensions(t)
    assert dims.d == (0, 0, 0, 0)
    assert dims.dn == (0, 0, 0)


@settings(max_examples=100, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1))
def test_dimension_identities_and_oracle(seed):
    t = random_valid_topology(np.random.default_rng(seed))
    dims = compute_dimensions(t)
    d_expect, dn_expect = oracle_dimensions(t)
    assert list(dims.d) == d_expect
    assert list(dims.dn) == dn_expect
    for i in range(t.n):
        assert dims.d[i] - dims.d[i + 1] == t.m[i]
    for j in range(1, t.k + 1):
        assert dims.dn[j] - dims.dn[j - 1] == t.nd[j - 1]
    assert dims.dn[0] == dims.d[t.n]
    assert dims.dn[t.k] == dims.d[0]
    assert dims.d[0] - dims.d[t.n] == sum(t.nd) == sum(t.m)


@settings(max_examples=30, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=5, allow_nan=False))
def test_dimensions_invariant_under_z_translation(seed, shift):
    t = random_valid_topology(np.random.default_rng(seed))
    shifted = TopologicalData(
        n=t.n, k=t.k, ell=t.ell, lam=t.lam, m=t.m, nd=t.nd, m0=t.m0,
        z=tuple(v + shift for v in t.z),
    )
    assert compute_dimensions(t) == compute_dimensions(shifted)


def test_chern_summary_u2():
    t = topo(n=2, lam=(0.25, 0.75), m=(0, 1), nd=(1,), m0=1)
    c = chern_summary(t)
    assert c.c1 == (1,) and c.c2 == 1 and c.flag_degrees == (0, 1)


def test_chern_summary_zero_charges():
    t = topo(n=2, lam=(0.2, 0.4), m=(0, 0), nd=(0,), m0=0)
    c = chern_summary(t)
    assert c.c1 == (0,) and c.c2 == 0 and c.flag_degrees == (0, 0)


def test_chern_summary_mixed_signs():
    t = topo(n=2, lam=(0.2, 0.4), m=(-1, 1), nd=(0,), m0=2)
    c = chern_summary(t)
    assert c.c1 == (0,) and c.c2 == 2 and c.flag_degrees == (-1, 0)
