import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridqc.response import EPS, ResponseKind, response, sigmoid

from oracles import table_response

QUANTUM = [ResponseKind.QUADRATIC, ResponseKind.BIASED_QUADRATIC,
           ResponseKind.BIASED_CENTERED_QUADRATIC, ResponseKind.LINEAR]
unit = st.floats(-1.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("kind, ip, expected", [
    ("q", 1.0, 1 - EPS),
    ("q", 0.5, 0.25),
    ("bq", 0.5, 0.625),
    ("bcq", -1.0, 1 - EPS),
    ("l", 0.5, 0.75),
    ("sigmoid", 0.0, 0.5),
])
def test_examples(kind, ip, expected):
    assert response(kind, ip) == pytest.approx(expected, abs=1e-15)


def test_serialized_names():
    assert [k.value for k in ResponseKind] == ["q", "bq", "bcq", "l", "sigmoid"]
    assert ResponseKind.parse("BQ") is ResponseKind.BIASED_QUADRATIC
    with pytest.raises(ValueError, match="unknown response kind"):
        ResponseKind.parse("cubic")


def test_boundary_values():
    assert response("q", 0.0) == EPS
    assert response("l", -1.0) == EPS
    assert response("l", 1.0) == 1 - EPS


def test_negated_linear_flag():
    assert response("l", 0.5, negated_linear=True) == pytest.approx(0.25)
    assert response("l", 0.5) == pytest.approx(0.75)


@pytest.mark.parametrize("kind", QUANTUM)
@pytest.mark.parametrize("ip", [-1.0001, 1.5, -3.0])
def test_quantum_kinds_reject_out_of_range(kind, ip):
    with pytest.raises(ValueError):
        response(kind, ip)


def test_sigmoid_accepts_any_real():
    assert response("sigmoid", 40.0) == 1 - EPS
    assert response("sigmoid", -4.0) == pytest.approx(1 / (1 + math.exp(4)))
    assert np.isfinite(sigmoid(-1e4)) and np.isfinite(sigmoid(1e4))


@given(st.sampled_from(QUANTUM), unit)
def test_output_in_clamped_range(kind, ip):
    assert EPS <= response(kind, ip) <= 1 - EPS


@given(st.floats(-50, 50, allow_nan=False))
def test_sigmoid_output_in_clamped_range(a):
    assert EPS <= response("sigmoid", a) <= 1 - EPS


@given(st.sampled_from(["q", "bq"]), unit)
def test_even_kinds(kind, ip):
    assert response(kind, ip) == response(kind, -ip)


@given(st.sampled_from(["l", "sigmoid"]), unit, unit)
def test_monotone_kinds(kind, a, b):
    lo, hi = min(a, b), max(a, b)
    assert response(kind, lo) <= response(kind, hi)


@given(st.sampled_from(["q", "bq", "bcq", "l", "sigmoid"]), unit)
def test_matches_table_oracle(kind, ip):
    assert response(kind, ip) == pytest.approx(table_response(kind, ip), abs=1e-14)


def test_vectorized_matches_scalar():
    ips = np.linspace(-1, 1, 33)
    for kind in QUANTUM:
        vec = response(kind, ips)
        assert np.array_equal(vec, [response(kind, v) for v in ips])
