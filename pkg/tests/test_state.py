import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qblanket.state import (
    MultipartiteState,
    StateError,
    bell_state,
    chain_rule_check,
    complement,
    conditional_mutual_information,
    disjoint,
    ghz_state,
    marginal_entropy,
    maximally_mixed,
    mutual_information,
    partial_trace,
    product_state,
    pure_state,
    random_pure_state,
    random_state,
    reduced_matrix,
    relative_entropy,
    state_from_dict,
    state_to_dict,
    union,
    von_neumann_entropy,
)


def brute_partial_trace(rho, dims, keep):
    """Oracle: sum over basis vectors of the traced factors, one at a time."""
    n = len(dims)
    out = np.zeros((int(np.prod([dims[k] for k in keep])),) * 2, dtype=complex)
    traced = [i for i in range(n) if i not in keep]
    for idx in np.ndindex(*[dims[i] for i in traced]):
        ops = []
        for i in range(n):
            if i in keep:
                ops.append(np.eye(dims[i]))
            else:
                e = np.zeros((dims[i], 1))
                e[idx[traced.index(i)], 0] = 1
                ops.append(e)
        v = ops[0]
        for o in ops[1:]:
            v = np.kron(v, o)
        out += v.T @ rho @ v
    return out


def test_construction_validates():
    with pytest.raises(StateError):
        MultipartiteState(np.eye(3) / 3, (2, 2))
    with pytest.raises(StateError):
        MultipartiteState(np.eye(2), (2,))
    with pytest.raises(StateError):
        MultipartiteState(np.diag([1.5, -0.5]), (2,))
    with pytest.raises(StateError):
        MultipartiteState(np.array([[0.5, 0.1], [0.0, 0.5]]), (2,))
    s = MultipartiteState(np.diag([1.5, -0.5]), (2,), positive=False)
    assert s.labels == ("S0",)
    with pytest.raises(ValueError):
        s.rho[0, 0] = 0


def test_region_helpers():
    assert union((3, 1), [1, 2]) == (1, 2, 3)
    assert complement(5, (0,), (2, 3)) == (1, 4)
    assert disjoint((0, 1), (2,), ())
    assert not disjoint((0, 1), (1,))


def test_partial_trace_matches_oracle(rng):
    s = random_state((2, 3, 2), rng)
    for keep in [(0,), (1,), (2,), (0, 2), (1, 2), (0, 1, 2)]:
        assert np.allclose(reduced_matrix(s.rho, s.dims, keep), brute_partial_trace(s.rho, s.dims, keep), atol=1e-12)
    red = partial_trace(s, (2, 0))
    assert red.dims == (2, 2)
    with pytest.raises(StateError):
        partial_trace(s, (5,))


def test_partial_trace_in_two_steps(rng):
    s = random_state((2, 2, 2, 2), rng)
    direct = marginal_entropy(s, (1, 3))
    two = marginal_entropy(partial_trace(partial_trace(s, (1, 2, 3)), (0, 2)), (0, 1))
    assert abs(direct - two) <= 1e-10


def test_entropy_examples(rng):
    assert abs(von_neumann_entropy(random_pure_state((2, 2), rng))) <= 1e-10
    assert math.isclose(von_neumann_entropy(maximally_mixed(2)), 1.0)
    s = MultipartiteState(np.diag([0.25, 0.75]), (2,))
    assert math.isclose(von_neumann_entropy(s), 0.811278124459, abs_tol=1e-9)


def test_entropy_additivity(rng):
    a, b = random_state((2,), rng), random_state((3,), rng)
    s = product_state(a, b)
    assert abs(von_neumann_entropy(s) - von_neumann_entropy(a) - von_neumann_entropy(b)) <= 1e-9


def test_mutual_information_examples(rng):
    prod = product_state(random_state((2,), rng), random_state((2,), rng))
    assert abs(mutual_information(prod, [0], [1])) <= 1e-10
    assert math.isclose(mutual_information(bell_state(), [0], [1]), 2.0, abs_tol=1e-10)
    assert math.isclose(mutual_information(ghz_state(3), [0], [1]), 1.0, abs_tol=1e-10)
    with pytest.raises(StateError):
        mutual_information(prod, [0], [0])


def test_cmi_examples(rng):
    s = random_state((2, 2, 2), rng)
    assert math.isclose(conditional_mutual_information(s, [0], [1]), mutual_information(s, [0], [1]), abs_tol=1e-12)
    # pure GHZ: S(XZ) + S(YZ) - S(Z) - S(XYZ) = 1 + 1 - 1 - 0
    assert math.isclose(conditional_mutual_information(ghz_state(3), [0], [1], [2]), 1.0, abs_tol=1e-10)
    # the dephased (classical) GHZ mixture is conditionally independent
    classical = MultipartiteState(np.diag(np.diag(ghz_state(3).rho)), (2, 2, 2))
    assert abs(conditional_mutual_information(classical, [0], [1], [2])) <= 1e-10


def test_chain_rule_examples(rng):
    prod = product_state(*(random_state((2,), rng) for _ in range(4)))
    assert chain_rule_check(prod, [0], [[1], [2], [3]]) <= 1e-10
    assert chain_rule_check(random_state((2, 2, 2, 2), rng), [0], [[1], [2], [3]]) <= 1e-9
    assert chain_rule_check(bell_state(), [0], [[1]]) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2, 2), (2, 2, 2, 2)]))
@settings(max_examples=60, deadline=None)
def test_strong_subadditivity_property(seed, dims):
    s = random_state(dims, np.random.default_rng(seed))
    n = len(dims)
    assert conditional_mutual_information(s, [0], [1], list(range(2, n))) >= -1e-9
    assert conditional_mutual_information(s, [n - 1], [0], [1]) >= -1e-9


def test_relative_entropy(rng):
    a = random_state((2,), rng)
    assert abs(relative_entropy(a, a)) <= 1e-10
    pure0 = pure_state([1, 0], (2,))
    pure1 = pure_state([0, 1], (2,))
    assert relative_entropy(pure0, pure1) == math.inf
    mixed = maximally_mixed(2)
    assert math.isclose(relative_entropy(pure0, mixed), 1.0, abs_tol=1e-10)
    with pytest.raises(StateError):
        relative_entropy(a, random_state((3,), rng))


def test_random_state_full_rank(rng):
    s = random_state((2, 2), rng)
    assert np.linalg.eigvalsh(s.rho)[0] > 1e-8


def test_state_dict_round_trip(rng):
    s = random_state((2, 3), rng, ("A", "B"))
    t = state_from_dict(state_to_dict(s))
    assert t.dims == s.dims and t.labels == s.labels
    assert np.array_equal(t.rho, s.rho)
    with pytest.raises(StateError):
        state_from_dict({"dims": [2]})
