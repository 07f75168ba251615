import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matchideal.algebra import Permutation
from matchideal.errors import DualInvalid, InvalidInput, NotPsd
from matchideal.matching import enumerate_perfect_matchings
from matchideal.symmetry import (
    SdpFormulationData,
    SolutionFunction,
    act_matching,
    apply_group_check,
    determined_by,
    edge_indicator_example,
    find_junta_support,
    format_solution_function,
    formulation_to_sos,
    orbit_connector,
    parse_solution_function,
    pm4_example,
    psd_sqrt,
    read_formulation,
    solutions,
    sos_functions,
    write_formulation,
)

PM6 = enumerate_perfect_matchings(6)


def test_connector_identity():
    M = PM6[0]
    assert orbit_connector(M, M, []) == Permutation.identity(6)


def test_connector_example():
    M1, M2 = [(1, 2), (3, 4), (5, 6)], [(1, 2), (3, 5), (4, 6)]
    s = orbit_connector(M1, M2, [1])
    assert s.is_even() and s(1) == 1
    assert act_matching(s, M1) == tuple(sorted(M2))


def test_connector_preconditions():
    with pytest.raises(InvalidInput):
        orbit_connector([(1, 2), (3, 4)], [(1, 3), (2, 4)], [1, 2])  # |S| = n/2
    with pytest.raises(InvalidInput):
        orbit_connector([(1, 2), (3, 4), (5, 6)], [(1, 3), (2, 4), (5, 6)], [1, 2])  # differ inside S


@given(st.integers(0, len(PM6) - 1), st.integers(0, len(PM6) - 1), st.sets(st.integers(1, 6), max_size=2))
def test_connector_property(i, j, S):
    M1, M2 = PM6[i], PM6[j]
    inside = lambda M: {e for e in M if set(e) <= S}
    if inside(M1) != inside(M2):
        return
    s = orbit_connector(M1, M2, S)
    assert s.sign == 1 and all(s(v) == v for v in S) and act_matching(s, M1) == M2


def edge_indicator(u, v, n=4):
    return SolutionFunction.from_callable("match", n, lambda M: Fraction(int((u, v) in M)))


def test_junta_examples():
    rep = find_junta_support(edge_indicator(1, 2))
    assert rep.support == (1, 2) and not rep.sign_needed
    const = SolutionFunction.from_callable("match", 4, lambda M: Fraction(5))
    assert find_junta_support(const).support == ()
    sign = SolutionFunction.from_callable("tour", 4, lambda s: Fraction(Permutation(s).sign))
    rep = find_junta_support(sign)
    assert rep.support == () and rep.sign_needed


def test_junta_minimality():
    # depends on edges 12 and 34 in K_6: support {1,2,3,4}
    h = SolutionFunction.from_callable("match", 6, lambda M: Fraction(int((1, 2) in M) + 2 * int((3, 4) in M)))
    rep = find_junta_support(h)
    W = set(rep.support)
    assert determined_by(h, W)
    for r in range(len(W)):
        for sub in itertools.combinations(sorted(W), r):
            assert not determined_by(h, sub)


def test_solution_function_text_round_trip():
    h = edge_indicator(1, 3)
    assert parse_solution_function(format_solution_function(h)) == h
    t = SolutionFunction.from_callable("tour", 3, lambda s: Fraction(s[0], 2))
    assert parse_solution_function(format_solution_function(t)) == t


def test_solution_function_must_cover_everything():
    with pytest.raises(InvalidInput):
        SolutionFunction("match", 4, {})


def test_group_checks():
    H = [edge_indicator(u, v) for u, v in itertools.combinations(range(1, 5), 2)]
    assert apply_group_check(H, "S_n")
    assert apply_group_check(H, "A_n")
    assert not apply_group_check([edge_indicator(1, 2)], "S_n")


def test_pm4_transformer():
    data = pm4_example()
    sos = formulation_to_sos(data, 0)
    assert sos.residuals.max() <= 1e-9
    assert len(sos.functions) <= comb(data.d + 1, 2)


def test_scalar_case():
    sols = solutions("match", 4)
    f = [1 if (1, 2) in s else 0 for s in sols]
    data = SdpFormulationData(
        d=1, solutions=sols, points=[np.array([[1.0 - v]]) for v in f], values=[f], linear=[np.array([[-1.0]])],
        offset=[1.0], bound=[1.5], guarantee=[1.0], dual_U=[np.array([[1.0]])], dual_mu=[0.5],
    )
    sos = formulation_to_sos(data, 0)
    assert sos.residuals.max() <= 1e-12


def test_constant_objective_with_zero_dual():
    sols = solutions("match", 4)
    data = SdpFormulationData(
        d=1, solutions=sols, points=[np.array([[1.0]])] * 3, values=[[2, 2, 2]], linear=[np.array([[2.0]])],
        offset=[0.0], bound=[3.0], guarantee=[2.0], dual_U=[np.zeros((1, 1))], dual_mu=[1.0],
    )
    sos = formulation_to_sos(data, 0)
    assert all(abs(sos.sum_of_squares(i) - 1.0) < 1e-12 for i in range(3))


def test_symmetric_toy_is_closed_under_the_group():
    data = edge_indicator_example(4)
    sos = formulation_to_sos(data, 0)
    assert len(sos.functions) <= comb(data.d + 1, 2)
    H = sos_functions("match", 4, data, sos)
    assert apply_group_check(H, "S_n")


def test_bad_dual_and_psd():
    data = pm4_example()
    data.dual_mu[0] = 0.25
    with pytest.raises(DualInvalid):
        formulation_to_sos(data, 0)
    with pytest.raises(NotPsd):
        psd_sqrt(np.diag([1.0, -1e-3]))
    assert np.allclose(psd_sqrt(np.diag([4.0, -1e-12])), np.diag([2.0, 0.0]))


def test_formulation_directory_round_trip(tmp_path):
    data = pm4_example()
    write_formulation(data, tmp_path)
    kind, back = read_formulation(tmp_path)
    assert kind == "match" and back.d == 2
    sos = formulation_to_sos(back, 0)
    assert sos.residuals.max() <= 1e-9
