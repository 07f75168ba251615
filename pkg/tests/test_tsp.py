import itertools
import random
from fractions import Fraction

import pytest

from matchideal.algebra import Permutation, Polynomial, evaluate_01, x, y
from matchideal.certificate import ADJ, DEG, expand, verify_certificate
from matchideal.engine import perfect_matching_sets, tours
from matchideal.errors import InternalInvariant, InvalidInput, InvalidSize, NotAnSos, NotMetric
from matchideal.matching import generators_P, is_zero_on_matchings
from matchideal.tsp import (
    RefutationCertificate,
    TspInstance,
    build_refutation,
    canonicalize,
    crossing_sum,
    double_instance,
    fold_generator,
    fold_substitution,
    format_instance,
    format_refutation,
    is_canonical,
    odd_set_slack,
    odd_split,
    parse_instance,
    parse_refutation,
    phi_map,
    random_metric,
    refutation_example,
    tour_value,
    val_polynomial,
    verify_refutation,
    visiting_order,
)


def tour_point(sigma):
    return {y(i, p) for i, p in enumerate(sigma, start=1)}


def brute_value(inst, sigma):
    order = visiting_order(sigma)
    return sum(inst.d(order[p], order[(p + 1) % len(order)]) for p in range(len(order)))


# -- instances and values ---------------------------------------------------------


def test_uniform_value():
    inst = TspInstance.uniform(3)
    assert all(tour_value(inst, s) == 3 for s in tours(3))


def test_value_polynomial_against_direct_sum():
    rows = [[0, 1, 2], [1, 0, 2], [2, 2, 0]]
    inst = TspInstance.from_matrix(rows)
    P = val_polynomial(inst)
    for s in tours(3):
        assert evaluate_01(P, tour_point(s)) == tour_value(inst, s) == brute_value(inst, s)
    rng = random.Random(5)
    for _ in range(50):
        inst = random_metric(5, rng)
        P = val_polynomial(inst)
        s = tuple(rng.sample(range(1, 6), 5))
        assert evaluate_01(P, tour_point(s)) == brute_value(inst, s)


def test_metric_validation():
    with pytest.raises(NotMetric):
        TspInstance.from_matrix([[0, 1, 5], [1, 0, 1], [1, 1, 0]])
    with pytest.raises(NotMetric):
        TspInstance.from_matrix([[0, -1], [1, 0]])
    with pytest.raises(InvalidInput):
        TspInstance(3, {(1, 2): 1})


def test_instance_text_round_trip():
    text = "TSP n=2\nd 1 2 0.25\nd 2 1 3/4\n"
    inst = parse_instance(text)
    assert inst.d(1, 2) == Fraction(1, 4) and inst.d(2, 1) == Fraction(3, 4)
    assert parse_instance(format_instance(inst)) == inst


# -- doubling ---------------------------------------------------------------------


def test_double_uniform():
    D = double_instance(TspInstance.uniform(3))
    assert D.n == 6
    zero = [(a, b) for (a, b), v in D.dist.items() if v == 0]
    assert sorted(zero) == [(1, 2), (2, 1), (3, 4), (4, 3), (5, 6), (6, 5)]


def test_double_stays_metric_and_keeps_minimum():
    rng = random.Random(8)
    for _ in range(50):
        double_instance(random_metric(4, rng))  # construction re-validates
    inst = random_metric(3, rng)
    D = double_instance(inst)
    assert min(tour_value(D, t) for t in tours(6)) == min(tour_value(inst, s) for s in tours(3))


def test_phi_identity():
    image = phi_map((1, 2, 3))
    assert visiting_order(image) == [1, 2, 3, 4, 5, 6]
    assert Permutation(image).sign == 1


def test_phi_injective_even_and_value_preserving():
    inst = random_metric(4, random.Random(2))
    D = double_instance(inst)
    images = set()
    for s in tours(4):
        image = phi_map(s)
        images.add(image)
        assert is_canonical(image) and Permutation(image).is_even()
        assert tour_value(D, image) == tour_value(inst, s)
    assert len(images) == 24


def test_canonicalize():
    inst = random_metric(3, random.Random(4))
    D = double_instance(inst)
    for t in tours(6):
        c = canonicalize(t, D)
        assert is_canonical(c) and tour_value(D, c) <= tour_value(D, t)
    for s in tours(3):
        assert canonicalize(phi_map(s), D) == phi_map(s)


def test_canonicalize_refuses_non_doubled_instance():
    # zero-distance pairs that are not clone pairs, so relocation can cost
    inst = TspInstance(4, {(a, b): (0 if {a, b} in ({1, 3}, {2, 4}) else 1) for a in range(1, 5)
                           for b in range(1, 5) if a != b})
    with pytest.raises(InternalInvariant):
        canonicalize((1, 3, 2, 4), inst)


# -- odd set identity and folding ------------------------------------------------------


def test_split():
    s = odd_split(10)
    assert (s.m, s.S, s.U) == (5, (1, 2, 3, 4, 5), ())
    s = odd_split(12)
    assert (s.m, s.T, s.U) == (5, (6, 7, 8, 9, 10), (11, 12))


def test_odd_set_slack():
    for eps in (0, Fraction(1, 2)):
        f, rhs, cert = odd_set_slack(10, eps)
        assert verify_certificate(cert) and cert.degree <= 1
        assert cert.source == f and cert.result == rhs
        assert is_zero_on_matchings(f - rhs, 10)
    inner = Polynomial({((x(u, v), 1),): 1 for u, v in itertools.combinations(range(1, 6), 2)})
    assert max(evaluate_01(inner, M) for M in perfect_matching_sets(10)) == 2
    with pytest.raises(InvalidSize):
        odd_set_slack(8)
    with pytest.raises(InvalidInput):
        odd_set_slack(10, 1)


def test_fold_examples():
    assert fold_generator(ADJ(1, 2, 3), 10) == (ADJ(1, 2, 3), 1)
    assert fold_substitution(Polynomial.var(x(1, 6)), 10).is_zero()
    assert fold_substitution(Polynomial.var(x(6, 7)), 10) == Polynomial.var(x(1, 2))
    assert fold_substitution(Polynomial.var(x(11, 12)), 12) == 1
    image = fold_substitution(expand(DEG(1), 10), 10)
    assert image == expand(DEG(1), 5)


@pytest.mark.parametrize("n", [10, 12])
def test_fold_every_generator(n):
    m = odd_split(n).m
    for g in generators_P(n):
        image = fold_substitution(expand(g, n), n)
        target = fold_generator(g, n)
        if target is None:
            assert image.is_zero(), g
        else:
            assert image == expand(target[0], m).scale(target[1]), g


def test_fold_is_a_ring_homomorphism():
    rng = random.Random(3)
    pool = [Polynomial.var(x(u, v)) for u, v in itertools.combinations(range(1, 13), 2)]
    for _ in range(30):
        p = rng.choice(pool) * rng.randint(-2, 2) + rng.choice(pool)
        q = rng.choice(pool) - rng.randint(0, 3)
        assert fold_substitution(p + q, 12) == fold_substitution(p, 12) + fold_substitution(q, 12)
        assert fold_substitution(p * q, 12) == fold_substitution(p, 12) * fold_substitution(q, 12)


# -- refutations ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def refutation():
    squares, mu = refutation_example(10, Fraction(1, 2))
    return build_refutation(squares, mu, Fraction(1, 2), 10)


def test_refutation_round_trip(refutation):
    assert refutation.m == 5 and refutation.k == 4
    assert verify_refutation(refutation)
    assert verify_certificate(refutation.certificate)
    again = parse_refutation(format_refutation(refutation))
    assert again == refutation and verify_refutation(again)


def test_refutation_tampering(refutation):
    r = refutation
    neg = RefutationCertificate(r.m, r.eps, r.k, -Fraction(1, 4), r.squares, r.certificate)
    assert not verify_refutation(neg)
    c = r.certificate
    low = RefutationCertificate(r.m, r.eps, r.k, r.mu, r.squares, c.with_degree(c.actual_degree() - 1))
    assert not verify_refutation(low)
    small_k = RefutationCertificate(r.m, r.eps, 1, r.mu, r.squares, c)
    assert not verify_refutation(small_k)


def test_false_identities_are_rejected():
    with pytest.raises(NotAnSos):
        build_refutation([], Fraction(1, 2), 0, 10)
    c = crossing_sum(10)
    with pytest.raises(NotAnSos):
        build_refutation([(c - 1) / 2], 0, 0, 10)  # one square cannot match the slack
