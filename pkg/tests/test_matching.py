import random
from fractions import Fraction
from math import comb

import pytest

from matchideal.algebra import Polynomial, evaluate_01, x
from matchideal.certificate import (
    ADJ,
    DEG,
    SQ,
    DerivationCertificate,
    expand,
    format_certificate,
    parse_certificate,
    verify_certificate,
)
from matchideal.engine import perfect_matching_sets
from matchideal.errors import (
    DerivationTooLarge,
    InvalidLevel,
    InvalidSize,
    NotAMember,
    OracleTooLarge,
    SymmetrizationTooLarge,
    VertexCollision,
    VertexCovered,
)
from matchideal.matching import (
    derive_zero,
    enumerate_perfect_matchings,
    expand_vertex,
    generators_P,
    is_zero_on_matchings,
    lift_generator,
    lift_matching,
    matching_constant,
    matching_witness,
    normal_form,
    partial_matching,
    symmetrize_constant,
)

from support import random_member

X = lambda u, v: Polynomial.var(x(u, v))


def edge_sum(edges):
    return sum((X(u, v) for u, v in edges), Polynomial())


def oracle_equal(cert):
    return is_zero_on_matchings(cert.source - cert.result, cert.n)


# -- generators and oracle ---------------------------------------------------------


def test_generator_counts():
    gens = generators_P(4)
    names = [g.name for g in gens]
    assert (names.count("DEG"), names.count("SQ"), names.count("ADJ")) == (4, 6, 12)
    names = [g.name for g in generators_P(2)]
    assert (names.count("DEG"), names.count("SQ"), names.count("ADJ")) == (2, 1, 0)
    for n in (6, 8):
        assert sum(g.name == "ADJ" for g in generators_P(n)) == n * (n - 1) * (n - 2) // 2


@pytest.mark.parametrize("n", [0, 3, -2])
def test_generator_sizes(n):
    with pytest.raises(InvalidSize):
        generators_P(n)


def test_generators_vanish_on_matchings():
    for g in generators_P(6):
        assert is_zero_on_matchings(expand(g, 6), 6), g


@pytest.mark.parametrize("n,count", [(2, 1), (4, 3), (6, 15), (8, 105), (10, 945)])
def test_matching_counts(n, count):
    pms = enumerate_perfect_matchings(n)
    assert len(pms) == count
    assert pms == sorted(pms)


def test_oracle_bound(monkeypatch):
    monkeypatch.setenv("MATCHIDEAL_MAX_ORACLE", "6")
    with pytest.raises(OracleTooLarge):
        enumerate_perfect_matchings(8)


def test_oracle_examples():
    assert is_zero_on_matchings(expand(DEG(1), 6), 6)
    assert is_zero_on_matchings(X(1, 2) * X(1, 3), 6)
    # 12 and 34 always occur together in a perfect matching of K_4
    assert is_zero_on_matchings(X(1, 2) - X(3, 4), 4)
    M, value = matching_witness(X(1, 2) - X(1, 3), 4)
    assert M in (((1, 2), (3, 4)), ((1, 3), (2, 4))) and abs(value) == 1


# -- normal form -------------------------------------------------------------------


def test_normal_form_of_cube():
    nf, cert = normal_form(X(1, 2) ** 3, 4)
    assert nf == X(1, 2)
    assert [g for g, _ in cert.cofactors] == [SQ(1, 2)]
    (q,) = [q for _, q in cert.cofactors]
    assert len(q) == 2  # SQ(1,2) used twice: once times 1, once times x12
    assert cert.degree == 3
    assert verify_certificate(cert)


def test_normal_form_of_clash():
    nf, cert = normal_form(X(1, 2) * X(1, 3), 4)
    assert nf.is_zero()
    assert [g for g, _ in cert.cofactors] == [ADJ(1, 2, 3)]
    assert cert.degree == 2 and verify_certificate(cert)


def test_normal_form_keeps_matchings():
    p = X(1, 2) * X(3, 4)
    nf, cert = normal_form(p, 4)
    assert nf == p and cert.cofactors == ()


def test_normal_form_idempotent_and_degree():
    rng = random.Random(3)
    for _ in range(20):
        F = random_member("match", 6, 3, rng) + X(1, 2) ** 2 * X(3, 5)
        nf, cert = normal_form(F, 6)
        assert verify_certificate(cert)
        assert nf.degree <= F.degree
        again, cert2 = normal_form(nf, 6)
        assert again == nf and cert2.cofactors == ()


# -- lemmas ------------------------------------------------------------------------


def test_expand_vertex_base():
    rhs, cert = expand_vertex([], 1, 4)
    assert rhs == X(1, 2) + X(1, 3) + X(1, 4)
    assert cert.degree == 1 and [g for g, _ in cert.cofactors] == [DEG(1)]
    assert verify_certificate(cert)


def test_expand_vertex_with_edge():
    rhs, cert = expand_vertex([(1, 2)], 3, 6)
    assert rhs == X(1, 2) * (X(3, 4) + X(3, 5) + X(3, 6))
    assert cert.degree == 2
    assert verify_certificate(cert) and oracle_equal(cert)


def test_expand_vertex_covered():
    with pytest.raises(VertexCovered):
        expand_vertex([(1, 2)], 2, 4)


def test_lift_identity_when_k_equals_size():
    rhs, cert = lift_matching([(1, 2)], 1, 4)
    assert rhs == X(1, 2) and cert.cofactors == ()


def test_lift_to_perfect_matchings():
    rhs, cert = lift_matching([], 2, 4)
    assert rhs == X(1, 2) * X(3, 4) + X(1, 3) * X(2, 4) + X(1, 4) * X(2, 3)
    assert verify_certificate(cert) and cert.degree <= 2
    rhs, cert = lift_matching([(1, 2)], 3, 6)
    assert all(c == 1 for _, c in rhs) and len(rhs) == 3
    assert verify_certificate(cert) and oracle_equal(cert) and cert.degree <= 3


def test_lift_coefficient():
    rhs, cert = lift_matching([(1, 2)], 2, 8)
    assert set(c for _, c in rhs) == {Fraction(1, comb(3, 1))}
    assert verify_certificate(cert) and oracle_equal(cert)


def test_lift_level_range():
    with pytest.raises(InvalidLevel):
        lift_matching([(1, 2), (3, 4)], 1, 6)
    with pytest.raises(InvalidLevel):
        lift_matching([], 3, 4)


def test_symmetrize_examples():
    c, cert = symmetrize_constant(X(1, 2), 4)
    assert c == 8 == matching_constant(4, 1)
    assert verify_certificate(cert) and cert.degree <= 1
    c, cert = symmetrize_constant(X(1, 2) * X(3, 4), 6)
    assert c == 48 == matching_constant(6, 2)
    assert verify_certificate(cert) and cert.degree <= 2
    c, _ = symmetrize_constant(Polynomial.constant(3), 4)
    assert c == 72


def test_symmetrize_bound():
    with pytest.raises(SymmetrizationTooLarge):
        symmetrize_constant(X(1, 2), 10)


def test_lift_generator_deg():
    base = derive_zero(expand(DEG(1), 4), 4)
    lifted = lift_generator(base, 5, 6)
    assert verify_certificate(lifted)
    assert lifted.degree == base.degree + 1
    assert any(g.name == "ADJ" and 5 in g.args for g, _ in lifted.cofactors)
    assert lifted.source == expand(DEG(1), 4) * X(5, 6)


def test_lift_generator_square_is_trivial():
    cert = derive_zero(expand(SQ(1, 2), 4), 4)
    lifted = lift_generator(cert, 5, 6)
    assert verify_certificate(lifted)
    assert [g for g, _ in lifted.cofactors] == [SQ(1, 2)]


def test_lift_generator_needs_fresh_vertices():
    cert = derive_zero(expand(DEG(1), 4), 4)
    with pytest.raises(VertexCollision):
        lift_generator(cert, 4, 5)


# -- derivations -------------------------------------------------------------------


def test_derive_generator():
    cert = derive_zero(expand(DEG(1), 6), 6)
    # source + q * DEG(1) = 0 forces q = -1
    assert cert.cofactors == ((DEG(1), Polynomial.constant(-1)),)
    assert cert.degree == 1 and verify_certificate(cert)


def test_derive_degree_one_base_case():
    F = X(1, 2) + X(1, 3) + X(1, 4) - 1
    for method in ("direct", "inductive"):
        cert = derive_zero(F, 4, method)
        assert cert.degree <= 1 and verify_certificate(cert)


@pytest.mark.parametrize("n", [4, 6])
def test_both_methods_on_random_members(n):
    rng = random.Random(n)
    for _ in range(4):
        F = random_member("match", n, 2, rng)
        for method in ("direct", "inductive"):
            cert = derive_zero(F, n, method)
            assert cert.source == F and cert.result.is_zero()
            assert cert.degree <= 3 and verify_certificate(cert), method


def test_inductive_degree_three_n8():
    F = random_member("match", 8, 3, random.Random(1))
    cert = derive_zero(F, 8, "inductive")
    assert cert.method == "inductive"
    assert cert.degree <= 5 and verify_certificate(cert)


def test_inductive_bounds():
    with pytest.raises(DerivationTooLarge):
        derive_zero(expand(DEG(1), 10), 10, "inductive")


def test_non_member_has_witness():
    F = X(1, 2) - X(1, 3)
    for method in ("direct", "inductive"):
        with pytest.raises(NotAMember) as info:
            derive_zero(F, 4, method)
        M = info.value.witness
        assert evaluate_01(F, {x(u, v) for u, v in M}) != 0


def test_explicit_degree_too_small():
    F = X(1, 2) * X(3, 4) - X(1, 3) * X(2, 4)
    assert not is_zero_on_matchings(F, 4)
    G = X(1, 2) * X(3, 4) + X(1, 3) * X(2, 4) + X(1, 4) * X(2, 3) - 1
    with pytest.raises(InvalidLevel):
        derive_zero(G, 4, degree=1)
    assert verify_certificate(derive_zero(G, 4, degree=2))


# -- verification ------------------------------------------------------------------


def test_tampering_is_rejected():
    cert = derive_zero(random_member("match", 6, 2, random.Random(7)), 6)
    gen, q = cert.cofactors[0]
    bumped = DerivationCertificate(
        cert.family, cert.n, cert.source, cert.result, cert.degree, ((gen, q + 1),) + cert.cofactors[1:]
    )
    verdict = verify_certificate(bumped)
    assert not verdict and "mismatch" in verdict.reason
    lowered = cert.with_degree(cert.actual_degree() - 1)
    verdict = verify_certificate(lowered)
    assert not verdict and "degree" in verdict.reason


def test_certificate_text_round_trip():
    cert = derive_zero(random_member("match", 6, 2, random.Random(9)), 6)
    text = format_certificate(cert)
    assert text.startswith("CERT MATCH n=6")
    again = parse_certificate(text)
    assert again == cert and verify_certificate(again)


def test_soundness_on_all_matchings():
    rng = random.Random(11)
    for _ in range(5):
        cert = derive_zero(random_member("match", 8, 2, rng), 8)
        assert verify_certificate(cert)
        for M in perfect_matching_sets(8):
            assert evaluate_01(cert.source - cert.result, M) == 0


def test_partial_matching_validation():
    with pytest.raises(ValueError):
        partial_matching([(1, 2), (2, 3)], 4)
