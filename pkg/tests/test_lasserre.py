import json
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matchideal.algebra import ONE, Polynomial, y
from matchideal.engine import tours
from matchideal.errors import BasisTooLarge, InvalidLevel, ShapeError
from matchideal.certificate import ROW, verify_certificate
from matchideal.lasserre import (
    MomentBasis,
    NumericSosCertificate,
    basis_size,
    check_moments,
    congruence_certificate,
    export_sdpa,
    format_numeric_certificate,
    is_psd_exact,
    lasserre_build,
    moment_assignment,
    numeric_to_derivation,
    pair_square_certificate,
    parse_numeric_certificate,
    read_sdpa,
    verify_numeric_certificate,
)
from matchideal.tsp import TspInstance, random_metric, tour_value


def gram_value(cert, basis, sigma):
    point = {y(i, p) for i, p in enumerate(sigma, start=1)}
    b = [Fraction(int(all(v in point for v, _ in m))) for m in basis.monomials]
    return sum(b[i] * Fraction(g) * b[j] for i, row in enumerate(cert.gram) for j, g in enumerate(row))


# -- basis and program -------------------------------------------------------------


def test_basis_sizes():
    assert len(MomentBasis.build(3, 2)) == basis_size(3, 2) == 10
    basis = MomentBasis.build(2, 2)
    assert len(basis) == 5
    assert set(basis.monomials) == {ONE, ((y(1, 1), 1),), ((y(1, 2), 1),), ((y(2, 1), 1),), ((y(2, 2), 1),)}
    assert len(MomentBasis.build(4, 4)) == 1 + 16 + 72


def test_basis_limits():
    with pytest.raises(BasisTooLarge):
        MomentBasis.build(6, 4, max_basis=100)
    with pytest.raises(InvalidLevel):
        MomentBasis.build(3, 0)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_tours_are_feasible(n):
    inst = random_metric(n, random.Random(n))
    prog = lasserre_build(inst, 2)
    assert prog.variables[0] == ONE
    for sigma in list(tours(n))[:12]:
        values = moment_assignment(prog, sigma)
        report = check_moments(prog, values)
        assert report and report.objective == tour_value(inst, sigma)


def test_infeasible_moments():
    prog = lasserre_build(TspInstance.uniform(3), 2)
    values = moment_assignment(prog, (1, 2, 3))
    bad = list(values)
    bad[0] = Fraction(2)
    assert not check_moments(prog, bad)
    bad = list(values)
    bad[1] += 1
    assert not check_moments(prog, bad)
    with pytest.raises(ShapeError):
        check_moments(prog, values[:-1])


def test_averaged_tours_are_feasible():
    inst = random_metric(4, random.Random(1))
    prog = lasserre_build(inst, 2)
    ts = list(tours(4))
    values = [sum(col) / len(ts) for col in zip(*(moment_assignment(prog, s) for s in ts))]
    report = check_moments(prog, values)
    assert report and report.objective == sum(tour_value(inst, s) for s in ts) / len(ts)


def test_exact_psd():
    assert is_psd_exact([[1, 1], [1, 1]])
    assert not is_psd_exact([[1, 2], [2, 1]])
    assert not is_psd_exact([[0, 1], [1, 0]])
    assert not is_psd_exact([[1, 0], [1, 1]])


@given(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=4, max_size=4))
def test_exact_psd_matches_eigenvalues(rows):
    A = [[int(v) for v in row] for row in (np.array(rows) @ np.array(rows).T)]
    assert is_psd_exact(A)
    S = [[A[i][j] - (5 if i == j == 0 else 0) for j in range(4)] for i in range(4)]
    eig = np.linalg.eigvalsh(np.array(S, dtype=float)).min()
    if abs(eig) > 1e-6:
        assert is_psd_exact(S) == (eig > 0)


# -- SDPA export -------------------------------------------------------------------------


def test_export_structure(tmp_path):
    inst = TspInstance.from_matrix([[0, 1, 2], [1, 0, 2], [2, 2, 0]])
    prog = lasserre_build(inst, 2)
    path, idx = export_sdpa(prog, tmp_path / "p.dat-s")
    lines = path.read_text().splitlines()
    nvar = len(prog.variables) - 1
    assert int(lines[1]) == nvar
    assert lines[3].split()[0] == "10"
    manifest = json.loads(idx.read_text())
    assert manifest["n"] == 3 and len(manifest["variables"]) == nvar
    back = read_sdpa(path)
    assert back.variables == list(prog.variables)
    assert len(back.equalities) == len(prog.equalities)
    for i, c in prog.objective.items():
        assert abs(back.objective[i] - float(c)) <= 1e-12 * abs(float(c))
    for a in range(len(prog.basis)):
        for b in range(a, len(prog.basis)):
            e = prog.matrix[a][b]
            assert back.matrix.get((a, b), {}) == ({} if e is None else {e: 1.0})


def test_export_deterministic_and_small(tmp_path):
    prog = lasserre_build(TspInstance.uniform(2), 2)
    one, _ = export_sdpa(prog, tmp_path / "a")
    two, _ = export_sdpa(lasserre_build(TspInstance.uniform(2), 2), tmp_path / "b")
    assert one.read_bytes() == two.read_bytes()
    head = one.read_text().splitlines()
    assert head[3].split()[0] == "5"


def test_export_zero_instance(tmp_path):
    inst = TspInstance.from_matrix([[0] * 3 for _ in range(3)])
    path, idx = export_sdpa(lasserre_build(inst, 2), tmp_path / "z")
    c_row = path.read_text().splitlines()[4].split()
    assert c_row and all(float(v) == 0 for v in c_row)
    assert json.loads(idx.read_text())["objective_constant"] == "0"


def test_fractional_costs_survive_export(tmp_path):
    inst = TspInstance.from_matrix([[0, "1/3", "2/7"], ["1/3", 0, "1/5"], ["2/7", "1/5", 0]])
    prog = lasserre_build(inst, 2)
    back = read_sdpa(export_sdpa(prog, tmp_path / "f")[0])
    for i, c in prog.objective.items():
        assert abs(back.objective[i] - float(c)) <= 1e-12 * abs(float(c))


# -- numeric certificates -------------------------------------------------------------


def test_uniform_triangle_bound():
    inst = TspInstance.uniform(3)
    assert verify_numeric_certificate(inst, congruence_certificate(inst, 3))
    fake = congruence_certificate(inst, 3)
    fake = NumericSosCertificate(3, 2, 3.1, fake.gram, fake.cofactors)
    report = verify_numeric_certificate(inst, fake)
    assert not report and "residual" in report.reason


def test_shape_errors():
    inst = TspInstance.uniform(3)
    cert = congruence_certificate(inst, 3)
    with pytest.raises(ShapeError):
        verify_numeric_certificate(TspInstance.uniform(4), cert)
    with pytest.raises(ShapeError):
        verify_numeric_certificate(inst, NumericSosCertificate(3, 2, 3, cert.gram[:-1], ()))
    with pytest.raises(ShapeError):
        verify_numeric_certificate(inst, NumericSosCertificate(3, 2, 3, cert.gram, ((ROW(7), Polynomial.constant(1)),)))


def test_cofactor_degree_limit():
    inst = TspInstance.uniform(3)
    cert = congruence_certificate(inst, 3)
    big = Polynomial.var(y(1, 1)) * Polynomial.var(y(2, 2)) * Polynomial.var(y(3, 3))
    cert = NumericSosCertificate(3, 2, 3, cert.gram, cert.cofactors + ((ROW(1), big),))
    assert not verify_numeric_certificate(inst, cert)


def test_negative_gram_rejected():
    inst = TspInstance.uniform(3)
    cert = pair_square_certificate(inst)
    G = [list(r) for r in cert.gram]
    G[0][0] -= 1
    bad = NumericSosCertificate(3, 2, cert.bound + 1, tuple(map(tuple, G)), cert.cofactors)
    for tol in (0, 1e-7):
        assert not verify_numeric_certificate(inst, bad, tol=tol)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pair_square_certificate_is_exact_and_sound(n):
    inst = random_metric(n, random.Random(10 + n))
    cert = pair_square_certificate(inst)
    assert verify_numeric_certificate(inst, cert, tol=0)
    deriv = numeric_to_derivation(inst, cert)
    assert verify_certificate(deriv) and deriv.result.is_zero()
    basis = MomentBasis.build(n, 2)
    for sigma in tours(n):
        assert tour_value(inst, sigma) - cert.bound == gram_value(cert, basis, sigma)
    assert cert.bound <= min(tour_value(inst, s) for s in tours(n))


def test_exact_and_float_agree():
    inst = random_metric(4, random.Random(3))
    cert = pair_square_certificate(inst)
    exact = verify_numeric_certificate(inst, cert, tol=0)
    approx = verify_numeric_certificate(inst, cert)
    deriv = numeric_to_derivation(inst, cert)
    assert bool(exact) == bool(approx) == (verify_certificate(deriv) and deriv.result.is_zero())
    shifted = NumericSosCertificate(4, 2, cert.bound + Fraction(1, 3), cert.gram, cert.cofactors)
    deriv = numeric_to_derivation(inst, shifted)
    assert not verify_numeric_certificate(inst, shifted, tol=0)
    assert verify_certificate(deriv) and not deriv.result.is_zero()


def test_float_gram_within_tolerance():
    inst = TspInstance.uniform(3)
    cert = pair_square_certificate(inst)
    noisy = tuple(tuple(float(v) + 1e-10 for v in row) for row in cert.gram)
    cert = NumericSosCertificate(3, 2, float(cert.bound), noisy, cert.cofactors)
    report = verify_numeric_certificate(inst, cert, tol=1e-7)
    assert report and report.residual < 1e-7
    assert not verify_numeric_certificate(inst, cert, tol=1e-12)


def test_certificate_text_round_trip():
    inst = random_metric(3, random.Random(4))
    cert = pair_square_certificate(inst)
    again = parse_numeric_certificate(format_numeric_certificate(cert))
    assert again == cert
    assert verify_numeric_certificate(inst, again, tol=0)
