import numpy as np
import pytest

from ptq.estimator import (ESTIMATED_TERMS, EstimationError, TermEstimate, assemble_corrections, estimate_all,
                           estimate_term, extract_term_sampling, extract_term_unitary, first_order_state,
                           lambda_nodes, series_coefficient)
from ptq.oracle import pt_corrections
from ptq.system import PerturbedSystem, random_system

from conftest import two_level


def zero_system():
    return PerturbedSystem(2, [0.0, 1.0, 2.5, 4.0], np.zeros((4, 4)), 0.1, 1)


def test_series_coefficient_recovers_polynomial():
    coeffs = [0.3, -1.2, 0.7 + 0.1j, 2.0]
    lam = 0.05
    vals = [sum(c * l ** j for j, c in enumerate(coeffs)) for l in lambda_nodes(lam, 3)]
    for j, c in enumerate(coeffs):
        assert series_coefficient(vals, lam, j) == pytest.approx(c, rel=1e-9)


@pytest.mark.parametrize("mode", ["linearized", "unitary"])
def test_zero_perturbation(mode):
    for term in ESTIMATED_TERMS:
        assert estimate_term(zero_system(), term, mode).value == pytest.approx(0, abs=1e-14)


def test_zero_perturbation_sampling():
    est = extract_term_sampling(zero_system(), "eps3", 1000, 0)
    assert est.probability == 0 and est.value == 0 and est.note == "no accepted shots"


def test_two_level_eps3_linearized():
    assert estimate_term(two_level(), "eps3").value == pytest.approx(0, abs=1e-12)


def test_m_b_linearized():
    s = random_system(2, 4)
    assert estimate_term(s, "m_b").value == pytest.approx(pt_corrections(s).m_b, abs=1e-10)
    assert estimate_term(s, "m_b").predicted_bias == 0


def test_two_level_assembly():
    r = estimate_all(two_level())
    assert r.assembled_e3 == pytest.approx(0, abs=1e-9)
    assert r.assembled_e4 == pytest.approx(0.0625, abs=1e-9)


def test_assembly_identity_exact():
    r = estimate_all(random_system(2, 5))
    assert r.recompute() == (r.assembled_e3, r.assembled_e4)


def test_missing_estimate():
    s = random_system(2, 5)
    with pytest.raises(EstimationError):
        assemble_corrections(s, [TermEstimate("eps3", "linearized", 0.0)])


def test_unitary_close_at_small_lambda():
    s = random_system(2, 2, lam=1e-2)
    c = pt_corrections(s)
    est = extract_term_unitary(s, "eps3")
    assert abs(est.value - (c.eps3 + est.predicted_bias)) <= 1e-3 * max(1, abs(c.eps3))


def test_two_level_e2_unitary_halving():
    res = []
    for lam in (1e-2, 5e-3):
        s = two_level(lam)
        est = extract_term_unitary(s, "e2")
        res.append(est.value - pt_corrections(s).e2 - est.predicted_bias)
    assert 3 <= res[0] / res[1] <= 5


def test_sampling_magnitude_nonnegative_and_deterministic():
    s = random_system(2, 0, lam=0.4)
    a = extract_term_sampling(s, "e2", 20000, 5)
    b = extract_term_sampling(s, "e2", 20000, 5)
    assert a.value >= 0 and a.magnitude_only
    assert a == b


def test_sampling_rejects_linearized():
    with pytest.raises(EstimationError):
        extract_term_sampling(random_system(2, 0), "e2", 10, 0, backend="linearized")


def test_first_order_state():
    coeffs = dict(first_order_state(two_level()))
    assert coeffs[1] == pytest.approx(-0.5, abs=1e-12)
    assert all(c == 0 for _, c in first_order_state(zero_system()))


def test_report_outputs():
    r = estimate_all(two_level())
    csv_text = r.to_csv()
    assert csv_text.splitlines()[0] == "term,mode,value,oracle,bias,deviation"
    assert len(csv_text.splitlines()) == 1 + len(ESTIMATED_TERMS) + 2
    d = r.to_dict()
    assert d["config"]["lambda"] == 0.1 and set(d["estimates"]) == set(ESTIMATED_TERMS)


def test_trotter_backend_converges_to_exact():
    s = random_system(2, 9, lam=0.05)
    from ptq.system import pauli_decompose
    s = PerturbedSystem(2, s.energies, s.perturbation, s.lam, s.n, pauli_decompose(s.perturbation))
    exact = extract_term_unitary(s, "e2").value
    devs = [abs(extract_term_unitary(s, "e2", backend=f"trotter:{r}").value - exact) for r in (64, 128)]
    assert devs[1] < devs[0]
