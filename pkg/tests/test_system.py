import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptq.system import (DegeneracyError, HermiticityError, ParseError, PauliMismatchError, PerturbedSystem,
                        diagonalize_h0, dump_system, load_system, pauli_decompose, pauli_matrix,
                        random_system, system_from_hamiltonian)


def doc(**over):
    d = {"n_qubits": 1, "energies": [0, 1], "perturbation": [[[0, 0], [0.5, 0]], [[0.5, 0], [0, 0]]],
         "lambda": 0.1, "target_level": 0}
    d.update(over)
    return json.dumps(d)


def test_load_minimal():
    s = load_system(doc())
    assert s.n_qubits == 1 and s.dim == 2
    assert s.perturbation[0, 1] == 0.5
    assert s.lam == 0.1 and s.target_level == 0


def test_load_from_path(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(doc())
    assert load_system(path).dim == 2
    assert load_system(str(path)).dim == 2


def test_degenerate_rejected():
    with pytest.raises(DegeneracyError):
        load_system(doc(energies=[0, 0]))


def test_degeneracy_tolerance_configurable():
    text = doc(energies=[0, 1e-6])
    load_system(text)
    with pytest.raises(DegeneracyError):
        load_system(text, degeneracy_tol=1e-5)


def test_non_hermitian_rejected():
    with pytest.raises(HermiticityError):
        load_system(doc(perturbation=[[[0, 0], [0, 1]], [[0, 1], [0, 0]]]))


@pytest.mark.parametrize("bad", [
    "{not json",
    "[1, 2]",
    doc(energies=[0, 1, 2]),
    doc(target_level=2),
    doc(n_qubits=0),
    json.dumps({"n_qubits": 1, "energies": [0, 1]}),
])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        load_system(bad)


def test_pauli_terms_checked():
    terms = [{"coefficient": 0.5, "string": "X"}]
    assert load_system(doc(pauli_terms=terms)).pauli_terms == ((0.5, "X"),)
    with pytest.raises(PauliMismatchError):
        load_system(doc(pauli_terms=[{"coefficient": 0.4, "string": "X"}]))


def test_pauli_little_endian():
    # "ZI": Z on qubit 0, identity on qubit 1 -> sign follows bit 0
    diag = np.diag(pauli_matrix("ZI")).real
    assert list(diag) == [1, -1, 1, -1]


def test_dump_roundtrip():
    s = random_system(2, 3)
    back = load_system(json.dumps(dump_system(s)))
    np.testing.assert_array_equal(back.perturbation, s.perturbation)
    np.testing.assert_array_equal(back.energies, s.energies)


def test_pauli_decompose_reassembles():
    s = random_system(2, 5)
    terms = pauli_decompose(s.perturbation)
    PerturbedSystem(2, s.energies, s.perturbation, s.lam, s.n, terms)


def test_gap_table():
    s = PerturbedSystem(2, [0.0, 1.0, 2.0, 3.5], np.zeros((4, 4)), 0.1, 1)
    for p in (1, 2, 3):
        t = s.gap_table(p)
        assert set(t.gaps) == {0, 2, 3}
        for k, g in t.gaps.items():
            assert g == (s.energies[1] - s.energies[k]) ** p
    assert s.gap_table(3).gaps[3] == (1.0 - 3.5) ** 3


def test_system_is_immutable():
    s = random_system(2, 0)
    with pytest.raises(ValueError):
        s.energies[0] = 5.0


class TestDiagonalize:
    def test_diagonal_input(self):
        E, T = diagonalize_h0(np.diag([0.0, 1.0, 3.0, 7.0]))
        np.testing.assert_allclose(E, [0, 1, 3, 7])
        np.testing.assert_allclose(np.abs(T), np.eye(4))

    def test_pauli_x(self):
        E, T = diagonalize_h0([[0, 1], [1, 0]])
        np.testing.assert_allclose(E, [-1, 1])
        minus = np.array([1, -1]) / np.sqrt(2)
        plus = np.array([1, 1]) / np.sqrt(2)
        # T sends (|0> - |1>)/sqrt2 to |0> and (|0> + |1>)/sqrt2 to |1>, up to phase
        assert abs(abs((T @ minus)[0]) - 1) < 1e-12
        assert abs(abs((T @ plus)[1]) - 1) < 1e-12

    def test_non_hermitian(self):
        with pytest.raises(HermiticityError):
            diagonalize_h0([[0, 1], [0, 0]])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([2, 4, 8]))
    def test_reconstruction(self, seed, M):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
        H = A + A.conj().T
        E, T = diagonalize_h0(H)
        assert np.all(np.diff(E) >= 0)
        assert np.max(np.abs(T.conj().T @ np.diag(E) @ T - H)) <= 1e-10
        assert np.max(np.abs(T @ T.conj().T - np.eye(M))) <= 1e-12

    def test_system_from_hamiltonian_preserves_spectrum(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(4, 4))
        H0 = A + A.T
        B = rng.normal(size=(4, 4))
        V = (B + B.T) / 2
        s = system_from_hamiltonian(H0, V, 0.1, 0)
        full = np.linalg.eigvalsh(H0 + 0.1 * V)
        rotated = np.linalg.eigvalsh(np.diag(s.energies) + 0.1 * s.perturbation)
        np.testing.assert_allclose(full, rotated, atol=1e-12)
