import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptq import sim
from ptq.circuit import Circuit, RegisterLayout
from ptq.synthesis import (SynthesisError, ThetaTable, build_ue, build_uv, mobius, parse_backend, select_C,
                           solve_alpha, theta_angles, uv_exact, uv_matrix, uv_trotter, zeta)
from ptq.system import PerturbedSystem, pauli_decompose, random_system

from oracles import submasks


def ladder(energies, n=0, N=None):
    M = len(energies)
    N = N or int(math.log2(M))
    return PerturbedSystem(N, energies, np.zeros((M, M)), 0.1, n)


class TestSelectC:
    def test_unit_gaps(self):
        s = ladder([0, 1, 2, 3])
        assert [select_C(s, 0, p) for p in (1, 2, 3)] == [1, 1, 1]

    def test_small_gap_squared(self):
        s = PerturbedSystem(2, [0, 0.5, 2, 9], np.zeros((4, 4)), 0.1, 0)
        assert select_C(s, 0, 2) == 0.25
        assert select_C(s, 0, 3) == 0.125


class TestTheta:
    def test_ladder_p1(self):
        t = theta_angles(ladder([0, 1, 2, 3]), 0, 1)
        np.testing.assert_allclose(t.thetas, [0, -np.pi, -np.pi / 3, 2 * np.arcsin(-1 / 3)], atol=1e-15)
        assert t.thetas[3] == pytest.approx(-0.679674, abs=1e-6)

    def test_ladder_p2_positive(self):
        t = theta_angles(ladder([0, 1, 2, 3]), 0, 2)
        np.testing.assert_allclose(t.thetas[1:], [2 * np.arcsin(1 / k ** 2) for k in (1, 2, 3)])

    def test_target_entry_zero(self):
        for n in range(4):
            assert theta_angles(ladder([0, 1, 2, 3], n), n, 1).thetas[n] == 0

    def test_oversized_constant_rejected(self):
        with pytest.raises(SynthesisError):
            theta_angles(ladder([0, 1, 2, 3]), 0, 1, C=1.5)


class TestAlpha:
    def test_n2_closed_form(self):
        th = np.array([0.3, -0.7, 1.1, 0.25])
        a = solve_alpha(ThetaTable(0, 1, 1.0, th)).alphas
        np.testing.assert_allclose(a, [th[0], th[1] - th[0], th[2] - th[0], th[3] - th[1] - th[2] + th[0]])

    def test_zero(self):
        assert not np.any(solve_alpha(ThetaTable(0, 1, 1.0, np.zeros(8))).alphas)

    def test_ladder_values(self):
        a = solve_alpha(theta_angles(ladder([0, 1, 2, 3]), 0, 1)).alphas
        np.testing.assert_allclose(a[:3], [0, -np.pi, -np.pi / 3], atol=1e-15)
        assert a[3] == pytest.approx(2 * np.arcsin(-1 / 3) + np.pi + np.pi / 3, abs=1e-15)
        assert a[3] == pytest.approx(3.509116, abs=1e-6)

    def test_not_power_of_two(self):
        with pytest.raises(SynthesisError):
            solve_alpha(ThetaTable(0, 1, 1.0, np.zeros(6)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 5).flatmap(lambda N: st.lists(st.floats(-4, 4), min_size=2 ** N, max_size=2 ** N)))
    def test_mobius_matches_brute_force(self, values):
        values = np.array(values)
        got = mobius(values)
        for x in range(len(values)):
            want = sum((-1) ** (bin(x).count("1") - bin(y).count("1")) * values[y] for y in submasks(x))
            assert got[x] == pytest.approx(want, abs=1e-12)
        np.testing.assert_allclose(zeta(got), values, atol=1e-12)


class TestBuildUE:
    def test_standard_two_level(self):
        gates = build_ue(ladder([0, 1]), 1, 1, "standard")
        assert len(gates) == 2
        assert gates[0].angle == 0 and gates[0].control_values == 0 and gates[0].control_mask == 1
        assert gates[1].angle == pytest.approx(-np.pi) and gates[1].controls == [0]

    def test_improved_two_level(self):
        gates = build_ue(ladder([0, 1]), 1, 1, "improved")
        assert gates[0].kind == "Ry" and gates[0].angle == 0
        assert gates[1].angle == pytest.approx(-np.pi) and gates[1].control_values == 1

    def test_improved_has_one_full_control(self):
        s = random_system(3, 2)
        gates = build_ue(s, 3, 1, "improved")
        assert sum(1 for g in gates if len(g.controls) == 3) == 1
        assert sorted(g.control_mask for g in gates) == list(range(8))

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            build_ue(ladder([0, 1]), 1, 1, "fancy")

    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_variants_agree_as_matrices(self, N, p):
        s = random_system(N, 50 + N)
        lay = RegisterLayout(N, ("a",))
        std = sim.circuit_matrix(Circuit(lay, tuple(build_ue(s, N, p, "standard"))))
        imp = sim.circuit_matrix(Circuit(lay, tuple(build_ue(s, N, p, "improved"))))
        assert np.max(np.abs(std - imp)) <= 1e-12


class TestUV:
    def test_zero_perturbation_identity(self):
        s = PerturbedSystem(1, [0, 1], np.zeros((2, 2)), 0.1, 0, pauli_terms=())
        for backend in ("exact", "linearized", "trotter:3"):
            np.testing.assert_allclose(uv_matrix(s, backend), np.eye(2), atol=1e-15)

    def test_two_level_exact(self):
        U = uv_exact(np.array([[0, 0.5], [0.5, 0]]), 0.1)
        assert U[0, 1] == pytest.approx(1j * np.sin(0.05), abs=1e-15)
        assert U[0, 1].imag == pytest.approx(0.0499792, abs=1e-7)
        assert U[0, 0] == pytest.approx(np.cos(0.05), abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_exact_unitary(self, seed):
        s = random_system(3, seed, lam=0.7)
        U = uv_matrix(s)
        assert np.max(np.abs(U.conj().T @ U - np.eye(8))) <= 1e-12

    def test_linearized_flag(self):
        s = random_system(2, 0)
        g = build_uv(s, "linearized")
        assert not g.is_unitary
        np.testing.assert_allclose(g.matrix, np.eye(4) + 1j * s.lam * s.perturbation)
        assert build_uv(s).is_unitary

    def test_trotter_needs_pauli_terms(self):
        with pytest.raises(SynthesisError):
            uv_matrix(random_system(2, 0), "trotter:4")

    def test_trotter_error_scaling(self):
        s = random_system(2, 8)
        terms = pauli_decompose(s.perturbation)
        lam = 0.1
        U = uv_exact(s.perturbation, lam)
        dev = [np.max(np.abs(uv_trotter(terms, 2, lam, r) - U)) for r in (8, 16, 32)]
        for a, b in zip(dev, dev[1:]):
            assert 1.5 <= a / b <= 2.5
        assert dev[0] <= 2 * lam ** 2 / 8 * sum(abs(c) for c, _ in terms) ** 2

    @pytest.mark.parametrize("lam", [0.05, 0.01])
    def test_matrix_element_contract(self, lam):
        s = random_system(2, 1)
        V = s.perturbation
        U = uv_exact(V, lam)
        nrm = lam * np.linalg.norm(V, 2)
        assert np.max(np.abs(U - np.eye(4) - 1j * lam * V)) <= nrm ** 2 * np.exp(nrm)

    @pytest.mark.parametrize("text,expected", [("exact", ("exact", 0)), ("trotter:7", ("trotter", 7)),
                                               ("linearized", ("linearized", 0))])
    def test_parse_backend(self, text, expected):
        assert parse_backend(text) == expected

    @pytest.mark.parametrize("bad", ["trotter:0", "exact:3", "magic"])
    def test_parse_backend_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_backend(bad)
