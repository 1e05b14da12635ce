import numpy as np
import pytest

from ptq import sim
from ptq.builders import BuildError, build_aux_circuit, build_eps_circuit, build_term_circuit, roman
from ptq.synthesis import select_C, uv_exact
from ptq.system import random_system

from conftest import corpus, two_level
from oracles import eq13_amplitude


@pytest.mark.parametrize("m", [3, 4, 5])
def test_eps_structure(m):
    tc = build_eps_circuit(random_system(2, 0), m)
    assert tc.fragments == ("UV",) + ("UE1", "UV") * (m - 1)
    assert tc.n_ancillas == m - 1 and tc.n_ue == m - 1 and tc.n_uv == m
    assert tc.signal_order == m
    assert tc.post_select == tc.layout.index(tc.target_level, [1] * (m - 1))


def test_eps_needs_m3():
    with pytest.raises(BuildError):
        build_eps_circuit(random_system(2, 0), 2)


@pytest.mark.parametrize("kind,frags", [
    ("m_b", ("UV", "UE2", "UV")),
    ("m_c", ("UV", "UE3", "UV")),
    ("e2", ("UV", "UE1", "UV")),
    ("m_a", ("UV", "UE2", "UV", "UE1", "UV")),
    ("state1", ("UV", "UE1")),
])
def test_aux_structure(kind, frags):
    tc = build_aux_circuit(random_system(2, 1), kind)
    assert tc.fragments == frags
    assert (tc.post_select is None) == (kind == "state1")


def test_unknown_kind():
    with pytest.raises(BuildError):
        build_aux_circuit(random_system(2, 1), "m_z")


def test_prefactor():
    s = random_system(2, 3)
    tc = build_term_circuit(s, "m_a")
    assert tc.prefactor == pytest.approx(1j ** 3 * select_C(s, None, 2) * select_C(s, None, 1))


def test_stage_marks_eps3():
    tc = build_eps_circuit(random_system(2, 0), 3)
    names = [n for n, _ in tc.circuit.stage_marks]
    assert names == ["phi_I", "phi_II", "phi_III", "phi_IV", "phi_V"]
    assert roman(7) == "VII"


def test_two_level_phi_III():
    """Amplitudes after the first rotation layer, written out for M = 2, n = 0."""
    s = two_level()
    tc = build_eps_circuit(s, 3)
    snap = sim.run(tc.circuit, tc.layout.index(0)).snapshots["phi_III"]
    lam, v = s.lam, 0.5
    c, i_s = np.cos(lam * v), 1j * np.sin(lam * v)
    C = 1.0
    want = np.zeros(8, complex)
    want[tc.layout.index(0, [0, 0])] = c                      # k = n: untouched
    r = C / (0.0 - 1.0)
    want[tc.layout.index(1, [0, 0])] = i_s * np.sqrt(1 - r * r)
    want[tc.layout.index(1, [1, 0])] = i_s * r
    assert np.max(np.abs(snap - want)) <= 1e-12


@pytest.mark.parametrize("s", corpus()[:4] + corpus()[12:16], ids=lambda s: f"M{s.dim}")
@pytest.mark.parametrize("term", ["eps3", "eps4", "m_a", "m_b"])
def test_postselected_amplitude_vs_path_sum(s, term):
    tc = build_term_circuit(s, term, "standard")
    amp = sim.amplitude(sim.run(tc.circuit, tc.layout.index(s.n)), tc.post_select)
    U = uv_exact(s.perturbation, s.lam)
    want = eq13_amplitude(s.energies, U, s.n, tc.constants, tc.powers)
    assert abs(amp - want) <= 1e-12


def test_state1_readout():
    s = two_level()
    tc = build_aux_circuit(s, "state1")
    snap = sim.run(tc.circuit, tc.layout.index(0)).snapshots["phi_III"]
    U = uv_exact(s.perturbation, s.lam)
    assert snap[tc.layout.index(1, [1])] == pytest.approx(1.0 * U[1, 0] / (0 - 1), abs=1e-15)
