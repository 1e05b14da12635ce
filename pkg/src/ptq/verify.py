"""Invariant checks run by ``ptq verify`` against a single problem."""
from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np

from . import circuit as cir
from . import sim
from .builders import build_aux_circuit, build_eps_circuit, build_term_circuit
from .complexity import scaling_report, ue_cost
from .estimator import (ESTIMATED_TERMS, estimate_all, extract_term_linearized, extract_term_unitary,
                        first_order_state)
from .oracle import correction, epsilon_m, level_shift, pt_corrections
from .synthesis import build_ue, select_C, solve_alpha, theta_angles, uv_exact, uv_trotter
from .system import PerturbedSystem, diagonalize_h0

MAX_DENSE_N = 4


@dataclasses.dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


_CHECKS: list[tuple[str, Callable]] = []


def check(name: str):
    def deco(fn):
        _CHECKS.append((name, fn))
        return fn
    return deco


def _scale(x: float) -> float:
    return max(1.0, abs(x))


def ue_fragment_circuit(sys: PerturbedSystem, p: int, variant: str) -> cir.Circuit:
    layout = cir.RegisterLayout(sys.n_qubits, ("q'1",))
    gates = build_ue(sys, sys.n_qubits, p, variant)
    return cir.Circuit(layout, tuple(gates))


def ue_action_error(sys: PerturbedSystem, p: int, variant: str) -> float:
    """Max deviation of the fragment's action on every ``|k>|0>`` from the target amplitudes."""
    circ = ue_fragment_circuit(sys, p, variant)
    C = select_C(sys, None, p)
    n, E = sys.target_level, sys.energies
    worst = 0.0
    for k in range(sys.dim):
        out = sim.run(circ, k).amplitudes
        want = np.zeros_like(out)
        if k == n:
            want[k] = 1.0
        else:
            r = C / (E[n] - E[k]) ** p
            want[k] = np.sqrt(1 - r * r)
            want[k | 1 << sys.n_qubits] = r
        worst = max(worst, float(np.max(np.abs(out - want))))
    return worst


def direct_postselected_amplitude(sys: PerturbedSystem, powers, U: np.ndarray) -> complex:
    """Path sum ``sum_k <n|U|k_last> g_last(k_last) ... g_1(k_1) <k_1|U|n>`` with ``g_j = C_j / E_nk**p_j``."""
    n, E = sys.target_level, sys.energies
    v = U[:, n].copy()
    for p in powers:
        C = select_C(sys, None, p)
        g = np.zeros(sys.dim)
        mask = np.arange(sys.dim) != n
        g[mask] = C / (E[n] - E[mask]) ** p
        v = U @ (g * v)
    return complex(v[n])


@check("gap table consistency")
def _gap_table(sys):
    for p in (1, 2, 3):
        t = sys.gap_table(p)
        for k, g in t.gaps.items():
            if g != (sys.energies[sys.n] - sys.energies[k]) ** p or g == 0:
                return False, f"p={p}, k={k}"
    return True, ""


@check("diagonalize_h0 reconstruction")
def _diag(sys):
    rng = np.random.default_rng(7)
    A = rng.normal(size=(sys.dim, sys.dim)) + 1j * rng.normal(size=(sys.dim, sys.dim))
    Q, _ = np.linalg.qr(A)
    h0 = Q @ np.diag(sys.energies) @ Q.conj().T
    E, T = diagonalize_h0(h0)
    err = float(np.max(np.abs(T.conj().T @ np.diag(E) @ T - h0)))
    return err <= 1e-10, f"max error {err:.3e}"


@check("oracle fields real")
def _reality(sys):
    c = pt_corrections(sys)
    return c.max_imag <= 1e-12, f"max relative imaginary part {c.max_imag:.3e}"


@check("oracle cross-checks")
def _oracle_cross(sys):
    c = pt_corrections(sys)
    e2 = epsilon_m(sys, 2)
    d2 = abs(e2 - correction(sys, 2)) / _scale(c.e2)
    d3 = abs(epsilon_m(sys, 3) - c.eps3) / _scale(c.eps3)
    d4 = abs(epsilon_m(sys, 4) - c.eps4) / _scale(c.eps4) if sys.dim <= 16 else 0.0
    worst = max(d2, d3, d4)
    return worst <= 1e-12, f"max relative mismatch {worst:.3e}"


@check("assembly identities")
def _assembly(sys):
    c = pt_corrections(sys)
    r3 = abs(c.e3 - (c.eps3 - c.e1 * c.m_b))
    r4 = abs(c.e4 - (c.eps4 - c.m_b * c.e2 - 2 * c.e1 * c.m_a + c.e1 ** 2 * c.m_c))
    return max(r3, r4) <= 1e-12 * _scale(c.e4), f"residuals {r3:.3e}, {r4:.3e}"


@check("Taylor closure (residual at least fifth order)")
def _taylor(sys):
    norm = max(1.0, float(np.linalg.norm(sys.perturbation, 2)))
    gap = float(np.min(np.diff(np.sort(sys.energies))))
    lam = 1e-2 * min(1.0, gap) / norm
    c = pt_corrections(sys)
    res = []
    for l in (lam, lam / 2):
        series = sum(l ** j * c.term(f"e{j}") for j in range(1, 5))
        res.append(abs(level_shift(sys.with_lambda(l)) - series))
    if res[0] <= 1e-18:
        return True, f"residual {res[0]:.3e} at round-off floor"
    ratio = res[0] / max(res[1], 1e-300)
    return ratio >= 24, f"halving ratio {ratio:.2f}"


@check("U_E action")
def _ue_action(sys):
    if sys.n_qubits > MAX_DENSE_N:
        return True, "skipped (N > 4)"
    worst = max(ue_action_error(sys, p, v) for p in (1, 2, 3) for v in ("standard", "improved"))
    return worst <= 1e-12, f"max deviation {worst:.3e}"


@check("improved U_E equals standard U_E")
def _ue_equiv(sys):
    if sys.n_qubits > MAX_DENSE_N:
        return True, "skipped (N > 4)"
    worst = 0.0
    for p in (1, 2, 3):
        a = sim.circuit_matrix(ue_fragment_circuit(sys, p, "standard"))
        b = sim.circuit_matrix(ue_fragment_circuit(sys, p, "improved"))
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst <= 1e-12, f"max matrix deviation {worst:.3e}"


@check("alpha constraint residuals")
def _alpha(sys):
    worst = max(solve_alpha(theta_angles(sys, None, p)).residual for p in (1, 2, 3))
    return worst <= 1e-12, f"max residual {worst:.3e}"


@check("U_V exact unitarity and matrix elements")
def _uv(sys):
    V = sys.perturbation
    devs = []
    for lam in (sys.lam, sys.lam / 2):
        U = uv_exact(V, lam)
        unit = float(np.max(np.abs(U.conj().T @ U - np.eye(sys.dim))))
        if unit > 1e-12:
            return False, f"|U^dag U - I| = {unit:.3e}"
        lin = np.eye(sys.dim) + 1j * lam * V
        dev = float(np.max(np.abs(U - lin)))
        nrm = abs(lam) * float(np.linalg.norm(V, 2))
        if dev > nrm ** 2 * np.exp(nrm) + 1e-15:
            return False, f"element deviation {dev:.3e} above bound"
        devs.append(dev)
    if devs[0] < 1e-13:
        return True, "deviation at round-off floor"
    ratio = devs[0] / devs[1]
    return 3.0 <= ratio <= 5.0, f"halving ratio {ratio:.2f}"


@check("Trotter error scaling")
def _trotter(sys):
    if sys.pauli_terms is None:
        return True, "skipped (no pauli_terms)"
    lam = max(abs(sys.lam), 0.1)
    exact = uv_exact(sys.perturbation, lam)
    devs = [float(np.max(np.abs(uv_trotter(sys.pauli_terms, sys.n_qubits, lam, r) - exact)))
            for r in (16, 32)]
    if devs[0] < 1e-12:
        return True, "terms commute; product formula exact"
    ratio = devs[0] / devs[1]
    return 1.5 <= ratio <= 2.5, f"halving-step ratio {ratio:.2f}"


@check("circuit structure and serialization")
def _structure(sys):
    for term in ESTIMATED_TERMS + ("state1",):
        tc = build_term_circuit(sys, term)
        problems = cir.validate(tc.circuit)
        if problems:
            return False, f"{term}: {problems[0]}"
        if tc.post_select is not None:
            if tc.n_ancillas != tc.n_ue or tc.n_uv != tc.n_ancillas + 1 or tc.signal_order != tc.n_uv:
                return False, f"{term}: fragment counts"
        back = cir.loads(cir.dumps(tc.circuit))
        if back != tc.circuit:
            return False, f"{term}: serialization round-trip"
    return True, ""


@check("norm preservation")
def _norm(sys):
    worst = 0.0
    for term in ESTIMATED_TERMS:
        tc = build_term_circuit(sys, term)
        st = sim.run(tc.circuit, tc.layout.index(sys.n))
        worst = max(worst, abs(st.norm - 1.0))
    return worst <= 1e-10, f"max |norm - 1| {worst:.3e}"


@check("probability identities")
def _prob(sys):
    U = uv_exact(sys.perturbation, sys.lam)
    worst = 0.0
    for m in (3, 4):
        tc = build_eps_circuit(sys, m)
        st = sim.run(tc.circuit, tc.layout.index(sys.n))
        got = abs(sim.amplitude(st, tc.post_select)) ** 2
        want = abs(direct_postselected_amplitude(sys, tc.powers, U)) ** 2
        worst = max(worst, abs(got - want))
    return worst <= 1e-12, f"max deviation {worst:.3e}"


@check("linearized-mode exactness")
def _linearized(sys):
    report = estimate_all(sys, "linearized")
    worst = 0.0
    for term, dev in report.deviations.items():
        worst = max(worst, abs(dev) / _scale(report.oracle.term(term)))
    return worst <= 1e-9, f"max relative deviation {worst:.3e}"


@check("unitary-mode bias law")
def _bias_law(sys):
    norm = max(1.0, float(np.linalg.norm(sys.perturbation, 2)))
    lam = 1e-2 / norm
    c = pt_corrections(sys)
    details = []
    for term in ("eps3", "e2"):
        res = []
        for l in (lam, lam / 2):
            est = extract_term_unitary(sys.with_lambda(l), term)
            res.append(est.value - c.term(term) - est.predicted_bias)
        if abs(res[0]) <= 1e-9 * _scale(c.term(term)):
            details.append(f"{term}: at floor")
            continue
        ratio = res[0] / res[1]
        if not 3.0 <= ratio <= 5.0:
            return False, f"{term}: halving ratio {ratio:.2f}"
        details.append(f"{term}: {ratio:.2f}")
    return True, ", ".join(details)


@check("first-order state")
def _state1(sys):
    V, n = sys.perturbation, sys.n
    worst = 0.0
    for k, coeff in first_order_state(sys):
        worst = max(worst, abs(coeff - V[k, n] / sys.gap(k)))
    return worst <= 1e-10, f"max deviation {worst:.3e}"


@check("cost model")
def _cost(sys):
    N = max(sys.n_qubits, 2)
    report = scaling_report(range(1, N + 9))
    for r in report.rows:
        if ue_cost(r.N, "improved") != 1 + r.N * (r.N + 1) * 2 ** r.N // 4 and r.N >= 2:
            return False, f"closed form fails at N={r.N}"
    return True, ""


def run_checks(sys: PerturbedSystem) -> list[CheckResult]:
    out = []
    for name, fn in _CHECKS:
        try:
            ok, detail = fn(sys)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
