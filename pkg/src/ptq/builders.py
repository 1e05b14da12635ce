"""Full term circuits assembled from ``U_V`` and ``U_{E^p}`` fragments."""
from __future__ import annotations

import dataclasses
from typing import Optional

from .circuit import Circuit, CircuitBuilder, RegisterLayout, validate
from .oracle import term_powers
from .synthesis import build_ue, build_uv, select_C
from .system import PerturbedSystem

AUX_KINDS = ("m_a", "m_b", "m_c", "e2", "state1")


class BuildError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class TermCircuit:
    circuit: Circuit
    term: str
    #: basis index of |n>_q |1...1>_anc, or None for amplitude readout circuits
    post_select: Optional[int]
    signal_order: int
    #: i**signal_order times the product of the rotation constants
    prefactor: complex
    powers: tuple[int, ...]
    constants: tuple[float, ...]
    target_level: int
    #: fragment sequence in circuit order, e.g. ("UV", "UE1", "UV")
    fragments: tuple[str, ...] = ()

    @property
    def layout(self) -> RegisterLayout:
        return self.circuit.layout

    @property
    def n_ancillas(self) -> int:
        return len(self.layout.ancillas)

    @property
    def n_uv(self) -> int:
        return sum(1 for f in self.fragments if f == "UV")

    @property
    def n_ue(self) -> int:
        return sum(1 for f in self.fragments if f.startswith("UE"))


def roman(k: int) -> str:
    table = [(10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")]
    out = ""
    for value, sym in table:
        while k >= value:
            out += sym
            k -= value
    return out


def _chain(sys: PerturbedSystem, term: str, powers, marks_after, variant: str, backend: str,
           post_select: bool = True) -> TermCircuit:
    """``U_V`` then, per power ``p_j``, ``U_{E^p_j}`` on ancilla ``j`` followed by ``U_V``.

    ``marks_after`` holds the fragment numbers (1-based, in circuit order)
    after which a stage mark is placed; marks are named phi_I, phi_II, ...
    """
    n = sys.target_level
    N = sys.n_qubits
    A = len(powers)
    layout = RegisterLayout(N, tuple(f"q'{j + 1}" for j in range(A)))
    uv = build_uv(sys, backend)
    b = CircuitBuilder(layout)
    stage = iter(range(1, 100))
    b.mark(f"phi_{roman(next(stage))}")
    fragments = [("UV", None)]
    for j, p in enumerate(powers):
        fragments.append(("UE", (j, p)))
        if post_select or j < A - 1:
            fragments.append(("UV", None))
    constants = []
    for idx, (kind, info) in enumerate(fragments, start=1):
        if kind == "UV":
            b.append(uv)
        else:
            j, p = info
            C = select_C(sys, n, p)
            constants.append(C)
            b.extend(build_ue(sys, layout.ancilla_qubit(f"q'{j + 1}"), p, variant, C=C))
        if idx in marks_after:
            b.mark(f"phi_{roman(next(stage))}")
    circuit = b.build()
    problems = validate(circuit)
    if problems:
        raise BuildError("; ".join(problems))
    order = sum(1 for kind, _ in fragments if kind == "UV")
    prefactor = 1j ** order
    for C in constants:
        prefactor *= C
    ps = layout.index(n, [1] * A) if post_select else None
    names = tuple("UV" if kind == "UV" else f"UE{info[1]}" for kind, info in fragments)
    return TermCircuit(circuit, term, ps, order, prefactor, tuple(powers), tuple(constants), n, names)


def build_eps_circuit(sys: PerturbedSystem, m: int, variant: str = "improved",
                      backend: str = "exact") -> TermCircuit:
    """Circuit whose ``(n, 1, ..., 1)`` amplitude carries the leading order-``m`` sum."""
    if m < 3:
        raise BuildError(f"epsilon circuits need m >= 3, got {m}")
    # fragments alternate UV (odd) / UE (even); stage marks follow the order-3/order-4 layout:
    # after UV1, UE1, each later UE, each UV from the third on
    n_frag = 2 * m - 1
    marks = {1, 2}
    for frag in range(3, n_frag + 1):
        is_uv = frag % 2 == 1
        uv_number = (frag + 1) // 2
        if not is_uv or uv_number >= 3:
            marks.add(frag)
    return _chain(sys, f"eps{m}", term_powers(f"eps{m}"), marks, variant, backend)


def build_aux_circuit(sys: PerturbedSystem, kind: str, variant: str = "improved",
                      backend: str = "exact") -> TermCircuit:
    if kind not in AUX_KINDS:
        raise BuildError(f"unknown auxiliary circuit {kind!r}; expected one of {AUX_KINDS}")
    if kind == "state1":
        return _chain(sys, kind, (1,), {1, 2}, variant, backend, post_select=False)
    powers = term_powers(kind)
    n_frag = 2 * len(powers) + 1
    return _chain(sys, kind, powers, set(range(1, n_frag + 1)), variant, backend)


def build_term_circuit(sys: PerturbedSystem, term: str, variant: str = "improved",
                       backend: str = "exact") -> TermCircuit:
    if term.startswith("eps"):
        return build_eps_circuit(sys, int(term[3:]), variant, backend)
    return build_aux_circuit(sys, term, variant, backend)
