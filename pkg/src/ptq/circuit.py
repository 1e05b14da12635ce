"""Gate-level IR for the perturbation-theory circuits."""
from __future__ import annotations

import dataclasses
import json
import math
from typing import Optional

import numpy as np

RY = "Ry"
MCRY = "MultiControlledRy"
SYSTEM_UNITARY = "SystemUnitary"
GATE_KINDS = (RY, MCRY, SYSTEM_UNITARY)

UNITARY_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class RegisterLayout:
    """System qubits ``0..N-1`` followed by ancillas at ``N, N+1, ...``."""

    n_system: int
    ancillas: tuple[str, ...] = ()

    @property
    def n_qubits(self) -> int:
        return self.n_system + len(self.ancillas)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def ancilla_qubit(self, label: str) -> int:
        return self.n_system + self.ancillas.index(label)

    def index(self, level: int, ancilla_bits=()) -> int:
        """Basis index of ``|level>_q (x) |b_1> (x) |b_2> ...``."""
        if len(ancilla_bits) not in (0, len(self.ancillas)):
            raise ValueError(f"expected {len(self.ancillas)} ancilla bits, got {len(ancilla_bits)}")
        idx = int(level)
        for j, b in enumerate(ancilla_bits):
            idx |= int(b) << (self.n_system + j)
        return idx

    def bitstring(self, index: int) -> str:
        """Little-endian bitstring: character ``j`` is qubit ``j``."""
        return "".join(str((index >> j) & 1) for j in range(self.n_qubits))

    def parse_bitstring(self, bits: str) -> int:
        if len(bits) != self.n_qubits or set(bits) - {"0", "1"}:
            raise ValueError(f"bitstring {bits!r} does not match {self.n_qubits} qubits")
        return sum(1 << j for j, c in enumerate(bits) if c == "1")


@dataclasses.dataclass(frozen=True, eq=False)
class Gate:
    kind: str
    target: Optional[int] = None
    angle: float = 0.0
    control_mask: int = 0
    # required bit values on control_mask; 0-controls are bits of the mask left clear here
    control_values: int = 0
    matrix: Optional[np.ndarray] = None
    is_unitary: bool = True
    label: str = ""

    @classmethod
    def ry(cls, target: int, angle: float, label: str = "") -> "Gate":
        return cls(RY, target=target, angle=float(angle), label=label)

    @classmethod
    def mcry(cls, target: int, angle: float, control_mask: int, control_values: Optional[int] = None,
             label: str = "") -> "Gate":
        if control_values is None:
            control_values = control_mask
        if control_mask == 0:
            return cls.ry(target, angle, label)
        return cls(MCRY, target=target, angle=float(angle), control_mask=int(control_mask),
                   control_values=int(control_values), label=label)

    @classmethod
    def system_unitary(cls, matrix, is_unitary: bool = True, label: str = "") -> "Gate":
        return cls(SYSTEM_UNITARY, matrix=np.asarray(matrix, dtype=complex), is_unitary=is_unitary,
                   label=label)

    @property
    def controls(self) -> list[int]:
        return [j for j in range(self.control_mask.bit_length()) if self.control_mask >> j & 1]

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        same = (self.kind, self.target, self.angle, self.control_mask, self.control_values,
                self.is_unitary, self.label) == (other.kind, other.target, other.angle,
                                                 other.control_mask, other.control_values,
                                                 other.is_unitary, other.label)
        if not same:
            return False
        if self.matrix is None or other.matrix is None:
            return self.matrix is None and other.matrix is None
        return np.array_equal(self.matrix, other.matrix)


@dataclasses.dataclass(frozen=True)
class Circuit:
    layout: RegisterLayout
    gates: tuple[Gate, ...] = ()
    stage_marks: tuple[tuple[str, int], ...] = ()

    def __len__(self):
        return len(self.gates)

    def stage(self, name: str) -> int:
        return dict(self.stage_marks)[name]


class CircuitBuilder:
    """Mutable helper that appends fragments and records stage marks."""

    def __init__(self, layout: RegisterLayout):
        self.layout = layout
        self.gates: list[Gate] = []
        self.marks: list[tuple[str, int]] = []

    def mark(self, name: str) -> None:
        self.marks.append((name, len(self.gates)))

    def extend(self, gates) -> None:
        self.gates.extend(gates)

    def append(self, gate: Gate) -> None:
        self.gates.append(gate)

    def build(self) -> Circuit:
        return Circuit(self.layout, tuple(self.gates), tuple(self.marks))


def validate(circuit: Circuit) -> list[str]:
    """Every structural violation in ``circuit``; an empty list means valid."""
    problems = []
    layout = circuit.layout
    nq = layout.n_qubits
    if len(set(layout.ancillas)) != len(layout.ancillas):
        problems.append("duplicate ancilla labels")
    for i, g in enumerate(circuit.gates):
        where = f"gate {i} ({g.kind})"
        if g.kind not in GATE_KINDS:
            problems.append(f"{where}: unknown kind")
            continue
        if g.kind == SYSTEM_UNITARY:
            dim = 2 ** layout.n_system
            if g.matrix is None or g.matrix.shape != (dim, dim):
                shape = None if g.matrix is None else g.matrix.shape
                problems.append(f"{where}: matrix shape {shape}, expected ({dim}, {dim})")
                continue
            if not np.all(np.isfinite(g.matrix)):
                problems.append(f"{where}: non-finite matrix entries")
            elif g.is_unitary:
                dev = float(np.max(np.abs(g.matrix.conj().T @ g.matrix - np.eye(dim))))
                if dev > UNITARY_TOL:
                    problems.append(f"{where}: flagged unitary but |U^dag U - I|_max = {dev:.3e}")
            continue
        if g.target is None or not 0 <= g.target < nq:
            problems.append(f"{where}: target {g.target} outside register of {nq} qubits")
        if not math.isfinite(g.angle):
            problems.append(f"{where}: non-finite angle")
        if g.control_mask >> nq:
            problems.append(f"{where}: control mask {g.control_mask:#b} outside register")
        if g.target is not None and g.control_mask >> g.target & 1:
            problems.append(f"{where}: target {g.target} is also a control")
        if g.control_values & ~g.control_mask:
            problems.append(f"{where}: control values set outside control mask")
        if g.kind == RY and g.control_mask:
            problems.append(f"{where}: plain Ry carries controls")
    last = -1
    for name, pos in circuit.stage_marks:
        if pos <= last:
            problems.append(f"stage mark {name!r} at {pos} is not after the previous mark")
        if not 0 <= pos <= len(circuit.gates):
            problems.append(f"stage mark {name!r} at {pos} outside circuit")
        last = pos
    return problems


# -- serialization ------------------------------------------------------------------------

def _gate_to_dict(g: Gate) -> dict:
    d = {"kind": g.kind}
    if g.label:
        d["label"] = g.label
    if g.kind == SYSTEM_UNITARY:
        d["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in g.matrix]
        d["is_unitary"] = g.is_unitary
    else:
        d["target"] = g.target
        d["angle"] = g.angle
        d["controls"] = g.controls
        d["control_values"] = [g.control_values >> c & 1 for c in g.controls]
    return d


def _gate_from_dict(d: dict) -> Gate:
    kind = d["kind"]
    label = d.get("label", "")
    if kind == SYSTEM_UNITARY:
        arr = np.asarray(d["matrix"], dtype=float)
        return Gate.system_unitary(arr[..., 0] + 1j * arr[..., 1], d.get("is_unitary", True), label)
    controls = d.get("controls", [])
    values = d.get("control_values", [1] * len(controls))
    mask = sum(1 << c for c in controls)
    vals = sum(1 << c for c, v in zip(controls, values) if v)
    return Gate(kind, target=d["target"], angle=float(d["angle"]), control_mask=mask,
                control_values=vals, label=label)


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "layout": {"n_system": circuit.layout.n_system, "ancillas": list(circuit.layout.ancillas)},
        "gates": [_gate_to_dict(g) for g in circuit.gates],
        "stage_marks": [{"name": n, "position": p} for n, p in circuit.stage_marks],
    }


def circuit_from_dict(d: dict) -> Circuit:
    layout = RegisterLayout(d["layout"]["n_system"], tuple(d["layout"].get("ancillas", ())))
    gates = tuple(_gate_from_dict(g) for g in d.get("gates", ()))
    marks = tuple((m["name"], int(m["position"])) for m in d.get("stage_marks", ()))
    return Circuit(layout, gates, marks)


def dumps(circuit: Circuit, **kw) -> str:
    # repr-exact floats survive json round-trips
    return json.dumps(circuit_to_dict(circuit), **kw)


def loads(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))
