"""Dense statevector simulation of :class:`~ptq.circuit.Circuit` objects.

The inner kernels come from the compiled ``_kernels`` extension when it is
importable and from :mod:`ptq.sim._fallback` otherwise.  Setting
``PTQ_BACKEND=python`` forces the fallback; ``PTQ_THREADS`` caps the OpenMP
thread count of the compiled kernels (``0`` = all cores).
"""
from __future__ import annotations

import dataclasses
import os
from types import ModuleType
from typing import Optional, Union

import numpy as np

from ..circuit import MCRY, RY, SYSTEM_UNITARY, Circuit, validate
from . import _fallback

NORM_TOL = 1e-10


def _load_compiled() -> Optional[ModuleType]:
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_COMPILED = _load_compiled()
KERNELS: dict[str, ModuleType] = {"python": _fallback}
if _COMPILED is not None:
    KERNELS["cython"] = _COMPILED

if os.environ.get("PTQ_BACKEND", "").lower() == "python" or _COMPILED is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def get_kernels(name: Optional[str] = None) -> ModuleType:
    name = BACKEND if name is None else name
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(KERNELS)}") from None


def thread_count() -> int:
    raw = os.environ.get("PTQ_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    if n <= 0:
        n = os.cpu_count() or 1
    return n


class SimulationError(RuntimeError):
    pass


@dataclasses.dataclass
class MeasurementOutcome:
    bitstring: str
    count: int
    index: int


class StateVector:
    """Amplitudes over the full register plus bookkeeping about unitarity."""

    def __init__(self, amplitudes: np.ndarray, n_qubits: int, unitary_only: bool = True):
        self.amplitudes = np.ascontiguousarray(amplitudes, dtype=complex)
        self.n_qubits = n_qubits
        self.unitary_only = unitary_only
        self.snapshots: dict[str, np.ndarray] = {}
        self._norm: Optional[float] = None

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        dim = 2 ** n_qubits
        if not 0 <= index < dim:
            raise SimulationError(f"initial index {index} outside [0, {dim})")
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps, n_qubits)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        """Squared norm ``sum |amp|^2``; never renormalized."""
        if self._norm is None:
            self._norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        return self._norm

    def invalidate(self) -> None:
        self._norm = None

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        out = StateVector(self.amplitudes.copy(), self.n_qubits, self.unitary_only)
        out.snapshots = dict(self.snapshots)
        return out

    def dump(self, tol: float = 0.0) -> list[tuple[int, float, float]]:
        """``(index, re, im)`` for every amplitude above ``tol`` in magnitude."""
        return [(int(i), float(a.real), float(a.imag))
                for i, a in enumerate(self.amplitudes) if abs(a) > tol]


def apply_gate(state: StateVector, gate, n_system: int, kernels: Optional[ModuleType] = None,
               threads: Optional[int] = None, scratch: Optional[np.ndarray] = None) -> None:
    k = kernels or get_kernels()
    threads = thread_count() if threads is None else threads
    if gate.kind == SYSTEM_UNITARY:
        U = np.ascontiguousarray(gate.matrix, dtype=complex)
        if U.shape != (2 ** n_system, 2 ** n_system):
            raise SimulationError(f"system unitary of shape {U.shape} on {n_system} system qubits")
        if scratch is None:
            scratch = np.empty_like(state.amplitudes)
        k.apply_system(state.amplitudes, U, scratch, threads)
        if not gate.is_unitary:
            state.unitary_only = False
    elif gate.kind in (RY, MCRY):
        if gate.angle == 0.0:
            return
        k.apply_mcry(state.amplitudes, gate.target, gate.control_mask, gate.control_values,
                     gate.angle, threads)
    else:
        raise SimulationError(f"unknown gate kind {gate.kind!r}")
    state.invalidate()


def run(circuit: Circuit, initial: Union[int, np.ndarray] = 0, kernels: Union[str, ModuleType, None] = None,
        check: bool = True) -> StateVector:
    """Evolve ``initial`` (basis index or amplitude array) through ``circuit``.

    Snapshots of the amplitudes are stored in ``state.snapshots`` at every
    stage mark.
    """
    if check:
        problems = validate(circuit)
        if problems:
            raise SimulationError("invalid circuit: " + "; ".join(problems))
    if isinstance(kernels, str) or kernels is None:
        kernels = get_kernels(kernels)
    nq = circuit.layout.n_qubits
    if isinstance(initial, (int, np.integer)):
        state = StateVector.basis(nq, int(initial))
    else:
        amps = np.array(initial, dtype=complex)
        if amps.shape != (2 ** nq,):
            raise SimulationError(f"initial state has shape {amps.shape}, expected ({2 ** nq},)")
        state = StateVector(amps, nq)
    marks: dict[int, list[str]] = {}
    for name, pos in circuit.stage_marks:
        marks.setdefault(pos, []).append(name)
    threads = thread_count()
    scratch = np.empty_like(state.amplitudes)
    n_system = circuit.layout.n_system
    for pos, gate in enumerate(circuit.gates):
        for name in marks.get(pos, ()):
            state.snapshots[name] = state.amplitudes.copy()
        apply_gate(state, gate, n_system, kernels, threads, scratch)
    for name in marks.get(len(circuit.gates), ()):
        state.snapshots[name] = state.amplitudes.copy()
    return state


def amplitude(state: StateVector, outcome: Union[int, str]) -> complex:
    """Amplitude of one basis outcome (index, or little-endian bitstring)."""
    if isinstance(outcome, str):
        if len(outcome) != state.n_qubits or set(outcome) - {"0", "1"}:
            raise SimulationError(f"bitstring {outcome!r} does not match {state.n_qubits} qubits")
        outcome = sum(1 << j for j, c in enumerate(outcome) if c == "1")
    if not 0 <= outcome < state.dim:
        raise SimulationError(f"outcome {outcome} outside [0, {state.dim})")
    return complex(state.amplitudes[outcome])


def sample(state: StateVector, shots: int, seed: int) -> list[MeasurementOutcome]:
    """Measure every qubit ``shots`` times; deterministic for a fixed ``seed``."""
    if not state.unitary_only or abs(state.norm - 1.0) > NORM_TOL:
        raise SimulationError(f"refusing to sample an unnormalized state (norm {state.norm:.12g})")
    if shots < 0:
        raise SimulationError("shots must be non-negative")
    probs = state.probabilities()
    probs = probs / probs.sum()
    counts = np.random.default_rng(seed).multinomial(shots, probs)
    return [MeasurementOutcome("".join(str((i >> j) & 1) for j in range(state.n_qubits)), int(c), int(i))
            for i, c in enumerate(counts) if c]


def counts_of(outcomes: list[MeasurementOutcome], index: int) -> int:
    return sum(o.count for o in outcomes if o.index == index)


def circuit_matrix(circuit: Circuit, kernels: Union[str, ModuleType, None] = None) -> np.ndarray:
    """Dense matrix of ``circuit`` assembled column by column."""
    dim = circuit.layout.dim
    out = np.empty((dim, dim), dtype=complex)
    for col in range(dim):
        out[:, col] = run(circuit, col, kernels, check=col == 0).amplitudes
    return out


__all__ = [
    "BACKEND", "KERNELS", "MeasurementOutcome", "SimulationError", "StateVector", "amplitude",
    "apply_gate", "circuit_matrix", "counts_of", "get_kernels", "run", "sample", "thread_count",
]
