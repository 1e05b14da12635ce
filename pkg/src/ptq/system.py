"""Perturbed-system input model.

A :class:`PerturbedSystem` holds the unperturbed spectrum ``E_k``, the
perturbation matrix ``V`` written in the unperturbed eigenbasis, the coupling
``lam`` and the target level ``n``.  Basis index ``k`` maps to the system
register little-endian: qubit ``j`` carries bit ``j`` of ``k``.
"""
from __future__ import annotations

import dataclasses
import json
from functools import reduce
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

DEGENERACY_TOL = 1e-9
HERMITIAN_TOL = 1e-12
PAULI_TOL = 1e-10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ProblemError(ValueError):
    """Base class for invalid problem input."""


class ParseError(ProblemError):
    pass


class DegeneracyError(ProblemError):
    pass


class HermiticityError(ProblemError):
    pass


class PauliMismatchError(ProblemError):
    pass


def pauli_matrix(string: str) -> np.ndarray:
    """Dense matrix of a Pauli string; character ``j`` acts on qubit ``j``."""
    try:
        factors = [_PAULI[c] for c in string.upper()]
    except KeyError as exc:
        raise ParseError(f"bad Pauli character in {string!r}") from exc
    # qubit 0 is the least significant bit, so it is the rightmost Kronecker factor
    return reduce(np.kron, reversed(factors), np.eye(1, dtype=complex))


def pauli_sum_matrix(terms: Sequence[tuple[float, str]], n_qubits: int) -> np.ndarray:
    dim = 2 ** n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in terms:
        if len(string) != n_qubits:
            raise ParseError(f"Pauli string {string!r} has length {len(string)}, expected {n_qubits}")
        out += coeff * pauli_matrix(string)
    return out


@dataclasses.dataclass(frozen=True)
class PerturbedSystem:
    n_qubits: int
    energies: np.ndarray
    perturbation: np.ndarray
    lam: float
    target_level: int
    pauli_terms: Optional[tuple[tuple[float, str], ...]] = None
    degeneracy_tol: float = DEGENERACY_TOL

    def __post_init__(self):
        energies = np.array(self.energies, dtype=float)
        perturbation = np.array(self.perturbation, dtype=complex)
        energies.setflags(write=False)
        perturbation.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "perturbation", perturbation)
        if self.pauli_terms is not None:
            terms = tuple((float(c), str(s).upper()) for c, s in self.pauli_terms)
            object.__setattr__(self, "pauli_terms", terms)
        self.validate()

    @property
    def dim(self) -> int:
        """Number of unperturbed levels ``M = 2**N``."""
        return 2 ** self.n_qubits

    @property
    def n(self) -> int:
        return self.target_level

    def validate(self) -> None:
        N, M = self.n_qubits, 2 ** self.n_qubits
        if not isinstance(N, (int, np.integer)) or N < 1:
            raise ParseError(f"n_qubits must be a positive integer, got {N!r}")
        if self.energies.shape != (M,):
            raise ParseError(f"expected {M} energies, got shape {self.energies.shape}")
        if self.perturbation.shape != (M, M):
            raise ParseError(f"perturbation must be {M}x{M}, got {self.perturbation.shape}")
        if not (np.all(np.isfinite(self.energies)) and np.all(np.isfinite(self.perturbation))):
            raise ParseError("non-finite entries in energies or perturbation")
        if not 0 <= self.target_level < M:
            raise ParseError(f"target_level {self.target_level} outside [0, {M})")
        if not np.isfinite(self.lam):
            raise ParseError("lambda must be finite")
        gap = min_gap(self.energies)
        if gap <= self.degeneracy_tol:
            raise DegeneracyError(f"degenerate spectrum: minimum gap {gap:.3e} <= {self.degeneracy_tol:.1e}")
        herm = np.max(np.abs(self.perturbation - self.perturbation.conj().T))
        if herm > HERMITIAN_TOL:
            raise HermiticityError(f"perturbation is not Hermitian (max deviation {herm:.3e})")
        if self.pauli_terms is not None:
            dense = pauli_sum_matrix(self.pauli_terms, N)
            dev = np.max(np.abs(dense - self.perturbation))
            if dev > PAULI_TOL:
                raise PauliMismatchError(f"pauli_terms differ from perturbation by {dev:.3e}")

    def with_lambda(self, lam: float) -> "PerturbedSystem":
        return dataclasses.replace(self, lam=float(lam))

    def with_target(self, n: int) -> "PerturbedSystem":
        return dataclasses.replace(self, target_level=int(n))

    def gap(self, k: int) -> float:
        """``E_nk = E_n - E_k`` for the target level."""
        return float(self.energies[self.target_level] - self.energies[k])

    def gap_table(self, p: int = 1) -> "EnergyGapTable":
        return EnergyGapTable.from_system(self, p)


def min_gap(energies: np.ndarray) -> float:
    if len(energies) < 2:
        return np.inf
    return float(np.min(np.diff(np.sort(energies))))


@dataclasses.dataclass(frozen=True)
class EnergyGapTable:
    """Powers ``E_nk**p`` for every ``k != n``, keyed by ``k``."""

    n: int
    p: int
    gaps: dict

    @classmethod
    def from_system(cls, sys: PerturbedSystem, p: int) -> "EnergyGapTable":
        if p not in (1, 2, 3):
            raise ValueError(f"gap power must be 1, 2 or 3, got {p}")
        n = sys.target_level
        gaps = {k: (sys.energies[n] - sys.energies[k]) ** p for k in range(sys.dim) if k != n}
        return cls(n=n, p=p, gaps=gaps)

    def as_array(self, fill: float = np.nan) -> np.ndarray:
        out = np.full(len(self.gaps) + 1, fill)
        for k, g in self.gaps.items():
            out[k] = g
        return out


def diagonalize_h0(h0) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize an unperturbed Hamiltonian.

    Returns ascending eigenvalues and the unitary ``T`` with
    ``T @ h0 @ T.conj().T`` diagonal, i.e. ``T`` sends each eigenvector to the
    matching computational basis state.
    """
    h0 = np.asarray(h0, dtype=complex)
    if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
        raise ParseError(f"h0 must be square, got shape {h0.shape}")
    dev = np.max(np.abs(h0 - h0.conj().T)) if h0.size else 0.0
    if dev > HERMITIAN_TOL:
        raise HermiticityError(f"h0 is not Hermitian (max deviation {dev:.3e})")
    try:
        energies, vecs = np.linalg.eigh(h0)
    except np.linalg.LinAlgError as exc:
        raise ProblemError(f"eigensolver failed: {exc}") from exc
    return energies, vecs.conj().T


def system_from_hamiltonian(h0, v, lam: float, target_level: int, **kw) -> PerturbedSystem:
    """Rewrite ``v`` in the eigenbasis of ``h0`` and build the system."""
    energies, T = diagonalize_h0(h0)
    v = np.asarray(v, dtype=complex)
    v_eig = T @ v @ T.conj().T
    v_eig = 0.5 * (v_eig + v_eig.conj().T)
    N = int(round(np.log2(len(energies))))
    return PerturbedSystem(N, energies, v_eig, lam, target_level, **kw)


def _parse_complex_matrix(raw, M: int) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape == (M, M, 2):
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.shape == (M, M):
        return arr.astype(complex)
    raise ParseError(f"perturbation must be an {M}x{M} array of [re, im] pairs, got shape {arr.shape}")


def parse_system(doc: dict, degeneracy_tol: float = DEGENERACY_TOL) -> PerturbedSystem:
    try:
        N = doc["n_qubits"]
        if not isinstance(N, int) or isinstance(N, bool) or N < 1:
            raise ParseError(f"n_qubits must be a positive integer, got {N!r}")
        M = 2 ** N
        energies = np.asarray(doc["energies"], dtype=float)
        perturbation = _parse_complex_matrix(doc["perturbation"], M)
        pauli = doc.get("pauli_terms")
        if pauli is not None:
            pauli = tuple((float(t["coefficient"]), str(t["string"])) for t in pauli)
        lam = float(doc["lambda"])
        n = doc["target_level"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ParseError(f"target_level must be an integer, got {n!r}")
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProblemError):
            raise
        raise ParseError(str(exc)) from exc
    return PerturbedSystem(N, energies, perturbation, lam, n, pauli, degeneracy_tol)


def load_system(document, degeneracy_tol: float = DEGENERACY_TOL) -> PerturbedSystem:
    """Parse a problem document: a dict, a path, or JSON text.

    A string counts as JSON text when its first non-blank character opens a
    JSON value; otherwise it is read as a file path.
    """
    if isinstance(document, dict):
        return parse_system(document, degeneracy_tol)
    if isinstance(document, str) and not document.lstrip().startswith(("{", "[")):
        document = Path(document)
    if isinstance(document, Path):
        document = document.read_text()
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("problem document must be a JSON object")
    return parse_system(doc, degeneracy_tol)


def dump_system(sys: PerturbedSystem) -> dict:
    V = sys.perturbation
    doc = {
        "n_qubits": sys.n_qubits,
        "energies": [float(e) for e in sys.energies],
        "perturbation": [[[float(z.real), float(z.imag)] for z in row] for row in V],
        "lambda": sys.lam,
        "target_level": sys.target_level,
    }
    if sys.pauli_terms is not None:
        doc["pauli_terms"] = [{"coefficient": c, "string": s} for c, s in sys.pauli_terms]
    return doc


def random_system(n_qubits: int, seed: int, lam: float = 1e-2, target_level: Optional[int] = None,
                  v_norm: float = 1.0, min_spacing: float = 0.5) -> PerturbedSystem:
    """Seeded random non-degenerate system with spectral norm ``||V|| = v_norm``."""
    rng = np.random.default_rng(seed)
    M = 2 ** n_qubits
    spacings = min_spacing + rng.random(M - 1)
    energies = np.concatenate([[0.0], np.cumsum(spacings)])
    energies = rng.permutation(energies)
    A = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
    V = (A + A.conj().T) / 2
    V *= v_norm / np.linalg.norm(V, 2)
    n = int(rng.integers(M)) if target_level is None else target_level
    return PerturbedSystem(n_qubits, energies, V, lam, n)


def pauli_decompose(V: np.ndarray, tol: float = 1e-14) -> tuple[tuple[float, str], ...]:
    """Expand a Hermitian matrix as a real combination of Pauli strings."""
    V = np.asarray(V, dtype=complex)
    N = int(round(np.log2(V.shape[0])))
    terms = []
    for idx in np.ndindex(*([4] * N)):
        string = "".join("IXYZ"[i] for i in idx)
        coeff = np.trace(pauli_matrix(string) @ V).real / V.shape[0]
        if abs(coeff) > tol:
            terms.append((float(coeff), string))
    return tuple(terms)
