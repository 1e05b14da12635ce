"""Construction of the perturbation gate ``U_V`` and the gap-inversion layers ``U_{E^p}``."""
from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .circuit import Gate
from .system import PerturbedSystem, pauli_matrix

ALPHA_TOL = 1e-12
VARIANTS = ("standard", "improved")


class SynthesisError(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class ThetaTable:
    n: int
    p: int
    C: float
    thetas: np.ndarray


@dataclasses.dataclass(frozen=True)
class AlphaTable:
    alphas: np.ndarray
    residual: float


def _target(sys: PerturbedSystem, n: Optional[int]) -> int:
    return sys.target_level if n is None else int(n)


def select_C(sys: PerturbedSystem, n: Optional[int] = None, p: int = 1) -> float:
    """Largest admissible rotation constant, ``min_{k != n} |E_nk|**p``."""
    n = _target(sys, n)
    E = sys.energies
    gaps = np.abs(np.delete(E[n] - E, n))
    return float(np.min(gaps) ** p)


def theta_angles(sys: PerturbedSystem, n: Optional[int] = None, p: int = 1,
                 C: Optional[float] = None) -> ThetaTable:
    n = _target(sys, n)
    if C is None:
        C = select_C(sys, n, p)
    E = sys.energies
    thetas = np.zeros(sys.dim)
    for k in range(sys.dim):
        if k == n:
            continue
        ratio = C / (E[n] - E[k]) ** p
        if abs(ratio) > 1.0 + 1e-15:
            raise SynthesisError(f"|C / E_nk^p| = {abs(ratio):.17g} > 1 at k={k}")
        thetas[k] = 2.0 * np.arcsin(np.clip(ratio, -1.0, 1.0))
    return ThetaTable(n=n, p=p, C=C, thetas=thetas)


def mobius(values: np.ndarray) -> np.ndarray:
    """Subset Moebius transform: ``out[x] = sum_{y subset x} (-1)^{|x|-|y|} values[y]``."""
    out = np.array(values, dtype=float)
    M = len(out)
    step = 1
    while step < M:
        view = out.reshape(-1, 2, step)
        view[:, 1, :] -= view[:, 0, :]
        step *= 2
    return out


def zeta(values: np.ndarray) -> np.ndarray:
    """Subset zeta transform: ``out[x] = sum_{y subset x} values[y]``."""
    out = np.array(values, dtype=float)
    M = len(out)
    step = 1
    while step < M:
        view = out.reshape(-1, 2, step)
        view[:, 1, :] += view[:, 0, :]
        step *= 2
    return out


def solve_alpha(table: ThetaTable, tol: float = ALPHA_TOL) -> AlphaTable:
    """Angles of the submask-controlled rotations reproducing ``table.thetas``."""
    thetas = np.asarray(table.thetas, dtype=float)
    M = len(thetas)
    if M & (M - 1):
        raise SynthesisError(f"theta table length {M} is not a power of two")
    alphas = mobius(thetas)
    residual = float(np.max(np.abs(zeta(alphas) - thetas))) if M else 0.0
    if residual > tol:
        raise SynthesisError(f"alpha constraint residual {residual:.3e} exceeds {tol:.1e}")
    return AlphaTable(alphas=alphas, residual=residual)


def build_ue(sys: PerturbedSystem, target: int, p: int = 1, variant: str = "improved",
             n: Optional[int] = None, C: Optional[float] = None) -> list[Gate]:
    """Gates of ``U_{E^p}`` writing ``C / E_nk**p`` onto ancilla qubit ``target``.

    ``standard`` uses one fully controlled rotation per level (0-controls
    included); ``improved`` uses one rotation per bitmask ``x`` controlled only
    on the set bits of ``x``.
    """
    table = theta_angles(sys, n, p, C)
    N = sys.n_qubits
    full = (1 << N) - 1
    label = f"UE{p}"
    if variant == "standard":
        return [Gate.mcry(target, table.thetas[k], full, k, label=label) for k in range(sys.dim)]
    if variant == "improved":
        alphas = solve_alpha(table).alphas
        return [Gate.mcry(target, alphas[x], x, x, label=label) for x in range(sys.dim)]
    raise ValueError(f"unknown U_E variant {variant!r}; expected one of {VARIANTS}")


# -- U_V -----------------------------------------------------------------------------------

def parse_backend(backend: str) -> tuple[str, int]:
    """``"exact"``, ``"linearized"`` or ``"trotter:r"`` -> (name, steps)."""
    name, _, steps = backend.partition(":")
    if name == "trotter":
        r = int(steps) if steps else 1
        if r < 1:
            raise ValueError(f"trotter steps must be >= 1, got {r}")
        return name, r
    if name in ("exact", "linearized") and not steps:
        return name, 0
    raise ValueError(f"unknown U_V backend {backend!r}")


def uv_exact(V: np.ndarray, lam: float) -> np.ndarray:
    w, W = np.linalg.eigh(V)
    return (W * np.exp(1j * lam * w)) @ W.conj().T


def uv_trotter(pauli_terms, n_qubits: int, lam: float, steps: int) -> np.ndarray:
    dim = 2 ** n_qubits
    step = np.eye(dim, dtype=complex)
    for coeff, string in pauli_terms:
        phi = lam * coeff / steps
        # P^2 = I, so exp(i phi P) = cos(phi) I + i sin(phi) P
        factor = np.cos(phi) * np.eye(dim) + 1j * np.sin(phi) * pauli_matrix(string)
        step = factor @ step
    return np.linalg.matrix_power(step, steps)


def uv_matrix(sys: PerturbedSystem, backend: str = "exact", steps: Optional[int] = None) -> np.ndarray:
    name, r = parse_backend(backend)
    if steps is not None:
        r = steps
    V, lam = sys.perturbation, sys.lam
    if name == "exact":
        return uv_exact(V, lam)
    if name == "linearized":
        return np.eye(sys.dim, dtype=complex) + 1j * lam * V
    if sys.pauli_terms is None:
        raise SynthesisError("trotter backend requires pauli_terms")
    return uv_trotter(sys.pauli_terms, sys.n_qubits, lam, r)


def build_uv(sys: PerturbedSystem, backend: str = "exact", steps: Optional[int] = None) -> Gate:
    U = uv_matrix(sys, backend, steps)
    return Gate.system_unitary(U, is_unitary=not backend.startswith("linearized"), label="UV")
