"""Classical Rayleigh-Schroedinger reference values.

Everything here is computed by direct summation over the unperturbed basis
and never touches the circuit simulator, so it can serve as ground truth for
the circuit estimators.
"""
from __future__ import annotations

import dataclasses
import math
from itertools import product
from typing import Sequence

import numpy as np

from .system import PerturbedSystem

#: gap powers of the rotation layers for every circuit-estimated term, in circuit order
TERM_POWERS: dict[str, tuple[int, ...]] = {
    "e2": (1,),
    "m_b": (2,),
    "m_c": (3,),
    "m_a": (2, 1),
    "eps3": (1, 1),
    "eps4": (1, 1, 1),
}

EPSILON_BUDGET = 16 ** 4


class BudgetExceeded(RuntimeError):
    pass


class MatchingError(RuntimeError):
    """Perturbed eigenvectors cannot be assigned to unperturbed levels."""


def term_powers(term: str) -> tuple[int, ...]:
    if term in TERM_POWERS:
        return TERM_POWERS[term]
    if term.startswith("eps"):
        m = int(term[3:])
        if m < 2:
            raise ValueError(f"epsilon order must be >= 2, got {m}")
        return (1,) * (m - 1)
    raise KeyError(f"unknown term {term!r}")


def _fsum_complex(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


@dataclasses.dataclass(frozen=True)
class PTCorrections:
    e1: float
    e2: float
    e3: float
    e4: float
    eps3: float
    eps4: float
    m_a: float
    m_b: float
    m_c: float
    #: largest imaginary residue of the fields that must be real, relative to max(1, |field|)
    max_imag: float = 0.0
    #: Im of the m_a sum, which is genuinely complex for complex V; E^(4) only needs Re
    m_a_imag: float = 0.0

    def term(self, name: str) -> float:
        return getattr(self, name)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _inverse_gaps(sys: PerturbedSystem, p: int = 1) -> np.ndarray:
    """``1 / E_nk**p`` with the ``k = n`` entry set to zero (it is excluded from every sum)."""
    E = sys.energies
    n = sys.target_level
    d = E[n] - E
    out = np.zeros_like(d)
    mask = np.arange(len(E)) != n
    out[mask] = 1.0 / d[mask] ** p
    return out


def _raw_terms(sys: PerturbedSystem, compensated: bool = False) -> dict[str, complex]:
    V = sys.perturbation
    n = sys.target_level
    g1, g2, g3 = (_inverse_gaps(sys, p) for p in (1, 2, 3))
    row, col = V[n, :], V[:, n]
    absq = np.abs(col) ** 2
    if compensated:
        s = lambda x: _fsum_complex(np.ravel(x))
    else:
        s = lambda x: complex(np.sum(x))
    path1 = g1 * col                      # V_k1n / E_nk1
    mid = V * g1[:, None]                 # V_k2k1 / E_nk2
    eps3 = s(row[:, None] * mid * path1[None, :])
    path2 = mid @ path1                   # sum_k1 V_k2k1 V_k1n / (E_nk1 E_nk2)
    eps4 = s(row[:, None] * (V * g1[:, None]) * path2[None, :])
    m_a = s(row[:, None] * (V * g1[:, None]) * (g2 * col)[None, :])
    return {
        "e1": V[n, n],
        "e2": s(absq * g1),
        "m_b": s(absq * g2),
        "m_c": s(absq * g3),
        "eps3": eps3,
        "eps4": eps4,
        "m_a": m_a,
    }


def pt_corrections(sys: PerturbedSystem, compensated: bool = False) -> PTCorrections:
    """All four energy corrections of level ``n`` together with their constituent sums."""
    raw = _raw_terms(sys, compensated)
    max_imag = max(abs(v.imag) / max(1.0, abs(v)) for k, v in raw.items() if k != "m_a")
    t = {k: float(v.real) for k, v in raw.items()}
    e3 = t["eps3"] - t["e1"] * t["m_b"]
    e4 = t["eps4"] - t["m_b"] * t["e2"] - 2 * t["e1"] * t["m_a"] + t["e1"] ** 2 * t["m_c"]
    return PTCorrections(e3=e3, e4=e4, max_imag=float(max_imag), m_a_imag=float(raw["m_a"].imag), **t)


def correction(sys: PerturbedSystem, order: int, compensated: bool = False) -> float:
    """``E_n^(order)`` for ``order`` in 0..4."""
    if order == 0:
        return float(sys.energies[sys.target_level])
    if order not in (1, 2, 3, 4):
        raise ValueError(f"order must be between 0 and 4, got {order}")
    return getattr(pt_corrections(sys, compensated), f"e{order}")


def epsilon_m(sys: PerturbedSystem, m: int, budget: int = EPSILON_BUDGET) -> float:
    """Leading nested sum of the order-``m`` correction.

    Enumerates every index path ``k_1 .. k_{m-1}`` (all ``!= n``) explicitly;
    refuses rather than truncates when ``(M-1)**(m-1)`` exceeds ``budget``.
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    M, n = sys.dim, sys.target_level
    paths = (M - 1) ** (m - 1)
    if paths > budget:
        raise BudgetExceeded(f"{paths} index paths exceed budget {budget}")
    V = sys.perturbation
    E = sys.energies
    others = [k for k in range(M) if k != n]
    total = 0j
    for ks in product(others, repeat=m - 1):
        val = V[ks[0], n]
        for j in range(m - 2):
            val *= V[ks[j + 1], ks[j]] / (E[n] - E[ks[j]])
        total += val * V[n, ks[-1]] / (E[n] - E[ks[-1]])
    return total.real


def _matched_eigh(H: np.ndarray, min_overlap: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``eigh`` plus the unperturbed level owning each eigenvector (largest ``|<k|v_j>|^2``)."""
    w, vecs = np.linalg.eigh(H)
    overlaps = np.abs(vecs) ** 2          # overlaps[k, j] = |<k|v_j>|^2
    owner = np.argmax(overlaps, axis=0)
    best = overlaps[owner, np.arange(len(w))]
    if np.min(best) < min_overlap or len(set(owner.tolist())) != len(w):
        raise MatchingError(
            f"ambiguous level matching (min best overlap {np.min(best):.3f}); lambda too large?"
        )
    return w, vecs, owner


def exact_spectrum(sys: PerturbedSystem, min_overlap: float = 0.5) -> np.ndarray:
    """Eigenvalues of ``H0 + lam V``, entry ``k`` being the level continuously connected to ``k``."""
    H = np.diag(sys.energies).astype(complex) + sys.lam * sys.perturbation
    w, _, owner = _matched_eigh(H, min_overlap)
    out = np.empty_like(w)
    out[owner] = w
    return out


def level_shift(sys: PerturbedSystem, min_overlap: float = 0.5) -> float:
    """``E_n(lam) - E_n^(0)`` resolved well below double round-off of the eigenvalue itself.

    The Hamiltonian is shifted so the target diagonal entry is exactly zero;
    the shift is then the Rayleigh quotient of the matched eigenvector,
    accumulated in extended precision.  Its error is quadratic in the
    eigenvector error, so it stays accurate when the shift is tiny.
    """
    n = sys.target_level
    H = np.diag(sys.energies - sys.energies[n]).astype(complex) + sys.lam * sys.perturbation
    _, vecs, owner = _matched_eigh(H, min_overlap)
    x = vecs[:, int(np.flatnonzero(owner == n)[0])].astype(np.clongdouble)
    Hx = H.astype(np.clongdouble) @ x
    return float((np.vdot(x, Hx) / np.vdot(x, x)).real)


# -- truncated power series in lambda ------------------------------------------------------

def _series_matmul(U: Sequence[np.ndarray], v: np.ndarray, degree: int) -> np.ndarray:
    """Cauchy product of a matrix series with a vector series, truncated at ``degree``."""
    out = np.zeros_like(v)
    for j in range(degree + 1):
        for a in range(j + 1):
            out[j] += U[a] @ v[j - a]
    return out


def exp_series(V: np.ndarray, degree: int) -> list[np.ndarray]:
    """Coefficients of ``exp(i lam V)`` in powers of ``lam``."""
    coeffs = [np.eye(V.shape[0], dtype=complex)]
    for j in range(1, degree + 1):
        coeffs.append(coeffs[-1] @ (1j * V) / j)
    return coeffs


def linear_series(V: np.ndarray) -> list[np.ndarray]:
    return [np.eye(V.shape[0], dtype=complex), 1j * V]


def postselected_series(sys: PerturbedSystem, powers: Sequence[int], uv_series,
                        degree: int) -> np.ndarray:
    """Power-series coefficients of ``<n| U G_last U ... G_1 U |n>``.

    ``G_p`` is diagonal with entries ``1/E_nk**p`` (zero at ``k = n``), the
    ancilla-|1> branch of a rotation layer with the constant C divided out.
    """
    M, n = sys.dim, sys.target_level
    U = list(uv_series) + [np.zeros((M, M), complex)] * max(0, degree + 1 - len(uv_series))
    v = np.zeros((degree + 1, M), dtype=complex)
    v[0, n] = 1.0
    v = _series_matmul(U, v, degree)
    for p in powers:
        v = v * _inverse_gaps(sys, p)[None, :]
        v = _series_matmul(U, v, degree)
    return v[:, n]


def uv_series_bias(sys: PerturbedSystem, term: str) -> float:
    """Same-order bias of a term extracted through the exponential ``U_V``.

    The coefficient of ``lam**m`` (``m`` = number of ``U_V`` layers) in the
    post-selected amplitude, divided by ``i**m``, equals the target term plus
    this bias.  Both pieces come from series contraction; the first-order-only
    contraction supplies the target so the difference isolates the higher-order
    exponential terms.
    """
    powers = term_powers(term)
    m = len(powers) + 1
    V = sys.perturbation
    full = postselected_series(sys, powers, exp_series(V, m), m)[m]
    lin = postselected_series(sys, powers, linear_series(V), m)[m]
    return ((full - lin) / 1j ** m).real


def term_value(corr: PTCorrections, term: str, sys: PerturbedSystem | None = None) -> float:
    if hasattr(corr, term):
        return getattr(corr, term)
    if term.startswith("eps") and sys is not None:
        return epsilon_m(sys, int(term[3:]))
    raise KeyError(term)
