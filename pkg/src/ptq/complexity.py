"""Weighted basic-gate counts for the ``U_E`` layers and the term circuits.

Counts are in "weighted basic gates": a ``C^j R_y`` costs ``cnry_cost(j)``
and one ``U_V`` costs ``uv_cost(N)``.  Only relative scaling is meaningful.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from typing import Callable, Iterable


def quadratic_cnry(j: int) -> int:
    return max(1, j * j)


def linear_uv(N: int) -> int:
    return N


@dataclasses.dataclass(frozen=True)
class CostModel:
    cnry_cost: Callable[[int], float] = quadratic_cnry
    uv_cost: Callable[[int], float] = linear_uv

    def check(self, max_n: int = 16) -> None:
        costs = [self.cnry_cost(j) for j in range(max_n + 1)]
        if any(c <= 0 for c in costs) or any(b < a for a, b in zip(costs, costs[1:])):
            raise ValueError("cnry_cost must be positive and nondecreasing")


DEFAULT_MODEL = CostModel()


def ue_cost(N: int, variant: str = "improved", model: CostModel = DEFAULT_MODEL):
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if variant == "standard":
        return 2 ** N * model.cnry_cost(N)
    if variant == "improved":
        return sum(math.comb(N, j) * model.cnry_cost(j) for j in range(N + 1))
    raise ValueError(f"unknown variant {variant!r}")


def circuit_cost(N: int, m: int, model: CostModel = DEFAULT_MODEL, variant: str = "improved"):
    """Cost of the order-``m`` epsilon circuit: ``m-1`` rotation layers and ``m`` perturbation gates."""
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    return (m - 1) * ue_cost(N, variant, model) + m * model.uv_cost(N)


@dataclasses.dataclass(frozen=True)
class CostRow:
    N: int
    M: int
    standard_ue: float
    improved_ue: float
    circuit_e3: float
    circuit_e4: float

    @property
    def ratio(self) -> float:
        return self.improved_ue / self.standard_ue


@dataclasses.dataclass(frozen=True)
class CostReport:
    rows: tuple[CostRow, ...]

    def to_csv(self, ratio: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["N", "M", "standard_ue", "improved_ue", "circuit_e3", "circuit_e4"]
        w.writerow(header + (["improved_over_standard"] if ratio else []))
        for r in self.rows:
            vals = [r.N, r.M, r.standard_ue, r.improved_ue, r.circuit_e3, r.circuit_e4]
            if ratio:
                vals.append(f"{r.ratio:.12g}")
            w.writerow(vals)
        return buf.getvalue()

    def to_loglog(self) -> str:
        """Whitespace-separated log10 columns for plotting against M."""
        lines = ["# log10(M) log10(standard_ue) log10(improved_ue) log10(circuit_e3) log10(circuit_e4)"]
        for r in self.rows:
            vals = (r.M, r.standard_ue, r.improved_ue, r.circuit_e3, r.circuit_e4)
            lines.append(" ".join(f"{math.log10(v):.12g}" for v in vals))
        return "\n".join(lines) + "\n"


def scaling_report(n_range: Iterable[int], model: CostModel = DEFAULT_MODEL) -> CostReport:
    n_range = list(n_range)
    if not n_range:
        raise ValueError("empty N range")
    model.check(max(n_range))
    rows = tuple(
        CostRow(N, 2 ** N, ue_cost(N, "standard", model), ue_cost(N, "improved", model),
                circuit_cost(N, 3, model), circuit_cost(N, 4, model))
        for N in n_range
    )
    for r in rows:
        if r.N >= 2 and r.improved_ue > r.standard_ue:
            raise AssertionError(f"improved U_E costlier than standard at N={r.N}")
    return CostReport(rows)
