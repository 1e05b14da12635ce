"""Extraction of perturbation-theory terms from simulated circuits.

Three readout modes are supported:

``linearized``
    ``U_V = I + i lam V``.  The post-selected amplitude is then an exact
    polynomial in ``lam`` whose top coefficient is ``prefactor * term``.
``unitary``
    ``U_V = exp(i lam V)`` (or its Trotterization).  The ``lam**m`` series
    coefficient is recovered by interpolation with one spare node, which
    strips lower-order contamination; the remaining same-order bias is
    predicted by :func:`ptq.oracle.uv_series_bias`.
``sampling``
    Outcome counts from the unitary circuit; only ``|term|`` is recoverable.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import sim
from .builders import TermCircuit, build_aux_circuit, build_term_circuit
from .oracle import PTCorrections, pt_corrections, uv_series_bias
from .synthesis import select_C
from .system import PerturbedSystem

ESTIMATED_TERMS = ("eps3", "eps4", "m_a", "m_b", "m_c", "e2")
MODES = ("linearized", "unitary", "sampling")


class EstimationError(RuntimeError):
    pass


@dataclasses.dataclass
class TermEstimate:
    term: str
    mode: str
    value: float
    predicted_bias: float = 0.0
    lambda_nodes: tuple[float, ...] = ()
    shots: Optional[int] = None
    seed: Optional[int] = None
    magnitude_only: bool = False
    std_error: Optional[float] = None
    probability: Optional[float] = None
    probability_std_error: Optional[float] = None
    raw: Optional[complex] = None
    note: str = ""

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambda_nodes"] = list(self.lambda_nodes)
        if self.raw is not None:
            d["raw"] = [self.raw.real, self.raw.imag]
        return d


def _term_of(tc_or_term: Union[TermCircuit, str]) -> str:
    return tc_or_term.term if isinstance(tc_or_term, TermCircuit) else tc_or_term


def lambda_nodes(lam: float, degree: int) -> np.ndarray:
    """Geometric ladder ``lam * 2**-j`` for ``j = 0..degree``."""
    return lam * 2.0 ** -np.arange(degree + 1)


def series_coefficient(values: Sequence[complex], lam: float, order: int) -> complex:
    """Coefficient of ``lam**order`` of the polynomial through the ladder samples."""
    values = np.asarray(values, dtype=complex)
    t = 2.0 ** -np.arange(len(values))
    coeffs = np.linalg.solve(np.vander(t, increasing=True), values)
    return coeffs[order] / lam ** order


def postselected_amplitudes(sys: PerturbedSystem, term: str, lams: Iterable[float],
                            variant: str = "improved", backend: str = "exact",
                            kernels=None) -> tuple[np.ndarray, TermCircuit]:
    out = []
    tc = None
    for lam in lams:
        tc = build_term_circuit(sys.with_lambda(lam), term, variant, backend)
        state = sim.run(tc.circuit, tc.layout.index(tc.target_level), kernels)
        out.append(sim.amplitude(state, tc.post_select))
    return np.array(out), tc


def extract_term_linearized(sys: PerturbedSystem, tc: Union[TermCircuit, str],
                            variant: str = "improved", kernels=None) -> TermEstimate:
    term = _term_of(tc)
    probe = build_term_circuit(sys, term, variant, "linearized")
    m = probe.signal_order
    lams = lambda_nodes(sys.lam, m)
    amps, probe = postselected_amplitudes(sys, term, lams, variant, "linearized", kernels)
    raw = series_coefficient(amps, sys.lam, m) / probe.prefactor
    return TermEstimate(term, "linearized", float(raw.real), 0.0, tuple(lams), raw=complex(raw))


def extract_term_unitary(sys: PerturbedSystem, tc: Union[TermCircuit, str],
                         variant: str = "improved", backend: str = "exact",
                         kernels=None) -> TermEstimate:
    term = _term_of(tc)
    probe = build_term_circuit(sys, term, variant, backend)
    m = probe.signal_order
    lams = lambda_nodes(sys.lam, m + 1)
    amps, probe = postselected_amplitudes(sys, term, lams, variant, backend, kernels)
    # dividing by i**m maps the signal component (imaginary for odd m, real for even) onto the real axis
    raw = series_coefficient(amps, sys.lam, m) / probe.prefactor
    return TermEstimate(term, "unitary", float(raw.real), uv_series_bias(sys, term), tuple(lams),
                        raw=complex(raw))


def extract_term_sampling(sys: PerturbedSystem, tc: Union[TermCircuit, str], shots: int, seed: int,
                          variant: str = "improved", backend: str = "exact",
                          kernels=None) -> TermEstimate:
    term = _term_of(tc)
    if backend.startswith("linearized"):
        raise EstimationError("sampling requires a unitary U_V backend")
    if shots <= 0:
        raise EstimationError("sampling mode needs a positive shot count")
    circ = build_term_circuit(sys, term, variant, backend)
    state = sim.run(circ.circuit, circ.layout.index(circ.target_level), kernels)
    outcomes = sim.sample(state, shots, seed)
    hits = sim.counts_of(outcomes, circ.post_select)
    pr = hits / shots
    scale = sys.lam ** circ.signal_order * abs(circ.prefactor)
    pr_se = math.sqrt(pr * (1.0 - pr) / shots)
    value = math.sqrt(pr) / scale if scale else 0.0
    se = pr_se / (2.0 * math.sqrt(pr)) / scale if pr > 0 and scale else float("nan")
    note = "" if hits else "no accepted shots"
    return TermEstimate(term, "sampling", value, uv_series_bias(sys, term), (sys.lam,), shots, seed,
                        magnitude_only=True, std_error=se, probability=pr,
                        probability_std_error=pr_se, note=note)


def estimate_term(sys: PerturbedSystem, term: str, mode: str = "linearized", variant: str = "improved",
                  backend: str = "exact", shots: Optional[int] = None, seed: int = 0,
                  kernels=None) -> TermEstimate:
    if mode == "linearized":
        return extract_term_linearized(sys, term, variant, kernels)
    if mode == "unitary":
        return extract_term_unitary(sys, term, variant, backend, kernels)
    if mode == "sampling":
        if shots is None:
            raise EstimationError("sampling mode needs shots")
        return extract_term_sampling(sys, term, shots, seed, variant, backend, kernels)
    raise EstimationError(f"unknown mode {mode!r}; expected one of {MODES}")


def first_order_state(sys: PerturbedSystem, variant: str = "improved", kernels=None) -> list[tuple[int, complex]]:
    """First-order eigenstate coefficients ``V_kn / E_nk`` read from the ancilla-|1> branch."""
    tc = build_aux_circuit(sys, "state1", variant, "linearized")
    state = sim.run(tc.circuit, tc.layout.index(tc.target_level), kernels)
    snap = state.snapshots["phi_III"]
    n, C = tc.target_level, tc.constants[0]
    return [(k, complex(snap[tc.layout.index(k, [1])] / (1j * sys.lam * C)))
            for k in range(sys.dim) if k != n]


# -- assembly ------------------------------------------------------------------------------

def assemble(e1: float, t: Mapping[str, float]) -> tuple[float, float]:
    e3 = t["eps3"] - e1 * t["m_b"]
    e4 = t["eps4"] - t["m_b"] * t["e2"] - 2.0 * e1 * t["m_a"] + e1 ** 2 * t["m_c"]
    return e3, e4


@dataclasses.dataclass
class PTReport:
    oracle: PTCorrections
    estimates: dict[str, TermEstimate]
    assembled_e3: float
    assembled_e4: float
    predicted_e3_bias: float
    predicted_e4_bias: float
    config: dict

    @property
    def deviations(self) -> dict[str, float]:
        out = {t: est.value - self.oracle.term(t) for t, est in self.estimates.items()}
        out["e3"] = self.assembled_e3 - self.oracle.e3
        out["e4"] = self.assembled_e4 - self.oracle.e4
        return out

    def recompute(self) -> tuple[float, float]:
        return assemble(self.oracle.e1, {t: e.value for t, e in self.estimates.items()})

    def rows(self) -> list[dict]:
        rows = []
        dev = self.deviations
        for t, est in self.estimates.items():
            rows.append({"term": t, "mode": est.mode, "value": est.value, "oracle": self.oracle.term(t),
                         "bias": est.predicted_bias, "deviation": dev[t]})
        mode = next(iter(self.estimates.values())).mode if self.estimates else ""
        for name, val, bias in (("e3", self.assembled_e3, self.predicted_e3_bias),
                                ("e4", self.assembled_e4, self.predicted_e4_bias)):
            rows.append({"term": name, "mode": f"assembled-{mode}", "value": val,
                         "oracle": self.oracle.term(name), "bias": bias, "deviation": dev[name]})
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["term", "mode", "value", "oracle", "bias", "deviation"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: fmt(v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return round_floats({
            "oracle": self.oracle.as_dict(),
            "estimates": {t: e.as_dict() for t, e in self.estimates.items()},
            "assembled_e3": self.assembled_e3,
            "assembled_e4": self.assembled_e4,
            "predicted_e3_bias": self.predicted_e3_bias,
            "predicted_e4_bias": self.predicted_e4_bias,
            "deviations": self.deviations,
            "config": self.config,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x + 0.0:.12g}"
    return str(x)


def round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def assemble_corrections(sys: PerturbedSystem, estimates, config: Optional[dict] = None,
                         oracle: Optional[PTCorrections] = None) -> PTReport:
    """Combine term estimates into ``E^(3)`` and ``E^(4)``; ``E^(1) = V_nn`` comes from the oracle."""
    if not isinstance(estimates, Mapping):
        estimates = {e.term: e for e in estimates}
    missing = [t for t in ESTIMATED_TERMS if t not in estimates]
    if missing:
        raise EstimationError(f"missing term estimates: {missing}")
    oracle = pt_corrections(sys) if oracle is None else oracle
    values = {t: estimates[t].value for t in ESTIMATED_TERMS}
    e3, e4 = assemble(oracle.e1, values)
    predicted = {t: oracle.term(t) + estimates[t].predicted_bias for t in ESTIMATED_TERMS}
    p3, p4 = assemble(oracle.e1, predicted)
    return PTReport(oracle, {t: estimates[t] for t in ESTIMATED_TERMS}, e3, e4,
                    p3 - oracle.e3, p4 - oracle.e4, dict(config or {}))


def estimate_all(sys: PerturbedSystem, mode: str = "linearized", variant: str = "improved",
                 backend: str = "exact", shots: Optional[int] = None, seed: int = 0,
                 kernels=None) -> PTReport:
    ests = {t: estimate_term(sys, t, mode, variant, backend, shots, seed + i, kernels)
            for i, t in enumerate(ESTIMATED_TERMS)}
    config = {"lambda": sys.lam, "target_level": sys.target_level, "mode": mode, "ue_variant": variant,
              "uv_backend": backend if mode != "linearized" else "linearized", "shots": shots, "seed": seed,
              "C": {f"p{p}": select_C(sys, None, p) for p in (1, 2, 3)}, "kernels": sim.BACKEND}
    return assemble_corrections(sys, ests, config)

