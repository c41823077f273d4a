"""Goodness classification of a threshold j against a graph family.

A threshold can be good for the monotone process (omega) or for the
threshold/majority pair (chi), each witnessed by one of a short list of
sufficient conditions.  All inequalities here involve quadratic surds and
are decided exactly; nothing in this module touches floating point except
for display copies of the constants.

The vertex-expansion condition only ever consumes a certified lower bound,
so a failed check means "not decided by our bounds", never "false"; the
verdict field says "open" in that case.
"""
from __future__ import annotations

from dataclasses import dataclass

from kcmlab.graphs import (Graph, alpha_lower_surd, build_hyperbolic,
                           compute_jbar, is_bipartite, phi_e_surd)
from kcmlab.surd import Surd

OMEGA_ITEMS = ("a", "b")
CHI_ITEMS = ("i", "ii", "iii", "iv")


@dataclass(frozen=True)
class ClassifyInputs:
    """Constants the items are evaluated against.

    Delta and delta are the max/min degree of the (infinite) graph, not of
    a truncation; phi_v_lower is a certified lower bound or None when no
    bound is available; jbar is a finite-radius witness or None.
    """
    Delta: int
    delta: int
    phi_e: Surd | None = None
    phi_v_lower: Surd | None = None
    jbar: int | None = None
    bipartite: bool = False
    regular_tree: bool = False
    d: int | None = None

    def describe(self) -> dict:
        return {
            "Delta": self.Delta,
            "delta": self.delta,
            "phi_e": None if self.phi_e is None else float(self.phi_e),
            "phi_v_lower": (None if self.phi_v_lower is None
                            else float(self.phi_v_lower)),
            "jbar": self.jbar,
            "bipartite": self.bipartite,
            "regular_tree": self.regular_tree,
            "d": self.d,
        }


@dataclass(frozen=True)
class GoodnessReport:
    j: int
    omega_good: bool
    omega_item: str       # "a" | "b" | "none"
    chi_good: bool
    chi_item: str         # "i" | "ii" | "iii" | "iv" | "none"
    inputs_used: ClassifyInputs

    @property
    def omega_verdict(self) -> str:
        return "good" if self.omega_good else "open"

    @property
    def chi_verdict(self) -> str:
        return "good" if self.chi_good else "open"


def _item_a(j: int, inp: ClassifyInputs) -> bool:
    # j < phi_e + 1
    return inp.phi_e is not None and inp.phi_e.shift(1 - j).sign() > 0


def _item_b(j: int, inp: ClassifyInputs) -> bool:
    return inp.jbar is not None and j <= inp.jbar


def _item_i(j: int, inp: ClassifyInputs) -> bool:
    # 2j < 3 phi_e - Delta + 2
    return (inp.phi_e is not None
            and inp.phi_e.scale(3).shift(2 - inp.Delta - 2 * j).sign() > 0)


def _item_ii(j: int, inp: ClassifyInputs) -> bool:
    return inp.bipartite and _item_a(j, inp)


def _item_iii(j: int, inp: ClassifyInputs) -> bool:
    # sound but incomplete: fires only below the certified lower bound
    return (inp.phi_v_lower is not None
            and inp.phi_v_lower.shift(-j).sign() > 0)


def _item_iv(j: int, inp: ClassifyInputs) -> bool:
    return inp.regular_tree and inp.d is not None and j < inp.d


def classify(j: int, inputs: ClassifyInputs) -> GoodnessReport:
    if not 1 <= j <= inputs.delta:
        raise ValueError(f"threshold j={j} outside [1, {inputs.delta}]")
    omega_item = "none"
    if _item_a(j, inputs):
        omega_item = "a"
    elif _item_b(j, inputs):
        omega_item = "b"
    chi_item = "none"
    if _item_i(j, inputs):
        chi_item = "i"
    elif _item_ii(j, inputs):
        chi_item = "ii"
    elif _item_iii(j, inputs):
        chi_item = "iii"
    elif _item_iv(j, inputs):
        chi_item = "iv"
    return GoodnessReport(j, omega_item != "none", omega_item,
                          chi_item != "none", chi_item, inputs)


def tree_inputs(d: int) -> ClassifyInputs:
    """Constants of the d-regular tree: edge expansion d - 2 exactly; every
    non-root vertex has d - 1 forward neighbors."""
    if d < 3:
        raise ValueError("regular tree needs d >= 3")
    return ClassifyInputs(Delta=d, delta=d, phi_e=Surd.rational(d - 2),
                          phi_v_lower=None, jbar=d - 1, bipartite=True,
                          regular_tree=True, d=d)


def hyperbolic_inputs(d: int, f: int, radius: int = 4) -> ClassifyInputs:
    """Constants of the (d, f) tessellation; the forward-degree witness and
    the bipartiteness flag are read off a generated patch."""
    g = build_hyperbolic(d, f, radius)
    return ClassifyInputs(
        Delta=d, delta=d,
        phi_e=phi_e_surd(d, f),
        phi_v_lower=alpha_lower_surd(d, triangle_free=(f >= 4)),
        jbar=compute_jbar(g),
        bipartite=is_bipartite(g),
        regular_tree=False, d=d)


def range_32_max(d: int, f: int) -> int:
    """Largest j for which the dynamics is nontrivial on the (d, f) family:
    above it, finite zero islands can satisfy every member's constraint and
    therefore persist forever."""
    return d - 3 if f == 3 else d - 2


@dataclass(frozen=True)
class CaseRow:
    d: int
    f: int
    j: int
    in_range_32: bool
    note: str
    report: GoodnessReport


@dataclass(frozen=True)
class CaseTable:
    d: int
    f: int
    rows: tuple[CaseRow, ...]
    majority_threshold: int
    majority_report: GoodnessReport
    inputs: ClassifyInputs

    def row(self, j: int) -> CaseRow:
        for r in self.rows:
            if r.j == j:
                return r
        raise KeyError(f"no row for j={j}")


def hyperbolic_case_table(d: int, f: int, radius: int = 4) -> CaseTable:
    if (d - 2) * (f - 2) <= 4:
        raise ValueError("(d-2)(f-2) must exceed 4")
    inp = hyperbolic_inputs(d, f, radius)
    jmax32 = range_32_max(d, f)
    rows = []
    for j in range(1, d + 1):
        in_range = 1 <= j <= jmax32
        note = "" if in_range else "finite zero clusters persist"
        rows.append(CaseRow(d, f, j, in_range, note, classify(j, inp)))
    maj = d // 2 + 1
    return CaseTable(d, f, tuple(rows), maj, classify(maj, inp), inp)
