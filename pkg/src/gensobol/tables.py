"""Reproduction of the three comparison studies.

Table 1: four estimators of sigma2_{1,2,3} for min(x) on [0,1]^5.
Table 2: contrast vs simple estimators of lower_u on a 6-d product function.
Table 3: bilinear vs square estimators of superset importance, 8-d product function.

``scale`` divides both n and the replicate count so the studies can be run at
desk size; n and R may also be set directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import catalog
from .engine import SampleConfig, StudyReport, estimate_batch, exact_target, replicate_study
from .models import MinModel, ProductModel

TABLE2_TAU = (1.0, 1.0, 0.5, 0.5, 0.25, 0.25)
TABLE3_TAU = (1.0, 1.0, 0.75, 0.75, 0.5, 0.5, 0.25, 0.25)
TABLE2_SETS = ((1, 2), (3, 4), (5, 6))
TABLE3_SETS = (((1, 2, 3, 4), (1, 2)), ((5, 6, 7, 8), (5, 6)))

FULL_SIZE = {1: (10**6, 1), 2: (10**4, 10**4), 3: (10**6, 10)}


@dataclass
class TableResult:
    which: int
    columns: list[str]
    rows: list[tuple[str, list]]
    records: list[dict] = field(default_factory=list)
    n: int = 0
    replicates: int = 1

    def render(self) -> str:
        cells = [[""] + self.columns] + [[label] + [_fmt(v) for v in vals] for label, vals in self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
        lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in cells]
        head = f"Table {self.which}  (n={self.n:,}, R={self.replicates:,})"
        rule = "-" * len(lines[0])
        return "\n".join([head, rule, lines[0], rule, *lines[1:], rule])


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return f"{v:,}"
    if v == 0:
        return "0"
    if abs(v) < 1e-2 or abs(v) >= 1e4:
        return f"{v:.3e}"
    return f"{v:.4f}"


def sizes(which: int, scale: float = 1.0, n: int | None = None, replicates: int | None = None) -> tuple[int, int]:
    n0, r0 = FULL_SIZE[which]
    if n is None:
        n = max(2, int(round(n0 / scale)))
    if replicates is None:
        replicates = r0 if r0 == 1 else max(2, int(round(r0 / scale)))
    return n, replicates


def table1_specs() -> dict[str, object]:
    specs = {"Simple": catalog.variance_component_simple(5, (1, 2, 3))}
    for j in (1, 2, 3):
        specs[f"Bilin.{{{j}}}"] = catalog.variance_component_bilinear(5, (1, 2, 3), (j,))
    return specs


def table1(scale: float = 1.0, seed: int = 0, workers: int = 1, n: int | None = None) -> TableResult:
    n, _ = sizes(1, scale, n)
    model = MinModel(5)
    specs = table1_specs()
    res = estimate_batch(specs, model, SampleConfig(n=n, seed=seed, workers=workers))
    truth = exact_target(specs["Simple"], model)
    names = list(specs)
    rows = [
        ("True", [truth] * len(names)),
        ("Mean", [res[k].estimate for k in names]),
        ("Standard error", [res[k].std_error for k in names]),
        ("Cost", [res[k].evals_per_pair for k in names]),
    ]
    records = [res[k].to_record(table=1, truth=truth) for k in names]
    return TableResult(1, names, rows, records, n, 1)


def table2_specs() -> dict[str, object]:
    specs = {}
    for u in TABLE2_SETS:
        label = "{" + ",".join(map(str, u)) + "}"
        specs[f"Cont.{label}"] = catalog.mauntz_lower(6, u)
        specs[f"Simp.{label}"] = catalog.lower_index(6, u)
    return specs


def table2_report(n: int, replicates: int, seed: int = 0, workers: int = 1) -> StudyReport:
    model = ProductModel(mu=1.0, tau=TABLE2_TAU)
    return replicate_study(table2_specs(), model, SampleConfig(n=n, seed=seed, replicates=replicates, workers=workers))


def table2(scale: float = 1.0, seed: int = 0, workers: int = 1, n=None, replicates=None) -> TableResult:
    n, replicates = sizes(2, scale, n, replicates)
    rep = table2_report(n, replicates, seed, workers)
    names = list(rep.rows)
    rr = [rep.rows[k] for k in names]
    effs = []
    for u in TABLE2_SETS:
        label = "{" + ",".join(map(str, u)) + "}"
        e = rep.efficiency(f"Simp.{label}", f"Cont.{label}")
        effs += [e, ""]
    rows = [
        ("True", [r.truth for r in rr]),
        ("Avg.", [r.mean for r in rr]),
        ("Bias", [r.bias for r in rr]),
        ("S.Dev", [r.sd for r in rr]),
        ("Neg", [r.neg for r in rr]),
        ("Eff.", effs),
    ]
    return TableResult(2, names, rows, rep.to_records(), n, replicates)


def table3_specs() -> dict[str, object]:
    specs = {}
    for w, w1 in TABLE3_SETS:
        label = "{" + ",".join(map(str, w)) + "}"
        specs[f"Bilinear{label}"] = catalog.superset_bilinear(8, w, w1)
        specs[f"Square{label}"] = catalog.superset_square(8, w)
    return specs


def table3_report(n: int, replicates: int, seed: int = 0, workers: int = 1) -> StudyReport:
    model = ProductModel(mu=1.0, tau=TABLE3_TAU)
    return replicate_study(table3_specs(), model, SampleConfig(n=n, seed=seed, replicates=replicates, workers=workers))


def table3(scale: float = 1.0, seed: int = 0, workers: int = 1, n=None, replicates=None) -> TableResult:
    n, replicates = sizes(3, scale, n, replicates)
    rep = table3_report(n, replicates, seed, workers)
    cols, bil, sq, eff, truth = [], [], [], [], []
    for w, _ in TABLE3_SETS:
        label = "{" + ",".join(map(str, w)) + "}"
        cols.append(label)
        b, s = rep.rows[f"Bilinear{label}"], rep.rows[f"Square{label}"]
        truth.append(s.truth)
        # replicate SD rescaled to a per-pair SD (x 1e3 = standard error at n = 10^6)
        bil.append(b.sd * math.sqrt(n))
        sq.append(s.sd * math.sqrt(n))
        eff.append(rep.efficiency(f"Bilinear{label}", f"Square{label}"))
    rows = [("True", truth), ("Bilinear", bil), ("Square", sq), ("Efficiency", eff)]
    return TableResult(3, cols, rows, rep.to_records(), n, replicates)


TABLES = {1: table1, 2: table2, 3: table3}
