"""Oracle self-checks run by ``gensobol verify``.

Each suite returns ``(passed, detail)``. They compare the fast paths against
independent brute-force computations on small lattice functions.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import catalog
from .engine import SampleConfig, estimate, observed_evals_per_pair, statistic_from_points
from .gsi import GsiSpec, batch_cost, cost, expected_value, target_value
from .models import GridFunction, brute_force_anova, brute_force_theta
from .subsets import SubsetMask, all_subsets, lower_from_sigma, nxor_set, sigma_from_lower


def sobol_matrix_suite(seed: int = 0, count: int = 20) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(count):
        d, m = [(1, 4), (2, 3), (2, 4), (3, 2), (3, 3)][i % 5]
        gf = GridFunction.random(d, m, rng)
        tab = brute_force_anova(gf)
        lower = tab.lower()
        for u, v in itertools.product(all_subsets(d), repeat=2):
            got = brute_force_theta(gf, u, v)
            worst = max(worst, abs(got - (tab.mean**2 + lower[nxor_set(u, v)])))
    return worst < 1e-10, f"max |Theta - (mu^2 + lower[nxor])| = {worst:.2e}"


def moebius_suite(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_rt = worst_id = 0.0
    for d in range(1, 7):
        t = {u: float(rng.standard_normal()) for u in all_subsets(d)}
        t[SubsetMask.empty(d)] = 0.0
        back = lower_from_sigma(sigma_from_lower(t))
        worst_rt = max(worst_rt, max(abs(back[u] - t[u]) for u in t))
    for d, m in [(2, 3), (3, 3), (4, 2)]:
        gf = GridFunction.random(d, m, rng)
        tab = brute_force_anova(gf)
        worst_id = max(worst_id, abs(tab.variance - gf.values.var()))
    ok = bool(worst_rt < 1e-12 and worst_id < 1e-10)
    return ok, f"roundtrip {worst_rt:.1e}, ANOVA identity {worst_id:.1e}"


def bilinear_targets_suite(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    d = 4
    for _ in range(3):
        gf = GridFunction.random(d, 3, rng)
        tab = brute_force_anova(gf)
        lower, sup = tab.lower(), tab.superset()
        for w in all_subsets(d)[1:]:
            for w1 in all_subsets(d):
                if not w1.is_subset_of(w):
                    continue
                vc = catalog.variance_component_bilinear(d, w, w1)
                sb = catalog.superset_bilinear(d, w, w1)
                worst = max(
                    worst,
                    abs(expected_value(vc, lower, tab.mean) - tab.sigma[w]),
                    abs(expected_value(sb, lower, tab.mean) - sup[w]),
                )
    return worst < 1e-10, f"max error {worst:.2e}"


_AGGREGATE_WEIGHTS = {
    "mean_dimension": lambda u, d: u.cardinality,
    "mean_square_dimension": lambda u, d: u.cardinality**2,
    "first_order_total": lambda u, d: float(u.cardinality == 1),
    "second_order_total": lambda u, d: float(u.cardinality == 2),
    "trunc_tail_weight": lambda u, d: d - u.max_index(),
    "trunc_head_weight": lambda u, d: u.min_index() - 1,
    "index_spread": lambda u, d: u.max_index() - u.min_index(),
    "segment_pairs": lambda u, d: u.min_index() * (d - u.max_index() + 1),
}


def catalog_targets_suite(seed: int = 0) -> tuple[bool, str]:
    """Aggregate catalog entries against sum_u weight(u) sigma2_u from the ANOVA oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d, m in [(3, 3), (4, 3), (5, 2)]:
        tab = brute_force_anova(GridFunction.random(d, m, rng))
        lower = tab.lower()
        for name, wt in _AGGREGATE_WEIGHTS.items():
            want = math.fsum(wt(u, d) * s for u, s in tab.sigma.items() if u.bits)
            worst = max(worst, abs(expected_value(catalog.build(name, d), lower) - want))
    return worst < 1e-10, f"max error over {len(_AGGREGATE_WEIGHTS)} aggregate entries {worst:.2e}"


def _enumerate_pairs(gf: GridFunction, n: int):
    """All lattice outcomes of n pairs (x_i, z_i), at cell midpoints; equally likely."""
    mids = gf.midpoints()
    d = gf.d
    for combo in itertools.product(range(gf.m), repeat=2 * d * n):
        pts = mids[np.array(combo)].reshape(n, 2 * d)
        yield pts[:, :d], pts[:, d:]


def exhaustive_mean(spec: GsiSpec, gf: GridFunction, n: int, method: str) -> float:
    vals = [statistic_from_points(spec, gf, x, z, method) for x, z in _enumerate_pairs(gf, n)]
    return math.fsum(vals) / len(vals)


def unbiasedness_suite(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    gf = GridFunction.random(2, 2, rng)
    lower = brute_force_anova(gf).lower()
    worst = 0.0
    for bits in (1, 2, 3):
        u = SubsetMask(bits, 2)
        spec = catalog.lower_index(2, u)
        worst = max(worst, abs(exhaustive_mean(spec, gf, 2, "janon-corrected") - lower[u]))
        worst = max(worst, abs(exhaustive_mean(spec, gf, 2, "bias-corrected") - lower[u]))
    seg = catalog.segment_pairs(2)
    worst = max(worst, abs(exhaustive_mean(seg, gf, 2, "bias-corrected") - target_value(seg, lower)))
    return worst < 1e-12, f"max |E estimate - target| over 256 outcomes = {worst:.1e}"


def cost_suite() -> tuple[bool, str]:
    fails = []
    for d in (4, 5, 6, 8):
        g = GridFunction.random(d, 2, np.random.default_rng(d))
        for spec in _catalog_specs(d):
            if observed_evals_per_pair(spec, g) != cost(spec):
                fails.append(f"d={d}")
    claims = {
        "simple sigma2_123": (cost(catalog.variance_component_simple(5, [1, 2, 3])), 9),
        "bilinear sigma2_123": (cost(catalog.variance_component_bilinear(5, [1, 2, 3], [1])), 6),
        "superset square": (cost(catalog.superset_square(8, [1, 2, 3, 4])), 16),
        "superset bilinear": (cost(catalog.superset_bilinear(8, [1, 2, 3, 4], [1, 2])), 7),
        "mean dimension": (cost(catalog.mean_dimension(6)), 7),
    }
    for d in (4, 5, 6, 8):
        claims[f"first/total batch d={d}"] = (batch_cost(catalog.saltelli_first_second(d).values()), d + 2)
        claims[f"second order batch d={d}"] = (
            batch_cost(catalog.saltelli_first_second(d, lower_pairs=True).values()), 2 * d + 2)
    fails += [k for k, (got, want) in claims.items() if got != want]
    return not fails, "all counts match" if not fails else f"mismatch: {fails}"


def _catalog_specs(d: int) -> list[GsiSpec]:
    w = SubsetMask.from_indices(range(1, min(d, 4) + 1), d)
    u = SubsetMask.from_indices([1, 2], d)
    out = [
        catalog.lower_index(d, u),
        catalog.upper_index(d, u),
        catalog.mauntz_lower(d, u),
        catalog.variance_component_simple(d, w),
        catalog.variance_component_bilinear(d, w),
        catalog.superset_square(d, w),
        catalog.superset_bilinear(d, w),
    ]
    for name in ("mean_dimension", "first_order_total", "second_order_total", "mean_square_dimension",
                 "trunc_tail_weight", "trunc_head_weight", "index_spread", "segment_pairs"):
        out.append(catalog.build(name, d))
    out += list(catalog.saltelli_first_second(d, lower_pairs=True).values())
    return out


def determinism_suite(seed: int = 11) -> tuple[bool, str]:
    gf = GridFunction.random(3, 3, np.random.default_rng(seed))
    spec = catalog.second_order_total(3)
    vals = {w: estimate(spec, gf, SampleConfig(n=20_000, seed=seed, workers=w)).estimate for w in (1, 2, 8)}
    ok = len(set(vals.values())) == 1
    return ok, "bit-identical across workers 1, 2, 8" if ok else f"differs: {vals}"


SUITES = {
    "sobol-matrix-oracle": sobol_matrix_suite,
    "moebius-and-anova": moebius_suite,
    "bilinear-targets": bilinear_targets_suite,
    "catalog-targets": catalog_targets_suite,
    "exhaustive-unbiasedness": unbiasedness_suite,
    "cost-accounting": cost_suite,
    "determinism": determinism_suite,
}


def run_all(seed: int | None = None) -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in SUITES.items():
        try:
            ok, detail = fn() if seed is None or name == "cost-accounting" else fn(seed=seed)
        except Exception as exc:  # a crashing suite is a failed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, ok, detail))
    return out
