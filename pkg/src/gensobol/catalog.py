"""Named GSI estimators.

Each builder takes the ambient dimension ``d`` plus its own parameters and
returns a :class:`GsiSpec` (or, for shared-evaluation designs, a dict of them).
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass

from .gsi import (
    GsiSpec,
    SpecError,
    compose_bilinear,
    compose_simple,
    compose_square,
    compose_sum_of_squares,
)
from .subsets import SubsetMask, complement, subsets_of


def _set(w, d: int) -> SubsetMask:
    if isinstance(w, SubsetMask):
        if w.d != d:
            raise SpecError(f"subset {w} has dimension {w.d}, expected {d}")
        return w
    return SubsetMask.from_indices(w, d)


def _nonempty(w: SubsetMask, what: str) -> SubsetMask:
    if not w.bits:
        raise SpecError(f"{what} must be a nonempty set")
    return w


def _alternating(w: SubsetMask, shift: SubsetMask | None = None) -> dict[SubsetMask, float]:
    """lambda_{v + shift} = (-1)^{|v|} for v subset of w."""
    out = {}
    for v in subsets_of(w):
        key = v if shift is None else v | shift
        out[key] = -1.0 if v.cardinality % 2 else 1.0
    return out


def _check_dim(d: int, lo: int = 1) -> int:
    if not isinstance(d, int) or not lo <= d <= 20:
        raise SpecError(f"d must be an integer in [{lo}, 20], got {d!r}")
    return d


def default_split(w: SubsetMask) -> SubsetMask:
    """First floor(|w|/2) elements of w."""
    idx = w.indices()
    return SubsetMask.from_indices(idx[: len(idx) // 2], w.d)


def _split(w: SubsetMask, w1) -> tuple[SubsetMask, SubsetMask]:
    w1 = default_split(w) if w1 is None else _set(w1, w.d)
    if not w1.is_subset_of(w):
        raise SpecError(f"split {w1} is not a subset of {w}")
    return w1, w - w1


# -- single-set indices --------------------------------------------------------


def lower_index(d: int, u) -> GsiSpec:
    """E f(x) f(x_u:z_-u) = mu^2 + lower_u. Not a contrast."""
    d = _check_dim(d)
    full = SubsetMask.full(d)
    return GsiSpec(d=d, weights={(full, _set(u, d)): 1.0})


def upper_index(d: int, u) -> GsiSpec:
    """(1/2) (f(x) - f(x_-u:z_u))^2."""
    d = _check_dim(d)
    u = _set(u, d)
    full = SubsetMask.full(d)
    lam = {full: 1.0}
    lam[complement(u)] = lam.get(complement(u), 0.0) - 1.0
    if all(w == 0.0 for w in lam.values()):
        raise SpecError("upper index of the empty set is identically zero")
    return compose_square(lam, scale=0.5, d=d)


def mauntz_lower(d: int, u) -> GsiSpec:
    """f(x) (f(x_u:z_-u) - f(z)): a contrast for lower_u at three evaluations."""
    d = _check_dim(d)
    full = SubsetMask.full(d)
    empty = SubsetMask.empty(d)
    gam = {_set(u, d): 1.0}
    gam[empty] = gam.get(empty, 0.0) - 1.0
    return compose_bilinear({full: 1.0}, gam, d=d)


def variance_component_simple(d: int, w) -> GsiSpec:
    """f(x) sum_{v <= w} (-1)^{|w-v|} f(x_v:z_-v)."""
    d = _check_dim(d)
    w = _nonempty(_set(w, d), "w")
    sign = -1.0 if w.cardinality % 2 else 1.0
    lam = {v: sign * s for v, s in _alternating(w).items()}
    return compose_simple(SubsetMask.full(d), lam, orient="col")


def variance_component_bilinear(d: int, w, w1=None) -> GsiSpec:
    """sigma2_w from lambda over subsets of w1 and gamma over w2 + w^c."""
    d = _check_dim(d)
    w = _nonempty(_set(w, d), "w")
    w1, w2 = _split(w, w1)
    return compose_bilinear(_alternating(w1), _alternating(w2, complement(w)), d=d)


def superset_square(d: int, w) -> GsiSpec:
    """2^-|w| (sum_{v <= w} (-1)^{|w-v|} f(x_v:z_-v))^2."""
    d = _check_dim(d)
    w = _nonempty(_set(w, d), "w")
    return compose_square(_alternating(w), scale=2.0 ** -w.cardinality, d=d)


def superset_bilinear(d: int, w, w1=None) -> GsiSpec:
    d = _check_dim(d)
    w = _nonempty(_set(w, d), "w")
    w1, w2 = _split(w, w1)
    rest = complement(w)
    return compose_bilinear(_alternating(w1, rest), _alternating(w2, rest), d=d)


# -- O(d) designs ----------------------------------------------------------------


def _singletons(d: int) -> list[SubsetMask]:
    return [SubsetMask.from_indices([j], d) for j in range(1, d + 1)]


def mean_dimension(d: int) -> GsiSpec:
    """(1/2) sum_j (f(x) - f(x_-j:z_j))^2, expectation sum_u |u| sigma2_u."""
    d = _check_dim(d)
    full = SubsetMask.full(d)
    return compose_sum_of_squares(
        [{full: 1.0, complement(s): -1.0} for s in _singletons(d)], scale=0.5, d=d
    )


def first_order_total(d: int) -> GsiSpec:
    """sum_j f(x_-j:z_j) f(z) - d f(x) f(z), expectation sum_j lower_{j}."""
    d = _check_dim(d, lo=2)
    lam = {complement(s): 1.0 for s in _singletons(d)}
    lam[SubsetMask.full(d)] = -float(d)
    return compose_simple(SubsetMask.empty(d), lam, orient="row")


def second_order_total(d: int) -> GsiSpec:
    """Contrast for sum_{|u|=2} sigma2_u at cost 2d + 2."""
    d = _check_dim(d, lo=2)
    lam = {s: 1.0 for s in _singletons(d)}
    lam[SubsetMask.empty(d)] = -float(d)
    gam = {complement(s): 1.0 for s in _singletons(d)}
    gam[SubsetMask.full(d)] = -float(d - 2)
    return compose_bilinear(lam, gam, scale=0.5, d=d)


def mean_square_dimension(d: int) -> GsiSpec:
    """Contrast for sum_u |u|^2 sigma2_u at cost d + 1.

    With gamma_0 = -(d - 2) and scale 1/2 the expectation would be
    sum_u |u|(|u| - 1) sigma2_u / 2. Adding sum_j (Theta_00 - Theta_{j}0), which is
    sum_u |u| sigma2_u, moves gamma_0 to -(d - 1) and the scale to 1.
    """
    d = _check_dim(d, lo=2)
    empty = SubsetMask.empty(d)
    lam = {s: 1.0 for s in _singletons(d)}
    lam[empty] = -float(d)
    gam = {s: 1.0 for s in _singletons(d)}
    gam[empty] = -float(d - 1)
    return compose_bilinear(lam, gam, d=d)


def _heads(d: int) -> list[SubsetMask]:
    return [SubsetMask.interval(0, j, d) for j in range(1, d)]


def _tails(d: int) -> list[SubsetMask]:
    return [SubsetMask.interval(j, d, d) for j in range(1, d)]


def trunc_tail_weight(d: int) -> GsiSpec:
    """sum_{j<d} (Theta_{(0,j],D} - Theta_{0,D}) = sum_u (d - max u) sigma2_u."""
    d = _check_dim(d, lo=2)
    lam = {h: 1.0 for h in _heads(d)}
    lam[SubsetMask.empty(d)] = -float(d - 1)
    return compose_simple(SubsetMask.full(d), lam, orient="row")


def trunc_head_weight(d: int) -> GsiSpec:
    """sum_{j<d} (Theta_{(j,d],D} - Theta_{0,D}) = sum_u (min u - 1) sigma2_u."""
    d = _check_dim(d, lo=2)
    lam = {t: 1.0 for t in _tails(d)}
    lam[SubsetMask.empty(d)] = -float(d - 1)
    return compose_simple(SubsetMask.full(d), lam, orient="row")


def index_spread(d: int) -> GsiSpec:
    """sum_u (max u - min u) sigma2_u as a contrast in column D."""
    d = _check_dim(d, lo=2)
    full = SubsetMask.full(d)
    lam = {full: float(d - 1), SubsetMask.empty(d): float(d - 1)}
    for s in _heads(d) + _tails(d):
        lam[s] = lam.get(s, 0.0) - 1.0
    return compose_simple(full, lam, orient="row")


def segment_pairs(d: int) -> GsiSpec:
    """sum_{0<=j<k<=d} Theta_{(0,j],(k,d]}; minus d(d+1)/2 mu^2 gives
    sum_u min(u) (d - max(u) + 1) sigma2_u."""
    d = _check_dim(d)
    weights = {}
    for j in range(d):
        for k in range(j + 1, d + 1):
            key = (SubsetMask.interval(0, j, d), SubsetMask.interval(k, d, d))
            weights[key] = weights.get(key, 0.0) + 1.0
    return GsiSpec(d=d, weights=weights)


def saltelli_first_second(d: int, lower_pairs: bool = False) -> dict[str, GsiSpec]:
    """All lower_{j}, upper_{j} and upper_{j,k} from the d + 2 evaluations
    f(z), f(x) and f(x_-j:z_j); with ``lower_pairs`` also every lower_{j,k}
    by adding f(x_j:z_-j), for 2d + 2 evaluations."""
    d = _check_dim(d, lo=3)
    full = SubsetMask.full(d)
    empty = SubsetMask.empty(d)
    singles = _singletons(d)
    out: dict[str, GsiSpec] = {}
    for j, s in enumerate(singles, start=1):
        # Theta_{0,-j} - Theta_{0,D} = lower_{j}
        out[f"lower[{j}]"] = compose_bilinear({empty: 1.0}, {complement(s): 1.0, full: -1.0}, d=d)
    for j, s in enumerate(singles, start=1):
        out[f"upper[{j}]"] = compose_square({full: 1.0, complement(s): -1.0}, scale=0.5, d=d)
    for j in range(1, d + 1):
        for k in range(j + 1, d + 1):
            cj, ck = complement(singles[j - 1]), complement(singles[k - 1])
            out[f"upper[{j},{k}]"] = compose_square({cj: 1.0, ck: -1.0}, scale=0.5, d=d)
    if lower_pairs:
        for j in range(1, d + 1):
            for k in range(j + 1, d + 1):
                # both orientations of Theta_{{j},-k} have nxor = {j,k}; averaging
                # them touches every singleton, so the batch uses 2d + 2 points
                spec = GsiSpec(
                    d=d,
                    weights={
                        (singles[j - 1], complement(singles[k - 1])): 0.5,
                        (singles[k - 1], complement(singles[j - 1])): 0.5,
                        (empty, full): -1.0,
                    },
                )
                out[f"lower[{j},{k}]"] = spec
    return out


# -- registry --------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    builder: Callable
    params: tuple[str, ...]
    target: str
    cost: str
    form: str
    anchor: str

    def build(self, d: int, **params):
        unknown = set(params) - set(self.params)
        if unknown:
            raise SpecError(f"{self.name} does not take {sorted(unknown)}")
        return self.builder(d, **params)


CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("lower_index", lower_index, ("u",), "lower_u (after mean correction)",
                     "2 (1 if u = D)", "simple, not a contrast", "Sobol' pick-freeze covariance"),
        CatalogEntry("upper_index", upper_index, ("u",), "upper_u",
                     "2", "square", "half mean squared difference"),
        CatalogEntry("mauntz_lower", mauntz_lower, ("u",), "lower_u",
                     "3", "bilinear contrast", "f(x)(f(x_u:z_-u) - f(z))"),
        CatalogEntry("variance_component_simple", variance_component_simple, ("w",), "sigma2_w",
                     "2^|w| + 1 (2^|w| if w = D)", "simple contrast", "alternating sum in row D"),
        CatalogEntry("variance_component_bilinear", variance_component_bilinear, ("w", "w1"), "sigma2_w",
                     "2^|w1| + 2^|w2|", "bilinear contrast", "split w = w1 + w2"),
        CatalogEntry("superset_square", superset_square, ("w",), "superset importance of w",
                     "2^|w|", "square contrast", "2^-|w| squared alternating sum"),
        CatalogEntry("superset_bilinear", superset_bilinear, ("w", "w1"), "superset importance of w",
                     "2^|w1| + 2^|w2| - 1", "bilinear contrast", "shared f(x_-w:z_w)"),
        CatalogEntry("mean_dimension", mean_dimension, (), "sum_u |u| sigma2_u",
                     "d + 1", "sum of squares", "sum of upper_{j}"),
        CatalogEntry("first_order_total", first_order_total, (), "sum_{|u|=1} sigma2_u",
                     "d + 2", "simple contrast", "column f(z)"),
        CatalogEntry("second_order_total", second_order_total, (), "sum_{|u|=2} sigma2_u",
                     "2d + 2", "bilinear contrast", "singletons vs complements"),
        CatalogEntry("mean_square_dimension", mean_square_dimension, (), "sum_u |u|^2 sigma2_u",
                     "d + 1", "bilinear contrast", "singletons vs singletons"),
        CatalogEntry("trunc_tail_weight", trunc_tail_weight, (), "sum_u (d - max u) sigma2_u",
                     "d + 1", "simple contrast", "leading blocks (0,j]"),
        CatalogEntry("trunc_head_weight", trunc_head_weight, (), "sum_u (min u - 1) sigma2_u",
                     "d + 1", "simple contrast", "trailing blocks (j,d]"),
        CatalogEntry("index_spread", index_spread, (), "sum_u (max u - min u) sigma2_u",
                     "2d", "simple contrast", "leading and trailing blocks"),
        CatalogEntry("segment_pairs", segment_pairs, (), "sum_u min(u) (d - max u + 1) sigma2_u",
                     "2d - 1", "general, not a contrast", "pairs of segments (0,j], (k,d]"),
        CatalogEntry("saltelli_first_second", saltelli_first_second, ("lower_pairs",),
                     "all lower_{j}, upper_{j}, upper_{j,k} (and lower_{j,k})",
                     "d + 2 (2d + 2 with lower_pairs)", "batch", "shared evaluations"),
    ]
}


def build(name: str, d: int, **params):
    try:
        entry = CATALOG[name]
    except KeyError:
        raise SpecError(f"unknown estimator {name!r}; try one of {sorted(CATALOG)}") from None
    return entry.build(d, **{k: v for k, v in params.items() if v is not None})


def names() -> Iterable[str]:
    return CATALOG.keys()
