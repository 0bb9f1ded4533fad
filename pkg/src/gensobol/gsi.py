"""Generalized Sobol' indices as sparse coefficient matrices over subset pairs.

A :class:`GsiSpec` holds weights ``Omega[(u, v)]``; its estimand is

    scale * sum_{u,v} Omega_uv * E[f(x_u:z_-u) f(x_v:z_-v)]

and the expectation of each cross moment is ``mu^2 + lower[nxor(u, v)]``.
Square and bilinear specs also keep their factor vectors, so the engine can
evaluate ``(lambda . F)(gamma . F)`` per sample instead of the full quadratic form.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .subsets import SubsetMask, nxor_set, parse_subset

KINDS = ("general", "square", "bilinear")
CONTRAST_TOL = 1e-12

Vector = Mapping[SubsetMask, float]


class SpecError(ValueError):
    pass


def _clean_vector(vec: Vector, d: int) -> dict[SubsetMask, float]:
    out = {}
    for u, w in vec.items():
        if u.d != d:
            raise SpecError(f"subset {u} has dimension {u.d}, expected {d}")
        w = float(w)
        if w != 0.0:
            out[u] = out.get(u, 0.0) + w
    return {u: w for u, w in sorted(out.items()) if w != 0.0}


@dataclass(frozen=True)
class GsiSpec:
    d: int
    weights: dict[tuple[SubsetMask, SubsetMask], float]
    scale: float = 1.0
    kind: str = "general"
    factors: tuple[tuple[dict[SubsetMask, float], dict[SubsetMask, float]], ...] = field(
        default=(), compare=False
    )

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown kind {self.kind!r}")
        clean = {}
        for (u, v), w in self.weights.items():
            if u.d != self.d or v.d != self.d:
                raise SpecError(f"term ({u}, {v}) does not live in dimension {self.d}")
            w = float(w)
            if not math.isfinite(w):
                raise SpecError("weights must be finite")
            if w != 0.0:
                clean[(u, v)] = clean.get((u, v), 0.0) + w
        object.__setattr__(
            self, "weights", {k: w for k, w in sorted(clean.items()) if w != 0.0}
        )
        if self.kind != "general" and not self.factors:
            raise SpecError(f"{self.kind} specs need their factor vectors")

    @classmethod
    def from_terms(cls, d: int, terms: Iterable[tuple[SubsetMask, SubsetMask, float]], scale=1.0):
        weights: dict = {}
        for u, v, w in terms:
            weights[(u, v)] = weights.get((u, v), 0.0) + float(w)
        return cls(d=d, weights=weights, scale=scale)

    @property
    def support(self) -> list[SubsetMask]:
        """Subsets whose hybrid evaluation is needed, ascending."""
        sets = {u for u, _ in self.weights} | {v for _, v in self.weights}
        return sorted(sets)

    @property
    def coefficient_total(self) -> float:
        """sum_{u,v} Omega_uv, the multiplier of mu^2 in the expectation (unscaled)."""
        return math.fsum(self.weights.values())

    def weight_matrix(self, support: list[SubsetMask] | None = None) -> np.ndarray:
        support = self.support if support is None else support
        pos = {u: i for i, u in enumerate(support)}
        mat = np.zeros((len(support), len(support)))
        for (u, v), w in self.weights.items():
            mat[pos[u], pos[v]] = w
        return mat

    def __len__(self) -> int:
        return len(self.weights)


def is_contrast(spec: GsiSpec) -> bool:
    total = sum((Fraction(w) for w in spec.weights.values()), Fraction(0))
    if total == 0:
        return True
    return abs(float(total)) <= CONTRAST_TOL


def cost(spec: GsiSpec) -> int:
    """Distinct hybrid evaluations per (x, z) pair: |rows used| + |cols used| - |both|."""
    rows = {u for u, _ in spec.weights}
    cols = {v for _, v in spec.weights}
    return len(rows) + len(cols) - len(rows & cols)


def batch_cost(specs: Iterable[GsiSpec]) -> int:
    specs = list(specs)
    dims = {s.d for s in specs}
    if len(dims) > 1:
        raise SpecError(f"specs mix dimensions {sorted(dims)}")
    return len(set().union(*(s.support for s in specs))) if specs else 0


def proxy_variance(spec: GsiSpec) -> float:
    """sum of squared weights, tr(Omega^T Omega); scale excluded."""
    return math.fsum(w * w for w in spec.weights.values())


def expected_value(spec: GsiSpec, lower: Mapping[SubsetMask, float], mean: float = 0.0) -> float:
    """Expectation of the plug-in statistic: scale * sum Omega_uv (mu^2 + lower[nxor(u,v)]).

    ``lower`` must contain every nxor(u, v) of the support; the empty set may be
    omitted (its lower index is 0).
    """
    mu2 = mean * mean
    terms = []
    for (u, v), w in spec.weights.items():
        key = nxor_set(u, v)
        if key.bits == 0:
            val = lower.get(key, 0.0)
        else:
            try:
                val = lower[key]
            except KeyError:
                raise KeyError(f"lower index for {key} needed by term ({u}, {v})") from None
        terms.append(w * (mu2 + val))
    return spec.scale * math.fsum(terms)


def target_value(spec: GsiSpec, lower: Mapping[SubsetMask, float]) -> float:
    """The variance-component estimand: scale * sum Omega_uv (Theta_uv - mu^2)."""
    return expected_value(spec, lower, mean=0.0)


def _outer(lam: dict, gam: dict) -> dict:
    return {(u, v): a * b for u, a in lam.items() for v, b in gam.items()}


def compose_bilinear(lam: Vector, gam: Vector, scale: float = 1.0, d: int | None = None) -> GsiSpec:
    """Omega = lambda gamma^T."""
    return compose_low_rank([(lam, gam)], scale=scale, d=d)


def compose_low_rank(pairs, scale: float = 1.0, d: int | None = None) -> GsiSpec:
    """Omega = sum_r lambda_r gamma_r^T (kind 'bilinear')."""
    d = _infer_dim(pairs, d)
    factors = tuple((_clean_vector(lam, d), _clean_vector(gam, d)) for lam, gam in pairs)
    weights: dict = {}
    for lam, gam in factors:
        for k, w in _outer(lam, gam).items():
            weights[k] = weights.get(k, 0.0) + w
    return GsiSpec(d=d, weights=weights, scale=scale, kind="bilinear", factors=factors)


def compose_square(lam: Vector, scale: float = 1.0, d: int | None = None) -> GsiSpec:
    """Omega = lambda lambda^T, evaluated by the engine as a squared sum."""
    return compose_sum_of_squares([lam], scale=scale, d=d)


def compose_sum_of_squares(lams, scale: float = 1.0, d: int | None = None) -> GsiSpec:
    lams = list(lams)
    d = _infer_dim([(lam, lam) for lam in lams], d)
    factors = tuple((v, v) for v in (_clean_vector(lam, d) for lam in lams))
    if not any(lam for lam, _ in factors):
        raise SpecError("a square needs a nonzero lambda")
    weights: dict = {}
    for lam, _ in factors:
        for k, w in _outer(lam, lam).items():
            weights[k] = weights.get(k, 0.0) + w
    return GsiSpec(d=d, weights=weights, scale=scale, kind="square", factors=factors)


def compose_simple(anchor: SubsetMask, lam: Vector, scale: float = 1.0, orient: str = "row") -> GsiSpec:
    """A GSI using one row (or one column) of the Sobol' matrix.

    ``orient="row"`` gives Omega[u, anchor] = lambda_u; ``"col"`` gives
    Omega[anchor, v] = lambda_v.
    """
    if orient not in ("row", "col"):
        raise SpecError("orient must be 'row' or 'col'")
    d = anchor.d
    lam = _clean_vector(lam, d)
    if orient == "row":
        weights = {(u, anchor): w for u, w in lam.items()}
    else:
        weights = {(anchor, v): w for v, w in lam.items()}
    return GsiSpec(d=d, weights=weights, scale=scale)


def _infer_dim(pairs, d):
    dims = {u.d for lam, gam in pairs for u in list(lam) + list(gam)}
    if d is not None:
        dims.add(d)
    if len(dims) != 1:
        raise SpecError("cannot infer a single dimension from the factors")
    return dims.pop()


# -- serialization -----------------------------------------------------------


def _vec_to_json(vec: dict) -> list:
    return [{"u": u.indices(), "w": w} for u, w in vec.items()]


def _vec_from_json(items, d: int) -> dict:
    return {_parse_set(it["u"], d): float(it["w"]) for it in items}


def _parse_set(raw, d: int) -> SubsetMask:
    try:
        return parse_subset(raw, d)
    except (ValueError, TypeError) as exc:
        raise SpecError(f"bad subset {raw!r}: {exc}") from None


def to_dict(spec: GsiSpec) -> dict:
    out = {
        "d": spec.d,
        "scale": spec.scale,
        "kind": spec.kind,
        "terms": [{"u": u.indices(), "v": v.indices(), "w": w} for (u, v), w in spec.weights.items()],
    }
    if spec.kind != "general":
        out["factors"] = [
            {"lambda": _vec_to_json(lam), "gamma": _vec_to_json(gam)} for lam, gam in spec.factors
        ]
    return out


def serialize(spec: GsiSpec) -> str:
    return json.dumps(to_dict(spec), sort_keys=False)


def from_dict(obj: Mapping) -> GsiSpec:
    try:
        d = int(obj["d"])
        scale = float(obj.get("scale", 1.0))
        kind = obj.get("kind", "general")
        terms = obj.get("terms", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed spec: {exc}") from None
    if kind not in KINDS:
        raise SpecError(f"unknown kind {kind!r}")
    weights = {}
    for t in terms:
        key = (_parse_set(t["u"], d), _parse_set(t["v"], d))
        weights[key] = weights.get(key, 0.0) + float(t["w"])
    if kind == "general":
        return GsiSpec(d=d, weights=weights, scale=scale)
    if "factors" in obj:
        pairs = [(_vec_from_json(f["lambda"], d), _vec_from_json(f["gamma"], d)) for f in obj["factors"]]
    else:
        pairs = [_factor_rank_one(weights, square=kind == "square")]
    spec = (
        compose_sum_of_squares([p[0] for p in pairs], scale=scale, d=d)
        if kind == "square"
        else compose_low_rank(pairs, scale=scale, d=d)
    )
    if terms and not _weights_close(spec.weights, weights):
        raise SpecError("factors do not reproduce the listed terms")
    return spec


def parse(text: str) -> GsiSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None
    return from_dict(obj)


def _weights_close(a: dict, b: dict, tol: float = 1e-12) -> bool:
    keys = set(a) | set(b)
    scale = max([1.0] + [abs(w) for w in b.values()])
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol * scale for k in keys)


def _factor_rank_one(weights: dict, square: bool):
    """Recover (lambda, gamma) from a rank-one weight table."""
    if not weights:
        raise SpecError("cannot factor an empty spec")
    (u0, v0), pivot = max(weights.items(), key=lambda kv: abs(kv[1]))
    if square:
        diag = weights.get((u0, u0), 0.0)
        if diag <= 0:
            raise SpecError("square spec has no positive diagonal pivot")
        root = math.sqrt(diag)
        lam = {u: w / root for (u, v), w in weights.items() if v == u0}
        return lam, lam
    lam = {u: w for (u, v), w in weights.items() if v == v0}
    gam = {v: w / pivot for (u, v), w in weights.items() if u == u0}
    return lam, gam
