"""Test functions on [0,1]^d with known ANOVA structure.

``ProductModel`` and ``MinModel`` carry closed-form variance quantities.
``GridFunction`` is piecewise constant on an m^d lattice, so its ANOVA can be
computed exactly by enumeration; it is the ground truth for the estimator tests.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .subsets import (
    SubsetMask,
    all_subsets,
    check_enumerable,
    complement,
    lower_from_sigma,
    sigma_from_lower,
    superset_from_sigma,
)

INDEX_KINDS = ("mean", "total_variance", "sigma", "lower", "upper", "superset", "mean_dimension")

ANOVA_SIZE_CAP = 10**6
THETA_SIZE_CAP = 10**8


class ModelError(ValueError):
    pass


def scaled_centered_uniform(x):
    return math.sqrt(12.0) * (np.asarray(x, dtype=float) - 0.5)


def _check_points(x, d: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != d:
        raise ModelError(f"expected points with {d} coordinates, got shape {np.shape(x)}")
    if np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr)):
        raise ModelError("coordinates must lie in [0, 1]")
    return arr, single


def validate_base_function(g: Callable, points: int = 10_000, tol: float = 1e-3) -> None:
    """Check int g = 0 and int g^2 = 1 with the composite midpoint rule."""
    x = (np.arange(points) + 0.5) / points
    gx = np.asarray(g(x), dtype=float)
    if gx.shape != x.shape or not np.all(np.isfinite(gx)):
        raise ModelError("g must map arrays elementwise to finite values")
    m1 = gx.mean()
    m2 = (gx**2).mean()
    if abs(m1) > tol or abs(m2 - 1.0) > tol:
        raise ModelError(f"g needs mean 0 and mean square 1; got {m1:.3g} and {m2:.6g}")


class Model:
    """Base class: a deterministic function on [0,1]^d.

    Subclasses implement ``_evaluate`` on an (n, d) array.
    """

    d: int

    def evaluate(self, x):
        arr, single = _check_points(x, self.d)
        out = self._evaluate(arr)
        return float(out[0]) if single else out

    __call__ = evaluate

    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exact_lower(self) -> dict[SubsetMask, float]:
        """All lower indices, keyed by subset. Requires d <= 12."""
        check_enumerable(self.d)
        return {u: self.exact_index("lower", u) for u in all_subsets(self.d)}

    def exact_index(self, kind: str, u: SubsetMask | None = None) -> float:
        raise ModelError(f"{type(self).__name__} has no closed-form indices")


@dataclass(frozen=True, eq=False)
class ProductModel(Model):
    """f(x) = prod_j (mu_j + tau_j g(x_j))."""

    mu: tuple[float, ...]
    tau: tuple[float, ...]
    g: Callable = field(default=scaled_centered_uniform, repr=False)

    def __post_init__(self):
        mu = tuple(float(m) for m in np.atleast_1d(self.mu))
        tau = tuple(float(t) for t in np.atleast_1d(self.tau))
        if len(mu) == 1 and len(tau) > 1:
            mu = mu * len(tau)
        if len(mu) != len(tau) or not tau:
            raise ModelError("mu and tau must have the same nonzero length")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "tau", tau)
        if self.g is not scaled_centered_uniform:
            validate_base_function(self.g)

    @property
    def d(self) -> int:
        return len(self.tau)

    def _evaluate(self, x):
        mu = np.asarray(self.mu)
        tau = np.asarray(self.tau)
        return np.prod(mu + tau * self.g(x), axis=-1)

    def exact_index(self, kind: str, u: SubsetMask | None = None) -> float:
        mu2 = np.square(self.mu)
        tau2 = np.square(self.tau)
        if kind == "mean":
            return float(np.prod(self.mu))
        total = float(np.prod(mu2 + tau2) - np.prod(mu2))
        if kind == "total_variance":
            return total
        if kind == "mean_dimension":
            # sum_u |u| sigma2_u = sum_j upper_{j}
            uppers = [
                total - self._lower(complement(SubsetMask.from_indices([j], self.d)))
                for j in range(1, self.d + 1)
            ]
            return float(math.fsum(uppers) / total)
        u = _require_set(u, self.d)
        m = u.bool_mask()
        if kind == "sigma":
            if not u.bits:
                return 0.0
            return float(np.prod(tau2[m]) * np.prod(mu2[~m]))
        if kind == "lower":
            return self._lower(u)
        if kind == "upper":
            return total - self._lower(complement(u))
        if kind == "superset":
            if not u.bits:
                return total
            return float(np.prod(tau2[m]) * np.prod(mu2[~m] + tau2[~m]))
        raise ModelError(f"unsupported index kind {kind!r}")

    def _lower(self, u: SubsetMask) -> float:
        mu2 = np.square(self.mu)
        tau2 = np.square(self.tau)
        m = u.bool_mask()
        return float(np.prod(mu2[m] + tau2[m]) * np.prod(mu2[~m]) - np.prod(mu2))

    def to_config(self) -> dict:
        return {"kind": "product", "mu": list(self.mu), "tau": list(self.tau)}


@dataclass(frozen=True, eq=False)
class MinModel(Model):
    """f(x) = min_j x_j."""

    d: int

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ModelError("MinModel needs d >= 1")

    def _evaluate(self, x):
        return x.min(axis=-1)

    def _lower_card(self, k: int) -> float:
        d = self.d
        return k / ((d + 1) ** 2 * (2 * d - k + 2))

    def exact_index(self, kind: str, u: SubsetMask | None = None) -> float:
        d = self.d
        if kind == "mean":
            return 1.0 / (d + 1)
        if kind == "total_variance":
            return d / ((d + 1) ** 2 * (d + 2))
        if kind == "lower":
            return self._lower_card(_require_set(u, d).cardinality)
        if kind == "upper":
            u = _require_set(u, d)
            return self.exact_index("total_variance") - self._lower_card(d - u.cardinality)
        if kind not in ("sigma", "superset", "mean_dimension"):
            raise ModelError(f"unsupported index kind {kind!r}")
        check_enumerable(d)
        sigma = sigma_from_lower(self.exact_lower())
        if kind == "sigma":
            return sigma[_require_set(u, d)]
        if kind == "superset":
            return superset_from_sigma(sigma)[_require_set(u, d)]
        weighted = math.fsum(v.cardinality * s for v, s in sigma.items())
        return weighted / self.exact_index("total_variance")

    def exact_lower(self) -> dict[SubsetMask, float]:
        check_enumerable(self.d)
        return {u: self._lower_card(u.cardinality) for u in all_subsets(self.d)}

    def to_config(self) -> dict:
        return {"kind": "min", "d": self.d}


def _require_set(u: SubsetMask | None, d: int) -> SubsetMask:
    if u is None:
        raise ModelError("this index kind needs a subset")
    if u.d != d:
        raise ModelError(f"subset dimension {u.d} does not match model dimension {d}")
    return u


class GridFunction(Model):
    """Piecewise-constant function on the m^d lattice of cells.

    ``values[i_1, ..., i_d]`` is the value on the cell containing x with
    i_j = min(floor(m x_j), m - 1).
    """

    def __init__(self, values, m: int | None = None, d: int | None = None):
        arr = np.array(values, dtype=float)
        if arr.ndim == 1 and d is not None and m is not None:
            if arr.size != m**d:
                raise ModelError(f"expected {m**d} values for m={m}, d={d}, got {arr.size}")
            arr = arr.reshape((m,) * d)
        if arr.ndim < 1 or len(set(arr.shape)) != 1:
            raise ModelError("values must form an m x m x ... x m table")
        if arr.shape[0] < 2:
            raise ModelError("need m >= 2 levels per axis")
        if (m is not None and arr.shape[0] != m) or (d is not None and arr.ndim != d):
            raise ModelError("values table does not match the given (m, d)")
        self.values = arr
        self.values.setflags(write=False)
        self.m = arr.shape[0]
        self.d = arr.ndim

    @classmethod
    def random(cls, d: int, m: int, rng: np.random.Generator) -> GridFunction:
        return cls(rng.standard_normal((m,) * d))

    @classmethod
    def from_callable(cls, model: Model, m: int) -> GridFunction:
        """Tabulate ``model`` at cell midpoints."""
        mids = (np.arange(m) + 0.5) / m
        grids = np.meshgrid(*([mids] * model.d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return cls(np.asarray(model.evaluate(pts)).reshape((m,) * model.d))

    def cells(self, x: np.ndarray) -> np.ndarray:
        return np.minimum((x * self.m).astype(np.int64), self.m - 1)

    def _evaluate(self, x):
        idx = self.cells(x)
        return self.values[tuple(idx[:, j] for j in range(self.d))]

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) / self.m

    def to_config(self) -> dict:
        return {"kind": "grid", "d": self.d, "m": self.m, "values": self.values.ravel().tolist()}


@dataclass
class AnovaTable:
    """Exact ANOVA of a GridFunction: the mean and every variance component."""

    mean: float
    sigma: dict[SubsetMask, float]

    @property
    def variance(self) -> float:
        return math.fsum(self.sigma.values())

    def lower(self) -> dict[SubsetMask, float]:
        return lower_from_sigma(self.sigma)

    def superset(self) -> dict[SubsetMask, float]:
        return superset_from_sigma(self.sigma)


def brute_force_anova(gf: GridFunction) -> AnovaTable:
    """ANOVA effects by the defining recursion, with lattice averages as integrals."""
    if gf.values.size > ANOVA_SIZE_CAP:
        raise ModelError(f"m^d = {gf.values.size} exceeds {ANOVA_SIZE_CAP}")
    check_enumerable(gf.d)
    d = gf.d
    vals = gf.values
    effects: dict[int, np.ndarray] = {}
    sigma = {}
    for u in all_subsets(d):
        off = tuple(j for j in range(d) if not u.bits >> j & 1)
        eff = vals.mean(axis=off, keepdims=True) if off else vals.copy()
        # subtract every proper sub-effect (all already computed: smaller bitmasks)
        sub = u.bits
        while sub:
            sub = (sub - 1) & u.bits
            eff = eff - effects[sub]
        effects[u.bits] = eff
        sigma[u] = 0.0 if not u.bits else float(np.mean(np.broadcast_to(eff, vals.shape) ** 2))
    mean = float(effects[0].ravel()[0])
    return AnovaTable(mean=mean, sigma=sigma)


def brute_force_theta(gf: GridFunction, u: SubsetMask, v: SubsetMask) -> float:
    """E f(x_u:z_-u) f(x_v:z_-v) by summing over every pair of lattice cells (x, z)."""
    if u.d != gf.d or v.d != gf.d:
        raise ModelError("subset dimension does not match the grid")
    if gf.m ** (2 * gf.d) > THETA_SIZE_CAP:
        raise ModelError(f"m^(2d) = {gf.m ** (2 * gf.d)} exceeds {THETA_SIZE_CAP}")
    d = gf.d
    # axis j is x_j, axis d + j is z_j; a hybrid point reads x on its set, z elsewhere
    labels = [chr(ord("a") + k) for k in range(2 * d)]

    def subscripts(w: SubsetMask) -> str:
        return "".join(labels[j] if w.bits >> j & 1 else labels[d + j] for j in range(d))

    su, sv = subscripts(u), subscripts(v)
    used = set(su) | set(sv)
    total = np.einsum(f"{su},{sv}->", gf.values, gf.values)
    return float(total) / gf.m ** len(used)


def load_grid_function(path: str | Path) -> GridFunction:
    """Read a GridFunction from JSON ``{"d", "m", "values"}`` or CSV (header ``d,m`` then values)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        cfg = json.loads(text)
        return GridFunction(cfg["values"], m=int(cfg["m"]), d=int(cfg["d"]))
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if not rows:
        raise ModelError(f"{path} is empty")
    head = [tok for tok in rows[0].replace(";", ",").split(",") if tok.strip()]
    try:
        d, m = (int(float(t)) for t in head[:2])
    except ValueError:
        # named header row "d,m" followed by the numbers
        d, m = (int(float(t)) for t in rows[1].split(",")[:2])
        rows = rows[1:]
    values = [float(tok) for line in rows[1:] for tok in line.replace(";", ",").split(",") if tok.strip()]
    return GridFunction(values, m=m, d=d)


def model_from_config(cfg: Mapping) -> Model:
    kind = cfg.get("kind")
    if kind == "product":
        return ProductModel(mu=cfg.get("mu", 1.0), tau=cfg["tau"])
    if kind == "min":
        return MinModel(int(cfg["d"]))
    if kind == "grid":
        if "path" in cfg:
            return load_grid_function(cfg["path"])
        return GridFunction(cfg["values"], m=int(cfg["m"]), d=int(cfg["d"]))
    raise ModelError(f"unknown model kind {kind!r}")
