"""Monte Carlo estimation of GSIs from paired samples (x_i, z_i).

Only the hybrid points in a spec's support are evaluated, once per pair.
Work is cut into chunks of ``CHUNK`` pairs (plus any batch boundaries);
chunk partial sums are reduced in pair order, so results do not depend on
the number of worker threads.
"""

from __future__ import annotations

import math
import os
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .gsi import GsiSpec, batch_cost, cost, is_contrast, target_value
from .models import GridFunction, Model, brute_force_anova
from .rng import uniform_pairs
from .subsets import SubsetMask

CHUNK = 4096
DEFAULT_BATCHES = 20


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class SampleConfig:
    n: int
    seed: int = 0
    replicates: int = 1
    workers: int = 1

    def __post_init__(self):
        if int(self.n) < 1:
            raise EngineError(f"need n >= 1 pairs, got {self.n}")
        if int(self.replicates) < 1:
            raise EngineError("replicates must be >= 1")
        if int(self.workers) < 1:
            raise EngineError("workers must be >= 1")


@dataclass
class EstimateResult:
    estimate: float
    std_error: float
    n: int
    evals_per_pair: int
    total_evals: int
    estimator_kind: str
    name: str = ""
    seed: int | None = None

    def to_record(self, **extra) -> dict:
        rec = asdict(self)
        rec.update(extra)
        return rec


# -- evaluation ------------------------------------------------------------------


class _Design:
    """Union support of several specs plus per-spec column maps."""

    def __init__(self, specs: Sequence[GsiSpec]):
        if not specs:
            raise EngineError("no specs given")
        dims = {s.d for s in specs}
        if len(dims) != 1:
            raise EngineError(f"specs mix dimensions {sorted(dims)}")
        self.d = dims.pop()
        self.specs = list(specs)
        self.support: list[SubsetMask] = sorted(set().union(*(s.support for s in specs)))
        self.masks = [u.bool_mask() for u in self.support]
        pos = {u: i for i, u in enumerate(self.support)}
        self.cols = [np.array([pos[u] for u in s.support], dtype=np.int64) for s in specs]
        self.forms = []
        for spec, cols in zip(self.specs, self.cols):
            if spec.kind == "general":
                self.forms.append(("quad", spec.weight_matrix()))
            else:
                local = {u: i for i, u in enumerate(spec.support)}
                facs = []
                for lam, gam in spec.factors:
                    a = np.zeros(len(cols))
                    b = np.zeros(len(cols))
                    for u, w in lam.items():
                        a[local[u]] = w
                    for u, w in gam.items():
                        b[local[u]] = w
                    facs.append((a, b))
                self.forms.append(("square" if spec.kind == "square" else "bilinear", facs))

    def evaluate(self, model: Model, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """F[i, k] = f(x_i restricted to support[k] : z_i elsewhere)."""
        out = np.empty((x.shape[0], len(self.support)))
        for k, mask in enumerate(self.masks):
            out[:, k] = model.evaluate(np.where(mask, x, z))
        return out

    def terms(self, idx: int, F: np.ndarray) -> np.ndarray:
        """Per-pair values of scale * sum Omega_uv F_u F_v for spec ``idx``."""
        spec = self.specs[idx]
        Fs = F[:, self.cols[idx]]
        form, data = self.forms[idx]
        if form == "quad":
            t = np.einsum("ij,jk,ik->i", Fs, data, Fs)
        elif form == "square":
            t = sum(np.square(Fs @ a) for a, _ in data)
        else:
            t = sum((Fs @ a) * (Fs @ b) for a, b in data)
        return spec.scale * np.asarray(t, dtype=float)


def _partials(design: _Design, F: np.ndarray) -> dict:
    out = {
        "n": F.shape[0],
        "evals": F.shape[0] * F.shape[1],
        "S": F.sum(axis=0),
        "G": F.T @ F,
        "terms": [],
    }
    for i, cols in enumerate(design.cols):
        t = design.terms(i, F)
        m = F[:, cols].mean(axis=1) if len(cols) else np.zeros_like(t)
        out["terms"].append(np.array([t.sum(), t @ t, m.sum(), t @ m, m @ m]))
    return out


def _add(a: dict, b: dict) -> dict:
    return {
        "n": a["n"] + b["n"],
        "evals": a["evals"] + b["evals"],
        "S": a["S"] + b["S"],
        "G": a["G"] + b["G"],
        "terms": [x + y for x, y in zip(a["terms"], b["terms"])],
    }


def _ranges(n: int, cuts: Sequence[int] = ()) -> list[tuple[int, int]]:
    edges = sorted(set(range(0, n, CHUNK)) | {c for c in cuts if 0 < c < n} | {0, n})
    return list(zip(edges[:-1], edges[1:]))


def _collect(design, model, seed, replicate, n, workers=1, cuts=()) -> list[tuple[tuple[int, int], dict]]:
    if model.d != design.d:
        raise EngineError(f"model dimension {model.d} does not match spec dimension {design.d}")
    ranges = _ranges(n, cuts)

    def work(rng_range):
        a, b = rng_range
        x, z = uniform_pairs(seed, replicate, a, b, design.d)
        return _partials(design, design.evaluate(model, x, z))

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, ranges))
    else:
        parts = [work(r) for r in ranges]
    return list(zip(ranges, parts))


def _reduce(parts: list[dict]) -> dict:
    total = parts[0]
    for p in parts[1:]:
        total = _add(total, p)
    return total


# -- finalizers ------------------------------------------------------------------


def _plugin(design: _Design, idx: int, tot: dict) -> tuple[float, float, str]:
    spec = design.specs[idx]
    n = tot["n"]
    st, stt, sm, stm, smm = tot["terms"][idx]
    mean_t = st / n
    if is_contrast(spec):
        est = mean_t
        sl, sll = st, stt
        kind = "square-form" if spec.kind == "square" else "plug-in"
    else:
        # subtract c * mu_hat^2, mu_hat pooled over every evaluation the spec uses
        c = spec.scale * spec.coefficient_total
        mu = sm / n
        est = mean_t - c * mu * mu
        # delta method: per-pair linearization t_i - 2 c mu m_i
        sl = st - 2 * c * mu * sm
        sll = stt - 4 * c * mu * stm + 4 * c * c * mu * mu * smm
        kind = "plug-in"
    if n < 2:
        return float(est), math.nan, kind
    var = max(sll - sl * sl / n, 0.0) / (n - 1)
    return float(est), math.sqrt(var / n), kind


def _unbiased_value(design: _Design, idx: int, tot: dict) -> float:
    """Bias-corrected estimate of scale * sum Omega_uv (Theta_uv - mu^2)."""
    spec = design.specs[idx]
    n = tot["n"]
    if n < 2:
        raise EngineError("bias correction needs n >= 2")
    pos = {u: i for i, u in enumerate(design.support)}
    S, G = tot["S"], tot["G"]
    mu = S / n
    s2 = (np.diag(G) - S * S / n) / (n - 1)
    acc = []
    for (u, v), w in spec.weights.items():
        i, j = pos[u], pos[v]
        theta = G[i, j] / n
        acc.append(w * (theta - ((mu[i] + mu[j]) / 2) ** 2 + (s2[i] + s2[j]) / (4 * n)))
    return spec.scale * (2 * n / (2 * n - 1)) * math.fsum(acc)


def _batch_cuts(n: int, batches: int) -> list[int]:
    return [b * n // batches for b in range(1, batches)]


def _n_batches(cfg: SampleConfig) -> int:
    b = cfg.replicates if cfg.replicates >= 2 else DEFAULT_BATCHES
    return min(b, cfg.n // 2)


def _bias_corrected(design, idx, collected, batches) -> tuple[float, float]:
    tot = _reduce([p for _, p in collected])
    est = _unbiased_value(design, idx, tot)
    if batches < 2:
        return est, math.nan
    n = tot["n"]
    cuts = [0] + _batch_cuts(n, batches) + [n]
    vals = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        vals.append(_unbiased_value(design, idx, _reduce([p for (r0, r1), p in collected if a <= r0 and r1 <= b])))
    return est, float(np.std(vals, ddof=1) / math.sqrt(batches))


# -- public API ------------------------------------------------------------------


def estimate(spec: GsiSpec, f: Model, cfg: SampleConfig, name: str = "") -> EstimateResult:
    """Plug-in sample GSI, tr(Omega^T Theta_hat), times the spec's scale.

    Non-contrasts have ``scale * sum(Omega) * mu_hat^2`` subtracted, with mu_hat
    the mean over all of the spec's evaluations, so the result targets the
    variance-component combination rather than the raw cross moment.
    """
    return estimate_batch({name: spec}, f, cfg)[name]


@dataclass
class BatchResult(Mapping):
    results: dict[str, EstimateResult]
    evals_per_pair: int
    total_evals: int

    def __getitem__(self, key):
        return self.results[key]

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)


def _as_named(specs) -> dict[str, GsiSpec]:
    if isinstance(specs, GsiSpec):
        return {"": specs}
    if isinstance(specs, Mapping):
        return dict(specs)
    return {str(i): s for i, s in enumerate(specs)}


def estimate_batch(specs, f: Model, cfg: SampleConfig, replicate: int = 0) -> BatchResult:
    """One evaluation pass over the union support of ``specs``."""
    named = _as_named(specs)
    design = _Design(list(named.values()))
    collected = _collect(design, f, cfg.seed, replicate, cfg.n, cfg.workers)
    tot = _reduce([p for _, p in collected])
    observed = tot["evals"] // cfg.n
    out = {}
    for i, (name, spec) in enumerate(named.items()):
        est, se, kind = _plugin(design, i, tot)
        c = cost(spec)
        out[name] = EstimateResult(est, se, cfg.n, c, cfg.n * c, kind, name, cfg.seed)
    return BatchResult(out, observed, tot["evals"])


def observed_evals_per_pair(spec: GsiSpec, f: Model, n: int = 8, seed: int = 0) -> int:
    """Count the model evaluations the engine actually performs, divided by n."""
    counter = _CountingModel(f)
    estimate(spec, counter, SampleConfig(n=n, seed=seed))
    return counter.rows // n


class _CountingModel(Model):
    def __init__(self, inner: Model):
        self.inner = inner
        self.d = inner.d
        self.rows = 0

    def _evaluate(self, x):
        self.rows += x.shape[0]
        return self.inner._evaluate(x)


def estimate_bias_corrected(spec: GsiSpec, f: Model, cfg: SampleConfig, name: str = "") -> EstimateResult:
    """Unbiased estimate of scale * sum Omega_uv (Theta_uv - mu^2) for any Omega.

    Contrasts need no correction and go through :func:`estimate`. The standard
    error is the spread of the same estimator over contiguous batches of pairs
    (``cfg.replicates`` batches, or 20 when that is 1).
    """
    if cfg.n < 2:
        raise EngineError("bias correction needs n >= 2")
    if is_contrast(spec):
        return estimate(spec, f, cfg, name)
    design = _Design([spec])
    batches = _n_batches(cfg)
    collected = _collect(design, f, cfg.seed, 0, cfg.n, cfg.workers, _batch_cuts(cfg.n, max(batches, 1)))
    est, se = _bias_corrected(design, 0, collected, batches)
    c = cost(spec)
    return EstimateResult(est, se, cfg.n, c, cfg.n * c, "bias-corrected", name, cfg.seed)


def lower_index_unbiased(u: SubsetMask, f: Model, cfg: SampleConfig, name: str = "") -> EstimateResult:
    """Bias-corrected pick-freeze estimate of lower_u from f(x_i) and f(y_i), y_i = x_i,u : z_i,-u."""
    if cfg.n < 2:
        raise EngineError("bias correction needs n >= 2")
    full = SubsetMask.full(f.d)
    spec = GsiSpec(d=f.d, weights={(full, u): 1.0})
    design = _Design([spec])
    batches = _n_batches(cfg)
    collected = _collect(design, f, cfg.seed, 0, cfg.n, cfg.workers, _batch_cuts(cfg.n, max(batches, 1)))

    def value(parts):
        tot = _reduce(parts)
        return _janon_corrected(design, tot, full, u)

    est = value([p for _, p in collected])
    se = math.nan
    if batches >= 2:
        cuts = [0] + _batch_cuts(cfg.n, batches) + [cfg.n]
        vals = [value([p for (r0, r1), p in collected if a <= r0 and r1 <= b]) for a, b in zip(cuts[:-1], cuts[1:])]
        se = float(np.std(vals, ddof=1) / math.sqrt(batches))
    c = cost(spec)
    return EstimateResult(est, se, cfg.n, c, cfg.n * c, "bias-corrected", name, cfg.seed)


def _janon_corrected(design: _Design, tot: dict, full: SubsetMask, u: SubsetMask) -> float:
    n = tot["n"]
    i = design.support.index(full)
    j = design.support.index(u)
    S, G = tot["S"], tot["G"]
    mu_x, mu_y = S[i] / n, S[j] / n
    s2_x = (G[i, i] - n * mu_x**2) / (n - 1)
    s2_y = (G[j, j] - n * mu_y**2) / (n - 1)
    cross = G[i, j] / n
    return (2 * n / (2 * n - 1)) * (cross - ((mu_x + mu_y) / 2) ** 2 + (s2_x + s2_y) / (4 * n))


def statistic_from_points(spec: GsiSpec, f: Model, x: np.ndarray, z: np.ndarray, method: str = "plug-in") -> float:
    """Evaluate an estimator on explicit sample points (used by exhaustive checks)."""
    design = _Design([spec])
    tot = _partials(design, design.evaluate(f, np.atleast_2d(x), np.atleast_2d(z)))
    if method == "plug-in":
        return _plugin(design, 0, tot)[0]
    if method == "bias-corrected":
        return _unbiased_value(design, 0, tot)
    if method == "janon-corrected":
        (full, u), = spec.weights
        return _janon_corrected(design, tot, full, u)
    raise EngineError(f"unknown method {method!r}")


def terms_at(spec: GsiSpec, f: Model, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Per-pair values scale * sum Omega_uv F_u F_v at explicit points."""
    design = _Design([spec])
    return design.terms(0, design.evaluate(f, np.atleast_2d(x), np.atleast_2d(z)))


def pair_terms(spec: GsiSpec, f: Model, n: int, seed: int = 0, replicate: int = 0) -> np.ndarray:
    """Per-pair values on the engine's own stream, in pair order."""
    x, z = uniform_pairs(seed, replicate, 0, n, spec.d)
    return terms_at(spec, f, x, z)


# -- replicate studies -----------------------------------------------------------


def exact_lower_map(f: Model) -> tuple[dict[SubsetMask, float], float] | None:
    """(lower indices, mean) for models with known ANOVA, else None."""
    if isinstance(f, GridFunction):
        tab = brute_force_anova(f)
        return tab.lower(), tab.mean
    try:
        return f.exact_lower(), f.exact_index("mean")
    except (ValueError, NotImplementedError):
        return None


def exact_target(spec: GsiSpec, f: Model) -> float | None:
    known = exact_lower_map(f)
    return None if known is None else target_value(spec, known[0])


@dataclass
class StudyRow:
    name: str
    truth: float | None
    mean: float
    bias: float | None
    sd: float
    neg: float
    cost: int
    method: str


@dataclass
class StudyReport:
    rows: dict[str, StudyRow]
    estimates: dict[str, np.ndarray] = field(repr=False)
    n: int
    replicates: int
    seed: int

    def efficiency(self, baseline: str, other: str) -> float:
        """(cost_baseline / cost_other) * (sd_baseline / sd_other)^2."""
        b, o = self.rows[baseline], self.rows[other]
        return (b.cost / o.cost) * (b.sd / o.sd) ** 2

    def to_records(self) -> list[dict]:
        return [asdict(r) | {"n": self.n, "replicates": self.replicates, "seed": self.seed} for r in self.rows.values()]


def _replicate_values(design, methods, f, cfg, rep) -> list[float]:
    collected = _collect(design, f, cfg.seed, rep, cfg.n, 1)
    tot = _reduce([p for _, p in collected])
    vals = []
    for i, method in enumerate(methods):
        if method == "bias-corrected" and not is_contrast(design.specs[i]):
            vals.append(_unbiased_value(design, i, tot))
        else:
            vals.append(_plugin(design, i, tot)[0])
    return vals


def replicate_study(
    estimators: Mapping[str, GsiSpec],
    f: Model,
    cfg: SampleConfig,
    method: str | Mapping[str, str] = "plug-in",
    truths: Mapping[str, float] | None = None,
) -> StudyReport:
    """Run every estimator on replicates 0..R-1 (all estimators share each replicate's pairs)."""
    if cfg.replicates < 2:
        raise EngineError("a replicate study needs R >= 2")
    names = list(estimators)
    methods = [method.get(k, "plug-in") if isinstance(method, Mapping) else method for k in names]
    design = _Design([estimators[k] for k in names])

    def run(rep):
        return _replicate_values(design, methods, f, cfg, rep)

    reps = range(cfg.replicates)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            table = np.array(list(pool.map(run, reps)))
    else:
        table = np.array([run(r) for r in reps])

    known = exact_lower_map(f) if truths is None else None
    rows = {}
    for i, name in enumerate(names):
        vals = table[:, i]
        if truths is not None:
            truth = truths.get(name)
        else:
            truth = None if known is None else target_value(estimators[name], known[0])
        mean = float(vals.mean())
        rows[name] = StudyRow(
            name=name,
            truth=truth,
            mean=mean,
            bias=None if truth is None else mean - truth,
            sd=float(vals.std(ddof=1)),
            neg=float(np.mean(vals < 0)),
            cost=cost(estimators[name]),
            method=methods[i],
        )
    return StudyReport(rows, {k: table[:, i] for i, k in enumerate(names)}, cfg.n, cfg.replicates, cfg.seed)


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


__all__ = [
    "BatchResult",
    "EstimateResult",
    "SampleConfig",
    "StudyReport",
    "batch_cost",
    "estimate",
    "estimate_batch",
    "estimate_bias_corrected",
    "exact_target",
    "lower_index_unbiased",
    "observed_evals_per_pair",
    "pair_terms",
    "replicate_study",
    "statistic_from_points",
    "terms_at",
]
