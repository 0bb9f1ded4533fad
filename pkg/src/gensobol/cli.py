"""Command line interface: ``gensobol {list,estimate,table,verify}``.

Exit codes: 0 success, 2 usage or input error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from pathlib import Path

from . import catalog, gsi, tables, verify
from .engine import EngineError, SampleConfig, estimate, estimate_batch, estimate_bias_corrected, exact_target
from .models import GridFunction, MinModel, ModelError, ProductModel, load_grid_function, model_from_config
from .subsets import DimensionError, parse_subset

SEED_ENV = "GENSOBOL_SEED"
EXIT_USAGE = 2
EXIT_VERIFY = 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in re.split(r"[,\s/]+", text.strip()) if t]


def parse_model(text: str):
    """``min:d=5``, ``product:mu=1,tau=1,1,0.5``, ``grid:path.json`` or a JSON file path."""
    if ":" not in text or Path(text).exists():
        path = Path(text)
        if not path.exists():
            raise UsageError(f"model file {text} not found")
        if path.suffix.lower() == ".json":
            cfg = json.loads(path.read_text())
            if "kind" not in cfg:
                return load_grid_function(path)
            return model_from_config(cfg)
        return load_grid_function(path)
    kind, _, body = text.partition(":")
    if kind == "grid":
        return load_grid_function(body)
    # split on commas that start a new key=value
    params = dict(p.split("=", 1) for p in re.split(r",(?=\s*[a-z_]+\s*=)", body) if p.strip())
    params = {k.strip(): v.strip() for k, v in params.items()}
    if kind == "min":
        return MinModel(int(params["d"]))
    if kind == "product":
        tau = _floats(params["tau"])
        mu = _floats(params.get("mu", "1"))
        return ProductModel(mu=mu, tau=tau)
    raise UsageError(f"unknown model kind {kind!r}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw else 0


def _emit(records: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(records if len(records) != 1 else records[0], indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        fields = sorted({k for r in records for k in r})
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        for r in records:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_list(args) -> int:
    for e in catalog.CATALOG.values():
        params = ", ".join(e.params) or "-"
        print(f"{e.name}\n    params: {params}\n    target: {e.target}\n    cost:   {e.cost}\n"
              f"    class:  {e.form}\n    form:   {e.anchor}")
    return 0


def _estimator_params(args, d: int) -> dict:
    params = {}
    for key in ("u", "w", "w1"):
        raw = getattr(args, key)
        if raw is not None:
            params[key] = parse_subset(raw, d)
    if args.lower_pairs:
        params["lower_pairs"] = True
    return params


def cmd_estimate(args) -> int:
    model = parse_model(args.model)
    if (args.estimator is None) == (args.spec_file is None):
        raise UsageError("give exactly one of --estimator or --spec-file")
    cfg = SampleConfig(n=args.n, seed=args.seed, replicates=args.reps, workers=args.workers)
    if args.spec_file:
        spec = gsi.parse(Path(args.spec_file).read_text())
        name, params = Path(args.spec_file).stem, {}
    else:
        params = _estimator_params(args, model.d)
        spec = catalog.build(args.estimator, model.d, **params)
        name = args.estimator
    shown = {k: (v.indices() if hasattr(v, "indices") else v) for k, v in params.items()}
    records = []
    if isinstance(spec, dict):
        res = estimate_batch(spec, model, cfg)
        for key, r in res.items():
            records.append(r.to_record(estimator=name, component=key, params=shown,
                                       cost=r.evals_per_pair, batch_cost=res.evals_per_pair,
                                       truth=exact_target(spec[key], model)))
    else:
        if args.bias_corrected:
            r = estimate_bias_corrected(spec, model, cfg, name)
        else:
            r = estimate(spec, model, cfg, name)
        records.append(r.to_record(estimator=name, params=shown, cost=r.evals_per_pair,
                                   truth=exact_target(spec, model)))
    _emit(records, args.format, args.out)
    return 0


def cmd_table(args) -> int:
    which = args.which
    kwargs = {"scale": args.scale, "seed": args.seed, "workers": args.workers}
    if args.n is not None:
        kwargs["n"] = args.n
    if args.reps is not None and which != 1:
        kwargs["replicates"] = args.reps
    result = tables.TABLES[which](**kwargs)
    if args.out:
        _emit(result.records, args.format, args.out)
        print(result.render())
    elif args.format == "csv":
        _emit(result.records, "csv", None)
    else:
        print(result.render())
    return 0


def cmd_verify(args) -> int:
    results = verify.run_all(seed=args.seed)
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else EXIT_VERIFY


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gensobol", description="Generalized Sobol' index estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list catalog estimators")

    est = sub.add_parser("estimate", help="estimate one catalog entry or spec file")
    est.add_argument("--model", required=True, help="min:d=5 | product:mu=..,tau=.. | grid:file | config.json")
    est.add_argument("--estimator", choices=sorted(catalog.CATALOG))
    est.add_argument("--spec-file")
    est.add_argument("--u")
    est.add_argument("--w")
    est.add_argument("--w1")
    est.add_argument("--lower-pairs", action="store_true", help="saltelli_first_second: add every lower_{j,k}")
    est.add_argument("--bias-corrected", action="store_true")
    est.add_argument("--n", type=_positive_int, required=True)
    est.add_argument("--reps", type=_positive_int, default=1, help="batches for bias-corrected standard errors")

    tab = sub.add_parser("table", help="reproduce one of the three comparison tables")
    tab.add_argument("which", type=int, choices=(1, 2, 3))
    tab.add_argument("--scale", type=float, default=1.0, help="divide n and R by this factor")
    tab.add_argument("--n", type=_positive_int)
    tab.add_argument("--reps", type=_positive_int)

    ver = sub.add_parser("verify", help="run the oracle self-checks")

    for p in (est, tab, ver):
        p.add_argument("--seed", type=int, default=_default_seed())
    for p in (est, tab):
        p.add_argument("--workers", type=_positive_int, default=1)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out")
    return parser


COMMANDS = {"list": cmd_list, "estimate": cmd_estimate, "table": cmd_table, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    if getattr(args, "scale", 1.0) is not None and getattr(args, "scale", 1.0) <= 0:
        print("error: --scale must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, gsi.SpecError, ModelError, EngineError, DimensionError, KeyError, OSError,
            json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
