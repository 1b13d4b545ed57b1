"""Command-line interface: ``winprob {estimate,validate,bound,sample,simulate}``.

Exit codes: 0 success, 2 input or validation error, 3 infeasible configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import InfeasibleError, MethodError, RankingError
from .formats import FORMATS, format_matrix_csv, parse_rankings_csv, read_roster
from .methods import ESTIMATE_DEFAULTS, VALIDATE_DEFAULTS, select
from .minimax import bound_curves
from .ranking import EPSILON
from .synthetic import (
    FAMILIES,
    MAX_M,
    RankingDistribution,
    good_turing_estimator,
    loo_estimator,
    minimax_t1_estimator,
    minimax_t3_estimator,
    mle_estimator,
    oracle_estimator,
    risk_experiment,
    sample_rankings,
    true_win_prob,
)
from .validation import kfold_cv

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


@dataclass
class RunConfig:
    """Everything a run depends on besides its input files."""

    command: str
    inputs: list[str] = field(default_factory=list)
    K: int = 3
    kind: str = "KL"
    k_folds: int | None = None
    seed: int | None = None
    replicas: int | None = None
    resolution: int = 100
    format: str = "table"
    eps: float = EPSILON
    options: dict = field(default_factory=dict)

    def header(self) -> str:
        return f"winprob {__version__}\nconfig: {json.dumps(asdict(self), sort_keys=True)}"


def derive_seed(seed: int, stream: int) -> int:
    """Independent integer seed for a named stream of randomness."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1, np.uint64)[0])


def _g(x: float) -> str:
    return f"{x:.6g}"


def _top(names, key, count=3):
    order = np.argsort(key, kind="stable")[:count]
    return [names[i] for i in order]


def _load(args) -> tuple:
    roster = read_roster(args.roster) if getattr(args, "roster", None) else None
    return parse_rankings_csv(args.input, args.input_format, roster, args.extend_roster)


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _methods_arg(value: str | None, defaults) -> list[str]:
    if not value:
        return list(defaults)
    return [v.strip() for v in value.split(",") if v.strip()]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_estimate(args) -> int:
    sample = _load(args)
    names = _methods_arg(args.methods, ESTIMATE_DEFAULTS)
    if not args.methods and not (sample.is_full and sample.m <= MAX_M):
        names.remove("gt")
    methods = select(names, K=args.K, pl_pseudocount=args.pl_pseudocount, eps=args.eps,
                     resolution=args.resolution)
    config = RunConfig("estimate", [args.input], K=args.K, resolution=args.resolution,
                       format=args.format, eps=args.eps,
                       options={"methods": names, "input_format": args.input_format,
                                "pl_pseudocount": args.pl_pseudocount})
    report = {}
    for name, method in methods.items():
        try:
            res = method(sample)
        except Exception as exc:  # noqa: BLE001 - one failing method must not abort the rest
            report[name] = {"error": str(exc)}
            continue
        entry = {"top3": _top(sample.names, res.ranking_key())}
        if res.win_prob is not None:
            entry["win_prob"] = [float(x) for x in res.win_prob]
        if res.scores is not None:
            entry["scores"] = [float(x) for x in res.scores]
        if res.weights is not None:
            entry["weights"] = [float(x) for x in res.weights]
        entry.update({k: v for k, v in res.extra.items()})
        report[name] = entry

    if args.format == "json":
        doc = {"version": __version__, "config": asdict(config), "n": sample.n, "m": sample.m,
               "depth": sample.effective_depth, "algorithms": list(sample.names),
               "methods": report}
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
    elif args.format == "csv":
        buf = io.StringIO()
        for line in config.header().splitlines():
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "algorithm", "win_prob", "score", "error"])
        for name, entry in report.items():
            if "error" in entry:
                w.writerow([name, "", "", "", entry["error"]])
                continue
            for i, alg in enumerate(sample.names):
                p = entry.get("win_prob")
                s = entry.get("scores")
                w.writerow([name, alg, _g(p[i]) if p else "", _g(s[i]) if s else "", ""])
        _emit(buf.getvalue(), args.output)
    else:
        lines = [f"# {line}" for line in config.header().splitlines()]
        lines.append(f"n={sample.n} datasets, m={sample.m} algorithms, "
                     f"depth={sample.effective_depth}")
        rows = [["Scheme", "First", "Second", "Third", "Weights"]]
        for name, entry in report.items():
            if "error" in entry:
                rows.append([name, "FAILED: " + entry["error"], "", "", ""])
                continue
            wts = " ".join(_g(x) for x in entry.get("weights", []))
            rows.append([name, *(entry["top3"] + ["", "", ""])[:3], wts])
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        for r in rows:
            lines.append("  ".join(c.ljust(wd) for c, wd in zip(r, widths)).rstrip())
        _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_validate(args) -> int:
    sample = _load(args)
    names = _methods_arg(args.methods, VALIDATE_DEFAULTS)
    methods = select(names, K=args.K, pl_pseudocount=args.pl_pseudocount, eps=args.eps,
                     resolution=args.resolution)
    config = RunConfig("validate", [args.input], K=args.K, k_folds=args.k, seed=args.seed,
                       resolution=args.resolution, format=args.format, eps=args.eps,
                       options={"methods": names, "input_format": args.input_format,
                                "reference": args.reference, "test": args.test,
                                "pl_pseudocount": args.pl_pseudocount})
    report = kfold_cv(sample, args.k, methods, args.seed, eps=args.eps,
                      reference=args.reference, test=args.test)
    if args.format == "json":
        _emit(report.to_json({"version": __version__, "config": asdict(config)}) + "\n",
              args.output)
    else:
        head = "".join(f"# {line}\n" for line in config.header().splitlines())
        _emit(head + report.to_table(), args.output)
    return 0


def _int_list(text: str) -> list[int]:
    """Parse ``"5,10,20"`` or a ``start:stop:step`` range (stop inclusive)."""
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(x) for x in text.split(",") if x.strip()]


def cmd_bound(args) -> int:
    n_values = _int_list(args.n)
    K_values = _int_list(args.K_list)
    if args.m < 2 or min(n_values) < 1:
        raise InfeasibleError("need m >= 2 and n >= 1")
    bad = [K for K in K_values if not 1 <= K <= args.m]
    if bad:
        raise InfeasibleError(f"K values {bad} must lie in [1, m={args.m}]")
    config = RunConfig("bound", format=args.format,
                       options={"m": args.m, "n": n_values, "K": K_values})
    rows = bound_curves(args.m, n_values, K_values)
    if args.format == "json":
        doc = {"version": __version__, "config": asdict(config), "m": args.m, "rows": rows}
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
        return 0
    buf = io.StringIO()
    for line in config.header().splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "n", "curve", "bound", "weights"])
    for r in rows:
        w.writerow([args.m, r["n"], r["curve"], _g(r["bound"]),
                    ";".join(_g(x) for x in r["weights"])])
    _emit(buf.getvalue(), args.output)
    return 0


def _distribution(args) -> RankingDistribution:
    params = json.loads(args.params) if args.params else {}
    aseed = args.assignment_seed if args.assignment_seed is not None else derive_seed(args.seed, 0)
    return RankingDistribution(args.m, args.family, params, aseed)


def cmd_sample(args) -> int:
    dist = _distribution(args)
    sample = sample_rankings(dist, args.n, derive_seed(args.seed, 1))
    config = RunConfig("sample", seed=args.seed, format="csv",
                       options={"family": args.family, "m": args.m, "n": args.n,
                                "params": dict(dist.params),
                                "assignment_seed": dist.assignment_seed,
                                "true_win_prob": [float(x) for x in true_win_prob(dist)]})
    _emit(format_matrix_csv(sample, header=config.header()), args.output)
    return 0


def cmd_simulate(args) -> int:
    dist = _distribution(args)
    n_values = _int_list(args.n)
    names = _methods_arg(args.estimators, ("mle", "loo-kl"))
    kinds = [k.strip().upper() for k in args.kind.split(",")]
    oracle_kind = kinds[0]
    factories = {
        "mle": mle_estimator,
        "loo-kl": lambda: loo_estimator(args.K, "KL", resolution=args.resolution, eps=args.eps),
        "loo-tv": lambda: loo_estimator(args.K, "TV", resolution=args.resolution, eps=args.eps),
        "minimax-t1": minimax_t1_estimator,
        "minimax-t3": lambda: minimax_t3_estimator(args.K),
        "oracle": lambda: oracle_estimator(dist, args.K, oracle_kind, args.oracle_replicas,
                                           derive_seed(args.seed, 2)),
        "gt": good_turing_estimator,
    }
    unknown = [n for n in names if n not in factories]
    if unknown:
        raise RankingError(f"unknown estimators {unknown}; choose from {sorted(factories)}")
    estimators = {n: factories[n]() for n in names}
    config = RunConfig("simulate", K=args.K, kind=",".join(kinds), seed=args.seed,
                       replicas=args.replicas, resolution=args.resolution, format="csv",
                       eps=args.eps,
                       options={"family": args.family, "m": args.m, "n": n_values,
                                "params": dict(dist.params), "estimators": names,
                                "assignment_seed": dist.assignment_seed})
    table = risk_experiment(dist, estimators, n_values, args.replicas, kinds, args.seed,
                            eps=args.eps)
    _emit(table.to_csv(config.header()), args.output)
    if args.weights_out:
        _emit(table.weights_csv(config.header()), args.weights_out)
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="winprob",
                                     description="Estimate which algorithm wins the next dataset.")
    parser.add_argument("--version", action="version", version=f"winprob {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("input", help="ranking table (CSV), or - for stdin")
        p.add_argument("--input-format", choices=FORMATS, default="matrix")
        p.add_argument("--roster", help="file listing every algorithm name (topk format)")
        p.add_argument("--extend-roster", action="store_true",
                       help="append names missing from --roster instead of failing")
        p.add_argument("--methods", help="comma-separated method names")
        p.add_argument("-K", "--K", type=int, default=3, help="rank positions used by LOO")
        p.add_argument("--eps", type=float, default=EPSILON, help="probability floor for logs")
        p.add_argument("--resolution", type=int, default=100, help="LOO grid denominator")
        p.add_argument("--pl-pseudocount", type=float, default=0.1,
                       help="Plackett-Luce pseudo-count (0 disables)")
        p.add_argument("-o", "--output")

    p = sub.add_parser("estimate", help="win probabilities from a ranking table")
    add_input(p)
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("validate", help="k-fold cross-validated held-out loss")
    add_input(p)
    p.add_argument("--k", type=int, default=10, help="number of folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", default="mle")
    p.add_argument("--test", choices=("t", "permutation"), default="t")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bound", help="worst-case TV bound curves")
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--n", default="5:50:5", help="list '5,10' or range 'start:stop:step'")
    p.add_argument("--K-list", default="2,3")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bound)

    def add_dist(p):
        p.add_argument("--family", choices=FAMILIES, required=True)
        p.add_argument("--m", type=int, default=6)
        p.add_argument("--params", help="JSON object overriding family parameters")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--assignment-seed", type=int,
                       help="seed of the outcome-to-ranking bijection (default: from --seed)")
        p.add_argument("-o", "--output")

    p = sub.add_parser("sample", help="draw a synthetic ranking table")
    add_dist(p)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("simulate", help="Monte Carlo risk of estimators")
    add_dist(p)
    p.add_argument("--n", required=True, help="list '20,50' or range 'start:stop:step'")
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--kind", default="KL", help="KL, TV or KL,TV")
    p.add_argument("--estimators", help="comma-separated: mle, loo-kl, loo-tv, minimax-t1, "
                                        "minimax-t3, oracle, gt")
    p.add_argument("-K", "--K", type=int, default=3)
    p.add_argument("--eps", type=float, default=EPSILON)
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--oracle-replicas", type=int, default=1000)
    p.add_argument("--weights-out", help="write mean fitted weights per n to this CSV")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"winprob: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (RankingError, MethodError, ValueError, OSError) as exc:
        print(f"winprob: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
