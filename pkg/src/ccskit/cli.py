"""Command-line front end: analysis tables, reduction curves, simulation
runs, and self-verification suites, with JSON/CSV output suitable for
plotting and regression tests.

Exit codes: 0 ok, 1 verification failure, 2 invalid input or guard
violation, 3 degraded run (more than half the trials blew up).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .analyzer import (
    GuardError,
    bell,
    class_size,
    enumerate_patterns,
    expected_survivors_approx,
    expected_survivors_exact,
    mc_survivor_oracle,
    pgf,
    reduction_ratio,
)
from .dyadic import Dyadic
from .analyzer import PatternSequence
from .seeds import make_rng
from .simharness import ExperimentConfig, measure_reduction, run_experiment


def format_number(x) -> str:
    """12 significant digits, the precision used for regression comparisons."""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _rounded(x):
    return float(format_number(x)) if isinstance(x, float) else x


def emit_table(columns, rows, fmt, out_path, metadata):
    """Write a table as JSON or CSV; both carry identical numeric values."""
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(format_number(row[c]) for c in columns))
        text = "\n".join(lines) + "\n"
    else:
        doc = {
            "metadata": metadata,
            "columns": list(columns),
            "rows": [{c: _rounded(row[c]) for c in columns} for row in rows],
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load_config(path):
    with open(path) as f:
        return json.load(f)


def cmd_analyze(args) -> int:
    params = _load_config(args.config)
    K = int(params["K"])
    m = tuple(params["m"])
    l = tuple(params["l"])
    max_stage = int(params["max_stage"])
    rows = []
    for stage in range(1, max_stage + 1):
        exact = expected_survivors_exact(K, m, l, stage)
        approx = expected_survivors_approx(K, l, stage)
        ratio = exact / approx if approx else float("nan")
        rows.append({"stage": stage, "exact": exact, "approx": approx,
                     "exact_over_approx": ratio})
    emit_table(
        ["stage", "exact", "approx", "exact_over_approx"], rows, args.format,
        args.out, _metadata("analyze", args, params),
    )
    return 0


def cmd_reduction_curve(args) -> int:
    params = _load_config(args.config)
    if "K_list" in params:
        Ks = [int(k) for k in params["K_list"]]
    else:
        start, stop, step = params["K_range"]
        Ks = list(range(int(start), int(stop) + 1, int(step)))
    l = (0, *params["l"])
    slots = params.get("slots", list(range(len(l))))
    seed = args.seed if args.seed is not None else int(params.get("seed", 0))
    trials = args.trials if args.trials is not None else int(params.get("trials", 400))

    measured = {}
    if args.simulate:
        m = tuple(params.get("m", [24] * len(l)))
        for K in Ks:
            cfg = ExperimentConfig(
                profile=_profile(m, l, K),
                channel=None,
                rows_per_slot=(1,) * len(l),
                mode="error_free_lists",
                trials=trials,
                master_seed=seed,
            )
            measured[K] = measure_reduction(cfg).means

    rows = []
    for K in Ks:
        for slot in slots:
            row = {"K": K, "slot": slot,
                   "numerical": reduction_ratio(K, l, slot)}
            if args.simulate:
                row["simulated"] = float(measured[K][slot])
            rows.append(row)
    columns = ["K", "slot", "numerical"] + (["simulated"] if args.simulate else [])
    emit_table(columns, rows, args.format, args.out,
               _metadata("reduction-curve", args, params, seed=seed))
    return 0


def _profile(m, l, K):
    from .treecode import CodeProfile

    return CodeProfile(m=tuple(m), l=tuple(l), K=K)


def cmd_simulate(args) -> int:
    cfg_dict = _load_config(args.config)
    if args.seed is not None:
        cfg_dict["master_seed"] = args.seed
    if args.trials is not None:
        cfg_dict["trials"] = args.trials
    cfg = ExperimentConfig.from_dict(cfg_dict)
    report = run_experiment(cfg)
    doc = report.to_dict()
    doc["metadata"]["cli_version"] = __version__
    if args.format == "csv":
        columns = ["slot", "survivors_mean", "reduction_mean", "reduction_sd",
                   "pruned_columns"]
        rows = [
            {
                "slot": j,
                "survivors_mean": report.survivors_per_stage[j],
                "reduction_mean": report.measured_reduction_per_slot[j],
                "reduction_sd": report.reduction_sd_per_slot[j],
                "pruned_columns": report.pruned_columns_per_slot[j],
            }
            for j in range(cfg.profile.n)
        ]
        emit_table(columns, rows, "csv", args.out, doc["metadata"])
    else:
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if args.out:
            with open(args.out, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    if report.blowups * 2 > report.trials:
        print(f"degraded run: {report.blowups}/{report.trials} trials blew up",
              file=sys.stderr)
        return 3
    return 0


def _metadata(command, args, params, seed=None) -> dict:
    meta = {"command": command, "version": __version__, "config": params}
    if seed is not None:
        meta["seed"] = seed
    elif getattr(args, "seed", None) is not None:
        meta["seed"] = args.seed
    return meta


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

def _check(name: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    return ok


def verify_patterns(seed: int) -> bool:
    ok = True
    for j in range(1, 9):
        pats = enumerate_patterns(j)
        ok &= _check(f"|patterns({j})| == bell({j})",
                     len(pats) == bell(j), f"{len(pats)} vs {bell(j)}")
    listed = {
        1: [(1,)],
        2: [(1, 1), (1, 2)],
        3: [(1, 1, 1), (1, 1, 3), (1, 2, 1), (1, 2, 2), (1, 2, 3)],
    }
    for j, expect in listed.items():
        got = sorted(p.entries for p in enumerate_patterns(j))
        ok &= _check(f"patterns({j}) verbatim", got == sorted(expect))
    sizes_ok = all(
        sum(class_size(s, K) for s in enumerate_patterns(j)) == K ** (j - 1)
        for j in range(1, 7)
        for K in range(1, 11)
    )
    ok &= _check("sum of class sizes == K^(j-1) for j<=6, K<=10", sizes_ok)
    return ok


def verify_pgf(seed: int) -> bool:
    rng = make_rng(seed, "verify-pgf")
    ok = True
    for rep in range(10):
        m = tuple(int(v) for v in rng.integers(1, 17, size=3))
        l = (0, *(int(v) for v in rng.integers(1, 13, size=2)))
        one = Dyadic(1)
        p111 = pgf(PatternSequence((1, 1, 1)), m, l)
        ok &= p111.terms == {0: one}
        c = Dyadic.pow2(-(m[0] + m[1]))
        p113 = pgf(PatternSequence((1, 1, 3)), m, l)
        ok &= p113.coefficient(l[2]) == one - c and p113.coefficient(0) == c
        c0 = Dyadic.pow2(-m[0])
        p122 = pgf(PatternSequence((1, 2, 2)), m, l)
        ok &= p122.coefficient(l[1] + l[2]) == one - c0 and p122.coefficient(0) == c0
    return _check("closed-form PGFs for (1,1,1), (1,1,3), (1,2,2)", ok)


def verify_oracle(seed: int, trials: int = 100_000) -> bool:
    configs = [
        (3, (3, 3, 3), (0, 2, 2), 2),
        (4, (2, 3, 2), (0, 1, 3), 2),
        (2, (3, 2, 3, 2), (0, 2, 1, 2), 3),
        (4, (2, 2, 2, 2), (0, 3, 2, 1), 3),
        (3, (3, 3, 3, 3), (0, 1, 2, 3), 3),
    ]
    ok = True
    for i, (K, m, l, stage) in enumerate(configs):
        mean, stderr = mc_survivor_oracle(K, m, l, stage, trials, seed + i)
        exact = expected_survivors_exact(K, m, l, stage)
        dev = abs(mean - exact) / stderr if stderr else 0.0
        ok &= _check(
            f"oracle K={K} m={m} l={l} stage={stage}",
            abs(mean - exact) <= 3 * stderr + 1e-12,
            f"mc={mean:.5f} exact={exact:.5f} dev={dev:.2f} sigma",
        )
    return ok


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.suite == "patterns":
        ok = verify_patterns(seed)
    elif args.suite == "pgf":
        ok = verify_pgf(seed)
    else:
        ok = verify_oracle(seed, trials=args.trials or 100_000)
    print("all checks passed" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccskit",
        description="coded compressed sensing toolkit: analysis and simulation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed override")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--trials", type=int, default=None, help="trial count override")

    p = sub.add_parser("analyze", parents=[common],
                       help="exact vs approximate expected surviving paths")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reduction-curve", parents=[common],
                       help="column reduction ratio per (K, slot)")
    p.add_argument("--config", required=True)
    p.add_argument("--simulate", action="store_true",
                   help="add a measured column from error-free-list trials")
    p.set_defaults(func=cmd_reduction_curve)

    p = sub.add_parser("simulate", parents=[common], help="run a Monte Carlo experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", choices=("pgf", "oracle", "patterns"))
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GuardError as e:
        print(f"guard violation: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
