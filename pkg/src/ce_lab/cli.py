"""``ce-lab`` command line: exact values, simulation, offline estimation, planning, checks, figure data."""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .estimators import estimate_record
from .measurement import LRMRecord, simulate_lrm, simulate_sic
from .planner import Strategy, compare, plan
from .records import read_record, write_record, write_result
from .states import (PureState, ce_to_concurrence, exact_ce, ghz_state, make_state, product_state,
                     validate_subset, w_state)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2, 3
ALL_SUBSETS_MAX_QUBITS = 12

_FIXTURES = {"ghz": ghz_state, "w": w_state, "product": product_state}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- argument parsing helpers ------------------------------------------------------

def parse_state(spec: str) -> PureState:
    """``ghz:n``, ``w:n``, ``product:n`` or a file with one (complex) amplitude per line."""
    name, sep, arg = spec.partition(":")
    if sep and name in _FIXTURES:
        try:
            n = int(arg)
        except ValueError:
            raise ValueError(f"bad qubit count in state spec {spec!r}") from None
        return _FIXTURES[name](n)
    path = Path(spec)
    if not path.is_file():
        raise ValueError(f"state spec {spec!r} is neither a fixture (ghz:n, w:n, product:n) nor a file")
    amps = []
    for i, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            try:
                amps.append(complex(line.replace(" ", "")))
            except ValueError:
                raise ValueError(f"{path}:{i}: cannot parse amplitude {line!r}") from None
    return make_state(np.array(amps))


def parse_subset(spec: str | None, n: int) -> tuple[int, ...]:
    """``1-5``, ``1,3``, ``1-2,4``; None means every qubit."""
    if spec is None:
        return tuple(range(1, n + 1))
    labels = []
    for part in spec.split(","):
        lo, dash, hi = part.strip().partition("-")
        try:
            labels.extend(range(int(lo), int(hi) + 1) if dash else [int(lo)])
        except ValueError:
            raise ValueError(f"bad subset spec {spec!r}") from None
    return validate_subset(sorted(labels), n)


def fixture_name(spec: str) -> str | None:
    name, sep, _ = spec.partition(":")
    return name if sep and name in _FIXTURES else None


def _emit(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, indent=2))
        return
    for k, v in report.items():
        if isinstance(v, (list, tuple)) and v and isinstance(v[0], dict):
            print(f"{k}:")
            for row in v:
                print("  " + "  ".join(f"{a}={b}" for a, b in row.items()))
        else:
            print(f"{k}: {v}")


# -- subcommands -------------------------------------------------------------------

def cmd_exact(args) -> int:
    state = parse_state(args.state)
    if args.all_subsets:
        if state.n > ALL_SUBSETS_MAX_QUBITS:
            raise ValueError(f"--all-subsets is capped at n <= {ALL_SUBSETS_MAX_QUBITS}, got n={state.n}")
        rows = []
        for r in range(1, state.n + 1):
            for sub in itertools.combinations(range(1, state.n + 1), r):
                ce = exact_ce(state, sub)
                rows.append({"subset": ",".join(map(str, sub)), "ce": ce, "concurrence": ce_to_concurrence(ce)})
        _emit({"n": state.n, "subsets": rows}, args.json)
        return EXIT_OK
    labels = parse_subset(args.subset, state.n)
    ce = exact_ce(state, labels)
    _emit({"subset": ",".join(map(str, labels)), "ce": ce, "concurrence": ce_to_concurrence(ce)}, args.json)
    return EXIT_OK


def _resolve_budget(args, s: int):
    """Returns (plan or None, L, K, M) from explicit flags or from --eps/--delta."""
    st = Strategy(args.strategy)
    lrm = st in (Strategy.LRM_MEAN, Strategy.LRM_MOM)
    if lrm and args.M is not None:
        raise UsageError("-M applies to SIC strategies; use -L/-K for LRM")
    if not lrm and args.L is not None:
        raise UsageError("-L applies to LRM strategies; use -M for SIC")
    if args.K is not None and args.K != 2 and st in (Strategy.LRM_MOM, Strategy.SIC_MOM_K2):
        raise UsageError(f"{st.value} requires K = 2")
    explicit = args.L is not None or args.M is not None
    if explicit and args.eps is not None:
        raise UsageError("give either an explicit budget (-L/-M) or --eps, not both")
    if st is not Strategy.LRM_MEAN and args.delta is None:
        raise UsageError(f"{st.value} needs --delta")
    if explicit:
        if st is Strategy.SIC_MOM_KOPT and args.K is None:
            raise UsageError("sic-mom-kopt with explicit -M needs -K (or use --eps)")
        return None, args.L, args.K if args.K is not None else 2, args.M
    if args.eps is None:
        raise UsageError("no budget: give -L/-M or --eps (and --delta)")
    if args.delta is None:
        raise UsageError("planning from --eps needs --delta")
    p = plan(st, s, args.eps, args.delta)
    if args.K is not None and args.K != p.K:
        raise UsageError(f"-K {args.K} conflicts with the planned K = {p.K}")
    return p, p.L, p.K, p.total_shots if not lrm else None


def cmd_simulate(args) -> int:
    state = parse_state(args.state)
    labels = parse_subset(args.subset, state.n)
    st = Strategy(args.strategy)
    p, L, K, M = _resolve_budget(args, len(labels))
    seed = args.seed
    if st in (Strategy.LRM_MEAN, Strategy.LRM_MOM):
        record = simulate_lrm(state, labels, L, K, ensemble=args.ensemble, seed=seed, workers=args.workers)
    else:
        record = simulate_sic(state, labels, M, seed=seed, workers=args.workers)
    result = estimate_record(record, st, delta=args.delta, K=K if st is Strategy.SIC_MOM_KOPT else None)
    result.epsilon = args.eps
    if p is not None:
        result.plan = p.to_dict()
    if args.record:
        write_record(record, args.record)
    if args.out:
        write_result(result, args.out, args.format)
    report = {"strategy": st.value, "subset": ",".join(map(str, labels)), "seed": record.seed,
              "estimate": result.estimate, "variance_bound": result.variance_bound,
              "shots_used": result.shots_used, "settings_count": result.settings_used}
    if st is Strategy.SIC_MOM_KOPT:
        report["K"] = len(record.outcomes) // len(result.batch_means)
    if fixture_name(args.state):
        truth = exact_ce(state, labels)
        report.update(exact=truth, abs_error=abs(result.estimate - truth))
    _emit(report, args.json)
    return EXIT_OK


def cmd_estimate(args) -> int:
    record = read_record(args.record)
    st = Strategy(args.strategy)
    if args.eps is not None and args.K is not None:
        raise UsageError("give --eps or -K, not both")
    if st is Strategy.SIC_MOM_KOPT and args.eps is None and args.K is None:
        raise UsageError("sic-mom-kopt needs --eps or -K")
    result = estimate_record(record, st, delta=args.delta, epsilon=args.eps, K=args.K)
    if args.out:
        write_result(result, args.out, args.format)
    report = {"strategy": st.value, "kind": "LRM" if isinstance(record, LRMRecord) else "SIC",
              "subset": ",".join(map(str, record.subset)), "estimate": result.estimate,
              "variance_bound": result.variance_bound, "shots_used": result.shots_used,
              "settings_count": result.settings_used}
    if result.batch_means is not None:
        report["batch_means"] = result.batch_means
    _emit(report, args.json)
    return EXIT_OK


def cmd_plan(args) -> int:
    if args.compare:
        rows = [p.to_dict() for p in compare(args.s, args.eps, args.delta)]
    elif args.strategy is None:
        raise UsageError("plan needs --strategy or --compare")
    else:
        rows = [plan(args.strategy, args.s, args.eps, args.delta).to_dict()]
    if args.json:
        print(json.dumps(rows, indent=2))
        return EXIT_OK
    cols = ["strategy", "s", "epsilon", "delta", "L", "K", "N_B", "B", "total_shots", "settings_count", "k_opt"]
    table = [cols] + [["-" if r[c] is None else str(r[c]) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    for row in table:
        print("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    return EXIT_OK


def cmd_verify(args) -> int:
    constants = ex.corrupted_sic_constants() if args.corrupt_sic else None
    checks = ex.verify_suite(constants=constants, seed=args.seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<42} value={c.value:.3e}  tol={c.tolerance:g}")
    failed = [c.name for c in checks if not c.passed]
    if args.trials:
        if args.strategy is None or args.eps is None or args.delta is None:
            raise UsageError("--trials needs --strategy, --eps and --delta")
        state = parse_state(args.state or "ghz:3")
        labels = parse_subset(args.subset, state.n)
        rep = ex.concentration_trials(state, labels, args.strategy, args.eps, args.delta,
                                      args.trials, args.seed, workers=args.workers)
        ok = rep.passed
        print(f"{'PASS' if ok else 'FAIL'}  concentration:{rep.strategy.value:<28} "
              f"failures={rep.failures}/{rep.trials} rate={rep.failure_rate:.4f} max={rep.threshold:.4f}")
        if not ok:
            failed.append(f"concentration:{rep.strategy.value}")
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_figure(args) -> int:
    out = Path(args.out)
    if args.fig == "2":
        rows = ex.fig2_rows(range(2, args.max_n + 1), L=args.L, seed=args.seed,
                            ensemble=args.ensemble, workers=args.workers)
        with out.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        worst = max(abs(r["z"]) for r in rows)
        print(f"wrote {len(rows)} rows to {out}; max |z| = {worst:.3f}")
        return EXIT_OK
    budget, res = ex.fig4_trials(trials=args.trials, n=args.n, epsilon=args.eps, delta=args.delta,
                                 seed=args.seed, workers=args.workers)
    strategies = list(res)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial"] + [st.value for st in strategies])
        for t in range(args.trials):
            w.writerow([t] + [repr(float(res[st][t])) for st in strategies])
    truth = 0.5 - 0.5**args.n
    print(f"total budget {budget.total} shots; shots used {({k.value: v for k, v in budget.shots().items()})}")
    for st in strategies:
        v = res[st]
        sd = float(np.std(v, ddof=1)) if len(v) > 1 else math.nan
        print(f"{st.value:<14} mean={v.mean():.6f} (truth {truth}) std={sd:.6f}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ce-lab", description="Concentratable entanglement: exact values and estimation "
                                            "from local randomized or SIC measurements.")
    ap.add_argument("--json", action="store_true", help="print reports as JSON")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    strategies = [s.value for s in Strategy]

    p = sub.add_parser("exact", help="exact CE of a state")
    p.add_argument("--state", required=True, help="ghz:n | w:n | product:n | amplitude file")
    p.add_argument("--subset", help="qubit labels, e.g. 1-3,5 (default: all)")
    p.add_argument("--all-subsets", action="store_true", help=f"every non-empty subset (n <= {ALL_SUBSETS_MAX_QUBITS})")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("simulate", help="simulate a measurement record and estimate from it")
    p.add_argument("--state", required=True)
    p.add_argument("--subset")
    p.add_argument("--strategy", required=True, choices=strategies)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("-L", type=int, help="LRM unitary count")
    p.add_argument("-K", type=int, help="shots per unitary (LRM) or per batch (sic-mom-kopt)")
    p.add_argument("-M", type=int, help="SIC shot count")
    p.add_argument("--ensemble", default="clifford", choices=["clifford", "haar"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--record", help="write the measurement record here")
    p.add_argument("--out", help="write the estimate here")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate CE from a record file")
    p.add_argument("record")
    p.add_argument("--strategy", required=True, choices=strategies)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("-K", type=int)
    p.add_argument("--out")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("plan", help="measurement budget for a target precision")
    p.add_argument("--strategy", choices=strategies)
    p.add_argument("--compare", action="store_true", help="all four strategies")
    p.add_argument("-s", type=int, required=True, help="subset size |S|")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="run the built-in oracle checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=0, help="also run seeded concentration trials")
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--state")
    p.add_argument("--subset")
    p.add_argument("--strategy", choices=strategies)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--corrupt-sic", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figure", help="emit figure datasets as CSV")
    p.add_argument("fig", choices=["2", "4"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-L", type=int, default=10_000, help="fig 2: Haar unitaries per point")
    p.add_argument("--max-n", type=int, default=6, help="fig 2: largest n")
    p.add_argument("--ensemble", default="haar", choices=["clifford", "haar"], help="fig 2 ensemble")
    p.add_argument("--trials", type=int, default=1000, help="fig 4: trial count")
    p.add_argument("-n", type=int, default=5, help="fig 4: GHZ size")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_figure)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ce-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"ce-lab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
