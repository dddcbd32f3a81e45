"""Command-line front end.

Exit status is 0 on success. Failures set bits: 8 for feasibility, 16 for
solver gap or residual, 32 for a violated identity. Usage and input errors
exit with 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .campaign import (
    FEASIBILITY,
    GAP,
    IDENTITY,
    CampaignReport,
    DeskBoundError,
    Tolerances,
    _jsonable,
    check_desk_bounds,
    corollary_trial,
    counterexample_trial,
    entropy_trial,
    run_campaign,
)
from .channels import random_pure_state
from .entropy import verify_min_max_identity
from .io import (
    channel_from_json,
    dump,
    load,
    matrix_from_json,
    matrix_to_json,
    strategy_from_json,
    strategy_to_json,
    vector_from_json,
)
from .linalg import LayoutError, permute_factors, permute_vector
from .reversal import ReversalError, reverse_strategy
from .rng import trial_rng
from .sdp.builders import SolverFailure, optimal_strategy_value
from .sdp.problem import SdpSizeError, SolverOptions
from .strategies import (
    RoundStructure,
    StrategyError,
    co_strategy_functional,
    random_protocol,
    random_strategy,
    simulate_interaction,
    strategy_from_channels,
    unitary_realization,
)


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def parse_round_dims(text: str) -> RoundStructure:
    """``"2:2,3:2"`` -> rounds with ``x_k:y_k`` per round, labelled X1, Y1, ..."""
    pairs = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2:
            raise UsageError(f"round dims must look like x:y, got {item!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    if any(min(p) < 1 for p in pairs):
        raise UsageError("dimensions must be positive")
    return RoundStructure.from_dims([p[0] for p in pairs], [p[1] for p in pairs])


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def load_rounds(text: str) -> RoundStructure:
    """Inline JSON ``[["X1", 2, "Y1", 2], ...]`` or a file holding it (or an object with ``rounds``)."""
    p = Path(text)
    obj = load(p) if p.exists() else json.loads(text)
    if isinstance(obj, dict):
        obj = obj["rounds"]
    return RoundStructure.from_list(obj)


def solver_options(args) -> SolverOptions:
    kw = {}
    if getattr(args, "sdp_gap_tol", None) is not None:
        kw["gap_tol"] = args.sdp_gap_tol
    if getattr(args, "sdp_max_iter", None) is not None:
        kw["max_iter"] = args.sdp_max_iter
    return SolverOptions(**kw)


def _rounds_arg(args, default: str | None = None) -> RoundStructure | None:
    if getattr(args, "rounds", None):
        return load_rounds(args.rounds)
    dims = getattr(args, "dims", None) or default
    return parse_round_dims(dims) if dims else None


def _desk(args, rounds: RoundStructure) -> None:
    check_desk_bounds(rounds.n, rounds.x_dims + rounds.y_dims, args.allow_large)


class Output:
    def __init__(self, args):
        self.fmt = args.format
        self.path = getattr(args, "out", None)
        self.lines: list[str] = []

    def emit(self, obj: dict) -> None:
        obj = _jsonable(obj)
        if self.fmt == "json":
            line = json.dumps(obj)
        else:
            line = " ".join(f"{k}={_fmt(v)}" for k, v in obj.items())
        self.lines.append(line)
        print(line)

    def write_lines(self, path: str | None) -> None:
        if path:
            Path(path).write_text("\n".join(self.lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (dict, list)):
        return json.dumps(v)
    return str(v)


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _tolerances(args) -> Tolerances:
    t = Tolerances()
    if getattr(args, "tol", None) is not None:
        t = Tolerances(identity=args.tol, feasibility=t.feasibility, gap=t.gap, residual=t.residual)
    if getattr(args, "sdp_gap_tol", None) is not None:
        t = Tolerances(identity=t.identity, feasibility=t.feasibility, gap=args.sdp_gap_tol, residual=t.residual)
    return t


def _emit_report(args, report: CampaignReport) -> int:
    report.timestamp = _timestamp()
    out = Output(args)
    for line in report.lines():
        out.emit(line)
    out.write_lines(args.out)
    return report.exit_code


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    obj = load(args.h)
    h = matrix_from_json(obj, hermitian=True)
    rounds = load_rounds(args.rounds) if args.rounds else (
        RoundStructure.from_list(obj["rounds"]) if "rounds" in obj else _rounds_arg(args))
    if rounds is None:
        raise UsageError("give --rounds, --dims, or a 'rounds' field in the objective file")
    if h.layout != rounds.layout():
        h = permute_factors(h, rounds.layout().labels)
    out = Output(args)
    try:
        opt = optimal_strategy_value(h, rounds, solver_options(args), feasibility_tol=args.feasibility_tol)
    except SolverFailure as exc:
        out.emit({"status": exc.solution.status, "message": str(exc)})
        return GAP
    except StrategyError as exc:
        out.emit({"status": "infeasible-optimizer", "message": str(exc)})
        return FEASIBILITY
    sol = opt.solution
    out.emit({"value": opt.value, "dual_value": opt.dual_value, "gap": sol.gap,
              "primal_eq": sol.residuals.primal_eq, "iterations": sol.iterations, "status": sol.status})
    if args.out:
        dump({"value": opt.value, "dual_value": opt.dual_value, "optimizer": strategy_to_json(opt.optimizer),
              "certificate": [matrix_to_json(y) for y in opt.certificate]}, args.out)
    return 0


def cmd_reverse(args) -> int:
    seed = args.seed
    rng = trial_rng(seed, 0)
    if args.strategy:
        s = strategy_from_json(load(args.strategy))
        rounds = s.rounds
    else:
        rounds = _rounds_arg(args, "2:2")
        _desk(args, rounds)
        s = random_strategy(rounds, [2] * (rounds.n - 1), rng)
    if args.u:
        u, lay = vector_from_json(load(args.u))
        if lay.labels != rounds.layout().labels:
            u = permute_vector(u, lay.dims, [lay.index(lab) for lab in rounds.layout().labels])
    else:
        u = random_pure_state(rounds.layout(), rng)
    out = Output(args)
    try:
        res = reverse_strategy(unitary_realization(s), u, args.mode, args.feasibility_tol)
    except ReversalError as exc:
        out.emit({"status": "error", "message": str(exc)})
        return IDENTITY
    except StrategyError as exc:
        out.emit({"status": "infeasible", "message": str(exc)})
        return FEASIBILITY
    ref = None
    if args.out:
        ref = str(Path(args.out).with_suffix("")) + ".reversed-strategy.json"
        dump(strategy_to_json(res.reversed), ref)
        dump(res.to_json(ref), args.out)
    rec = {k: v for k, v in res.to_json(ref).items() if k != "w"}
    out.emit(rec)
    failure = 0
    if res.reversed.residual > args.feasibility_tol:
        failure |= FEASIBILITY
    if res.reversed_value < res.forward_value - 1e-8:
        failure |= IDENTITY
    if args.mode == "match" and abs(res.reversed_value - res.forward_value) > 1e-8:
        failure |= IDENTITY
    return failure


def cmd_corollary(args) -> int:
    opts = solver_options(args)
    tol = _tolerances(args)
    rounds = _rounds_arg(args)
    ns = parse_int_list(args.n)
    if rounds is not None:
        _desk(args, rounds)
    else:
        check_desk_bounds(max(ns), [args.max_dim], args.allow_large)
    report = run_campaign("corollary", args.seed, args.trials,
                          lambda s, t: corollary_trial(s, t, rounds, ns, args.max_dim, tol, opts))
    return _emit_report(args, report)


def cmd_entropy(args) -> int:
    opts = solver_options(args)
    if args.state:
        u, lay = vector_from_json(load(args.state))
        if len(lay) != 3:
            raise UsageError("the state must have exactly three factors")
        labels = list(lay.labels)
        cut = args.cut or labels[0]
        if cut not in labels:
            raise UsageError(f"--cut must be one of {labels}")
        i = labels.index(cut)
        x, y = labels[i], labels[(i + 1) % 3]
        rep = verify_min_max_identity(u, lay, [x], [y], opts)
        out = Output(args)
        rec = rep.to_json()
        rec.update(target=x, conditioned_min=y, conditioned_max=labels[(i + 2) % 3])
        out.emit(rec if args.format == "json" else {k: v for k, v in rec.items() if k != "certificates"})
        if args.out:
            dump(rec, args.out)
        return IDENTITY if rep.identity_residual > (args.tol or 1e-4) else 0
    dims = parse_int_list(args.dims or "2,2,2")
    if len(dims) != 3:
        raise UsageError("--dims needs three dimensions dX,dY,dZ")
    check_desk_bounds(1, dims, args.allow_large)
    report = run_campaign("entropy", args.seed, args.trials,
                          lambda s, t: entropy_trial(s, t, dims, args.tol or 1e-4, opts=opts))
    return _emit_report(args, report)


def cmd_counterexample(args) -> int:
    opts = solver_options(args)
    rounds = _rounds_arg(args, "2:2")
    _desk(args, rounds)
    report = run_campaign("counterexample", args.seed, args.trials,
                          lambda s, t: counterexample_trial(s, t, rounds, args.threshold, opts=opts),
                          stop=lambda r: r.get("found", False))
    found = next((r for r in report.records if r.get("found")), None)
    for r in report.records:
        obj = r.pop("objective", None)
        if r is found and obj is not None:
            r["objective"] = matrix_to_json(obj)
        r["passed"] = True
    code = _emit_report(args, report)
    return code if found is not None else IDENTITY


def cmd_simulate(args) -> int:
    if args.protocol:
        obj = load(args.protocol)
        rounds = RoundStructure.from_list(obj["rounds"])
        alice = [channel_from_json(c) for c in obj["alice"]]
        bob = [channel_from_json(c) for c in obj["bob"]]
        effect = matrix_from_json(obj["effect"], hermitian=True)
    else:
        rounds = _rounds_arg(args, "2:2,2:2,2:2")
        _desk(args, rounds)
        alice, bob, effect = random_protocol(rounds, trial_rng(args.seed, 0))
    prob = simulate_interaction(alice, bob, effect, rounds)
    x = strategy_from_channels(alice, rounds)
    p = co_strategy_functional(bob, effect, rounds)
    pairing = float(np.vdot(p.data, x.op.data).real)
    diff = abs(prob - pairing)
    tol = args.tol or 1e-10
    Output(args).emit({"probability": prob, "pairing": pairing, "difference": diff, "passed": diff <= tol})
    return 0 if diff <= tol else IDENTITY


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="combforge", description="Strategy SDPs, time reversal and entropies.")
    parser.add_argument("--version", action="version", version=f"combforge {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="campaign seed (64-bit)")
    common.add_argument("--rounds", help="round structure as inline JSON or a file")
    common.add_argument("--dims", help="per-round dims x:y,... (entropy: dX,dY,dZ)")
    common.add_argument("--tol", type=float, help="pass/fail tolerance of the checked identity")
    common.add_argument("--feasibility-tol", type=float, default=1e-8)
    common.add_argument("--sdp-gap-tol", type=float, help="relative duality gap accepted as optimal")
    common.add_argument("--sdp-max-iter", type=int, help="interior-point iteration limit")
    common.add_argument("--out", help="output file")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--allow-large", action="store_true", help="lift the n<=3, dims<=3 bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="optimal strategy for an objective")
    p.add_argument("h", help="objective matrix file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reverse", parents=[common], help="time-reverse a strategy against u u*")
    p.add_argument("--u", help="vector file on the strategy layout (random when absent)")
    p.add_argument("--strategy", help="strategy file (random when absent)")
    p.add_argument("--random", action="store_true", help="use random inputs (the default)")
    p.add_argument("--mode", choices=("maximize", "match"), default="maximize")
    p.set_defaults(func=cmd_reverse)

    p = sub.add_parser("corollary", parents=[common], help="forward vs reversed optima campaign")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--n", default="1,2", help="round counts to draw from")
    p.add_argument("--max-dim", type=int, default=3, help="largest per-factor dimension drawn")
    p.set_defaults(func=cmd_corollary)

    p = sub.add_parser("entropy", parents=[common], help="min/max entropy identity")
    p.add_argument("--state", help="pure tripartite vector file")
    p.add_argument("--random-pure", action="store_true", help="random pure states (the default)")
    p.add_argument("--cut", help="factor whose conditional entropies are computed")
    p.add_argument("--trials", type=int, default=1)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("counterexample", parents=[common], help="search a non-rank-one objective breaking equality")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=1e-2)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("simulate", parents=[common], help="simulate an interaction and cross-check <P, X>")
    p.add_argument("protocol", nargs="?", help="protocol file (random when absent)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) is not None and getattr(args, "trials", 1) < 1:
        parser.error("--trials must be at least 1")
    try:
        return int(args.func(args))
    except (UsageError, DeskBoundError, LayoutError, SdpSizeError, FileNotFoundError,
            json.JSONDecodeError, KeyError) as exc:
        print(f"combforge: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
