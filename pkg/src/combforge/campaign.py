"""Seeded randomized verification trials and report assembly.

Every trial draws from its own ``trial_rng(seed, trial)`` stream, so records
do not depend on execution order. Records are plain dicts ready for JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .channels import random_hermitian, random_pure_state
from .entropy import tripartite_layout, verify_min_max_identity
from .linalg import HermitianOperator
from .reversal import ReversalError, optimum_pair, reverse_strategy
from .rng import trial_rng
from .sdp.builders import SolverFailure, StrategyOptimum
from .sdp.problem import SdpSolution, SolverOptions
from .strategies import RoundStructure, StrategyError, random_strategy, unitary_realization

FEASIBILITY = 8
GAP = 16
IDENTITY = 32

DESK_MAX_ROUNDS = 3
DESK_MAX_DIM = 3


class DeskBoundError(ValueError):
    """Requested sizes exceed the default desk-scale bounds."""


def check_desk_bounds(n: int, dims: Sequence[int], allow_large: bool = False) -> None:
    if allow_large:
        return
    if n > DESK_MAX_ROUNDS or (dims and max(dims) > DESK_MAX_DIM):
        raise DeskBoundError(f"n <= {DESK_MAX_ROUNDS} and dims <= {DESK_MAX_DIM} by default "
                             "(pass --allow-large to override)")


@dataclass(frozen=True)
class Tolerances:
    identity: float = 1e-5
    feasibility: float = 1e-8
    gap: float = 1e-7
    residual: float = 1e-8
    weak_duality: float = 1e-9


def solver_health(sol: SdpSolution, tol: Tolerances) -> dict:
    return {
        "status": sol.status,
        "gap": sol.gap,
        "primal_eq": sol.residuals.primal_eq,
        "weak_duality_violation": sol.weak_duality_violation,
        "iterations": sol.iterations,
        "healthy": bool(sol.status == "optimal" and sol.gap <= tol.gap and sol.residuals.primal_eq <= tol.residual
                        and sol.weak_duality_violation <= tol.weak_duality),
    }


def random_rounds(rng: np.random.Generator, ns: Sequence[int], max_dim: int) -> RoundStructure:
    n = int(rng.choice(list(ns)))
    xs = [int(d) for d in rng.integers(1, max_dim + 1, size=n)]
    ys = [int(d) for d in rng.integers(1, max_dim + 1, size=n)]
    return RoundStructure.from_dims(xs, ys)


def _rounds_record(rounds: RoundStructure) -> dict:
    return {"n": rounds.n, "x_dims": list(rounds.x_dims), "y_dims": list(rounds.y_dims)}


def _fail_record(record: dict, code: int, message: str) -> dict:
    record.update(passed=False, failure=code, message=message)
    return record


def _optima_record(fwd: StrategyOptimum, rev: StrategyOptimum, tol: Tolerances, record: dict) -> dict:
    diff = abs(fwd.value - rev.value)
    bound = tol.identity * max(1.0, fwd.value)
    health = [solver_health(fwd.solution, tol), solver_health(rev.solution, tol)]
    record.update(forward=fwd.value, reversed=rev.value, difference=diff, bound=bound, solver=health)
    failure = 0
    if not all(h["healthy"] for h in health):
        failure |= GAP
    if diff > bound:
        failure |= IDENTITY
    record.update(passed=failure == 0, failure=failure)
    return record


def corollary_trial(seed: int, trial: int, rounds: RoundStructure | None = None, ns: Sequence[int] = (1, 2),
                    max_dim: int = 3, tol: Tolerances = Tolerances(),
                    opts: SolverOptions | None = None) -> dict:
    """Forward and reversed optima for a random rank-one objective ``uu*``."""
    rng = trial_rng(seed, trial)
    rounds = random_rounds(rng, ns, max_dim) if rounds is None else rounds
    u = random_pure_state(rounds.layout(), rng)
    record = {"trial": trial, **_rounds_record(rounds)}
    try:
        res = optimum_pair(HermitianOperator(np.outer(u, u.conj()), rounds.layout()), rounds, opts)
    except SolverFailure as exc:
        return _fail_record(record, GAP, str(exc))
    except StrategyError as exc:
        return _fail_record(record, FEASIBILITY, str(exc))
    return _optima_record(res.forward, res.reversed, tol, record)


def counterexample_trial(seed: int, trial: int, rounds: RoundStructure, threshold: float = 1e-2,
                         tol: Tolerances = Tolerances(), opts: SolverOptions | None = None) -> dict:
    """Forward and reversed optima for a random full-rank Hermitian objective."""
    rng = trial_rng(seed, trial)
    h = random_hermitian(rounds.layout(), rng)
    record = {"trial": trial, **_rounds_record(rounds), "threshold": threshold}
    try:
        res = optimum_pair(h, rounds, opts)
    except SolverFailure as exc:
        return _fail_record(record, GAP, str(exc))
    diff = abs(res.forward_opt - res.reversed_opt)
    health = [solver_health(res.forward.solution, tol), solver_health(res.reversed.solution, tol)]
    record.update(forward=res.forward_opt, reversed=res.reversed_opt, difference=diff, solver=health,
                  found=bool(diff > threshold and all(x["healthy"] for x in health)), objective=h)
    return record


def reversal_trial(seed: int, trial: int, rounds: RoundStructure | None = None, mode: str = "maximize",
                   ns: Sequence[int] = (1, 2), max_dim: int = 2, tol: Tolerances = Tolerances()) -> dict:
    """Realize a random strategy, reverse it against a random ``u`` and check the value relation."""
    rng = trial_rng(seed, trial)
    if rounds is None:
        while True:
            rounds = random_rounds(rng, ns, max_dim)
            if mode != "match" or np.prod(rounds.y_dims) <= np.prod(rounds.x_dims):
                break
    s = random_strategy(rounds, [2] * (rounds.n - 1), rng)
    u = random_pure_state(rounds.layout(), rng)
    record = {"trial": trial, **_rounds_record(rounds), "mode": mode}
    try:
        res = reverse_strategy(unitary_realization(s), u, mode, tol.feasibility)
    except StrategyError as exc:
        return _fail_record(record, FEASIBILITY, str(exc))
    except ReversalError as exc:
        return _fail_record(record, IDENTITY, str(exc))
    record.update(forward=res.forward_value, reversed=res.reversed_value, bridge=res.bridge_residual,
                  validation_residual=res.reversed.residual)
    failure = 0
    if res.reversed.residual > tol.feasibility:
        failure |= FEASIBILITY
    if mode == "maximize" and res.reversed_value < res.forward_value - 1e-8:
        failure |= IDENTITY
    if mode == "match" and abs(res.reversed_value - res.forward_value) > 1e-8:
        failure |= IDENTITY
    if res.bridge_residual > 1e-10:
        failure |= IDENTITY
    record.update(passed=failure == 0, failure=failure)
    return record


def entropy_trial(seed: int, trial: int, dims: Sequence[int] = (2, 2, 2), tol: float = 1e-4,
                  tolerances: Tolerances = Tolerances(), opts: SolverOptions | None = None) -> dict:
    rng = trial_rng(seed, trial)
    lay = tripartite_layout(*dims)
    u = random_pure_state(lay, rng)
    record = {"trial": trial, "dims": list(dims)}
    try:
        rep = verify_min_max_identity(u, lay, opts=opts)
    except SolverFailure as exc:
        return _fail_record(record, GAP, str(exc))
    record.update(h_min=rep.h_min, h_max=rep.h_max, residual=rep.identity_residual)
    failure = IDENTITY if rep.identity_residual > tol else 0
    record.update(passed=failure == 0, failure=failure)
    return record


@dataclass
class CampaignReport:
    command: str
    seed: int
    records: list = field(default_factory=list)
    timestamp: str = ""

    def header(self) -> dict:
        return {"type": "header", "command": self.command, "version": __version__, "seed": self.seed,
                "rng": "philox(seed, trial)", "timestamp": self.timestamp}

    def summary(self) -> dict:
        fails = [r for r in self.records if not r.get("passed", True)]
        code = 0
        for r in fails:
            code |= int(r.get("failure", 0))
        diffs = [r["difference"] for r in self.records if "difference" in r]
        resid = [r["residual"] for r in self.records if "residual" in r]
        return {
            "type": "summary",
            "trials": len(self.records),
            "failures": len(fails),
            "failure_code": code,
            "max_difference": max(diffs) if diffs else None,
            "max_residual": max(resid) if resid else None,
        }

    @property
    def exit_code(self) -> int:
        return self.summary()["failure_code"] if self.summary()["failures"] else 0

    def lines(self) -> list[dict]:
        return [self.header()] + [{"type": "trial", **_jsonable(r)} for r in self.records] + [self.summary()]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items() if not isinstance(v, HermitianOperator)}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def run_campaign(command: str, seed: int, trials: int, fn: Callable[[int, int], dict],
                 stop: Callable[[dict], bool] | None = None) -> CampaignReport:
    report = CampaignReport(command, seed)
    for t in range(trials):
        rec = fn(seed, t)
        report.records.append(rec)
        if stop is not None and stop(rec):
            break
    return report


__all__ = [
    "CampaignReport", "DeskBoundError", "FEASIBILITY", "GAP", "IDENTITY", "Tolerances", "check_desk_bounds",
    "corollary_trial", "counterexample_trial", "entropy_trial", "random_rounds", "reversal_trial",
    "run_campaign", "solver_health",
]
