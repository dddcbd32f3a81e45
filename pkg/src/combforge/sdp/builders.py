"""SDP formulations of strategy optimization.

Primal::

    maximize <H, X_n>
    subject to Tr_{Y_k}(X_k) = X_{k-1} (x) I_{X_k}   (k = n..2)
               Tr_{Y_1}(X_1) = I_{X_1},  X_k >= 0

Dual (free Hermitian ``Y_k`` on ``Y_<k X_<=k``)::

    minimize Tr(Y_1)
    subject to Y_n (x) I_{Y_n} >= H
               Y_{k-1} (x) I_{Y_{k-1}} >= Tr_{X_k}(Y_k)   (k = n..2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import HermitianOperator, Layout, LayoutError
from ..strategies import FEASIBILITY_TOL, RoundStructure, StrategyOperator, validate_strategy
from .maps import FactorMap
from .problem import Block, SdpProblem, SdpSolution, SolverOptions, constraint
from .solver import solve


def level_label(k: int) -> str:
    return f"level{k}"


def round_constraint(k: int) -> str:
    return f"round{k}"


def dual_label(k: int) -> str:
    return f"dual{k}"


def slack_label(k: int) -> str:
    return f"slack{k}"


def _check_objective(h: HermitianOperator, rounds: RoundStructure) -> None:
    if h.layout != rounds.layout():
        raise LayoutError(f"objective layout {h.layout.labels} != strategy layout {rounds.layout().labels}")


def _constraint_layout(rounds: RoundStructure, k: int) -> Layout:
    """``Y_<k, X_<=k``: where the k-th partial-trace constraint lives."""
    return rounds.y_layout(k - 1) + rounds.x_layout(k)


def build_strategy_primal(h: HermitianOperator, rounds: RoundStructure) -> SdpProblem:
    """Blocks ``level1..leveln`` hold ``X_1..X_n``; constraint ``roundk`` is the k-th marginal condition.

    The multiplier of ``roundk`` is the dual variable ``Y_k``.
    """
    _check_objective(h, rounds)
    n = rounds.n
    blocks = tuple(Block(level_label(k), rounds.layout(k)) for k in range(1, n + 1))
    cons = []
    for k in range(n, 0, -1):
        lay_k = rounds.layout(k)
        out = _constraint_layout(rounds, k)
        yk = rounds.y_labels[k - 1]
        terms = [(level_label(k), FactorMap(lay_k, {yk: None}, out_order=out.labels))]
        if k > 1:
            xk = rounds.x_layout(k).select([rounds.x_labels[k - 1]])
            terms.append((level_label(k - 1),
                          FactorMap(rounds.layout(k - 1), extra=xk, out_order=out.labels, coef=-1.0)))
            target = 0.0
        else:
            target = 1.0
        cons.append(constraint(round_constraint(k), terms, target, out))
    py = np.cumprod(rounds.y_dims)
    initial = {level_label(k): np.eye(rounds.layout(k).total_dim) / py[k - 1] for k in range(1, n + 1)}
    return SdpProblem(blocks, tuple(cons), {level_label(n): h.data}, initial=initial, name="strategy-primal")


def build_strategy_dual(h: HermitianOperator, rounds: RoundStructure) -> SdpProblem:
    """Free blocks ``dualk`` hold ``Y_k``; PSD blocks ``slackk`` turn the inequalities into equalities."""
    _check_objective(h, rounds)
    n = rounds.n
    free = tuple(Block(dual_label(k), _constraint_layout(rounds, k)) for k in range(1, n + 1))
    slacks = tuple(Block(slack_label(k), rounds.layout(k)) for k in range(1, n + 1))
    cons = []
    for k in range(n, 0, -1):
        lay_k = rounds.layout(k)
        yk = rounds.y_layout(k).select([rounds.y_labels[k - 1]])
        terms = [(dual_label(k), FactorMap(_constraint_layout(rounds, k), extra=yk, out_order=lay_k.labels)),
                 (slack_label(k), FactorMap(lay_k, coef=-1.0))]
        if k < n:
            nxt = _constraint_layout(rounds, k + 1)
            terms.append((dual_label(k + 1), FactorMap(nxt, {rounds.x_labels[k]: None},
                                                       out_order=lay_k.labels, coef=-1.0)))
            target = 0.0
        else:
            target = h.data
        cons.append(constraint(f"ineq{k}", terms, target, lay_k))
    # strictly feasible start: Y_n = t_n I with t_n > lambda_max(H), t_{k-1} = x_k t_k + 1
    t = [0.0] * (n + 1)
    t[n] = max(np.linalg.eigvalsh(h.data)[-1], 0.0) + 1.0
    for k in range(n, 1, -1):
        t[k - 1] = rounds.x_dims[k - 1] * t[k] + 1.0
    initial = {}
    for k in range(1, n + 1):
        initial[dual_label(k)] = t[k] * np.eye(free[k - 1].dim)
        if k == n:
            initial[slack_label(k)] = t[k] * np.eye(slacks[k - 1].dim) - h.data
        else:
            initial[slack_label(k)] = (t[k] - rounds.x_dims[k] * t[k + 1]) * np.eye(slacks[k - 1].dim)
    return SdpProblem(slacks, tuple(cons), {dual_label(1): np.eye(free[0].dim)}, free_blocks=free,
                      sense="min", initial=initial, name="strategy-dual")


@dataclass(frozen=True)
class StrategyOptimum:
    """Optimal value, a validated optimizer and the dual certificate ``Y_1..Y_n``."""

    value: float
    optimizer: StrategyOperator
    certificate: tuple[HermitianOperator, ...]
    dual_value: float
    solution: SdpSolution

    @property
    def margin(self) -> float:
        """Weak-duality margin ``Tr(Y_1) - value`` (non-negative up to solver noise)."""
        return self.dual_value - self.value

    def __iter__(self):
        return iter((self.value, self.optimizer, self.certificate))


class SolverFailure(RuntimeError):
    def __init__(self, message: str, solution: SdpSolution):
        super().__init__(message)
        self.solution = solution


def require_optimal(sol: SdpSolution, what: str) -> SdpSolution:
    if sol.status != "optimal":
        raise SolverFailure(f"{what}: solver status {sol.status} ({sol.message}; gap {sol.gap:.2e}, "
                            f"residual {sol.residuals.primal_eq:.2e})", sol)
    return sol


def optimal_strategy_value(h: HermitianOperator, rounds: RoundStructure,
                           opts: SolverOptions | None = None,
                           feasibility_tol: float = FEASIBILITY_TOL) -> StrategyOptimum:
    """``max <H, X>`` over strategies, with optimizer and certificate."""
    sol = require_optimal(solve(build_strategy_primal(h, rounds), opts), "strategy SDP")
    x = sol.block(level_label(rounds.n))
    s = validate_strategy(x, rounds, feasibility_tol)
    cert = tuple(sol.multiplier(round_constraint(k)) for k in range(1, rounds.n + 1))
    return StrategyOptimum(sol.primal_value, s, cert, sol.dual_value, sol)


def certificate_value(cert, h: HermitianOperator, rounds: RoundStructure) -> tuple[float, float]:
    """``Tr(Y_1)`` and the worst violation (most negative eigenvalue) of the dual inequalities."""
    n = rounds.n
    worst = 0.0
    for k in range(n, 0, -1):
        lay_k = rounds.layout(k)
        yk = rounds.y_layout(k).select([rounds.y_labels[k - 1]])
        lhs = FactorMap(_constraint_layout(rounds, k), extra=yk, out_order=lay_k.labels).apply(cert[k - 1].data)
        if k == n:
            rhs = h.data
        else:
            rhs = FactorMap(_constraint_layout(rounds, k + 1), {rounds.x_labels[k]: None},
                            out_order=lay_k.labels).apply(cert[k].data)
        worst = min(worst, float(np.linalg.eigvalsh((lhs - rhs + (lhs - rhs).conj().T) / 2)[0]))
    return float(np.trace(cert[0].data).real), worst


__all__ = [
    "SolverFailure", "StrategyOptimum", "build_strategy_dual", "build_strategy_primal", "certificate_value",
    "dual_label", "level_label", "optimal_strategy_value", "require_optimal", "round_constraint", "slack_label",
]
