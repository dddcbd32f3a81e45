"""Time reversal of strategies against rank-one objectives.

Given a unitary realization ``(v, U_1..U_n)`` of a strategy ``X`` and a vector
``u`` on ``Y_1..Y_n X_1..X_n``, the operator

    A = sum_{y, x} conj(u(y, x)) (<y_n| U_n |x_n>) ... (<y_1| U_1 |x_1>) : Z_0 -> Z_n

satisfies ``<uu*, X> = ||A v||^2``. Running the transposed unitaries in the
opposite order from a memory state ``w`` gives a strategy ``Y`` for the
reversed interaction with ``<W uu* W*, Y> = ||A^T w||^2``, where ``W`` reverses
the order of all tensor factors. Since ``A^* A`` and ``conj(A) A^T`` share their
nonzero spectrum, ``w`` can always be chosen to do at least as well as ``X``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import HermitianOperator, LayoutError, eig_hermitian, permute_factors, permute_vector
from .sdp.builders import StrategyOptimum, optimal_strategy_value
from .sdp.problem import SolverOptions
from .strategies import (
    FEASIBILITY_TOL,
    RoundStructure,
    StrategyOperator,
    UnitaryRealization,
    recompose_realization,
)

MODES = ("maximize", "match")
MATCH_TOL = 1e-10


class ReversalError(ValueError):
    """The requested reversal mode cannot be carried out."""


def reverse_vector(u: np.ndarray, rounds: RoundStructure) -> np.ndarray:
    """``W u``: ``u`` on ``Y_1..Y_n X_1..X_n`` re-indexed to ``X_n..X_1 Y_n..Y_1``."""
    lay = rounds.layout()
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size != lay.total_dim:
        raise LayoutError(f"vector of length {u.size} does not fit the strategy layout ({lay.total_dim})")
    return permute_vector(u, lay.dims, list(range(len(lay)))[::-1])


def reverse_operator(h: HermitianOperator, rounds: RoundStructure) -> HermitianOperator:
    """``W H W^*`` on the reversed strategy layout."""
    return permute_factors(h, rounds.reversed().layout().labels)


def build_A(r: UnitaryRealization, u: np.ndarray) -> np.ndarray:
    """The operator ``A: Z_0 -> Z_n`` of the realization ``r`` and vector ``u``."""
    rounds = r.rounds
    lay = rounds.layout()
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size != lay.total_dim:
        raise LayoutError(f"vector of length {u.size} does not fit the strategy layout ({lay.total_dim})")
    n = rounds.n
    z = r.memory_dims
    # s has indices (y_k..y_n, x_k..x_n, z_{k-1}, z_0)
    s = np.conj(u).reshape(lay.dims)[..., None, None] * np.eye(z[0]).reshape((1,) * (2 * n) + (z[0], z[0]))
    for k in range(n):
        x, xd, y, yd = rounds.rounds[k]
        uk = r.unitaries[k].reshape(yd, z[k + 1], z[k], xd)
        m = n - k  # rounds left including this one
        # axes of s: y_k at 0, x_k at m, z_{k-1} at 2m
        s = np.tensordot(uk, s, axes=([0, 2, 3], [0, 2 * m, m]))
        # now (z_k, y_{k+1}.., x_{k+1}.., z_0): move z_k before z_0
        s = np.moveaxis(s, 0, -2)
    return s.reshape(z[n], z[0])


def reversed_realization(r: UnitaryRealization, w: np.ndarray) -> UnitaryRealization:
    """Transposed unitaries in reverse order, started from memory state ``w`` on ``Z_n``."""
    rounds = r.rounds
    z = r.memory_dims
    n = rounds.n
    us = []
    for k in range(n, 0, -1):
        x, xd, y, yd = rounds.rounds[k - 1]
        uk = r.unitaries[k - 1].reshape(yd, z[k], z[k - 1], xd)
        us.append(uk.transpose(3, 2, 1, 0).reshape(xd * z[k - 1], z[k] * yd))
    w = np.asarray(w, dtype=complex).reshape(-1)
    return UnitaryRealization(w, tuple(z[::-1]), tuple(us), rounds.reversed())


@dataclass(frozen=True)
class WChoice:
    w: np.ndarray
    value: float
    spectrum: np.ndarray


def choose_w(a: np.ndarray, target: float = 0.0, mode: str = "maximize", tol: float = MATCH_TOL) -> WChoice:
    """Unit vector ``w`` on ``Z_n`` with ``||A^T w||^2`` maximal or equal to ``target``.

    ``match`` mixes the top and bottom eigenvectors of ``conj(A) A^T`` so that
    ``cos^2 t lam_hi + sin^2 t lam_lo = target``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    a = np.asarray(a, dtype=complex)
    g = np.conj(a) @ a.T
    lam, vecs = eig_hermitian(g)
    if mode == "maximize":
        w = vecs[:, 0]
    else:
        hi, lo = lam[0], lam[-1]
        scale = max(1.0, abs(hi))
        if target > hi + tol * scale or target < lo - tol * scale:
            raise ReversalError(f"target {target:.12g} outside the spectrum [{lo:.12g}, {hi:.12g}]")
        if hi - lo <= tol * scale:
            c2 = 1.0
        else:
            c2 = min(1.0, max(0.0, (target - lo) / (hi - lo)))
        w = np.sqrt(c2) * vecs[:, 0] + np.sqrt(1.0 - c2) * vecs[:, -1]
    w = w / np.linalg.norm(w)
    value = float(np.linalg.norm(a.T @ w) ** 2)
    return WChoice(w, value, lam)


@dataclass(frozen=True)
class ReversalResult:
    reversed: StrategyOperator
    w: np.ndarray
    forward_value: float
    reversed_value: float
    mode: str
    bridge_forward: float = 0.0
    bridge_reversed: float = 0.0
    realization: UnitaryRealization | None = field(default=None, compare=False)

    @property
    def bridge_residual(self) -> float:
        """Worst mismatch between the direct pairings and ``||Av||^2``, ``||A^T w||^2``."""
        return max(abs(self.forward_value - self.bridge_forward), abs(self.reversed_value - self.bridge_reversed))

    def to_json(self, strategy_ref: str | None = None) -> dict:
        from .io import vector_to_json

        return {
            "mode": self.mode,
            "forward_value": self.forward_value,
            "reversed_value": self.reversed_value,
            "bridge_forward": self.bridge_forward,
            "bridge_reversed": self.bridge_reversed,
            "validation_residual": self.reversed.residual,
            "w": vector_to_json(self.w),
            "reversed_strategy": strategy_ref,
        }


def reverse_strategy(r: UnitaryRealization, u: np.ndarray, mode: str = "maximize",
                     feasibility_tol: float = FEASIBILITY_TOL) -> ReversalResult:
    """Reversed strategy ``Y`` with ``<W uu* W*, Y> >= <uu*, X>`` (equal in ``match`` mode).

    ``match`` needs ``prod y <= prod x``. Both values are recomputed by direct
    pairing with the recomposed operators.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    rounds = r.rounds
    if mode == "match" and np.prod(rounds.y_dims) > np.prod(rounds.x_dims):
        raise ReversalError("equality needs dim(Y_1..Y_n) <= dim(X_1..X_n)")
    u = np.asarray(u, dtype=complex).reshape(-1)
    a = build_A(r, u)
    bridge_fwd = float(np.linalg.norm(a @ r.v) ** 2)
    choice = choose_w(a, bridge_fwd, mode)
    rr = reversed_realization(r, choice.w)
    y_op = recompose_realization(rr, feasibility_tol)
    x_op = recompose_realization(r, feasibility_tol)
    fwd = float(np.real(np.vdot(u, x_op.op.data @ u)))
    wu = reverse_vector(u, rounds)
    rev = float(np.real(np.vdot(wu, y_op.op.data @ wu)))
    return ReversalResult(y_op, choice.w, fwd, rev, mode, bridge_fwd, choice.value, rr)


@dataclass(frozen=True)
class CorollaryResult:
    forward_opt: float
    reversed_opt: float
    forward: StrategyOptimum | None = field(default=None, compare=False)
    reversed: StrategyOptimum | None = field(default=None, compare=False)

    def __iter__(self):
        return iter((self.forward_opt, self.reversed_opt))

    @property
    def difference(self) -> float:
        return abs(self.forward_opt - self.reversed_opt)


def optimum_pair(h: HermitianOperator, rounds: RoundStructure,
                 opts: SolverOptions | None = None) -> CorollaryResult:
    """``max <H, X>`` over strategies and ``max <W H W^*, Y>`` over reversed strategies."""
    if h.layout != rounds.layout():
        h = permute_factors(h, rounds.layout().labels)
    fwd = optimal_strategy_value(h, rounds, opts)
    rev_rounds = rounds.reversed()
    rev = optimal_strategy_value(reverse_operator(h, rounds), rev_rounds, opts)
    return CorollaryResult(fwd.value, rev.value, fwd, rev)


def corollary_check(u: np.ndarray, rounds: RoundStructure, opts: SolverOptions | None = None) -> CorollaryResult:
    """Independent SDP optima for ``uu*`` forward and ``W uu* W*`` reversed."""
    lay = rounds.layout()
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size != lay.total_dim:
        raise LayoutError(f"vector of length {u.size} does not fit the strategy layout ({lay.total_dim})")
    return optimum_pair(HermitianOperator(np.outer(u, u.conj()), lay), rounds, opts)


def spectra_agree(a: np.ndarray, tol: float = 1e-10) -> float:
    """Largest gap between the sorted spectra of ``A^* A`` and ``conj(A) A^T`` (zero-padded)."""
    a = np.asarray(a, dtype=complex)
    s1 = np.sort(np.linalg.eigvalsh(a.conj().T @ a))[::-1]
    s2 = np.sort(np.linalg.eigvalsh(np.conj(a) @ a.T))[::-1]
    m = max(s1.size, s2.size)
    s1 = np.pad(s1, (0, m - s1.size))
    s2 = np.pad(s2, (0, m - s2.size))
    return float(np.abs(s1 - s2).max(initial=0.0))


def rounds_with_dims(x_dims: Sequence[int], y_dims: Sequence[int]) -> RoundStructure:
    return RoundStructure.from_dims(x_dims, y_dims)


__all__ = [
    "CorollaryResult", "MODES", "ReversalError", "ReversalResult", "WChoice", "build_A", "choose_w",
    "corollary_check", "optimum_pair", "reverse_operator", "reverse_strategy", "reverse_vector",
    "reversed_realization", "spectra_agree",
]
