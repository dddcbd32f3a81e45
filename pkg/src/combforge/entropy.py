"""Relative and conditional min-/max-entropies and related fidelity programs.

All entropies are in bits. Conditional entropies are computed by SDP:

* ``2^{-H_min(X|Y)} = max <rho, J>`` over Choi matrices ``J`` of channels
  ``Y -> X``; the constraint multiplier is the optimal ``Y`` of
  ``min Tr(Y) s.t. I_X (x) Y >= rho``.
* ``2^{H_max(X|Z)} = max <uu*, W>`` subject to ``Tr_R(W) = I_X (x) sigma``
  and ``Tr(sigma) = 1``, where ``u`` purifies ``rho`` into ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import Channel, transpose_channel
from .linalg import (
    PSD_TOL,
    HermitianOperator,
    Layout,
    LayoutError,
    apply_choi,
    eig_hermitian,
    fidelity,
    max_entangled_vector,
    partial_trace,
    permute_array,
    permute_factors,
    ptrace_array,
)
from .sdp.builders import StrategyOptimum, optimal_strategy_value, require_optimal
from .sdp.maps import DenseMap, FactorMap
from .sdp.problem import Block, SdpProblem, SdpSolution, SolverOptions, constraint
from .sdp.solver import solve
from .strategies import FEASIBILITY_TOL, RoundStructure, strategy_from_channels, validate_strategy

RANK_TOL = 1e-10
PURIFIER = "~purifier"
SIDE = "~side"
SUPPORT = "~support"


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else -math.inf


def _as_operator(m, layout: Layout | None = None) -> HermitianOperator:
    if isinstance(m, HermitianOperator):
        return m
    a = np.asarray(m, dtype=complex)
    if layout is None:
        layout = Layout((("A", a.shape[0]),))
    return HermitianOperator(a, layout)


# ---------------------------------------------------------------------------
# relative entropies
# ---------------------------------------------------------------------------


def d_max(p, q, rank_tol: float = RANK_TOL) -> float:
    """``log2 min{lam : P <= lam Q}``; ``inf`` when ``supp P`` is not inside ``supp Q``."""
    pd = _as_operator(p).data
    qd = _as_operator(q).data
    w, v = eig_hermitian(qd)
    scale = max(abs(w[0]) if w.size else 0.0, 1e-300)
    keep = w > rank_tol * scale
    vk = v[:, keep]
    off = v[:, ~keep]
    if off.size:
        leak = np.linalg.norm(off.conj().T @ pd @ off)
        if leak > rank_tol * max(np.linalg.norm(pd), 1e-300):
            return math.inf
    inv_sqrt = vk / np.sqrt(w[keep])
    m = inv_sqrt.conj().T @ pd @ inv_sqrt
    lam = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[-1]) if m.size else 0.0
    return _log2(lam)


def d_min(p, q) -> float:
    """``-log2 F(P, Q)^2``; ``inf`` for orthogonal supports."""
    f = fidelity(_as_operator(p).data, _as_operator(q).data)
    return -_log2(f * f)


# ---------------------------------------------------------------------------
# conditional entropies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyValue:
    """An entropy with the SDP optimum it came from and its certificate.

    Iterates as ``(value, certificate)``.
    """

    value: float
    optimum: float
    certificate: HermitianOperator
    solution: SdpSolution

    def __iter__(self):
        return iter((self.value, self.certificate))


def _split(layout: Layout, x_labels: Sequence[str]) -> tuple[Layout, Layout]:
    x_labels = list(x_labels)
    for lab in x_labels:
        layout.index(lab)
    return layout.select([lab for lab in layout.labels if lab in x_labels]), layout.without(x_labels)


def _check_state(rho: HermitianOperator, tol: float = 1e-9) -> None:
    w = np.linalg.eigvalsh(rho.data)
    if w.size and w[0] < -PSD_TOL * max(1.0, abs(w[-1])):
        raise ValueError(f"state has a negative eigenvalue {w[0]:.3e}")
    if abs(rho.trace() - 1.0) > tol:
        raise ValueError(f"state has trace {rho.trace():.12g}, expected 1")


def min_entropy_problem(rho: HermitianOperator, x_labels: Sequence[str]) -> SdpProblem:
    """``max <rho, J>`` s.t. ``Tr_X(J) = I`` on the remaining factors."""
    lay = rho.layout
    xl, yl = _split(lay, x_labels)
    cons = [constraint("marginal", [("choi", FactorMap(lay, {lab: None for lab in xl.labels}))], 1.0, yl)]
    init = {"choi": np.eye(lay.total_dim) / xl.total_dim}
    return SdpProblem((Block("choi", lay),), tuple(cons), {"choi": rho.data}, initial=init, name="min-entropy")


def h_min(rho: HermitianOperator, x_labels: Sequence[str] = ("X",),
          opts: SolverOptions | None = None, state_tol: float = 1e-9) -> EntropyValue:
    """``H_min(X|Y)`` of ``rho``; every factor not in ``x_labels`` is conditioned on.

    The certificate is the optimal ``Y`` with ``I_X (x) Y >= rho``.
    """
    _check_state(rho, state_tol)
    sol = require_optimal(solve(min_entropy_problem(rho, x_labels), opts), "min-entropy SDP")
    opt = sol.primal_value
    return EntropyValue(-_log2(opt), opt, sol.multiplier("marginal"), sol)


def purification(rho: HermitianOperator, label: str = PURIFIER,
                 rank_tol: float = RANK_TOL) -> tuple[np.ndarray, Layout]:
    """Vector on ``rho.layout + (label, rank)`` whose marginal is ``rho``."""
    w, v = eig_hermitian(rho.data)
    keep = w > rank_tol * max(abs(w[0]) if w.size else 0.0, 1e-300)
    r = max(int(keep.sum()), 1)
    coeff = np.zeros((rho.layout.total_dim, r), dtype=complex)
    if keep.any():
        coeff[:, :keep.sum()] = v[:, keep] * np.sqrt(w[keep])
    return coeff.reshape(-1), rho.layout + Layout(((label, r),))


def max_entropy_problem(rho: HermitianOperator, x_labels: Sequence[str]) -> SdpProblem:
    """``max <uu*, W>`` s.t. ``Tr_R(W) = I_X (x) sigma``, ``Tr(sigma) = 1``."""
    lay = rho.layout
    xl, zl = _split(lay, x_labels)
    u, ulay = purification(rho)
    r = ulay.dim(PURIFIER)
    blocks = (Block("lift", ulay), Block("sigma", zl))
    cons = (
        constraint("marginal", [("lift", FactorMap(ulay, {PURIFIER: None})),
                                ("sigma", FactorMap(zl, extra=xl, out_order=lay.labels, coef=-1.0))], 0.0, lay),
        constraint("normalization", [("sigma", FactorMap(zl, {lab: None for lab in zl.labels}))], 1.0, Layout()),
    )
    init = {"lift": np.eye(ulay.total_dim) / (zl.total_dim * r), "sigma": np.eye(zl.total_dim) / zl.total_dim}
    return SdpProblem(blocks, cons, {"lift": np.outer(u, u.conj())}, initial=init, name="max-entropy")


def h_max(rho: HermitianOperator, x_labels: Sequence[str] = ("X",),
          opts: SolverOptions | None = None, state_tol: float = 1e-9) -> EntropyValue:
    """``H_max(X|Z)`` of ``rho``; the certificate is the optimal ``sigma`` on ``Z``."""
    _check_state(rho, state_tol)
    sol = require_optimal(solve(max_entropy_problem(rho, x_labels), opts), "max-entropy SDP")
    opt = sol.primal_value
    return EntropyValue(_log2(opt), opt, sol.block("sigma"), sol)


def max_entropy_fidelity(rho: HermitianOperator, sigma: HermitianOperator, x_labels: Sequence[str]) -> float:
    """``F(rho, I_X (x) sigma)^2``, the quantity ``2^{H_max}`` maximizes over ``sigma``."""
    xl, zl = _split(rho.layout, x_labels)
    big = np.kron(sigma.data, np.eye(xl.total_dim))
    op = HermitianOperator(big, zl + xl)
    op = permute_factors(op, rho.layout.labels)
    f = fidelity(rho.data, op.data)
    return f * f


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyReport:
    h_min: float
    h_max: float
    identity_residual: float
    certificates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .io import matrix_to_json

        return {
            "h_min": self.h_min,
            "h_max": self.h_max,
            "identity_residual": self.identity_residual,
            "certificates": {k: (matrix_to_json(v) if isinstance(v, HermitianOperator) else v)
                             for k, v in self.certificates.items()},
        }


def tripartite_layout(dx: int, dy: int, dz: int) -> Layout:
    return Layout((("X", dx), ("Y", dy), ("Z", dz)))


def pure_state(u: np.ndarray, layout: Layout) -> HermitianOperator:
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size != layout.total_dim:
        raise LayoutError(f"vector of length {u.size} does not fit layout of dimension {layout.total_dim}")
    return HermitianOperator(np.outer(u, u.conj()), layout)


def verify_min_max_identity(u: np.ndarray, layout: Layout, x: Sequence[str] = ("X",),
                            y: Sequence[str] = ("Y",), opts: SolverOptions | None = None) -> EntropyReport:
    """``H_min(X|Y)`` of ``Tr_Z uu*`` against ``H_max(X|Z)`` of ``Tr_Y uu*``.

    Every factor of ``layout`` outside ``x`` and ``y`` belongs to ``Z``.
    """
    full = pure_state(u, layout)
    z = [lab for lab in layout.labels if lab not in set(x) | set(y)]
    rho_xy = partial_trace(full, z)
    rho_xz = partial_trace(full, y)
    lo = h_min(rho_xy, x, opts)
    hi = h_max(rho_xz, x, opts)
    certs = {
        "h_min_dual": lo.certificate,
        "h_max_sigma": hi.certificate,
        "h_min_gap": lo.solution.gap,
        "h_max_gap": hi.solution.gap,
        "h_max_fidelity_check": max_entropy_fidelity(rho_xz, hi.certificate, x),
    }
    return EntropyReport(lo.value, hi.value, abs(lo.value + hi.value), certs)


def channel_fidelity_problem(p: HermitianOperator, in_labels: Sequence[str], out_labels: Sequence[str],
                             rank_tol: float = RANK_TOL) -> SdpProblem:
    """``max F(P, J(Phi) (x) I)`` over channels ``Phi: in -> out`` as an SDP.

    Uses ``F(A, B) = max Re Tr(L)`` over ``[[A, L], [L^*, B]] >= 0``, with ``A``
    compressed to the support of ``P`` (``B`` compressed alike).
    """
    lay = p.layout
    il, ol = lay.select(in_labels), lay.select(out_labels)
    jl = ol + il
    rest = lay.without(list(in_labels) + list(out_labels))
    w, v = eig_hermitian(p.data)
    keep = w > rank_tol * max(abs(w[0]) if w.size else 0.0, 1e-300)
    r = max(int(keep.sum()), 1)
    vk = v[:, :r] if keep.any() else v[:, :1]
    pk = np.diag(np.where(keep[:r], w[:r], 0.0)).astype(complex)
    glay = Layout(((SIDE, 2), (SUPPORT, r)))
    slay = Layout(((SUPPORT, r),))
    e0, e1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    nj = jl.total_dim
    units = np.eye(nj * nj, dtype=complex).reshape(-1, nj, nj)
    lifted = FactorMap(jl, extra=rest, out_order=lay.labels).apply(units)
    compressed = vk.conj().T @ lifted @ vk
    mat = -compressed.reshape(nj * nj, r * r).T
    cons = (
        constraint("upper", [("block", FactorMap(glay, {SIDE: e0}))], pk, slay),
        constraint("lower", [("block", FactorMap(glay, {SIDE: e1})), ("choi", DenseMap(mat, nj, r))], 0.0, slay),
        constraint("channel", [("choi", FactorMap(jl, {lab: None for lab in ol.labels}))], 1.0, il),
    )
    objective = {"block": np.kron(np.array([[0.0, 0.5], [0.5, 0.0]]), np.eye(r))}
    j0 = np.eye(nj) / ol.total_dim
    b0 = (vk.conj().T @ FactorMap(jl, extra=rest, out_order=lay.labels).apply(j0) @ vk)
    init = {"choi": j0, "block": np.block([[pk + 1e-3 * np.trace(pk).real / r * np.eye(r), np.zeros((r, r))],
                                            [np.zeros((r, r)), b0]])}
    return SdpProblem((Block("block", glay), Block("choi", jl)), cons, objective, initial=init,
                      name="channel-fidelity")


def max_channel_fidelity(p: HermitianOperator, in_labels: Sequence[str], out_labels: Sequence[str],
                         opts: SolverOptions | None = None) -> tuple[float, SdpSolution]:
    """``max_Phi F(P, J(Phi) (x) I_rest)`` and the solution holding the optimal ``J(Phi)``."""
    if np.abs(p.data).max(initial=0.0) == 0.0:
        return 0.0, None
    sol = require_optimal(solve(channel_fidelity_problem(p, in_labels, out_labels), opts), "fidelity SDP")
    return sol.primal_value, sol


@dataclass(frozen=True)
class FourMessageValues:
    lhs: float
    rhs: float
    strategy_opt_forward: float
    strategy_opt_reversed: float
    solutions: dict = field(default_factory=dict, compare=False)

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.strategy_opt_forward, self.strategy_opt_reversed))


def four_message_layout(dx: int, dy: int, dz: int, dw: int) -> Layout:
    return Layout((("X", dx), ("Y", dy), ("Z", dz), ("W", dw)))


def four_message_rounds(layout: Layout, labels: Sequence[str] = ("X", "Y", "Z", "W")) -> RoundStructure:
    """Round 1 reads ``Y`` and emits ``X``; round 2 reads ``Z`` and emits ``W``."""
    x, y, z, w = labels
    return RoundStructure(((y, layout.dim(y), x, layout.dim(x)), (z, layout.dim(z), w, layout.dim(w))))


def four_message_values(u: np.ndarray, layout: Layout, labels: Sequence[str] = ("X", "Y", "Z", "W"),
                        opts: SolverOptions | None = None) -> FourMessageValues:
    """Both sides of the four-message fidelity identity and the two strategy optima.

    ``lhs = max_{Phi: Y->X} F(Tr_W uu*, J(Phi) (x) I_Z)`` and
    ``rhs = max_{Psi: W->Z} F(Tr_Y uu*, I_X (x) J(Psi))``. The forward strategy
    optimum is ``max <uu*, X>`` over the two-round strategies of
    :func:`four_message_rounds`, the reversed one the same over reversed rounds.
    """
    x, y, z, w = labels
    full = pure_state(u, layout)
    lhs, s1 = max_channel_fidelity(partial_trace(full, [w]), [y], [x], opts)
    rhs, s2 = max_channel_fidelity(partial_trace(full, [y]), [w], [z], opts)
    rounds = four_message_rounds(layout, labels)
    fwd = optimal_strategy_value(permute_factors(full, rounds.layout().labels), rounds, opts)
    rev_rounds = rounds.reversed()
    rev = optimal_strategy_value(permute_factors(full, rev_rounds.layout().labels), rev_rounds, opts)
    return FourMessageValues(lhs, rhs, fwd.value, rev.value,
                             {"lhs": s1, "rhs": s2, "forward": fwd.solution, "reversed": rev.solution})


# ---------------------------------------------------------------------------
# quantum correlation and channel transposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantumCorrelation:
    value: float
    squared_fidelity: float
    optimum: StrategyOptimum


def quantum_correlation(rho: HermitianOperator, rounds: RoundStructure,
                        opts: SolverOptions | None = None) -> QuantumCorrelation:
    """Strategy optimum with ``rho`` as objective and its squared-fidelity reading.

    The value is ``dim(Y_1..Y_n)`` times the largest squared fidelity between
    the maximally entangled state and ``rho`` processed by a strategy.
    """
    if rho.layout != rounds.layout():
        rho = permute_factors(rho, rounds.layout().labels)
    opt = optimal_strategy_value(rho, rounds, opts)
    py = float(np.prod(rounds.y_dims))
    sq = opt.value / py
    if sq > 1 + 1e-9:
        raise ValueError(f"squared fidelity {sq:.12g} exceeds 1")
    return QuantumCorrelation(opt.value, min(max(sq, 0.0), 1.0), opt)


def _ref(label: str) -> str:
    return f"{label}~kept"


def reversed_order_operator(phis: Sequence[Channel], rounds: RoundStructure) -> HermitianOperator:
    """``(I (x) Psi_1 o ... o Psi_n)(vec(I_Y) vec(I_Y)^*)`` with ``Psi_k`` the transpose of ``Phi_k``.

    The maps act on the second copy of ``Y_1..Y_n``, last round first. Memory
    registers entering the last transposed map must be trivial.
    """
    if len(phis) != rounds.n:
        raise ValueError(f"{len(phis)} channels for {rounds.n} rounds")
    yl = rounds.y_layout()
    kept = yl.relabel({lab: _ref(lab) for lab in yl.labels})
    v = max_entangled_vector(yl.total_dim)
    state, layout = np.outer(v, v.conj()), kept + yl
    for phi in reversed(phis):
        psi = transpose_channel(phi)
        state, layout = apply_choi(psi.choi.data, psi.input_layout, psi.output_layout, state, layout)
    keep = set(kept.labels) | set(rounds.x_labels)
    extra = [i for i, lab in enumerate(layout.labels) if lab not in keep]
    if any(layout.dims[i] != 1 for i in extra):
        raise LayoutError("initial memory of the forward channels must be trivial")
    if extra:
        state = ptrace_array(state, layout.dims, extra)
        layout = layout.without([layout.labels[i] for i in extra])
    layout = layout.relabel({_ref(lab): lab for lab in yl.labels})
    target = rounds.layout()
    data = permute_array(state, layout.dims, [layout.index(lab) for lab in target.labels])
    return HermitianOperator(data, target, tol=1e-10 * max(1.0, np.abs(data).max()))


@dataclass(frozen=True)
class EquivalenceCheck:
    equal: bool
    agreement: float
    forward: HermitianOperator
    reversed_order: HermitianOperator

    def __bool__(self) -> bool:
        return self.equal


def statement_equivalence(phis: Sequence[Channel], rounds: RoundStructure,
                          tol: float = 1e-8) -> EquivalenceCheck:
    """Compare the forward-channel strategy with the reversed-order transposed construction."""
    fwd = strategy_from_channels(phis, rounds, tol=math.inf).op
    rev = reversed_order_operator(phis, rounds)
    agreement = float(np.linalg.norm(fwd.data - rev.data) / max(np.linalg.norm(fwd.data), 1e-300))
    try:
        validate_strategy(fwd, rounds, FEASIBILITY_TOL)
        valid = True
    except ValueError:
        valid = False
    return EquivalenceCheck(valid and agreement <= tol, agreement, fwd, rev)


def verify_statement_equivalence(phis: Sequence[Channel], rounds: RoundStructure, tol: float = 1e-8) -> bool:
    """True iff both constructions agree within ``tol`` and the result is a valid strategy."""
    return statement_equivalence(phis, rounds, tol).equal


__all__ = [
    "EntropyReport", "EntropyValue", "EquivalenceCheck", "FourMessageValues", "QuantumCorrelation",
    "channel_fidelity_problem", "d_max", "d_min", "four_message_layout", "four_message_rounds",
    "four_message_values", "h_max", "h_min", "max_channel_fidelity", "max_entropy_fidelity",
    "max_entropy_problem", "min_entropy_problem", "pure_state", "purification", "quantum_correlation",
    "reversed_order_operator", "statement_equivalence", "tripartite_layout", "verify_min_max_identity",
    "verify_statement_equivalence",
]
