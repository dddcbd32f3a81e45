"""Strategy operators (quantum combs) for n-turn interactions.

In round ``k`` the strategy receives register ``X_k`` and returns ``Y_k``.
A strategy operator lives on ``Y_1..Y_n, X_1..X_n`` and is the Choi matrix of
the channel the whole interaction implements. It is valid iff it is PSD and
there are operators ``X_{n-1}, ..., X_1`` with

    Tr_{Y_k}(X_k) = X_{k-1} (x) I_{X_k},    Tr_{Y_1}(X_1) = I_{X_1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import Channel, random_channel
from .linalg import (
    PSD_TOL,
    HermitianOperator,
    Layout,
    LayoutError,
    apply_choi,
    apply_operator_to_vector,
    check_psd,
    complete_isometry,
    eig_hermitian,
    max_entangled_vector,
    permute_array,
    permute_vector,
    ptrace_array,
)

FEASIBILITY_TOL = 1e-8
UNITARY_TOL = 1e-10
RANK_TOL = 1e-10


class StrategyError(ValueError):
    """A strategy constraint fails; ``round`` is the offending k (1-based)."""

    def __init__(self, message: str, round_index: int | None = None, residual: float | None = None):
        super().__init__(message)
        self.round_index = round_index
        self.residual = residual


class RealizationError(ValueError):
    """The purification-connecting step of a realization is numerically unreliable."""


@dataclass(frozen=True)
class RoundStructure:
    """Registers exchanged per round: ``(x_label, x_dim, y_label, y_dim)``."""

    rounds: tuple[tuple[str, int, str, int], ...]

    def __post_init__(self):
        rows = tuple((str(a), int(b), str(c), int(d)) for a, b, c, d in self.rounds)
        if not rows:
            raise ValueError("a strategy needs at least one round")
        labels = [r[0] for r in rows] + [r[2] for r in rows]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"round labels are not distinct: {labels}")
        if min(min(r[1], r[3]) for r in rows) < 1:
            raise LayoutError("register dimensions must be positive")
        object.__setattr__(self, "rounds", rows)

    @classmethod
    def from_dims(cls, x_dims: Sequence[int], y_dims: Sequence[int],
                  x_prefix: str = "X", y_prefix: str = "Y") -> "RoundStructure":
        if len(x_dims) != len(y_dims):
            raise ValueError("x_dims and y_dims differ in length")
        return cls(tuple((f"{x_prefix}{k + 1}", x, f"{y_prefix}{k + 1}", y)
                         for k, (x, y) in enumerate(zip(x_dims, y_dims))))

    @property
    def n(self) -> int:
        return len(self.rounds)

    @property
    def x_labels(self) -> tuple[str, ...]:
        return tuple(r[0] for r in self.rounds)

    @property
    def y_labels(self) -> tuple[str, ...]:
        return tuple(r[2] for r in self.rounds)

    @property
    def x_dims(self) -> tuple[int, ...]:
        return tuple(r[1] for r in self.rounds)

    @property
    def y_dims(self) -> tuple[int, ...]:
        return tuple(r[3] for r in self.rounds)

    def x_layout(self, k: int | None = None) -> Layout:
        """Inputs of rounds ``1..k`` (all rounds when ``k`` is None)."""
        k = self.n if k is None else k
        return Layout(tuple((r[0], r[1]) for r in self.rounds[:k]))

    def y_layout(self, k: int | None = None) -> Layout:
        k = self.n if k is None else k
        return Layout(tuple((r[2], r[3]) for r in self.rounds[:k]))

    def layout(self, k: int | None = None) -> Layout:
        """``Y_1..Y_k, X_1..X_k``: the space of the k-th hierarchy operator."""
        return self.y_layout(k) + self.x_layout(k)

    def reversed(self) -> "RoundStructure":
        """Time-reversed rounds: round ``j`` inputs ``Y_{n+1-j}`` and outputs ``X_{n+1-j}``."""
        return RoundStructure(tuple((y, yd, x, xd) for x, xd, y, yd in self.rounds[::-1]))

    def to_list(self) -> list:
        return [list(r) for r in self.rounds]

    @classmethod
    def from_list(cls, items) -> "RoundStructure":
        return cls(tuple(tuple(r) for r in items))


@dataclass(frozen=True)
class StrategyOperator:
    op: HermitianOperator
    rounds: RoundStructure
    hierarchy: tuple[HermitianOperator, ...] = ()
    residual: float = 0.0

    @property
    def layout(self) -> Layout:
        return self.op.layout

    def level(self, k: int) -> HermitianOperator:
        """``X_k`` for ``k = 1..n``."""
        if k == self.rounds.n:
            return self.op
        return self.hierarchy[k - 1]


@dataclass(frozen=True)
class UnitaryRealization:
    """Initial memory vector ``v`` and unitaries ``U_k: Z_{k-1} X_k -> Y_k Z_k``.

    ``U_k`` has rows indexed by ``(y, z_k)`` and columns by ``(z_{k-1}, x)``.
    The strategy is recovered by feeding halves of ``vec(I)`` through the
    unitaries and discarding ``Z_n``.
    """

    v: np.ndarray
    memory_dims: tuple[int, ...]
    unitaries: tuple[np.ndarray, ...]
    rounds: RoundStructure

    def __post_init__(self):
        n = self.rounds.n
        z = tuple(int(d) for d in self.memory_dims)
        object.__setattr__(self, "memory_dims", z)
        if len(z) != n + 1 or len(self.unitaries) != n:
            raise LayoutError("need n+1 memory dimensions and n unitaries")
        if self.v.shape != (z[0],):
            raise LayoutError(f"initial vector has shape {self.v.shape}, expected ({z[0]},)")
        if abs(np.linalg.norm(self.v) - 1.0) > 1e-12:
            raise ValueError("initial vector is not a unit vector")
        for k, u in enumerate(self.unitaries):
            x, y = self.rounds.x_dims[k], self.rounds.y_dims[k]
            if z[k] * x != z[k + 1] * y:
                raise LayoutError(f"dimension chain breaks at round {k + 1}")
            if u.shape != (z[k + 1] * y, z[k] * x):
                raise LayoutError(f"U_{k + 1} has shape {u.shape}")
            err = np.abs(u.conj().T @ u - np.eye(u.shape[1])).max()
            if err > UNITARY_TOL:
                raise ValueError(f"U_{k + 1} is not unitary (residual {err:.3e})")


# ---------------------------------------------------------------------------
# validation and construction
# ---------------------------------------------------------------------------


def _rel_norm(a: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(a) / max(np.linalg.norm(ref), 1e-300))


def validate_strategy(op: HermitianOperator, rounds: RoundStructure,
                      tol: float = FEASIBILITY_TOL, psd_tol: float = PSD_TOL) -> StrategyOperator:
    """Check the marginal hierarchy and return the validated strategy.

    ``X_{k-1}`` is recovered as ``Tr_{Y_k, X_k}(X_k) / x_k``. Raises
    :class:`StrategyError` naming the first failing round.
    """
    layout = rounds.layout()
    if op.layout != layout:
        raise LayoutError(f"operator layout {op.layout.labels} != strategy layout {layout.labels}")
    check_psd(op, psd_tol)
    n = rounds.n
    cur = op.data
    levels = []
    worst = 0.0
    for k in range(n, 0, -1):
        lay = rounds.layout(k)
        dims = lay.dims
        yk = lay.index(rounds.y_labels[k - 1])
        xk = lay.index(rounds.x_labels[k - 1])
        red = ptrace_array(cur, dims, [yk])
        xd = rounds.x_dims[k - 1]
        if k > 1:
            prev = ptrace_array(cur, dims, [yk, xk]) / xd
            target = np.kron(prev, np.eye(xd))
        else:
            prev = None
            target = np.eye(xd)
        res = _rel_norm(red - target, cur)
        worst = max(worst, res)
        if res > tol:
            raise StrategyError(f"round {k}: partial-trace constraint residual {res:.3e} exceeds {tol:.1e}",
                                k, res)
        if prev is not None:
            levels.append(HermitianOperator(prev, rounds.layout(k - 1), tol=1e-9 * max(1.0, np.abs(prev).max())))
            cur = levels[-1].data
    return StrategyOperator(op, rounds, tuple(reversed(levels)), worst)


def strategy_value(s: StrategyOperator, h: HermitianOperator) -> float:
    """``<H, X_n>``."""
    if h.layout != s.layout:
        raise LayoutError("objective and strategy layouts differ")
    return float(np.vdot(h.data, s.op.data).real)


def _ref(label: str) -> str:
    return f"{label}~ref"


def strategy_from_channels(phis: Sequence[Channel], rounds: RoundStructure,
                           tol: float = FEASIBILITY_TOL) -> StrategyOperator:
    """Choi matrix of the interaction ``Phi_n o ... o Phi_1`` with memory passed between rounds.

    ``phis[k]`` must read the round's input label (plus memory labels produced
    by earlier channels) and emit the round's output label plus new memory.
    Memory left over after the last round is discarded.
    """
    if len(phis) != rounds.n:
        raise ValueError(f"{len(phis)} channels for {rounds.n} rounds")
    xl = rounds.x_layout()
    refs = {lab: _ref(lab) for lab in xl.labels}
    v = max_entangled_vector(xl.total_dim)
    state = np.outer(v, v.conj())
    layout = xl + xl.relabel(refs)
    for k, phi in enumerate(phis):
        x, xd, y, yd = rounds.rounds[k]
        if phi.input_layout.dims and x not in phi.input_layout:
            raise LayoutError(f"channel {k + 1} does not read {x!r}")
        if x in phi.input_layout and phi.input_layout.dim(x) != xd:
            raise LayoutError(f"channel {k + 1}: {x!r} has the wrong dimension")
        if y not in phi.output_layout or phi.output_layout.dim(y) != yd:
            raise LayoutError(f"channel {k + 1} does not emit {y!r} of dimension {yd}")
        later = set(rounds.x_labels[k + 1:])
        if later & set(phi.input_layout.labels):
            raise LayoutError(f"channel {k + 1} reads a later input")
        state, layout = apply_choi(phi.choi.data, phi.input_layout, phi.output_layout, state, layout)
    keep = set(rounds.y_labels) | set(refs.values())
    leftover = [i for i, lab in enumerate(layout.labels) if lab not in keep]
    if leftover:
        state = ptrace_array(state, layout.dims, leftover)
        layout = layout.without([layout.labels[i] for i in leftover])
    back = {r: lab for lab, r in refs.items()}
    layout = layout.relabel(back)
    target = rounds.layout()
    perm = [layout.index(lab) for lab in target.labels]
    data = permute_array(state, layout.dims, perm)
    op = HermitianOperator(data, target, tol=1e-10 * max(1.0, np.abs(data).max()))
    return validate_strategy(op, rounds, tol)


def memory_label(k: int) -> str:
    return f"Z{k}~mem"


def random_strategy(rounds: RoundStructure, memory_dims: Sequence[int], rng: np.random.Generator,
                    env_dim: int | None = None) -> StrategyOperator:
    """Random strategy from random channels.

    ``memory_dims`` gives ``z_1..z_{n-1}``. ``env_dim`` is the Kraus rank of
    each channel (raised where a channel needs more to be trace preserving);
    by default each channel has full Kraus rank.
    """
    n = rounds.n
    if len(memory_dims) != n - 1:
        raise ValueError(f"need {n - 1} memory dimensions")
    z = [1] + list(memory_dims) + [1]
    phis = []
    for k in range(n):
        x, xd, y, yd = rounds.rounds[k]
        inp = Layout(((memory_label(k), z[k]), (x, xd)))
        out = Layout(((y, yd), (memory_label(k + 1), z[k + 1])))
        need = -(-inp.total_dim // out.total_dim)
        e = inp.total_dim * out.total_dim if env_dim is None else max(env_dim, need)
        phis.append(random_channel(inp, out, e, rng))
    return strategy_from_channels(phis, rounds)


# ---------------------------------------------------------------------------
# unitary realizations
# ---------------------------------------------------------------------------


def realization_memory_dims(rounds: RoundStructure) -> tuple[int, ...]:
    """``z_k = (prod y) (prod_{i>k} y_i) (prod_{i<=k} x_i)`` for ``k = 0..n``."""
    py = int(np.prod(rounds.y_dims))
    out = []
    for k in range(rounds.n + 1):
        out.append(py * int(np.prod(rounds.y_dims[k:])) * int(np.prod(rounds.x_dims[:k])))
    return tuple(out)


def _polar_isometry(b: np.ndarray) -> np.ndarray:
    """Polar factor of ``b``: the isometry agreeing with a partial isometry on its support."""
    u, _, vh = np.linalg.svd(b, full_matrices=True)
    return u[:, :b.shape[1]] @ vh


def _truncated_sqrt(m: np.ndarray, rank_tol: float) -> np.ndarray:
    """PSD square root with eigenvalues below ``rank_tol * lambda_max`` set to zero."""
    w, v = eig_hermitian(m)
    top = w[0] if w.size else 0.0
    w = np.where(w > rank_tol * top, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def unitary_realization(s: StrategyOperator, rank_tol: float = RANK_TOL) -> UnitaryRealization:
    """Pure memory plus one unitary per round implementing ``s``.

    Each level ``X_k`` is purified as ``vec(X_k^{1/2})`` with a reference
    register ``R_k``. The purifications of ``X_{k-1} (x) vec(I_{X_k})`` and
    ``X_k`` agree on ``Y_{<k} X_{<=k}``, so an isometry ``R_{k-1} X_k -> Y_k R_k``
    maps one to the other. ``R_k`` sits in the first basis states of ``Z_k``.
    """
    rounds = s.rounds
    n = rounds.n
    if n > 1 and len(s.hierarchy) != n - 1:
        raise ValueError("strategy has no marginal hierarchy")
    z = realization_memory_dims(rounds)
    xs, ys = rounds.x_dims, rounds.y_dims
    prev = np.ones((1, 1), dtype=complex)  # X_0^{1/2}, rows Y_<k X_<k, cols R_{k-1}
    unitaries = []
    for k in range(1, n + 1):
        xk, yk = xs[k - 1], ys[k - 1]
        sk = _truncated_sqrt(s.level(k).data, rank_tol)
        ya = int(np.prod(ys[:k - 1]))
        xa = int(np.prod(xs[:k - 1]))
        r_prev, r_k = prev.shape[1], sk.shape[1]
        # M_F rows (Y<, X<, X_k), cols (R_{k-1}, X_k phys)
        m_f = np.kron(prev, np.eye(xk))
        # M_G rows (Y<, X<, X_k), cols (Y_k, R_k)
        m_g = sk.reshape(ya, yk, xa, xk, r_k).transpose(0, 2, 3, 1, 4).reshape(ya * xa * xk, yk * r_k)
        uf, sf, vfh = np.linalg.svd(m_f, full_matrices=False)
        keep = int(np.sum(sf > rank_tol * (sf[0] if sf.size else 0.0)))
        if keep < sf.size and keep > 0 and sf[keep] > 1e-3 * sf[keep - 1]:
            raise RealizationError(f"round {k}: no clear singular-value gap ({sf[keep - 1]:.3e} vs {sf[keep]:.3e})")
        pinv_f = (vfh[:keep].conj().T / sf[:keep]) @ uf[:, :keep].conj().T
        b = (pinv_f @ m_g).T  # (Y_k R_k) x (R_{k-1} X_k)
        b = _polar_isometry(b)
        cols = np.zeros((yk, z[k], r_prev, xk), dtype=complex)
        cols[:, :r_k] = b.reshape(yk, r_k, r_prev, xk)
        cols = cols.reshape(yk * z[k], r_prev * xk)
        u = complete_isometry(cols)
        # leading columns are (z < r_prev, x); they occupy the first r_prev*xk slots
        unitaries.append(u)
        prev = sk
    v = np.zeros(z[0], dtype=complex)
    v[0] = 1.0
    return UnitaryRealization(v, z, tuple(unitaries), rounds)


def recompose_realization(r: UnitaryRealization, tol: float = FEASIBILITY_TOL) -> StrategyOperator:
    """Choi matrix of the channel ``Z -> Tr_{Z_n}(U (v v^* (x) Z) U^*)``."""
    rounds = r.rounds
    z = r.memory_dims
    xl = rounds.x_layout()
    refs = xl.relabel({lab: _ref(lab) for lab in xl.labels})
    psi = np.kron(r.v, max_entangled_vector(xl.total_dim))
    layout = Layout((("Z~0", z[0]),)) + xl + refs
    for k, u in enumerate(r.unitaries):
        x, xd, y, yd = rounds.rounds[k]
        inp = Layout(((f"Z~{k}", z[k]), (x, xd)))
        out = Layout(((y, yd), (f"Z~{k + 1}", z[k + 1])))
        psi, layout = apply_operator_to_vector(u, inp, out, psi, layout)
    order = list(rounds.y_labels) + list(refs.labels) + [f"Z~{rounds.n}"]
    psi = permute_vector(psi, layout.dims, [layout.index(lab) for lab in order])
    m = psi.reshape(-1, z[-1])
    data = m @ m.conj().T
    op = HermitianOperator(data, rounds.layout(), tol=1e-10 * max(1.0, np.abs(data).max()))
    return validate_strategy(op, rounds, tol)


# ---------------------------------------------------------------------------
# interactions with a second party
# ---------------------------------------------------------------------------


def _check_effect(effect: HermitianOperator, tol: float = 1e-9) -> None:
    w = np.linalg.eigvalsh(effect.data)
    if w.size and (w.min() < -tol or w.max() > 1 + tol):
        raise ValueError(f"effect is not between 0 and I (spectrum {w.min():.3e}..{w.max():.3e})")


def _check_protocol(alice_count: int, bob: Sequence[Channel], rounds: RoundStructure) -> None:
    if alice_count != rounds.n:
        raise ValueError(f"{alice_count} strategy channels for {rounds.n} rounds")
    if len(bob) != rounds.n + 1:
        raise ValueError(f"need {rounds.n + 1} channels for the other party, got {len(bob)}")
    for k, psi in enumerate(bob):
        if k < rounds.n:
            x, xd = rounds.rounds[k][0], rounds.rounds[k][1]
            if x not in psi.output_layout or psi.output_layout.dim(x) != xd:
                raise LayoutError(f"channel {k + 1} of the other party does not emit {x!r}")
        if k > 0:
            y, yd = rounds.rounds[k - 1][2], rounds.rounds[k - 1][3]
            if y not in psi.input_layout or psi.input_layout.dim(y) != yd:
                raise LayoutError(f"channel {k + 1} of the other party does not read {y!r}")


def run_interaction(alice_maps: Sequence[tuple[np.ndarray, Layout, Layout]], bob: Sequence[Channel],
                    effect: HermitianOperator) -> complex:
    """Sequential evolution ``Psi_1, Phi_1, Psi_2, ..., Phi_n, Psi_{n+1}`` then ``Tr(Q rho)``.

    ``alice_maps`` are ``(choi, input_layout, output_layout)`` triples of arbitrary
    linear maps, so the result is the multilinear extension of the outcome
    probability. Memory not measured by ``effect`` is discarded.
    """
    state = np.ones((1, 1), dtype=complex)
    layout = Layout()
    seq = []
    for k, psi in enumerate(bob):
        seq.append((psi.choi.data, psi.input_layout, psi.output_layout))
        if k < len(alice_maps):
            seq.append(alice_maps[k])
    for choi, inp, out in seq:
        state, layout = apply_choi(choi, inp, out, state, layout)
    elay = effect.layout
    for lab in elay.labels:
        if lab not in layout:
            raise LayoutError(f"effect acts on {lab!r}, which is not produced")
    drop = [i for i, lab in enumerate(layout.labels) if lab not in elay]
    if drop:
        state = ptrace_array(state, layout.dims, drop)
        layout = layout.without([layout.labels[i] for i in drop])
    perm = [layout.index(lab) for lab in elay.labels]
    state = permute_array(state, layout.dims, perm)
    return complex(np.sum(effect.data.T * state))


def simulate_interaction(alice: Sequence[Channel], bob: Sequence[Channel], effect: HermitianOperator,
                         rounds: RoundStructure) -> float:
    """Probability that the other party's final measurement yields ``effect``."""
    _check_protocol(len(alice), bob, rounds)
    _check_effect(effect)
    p = run_interaction([(c.choi.data, c.input_layout, c.output_layout) for c in alice], bob, effect)
    return float(p.real)


def co_strategy_functional(bob: Sequence[Channel], effect: HermitianOperator,
                           rounds: RoundStructure) -> HermitianOperator:
    """Operator ``P`` with ``<P, X> = simulate_interaction(alice, bob, effect)``.

    The interaction is linear in the strategy operator, so ``P`` is fixed by
    its values on the matrix units ``E_ij`` of the strategy space:
    ``P_ij = conj(f(E_ij))``. A matrix unit factors into one unit per round,
    which a memoryless (not necessarily CP) map realizes. All units are
    evaluated at once by leaving the strategy's register indices open in the
    contraction of the other party's Choi matrices.
    """
    _check_protocol(rounds.n, bob, rounds)
    _check_effect(effect)
    ids: dict[tuple[str, int, str], int] = {}
    version: dict[str, int] = {}

    def idx(label: str, side: str, ver: int | None = None) -> int:
        key = (label, version.get(label, 0) if ver is None else ver, side)
        if key not in ids:
            ids[key] = len(ids)
        return ids[key]

    operands = []
    # (label, version, dim) of every register a channel emits and nobody reads
    unread: dict[tuple[str, int], int] = {}
    for psi in bob:
        inp, outp = psi.input_layout, psi.output_layout
        in_ids = [idx(lab, s) for s in ("r", "c") for lab in inp.labels]
        for lab in inp.labels:
            unread.pop((lab, version.get(lab, 0)), None)
        for lab in outp.labels:
            version[lab] = version.get(lab, 0) + 1
            unread[(lab, version[lab])] = outp.dim(lab)
        out_r = [idx(lab, "r") for lab in outp.labels]
        out_c = [idx(lab, "c") for lab in outp.labels]
        ni = len(inp)
        lay = outp + inp
        operands += [psi.choi.data.reshape(lay.dims + lay.dims),
                     out_r + in_ids[:ni] + out_c + in_ids[ni:]]
    elay = effect.layout
    for lab in elay.labels:
        if (lab, version.get(lab, 0)) not in unread:
            raise LayoutError(f"effect acts on {lab!r}, which is not an unread output")
        unread.pop((lab, version[lab]))
    # Tr(Q rho) = sum Q[a, b] rho[b, a]
    operands += [effect.data.reshape(elay.dims + elay.dims),
                 [idx(lab, "c") for lab in elay.labels] + [idx(lab, "r") for lab in elay.labels]]
    xs = set(rounds.x_labels)
    for (lab, ver), d in unread.items():
        if lab not in xs:
            operands += [np.eye(d), [idx(lab, "r", ver), idx(lab, "c", ver)]]
    lay = rounds.layout()
    out = [idx(lab, "r") for lab in lay.labels] + [idx(lab, "c") for lab in lay.labels]
    t = np.einsum(*operands, out, optimize=True)
    d = lay.total_dim
    p = np.conj(t.reshape(d, d))
    return HermitianOperator(p, lay, tol=1e-9 * max(1.0, np.abs(p).max()))


def random_protocol(rounds: RoundStructure, rng: np.random.Generator):
    """Random channels for both parties with two-dimensional memories, plus an effect.

    The other party's channel ``k`` reads ``Y_{k-1}`` and its memory ``B_{k-1}``
    and emits ``X_k`` and ``B_k``; the effect acts on ``B_{n+1}``.
    """
    n = rounds.n
    alice = []
    z = [1] + [2] * (n - 1) + [1]
    for k in range(n):
        x, xd, y, yd = rounds.rounds[k]
        inp = Layout(((memory_label(k), z[k]), (x, xd)))
        out = Layout(((y, yd), (memory_label(k + 1), z[k + 1])))
        alice.append(random_channel(inp, out, max(1, -(-inp.total_dim // out.total_dim)) + 1, rng))
    bob = []
    for k in range(n + 1):
        inp = Layout(()) if k == 0 else Layout(((rounds.y_labels[k - 1], rounds.y_dims[k - 1]), (f"B{k}", 2)))
        outs = [] if k == n else [(rounds.x_labels[k], rounds.x_dims[k])]
        outs.append((f"B{k + 1}", 2))
        out = Layout(tuple(outs))
        env = max(1, -(-inp.total_dim // out.total_dim))
        bob.append(random_channel(inp, out, env + 1, rng))
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q = g @ g.conj().T
    q = q / np.linalg.eigvalsh(q)[-1]
    effect = HermitianOperator(q, Layout(((f"B{n + 1}", 2),)))
    return alice, bob, effect


__all__ = [
    "FEASIBILITY_TOL", "RealizationError", "RoundStructure", "StrategyError", "StrategyOperator",
    "UnitaryRealization", "co_strategy_functional", "memory_label", "random_protocol", "random_strategy",
    "realization_memory_dims", "recompose_realization", "run_interaction", "simulate_interaction",
    "strategy_from_channels", "strategy_value", "unitary_realization", "validate_strategy",
]
