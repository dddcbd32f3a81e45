"""Completely positive maps stored as Choi matrices.

A :class:`Channel` keeps ``J(Phi) = sum_ab Phi(|a><b|) (x) |a><b|`` on the
layout ``output + input``. Kraus operators ``K`` map the input space to the
output space, and ``J = sum_i vec(K_i) vec(K_i)^*``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import (
    PSD_TOL,
    ComplexMatrix,
    HermitianOperator,
    Layout,
    LayoutError,
    NotPositiveError,
    apply_choi,
    check_psd,
    eig_hermitian,
    max_entangled_vector,
    permute_array,
    ptrace_array,
)

KINDS = ("channel", "unital_cp", "general_cp")
CHANNEL_TOL = 1e-9


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators, each a matrix from ``input_layout`` to ``output_layout``."""

    operators: tuple[ComplexMatrix, ...]
    input_layout: Layout
    output_layout: Layout

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], input_layout: Layout,
                    output_layout: Layout) -> "KrausSet":
        ops = tuple(ComplexMatrix(a, output_layout, input_layout) for a in arrays)
        return cls(ops, input_layout, output_layout)

    def arrays(self) -> list[np.ndarray]:
        return [k.data for k in self.operators]

    def tp_residual(self) -> float:
        s = sum(k.data.conj().T @ k.data for k in self.operators)
        return float(np.abs(s - np.eye(self.input_layout.total_dim)).max())

    def unital_residual(self) -> float:
        s = sum(k.data @ k.data.conj().T for k in self.operators)
        return float(np.abs(s - np.eye(self.output_layout.total_dim)).max())


@dataclass(frozen=True)
class Channel:
    choi: HermitianOperator
    input_layout: Layout
    output_layout: Layout
    kind: str = "channel"
    kraus: KrausSet | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        expected = self.output_layout + self.input_layout
        if self.choi.layout != expected:
            raise LayoutError(f"Choi layout {self.choi.layout.labels} != output+input {expected.labels}")
        check_psd(self.choi, PSD_TOL)
        if self.kind == "channel" and self.tp_residual() > CHANNEL_TOL:
            raise ValueError(f"not trace preserving (residual {self.tp_residual():.3e})")
        if self.kind == "unital_cp" and self.unital_residual() > CHANNEL_TOL:
            raise ValueError(f"not unital (residual {self.unital_residual():.3e})")

    @property
    def in_dim(self) -> int:
        return self.input_layout.total_dim

    @property
    def out_dim(self) -> int:
        return self.output_layout.total_dim

    def _split_dims(self):
        return (self.out_dim, self.in_dim)

    def tp_residual(self) -> float:
        """``max|Tr_out J - I_in|``."""
        red = ptrace_array(self.choi.data, self._split_dims(), [0])
        return float(np.abs(red - np.eye(self.in_dim)).max())

    def unital_residual(self) -> float:
        red = ptrace_array(self.choi.data, self._split_dims(), [1])
        return float(np.abs(red - np.eye(self.out_dim)).max())


def _infer_kind(choi: np.ndarray, in_dim: int, out_dim: int) -> str:
    tp = ptrace_array(choi, (out_dim, in_dim), [0])
    if np.abs(tp - np.eye(in_dim)).max() <= CHANNEL_TOL:
        return "channel"
    un = ptrace_array(choi, (out_dim, in_dim), [1])
    if np.abs(un - np.eye(out_dim)).max() <= CHANNEL_TOL:
        return "unital_cp"
    return "general_cp"


def channel_from_choi(choi, input_layout: Layout, output_layout: Layout,
                      kind: str | None = None) -> Channel:
    """Wrap a Choi matrix (array or operator on output+input)."""
    data = choi.data if isinstance(choi, ComplexMatrix) else np.asarray(choi, dtype=complex)
    if kind is None:
        kind = _infer_kind(data, input_layout.total_dim, output_layout.total_dim)
    op = HermitianOperator(data, output_layout + input_layout)
    return Channel(op, input_layout, output_layout, kind)


def choi_from_kraus(k: KrausSet, kind: str | None = None) -> Channel:
    din, dout = k.input_layout.total_dim, k.output_layout.total_dim
    vecs = []
    for op in k.operators:
        if op.data.shape != (dout, din):
            raise LayoutError(f"Kraus operator of shape {op.data.shape}, expected {(dout, din)}")
        vecs.append(op.data.reshape(-1))
    v = np.array(vecs).T if vecs else np.zeros((dout * din, 0), dtype=complex)
    choi = v @ v.conj().T
    if kind is None:
        kind = _infer_kind(choi, din, dout)
    op = HermitianOperator(choi, k.output_layout + k.input_layout)
    return Channel(op, k.input_layout, k.output_layout, kind, kraus=k)


def kraus_from_choi(c: Channel, rank_tol: float = 1e-10) -> KrausSet:
    """Kraus operators from the spectral decomposition of the Choi matrix."""
    if c.kraus is not None:
        return c.kraus
    w, v = eig_hermitian(c.choi)
    top = w[0] if w.size else 0.0
    keep = w > rank_tol * top if top > 0 else np.zeros_like(w, dtype=bool)
    ops = [np.sqrt(w[i]) * v[:, i].reshape(c.out_dim, c.in_dim) for i in np.flatnonzero(keep)]
    if not ops:
        ops = [np.zeros((c.out_dim, c.in_dim), dtype=complex)]
    return KrausSet.from_arrays(ops, c.input_layout, c.output_layout)


def apply_channel(c: Channel, rho) -> HermitianOperator:
    """``Phi(rho) = Tr_in[J (I_out (x) rho^T)]`` for ``rho`` on the input layout."""
    layout = rho.layout if isinstance(rho, HermitianOperator) else c.input_layout
    if layout.dims != c.input_layout.dims:
        raise LayoutError("state layout does not match the channel input")
    data = rho.data if isinstance(rho, ComplexMatrix) else np.asarray(rho, dtype=complex)
    jt = c.choi.data.reshape(c.out_dim, c.in_dim, c.out_dim, c.in_dim)
    out = np.einsum("aibj,ij->ab", jt, data)
    return HermitianOperator(out, c.output_layout, tol=1e-10 * max(1.0, np.abs(out).max()))


def apply_to_factors(c: Channel, rho: HermitianOperator) -> HermitianOperator:
    """Apply ``c`` to the factors of ``rho`` named by its input labels.

    Output factors are appended after the untouched ones.
    """
    data, layout = apply_choi(c.choi.data, c.input_layout, c.output_layout, rho.data, rho.layout)
    return HermitianOperator(data, layout, tol=1e-10 * max(1.0, np.abs(data).max()))


def adjoint_apply(c: Channel, sigma: np.ndarray) -> np.ndarray:
    """Heisenberg-picture action ``Phi^*(sigma) = sum_i K_i^* sigma K_i``."""
    jt = c.choi.data.reshape(c.out_dim, c.in_dim, c.out_dim, c.in_dim)
    # conj(J[a,i,b,j]) = J[b,j,a,i] since J is Hermitian
    return np.einsum("bjai,ab->ij", jt, np.asarray(sigma, dtype=complex))


def compose(outer: Channel, inner: Channel) -> Channel:
    """``outer o inner``, identity-padding factors that only one side touches.

    The composite's input is ``inner.input`` plus the outer inputs not produced
    by ``inner``; its output is ``outer.output`` plus the inner outputs not
    consumed by ``outer``.
    """
    feed = [lab for lab in outer.input_layout.labels if lab in inner.output_layout]
    for lab in feed:
        if outer.input_layout.dim(lab) != inner.output_layout.dim(lab):
            raise LayoutError(f"dimension mismatch on {lab!r}")
    extra_in = outer.input_layout.without(feed)
    in_layout = inner.input_layout + extra_in
    idle_out = inner.output_layout.without(feed)
    out_layout = outer.output_layout + idle_out

    refs = {lab: f"{lab}~ref" for lab in in_layout.labels}
    ref_layout = in_layout.relabel(refs)
    state, layout = choi_state(in_layout, ref_layout)
    state, layout = apply_choi(inner.choi.data, inner.input_layout, inner.output_layout, state, layout)
    state, layout = apply_choi(outer.choi.data, outer.input_layout, outer.output_layout, state, layout)
    order = list(out_layout.labels) + list(ref_layout.labels)
    perm = [layout.index(lab) for lab in order]
    data = permute_array(state, layout.dims, perm)
    kind = "channel" if outer.kind == inner.kind == "channel" else None
    return channel_from_choi(data, in_layout, out_layout, kind)


def choi_state(layout: Layout, ref_layout: Layout) -> tuple[np.ndarray, Layout]:
    """``vec(I) vec(I)^*`` on ``layout + ref_layout`` (unnormalized)."""
    v = max_entangled_vector(layout.total_dim)
    return np.outer(v, v.conj()), layout + ref_layout


def stinespring_from_choi(c: Channel, env_label: str = "env") -> ComplexMatrix:
    """Isometry ``V: input -> output (x) env`` with ``Tr_env(V rho V^*) = Phi(rho)``."""
    if c.kind != "channel":
        raise ValueError("Stinespring isometries are built for channels only")
    ks = kraus_from_choi(c).arrays()
    r = len(ks)
    v = np.stack(ks, axis=1).reshape(c.out_dim * r, c.in_dim)
    return ComplexMatrix(v, c.output_layout + Layout(((env_label, r),)), c.input_layout)


def transpose_channel(c: Channel) -> Channel:
    """Transpose with respect to the standard basis: Kraus ``K -> K^T``.

    In Choi form this is the swap of the output and input factor groups, so
    channels become unital CP maps and vice versa.
    """
    n_out = len(c.output_layout)
    dims = c.choi.layout.dims
    perm = list(range(n_out, len(dims))) + list(range(n_out))
    data = permute_array(c.choi.data, dims, perm)
    flip = {"channel": "unital_cp", "unital_cp": "channel", "general_cp": "general_cp"}
    kind = flip[c.kind]
    kraus = None
    if c.kraus is not None:
        kraus = KrausSet.from_arrays([k.T for k in c.kraus.arrays()], c.output_layout, c.input_layout)
    op = HermitianOperator(data, c.input_layout + c.output_layout)
    return Channel(op, c.output_layout, c.input_layout, kind, kraus=kraus)


# ---------------------------------------------------------------------------
# standard channels
# ---------------------------------------------------------------------------


def identity_channel(input_layout: Layout, output_layout: Layout | None = None) -> Channel:
    output_layout = input_layout if output_layout is None else output_layout
    if output_layout.total_dim != input_layout.total_dim:
        raise LayoutError("identity channel needs equal dimensions")
    d = input_layout.total_dim
    return choi_from_kraus(KrausSet.from_arrays([np.eye(d)], input_layout, output_layout), "channel")


def unitary_channel(u: np.ndarray, input_layout: Layout, output_layout: Layout) -> Channel:
    return choi_from_kraus(KrausSet.from_arrays([u], input_layout, output_layout), "channel")


def depolarizing_channel(input_layout: Layout, output_layout: Layout | None = None) -> Channel:
    """Completely depolarizing channel ``rho -> Tr(rho) I/d_out``."""
    output_layout = input_layout if output_layout is None else output_layout
    dout, din = output_layout.total_dim, input_layout.total_dim
    choi = np.kron(np.eye(dout) / dout, np.eye(din))
    return channel_from_choi(choi, input_layout, output_layout, "channel")


def trace_channel(input_layout: Layout) -> Channel:
    return channel_from_choi(np.eye(input_layout.total_dim), input_layout, Layout(), "channel")


# ---------------------------------------------------------------------------
# random objects
# ---------------------------------------------------------------------------


def _ginibre(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-random isometry ``cols -> rows`` via QR of a Gaussian matrix."""
    if rows < cols:
        raise ValueError("an isometry needs rows >= cols")
    q, r = np.linalg.qr(_ginibre(rng, (rows, cols)))
    d = np.diagonal(r)
    ph = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * ph


def random_channel(input_layout: Layout, output_layout: Layout, env_dim: int,
                   rng: np.random.Generator) -> Channel:
    din, dout = input_layout.total_dim, output_layout.total_dim
    if dout * env_dim < din:
        raise ValueError(f"environment of dimension {env_dim} too small for a {din} -> {dout} channel")
    v = haar_isometry(rng, dout * env_dim, din).reshape(dout, env_dim, din)
    ks = [v[:, e, :] for e in range(env_dim)]
    return choi_from_kraus(KrausSet.from_arrays(ks, input_layout, output_layout), "channel")


def random_pure_state(layout: Layout, rng: np.random.Generator) -> np.ndarray:
    g = _ginibre(rng, layout.total_dim)
    return g / np.linalg.norm(g)


def random_density(layout: Layout, rank: int | None, rng: np.random.Generator) -> HermitianOperator:
    d = layout.total_dim
    g = _ginibre(rng, (d, d if rank is None else rank))
    rho = g @ g.conj().T
    return HermitianOperator(rho / np.trace(rho).real, layout)


def random_hermitian(layout: Layout, rng: np.random.Generator) -> HermitianOperator:
    g = _ginibre(rng, (layout.total_dim, layout.total_dim))
    return HermitianOperator((g + g.conj().T) / 2, layout)


__all__ = [
    "Channel", "KrausSet", "NotPositiveError", "adjoint_apply", "apply_channel",
    "apply_to_factors", "channel_from_choi", "choi_from_kraus", "choi_state", "compose",
    "depolarizing_channel", "haar_isometry", "identity_channel", "kraus_from_choi",
    "random_channel", "random_density", "random_hermitian", "random_pure_state",
    "stinespring_from_choi", "trace_channel", "transpose_channel", "unitary_channel",
]
