"""Real embedding of complex Hermitian matrices and SDPs.

``realify(A + iB) = [[A, -B], [B, A]]`` is PSD iff ``A + iB`` is, and
``<realify(M), realify(N)> = 2 Re<M, N>``. The native solver works with
complex blocks directly; the embedding is kept as a diagnostic that
re-expresses a problem over doubled blocks and must reproduce its optimum.
"""

from __future__ import annotations

import numpy as np

from ..linalg import Layout
from .maps import DenseMap
from .problem import Block, SdpProblem, constraint

PART = "~part"


def realify(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    a, b = m.real, m.imag
    return np.block([[a, -b], [b, a]])


def derealify(r: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify` on its image, averaging the duplicated blocks otherwise.

    Equals ``V^* r V`` with ``V = [I; -iI] / sqrt2``, a completely positive
    map, so PSD inputs give PSD outputs.
    """
    r = np.asarray(r)
    n = r.shape[0] // 2
    r11, r12, r21, r22 = r[:n, :n], r[:n, n:], r[n:, :n], r[n:, n:]
    return (r11 + r22) / 2 + 1j * (r21 - r12) / 2


def _embedding(n: int) -> np.ndarray:
    return np.vstack([np.eye(n), -1j * np.eye(n)]) / np.sqrt(2)


def _lift(x: np.ndarray) -> np.ndarray:
    """A PSD preimage of ``x`` under :func:`derealify` with full rank when ``x`` has."""
    n = x.shape[0]
    v = _embedding(n)
    w = np.vstack([np.eye(n), 1j * np.eye(n)]) / np.sqrt(2)
    return v @ x @ v.conj().T + 1e-3 * np.trace(x).real / n * (w @ w.conj().T)


def realified_problem(p: SdpProblem) -> SdpProblem:
    """The same program over blocks of twice the size, coupled through :func:`derealify`.

    PSD directions annihilated by ``derealify`` are penalized in the objective
    so the dual stays strictly feasible; an optimal lifted block vanishes on
    them, hence the optimum is unchanged. Free blocks are kept as they are.
    """
    if not p.blocks:
        return p
    dmaps = {}
    blocks = []
    for b in p.blocks:
        n = b.dim
        v = _embedding(n)
        units = np.eye(4 * n * n, dtype=complex).reshape(-1, 2 * n, 2 * n)
        dmaps[b.label] = (v.conj().T @ units @ v).reshape(4 * n * n, n * n).T
        blocks.append(Block(b.label, Layout(((PART, 2),)) + b.layout))
    cons = []
    for c in p.constraints:
        terms = []
        for lab, mp in c.terms:
            if lab in dmaps:
                n = p.variable(lab).dim
                terms.append((lab, DenseMap(mp.as_matrix() @ dmaps[lab], 2 * n, c.dim)))
            else:
                terms.append((lab, mp))
        cons.append(constraint(c.name, terms, c.target, c.layout))
    objective = {}
    scale = 1.0 + max((np.abs(cm).max(initial=0.0) for cm in p.objective.values()), default=0.0)
    for b in p.blocks:
        n = b.dim
        v = _embedding(n)
        cm = p.objective.get(b.label, np.zeros((n, n), dtype=complex))
        objective[b.label] = v @ cm @ v.conj().T - scale * (np.eye(2 * n) - v @ v.conj().T)
    for b in p.free_blocks:
        if b.label in p.objective:
            objective[b.label] = p.objective[b.label]
    initial = {lab: (_lift(x) if lab in dmaps else x) for lab, x in p.initial.items()}
    return SdpProblem(tuple(blocks), tuple(cons), objective, p.free_blocks, p.sense, p.offset,
                      initial, p.name + "-realified")


__all__ = ["derealify", "realified_problem", "realify"]
