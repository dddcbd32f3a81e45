"""Hermiticity-preserving linear maps used in SDP constraints.

Every map sends an ``n x n`` block variable to an ``m x m`` constraint value
and supports batched application, its adjoint, and the structured product

    S[(p, q), (r, s)] = L_i(X L_j^*(E_rs) Zinv)[p, q]

needed for the HKM Schur complement.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..linalg import Layout, LayoutError


class LinearMap:
    """Interface: ``apply``/``adjoint`` act on arrays of shape ``(..., d, d)``."""

    in_dim: int
    out_dim: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint_units(self) -> np.ndarray:
        """``L^*(E_rs)`` for every matrix unit, shape ``(m*m, n, n)``."""
        m = self.out_dim
        units = np.eye(m * m, dtype=complex).reshape(m * m, m, m)
        return self.adjoint(units)

    def as_matrix(self) -> np.ndarray:
        """Matrix of the map on row-major ``vec``, shape ``(m*m, n*n)``."""
        n = self.in_dim
        units = np.eye(n * n, dtype=complex).reshape(n * n, n, n)
        return self.apply(units).reshape(n * n, -1).T


def _generic_schur(li: LinearMap, lj: LinearMap, x: np.ndarray, zinv: np.ndarray) -> np.ndarray:
    g = lj.adjoint_units()
    q = x @ g @ zinv
    return li.apply(q).reshape(g.shape[0], -1).T


class FactorMap(LinearMap):
    """``L(X) = c * P[Tr_T(X (I (x) D)) (x) I_E]``.

    ``traced`` maps a factor label of the block layout to ``None`` (plain
    partial trace) or a Hermitian weight ``D`` on that factor (``|s><s|``
    selects a diagonal block). ``extra`` holds identity factors appended to
    the result, and ``out_order`` fixes the order of the result's factors.
    """

    def __init__(self, in_layout: Layout, traced: Mapping[str, np.ndarray | None] | None = None,
                 extra: Layout | None = None, out_order=None, coef: float = 1.0):
        traced = dict(traced or {})
        extra = Layout() if extra is None else extra
        for lab in traced:
            in_layout.index(lab)
        kept = in_layout.without(traced)
        if set(kept.labels) & set(extra.labels):
            raise LayoutError("identity factors clash with kept factors")
        natural = kept + extra
        out_order = list(natural.labels) if out_order is None else list(out_order)
        if sorted(out_order) != sorted(natural.labels):
            raise LayoutError(f"output order {out_order} does not match {list(natural.labels)}")
        self.in_layout = in_layout
        self.traced = {}
        for lab, d in traced.items():
            if d is not None:
                d = np.asarray(d, dtype=complex)
                dim = in_layout.dim(lab)
                if d.shape != (dim, dim) or np.abs(d - d.conj().T).max() > 1e-12:
                    raise ValueError(f"weight on {lab!r} must be a Hermitian {dim}x{dim} matrix")
            self.traced[lab] = d
        self.extra = extra
        self.out_layout = natural.select(out_order)
        self.coef = float(coef)
        self.in_dim = in_layout.total_dim
        self.out_dim = self.out_layout.total_dim
        self._paths: dict = {}

    def __repr__(self) -> str:
        return (f"FactorMap(in={self.in_layout.labels}, traced={list(self.traced)}, "
                f"extra={self.extra.labels}, out={self.out_layout.labels}, coef={self.coef})")

    # index bookkeeping -------------------------------------------------

    def _einsum(self, key, *args):
        path = self._paths.get(key)
        if path is None:
            path = np.einsum_path(*args, optimize="greedy")[0]
            self._paths[key] = path
        return np.einsum(*args, optimize=path)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        batch = x.shape[:-2]
        nb = len(batch)
        lay = self.in_layout
        xt = x.reshape(batch + lay.dims + lay.dims)
        nxt = [nb]

        def new():
            nxt[0] += 1
            return nxt[0] - 1

        b_ids = list(range(nb))
        f1 = {lab: new() for lab in lay.labels}
        f2 = {}
        ops = []
        for lab in lay.labels:
            if lab in self.traced:
                d = self.traced[lab]
                if d is None:
                    f2[lab] = f1[lab]
                else:
                    f2[lab] = new()
                    # sum_{t,t'} X[(a,t),(a',t')] D[t',t]
                    ops += [d, [f2[lab], f1[lab]]]
            else:
                f2[lab] = new()
        er = {lab: new() for lab in self.extra.labels}
        ec = {lab: new() for lab in self.extra.labels}
        for lab, dim in self.extra:
            ops += [np.eye(dim), [er[lab], ec[lab]]]
        rows = [f1[lab] if lab in f1 else er[lab] for lab in self.out_layout.labels]
        cols = [f2[lab] if lab in f2 and lab not in self.traced else ec[lab] for lab in self.out_layout.labels]
        args = [xt, b_ids + [f1[lab] for lab in lay.labels] + [f2[lab] for lab in lay.labels]] + ops
        res = self._einsum(("apply", x.shape), *args, b_ids + rows + cols)
        m = self.out_dim
        return self.coef * res.reshape(batch + (m, m))

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        batch = y.shape[:-2]
        nb = len(batch)
        lay = self.in_layout
        olay = self.out_layout
        yt = y.reshape(batch + olay.dims + olay.dims)
        nxt = [nb]

        def new():
            nxt[0] += 1
            return nxt[0] - 1

        b_ids = list(range(nb))
        g1 = {lab: new() for lab in lay.labels}
        g2 = {}
        ops = []
        for lab in lay.labels:
            if lab in self.traced:
                g2[lab] = new()
                d = self.traced[lab]
                ops += [np.eye(lay.dim(lab)) if d is None else d, [g1[lab], g2[lab]]]
            else:
                g2[lab] = new()
        e = {lab: new() for lab in self.extra.labels}
        yr = [g1[lab] if lab in g1 else e[lab] for lab in olay.labels]
        yc = [g2[lab] if lab in g2 else e[lab] for lab in olay.labels]
        args = [yt, b_ids + yr + yc] + ops
        res = self._einsum(("adjoint", y.shape), *args,
                           b_ids + [g1[lab] for lab in lay.labels] + [g2[lab] for lab in lay.labels])
        n = self.in_dim
        return self.coef * res.reshape(batch + (n, n))

    def schur_pair(self, other: "LinearMap", x: np.ndarray, zinv: np.ndarray) -> np.ndarray:
        """``S[(p,q),(r,s)] = self(X other^*(E_rs) Zinv)[p,q]``, shape ``(m_self^2, m_other^2)``."""
        if not isinstance(other, FactorMap) or other.in_layout != self.in_layout:
            return _generic_schur(self, other, x, zinv)
        li, lj = self, other
        lay = li.in_layout
        ids = [0]

        def new():
            ids[0] += 1
            return ids[0] - 1

        f1 = {lab: new() for lab in lay.labels}
        f2 = {lab: new() for lab in lay.labels}
        f3, f4 = {}, {}
        ops = []
        for lab in lay.labels:
            if lab in lj.traced:
                if lj.traced[lab] is None:
                    f3[lab] = f2[lab]
                else:
                    f3[lab] = new()
                    ops += [lj.traced[lab], [f2[lab], f3[lab]]]
            else:
                f3[lab] = new()
            if lab in li.traced:
                if li.traced[lab] is None:
                    f4[lab] = f1[lab]
                else:
                    f4[lab] = new()
                    ops += [li.traced[lab], [f4[lab], f1[lab]]]
            else:
                f4[lab] = new()
        ei_r = {lab: new() for lab in li.extra.labels}
        ei_c = {lab: new() for lab in li.extra.labels}
        ej_r = {lab: new() for lab in lj.extra.labels}
        ej_c = {lab: new() for lab in lj.extra.labels}
        for lab, dim in li.extra:
            ops += [np.eye(dim), [ei_r[lab], ei_c[lab]]]
        for lab, dim in lj.extra:
            ops += [np.eye(dim), [ej_r[lab], ej_c[lab]]]
        p = [f1[lab] if lab not in li.extra else ei_r[lab] for lab in li.out_layout.labels]
        q = [f4[lab] if lab not in li.extra else ei_c[lab] for lab in li.out_layout.labels]
        r = [f2[lab] if lab not in lj.extra else ej_r[lab] for lab in lj.out_layout.labels]
        s = [f3[lab] if lab not in lj.extra else ej_c[lab] for lab in lj.out_layout.labels]
        dims = lay.dims
        xt = x.reshape(dims + dims)
        zt = zinv.reshape(dims + dims)
        args = [xt, [f1[lab] for lab in lay.labels] + [f2[lab] for lab in lay.labels],
                zt, [f3[lab] for lab in lay.labels] + [f4[lab] for lab in lay.labels]] + ops
        key = ("schur", lj.in_layout, lj.extra, lj.out_layout,
               tuple((lab, d is None) for lab, d in lj.traced.items()))
        res = li._einsum(key, *args, p + q + r + s)
        mi, mj = li.out_dim, lj.out_dim
        return (li.coef * lj.coef) * res.reshape(mi * mi, mj * mj)


class DenseMap(LinearMap):
    """A map given by its matrix on row-major ``vec``: ``vec(L(X)) = A vec(X)``."""

    def __init__(self, matrix: np.ndarray, in_dim: int, out_dim: int, check: bool = True):
        a = np.asarray(matrix, dtype=complex)
        if a.shape != (out_dim * out_dim, in_dim * in_dim):
            raise LayoutError(f"matrix of shape {a.shape} does not map {in_dim}x{in_dim} to {out_dim}x{out_dim}")
        if check:
            # Hermiticity preserving iff A[(p,q),(r,s)] = conj(A[(q,p),(s,r)])
            t = a.reshape(out_dim, out_dim, in_dim, in_dim)
            err = np.abs(t - t.transpose(1, 0, 3, 2).conj()).max(initial=0.0)
            if err > 1e-12 * max(1.0, np.abs(a).max(initial=0.0)):
                raise ValueError(f"map does not preserve Hermiticity (deviation {err:.3e})")
        self.matrix = a
        self.in_dim = in_dim
        self.out_dim = out_dim

    def __repr__(self) -> str:
        return f"DenseMap({self.in_dim} -> {self.out_dim})"

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        batch = x.shape[:-2]
        v = x.reshape(batch + (-1,))
        m = self.out_dim
        return (v @ self.matrix.T).reshape(batch + (m, m))

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        batch = y.shape[:-2]
        v = y.reshape(batch + (-1,))
        n = self.in_dim
        return (v @ self.matrix.conj()).reshape(batch + (n, n))

    def adjoint_units(self) -> np.ndarray:
        n = self.in_dim
        return self.matrix.conj().reshape(-1, n, n)

    def schur_pair(self, other: LinearMap, x: np.ndarray, zinv: np.ndarray) -> np.ndarray:
        g = other.adjoint_units()
        q = (x @ g @ zinv).reshape(g.shape[0], -1)
        return self.matrix @ q.T


def schur_pair(li: LinearMap, lj: LinearMap, x: np.ndarray, zinv: np.ndarray) -> np.ndarray:
    fn = getattr(li, "schur_pair", None)
    if fn is None:
        return _generic_schur(li, lj, x, zinv)
    return fn(lj, x, zinv)


__all__ = ["DenseMap", "FactorMap", "LinearMap", "schur_pair"]
