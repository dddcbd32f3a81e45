"""Primal-dual interior-point method for complex Hermitian SDPs.

Infeasible-start path following with the HKM search direction and a
Mehrotra predictor-corrector. Constraint values and multipliers are handled
in real coordinates of an orthonormal Hermitian basis, so the Newton system
is a real symmetric positive definite Schur complement.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from ..linalg import HermitianOperator
from .maps import schur_pair
from .problem import Residuals, SdpProblem, SdpSolution, SolverOptions


class HermitianBasis:
    """Orthonormal basis of ``m x m`` Hermitian matrices, stored as gathers.

    Element ``a`` equals ``sum_s w[a, s] E_{idx[a, s]}`` (flat indices):
    ``E_pp``, ``(E_pq + E_qp)/sqrt2`` and ``i(E_pq - E_qp)/sqrt2`` for ``p < q``.
    """

    def __init__(self, m: int):
        idx, w = [], []
        r = 1 / np.sqrt(2)
        for p in range(m):
            idx.append((p * m + p, p * m + p))
            w.append((1.0, 0.0))
        for p in range(m):
            for q in range(p + 1, m):
                idx.append((p * m + q, q * m + p))
                w.append((r, r))
                idx.append((p * m + q, q * m + p))
                w.append((1j * r, -1j * r))
        self.m = m
        self.idx = np.array(idx, dtype=np.int64).reshape(-1, 2)
        self.w = np.array(w, dtype=complex).reshape(-1, 2)

    @property
    def size(self) -> int:
        return self.m * self.m

    def coords(self, h: np.ndarray) -> np.ndarray:
        """``<beta_a, h>`` for Hermitian ``h`` (the Hermitian part for general ``h``)."""
        flat = np.asarray(h).reshape(h.shape[:-2] + (-1,))
        v = np.conj(self.w[:, 0]) * flat[..., self.idx[:, 0]] + np.conj(self.w[:, 1]) * flat[..., self.idx[:, 1]]
        return v.real

    def matrix(self, c: np.ndarray) -> np.ndarray:
        m = self.m
        flat = np.zeros(m * m, dtype=complex)
        np.add.at(flat, self.idx[:, 0], c * self.w[:, 0])
        np.add.at(flat, self.idx[:, 1], c * self.w[:, 1])
        return flat.reshape(m, m)

    def elements(self) -> np.ndarray:
        return np.stack([self.matrix(e) for e in np.eye(self.size)]) if self.size else np.zeros((0, self.m, self.m))


def _real_block(s: np.ndarray, ba: HermitianBasis, bc: HermitianBasis) -> np.ndarray:
    t = s[:, bc.idx[:, 0]] * bc.w[:, 0] + s[:, bc.idx[:, 1]] * bc.w[:, 1]
    r = np.conj(ba.w[:, 0])[:, None] * t[ba.idx[:, 0]] + np.conj(ba.w[:, 1])[:, None] * t[ba.idx[:, 1]]
    return r.real


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def _chol_inverse(z: np.ndarray) -> np.ndarray:
    lz = np.linalg.cholesky(z)
    li = sla.solve_triangular(lz, np.eye(z.shape[0]), lower=True)
    return li.conj().T @ li


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``a`` with ``x + a dx >= 0`` (``inf`` if unbounded)."""
    lx = np.linalg.cholesky(x)
    t = sla.solve_triangular(lx, dx, lower=True)
    t = sla.solve_triangular(lx, t.conj().T, lower=True)
    lam = np.linalg.eigvalsh(_herm(t))[0]
    return np.inf if lam >= 0 else -1.0 / lam


class KKTError(np.linalg.LinAlgError):
    """The Schur complement could not be factorized."""


class SdpSolver:
    """Solver bound to one problem; holds a mutable workspace, so not for concurrent use."""

    def __init__(self, problem: SdpProblem, options: SolverOptions | None = None):
        self.problem = problem
        self.opts = options or SolverOptions()
        problem.check_size(self.opts.max_dim)
        p = problem
        sign = 1.0 if p.sense == "max" else -1.0
        self.sign = sign
        self.bases = [HermitianBasis(c.dim) for c in p.constraints]
        sizes = [b.size for b in self.bases]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.K = int(self.offsets[-1])
        self.b_vec = np.concatenate([bs.coords(c.target) for bs, c in zip(self.bases, p.constraints)]) \
            if p.constraints else np.zeros(0)
        self.C = [sign * p.objective.get(b.label, np.zeros((b.dim, b.dim), dtype=complex)) for b in p.blocks]
        # terms per PSD block: list of (constraint index, map)
        bidx = {b.label: i for i, b in enumerate(p.blocks)}
        fidx = {b.label: i for i, b in enumerate(p.free_blocks)}
        self.block_terms = [[] for _ in p.blocks]
        self.free_terms = [[] for _ in p.free_blocks]
        for i, c in enumerate(p.constraints):
            for lab, mp in c.terms:
                if lab in bidx:
                    self.block_terms[bidx[lab]].append((i, mp))
                else:
                    self.free_terms[fidx[lab]].append((i, mp))
        # free variables in real coordinates
        self.free_bases = [HermitianBasis(b.dim) for b in p.free_blocks]
        fsizes = [b.size for b in self.free_bases]
        self.f_offsets = np.concatenate([[0], np.cumsum(fsizes)]).astype(int)
        nf = int(self.f_offsets[-1])
        self.F = np.zeros((self.K, nf))
        for f, (fb, terms) in enumerate(zip(self.free_bases, self.free_terms)):
            els = fb.elements()
            for i, mp in terms:
                img = mp.apply(els)
                cols = self.bases[i].coords(img)  # (n_f^2, K_i)
                self.F[self.offsets[i]:self.offsets[i + 1], self.f_offsets[f]:self.f_offsets[f + 1]] += cols.T
        self.c_free = np.concatenate(
            [fb.coords(sign * p.objective.get(b.label, np.zeros((b.dim, b.dim), dtype=complex)))
             for fb, b in zip(self.free_bases, p.free_blocks)]) if p.free_blocks else np.zeros(0)
        self.N = sum(b.dim for b in p.blocks)

    # -- operator helpers ------------------------------------------------

    def _split(self, yv: np.ndarray) -> list[np.ndarray]:
        return [bs.matrix(yv[self.offsets[i]:self.offsets[i + 1]]) for i, bs in enumerate(self.bases)]

    def A(self, xs: list[np.ndarray]) -> np.ndarray:
        """Real coordinates of ``sum_b L_ib(X_b)`` (Hermitian part)."""
        out = np.zeros(self.K)
        for b, terms in enumerate(self.block_terms):
            for i, mp in terms:
                out[self.offsets[i]:self.offsets[i + 1]] += self.bases[i].coords(mp.apply(xs[b]))
        return out

    def At(self, yv: np.ndarray) -> list[np.ndarray]:
        ys = self._split(yv)
        out = []
        for b, blk in enumerate(self.problem.blocks):
            acc = np.zeros((blk.dim, blk.dim), dtype=complex)
            for i, mp in self.block_terms[b]:
                acc += mp.adjoint(ys[i])
            out.append(_herm(acc))
        return out

    def _free_matrices(self, wv: np.ndarray) -> list[np.ndarray]:
        return [fb.matrix(wv[self.f_offsets[f]:self.f_offsets[f + 1]]) for f, fb in enumerate(self.free_bases)]

    def schur(self, xs, zinvs) -> np.ndarray:
        m = np.zeros((self.K, self.K))
        for b, terms in enumerate(self.block_terms):
            x, zi = xs[b], zinvs[b]
            for a in range(len(terms)):
                ia, ma = terms[a]
                sa = slice(self.offsets[ia], self.offsets[ia + 1])
                for c in range(a, len(terms)):
                    ic, mc = terms[c]
                    sc = slice(self.offsets[ic], self.offsets[ic + 1])
                    r = _real_block(schur_pair(ma, mc, x, zi), self.bases[ia], self.bases[ic])
                    m[sa, sc] += r
                    if c != a:
                        m[sc, sa] += r.T
        return (m + m.T) / 2

    # -- main loop ---------------------------------------------------------

    def _initial_point(self):
        p = self.problem
        xs, zs = [], []
        for b, blk in enumerate(p.blocks):
            n = blk.dim
            hint = p.initial.get(blk.label)
            if hint is not None:
                x = _herm(np.asarray(hint, dtype=complex).reshape(n, n))
            else:
                x = max(1.0, np.sqrt(n)) * np.eye(n, dtype=complex)
            eta = max(1.0, np.sqrt(n), np.linalg.norm(self.C[b]))
            xs.append(x)
            zs.append(eta * np.eye(n, dtype=complex))
        wv = np.zeros(self.F.shape[1])
        for f, blk in enumerate(p.free_blocks):
            hint = p.initial.get(blk.label)
            if hint is not None:
                wv[self.f_offsets[f]:self.f_offsets[f + 1]] = self.free_bases[f].coords(
                    np.asarray(hint, dtype=complex).reshape(blk.dim, blk.dim))
        return xs, zs, np.zeros(self.K), wv

    def _solve_newton(self, factor, h, rf):
        """Solve ``M dy - F dw = h``, ``F^T dy = rf``."""
        if self.F.shape[1] == 0:
            return factor(h), np.zeros(0)
        mh = factor(h)
        mf = factor(self.F)
        sf = self.F.T @ mf
        rhs = rf - self.F.T @ mh
        try:
            dw = sla.cho_solve(sla.cho_factor(sf), rhs)
        except np.linalg.LinAlgError:
            dw = np.linalg.lstsq(sf, rhs, rcond=None)[0]
        return mh + mf @ dw, dw

    def _factor(self, m: np.ndarray):
        try:
            cf = sla.cho_factor(m)
            return lambda r: sla.cho_solve(cf, r)
        except np.linalg.LinAlgError:
            pass
        reg = 1e-14 * max(1.0, np.abs(np.diag(m)).max(initial=1.0))
        try:
            cf = sla.cho_factor(m + reg * np.eye(m.shape[0]))
            return lambda r: sla.cho_solve(cf, r)
        except np.linalg.LinAlgError:
            cond = np.linalg.cond(m)
            if not np.isfinite(cond) or cond > 1e18:
                raise KKTError(f"Schur complement is numerically singular (condition estimate {cond:.3e})")
            return lambda r: np.linalg.lstsq(m, r, rcond=None)[0]

    def solve(self) -> SdpSolution:
        p, o = self.problem, self.opts
        xs, zs, yv, wv = self._initial_point()
        nb = len(xs)
        b_norm = np.linalg.norm(self.b_vec)
        c_norm = np.sqrt(sum(np.linalg.norm(c) ** 2 for c in self.C) + np.linalg.norm(self.c_free) ** 2)
        status, message = "max_iter", ""
        history = []
        it = 0
        best = None
        for it in range(o.max_iter + 1):
            ws = self._free_matrices(wv)
            rp = self.b_vec - self.A(xs) - self.F @ wv
            aty = self.At(yv)
            rd = [aty[b] - zs[b] - self.C[b] for b in range(nb)]
            rf = self.c_free - self.F.T @ yv
            pobj = sum(float(np.vdot(self.C[b], xs[b]).real) for b in range(nb)) + float(self.c_free @ wv)
            dobj = float(self.b_vec @ yv)
            pinf = np.linalg.norm(rp) / (1.0 + b_norm)
            dinf = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in rd) + np.linalg.norm(rf) ** 2) / (1.0 + c_norm)
            gap = abs(dobj - pobj) / max(1.0, abs(pobj), abs(dobj))
            mu = sum(float(np.vdot(xs[b], zs[b]).real) for b in range(nb)) / max(self.N, 1)
            score = max(gap, pinf, dinf)
            if best is None or score <= best[0]:
                best = (score, [x.copy() for x in xs], [z.copy() for z in zs], yv.copy(), wv.copy())
            history.append(score)
            if gap <= o.target_gap and pinf <= o.target_res and dinf <= o.target_res:
                status = "optimal"
                break
            xnorm = max((np.abs(x).max() for x in xs), default=0.0)
            ynorm = np.abs(yv).max(initial=0.0)
            if xnorm > o.divergence:
                status, message = "unbounded", f"primal iterates diverge (|X| = {xnorm:.3e})"
                break
            if ynorm > o.divergence or max((np.abs(z).max() for z in zs), default=0.0) > o.divergence:
                status, message = "infeasible", f"dual iterates diverge (|y| = {ynorm:.3e})"
                break
            if it == o.max_iter:
                break
            if len(history) > 12 and min(history[-6:]) > 0.5 * min(history[:-6]):
                message = "progress stalled"
                break
            try:
                zinvs = [_chol_inverse(z) for z in zs]
                factor = self._factor(self.schur(xs, zinvs))
            except np.linalg.LinAlgError as exc:
                message = str(exc)
                break

            def direction(sigma_mu, corr):
                h_blocks = []
                for b in range(nb):
                    r0 = -xs[b] - xs[b] @ rd[b] @ zinvs[b]
                    if sigma_mu:
                        r0 = r0 + sigma_mu * zinvs[b]
                    if corr is not None:
                        r0 = r0 - corr[b] @ zinvs[b]
                    h_blocks.append(r0)
                h = self.A(h_blocks) - rp
                dy, dw = self._solve_newton(factor, h, rf)
                for _ in range(o.refinement_steps + 1):
                    atdy = self.At(dy)
                    dz = [_herm(atdy[b] + rd[b]) for b in range(nb)]
                    dx = [_herm(h_blocks[b] - xs[b] @ dz[b] @ zinvs[b]) for b in range(nb)]
                    if _ == o.refinement_steps:
                        break
                    # residual of the Newton equations evaluated with the exact operators
                    r1 = self.A(dx) + self.F @ dw - rp
                    r2 = rf - self.F.T @ dy
                    ddy, ddw = self._solve_newton(factor, r1, r2)
                    dy, dw = dy + ddy, dw + ddw
                return dx, dz, dy, dw

            def steps(dx, dz):
                ap = min([_max_step(xs[b], dx[b]) for b in range(nb)], default=np.inf)
                ad = min([_max_step(zs[b], dz[b]) for b in range(nb)], default=np.inf)
                return ap, ad

            try:
                dx, dz, dy, dw = direction(0.0, None)
                ap, ad = steps(dx, dz)
                ap, ad = min(1.0, ap), min(1.0, ad)
                mu_aff = sum(float(np.vdot(xs[b] + ap * dx[b], zs[b] + ad * dz[b]).real)
                             for b in range(nb)) / max(self.N, 1)
                sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
                corr = [dx[b] @ dz[b] for b in range(nb)]
                dx, dz, dy, dw = direction(sigma * mu, corr)
                ap, ad = steps(dx, dz)
            except np.linalg.LinAlgError as exc:
                message = str(exc)
                break
            ap = min(1.0, o.step_fraction * ap)
            ad = min(1.0, o.step_fraction * ad)
            xs = [xs[b] + ap * dx[b] for b in range(nb)]
            wv = wv + ap * dw
            yv = yv + ad * dy
            zs = [zs[b] + ad * dz[b] for b in range(nb)]
        if status != "optimal" and best is not None and status == "max_iter":
            _, xs, zs, yv, wv = best
        return self._package(status, message, xs, zs, yv, wv, it)

    def _package(self, status, message, xs, zs, yv, wv, iterations) -> SdpSolution:
        p, o = self.problem, self.opts
        nb = len(xs)
        rp = self.b_vec - self.A(xs) - self.F @ wv
        aty = self.At(yv)
        rd = [aty[b] - zs[b] - self.C[b] for b in range(nb)]
        rf = self.c_free - self.F.T @ yv
        b_norm = np.linalg.norm(self.b_vec)
        c_norm = np.sqrt(sum(np.linalg.norm(c) ** 2 for c in self.C) + np.linalg.norm(self.c_free) ** 2)
        pinf = float(np.linalg.norm(rp) / (1.0 + b_norm))
        dinf = float(np.sqrt(sum(np.linalg.norm(r) ** 2 for r in rd) + np.linalg.norm(rf) ** 2) / (1.0 + c_norm))
        pobj = sum(float(np.vdot(self.C[b], xs[b]).real) for b in range(nb)) + float(self.c_free @ wv)
        dobj = float(self.b_vec @ yv)
        scale = max(1.0, abs(pobj), abs(dobj))
        gap = abs(dobj - pobj) / scale
        violation = max(0.0, pobj - dobj) / scale
        eigs = [np.linalg.eigvalsh(m)[0] for m in xs + zs]
        psd_min = float(min(eigs)) if eigs else 0.0
        if status in ("optimal", "max_iter"):
            ok = (gap <= o.gap_tol or abs(dobj - pobj) <= o.abs_gap_tol) and pinf <= o.res_tol and dinf <= o.res_tol
            status = "optimal" if ok else "max_iter"
        primal = {}
        for b, blk in enumerate(p.blocks):
            primal[blk.label] = HermitianOperator(_herm(xs[b]), blk.layout)
        for f, (blk, w) in enumerate(zip(p.free_blocks, self._free_matrices(wv))):
            primal[blk.label] = HermitianOperator(_herm(w), blk.layout)
        ys = self._split(yv)
        duals = {c.name: HermitianOperator(self.sign * _herm(ys[i]), c.layout) for i, c in enumerate(p.constraints)}
        slacks = {blk.label: HermitianOperator(_herm(zs[b]), blk.layout) for b, blk in enumerate(p.blocks)}
        return SdpSolution(
            status=status,
            primal_blocks=primal,
            dual_multipliers=duals,
            dual_slacks=slacks,
            primal_value=self.sign * pobj + p.offset,
            dual_value=self.sign * dobj + p.offset,
            gap=float(gap),
            residuals=Residuals(pinf, dinf, psd_min),
            iterations=iterations,
            weak_duality_violation=float(violation),
            message=message,
        )


def solve(problem: SdpProblem, options: SolverOptions | None = None) -> SdpSolution:
    """Solve ``problem`` with a fresh solver instance."""
    return SdpSolver(problem, options).solve()


__all__ = ["HermitianBasis", "KKTError", "SdpSolver", "solve"]
