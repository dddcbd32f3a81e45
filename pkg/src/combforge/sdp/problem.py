"""Block-structured Hermitian semidefinite programs.

Standard form (``sense="max"``)::

    maximize    sum_b <C_b, X_b> + sum_f <C_f, W_f>
    subject to  sum_b L_ib(X_b) + sum_f L_if(W_f) = B_i   for every constraint i
                X_b >= 0,  W_f Hermitian (free)

Its dual is ``minimize sum_i <B_i, Y_i>`` subject to
``sum_i L_ib^*(Y_i) - C_b = S_b >= 0`` and ``sum_i L_if^*(Y_i) = C_f``.
``sense="min"`` problems are negated internally and reported in their own sense.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..linalg import HermitianOperator, Layout, LayoutError
from .maps import LinearMap

DEFAULT_MAX_DIM = 1024
MAX_DIM_ENV = "COMBFORGE_MAX_DIM"


class SdpSizeError(ValueError):
    """The realified problem exceeds the configured size cap."""


@dataclass(frozen=True)
class Block:
    label: str
    layout: Layout

    @property
    def dim(self) -> int:
        return self.layout.total_dim


@dataclass(frozen=True)
class Constraint:
    """``sum_terms L(var) = target``; ``target`` is Hermitian on ``layout``."""

    name: str
    terms: tuple[tuple[str, LinearMap], ...]
    target: np.ndarray
    layout: Layout

    @property
    def dim(self) -> int:
        return self.layout.total_dim


def constraint(name: str, terms: Sequence[tuple[str, LinearMap]], target, layout: Layout) -> Constraint:
    m = layout.total_dim
    t = np.asarray(target, dtype=complex)
    if t.ndim == 0:
        t = t * np.eye(m)
    t = t.reshape(m, m)
    if np.abs(t - t.conj().T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(t).max(initial=0.0)):
        raise ValueError(f"target of constraint {name!r} is not Hermitian")
    return Constraint(name, tuple(terms), (t + t.conj().T) / 2, layout)


@dataclass
class SdpProblem:
    blocks: tuple[Block, ...]
    constraints: tuple[Constraint, ...]
    objective: Mapping[str, np.ndarray] = field(default_factory=dict)
    free_blocks: tuple[Block, ...] = ()
    sense: str = "max"
    offset: float = 0.0
    initial: Mapping[str, np.ndarray] = field(default_factory=dict)
    name: str = "sdp"

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        self.blocks = tuple(self.blocks)
        self.free_blocks = tuple(self.free_blocks)
        self.constraints = tuple(self.constraints)
        labels = [b.label for b in self.blocks + self.free_blocks]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate variable labels: {labels}")
        dims = {b.label: b.dim for b in self.blocks + self.free_blocks}
        names = [c.name for c in self.constraints]
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate constraint names: {names}")
        for c in self.constraints:
            for lab, mp in c.terms:
                if lab not in dims:
                    raise LayoutError(f"constraint {c.name!r} refers to unknown variable {lab!r}")
                if mp.in_dim != dims[lab] or mp.out_dim != c.dim:
                    raise LayoutError(f"constraint {c.name!r}: term on {lab!r} has the wrong shape")
        obj = {}
        for lab, cmat in dict(self.objective).items():
            if lab not in dims:
                raise LayoutError(f"objective refers to unknown variable {lab!r}")
            a = np.asarray(cmat, dtype=complex)
            if a.ndim == 0:
                a = a * np.eye(dims[lab])
            a = a.reshape(dims[lab], dims[lab])
            if np.abs(a - a.conj().T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(a).max(initial=0.0)):
                raise ValueError(f"objective coefficient of {lab!r} is not Hermitian")
            obj[lab] = (a + a.conj().T) / 2
        self.objective = obj

    @property
    def real_dim(self) -> int:
        """Order of the realified PSD cone: twice the summed block dimensions."""
        return 2 * sum(b.dim for b in self.blocks)

    def check_size(self, cap: int | None = None) -> None:
        if cap is None:
            cap = int(os.environ.get(MAX_DIM_ENV, DEFAULT_MAX_DIM))
        if self.real_dim > cap:
            raise SdpSizeError(f"realified dimension {self.real_dim} exceeds the cap {cap} "
                               f"(set {MAX_DIM_ENV} to override)")

    def variable(self, label: str) -> Block:
        for b in self.blocks + self.free_blocks:
            if b.label == label:
                return b
        raise LayoutError(f"unknown variable {label!r}")

    def evaluate(self, values: Mapping[str, np.ndarray]) -> tuple[float, float]:
        """Objective value and relative equality residual of a candidate point."""
        val = self.offset
        for lab, cmat in self.objective.items():
            val += float(np.vdot(cmat, values[lab]).real)
        num = den = 0.0
        for c in self.constraints:
            r = c.target.copy()
            for lab, mp in c.terms:
                r = r - mp.apply(values[lab])
            num += float(np.linalg.norm(r) ** 2)
            den += float(np.linalg.norm(c.target) ** 2)
        return val, float(np.sqrt(num) / (1.0 + np.sqrt(den)))


@dataclass(frozen=True)
class Residuals:
    primal_eq: float
    dual_ineq: float
    psd_min_eig: float


@dataclass(frozen=True)
class SdpSolution:
    status: str
    primal_blocks: dict
    dual_multipliers: dict
    dual_slacks: dict
    primal_value: float
    dual_value: float
    gap: float
    residuals: Residuals
    iterations: int
    weak_duality_violation: float
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def value(self) -> float:
        return self.primal_value

    def block(self, label: str) -> HermitianOperator:
        return self.primal_blocks[label]

    def multiplier(self, name: str) -> HermitianOperator:
        return self.dual_multipliers[name]


@dataclass(frozen=True)
class SolverOptions:
    """Interior-point settings.

    ``gap_tol``/``res_tol`` decide whether a final iterate is reported as
    optimal; the iteration itself aims for the tighter ``target_gap`` and
    ``target_res``.
    """

    max_iter: int = 200
    gap_tol: float = 1e-7
    res_tol: float = 1e-8
    target_gap: float = 1e-9
    target_res: float = 1e-10
    refinement_steps: int = 1
    abs_gap_tol: float = 1e-9
    step_fraction: float = 0.98
    max_dim: int | None = None
    divergence: float = 1e12


__all__ = ["Block", "Constraint", "DEFAULT_MAX_DIM", "MAX_DIM_ENV", "Residuals", "SdpProblem",
           "SdpSizeError", "SdpSolution", "SolverOptions", "constraint"]
