"""JSON formats for matrices, channels, strategies, realizations and SDPs.

A matrix is ``{"row_layout": [[label, dim], ...], "col_layout": [...],
"entries": [[re, im], ...]}`` in row-major order. Floats are written with
17 significant digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .channels import Channel, channel_from_choi
from .linalg import ComplexMatrix, HermitianOperator, Layout
from .sdp.maps import DenseMap
from .sdp.problem import Block, Residuals, SdpProblem, SdpSolution, constraint
from .strategies import RoundStructure, StrategyOperator, UnitaryRealization, validate_strategy


def _real(x: float) -> float:
    return float(f"{float(x):.17g}")


def _entries(a: np.ndarray) -> list:
    flat = np.asarray(a, dtype=complex).reshape(-1)
    return [[_real(z.real), _real(z.imag)] for z in flat]


def _from_entries(items, shape) -> np.ndarray:
    arr = np.array(items, dtype=float).reshape(-1, 2)
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


def matrix_to_json(m: ComplexMatrix) -> dict:
    return {"row_layout": m.row_layout.to_list(), "col_layout": m.col_layout.to_list(), "entries": _entries(m.data)}


def matrix_from_json(obj: dict, hermitian: bool | None = None) -> ComplexMatrix:
    """Read a matrix; square matrices on one layout become :class:`HermitianOperator` when Hermitian."""
    rows = Layout.from_list(obj["row_layout"])
    cols = Layout.from_list(obj.get("col_layout", obj["row_layout"]))
    data = _from_entries(obj["entries"], (rows.total_dim, cols.total_dim))
    if hermitian is None:
        hermitian = rows == cols and np.allclose(data, data.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(data).max()))
    if hermitian:
        return HermitianOperator(data, rows)
    return ComplexMatrix(data, rows, cols)


def vector_to_json(v: np.ndarray, layout: Layout | None = None) -> dict:
    v = np.asarray(v, dtype=complex).reshape(-1)
    lay = Layout((("v", v.size),)) if layout is None else layout
    return {"layout": lay.to_list(), "entries": _entries(v)}


def vector_from_json(obj: dict) -> tuple[np.ndarray, Layout]:
    lay = Layout.from_list(obj["layout"])
    return _from_entries(obj["entries"], (lay.total_dim,)), lay


def channel_to_json(c: Channel) -> dict:
    out = matrix_to_json(c.choi)
    out.update(kind=c.kind, input_layout=c.input_layout.to_list(), output_layout=c.output_layout.to_list())
    return out


def channel_from_json(obj: dict) -> Channel:
    m = matrix_from_json(obj, hermitian=True)
    return channel_from_choi(m, Layout.from_list(obj["input_layout"]), Layout.from_list(obj["output_layout"]),
                             obj.get("kind"))


def strategy_to_json(s: StrategyOperator) -> dict:
    out = matrix_to_json(s.op)
    out["rounds"] = s.rounds.to_list()
    return out


def strategy_from_json(obj: dict, tol: float | None = None) -> StrategyOperator:
    m = matrix_from_json(obj, hermitian=True)
    rounds = RoundStructure.from_list(obj["rounds"])
    return validate_strategy(m, rounds) if tol is None else validate_strategy(m, rounds, tol)


def realization_to_json(r: UnitaryRealization) -> dict:
    return {
        "rounds": r.rounds.to_list(),
        "memory_dims": list(r.memory_dims),
        "v": _entries(r.v),
        "unitaries": [{"shape": list(u.shape), "entries": _entries(u)} for u in r.unitaries],
    }


def realization_from_json(obj: dict) -> UnitaryRealization:
    z = tuple(int(d) for d in obj["memory_dims"])
    us = tuple(_from_entries(u["entries"], tuple(u["shape"])) for u in obj["unitaries"])
    return UnitaryRealization(_from_entries(obj["v"], (z[0],)), z, us, RoundStructure.from_list(obj["rounds"]))


def problem_to_json(p: SdpProblem) -> dict:
    """Self-contained dump; every constraint term is stored as a dense matrix."""
    def block(b: Block) -> dict:
        return {"label": b.label, "layout": b.layout.to_list()}

    return {
        "name": p.name,
        "sense": p.sense,
        "offset": p.offset,
        "blocks": [block(b) for b in p.blocks],
        "free_blocks": [block(b) for b in p.free_blocks],
        "objective": {lab: _entries(c) for lab, c in p.objective.items()},
        "constraints": [
            {
                "name": c.name,
                "layout": c.layout.to_list(),
                "target": _entries(c.target),
                "terms": [{"variable": lab, "matrix": _entries(mp.as_matrix())} for lab, mp in c.terms],
            }
            for c in p.constraints
        ],
    }


def problem_from_json(obj: dict) -> SdpProblem:
    blocks = tuple(Block(b["label"], Layout.from_list(b["layout"])) for b in obj["blocks"])
    free = tuple(Block(b["label"], Layout.from_list(b["layout"])) for b in obj.get("free_blocks", []))
    dims = {b.label: b.dim for b in blocks + free}
    cons = []
    for c in obj["constraints"]:
        lay = Layout.from_list(c["layout"])
        m = lay.total_dim
        terms = []
        for t in c["terms"]:
            n = dims[t["variable"]]
            terms.append((t["variable"], DenseMap(_from_entries(t["matrix"], (m * m, n * n)), n, m)))
        cons.append(constraint(c["name"], terms, _from_entries(c["target"], (m, m)), lay))
    objective = {lab: _from_entries(e, (dims[lab], dims[lab])) for lab, e in obj.get("objective", {}).items()}
    return SdpProblem(blocks, tuple(cons), objective, free, obj.get("sense", "max"), obj.get("offset", 0.0),
                      name=obj.get("name", "sdp"))


def solution_to_json(s: SdpSolution, include_blocks: bool = True) -> dict:
    out: dict[str, Any] = {
        "status": s.status,
        "primal_value": _real(s.primal_value),
        "dual_value": _real(s.dual_value),
        "gap": _real(s.gap),
        "residuals": {"primal_eq": _real(s.residuals.primal_eq), "dual_ineq": _real(s.residuals.dual_ineq),
                      "psd_min_eig": _real(s.residuals.psd_min_eig)},
        "iterations": s.iterations,
        "weak_duality_violation": _real(s.weak_duality_violation),
        "message": s.message,
    }
    if include_blocks:
        out["primal_blocks"] = {k: matrix_to_json(v) for k, v in s.primal_blocks.items()}
        out["dual_multipliers"] = {k: matrix_to_json(v) for k, v in s.dual_multipliers.items()}
        out["dual_slacks"] = {k: matrix_to_json(v) for k, v in s.dual_slacks.items()}
    return out


def solution_from_json(obj: dict) -> SdpSolution:
    def mats(key):
        return {k: matrix_from_json(v, hermitian=True) for k, v in obj.get(key, {}).items()}

    r = obj["residuals"]
    return SdpSolution(obj["status"], mats("primal_blocks"), mats("dual_multipliers"), mats("dual_slacks"),
                       obj["primal_value"], obj["dual_value"], obj["gap"],
                       Residuals(r["primal_eq"], r["dual_ineq"], r["psd_min_eig"]), obj["iterations"],
                       obj["weak_duality_violation"], obj.get("message", ""))


def dump(obj: Any, path: str | Path | None = None) -> str:
    text = json.dumps(obj, sort_keys=False)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())


__all__ = [
    "channel_from_json", "channel_to_json", "dump", "load", "matrix_from_json", "matrix_to_json",
    "problem_from_json", "problem_to_json", "realization_from_json", "realization_to_json",
    "solution_from_json", "solution_to_json", "strategy_from_json", "strategy_to_json",
    "vector_from_json", "vector_to_json",
]
