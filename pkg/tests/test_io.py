import json

import numpy as np
import pytest

from combforge.channels import random_channel, random_hermitian, random_pure_state
from combforge.io import (
    channel_from_json,
    channel_to_json,
    dump,
    load,
    matrix_from_json,
    matrix_to_json,
    problem_from_json,
    problem_to_json,
    realization_from_json,
    realization_to_json,
    solution_from_json,
    solution_to_json,
    strategy_from_json,
    strategy_to_json,
    vector_from_json,
    vector_to_json,
)
from combforge.linalg import ComplexMatrix, HermitianOperator, Layout
from combforge.sdp import SolverOptions, build_strategy_primal, solve
from combforge.strategies import RoundStructure, StrategyError, random_strategy, unitary_realization

TIGHT = SolverOptions(target_gap=1e-12, target_res=1e-12)


def through_text(obj):
    return json.loads(dump(obj))


def test_float_roundtrip_exact():
    rng = np.random.default_rng(0)
    vals = np.concatenate([rng.standard_normal(200) * 10.0 ** rng.integers(-300, 300, 200),
                           [np.pi, 1 / 3, 5e-324, 1.7976931348623157e308, -0.0]])
    m = ComplexMatrix((vals[:100] + 1j * vals[100:200]).reshape(10, 10), Layout.of(["A"], [10]),
                      Layout.of(["B"], [10]))
    back = matrix_from_json(through_text(matrix_to_json(m)))
    assert np.array_equal(back.data, m.data)
    for x in vals[200:]:
        v = vector_from_json(through_text(vector_to_json(np.array([x]))))[0]
        assert v[0].real == x


def test_matrix_kinds():
    rng = np.random.default_rng(1)
    lay = Layout.of(["A", "B"], [2, 3])
    h = random_hermitian(lay, rng)
    back = matrix_from_json(through_text(matrix_to_json(h)))
    assert isinstance(back, HermitianOperator) and back.layout == lay
    assert np.array_equal(back.data, h.data)
    g = ComplexMatrix(rng.standard_normal((6, 6)) + 1j, lay, lay)
    assert not isinstance(matrix_from_json(matrix_to_json(g)), HermitianOperator)


def test_vector_roundtrip():
    rng = np.random.default_rng(2)
    lay = Layout.of(["Y1", "X1"], [3, 2])
    u = random_pure_state(lay, rng)
    v, back = vector_from_json(through_text(vector_to_json(u, lay)))
    assert back == lay and np.array_equal(v, u)


def test_channel_roundtrip():
    rng = np.random.default_rng(3)
    c = random_channel(Layout.of(["A"], [2]), Layout.of(["B", "C"], [2, 2]), 2, rng)
    back = channel_from_json(through_text(channel_to_json(c)))
    assert back.kind == c.kind
    assert back.input_layout == c.input_layout and back.output_layout == c.output_layout
    assert np.array_equal(back.choi.data, c.choi.data)


def test_strategy_roundtrip_and_validation():
    rng = np.random.default_rng(4)
    r = RoundStructure.from_dims([2, 2], [2, 1])
    s = random_strategy(r, [2], rng)
    obj = through_text(strategy_to_json(s))
    back = strategy_from_json(obj)
    assert back.rounds == r and np.array_equal(back.op.data, s.op.data)
    obj["entries"][0][0] += 0.5
    with pytest.raises(StrategyError):
        strategy_from_json(obj)


def test_realization_roundtrip():
    rng = np.random.default_rng(5)
    r = RoundStructure.from_dims([2, 2], [2, 2])
    real = unitary_realization(random_strategy(r, [2], rng))
    back = realization_from_json(through_text(realization_to_json(real)))
    assert back.memory_dims == real.memory_dims and back.rounds == r
    assert np.array_equal(back.v, real.v)
    for a, b in zip(back.unitaries, real.unitaries):
        assert np.array_equal(a, b)


def test_problem_and_solution_roundtrip():
    rng = np.random.default_rng(6)
    r = RoundStructure.from_dims([2], [2])
    h = random_hermitian(r.layout(), rng)
    p = build_strategy_primal(h, r)
    sol = solve(p, TIGHT)
    back = problem_from_json(through_text(problem_to_json(p)))
    sol2 = solve(back, TIGHT)
    assert sol2.status == "optimal"
    assert abs(sol2.primal_value - sol.primal_value) < 1e-9
    s = solution_from_json(through_text(solution_to_json(sol)))
    assert s.status == sol.status and s.iterations == sol.iterations
    assert s.primal_value == sol.primal_value and s.gap == sol.gap
    for k, v in sol.primal_blocks.items():
        assert np.array_equal(s.primal_blocks[k].data, v.data)


def test_solution_without_blocks():
    r = RoundStructure.from_dims([1], [2])
    sol = solve(build_strategy_primal(random_hermitian(r.layout(), np.random.default_rng(7)), r))
    obj = solution_to_json(sol, include_blocks=False)
    assert "primal_blocks" not in obj
    assert solution_from_json(obj).primal_blocks == {}


def test_dump_load_file(tmp_path):
    path = tmp_path / "m.json"
    m = random_hermitian(Layout.of(["A"], [3]), np.random.default_rng(8))
    text = dump(matrix_to_json(m), path)
    assert json.loads(text) == load(path)
    assert np.array_equal(matrix_from_json(load(path)).data, m.data)
