import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from combforge.channels import channel_from_choi, identity_channel, random_channel, unitary_channel
from combforge.linalg import HermitianOperator, Layout, LayoutError, permute_factors
from combforge.strategies import (
    RoundStructure,
    StrategyError,
    UnitaryRealization,
    co_strategy_functional,
    memory_label,
    random_protocol,
    random_strategy,
    realization_memory_dims,
    recompose_realization,
    run_interaction,
    simulate_interaction,
    strategy_from_channels,
    strategy_value,
    unitary_realization,
    validate_strategy,
)


def identity_strategy(rounds):
    x, y = rounds.x_layout(), rounds.y_layout()
    return identity_channel(x, y).choi


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_round_structure():
    r = RoundStructure.from_dims([2, 3], [1, 2])
    assert r.layout().labels == ("Y1", "Y2", "X1", "X2")
    assert r.layout(1).labels == ("Y1", "X1")
    rr = r.reversed()
    assert rr.rounds == (("Y2", 2, "X2", 3), ("Y1", 1, "X1", 2))
    assert rr.reversed() == r
    assert RoundStructure.from_list(r.to_list()) == r
    with pytest.raises(ValueError):
        RoundStructure(())
    with pytest.raises(LayoutError):
        RoundStructure((("A", 2, "A", 2),))


def test_single_round_identity():
    r = RoundStructure.from_dims([2], [2])
    c = identity_channel(Layout.of(["X1"], [2]), Layout.of(["Y1"], [2]))
    s = strategy_from_channels([c], r)
    assert s.hierarchy == ()
    assert np.abs(s.op.data - c.choi.data).max() < 1e-15


def test_two_round_identity_channels():
    r = RoundStructure.from_dims([2, 3], [2, 3])
    cs = [identity_channel(Layout.of(["X1"], [2]), Layout.of(["Y1"], [2])),
          identity_channel(Layout.of(["X2"], [3]), Layout.of(["Y2"], [3]))]
    s = strategy_from_channels(cs, r)
    assert np.abs(s.op.data - identity_strategy(r).data).max() < 1e-14


def test_random_strategy_feasible():
    rng = np.random.default_rng(0)
    for dims in ([2, 2], [1, 3], [3, 2]):
        r = RoundStructure.from_dims(dims, dims[::-1])
        s = random_strategy(r, [2], rng)
        assert s.residual <= 1e-10
        assert len(s.hierarchy) == 1


def test_hierarchy_matches_marginals():
    rng = np.random.default_rng(1)
    r = RoundStructure.from_dims([2, 2, 1], [1, 2, 2])
    s = random_strategy(r, [2, 2], rng)
    x3 = s.op.data.reshape(1, 2, 2, 2, 2, 1, 1, 2, 2, 2, 2, 1)
    # Tr_{Y3} X3 = X2 (x) I_{X3}, X3 dim 1
    x2 = np.einsum("abcdefghcjkl->abdeghjk", x3).reshape(8, 8)
    assert np.abs(x2 - s.level(2).data).max() < 1e-12
    assert s.level(3) is s.op


def test_validate_examples():
    r = RoundStructure.from_dims([2], [2])
    j = identity_channel(Layout.of(["X1"], [2]), Layout.of(["Y1"], [2])).choi
    assert validate_strategy(j, r).hierarchy == ()
    with pytest.raises(StrategyError) as err:
        validate_strategy(HermitianOperator(2 * j.data, j.layout), r)
    assert err.value.round_index == 1


def test_validate_reports_round():
    rng = np.random.default_rng(2)
    r = RoundStructure.from_dims([2, 2], [2, 2])
    s = random_strategy(r, [2], rng)
    bad = s.op.data.copy()
    # move weight between X_2 blocks so Tr_{Y_2} X_2 no longer factors
    bad = bad.reshape(2, 2, 2, 2, 2, 2, 2, 2)
    bad[:, :, :, 0, :, :, :, 0] *= 1.5
    bad[:, :, :, 1, :, :, :, 1] *= 0.5
    with pytest.raises(StrategyError) as err:
        validate_strategy(HermitianOperator(bad.reshape(16, 16), r.layout()), r)
    assert err.value.round_index == 2 and err.value.residual > 1e-8


def test_reordered_strategy_usually_infeasible():
    # reversing the register order of a valid strategy does not give a valid reversed strategy
    rng = np.random.default_rng(3)
    r = RoundStructure.from_dims([2, 2], [2, 2])
    rr = r.reversed()
    failures = 0
    for _ in range(5):
        s = random_strategy(r, [2], rng)
        w = permute_factors(s.op, rr.layout().labels)
        try:
            validate_strategy(HermitianOperator(w.data, rr.layout()), rr)
        except StrategyError:
            failures += 1
    assert failures >= 1


def test_realization_identity_n1():
    r = RoundStructure.from_dims([2], [2])
    s = strategy_from_channels([identity_channel(Layout.of(["X1"], [2]), Layout.of(["Y1"], [2]))], r)
    real = unitary_realization(s)
    assert real.memory_dims == (4, 4)
    assert np.abs(recompose_realization(real).op.data - s.op.data).max() < 1e-12


def test_realization_unitary_channel():
    rng = np.random.default_rng(4)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    r = RoundStructure.from_dims([3], [3])
    s = strategy_from_channels([unitary_channel(q, Layout.of(["X1"], [3]), Layout.of(["Y1"], [3]))], r)
    back = recompose_realization(unitary_realization(s)).op.data
    assert np.abs(back - s.op.data).max() < 1e-10


def test_realization_roundtrip_random():
    rng = np.random.default_rng(5)
    for xs, ys in [([2, 2], [2, 2]), ([3, 1], [1, 2]), ([1, 2, 2], [2, 1, 2])]:
        r = RoundStructure.from_dims(xs, ys)
        s = random_strategy(r, [2] * (r.n - 1), rng)
        real = unitary_realization(s)
        assert rel(recompose_realization(real).op.data, s.op.data) <= 1e-7
        z = real.memory_dims
        assert z == realization_memory_dims(r)
        for k in range(r.n):
            assert z[k] * xs[k] == z[k + 1] * ys[k]
        assert (z[0] <= z[-1]) == (np.prod(ys) <= np.prod(xs))


def test_recompose_identity_unitaries():
    r = RoundStructure.from_dims([2, 3], [2, 3])
    real = UnitaryRealization(np.ones(1, dtype=complex), (1, 1, 1), (np.eye(2), np.eye(3)), r)
    assert np.abs(recompose_realization(real).op.data - identity_strategy(r).data).max() < 1e-14


def test_recompose_any_unitaries_is_feasible():
    rng = np.random.default_rng(6)
    r = RoundStructure.from_dims([2, 2], [2, 2])
    z = (2, 2, 2)
    us = []
    for _ in range(2):
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        us.append(q)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    real = UnitaryRealization(v / np.linalg.norm(v), z, tuple(us), r)
    s = recompose_realization(real)
    assert s.residual <= 1e-10


def test_unitary_realization_validation():
    r = RoundStructure.from_dims([2], [2])
    with pytest.raises(LayoutError):
        UnitaryRealization(np.ones(1), (1, 2), (np.eye(2),), r)
    with pytest.raises(ValueError):
        UnitaryRealization(np.ones(1), (1, 1), (2 * np.eye(2),), r)
    with pytest.raises(ValueError):
        UnitaryRealization(2 * np.ones(1), (1, 1), (np.eye(2),), r)


def test_strategy_value():
    rng = np.random.default_rng(7)
    r = RoundStructure.from_dims([2], [2])
    s = random_strategy(r, [], rng)
    h = HermitianOperator(np.eye(4), r.layout())
    # Tr X = prod of input dims
    assert abs(strategy_value(s, h) - 2) < 1e-12


def test_simulate_completeness():
    rng = np.random.default_rng(8)
    r = RoundStructure.from_dims([2, 2], [2, 2])
    alice, bob, effect = random_protocol(r, rng)
    one = HermitianOperator(np.eye(2), effect.layout)
    zero = HermitianOperator(np.zeros((2, 2)), effect.layout)
    assert abs(simulate_interaction(alice, bob, one, r) - 1) < 1e-12
    assert abs(simulate_interaction(alice, bob, zero, r)) < 1e-15
    p = simulate_interaction(alice, bob, effect, r)
    assert -1e-10 <= p <= 1 + 1e-10
    x = strategy_from_channels(alice, r)
    pi = co_strategy_functional(bob, one, r)
    assert abs(np.vdot(pi.data, x.op.data) - 1) < 1e-12


def test_completeness_on_arbitrary_feasible_strategies():
    rng = np.random.default_rng(9)
    r = RoundStructure.from_dims([2, 3], [3, 2])
    _, bob, effect = random_protocol(r, rng)
    p = co_strategy_functional(bob, HermitianOperator(np.eye(2), effect.layout), r)
    for _ in range(3):
        x = random_strategy(r, [3], rng)
        assert abs(np.vdot(p.data, x.op.data) - 1) < 1e-12


def test_maximally_entangled_echo():
    # Bob sends half of vec(I)/sqrt(2), Alice returns it unchanged, Bob projects back
    r = RoundStructure.from_dims([2], [2])
    phi = np.eye(2).reshape(-1) / np.sqrt(2)
    prep = channel_from_choi(np.outer(phi, phi.conj()), Layout(), Layout.of(["X1", "K"], [2, 2]), "channel")
    relay = identity_channel(Layout.of(["Y1", "K"], [2, 2]), Layout.of(["Q"], [4]))
    effect = HermitianOperator(np.outer(phi, phi.conj()), Layout.of(["Q"], [4]))
    alice = [identity_channel(Layout.of(["X1"], [2]), Layout.of(["Y1"], [2]))]
    # the effect sees (Y1, K) through the relay, in that order
    assert abs(simulate_interaction(alice, [prep, relay], effect, r) - 1) < 1e-12
    p = co_strategy_functional([prep, relay], effect, r)
    x = strategy_from_channels(alice, r)
    assert abs(np.vdot(p.data, x.op.data) - 1) < 1e-12


def test_pairing_matches_simulation_three_rounds():
    for seed in range(3):
        rng = np.random.default_rng(100 + seed)
        r = RoundStructure.from_dims([2, 2, 2], [2, 2, 2])
        alice, bob, effect = random_protocol(r, rng)
        x = strategy_from_channels(alice, r)
        p = co_strategy_functional(bob, effect, r)
        assert abs(np.vdot(p.data, x.op.data).real - simulate_interaction(alice, bob, effect, r)) < 1e-10


def test_simulation_is_linear_in_each_channel():
    rng = np.random.default_rng(10)
    r = RoundStructure.from_dims([2, 2], [2, 2])
    alice, bob, effect = random_protocol(r, rng)
    other = random_channel(alice[0].input_layout, alice[0].output_layout, 2, rng)
    t = 0.3
    mix = alice[0].choi.data * t + other.choi.data * (1 - t)
    maps = lambda c: [(c, alice[0].input_layout, alice[0].output_layout),
                      (alice[1].choi.data, alice[1].input_layout, alice[1].output_layout)]
    lhs = run_interaction(maps(mix), bob, effect)
    rhs = t * run_interaction(maps(alice[0].choi.data), bob, effect) \
        + (1 - t) * run_interaction(maps(other.choi.data), bob, effect)
    assert abs(lhs - rhs) < 1e-12


def test_effect_checks():
    rng = np.random.default_rng(11)
    r = RoundStructure.from_dims([2], [2])
    alice, bob, effect = random_protocol(r, rng)
    with pytest.raises(ValueError):
        simulate_interaction(alice, bob, HermitianOperator(2 * np.eye(2), effect.layout), r)
    with pytest.raises(ValueError):
        simulate_interaction(alice, bob[:1], effect, r)


def test_channel_must_read_its_input():
    r = RoundStructure.from_dims([2, 2], [2, 2])
    c1 = identity_channel(Layout.of(["X1"], [2]), Layout.of(["Y1"], [2]))
    c2 = identity_channel(Layout.of(["Q"], [2]), Layout.of(["Y2"], [2]))
    with pytest.raises(LayoutError):
        strategy_from_channels([c1, c2], r)
    with pytest.raises(ValueError):
        strategy_from_channels([c1], r)


def test_memory_label_distinct_from_rounds():
    assert memory_label(1) not in RoundStructure.from_dims([2], [2]).layout()


@settings(max_examples=10, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 2), st.integers(1, 2)), min_size=1, max_size=2), st.integers(0, 2**32 - 1))
def test_realization_roundtrip_property(dims, seed):
    rng = np.random.default_rng(seed)
    r = RoundStructure.from_dims([d[0] for d in dims], [d[1] for d in dims])
    s = random_strategy(r, [2] * (r.n - 1), rng)
    assert rel(recompose_realization(unitary_realization(s)).op.data, s.op.data) <= 1e-7
