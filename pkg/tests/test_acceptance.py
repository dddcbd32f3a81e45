"""Acceptance suite: twelve seeded checks at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line. pytest repeats the lines in its
terminal summary, and ``python tests/test_acceptance.py`` prints them directly.
Instances are cached so the solver-health check reuses every SDP solved by the
other criteria.
"""

import functools
import sys
import time

import numpy as np

from combforge.campaign import random_rounds, reversal_trial
from combforge.channels import random_channel, random_hermitian, random_pure_state
from combforge.entropy import (
    four_message_layout,
    four_message_values,
    h_max,
    h_min,
    pure_state,
    statement_equivalence,
    tripartite_layout,
    verify_statement_equivalence,
)
from combforge.linalg import Layout, partial_trace
from combforge.reversal import corollary_check, optimum_pair
from combforge.rng import trial_rng
from combforge.strategies import (
    RoundStructure,
    co_strategy_functional,
    memory_label,
    random_protocol,
    random_strategy,
    recompose_realization,
    simulate_interaction,
    strategy_from_channels,
    unitary_realization,
)
from oracles import guessing_oracle

SEED = 20240601
LINES = []


def report(k, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{k:2d}] {name}: {detail}"
    LINES.append(line)
    print(line)
    assert ok


@functools.lru_cache(maxsize=None)
def rank_one_instances():
    out = []
    for t in range(50):
        rng = trial_rng(SEED + 1, t)
        rounds = random_rounds(rng, (1, 2), 3)
        out.append(corollary_check(random_pure_state(rounds.layout(), rng), rounds))
    return out


@functools.lru_cache(maxsize=None)
def reversal_records():
    fwd = [reversal_trial(SEED + 2, t, mode="maximize", ns=(1, 2), max_dim=2) for t in range(25)]
    match = [reversal_trial(SEED + 3, t, mode="match", ns=(1, 2), max_dim=2) for t in range(25)]
    return fwd, match


@functools.lru_cache(maxsize=None)
def entropy_instances():
    out = []
    for t, dims in enumerate([(2, 2, 2)] * 20 + [(2, 3, 2)] * 10):
        rng = trial_rng(SEED + 6, t)
        lay = tripartite_layout(*dims)
        full = pure_state(random_pure_state(lay, rng), lay)
        lo = h_min(partial_trace(full, ["Z"]), ["X"])
        hi = h_max(partial_trace(full, ["Y"]), ["X"])
        out.append((dims, lo, hi))
    return out


@functools.lru_cache(maxsize=None)
def closed_form_instances():
    out = []
    for t in range(10):
        rng = trial_rng(SEED + 7, t)
        dx, dy = (2, 2) if t < 5 else (2, 3) if t < 8 else (3, 2)
        lay = Layout.of(["X", "Y"], [dx, dy])
        psi = random_pure_state(lay, rng)
        lam = np.linalg.svd(psi.reshape(dx, dy), compute_uv=False) ** 2
        target = float(np.sum(np.sqrt(lam)) ** 2)
        out.append((target, guessing_oracle(psi, dx, dy), h_min(pure_state(psi, lay), ["X"])))
    return out


@functools.lru_cache(maxsize=None)
def four_message_instances():
    lay = four_message_layout(2, 2, 2, 2)
    return [four_message_values(random_pure_state(lay, trial_rng(SEED + 8, t)), lay) for t in range(10)]


@functools.lru_cache(maxsize=None)
def counterexample_search():
    r = RoundStructure.from_dims([2], [2])
    runs = []
    for t in range(1000):
        res = optimum_pair(random_hermitian(r.layout(), trial_rng(SEED + 9, t)), r)
        runs.append(res)
        if res.difference > 1e-2:
            break
    return runs


def all_solutions():
    sols = []
    for c in rank_one_instances():
        sols += [c.forward.solution, c.reversed.solution]
    for _, lo, hi in entropy_instances():
        sols += [lo.solution, hi.solution]
    sols += [h.solution for _, _, h in closed_form_instances()]
    for v in four_message_instances():
        sols += list(v.solutions.values())
    for c in counterexample_search():
        sols += [c.forward.solution, c.reversed.solution]
    return sols


def test_01_forward_reversed_optima():
    t0 = time.perf_counter()
    res = rank_one_instances()
    worst = max(c.difference / max(1.0, c.forward_opt) for c in res)
    elapsed = time.perf_counter() - t0
    report(1, "forward/reversed optima agree", worst <= 1e-5 and len(res) == 50,
           f"50 rank-one instances, max relative difference {worst:.2e}, {elapsed:.0f}s")


def test_02_maximize_inequality():
    fwd, _ = reversal_records()
    resid = max(r["validation_residual"] for r in fwd)
    slack = min(r["reversed"] - r["forward"] for r in fwd)
    report(2, "maximize-mode reversal", resid <= 1e-8 and slack >= -1e-8,
           f"25 instances, max validation residual {resid:.2e}, min(reversed - forward) {slack:.2e}")


def test_03_match_equality():
    _, match = reversal_records()
    ok_dims = all(np.prod(r["y_dims"]) <= np.prod(r["x_dims"]) for r in match)
    diff = max(abs(r["reversed"] - r["forward"]) for r in match)
    report(3, "match-mode reversal", ok_dims and diff <= 1e-8 and all(r["passed"] for r in match),
           f"25 instances with prod y <= prod x, max |reversed - forward| {diff:.2e}")


def test_04_value_bridge():
    fwd, match = reversal_records()
    bridge = max(r["bridge"] for r in fwd + match)
    report(4, "value bridge", bridge <= 1e-10, f"50 instances, max bridge residual {bridge:.2e}")


def test_05_realization_roundtrip():
    worst, largest, count = 0.0, 0, 0
    t = 0
    while count < 25:
        rng = trial_rng(SEED + 5, t)
        t += 1
        n = int(rng.integers(1, 4))
        xs, ys = list(rng.integers(1, 5, n)), list(rng.integers(1, 5, n))
        total = int(np.prod(xs) * np.prod(ys))
        if total > 256:
            continue
        r = RoundStructure.from_dims(xs, ys)
        x = random_strategy(r, list(rng.integers(1, 4, n - 1)), rng)
        back = recompose_realization(unitary_realization(x)).op.data
        worst = max(worst, np.linalg.norm(x.op.data - back) / np.linalg.norm(x.op.data))
        largest = max(largest, total)
        count += 1
    report(5, "realization roundtrip", worst <= 1e-7,
           f"25 strategies up to total dim {largest}, max relative error {worst:.2e}")


def test_06_min_max_identity():
    res = entropy_instances()
    worst = {d: max(abs(lo.value + hi.value) for dd, lo, hi in res if dd == d) for d in [(2, 2, 2), (2, 3, 2)]}
    report(6, "min/max entropy identity", max(worst.values()) <= 1e-4,
           f"20 x (2,2,2) max {worst[(2, 2, 2)]:.2e} bits, 10 x (2,3,2) max {worst[(2, 3, 2)]:.2e} bits")


def test_07_closed_form():
    res = closed_form_instances()
    oracle = max(abs(o - t) / t for t, o, _ in res)
    sdp = max(abs(h.optimum - t) for t, _, h in res)
    report(7, "pure bipartite min-entropy closed form", oracle <= 1e-6 and sdp <= 1e-6,
           f"10 states, oracle vs closed form {oracle:.2e}, SDP vs closed form {sdp:.2e}")


def test_08_four_message():
    res = four_message_instances()
    sides = max(abs(v.lhs - v.rhs) for v in res)
    square = max(abs(v.strategy_opt_forward - v.lhs ** 2) for v in res)
    report(8, "four-message identity", sides <= 1e-5 and square <= 1e-5,
           f"10 instances, max |lhs - rhs| {sides:.2e}, max |forward - lhs^2| {square:.2e}")


def test_09_negative_control():
    runs = counterexample_search()
    diff = runs[-1].difference
    report(9, "non-rank-one objective breaks equality", diff > 1e-2 and len(runs) <= 1000,
           f"found at trial {len(runs) - 1}, |forward - reversed| {diff:.3f}")


def test_10_interaction_functional():
    r = RoundStructure.from_dims([2, 2, 2], [2, 2, 2])
    worst = 0.0
    for t in range(10):
        alice, bob, effect = random_protocol(r, trial_rng(SEED + 10, t))
        prob = simulate_interaction(alice, bob, effect, r)
        x = strategy_from_channels(alice, r)
        p = co_strategy_functional(bob, effect, r)
        worst = max(worst, abs(np.vdot(p.data, x.op.data).real - prob))
    report(10, "interaction functional", worst <= 1e-10, f"10 six-message protocols, max difference {worst:.2e}")


def test_11_solver_health():
    sols = all_solutions()
    gap = max(s.gap for s in sols)
    res = max(s.residuals.primal_eq for s in sols)
    weak = max(s.weak_duality_violation for s in sols)
    ok = all(s.status == "optimal" for s in sols) and gap <= 1e-7 and res <= 1e-8 and weak <= 1e-9
    report(11, "solver health", ok,
           f"{len(sols)} SDPs, max gap {gap:.2e}, max primal residual {res:.2e}, max weak-duality violation {weak:.2e}")


def random_sequence(rng):
    n = int(rng.integers(1, 3))
    r = RoundStructure.from_dims(list(rng.integers(1, 4, n)), list(rng.integers(1, 4, n)))
    z = [1] + [2] * (n - 1) + [1]
    phis = []
    for k, (x, xd, y, yd) in enumerate(r.rounds):
        inp = Layout(((memory_label(k), z[k]), (x, xd)))
        out = Layout(((y, yd), (memory_label(k + 1), z[k + 1])))
        phis.append(random_channel(inp, out, inp.total_dim, rng))
    return phis, r


def test_12_statement_equivalence():
    worst, ok = 0.0, True
    for t in range(10):
        phis, r = random_sequence(trial_rng(SEED + 12, t))
        ok &= verify_statement_equivalence(phis, r)
        worst = max(worst, statement_equivalence(phis, r).agreement)
    report(12, "statement equivalence", ok and worst <= 1e-8, f"10 channel sequences, max agreement {worst:.2e}")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
