import io
import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graphs, to_nx
from rewire_forge.errors import ContractError, FeasibilityError, ParameterError
from rewire_forge.graph import EdgeRef, Graph, ba_generate, complete_graph, path_graph
from rewire_forge.env import (
    EnvConfig,
    RewiringAction,
    RewiringEnv,
    action_space_bound,
    action_space_size,
    apply_rewiring,
    check_feasible,
    enumerate_rewirings,
    feasible_partners,
    has_partner,
    is_feasible,
    read_episode_log,
    replay,
    sample_rewiring,
    step,
)
from rewire_forge.metrics import ObjectiveConfig, combined_objective, global_efficiency

TWO_EDGES = Graph(4, [(0, 1), (2, 3)])


def brute_partners(g, e1):
    a, c = e1
    out = []
    for b, d in itertools.permutations(range(g.n), 2):
        if len({a, b, c, d}) < 4 or not g.has_edge(b, d):
            continue
        if any(g.has_edge(x, y) for x, y in ((a, b), (c, d), (a, d), (b, c))):
            continue
        out.append(EdgeRef(b, d))
    return sorted(out)


def test_feasible_partner_examples():
    k4 = complete_graph(4)
    assert all(feasible_partners(k4, e) == [] for e in k4.directed_edges())
    assert feasible_partners(TWO_EDGES, EdgeRef(0, 1)) == [EdgeRef(2, 3), EdgeRef(3, 2)]
    assert feasible_partners(path_graph(3), EdgeRef(0, 1)) == []


def test_feasible_partners_match_brute_force():
    for g in random_graphs(30, seed=8):
        for e in g.directed_edges():
            ref = brute_partners(g, e)
            assert feasible_partners(g, e) == ref
            assert has_partner(g, e) == bool(ref)


def test_feasible_partners_requires_edge():
    with pytest.raises(ContractError):
        feasible_partners(path_graph(3), EdgeRef(0, 2))


def test_action_space_counts():
    assert action_space_size(complete_graph(4)) == 0
    assert action_space_size(TWO_EDGES) == 8
    g = ba_generate(15, 2, 0)
    assert action_space_bound(g) == 5832
    assert action_space_size(g) <= 5832
    assert action_space_size(g) <= 2 * (2 * g.num_edges) * (2 * g.num_edges - 1)


def test_ba15_seed0_action_space_frozen():
    g = ba_generate(15, 2, 0)
    assert action_space_size(g) == 512
    assert len(enumerate_rewirings(g)) == 128  # four ordered forms per rewiring


def test_apply_example():
    out = apply_rewiring(TWO_EDGES, RewiringAction.rewire(0, 1, 2, 3))
    assert out.edge_set() == frozenset({(0, 2), (1, 3)})
    assert TWO_EDGES.edge_set() == frozenset({(0, 1), (2, 3)})


@pytest.mark.parametrize(
    "edges,action,constraint",
    [
        ([(0, 1), (2, 3), (0, 3)], (0, 1, 2, 3), "AD-absent"),
        ([(0, 1), (2, 3), (1, 2)], (0, 1, 2, 3), "BC-absent"),
        ([(0, 1), (2, 3), (0, 2)], (0, 1, 2, 3), "AB-absent"),
        ([(0, 1), (2, 3), (1, 3)], (0, 1, 2, 3), "CD-absent"),
        ([(0, 1), (2, 3)], (0, 2, 1, 3), "e1-present"),
        ([(0, 1), (2, 3), (3, 4)], (0, 1, 2, 4), "e2-present"),
        ([(0, 1), (1, 2)], (0, 1, 1, 2), "distinct-nodes"),
        ([(0, 1), (2, 3)], (0, 1, 2, 9), "node-range"),
    ],
)
def test_feasibility_errors_name_constraint(edges, action, constraint):
    g = Graph(5, edges)
    with pytest.raises(FeasibilityError) as exc:
        apply_rewiring(g, RewiringAction.rewire(*action))
    assert exc.value.constraint == constraint
    assert not is_feasible(g, RewiringAction.rewire(*action))


def test_forbid_disconnecting():
    # a 6-cycle rewired into two triangles
    g = Graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)])
    a = RewiringAction.rewire(2, 3, 0, 5)
    assert is_feasible(g, a)
    split = apply_rewiring(g, a)
    assert not split.is_connected()
    with pytest.raises(FeasibilityError) as exc:
        apply_rewiring(g, a, forbid_disconnecting=True)
    assert exc.value.constraint == "keeps-connected"


def test_action_validation():
    with pytest.raises(ParameterError):
        RewiringAction(True, EdgeRef(0, 1))
    with pytest.raises(ParameterError):
        RewiringAction(False, EdgeRef(0, 1))


def test_canonical_forms_have_same_effect():
    g = ba_generate(15, 2, 3)
    for a in enumerate_rewirings(g)[:30]:
        A, C, B, D = a.nodes
        forms = [(A, C, B, D), (C, A, D, B), (B, D, A, C), (D, B, C, A)]
        results = {apply_rewiring(g, RewiringAction.rewire(*f)) for f in forms}
        assert len(results) == 1
        assert all(RewiringAction.rewire(*f).canonical() == a for f in forms)


def test_enumeration_counts_distinct_results():
    for g in random_graphs(15, n_hi=12, seed=10):
        acts = enumerate_rewirings(g)
        graphs = {apply_rewiring(g, a) for a in acts}
        assert len(graphs) == len(acts)
        assert 4 * len(acts) == action_space_size(g)


@given(seed=st.integers(0, 10_000))
def test_random_rewirings_preserve_degrees(seed):
    rng = np.random.default_rng(seed)
    g = ba_generate(20, 2, seed)
    deg, m = g.degrees(), g.num_edges
    for _ in range(30):
        a = sample_rewiring(g, rng)
        g = apply_rewiring(g, a)
        g.check_invariants()
        assert g.degrees() == deg and g.num_edges == m


def test_sample_rewiring_none_when_infeasible(rng):
    assert sample_rewiring(complete_graph(4), rng) is None
    assert sample_rewiring(path_graph(3), rng) is None


def test_sample_rewiring_is_uniform():
    g = Graph(6, [(0, 1), (2, 3), (4, 5)])
    acts = enumerate_rewirings(g)
    rng = np.random.default_rng(0)
    counts = {a: 0 for a in acts}
    n = 12000
    for _ in range(n):
        counts[sample_rewiring(g, rng).canonical()] += 1
    expected = n / len(acts)
    assert all(abs(c - expected) < 5 * np.sqrt(expected) for c in counts.values())


def test_step_terminate():
    cfg = EnvConfig()
    g = ba_generate(10, 2, 0)
    res = step(g, RewiringAction.stop(), cfg)
    assert res.reward == 0.0 and res.done and res.next_graph == g


def test_step_reward_scaled_gain():
    cfg = EnvConfig(ObjectiveConfig(alpha=0.5), reward_scale=10.0)
    g = ba_generate(15, 2, 1)
    a = sample_rewiring(g, np.random.default_rng(0))
    res = step(g, a, cfg)
    gain = combined_objective(res.next_graph, cfg.objective) - combined_objective(g, cfg.objective)
    assert res.reward == pytest.approx(10.0 * gain, abs=1e-15)
    assert res.info["gain"] == gain


def test_step_then_reverse_is_zero_total():
    cfg = EnvConfig()
    g = ba_generate(15, 2, 2)
    a = sample_rewiring(g, np.random.default_rng(1))
    r1 = step(g, a, cfg)
    A, C, B, D = a.nodes
    back = RewiringAction.rewire(A, B, C, D)  # removes AB and CD, restores AC and BD
    assert a.inverse_of(back)
    r2 = step(r1.next_graph, back, cfg, t=1)
    assert r2.next_graph == g
    assert r1.info["gain"] + r2.info["gain"] == pytest.approx(0.0, abs=1e-15)


def test_utility_improving_rewiring_joins_two_triangles():
    import networkx as nx

    g = Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    a = RewiringAction.rewire(2, 0, 3, 5)  # gives the 6-cycle 0-1-2-3-4-5-0
    after = apply_rewiring(g, a)
    before_eff = nx.global_efficiency(to_nx(g))
    after_eff = nx.global_efficiency(to_nx(after))
    assert after_eff > before_eff
    res = step(g, a, EnvConfig(ObjectiveConfig(alpha=0.0)))
    assert res.reward == pytest.approx(10.0 * (after_eff - before_eff), abs=1e-12)
    assert res.reward > 0


def test_budget_and_done():
    cfg = EnvConfig(max_rewiring_budget=2)
    env = RewiringEnv(cfg, ba_generate(15, 2, 0))
    rng = np.random.default_rng(0)
    assert not env.step(sample_rewiring(env.graph, rng)).done
    assert env.step(sample_rewiring(env.graph, rng)).done
    with pytest.raises(ContractError):
        env.step(RewiringAction.stop())
    with pytest.raises(ContractError):
        step(env.graph, RewiringAction.stop(), cfg, t=2)


def test_env_config_validation():
    with pytest.raises(ParameterError):
        EnvConfig(max_rewiring_budget=0)
    with pytest.raises(ParameterError):
        EnvConfig(reward_scale=0.0)


def test_episode_log_replay_is_bit_identical():
    cfg = EnvConfig(ObjectiveConfig(alpha=0.5), max_rewiring_budget=10)
    g = ba_generate(20, 2, 4)
    env = RewiringEnv(cfg, g)
    rng = np.random.default_rng(2)
    while not env.done:
        env.step(sample_rewiring(env.graph, rng))
    buf = io.StringIO()
    env.write_log(buf)
    recs = read_episode_log(io.StringIO(buf.getvalue()))
    assert [r["t"] for r in recs] == list(range(10))
    assert set(recs[0]) == {"t", "action", "reward", "objective_components"}
    actions = [RewiringAction.from_json(r["action"]) for r in recs]
    assert replay(g, actions) == env.graph
    assert json.loads(json.dumps(actions[0].to_json())) == actions[0].to_json()


@given(seed=st.integers(0, 10_000))
def test_telescoping(seed):
    rng = np.random.default_rng(seed)
    cfg = EnvConfig(ObjectiveConfig(alpha=float(rng.uniform())), max_rewiring_budget=8)
    env = RewiringEnv(cfg, ba_generate(14, 2, seed))
    total = 0.0
    while not env.done:
        a = sample_rewiring(env.graph, rng) if rng.random() > 0.1 else RewiringAction.stop()
        total += env.step(a).info["gain"]
    assert abs(total - (env.objective - env.initial_objective)) <= 1e-12
