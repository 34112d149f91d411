import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graphs
from gradcheck import probe
from rewire_forge import autodiff as ad
from rewire_forge.env import EnvConfig, enumerate_rewirings, is_feasible
from rewire_forge.errors import ContractError, ParameterError
from rewire_forge.graph import Graph, complete_graph, cycle_graph, gnp_graph
from rewire_forge.metrics import ObjectiveConfig
from rewire_forge.policy import (
    LOG_COLUMNS,
    Decision,
    PPOConfig,
    PolicyNet,
    Transition,
    ValueNet,
    collect,
    dual_clip_objective,
    evaluate_policy,
    gae_advantages,
    load_networks,
    make_networks,
    normalize_advantages,
    observe,
    ppo_loss,
    sample_action,
    save_networks,
    train,
)

SMALL = dict(hidden=16, layers=2, K=2)


@pytest.fixture(scope="module")
def policy():
    return PolicyNet(np.random.default_rng(0), **SMALL)


@pytest.fixture(scope="module")
def value():
    return ValueNet(np.random.default_rng(1), **SMALL)


def test_config_validation():
    with pytest.raises(ParameterError):
        PPOConfig(dual_clip=1.0)
    with pytest.raises(ParameterError):
        PPOConfig(clip_eps=0.0)
    with pytest.raises(ParameterError):
        PPOConfig(minibatch=0)


def test_complete_graph_forces_terminate(policy):
    g = complete_graph(4)
    obs = observe(g, 2)
    assert obs.forced
    (d,), logp = policy.decide([obs], np.random.default_rng(0))
    assert d.kind == "forced" and logp[0] == 0.0
    assert d.action(obs).terminate
    assert policy.action_probability(g, d.action(obs)) == 1.0


def test_edgeless_graph_rejected():
    with pytest.raises(ContractError):
        observe(Graph(3, []), 2)


@pytest.mark.parametrize("seed", range(3))
def test_distribution_over_distinct_actions_sums_to_one(policy, seed):
    g = random_graphs(1, 6, 8, seed=seed + 10, connected=True)[0]
    actions = enumerate_rewirings(g)
    assert actions
    total = policy.action_probability(g, actions[0].stop())
    total += sum(policy.action_probability(g, a) for a in actions)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_infeasible_action_has_zero_probability(policy):
    g = cycle_graph(6)
    from rewire_forge.env import RewiringAction

    bad = RewiringAction.rewire(0, 1, 1, 2)
    assert not is_feasible(g, bad)
    assert policy.action_probability(g, bad) == 0.0


def test_masked_partners_have_zero_probability(policy):
    g = gnp_graph(9, 0.4, 3)
    obs = observe(g, 2)
    emb = policy.encode([obs])
    L1, m1 = policy.first_logp(emb, [obs])
    # masked slots carry a placeholder; the effective distribution is exp(L) on the mask
    p1 = np.where(m1[0], np.exp(L1.data[0]), 0.0)
    assert not m1[0][np.flatnonzero(~obs.first_mask)].any()
    k = int(np.flatnonzero(obs.first_mask)[0])
    mask = obs.partner_mask(obs.edges[k])
    L2, m2 = policy.second_logp(emb, [obs], np.array([k]), [mask])
    assert np.array_equal(m2[0], mask)
    p = np.where(m2[0], np.exp(L2.data[0]), 0.0)
    assert abs(p.sum() - 1.0) <= 1e-12
    assert abs(p1.sum() - 1.0) <= 1e-12
    d = Decision("rewire", e1=k, e2=int(np.flatnonzero(~mask)[0]), e2_mask=mask)
    with pytest.raises(ContractError):
        policy.evaluate([obs], [d])


@given(st.integers(0, 10_000))
def test_sampled_actions_are_feasible(seed):
    pol = PolicyNet(np.random.default_rng(seed % 7), **SMALL)
    g = random_graphs(1, 5, 10, seed=seed)[0]
    if g.num_edges == 0:
        return
    obs = observe(g, 2)
    rng = np.random.default_rng(seed)
    for greedy in (False, True):
        (d,), logp = pol.decide([obs], rng, greedy=greedy)
        a = d.action(obs)
        if d.kind == "forced":
            assert not enumerate_rewirings(g)
        if not a.terminate:
            assert is_feasible(g, a)
        assert np.isfinite(logp[0]) and logp[0] <= 0.0


def test_stored_log_prob_matches_recomputation(policy):
    graphs = random_graphs(6, 6, 12, seed=4)
    obs = [observe(g, 2) for g in graphs if g.num_edges]
    decisions, logp = policy.decide(obs, np.random.default_rng(3))
    again, _ = policy.evaluate(obs, decisions)
    assert np.abs(again.data - logp).max() <= 1e-10


def test_sampled_log_prob_is_one_of_four_forms(policy):
    g = gnp_graph(8, 0.4, 5)
    obs = observe(g, 2)
    rng = np.random.default_rng(0)
    seen = 0
    for _ in range(5):
        (d,), logp = policy.decide([obs], rng)
        if d.kind != "rewire":
            continue
        seen += 1
        a, c, b, dd = d.action(obs).nodes
        forms = []
        for A, C, B, D in {(a, c, b, dd), (c, a, dd, b), (b, dd, a, c), (dd, b, c, a)}:
            k1 = obs.pos[(A, C)]
            forms.append(Decision("rewire", e1=k1, e2=obs.pos[(B, D)], e2_mask=obs.partner_mask(obs.edges[k1])))
        lp, _ = policy.evaluate([obs] * len(forms), forms)
        assert np.min(np.abs(lp.data - logp[0])) <= 1e-10
        assert np.exp(lp.data).sum() == pytest.approx(policy.action_probability(g, d.action(obs)), rel=1e-12)
    assert seen


def test_sample_frequencies_match_probabilities():
    pol = PolicyNet(np.random.default_rng(2), hidden=8, layers=1, K=1)
    g = Graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    actions = enumerate_rewirings(g)
    probs = {a.nodes: pol.action_probability(g, a) for a in actions}
    rng = np.random.default_rng(1)
    counts = {k: 0 for k in probs}
    stops = 0
    n = 3000
    obs = observe(g, 1)
    for _ in range(n):
        (d,), _ = pol.decide([obs], rng)
        a = d.action(obs)
        if a.terminate:
            stops += 1
        else:
            counts[a.canonical().nodes] += 1
    for k, p in probs.items():
        assert abs(counts[k] / n - p) <= 4 * np.sqrt(p * (1 - p) / n) + 1e-3


def test_gae_lambda_one_is_monte_carlo():
    r = np.array([1.0, -0.5, 2.0, 0.25, 3.0])
    v = np.array([0.3, 0.1, -0.2, 0.5, 0.4])
    done = np.array([False, False, True, False, True])
    adv, ret = gae_advantages(r, v, done, gamma=1.0, lam=1.0)
    mc = np.array([2.5, 1.5, 2.0, 3.25, 3.0])
    assert np.allclose(adv, mc - v, atol=1e-12)
    assert np.allclose(ret, mc, atol=1e-12)


def test_gae_perfect_value_gives_zero():
    r = np.array([1.0, 2.0, 3.0])
    v = np.array([6.0, 5.0, 3.0])
    adv, _ = gae_advantages(r, v, [False, False, True], gamma=1.0, lam=0.95)
    assert np.abs(adv).max() <= 1e-12


def test_gae_example():
    adv, _ = gae_advantages([1.0, 1.0], [0.0, 0.0], [False, True], gamma=1.0, lam=0.5)
    assert adv.tolist() == [1.5, 1.0]


def test_gae_length_mismatch():
    with pytest.raises(ParameterError):
        gae_advantages([1.0], [0.0, 0.0], [True])


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40))
def test_normalized_advantages(vals):
    out = normalize_advantages(np.array(vals))
    if np.std(vals) > 1e-6:
        assert abs(out.mean()) <= 1e-10 and abs(out.std() - 1.0) <= 1e-10
    assert np.all(np.isfinite(out))


def test_normalize_constant_is_zero():
    assert normalize_advantages(np.full(5, 3.0)).tolist() == [0.0] * 5


@given(st.floats(0.0, 50.0), st.floats(-5.0, 5.0).filter(lambda a: abs(a) > 1e-9))
def test_dual_clip_bounds(r, a):
    out = dual_clip_objective(ad.Tensor(np.array([r])), np.array([a]), 0.2, 10.0).data[0]
    surr = min(r * a, float(np.clip(r, 0.8, 1.2)) * a)
    if a < 0:
        assert out >= 10.0 * a
        assert out == max(surr, 10.0 * a)
    else:
        assert out == surr


def test_dual_clip_at_unit_ratio():
    adv = np.array([-2.0, 0.5, 3.0])
    assert dual_clip_objective(ad.Tensor(np.ones(3)), adv, 0.2, 10.0).data.tolist() == adv.tolist()
    # large ratio, negative advantage: floored at c*A exactly
    assert dual_clip_objective(ad.Tensor(np.array([40.0])), np.array([-2.0]), 0.2, 10.0).data[0] == -20.0


def _batch(policy, value, graphs, seed, jitter=True):
    rng = np.random.default_rng(seed)
    obs = [observe(g, policy.K) for g in graphs]
    decisions, logp = policy.decide(obs, rng)
    with ad.no_grad():
        vals = value(obs).data
    if jitter:
        # move the old log-probs off the current ones so ratios avoid the clip kinks
        logp = logp + rng.uniform(-0.5, 0.5, size=len(logp))
    batch = [Transition(o, d, float(lp), float(v), 0.0, True) for o, d, lp, v in zip(obs, decisions, logp, vals)]
    adv = rng.normal(size=len(batch))
    returns = rng.normal(size=len(batch))
    return batch, adv, returns


def test_ppo_loss_gradient_one_transition():
    pol = PolicyNet(np.random.default_rng(5), hidden=8, layers=2, K=2)
    val = ValueNet(np.random.default_rng(6), hidden=8, layers=2, K=2)
    g = gnp_graph(7, 0.5, 1)
    rng = np.random.default_rng(0)
    batch = None
    for seed in range(50):
        batch, adv, returns = _batch(pol, val, [g], seed)
        if batch[0].decision.kind == "rewire":
            break
    assert batch[0].decision.kind == "rewire"
    cfg = PPOConfig()
    errs = probe(lambda: ppo_loss(pol, val, batch, adv, returns, cfg)[0], pol.parameters() + val.parameters(), rng, 120)
    assert errs.max() <= 1e-4


def test_collect_returns_complete_episodes(policy, value):
    cfg = PPOConfig(batch=10, num_envs=2, **SMALL)
    env = EnvConfig(ObjectiveConfig(alpha=1.0), 3)
    batch, gains = collect(policy, value, [gnp_graph(8, 0.4, 2)], env, cfg, np.random.default_rng(0))
    assert len(batch) >= 10
    assert batch[-1].done
    assert len(gains) == sum(t.done for t in batch)
    episode_len = 0
    for t in batch:
        episode_len += 1
        assert episode_len <= 3
        if t.done:
            episode_len = 0


def test_sample_action_api(policy, value):
    a, logp, v = sample_action(cycle_graph(8), policy, value, np.random.default_rng(0))
    assert logp <= 0.0 and np.isfinite(v)
    assert a.terminate or is_feasible(cycle_graph(8), a)


def test_evaluate_policy_on_forced_graph(policy):
    rep = evaluate_policy(policy, complete_graph(4), EnvConfig(ObjectiveConfig(alpha=1.0), 5))
    assert rep.rewirings_used == 0 and rep.gain_percent == 0.0
    assert rep.extra["reversals"] == 0


def test_greedy_evaluation_is_deterministic(policy):
    env = EnvConfig(ObjectiveConfig(alpha=1.0), 4)
    g = gnp_graph(9, 0.4, 7)
    a, b = evaluate_policy(policy, g, env), evaluate_policy(policy, g, env)
    assert [x.nodes for x in a.actions] == [x.nodes for x in b.actions]
    assert a.final_objective == b.final_objective


def _short_train(tmp=None):
    cfg = PPOConfig(batch=16, minibatch=8, num_envs=4, epochs=1, **SMALL)
    env = EnvConfig(ObjectiveConfig(alpha=1.0), 2)
    return train([gnp_graph(7, 0.45, 19)], env, cfg, seed=3, total_steps=32, checkpoint_dir=tmp)


def test_training_is_reproducible(tmp_path):
    a = _short_train(tmp_path / "ck")
    b = _short_train()
    assert a.log_csv() == b.log_csv()
    assert a.log_csv().splitlines()[0] == ",".join(LOG_COLUMNS)
    pa = a.policy.state_dict()
    assert all(np.array_equal(v, b.policy.state_dict()[k]) for k, v in pa.items())
    pol, val, meta = load_networks(tmp_path / "ck")
    assert meta["seed"] == 3 and meta["ppo"]["batch"] == 16
    assert all(np.array_equal(v, pol.state_dict()[k]) for k, v in pa.items())
    g = gnp_graph(7, 0.45, 19)
    obs = [observe(g, 2)]
    with ad.no_grad():
        assert np.array_equal(val(obs).data, a.value(obs).data)


def test_checkpoint_round_trip(tmp_path, policy, value):
    cfg = PPOConfig(**SMALL)
    save_networks(tmp_path / "ck", policy, value, cfg)
    pol, val, meta = load_networks(tmp_path / "ck")
    g = gnp_graph(8, 0.5, 0)
    a = policy.action_probability(g, enumerate_rewirings(g)[0])
    assert pol.action_probability(g, enumerate_rewirings(g)[0]) == a


def test_make_networks_seeded():
    cfg = PPOConfig(**SMALL)
    a, _ = make_networks(cfg, 4)
    b, _ = make_networks(cfg, 4)
    assert all(np.array_equal(v, b.state_dict()[k]) for k, v in a.state_dict().items())
    assert np.all(a.pi0.layers[-1].bias.data == cfg.stop_bias)


def test_train_rejects_bad_arguments():
    env = EnvConfig(ObjectiveConfig(alpha=1.0), 2)
    with pytest.raises(ParameterError):
        train([], env, PPOConfig(**SMALL), 0, 10)
    with pytest.raises(ParameterError):
        train(cycle_graph(6), env, PPOConfig(**SMALL), 0, 0)


def test_decision_stop_action():
    obs = observe(cycle_graph(6), 2)
    assert Decision("stop").action(obs).terminate
