"""Autoregressive rewiring policy, value network and dual-clip PPO.

An action is factored as terminate-bit, first edge, second edge:

    log P(a) = log P(a0) + log P(e1 | a0) + log P(e2 | a0, e1)

The first edge is picked by a pointer over directed edges that have at least
one feasible partner, then flipped with probability 1/2, so its probability
is the mean of the pointer probabilities of both orientations. The second
edge is a pointer over the feasible partners of the first. When no first
edge exists the terminate action is forced and has probability 1.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .baselines import OptimizerReport
from .env import EnvConfig, RewiringAction, RewiringEnv, feasible_partners, has_partner, is_feasible
from .errors import ContractError, ParameterError, TrainingError
from .firegnn import DEFAULT_K, EncoderBatch, FireGNN, build_filtration
from .graph import EdgeRef, Graph
from .metrics import gain_percent
from .nn import MLP, Adam, Linear, Module, load_checkpoint, save_checkpoint, uniform_init

LOG2 = math.log(2.0)
LOG_COLUMNS = ("update", "mean_gain", "policy_loss", "value_loss", "entropy", "env_steps", "eval_gain")


@dataclass(frozen=True)
class PPOConfig:
    clip_eps: float = 0.2
    dual_clip: float = 10.0
    gae_lambda: float = 0.95
    gamma: float = 1.0
    batch: int = 256
    minibatch: int = 64
    lr: float = 7e-4
    epochs: int = 4
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    max_grad_norm: float = 0.5
    num_envs: int = 8
    hidden: int = 64
    layers: int = 5
    K: int = DEFAULT_K
    stop_bias: float = -3.0

    def __post_init__(self):
        if self.dual_clip <= 1:
            raise ParameterError("dual_clip must be > 1")
        if self.batch <= 0 or self.minibatch <= 0:
            raise ParameterError("batch and minibatch must be > 0")
        if not 0 < self.clip_eps < 1:
            raise ParameterError("clip_eps must lie in (0, 1)")
        if self.epochs < 1 or self.num_envs < 1:
            raise ParameterError("epochs and num_envs must be >= 1")


# -- observations and decisions --------------------------------------------------

@dataclass
class Observation:
    """A graph with everything the networks need precomputed."""

    graph: Graph
    filt: object
    edges: list[EdgeRef]
    pos: dict
    first_mask: np.ndarray   # directed edges with a non-empty partner set

    @property
    def forced(self) -> bool:
        return not self.first_mask.any()

    def partner_mask(self, e1: EdgeRef) -> np.ndarray:
        mask = np.zeros(len(self.edges), dtype=bool)
        for e in feasible_partners(self.graph, e1):
            mask[self.pos[tuple(e)]] = True
        return mask


def observe(g: Graph, K: int) -> Observation:
    if g.num_edges == 0:
        raise ContractError("the policy needs a graph with at least one edge")
    edges = g.directed_edges()
    return Observation(
        graph=g,
        filt=build_filtration(g, max(0, min(K, g.n - 1))),
        edges=edges,
        pos={tuple(e): k for k, e in enumerate(edges)},
        first_mask=np.array([has_partner(g, e) for e in edges], dtype=bool),
    )


@dataclass
class Decision:
    """One sampled action in index form. ``e1``/``e2`` index ``Observation.edges``."""

    kind: str                          # "forced", "stop" or "rewire"
    e1: int = -1                       # final orientation
    e2: int = -1
    e2_mask: np.ndarray | None = None

    def action(self, obs: Observation) -> RewiringAction:
        if self.kind != "rewire":
            return RewiringAction.stop()
        return RewiringAction(False, obs.edges[self.e1], obs.edges[self.e2])


def _reverse_index(obs: Observation, k: int) -> int:
    return obs.pos[tuple(obs.edges[k].reversed())]


# -- networks ----------------------------------------------------------------------

class Pointer(Module):
    """Additive attention ``v . tanh(W1 q + W2 h(e))`` scoring edges against a query."""

    def __init__(self, dim: int, rng: np.random.Generator):
        self.w_query = Linear(dim, dim, rng, bias=False)
        self.w_key = Linear(dim, dim, rng)
        self.v = ad.parameter(uniform_init(rng, dim, (dim,)))

    def __call__(self, query: Tensor, keys: Tensor, key_owner: np.ndarray) -> Tensor:
        q = ad.take_rows(self.w_query(query), key_owner)
        return ad.matmul(ad.tanh(ad.add(q, self.w_key(keys))), self.v)


def _padded(scores: Tensor, offsets: np.ndarray, width: int) -> Tensor:
    """Scatter a flat per-edge vector into a ``(B, width)`` matrix, zero padded."""
    B = len(offsets) - 1
    idx = np.full((B, width), int(offsets[-1]), dtype=np.int64)
    for b in range(B):
        n = offsets[b + 1] - offsets[b]
        idx[b, :n] = np.arange(offsets[b], offsets[b + 1])
    flat = ad.concat([scores, Tensor(np.zeros(1))], axis=0)
    return ad.reshape(ad.take_rows(flat, idx.ravel()), (B, width))


def _mask_matrix(masks: list[np.ndarray], width: int) -> np.ndarray:
    out = np.zeros((len(masks), width), dtype=bool)
    for b, m in enumerate(masks):
        out[b, : len(m)] = m
    return out


def _masked_entropy(logp: Tensor, mask: np.ndarray) -> Tensor:
    p = ad.mul(ad.exp(logp), mask.astype(np.float64))
    return ad.mul(ad.sum(ad.mul(p, logp), axis=1), -1.0)


class PolicyNet(Module):
    def __init__(self, rng: np.random.Generator, hidden: int = 64, layers: int = 5, K: int = DEFAULT_K,
                 stop_bias: float = -3.0):
        self.K = K
        self.hidden = hidden
        self.encoder = FireGNN(rng, hidden, layers)
        self.pi0 = MLP([hidden, hidden, 1], rng)
        # start out rarely stopping; otherwise early negative returns teach "stop" before the pointers learn anything
        self.pi0.layers[-1].bias.data[:] = stop_bias
        self.pi1 = MLP([hidden + 2, hidden, hidden], rng)
        self.pi2 = MLP([2 * hidden + 2, hidden, hidden], rng)
        self.pointer1 = Pointer(hidden, rng)
        self.pointer2 = Pointer(hidden, rng)

    def encode(self, obs: list[Observation]):
        return self.encoder(EncoderBatch([o.filt for o in obs]), need_nodes=False)

    @staticmethod
    def _lc(B: int) -> Tensor:
        # one-hot of a0 = "continue"; the pointer heads only run when continuing
        lc = np.zeros((B, 2))
        lc[:, 0] = 1.0
        return Tensor(lc)

    def terminate_logit(self, emb) -> Tensor:
        return ad.reshape(self.pi0(emb.graph), (emb.graph.shape[0],))

    def first_logp(self, emb, obs: list[Observation]) -> tuple[Tensor, np.ndarray]:
        B = len(obs)
        width = max(len(o.edges) for o in obs)
        l1 = self.pi1(ad.concat([emb.graph, self._lc(B)], axis=1))
        scores = self.pointer1(l1, emb.edge, emb.batch.edge_graph)
        # forced rows get a dummy full mask; their values are never used
        mask = _mask_matrix([o.first_mask if not o.forced else np.ones(len(o.edges), bool) for o in obs], width)
        return ad.masked_log_softmax(_padded(scores, emb.batch.edge_offsets, width), mask, axis=1), mask

    def second_logp(self, emb, obs: list[Observation], e1: np.ndarray, masks: list[np.ndarray]) -> tuple[Tensor, np.ndarray]:
        B = len(obs)
        width = max(len(o.edges) for o in obs)
        rows = emb.batch.edge_offsets[:-1] + np.maximum(e1, 0)
        h_e1 = ad.take_rows(emb.edge, rows)
        l2 = self.pi2(ad.concat([emb.graph, h_e1, self._lc(B)], axis=1))
        scores = self.pointer2(l2, emb.edge, emb.batch.edge_graph)
        mask = _mask_matrix(masks, width)
        return ad.masked_log_softmax(_padded(scores, emb.batch.edge_offsets, width), mask, axis=1), mask

    def evaluate(self, obs: list[Observation], decisions: list[Decision], emb=None) -> tuple[Tensor, Tensor]:
        """Joint log-probabilities and entropies of ``decisions``, shape ``(B,)`` each."""
        if emb is None:
            emb = self.encode(obs)
        B = len(obs)
        for d in decisions:
            if d.kind == "rewire" and not (d.e2_mask is not None and d.e2_mask[d.e2]):
                raise ContractError("second edge lies outside the feasible partner mask")
        kinds = np.array([d.kind for d in decisions])
        forced = kinds == "forced"
        rewire = kinds == "rewire"
        stop = kinds == "stop"
        z = self.terminate_logit(emb)
        lp_stop = ad.log_sigmoid(z)
        lp_cont = ad.log_sigmoid(ad.mul(z, -1.0))
        ent0 = ad.mul(ad.add(ad.mul(ad.sigmoid(z), lp_stop), ad.mul(ad.sigmoid(ad.mul(z, -1.0)), lp_cont)), -1.0)

        L1, m1 = self.first_logp(emb, obs)
        e1 = np.array([d.e1 if d.kind == "rewire" else 0 for d in decisions])
        e1_rev = np.array([_reverse_index(o, d.e1) if d.kind == "rewire" else 0 for o, d in zip(obs, decisions)])
        masks2 = [
            d.e2_mask if d.kind == "rewire" else np.ones(len(o.edges), bool) for o, d in zip(obs, decisions)
        ]
        L2, m2 = self.second_logp(emb, obs, np.where(rewire, e1, 0), masks2)
        e2 = np.array([d.e2 if d.kind == "rewire" else 0 for d in decisions])
        b = np.arange(B)
        lp_e1 = ad.sub(ad.logaddexp(ad.index(L1, (b, e1)), ad.index(L1, (b, e1_rev))), LOG2)
        lp_e2 = ad.index(L2, (b, e2))
        lp_rewire = ad.add(ad.add(lp_cont, lp_e1), lp_e2)
        logp = ad.where(rewire, lp_rewire, ad.where(stop, lp_stop, 0.0))
        ent_edges = ad.add(_masked_entropy(L1, m1), _masked_entropy(L2, m2))
        entropy = ad.where(forced, 0.0, ad.add(ent0, ad.where(rewire, ent_edges, 0.0)))
        return logp, entropy

    def decide(self, obs: list[Observation], rng: np.random.Generator | None, greedy: bool = False, emb=None):
        """Sample (or argmax-decode) one decision per observation.

        Greedy decoding terminates when P(terminate) > 1/2, takes the pointer
        argmax for the first edge without flipping it, then the argmax
        partner. Returns decisions and their joint log-probabilities.
        """
        if not greedy and rng is None:
            raise ContractError("sampling needs an rng")
        with ad.no_grad():
            if emb is None:
                emb = self.encode(obs)
            p_stop = ad.sigmoid(self.terminate_logit(emb)).data
            L1, m1 = self.first_logp(emb, obs)
            decisions: list[Decision] = []
            e1 = np.zeros(len(obs), dtype=np.int64)
            for b, o in enumerate(obs):
                if o.forced:
                    decisions.append(Decision("forced"))
                    continue
                stop = p_stop[b] > 0.5 if greedy else rng.random() < p_stop[b]
                if stop:
                    decisions.append(Decision("stop"))
                    continue
                probs = np.where(m1[b], np.exp(L1.data[b]), 0.0)[: len(o.edges)]
                if greedy:
                    k = int(np.argmax(np.where(o.first_mask, probs, -1.0)))
                else:
                    k = int(rng.choice(len(probs), p=probs / probs.sum()))
                    if rng.random() < 0.5:
                        k = _reverse_index(o, k)
                e1[b] = k
                decisions.append(Decision("rewire", e1=k, e2_mask=o.partner_mask(o.edges[k])))
            active = [b for b, d in enumerate(decisions) if d.kind == "rewire"]
            if active:
                masks = [d.e2_mask if d.kind == "rewire" else np.ones(len(o.edges), bool) for o, d in zip(obs, decisions)]
                L2, m2 = self.second_logp(emb, obs, e1, masks)
                for b in active:
                    n = len(obs[b].edges)
                    probs = np.where(m2[b], np.exp(L2.data[b]), 0.0)[:n]
                    if greedy:
                        k = int(np.argmax(np.where(m2[b][:n], probs, -1.0)))
                    else:
                        k = int(rng.choice(n, p=probs / probs.sum()))
                    decisions[b].e2 = k
            logp, _ = self.evaluate(obs, decisions, emb=emb)
        return decisions, logp.data.copy()

    def action_probability(self, g: Graph, action: RewiringAction) -> float:
        """Exact probability that sampling on ``g`` yields a rewiring with ``action``'s effect."""
        obs = observe(g, self.K)
        if action.terminate:
            if obs.forced:
                return 1.0
            decisions = [Decision("stop")]
        else:
            if obs.forced or not is_feasible(g, action):
                return 0.0
            a, c, b, d = action.nodes
            reps = {(a, c, b, d), (c, a, d, b), (b, d, a, c), (d, b, c, a)}
            decisions = []
            for A, C, B, D in sorted(reps):
                if (A, C) not in obs.pos or (B, D) not in obs.pos:
                    return 0.0
                k1 = obs.pos[(A, C)]
                decisions.append(Decision("rewire", e1=k1, e2=obs.pos[(B, D)], e2_mask=obs.partner_mask(obs.edges[k1])))
        with ad.no_grad():
            logp, _ = self.evaluate([obs] * len(decisions), decisions)
        return float(np.exp(logp.data).sum())


class ValueNet(Module):
    """State value on its own encoder."""

    def __init__(self, rng: np.random.Generator, hidden: int = 64, layers: int = 5, K: int = DEFAULT_K):
        self.K = K
        self.encoder = FireGNN(rng, hidden, layers)
        self.head = MLP([hidden, hidden, 1], rng)

    def __call__(self, obs: list[Observation]) -> Tensor:
        emb = self.encoder(EncoderBatch([o.filt for o in obs]), need_nodes=False)
        return ad.reshape(self.head(emb.graph), (len(obs),))


def make_networks(cfg: PPOConfig, seed: int) -> tuple[PolicyNet, ValueNet]:
    rng = np.random.default_rng([seed, 1])
    return PolicyNet(rng, cfg.hidden, cfg.layers, cfg.K, cfg.stop_bias), ValueNet(rng, cfg.hidden, cfg.layers, cfg.K)


def sample_action(g: Graph, policy: PolicyNet, value: ValueNet, rng: np.random.Generator):
    """One stochastic action for ``g`` as ``(action, log_prob, value)``."""
    obs = observe(g, policy.K)
    (d,), logp = policy.decide([obs], rng)
    with ad.no_grad():
        v = value([obs]).data[0]
    return d.action(obs), float(logp[0]), float(v)


# -- advantages and loss -----------------------------------------------------------

def gae_advantages(rewards, values, dones, gamma: float = 1.0, lam: float = 0.95, last_value: float = 0.0):
    """GAE over a flat sequence of steps; ``dones[t]`` ends an episode after step t.

    Returns ``(advantages, returns)`` with ``returns = advantages + values``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (len(rewards) == len(values) == len(dones)):
        raise ParameterError("rewards, values and dones must have equal length")
    adv = np.zeros(len(rewards))
    running = 0.0
    next_value = last_value
    for t in range(len(rewards) - 1, -1, -1):
        if dones[t]:
            next_value, running = 0.0, 0.0
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    adv = np.asarray(adv, dtype=np.float64)
    std = adv.std()
    if len(adv) < 2 or std == 0:
        return np.zeros_like(adv)
    return (adv - adv.mean()) / std


def dual_clip_objective(ratio: Tensor, adv: np.ndarray, clip_eps: float, dual_clip: float) -> Tensor:
    """Per-sample surrogate to maximize; negative-advantage samples are floored at ``c * A``."""
    adv = np.asarray(adv, dtype=np.float64)
    surr = ad.minimum(ad.mul(ratio, adv), ad.mul(ad.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv))
    return ad.where(adv < 0, ad.maximum(surr, dual_clip * adv), surr)


@dataclass
class Transition:
    obs: Observation
    decision: Decision
    logp: float
    value: float
    reward: float
    done: bool


def ppo_loss(policy: PolicyNet, value: ValueNet, batch: list[Transition], adv: np.ndarray, returns: np.ndarray, cfg: PPOConfig):
    """Total loss plus its parts (policy, value, entropy) as floats."""
    obs = [t.obs for t in batch]
    logp, entropy = policy.evaluate(obs, [t.decision for t in batch])
    ratio = ad.exp(ad.sub(logp, np.array([t.logp for t in batch])))
    policy_loss = ad.mul(ad.mean(dual_clip_objective(ratio, adv, cfg.clip_eps, cfg.dual_clip)), -1.0)
    diff = ad.sub(value(obs), returns)
    value_loss = ad.mean(ad.mul(diff, diff))
    ent = ad.mean(entropy)
    total = ad.add(ad.add(policy_loss, ad.mul(value_loss, cfg.vf_coef)), ad.mul(ent, -cfg.ent_coef))
    return total, {"policy_loss": policy_loss.item(), "value_loss": value_loss.item(), "entropy": ent.item()}


def ppo_update(policy, value, pol_opt: Adam, val_opt: Adam, batch: list[Transition], adv, returns,
               cfg: PPOConfig, rng: np.random.Generator, lr: float | None = None) -> dict:
    """``cfg.epochs`` passes of shuffled minibatch steps; returns mean loss parts."""
    parts = {"policy_loss": [], "value_loss": [], "entropy": []}
    n = len(batch)
    if n == 0:
        raise ContractError("ppo_update needs at least one transition")
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.minibatch):
            idx = order[start: start + cfg.minibatch]
            pol_opt.zero_grad()
            val_opt.zero_grad()
            total, info = ppo_loss(policy, value, [batch[i] for i in idx], adv[idx], returns[idx], cfg)
            if not np.isfinite(total.item()):
                raise TrainingError(
                    "non-finite PPO loss; diagnostics: "
                    + repr({**info, "adv_range": (float(adv.min()), float(adv.max())),
                            "logp_old_range": (min(t.logp for t in batch), max(t.logp for t in batch))})
                )
            total.backward()
            pol_opt.step(lr)
            val_opt.step(lr)
            for k, v in info.items():
                parts[k].append(v)
    return {k: float(np.mean(v)) for k, v in parts.items()}


# -- rollouts, evaluation, training --------------------------------------------------

def collect(policy: PolicyNet, value: ValueNet, graphs: list[Graph], env_cfg: EnvConfig, cfg: PPOConfig,
            rng: np.random.Generator, start: int = 0) -> tuple[list[Transition], list[float]]:
    """Complete episodes from ``cfg.num_envs`` parallel envs until ``cfg.batch`` steps are stored.

    Returns the flat transition list (episodes contiguous) and the unscaled
    gain of every finished episode.
    """
    transitions: list[Transition] = []
    gains: list[float] = []
    k = start
    while len(transitions) < cfg.batch:
        envs = [RewiringEnv(env_cfg, graphs[(k + i) % len(graphs)]) for i in range(cfg.num_envs)]
        k += cfg.num_envs
        episodes: list[list[Transition]] = [[] for _ in envs]
        while True:
            live = [i for i, e in enumerate(envs) if not e.done]
            if not live:
                break
            obs = [observe(envs[i].graph, policy.K) for i in live]
            decisions, logp = policy.decide(obs, rng)
            with ad.no_grad():
                vals = value(obs).data
            for j, i in enumerate(live):
                res = envs[i].step(decisions[j].action(obs[j]))
                episodes[i].append(Transition(obs[j], decisions[j], float(logp[j]), float(vals[j]), res.reward, res.done))
        for e, ep in zip(envs, episodes):
            transitions.extend(ep)
            gains.append(e.objective - e.initial_objective)
    return transitions, gains


def evaluate_policy(policy: PolicyNet, g: Graph, env_cfg: EnvConfig) -> OptimizerReport:
    """Greedy-decoded rollout, reported like a baseline optimizer."""
    t0 = time.perf_counter()
    env = RewiringEnv(env_cfg, g)
    actions: list[RewiringAction] = []
    trace: list[float] = []
    reversals = 0
    while not env.done:
        obs = observe(env.graph, policy.K)
        (d,), _ = policy.decide([obs], None, greedy=True)
        a = d.action(obs)
        env.step(a)
        if a.terminate:
            break
        if actions and actions[-1].inverse_of(a):
            reversals += 1
        actions.append(a)
        trace.append(env.objective)
    return OptimizerReport(
        best_graph=env.graph,
        initial_objective=env.initial_objective,
        final_objective=env.objective,
        gain_percent=gain_percent(env.initial_objective, env.objective),
        rewirings_used=len(actions),
        objective_evals=len(actions),
        wall_time=time.perf_counter() - t0,
        actions=actions,
        trace=trace,
        extra={"reversals": reversals},
    )


@dataclass
class TrainResult:
    policy: PolicyNet
    value: ValueNet
    log: list[dict]
    best_eval_gain: float
    env_steps: int
    extra: dict = field(default_factory=dict)

    def log_csv(self) -> str:
        return format_log(self.log)


def format_log(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=LOG_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in LOG_COLUMNS})
    return buf.getvalue()


def train(graphs: list[Graph] | Graph, env_cfg: EnvConfig, cfg: PPOConfig, seed: int, total_steps: int,
          *, eval_every: int = 1, on_update=None, checkpoint_dir: str | Path | None = None) -> TrainResult:
    """PPO training; the returned networks hold the best greedy-evaluation weights.

    The evaluation score is the mean greedy-decoded objective gain over the
    training graphs; ties go to the later checkpoint.
    """
    if isinstance(graphs, Graph):
        graphs = [graphs]
    if not graphs:
        raise ParameterError("need at least one training graph")
    if total_steps <= 0:
        raise ParameterError("total_steps must be > 0")
    policy, value = make_networks(cfg, seed)
    rng = np.random.default_rng([seed, 2])
    pol_opt = Adam(policy.parameters(), lr=cfg.lr, max_grad_norm=cfg.max_grad_norm)
    val_opt = Adam(value.parameters(), lr=cfg.lr, max_grad_norm=cfg.max_grad_norm)

    def eval_gain() -> float:
        reports = [evaluate_policy(policy, g, env_cfg) for g in graphs]
        return float(np.mean([r.final_objective - r.initial_objective for r in reports]))

    best = eval_gain()
    best_state = (policy.state_dict(), value.state_dict())
    log: list[dict] = []
    steps = update = 0
    while steps < total_steps:
        batch, gains = collect(policy, value, graphs, env_cfg, cfg, rng, start=update * cfg.num_envs)
        steps += len(batch)
        adv, returns = gae_advantages([t.reward for t in batch], [t.value for t in batch],
                                      [t.done for t in batch], cfg.gamma, cfg.gae_lambda)
        adv = normalize_advantages(adv)
        lr = cfg.lr * max(0.0, 1.0 - (steps - len(batch)) / total_steps)
        parts = ppo_update(policy, value, pol_opt, val_opt, batch, adv, returns, cfg, rng, lr=lr)
        update += 1
        row = {"update": update, "mean_gain": float(np.mean(gains)), **parts, "env_steps": steps, "eval_gain": float("nan")}
        if update % eval_every == 0 or steps >= total_steps:
            g_eval = eval_gain()
            row["eval_gain"] = g_eval
            if g_eval >= best:
                best = g_eval
                best_state = (policy.state_dict(), value.state_dict())
        log.append(row)
        if on_update is not None:
            on_update(row)
    policy.load_state_dict(best_state[0])
    value.load_state_dict(best_state[1])
    result = TrainResult(policy, value, log, best, steps)
    if checkpoint_dir is not None:
        save_networks(checkpoint_dir, policy, value, cfg, {"seed": seed, "best_eval_gain": best, "env_steps": steps})
    return result


def save_networks(path: str | Path, policy: PolicyNet, value: ValueNet, cfg: PPOConfig, meta: dict | None = None) -> None:
    params = {f"policy.{k}": v for k, v in policy.state_dict().items()}
    params.update({f"value.{k}": v for k, v in value.state_dict().items()})
    save_checkpoint(path, params, {"ppo": asdict(cfg), **(meta or {})})


def load_networks(path: str | Path) -> tuple[PolicyNet, ValueNet, dict]:
    params, meta = load_checkpoint(path)
    if "ppo" not in meta:
        raise ParameterError("checkpoint manifest lacks the network configuration")
    cfg = PPOConfig(**meta["ppo"])
    policy, value = make_networks(cfg, 0)
    policy.load_state_dict({k[7:]: v for k, v in params.items() if k.startswith("policy.")})
    value.load_state_dict({k[6:]: v for k, v in params.items() if k.startswith("value.")})
    return policy, value, meta
