"""Value-based learner: replay-buffer DQN with a target network, Polyak
averaging, a linear epsilon schedule, and an action-masked variant ("vam")
that restricts both action selection and bootstrapping to currently valid
actions.

The Q-network is a small fully-connected ReLU net implemented directly on
numpy so the optimizer is exactly plain SGD with the configured learning
rate and gradients are checkable against finite differences.  Observations
are scaled from their 0..255 storage range to [0, 1] before the network.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import WarehouseConfig
from .mdp import ActionClass, Env
from .metrics import EpisodeAccumulator, EpisodeMetrics
from .simcore import boxes_in_warehouse


class TrainingDiverged(RuntimeError):
    """Loss or parameters stopped being finite."""


@dataclass(frozen=True)
class Hyperparameters:
    alpha: float = 0.001            # SGD learning rate
    gamma: float = 0.99             # discount factor
    tau: float = 1.0                # Polyak coefficient; 1 is a hard update
    exploration_fraction: float = 0.1
    epsilon_max: float = 1.0
    epsilon_min: float = 0.05
    buffer_capacity: int = 50_000
    batch_size: int = 32
    target_update_interval: int = 250
    max_training_steps: int = 50_000
    learning_starts: int = 500
    hidden_sizes: tuple[int, ...] = (128, 128)
    # carried for externally trained actor-critic agents; unused by DQN
    vf_coef: float = 0.5
    clip: float = 0.2

    def validate(self) -> "Hyperparameters":
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if not 0 <= self.tau <= 1:
            raise ValueError("tau must be in [0, 1]")
        if not 0 < self.exploration_fraction <= 1:
            raise ValueError("exploration_fraction must be in (0, 1]")
        if not 0 <= self.epsilon_min <= self.epsilon_max <= 1:
            raise ValueError("need 0 <= epsilon_min <= epsilon_max <= 1")
        for name in ("buffer_capacity", "batch_size", "target_update_interval",
                     "max_training_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        return self


# Named presets: the stock setting, the tuned combination that won the
# pairwise sweep, and a laptop-scale recipe sized for desk_config().
PRESETS: dict[str, Hyperparameters] = {
    "default-dqn": Hyperparameters(alpha=0.001, tau=1.0, gamma=0.99,
                                   exploration_fraction=0.1),
    "tuned-dqn": Hyperparameters(alpha=0.001, tau=0.1, gamma=0.23,
                                 exploration_fraction=0.0125),
    "desk-vam": Hyperparameters(alpha=0.001, tau=1.0, gamma=0.99,
                                exploration_fraction=0.15, epsilon_min=0.02,
                                buffer_capacity=30_000, batch_size=64,
                                target_update_interval=500,
                                max_training_steps=30_000,
                                learning_starts=1000),
}


def epsilon_at(step: int, hp: Hyperparameters) -> float:
    """Linear decay from epsilon_max at step 0 to epsilon_min at
    exploration_fraction * max_training_steps, constant afterwards."""
    if step < 0:
        raise ValueError("step must be >= 0")
    decay_steps = hp.exploration_fraction * hp.max_training_steps
    if step >= decay_steps:
        return hp.epsilon_min
    frac = step / decay_steps
    return hp.epsilon_max + frac * (hp.epsilon_min - hp.epsilon_max)


class QNetwork:
    """Fully-connected ReLU network mapping a flattened observation to one
    Q-value per action.  Parameters live in plain numpy arrays."""

    def __init__(self, input_dim: int, output_dim: int,
                 hidden_sizes: tuple[int, ...] = (128, 128),
                 rng: np.random.Generator | None = None):
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.hidden_sizes = tuple(hidden_sizes)
        rng = rng or np.random.default_rng(0)
        dims = [input_dim, *hidden_sizes, output_dim]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray) -> np.ndarray:
        """x: (batch, input_dim) or (input_dim,) -> matching q-values."""
        single = x.ndim == 1
        h = np.atleast_2d(x)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        q = h @ self.weights[-1] + self.biases[-1]
        return q[0] if single else q

    def loss_and_grads(self, obs: np.ndarray, actions: np.ndarray,
                       targets: np.ndarray):
        """Mean squared error of Q(obs)[actions] against targets, plus the
        gradient for every parameter array."""
        batch = obs.shape[0]
        activations = [obs]
        h = obs
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            activations.append(h)
        q = h @ self.weights[-1] + self.biases[-1]

        picked = q[np.arange(batch), actions]
        err = picked - targets
        loss = float(np.mean(err**2))

        dq = np.zeros_like(q)
        dq[np.arange(batch), actions] = 2.0 * err / batch

        grad_w = [np.zeros_like(w) for w in self.weights]
        grad_b = [np.zeros_like(b) for b in self.biases]
        delta = dq
        for layer in range(len(self.weights) - 1, -1, -1):
            grad_w[layer] = activations[layer].T @ delta
            grad_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * (activations[layer] > 0)
        return loss, grad_w, grad_b

    def sgd_step(self, grad_w, grad_b, alpha: float) -> None:
        for w, g in zip(self.weights, grad_w):
            w -= alpha * g
        for b, g in zip(self.biases, grad_b):
            b -= alpha * g

    # -- flat parameter views (used by checkpoints and gradient checks) ----

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def set_flat(self, flat: np.ndarray) -> None:
        i = 0
        for idx in range(len(self.weights)):
            w = self.weights[idx]
            self.weights[idx] = flat[i:i + w.size].reshape(w.shape).copy()
            i += w.size
            b = self.biases[idx]
            self.biases[idx] = flat[i:i + b.size].copy()
            i += b.size
        if i != flat.size:
            raise ValueError(f"flat vector has {flat.size} values, expected {i}")

    def clone(self) -> "QNetwork":
        twin = QNetwork.__new__(QNetwork)
        twin.input_dim = self.input_dim
        twin.output_dim = self.output_dim
        twin.hidden_sizes = self.hidden_sizes
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin


def numeric_gradient(net: QNetwork, obs: np.ndarray, actions: np.ndarray,
                     targets: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the batch loss over flat parameters.
    Independent of the backprop path; used to verify it."""
    flat = net.get_flat()
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] += eps
        net.set_flat(bumped)
        up, _, _ = net.loss_and_grads(obs, actions, targets)
        bumped[i] -= 2 * eps
        net.set_flat(bumped)
        down, _, _ = net.loss_and_grads(obs, actions, targets)
        grad[i] = (up - down) / (2 * eps)
    net.set_flat(flat)
    return grad


def polyak_update(target: QNetwork, online: QNetwork, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, array by array."""
    for t, o in zip(target.weights + target.biases,
                    online.weights + online.biases):
        if t.shape != o.shape:
            raise ValueError(f"parameter shape mismatch: {t.shape} vs {o.shape}")
        t *= 1.0 - tau
        t += tau * o


def select_action(q_values: np.ndarray, valid_mask: np.ndarray, epsilon: float,
                  rng: np.random.Generator, masked: bool) -> int:
    """Epsilon-greedy over all actions (plain) or the valid set (masked)."""
    if masked:
        valid = np.flatnonzero(valid_mask)
        if valid.size == 0:
            raise ValueError("masked selection requires at least one valid action")
        if rng.random() < epsilon:
            return int(valid[rng.integers(valid.size)])
        constrained = np.where(valid_mask, q_values, -np.inf)
        return int(np.argmax(constrained))
    if rng.random() < epsilon:
        return int(rng.integers(q_values.size))
    return int(np.argmax(q_values))


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    done: bool
    next_mask: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform, within-batch no-replacement
    sampling."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._data: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._data)

    def push(self, transition: Transition) -> None:
        if len(self._data) < self.capacity:
            self._data.append(transition)
        else:
            self._data[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._data):
            raise ValueError("not enough transitions buffered")
        idx = rng.choice(len(self._data), size=batch_size, replace=False)
        return [self._data[i] for i in idx]


def td_update(batch: list[Transition], online: QNetwork, target: QNetwork,
              hp: Hyperparameters, masked: bool) -> float:
    """One-step Q-learning update on the batch; returns the loss.

    Targets bootstrap from the target network's maximum over the next
    state's valid actions (masked variant) or over all actions (plain).  A
    next state with no valid action at all falls back to the unmasked max.
    """
    if not batch:
        raise ValueError("empty batch")
    obs = np.stack([t.obs for t in batch])
    next_obs = np.stack([t.next_obs for t in batch])
    actions = np.array([t.action for t in batch], dtype=np.int64)
    rewards = np.array([t.reward for t in batch])
    dones = np.array([t.done for t in batch], dtype=float)

    next_q = target.forward(next_obs)
    if masked:
        masks = np.stack([t.next_mask for t in batch])
        has_valid = masks.any(axis=1)
        constrained = np.where(masks, next_q, -np.inf)
        best = np.where(has_valid, constrained.max(axis=1), next_q.max(axis=1))
    else:
        best = next_q.max(axis=1)
    targets = rewards + hp.gamma * (1.0 - dones) * best

    loss, grad_w, grad_b = online.loss_and_grads(obs, actions, targets)
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss}")
    online.sgd_step(grad_w, grad_b, hp.alpha)
    return loss


def flatten_observation(obs: np.ndarray) -> np.ndarray:
    """Row-major flatten scaled to [0, 1]."""
    return obs.astype(np.float64).ravel() / 255.0


@dataclass
class CurvePoint:
    episode: int
    score: float
    epsilon: float
    loss: float | None


@dataclass
class TrainResult:
    network: QNetwork
    episode_metrics: list[EpisodeMetrics] = field(default_factory=list)
    curve: list[CurvePoint] = field(default_factory=list)
    variant: str = "dqn"
    seed: int = 0
    hp: Hyperparameters | None = None


VARIANTS = ("dqn", "vam")


def train(cfg: WarehouseConfig, hp: Hyperparameters, variant: str,
          seed: int) -> TrainResult:
    """Train for hp.max_training_steps environment steps, logging score,
    epsilon, and mean loss per episode.  Deterministic given the seed."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    hp.validate()
    masked = variant == "vam"

    ss = np.random.SeedSequence(seed)
    init_rng, act_rng, buf_rng = (np.random.default_rng(s) for s in ss.spawn(3))

    input_dim = cfg.rows * cfg.cols * cfg.num_planes
    online = QNetwork(input_dim, cfg.action_count, hp.hidden_sizes, init_rng)
    target = online.clone()
    buffer = ReplayBuffer(hp.buffer_capacity)

    env = Env(cfg)
    episode = 0
    obs = flatten_observation(env.reset(seed))
    mask = env.current_mask()
    acc = EpisodeAccumulator()
    losses: list[float] = []
    result = TrainResult(network=online, variant=variant, seed=seed, hp=hp)

    for step in range(hp.max_training_steps):
        eps = epsilon_at(step, hp)
        if masked and not mask.any():
            action = int(act_rng.integers(cfg.action_count))  # dead end; any action
        else:
            q = online.forward(obs)
            action = select_action(q, mask, eps, act_rng, masked)

        res = env.step(action)
        next_obs = flatten_observation(res.observation)
        next_mask = res.info["valid_action_mask"]
        buffer.push(Transition(obs, action, res.reward, next_obs, res.done,
                               next_mask.copy()))

        acc.record_reward(res.reward)
        cls = res.info["action_class"]
        if cls is ActionClass.INVALID:
            acc.record_invalid()
        elif cls is ActionClass.DELIVERY:
            acc.record_delivery(res.info["delivered_box_age"],
                                res.info["fifo_baseline_age"])
        acc.record_box_ages(b.age for b in boxes_in_warehouse(env.state))

        if step >= hp.learning_starts and len(buffer) >= hp.batch_size:
            losses.append(td_update(buffer.sample(hp.batch_size, buf_rng),
                                    online, target, hp, masked))
        if (step + 1) % hp.target_update_interval == 0:
            polyak_update(target, online, hp.tau)

        if res.done:
            metrics = acc.finalize()
            result.episode_metrics.append(metrics)
            result.curve.append(CurvePoint(
                episode=episode,
                score=metrics.score,
                epsilon=eps,
                loss=sum(losses) / len(losses) if losses else None,
            ))
            episode += 1
            acc = EpisodeAccumulator()
            losses = []
            obs = flatten_observation(env.reset(seed + episode))
            mask = env.current_mask()
        else:
            obs = next_obs
            mask = next_mask

    return result


def evaluate(network: QNetwork, cfg: WarehouseConfig, variant: str, seed: int,
             episodes: int) -> list[EpisodeMetrics]:
    """Greedy (epsilon = 0) rollouts; the masked variant never selects an
    invalid action unless a state offers none at all."""
    masked = variant == "vam"
    rng = np.random.default_rng(seed)
    env = Env(cfg)
    out = []
    for k in range(episodes):
        obs = flatten_observation(env.reset(seed + k))
        mask = env.current_mask()
        acc = EpisodeAccumulator()
        while not env.done:
            if masked and not mask.any():
                action = int(rng.integers(cfg.action_count))
            else:
                action = select_action(network.forward(obs), mask, 0.0, rng, masked)
            res = env.step(action)
            acc.record_reward(res.reward)
            cls = res.info["action_class"]
            if cls is ActionClass.INVALID:
                acc.record_invalid()
            elif cls is ActionClass.DELIVERY:
                acc.record_delivery(res.info["delivered_box_age"],
                                    res.info["fifo_baseline_age"])
            acc.record_box_ages(b.age for b in boxes_in_warehouse(env.state))
            obs = flatten_observation(res.observation)
            mask = res.info["valid_action_mask"]
        out.append(acc.finalize())
    return out


# -- checkpoints --------------------------------------------------------------


def save_checkpoint(path: str | Path, result: TrainResult) -> None:
    """npz archive: per-layer arrays plus a JSON metadata string (layer
    shapes, hyperparameters, variant, seed)."""
    net = result.network
    arrays = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    meta = {
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "hidden_sizes": list(net.hidden_sizes),
        "variant": result.variant,
        "seed": result.seed,
        "hp": asdict(result.hp) if result.hp else None,
    }
    arrays["meta"] = np.array(json.dumps(meta))
    np.savez(path, **arrays)


def load_checkpoint(path: str | Path) -> TrainResult:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        net = QNetwork(meta["input_dim"], meta["output_dim"],
                       tuple(meta["hidden_sizes"]))
        net.weights = [data[f"w{i}"] for i in range(len(net.weights))]
        net.biases = [data[f"b{i}"] for i in range(len(net.biases))]
    hp = None
    if meta["hp"] is not None:
        raw = dict(meta["hp"])
        raw["hidden_sizes"] = tuple(raw["hidden_sizes"])
        hp = Hyperparameters(**raw)
    return TrainResult(network=net, variant=meta["variant"], seed=meta["seed"],
                       hp=hp)
