"""Task environments and datasets.

Synthetic blob classification (a self-contained stand-in for reduced
image features), the feature-binding dataset, a PCA reducer with a CSV
ingestion path, classic cart-pole physics, and REINFORCE policy-gradient
training for both spiking and MLP policies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import encoders, snn

__all__ = [
    "Dataset",
    "CartPoleState",
    "CartPoleEnv",
    "RLConfig",
    "gen_blobs",
    "gen_binding",
    "pca_reduce",
    "PCAReducer",
    "save_dataset_csv",
    "load_dataset_csv",
    "cartpole_step",
    "discounted_returns",
    "reinforce_train",
]


@dataclass
class Dataset:
    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,) ints in [0, n_classes)
    n_classes: int
    note: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.features) != len(self.labels) or len(self.features) == 0:
            raise ValueError("features and labels must be non-empty and aligned")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return len(self.labels)

    def split(self, test_frac: float, rng) -> tuple["Dataset", "Dataset"]:
        """Stratified train/test split."""
        rng = np.random.default_rng(rng)
        train_idx, test_idx = [], []
        for cls in range(self.n_classes):
            idx = rng.permutation(np.nonzero(self.labels == cls)[0])
            n_test = max(1, int(round(test_frac * len(idx))))
            test_idx.extend(idx[:n_test])
            train_idx.extend(idx[n_test:])
        tr = np.array(sorted(train_idx))
        te = np.array(sorted(test_idx))
        return (
            Dataset(self.features[tr], self.labels[tr], self.n_classes, self.note),
            Dataset(self.features[te], self.labels[te], self.n_classes, self.note),
        )


def gen_blobs(
    n: int, d: int = 7, n_classes: int = 10, spread: float = 0.12, rng=None
) -> Dataset:
    """Balanced isotropic Gaussian clusters with centers in [0, 1]^d."""
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(rng)
    centers = rng.random((n_classes, d))
    labels = np.arange(n) % n_classes
    features = centers[labels] + rng.normal(0.0, spread, size=(n, d))
    perm = rng.permutation(n)
    return Dataset(features[perm], labels[perm], n_classes, note="blobs")


_SHAPE_BAND = slice(125, 250)
_COLOR_BAND = slice(250, 375)


def gen_binding(
    n: int = 5000, dim: int = 1000, noise: float = 0.25, rng=None
) -> Dataset:
    """Feature-binding task: detect co-occurrence of two band patterns.

    Positives carry the all-ones shape band (125-250) and color band
    (250-375) plus Gaussian noise; negatives carry random binary band
    patterns that never match both targets simultaneously. Classes are
    exactly balanced and the rows shuffled.
    """
    if dim < 375:
        raise ValueError("dim must be >= 375 to hold both bands")
    if n % 2:
        warnings.warn(f"odd n={n}: generating {n - 1} samples")
        n -= 1
    rng = np.random.default_rng(rng)
    half = n // 2
    X = np.zeros((n, dim))
    y = np.zeros(n, dtype=np.int64)
    X[:half, _SHAPE_BAND] = 1.0
    X[:half, _COLOR_BAND] = 1.0
    y[:half] = 1
    band_len = 125
    for i in range(half, n):
        while True:
            shape = rng.integers(0, 2, band_len).astype(np.float64)
            color = rng.integers(0, 2, band_len).astype(np.float64)
            if not (shape.all() and color.all()):
                break
        X[i, _SHAPE_BAND] = shape
        X[i, _COLOR_BAND] = color
    X += rng.normal(0.0, noise, size=X.shape)
    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm], 2, note="binding")


@dataclass
class PCAReducer:
    mean: np.ndarray
    components: np.ndarray  # (d_out, D)
    mins: np.ndarray
    ranges: np.ndarray
    padded: int = 0  # zero-padded dims when rank < d_out

    def transform(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T
        scaled = (Z - self.mins) / self.ranges
        return np.clip(scaled, 0.0, 1.0)


def pca_reduce(X, d_out: int) -> tuple[np.ndarray, PCAReducer]:
    """Project onto the top principal directions, min-max scaled to [0, 1]."""
    X = np.asarray(X, dtype=np.float64)
    n, D = X.shape
    if d_out > min(n - 1, D):
        raise ValueError("d_out must be <= min(n - 1, D)")
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    rank = int((s > 1e-12 * s[0]).sum()) if len(s) else 0
    comps = vt[:d_out].copy()
    padded = 0
    if rank < d_out:
        padded = d_out - rank
        comps[rank:] = 0.0
    Z = Xc @ comps.T
    mins = Z.min(axis=0)
    ranges = Z.max(axis=0) - mins
    ranges[ranges < 1e-12] = 1.0
    reducer = PCAReducer(mean, comps, mins, ranges, padded)
    return reducer.transform(X), reducer


def save_dataset_csv(path, ds: Dataset):
    d = ds.features.shape[1]
    header = ",".join([f"f{i}" for i in range(d)] + ["label"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, label in zip(ds.features, ds.labels):
            fh.write(",".join(f"{v:.10g}" for v in row) + f",{label}\n")


def load_dataset_csv(path) -> Dataset:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    d = len(header) - 1
    expected = [f"f{i}" for i in range(d)] + ["label"]
    if header != expected:
        raise ValueError(f"unexpected CSV header in {path}")
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    features = raw[:, :d]
    labels = raw[:, d].astype(np.int64)
    return Dataset(features, labels, int(labels.max()) + 1, note=str(path))


# -- cart-pole ---------------------------------------------------------------

_GRAVITY = 9.8
_MASS_CART = 1.0
_MASS_POLE = 0.1
_TOTAL_MASS = _MASS_CART + _MASS_POLE
_HALF_LENGTH = 0.5
_POLEMASS_LENGTH = _MASS_POLE * _HALF_LENGTH
_FORCE_MAG = 10.0
_TAU = 0.02
_X_LIMIT = 2.4
_THETA_LIMIT = 12.0 * 2.0 * math.pi / 360.0
_MAX_STEPS = 500


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float

    @property
    def alive(self) -> bool:
        return abs(self.x) <= _X_LIMIT and abs(self.theta) <= _THETA_LIMIT

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


def cartpole_step(s: CartPoleState, action: int):
    """Classic cart-pole physics with a semi-implicit Euler step.

    Returns (next state, reward 1.0, done). Stepping an already-dead
    state is an error.
    """
    if action not in (0, 1):
        raise ValueError("action must be 0 or 1")
    if not s.alive:
        raise ValueError("cannot step a terminated episode")
    force = _FORCE_MAG if action == 1 else -_FORCE_MAG
    cos_t = math.cos(s.theta)
    sin_t = math.sin(s.theta)
    temp = (force + _POLEMASS_LENGTH * s.theta_dot**2 * sin_t) / _TOTAL_MASS
    theta_acc = (_GRAVITY * sin_t - cos_t * temp) / (
        _HALF_LENGTH * (4.0 / 3.0 - _MASS_POLE * cos_t**2 / _TOTAL_MASS)
    )
    x_acc = temp - _POLEMASS_LENGTH * theta_acc * cos_t / _TOTAL_MASS
    nxt = CartPoleState(
        x=s.x + _TAU * s.x_dot,
        x_dot=s.x_dot + _TAU * x_acc,
        theta=s.theta + _TAU * s.theta_dot,
        theta_dot=s.theta_dot + _TAU * theta_acc,
    )
    return nxt, 1.0, not nxt.alive


class CartPoleEnv:
    """Episode bookkeeping around ``cartpole_step`` (500-step cap)."""

    def __init__(self, rng=None, max_steps: int = _MAX_STEPS):
        self.rng = np.random.default_rng(rng)
        self.max_steps = max_steps
        self.state: CartPoleState | None = None
        self.steps = 0
        self.done = True

    def reset(self) -> CartPoleState:
        vals = self.rng.uniform(-0.05, 0.05, size=4)
        self.state = CartPoleState(*vals)
        self.steps = 0
        self.done = False
        return self.state

    def step(self, action: int):
        if self.done or self.state is None:
            raise RuntimeError("episode is done; call reset()")
        self.state, reward, terminated = cartpole_step(self.state, action)
        self.steps += 1
        truncated = self.steps >= self.max_steps
        self.done = terminated or truncated
        return self.state, reward, self.done


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    """G_t = r_t + gamma G_{t+1}, computed right-to-left."""
    out = np.empty(len(rewards))
    acc = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


@dataclass(frozen=True)
class RLConfig:
    lr: float = 0.001
    gamma: float = 0.99
    episodes: int = 800
    max_steps: int = 500
    solve_threshold: float = 475.0
    solve_window: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise ValueError("gamma must lie in (0, 1]")


def _policy_logits(model: snn.NetworkModel, trace: snn.ForwardTrace) -> np.ndarray:
    """Per-sample action logits: output potentials averaged over steps."""
    return trace.logits.mean(axis=0)


def _encode_obs(spec: encoders.EncoderSpec | None, obs: np.ndarray) -> np.ndarray:
    if spec is None:
        return obs[None, :]  # static input, one step
    return encoders.encode(spec, obs).values


def reinforce_train(
    policy: snn.NetworkModel,
    encoder: encoders.EncoderSpec | None,
    cfg: RLConfig,
    rng=None,
) -> list[dict]:
    """Monte-Carlo policy gradient on cart-pole.

    Each observation is encoded (or passed through for the MLP twin), the
    action is sampled from a softmax over time-averaged output potentials
    (the policy head integrates without spiking, like a linear readout),
    and the episode's normalized discounted returns weight the log-prob
    gradients for one Adam step per episode. History rows carry return,
    length, spike count, and the rolling solve flag.
    """
    if policy.sizes[-1] != 2:
        raise ValueError("policy must output 2 action logits")
    rng = np.random.default_rng(rng if rng is not None else cfg.seed)
    env = CartPoleEnv(rng, max_steps=cfg.max_steps)
    opt = snn.Adam(policy.parameters(), cfg.lr)
    history: list[dict] = []
    recent: list[float] = []
    for episode in range(cfg.episodes):
        state = env.reset()
        seqs, actions, rewards = [], [], []
        spikes = 0
        done = False
        while not done:
            seq = _encode_obs(encoder, state.as_array())
            trace = snn.forward(policy, seq, output_reset=False)
            spikes += trace.total_spikes()
            logits = _policy_logits(policy, trace)[0]
            z = logits - logits.max()
            probs = np.exp(z)
            probs /= probs.sum()
            action = int(rng.random() < probs[1])
            seqs.append(seq)
            actions.append(action)
            state, reward, done = env.step(action)
            rewards.append(reward)
        returns = discounted_returns(rewards, cfg.gamma)
        adv = returns - returns.mean()
        std = adv.std()
        if std > 1e-8:
            adv = adv / std
        batch = np.stack(seqs)  # [steps, T, D]
        trace = snn.forward(policy, batch, output_reset=False)
        logits = _policy_logits(policy, trace)  # [steps, 2]
        z = logits - logits.max(axis=1, keepdims=True)
        probs = np.exp(z)
        probs /= probs.sum(axis=1, keepdims=True)
        g = probs.copy()
        g[np.arange(len(actions)), actions] -= 1.0
        g *= adv[:, None]
        if not np.all(np.isfinite(g)):
            raise snn.TrainingDivergedError(episode, 0)
        T = trace.logits.shape[0]
        grad_logits = np.repeat(g[None, :, :], T, axis=0) / T
        grads = snn.backward(policy, trace, grad_logits)
        opt.step(grads)
        ep_return = float(np.sum(rewards))
        recent.append(ep_return)
        if len(recent) > cfg.solve_window:
            recent.pop(0)
        history.append(
            {
                "episode": episode,
                "return": ep_return,
                "steps": len(rewards),
                "spikes": int(spikes),
                "solved": len(recent) == cfg.solve_window
                and float(np.mean(recent)) >= cfg.solve_threshold,
            }
        )
    return history
