"""Feed-forward spiking network with surrogate-gradient BPTT, from scratch.

Units are leaky integrate-and-fire with learnable decay and threshold and
a soft (subtract) reset; the spike derivative is replaced by a fast-sigmoid
surrogate for backpropagation through time. An isomorphic ReLU network
("the MLP twin") shares the same training loop. Everything is plain NumPy
and deterministic for a given seed.
"""

from __future__ import annotations

import copy
import math
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LIFParams",
    "NetworkModel",
    "ForwardTrace",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "lif_step",
    "surrogate_grad",
    "build_network",
    "forward",
    "loss",
    "loss_and_grad_logits",
    "predict",
    "backward",
    "train",
    "evaluate",
    "flatten_static",
    "save_checkpoint",
    "load_checkpoint",
    "Adam",
]

CHECKPOINT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def _softplus(x):
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def _softplus_inv(y):
    return math.log(math.expm1(y))


@dataclass(frozen=True)
class LIFParams:
    beta: float = 0.95  # membrane decay per step
    theta: float = 1.0  # firing threshold
    v_reset: float = 0.0
    k: float = 25.0  # surrogate slope

    def __post_init__(self):
        if not (0 < self.beta < 1):
            raise ValueError("beta must lie in (0, 1)")
        if self.theta <= 0:
            raise ValueError("theta must be positive")


def lif_step(v: float, i: float, p: LIFParams) -> tuple[float, float]:
    """One membrane update: decay, integrate, threshold, soft reset."""
    v_pre = p.beta * v + i
    spike = 1.0 if v_pre >= p.theta else 0.0
    return spike, v_pre - spike * p.theta


def surrogate_grad(v_pre: float, p: LIFParams):
    """Fast-sigmoid spike derivative 1 / (1 + k |v_pre - theta|)^2."""
    return 1.0 / (1.0 + p.k * np.abs(v_pre - p.theta)) ** 2


@dataclass
class NetworkModel:
    """Layer sizes, affine weights, and per-layer unit parameters."""

    sizes: list[int]  # [D_in, hidden..., C]
    unit_kind: str  # "lif" | "relu"
    T: int
    weights: list[np.ndarray]  # per layer [out, in]
    biases: list[np.ndarray]
    beta_raw: np.ndarray  # per LIF layer, logistic-squashed decay
    theta_raw: np.ndarray  # per LIF layer, softplus-mapped threshold
    k: float = 25.0
    seed: int | None = None
    reset: str = "soft"  # "soft" subtracts theta; "hard" zeroes the membrane

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    @property
    def betas(self) -> np.ndarray:
        return _sigmoid(self.beta_raw)

    @property
    def thetas(self) -> np.ndarray:
        return _softplus(self.theta_raw)

    def parameters(self) -> dict[str, np.ndarray]:
        params = {}
        for l in range(self.n_layers):
            params[f"W{l}"] = self.weights[l]
            params[f"b{l}"] = self.biases[l]
        if self.unit_kind == "lif":
            params["beta_raw"] = self.beta_raw
            params["theta_raw"] = self.theta_raw
        return params

    def copy(self) -> "NetworkModel":
        return copy.deepcopy(self)


def build_network(
    sizes,
    unit_kind: str = "lif",
    T: int = 5,
    seed: int | None = 0,
    beta0: float = 0.95,
    theta0: float = 1.0,
    k: float = 25.0,
    reset: str = "soft",
) -> NetworkModel:
    """Fresh network with uniform +/- 1/sqrt(fan_in) weights."""
    if unit_kind not in ("lif", "relu"):
        raise ValueError("unit_kind must be 'lif' or 'relu' (mixed stacks rejected)")
    if reset not in ("soft", "hard"):
        raise ValueError("reset must be 'soft' or 'hard'")
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError("need at least input and output sizes, all positive")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        # uniform +-1/sqrt(fan_in) for weights and biases, matching the
        # linear-layer defaults of the usual deep-learning stacks
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    n_layers = len(sizes) - 1
    beta_raw = np.full(n_layers, math.log(beta0 / (1.0 - beta0)))
    theta_raw = np.full(n_layers, _softplus_inv(theta0))
    return NetworkModel(
        sizes=sizes,
        unit_kind=unit_kind,
        T=T,
        weights=weights,
        biases=biases,
        beta_raw=beta_raw,
        theta_raw=theta_raw,
        k=k,
        seed=seed,
        reset=reset,
    )


@dataclass
class ForwardTrace:
    """Everything a forward pass recorded, per layer: [T, B, units]."""

    spikes: list[np.ndarray]
    v_pre: list[np.ndarray]
    seq: np.ndarray  # [B, T, D] network input
    logits: np.ndarray  # [T, B, C] output membrane potentials (pre-reset)
    kind: str
    transmitted: list[np.ndarray] | None = None  # spikes after deletion, if any
    output_reset: bool = True  # False: integrating (non-spiking) readout

    def total_spikes(self) -> int:
        if self.kind != "lif":
            return 0
        return int(sum(s.sum() for s in self.spikes))

    def layer_inputs(self, layer: int) -> np.ndarray:
        """What layer ``layer`` saw at each step: [T, B, in_units]."""
        if layer == 0:
            return self.seq.transpose(1, 0, 2)
        if self.kind == "relu":
            return self.v_pre[layer - 1]  # hidden entries are post-ReLU
        sent = self.transmitted if self.transmitted is not None else self.spikes
        return sent[layer - 1]


def _smooth_spike(u: np.ndarray, k: float) -> np.ndarray:
    # Differentiable stand-in whose exact derivative is the fast-sigmoid
    # surrogate; used only for gradient verification.
    return u / (1.0 + k * np.abs(u)) + 0.5


def forward(
    model: NetworkModel,
    seq,
    deletion_p: float = 0.0,
    rng=None,
    smooth: bool = False,
    output_reset: bool = True,
) -> ForwardTrace:
    """Run the network over a [B, T, D] (or [T, D]) input sequence.

    ``deletion_p`` independently zeroes transmitted hidden-layer spikes
    (the neuron's own reset still happens); no RNG is consumed at p=0.
    ``output_reset=False`` turns the output layer into a pure leaky
    integrator (no spikes, no reset) for potential-readout heads.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim == 2:
        seq = seq[None]
    B, T, D = seq.shape
    if D != model.sizes[0]:
        raise ValueError(f"input width {D} != model input size {model.sizes[0]}")
    L = model.n_layers

    if model.unit_kind == "relu":
        acts = []
        logits = np.empty((T, B, model.sizes[-1]))
        for t in range(T):
            x = seq[:, t, :]
            layer_acts = []
            for l in range(L):
                z = x @ model.weights[l].T + model.biases[l]
                if l < L - 1:
                    x = np.maximum(z, 0.0)
                    layer_acts.append(x)
                else:
                    logits[t] = z
                    layer_acts.append(z)
            acts.append(layer_acts)
        v_pre = [np.stack([acts[t][l] for t in range(T)]) for l in range(L)]
        return ForwardTrace(
            spikes=[np.zeros_like(a) for a in v_pre],
            v_pre=v_pre,
            seq=seq,
            logits=logits,
            kind="relu",
        )

    betas, thetas = model.betas, model.thetas
    v = [np.zeros((B, s)) for s in model.sizes[1:]]
    spikes = [np.empty((T, B, s)) for s in model.sizes[1:]]
    v_pre_rec = [np.empty((T, B, s)) for s in model.sizes[1:]]
    transmitted = None
    if deletion_p > 0.0:
        rng = np.random.default_rng(rng)
        transmitted = [np.empty((T, B, s)) for s in model.sizes[1:]]
    logits = np.empty((T, B, model.sizes[-1]))
    for t in range(T):
        x = seq[:, t, :]
        for l in range(L):
            i_t = x @ model.weights[l].T + model.biases[l]
            v_pre = betas[l] * v[l] + i_t
            if l == L - 1 and not output_reset:
                s = np.zeros_like(v_pre)
            elif smooth:
                s = _smooth_spike(v_pre - thetas[l], model.k)
            else:
                s = (v_pre >= thetas[l]).astype(np.float64)
            if model.reset == "hard":
                v[l] = v_pre * (1.0 - s)
            else:
                v[l] = v_pre - s * thetas[l]
            v_pre_rec[l][t] = v_pre
            spikes[l][t] = s
            sent = s
            if deletion_p > 0.0 and l < L - 1:
                sent = s * (rng.random(s.shape) >= deletion_p)
            if transmitted is not None:
                transmitted[l][t] = sent
            x = sent
        logits[t] = v_pre_rec[L - 1][t]
    return ForwardTrace(
        spikes=spikes,
        v_pre=v_pre_rec,
        seq=seq,
        logits=logits,
        kind="lif",
        transmitted=transmitted,
        output_reset=output_reset,
    )


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def loss(trace: ForwardTrace, labels) -> float:
    """Mean over time steps of softmax cross-entropy on output potentials."""
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    T, B, C = trace.logits.shape
    if np.any(labels < 0) or np.any(labels >= C):
        raise ValueError("label out of range")
    logp = _log_softmax(trace.logits)
    return float(-logp[:, np.arange(B), labels].mean(axis=0).mean())


def loss_and_grad_logits(trace: ForwardTrace, labels):
    """Loss plus dL/dlogits per step, scaled for the (T, batch) means."""
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    T, B, C = trace.logits.shape
    logp = _log_softmax(trace.logits)
    value = float(-logp[:, np.arange(B), labels].mean(axis=0).mean())
    grad = np.exp(logp)
    grad[:, np.arange(B), labels] -= 1.0
    grad /= T * B
    return value, grad


def predict(trace: ForwardTrace) -> np.ndarray:
    """Class per sample: spike-count argmax (LIF) or summed logits (ReLU).

    Ties, including fully silent outputs, resolve to the lowest index.
    """
    if trace.kind == "lif":
        counts = trace.spikes[-1].sum(axis=0)  # [B, C]
    else:
        counts = trace.logits.sum(axis=0)
    return np.argmax(counts, axis=1)


def backward(
    model: NetworkModel,
    trace: ForwardTrace,
    grad_logits: np.ndarray,
    smooth: bool = False,
) -> dict[str, np.ndarray]:
    """BPTT through the recorded trace; returns grads keyed like parameters().

    The spike derivative uses the fast-sigmoid surrogate; with
    ``smooth=True`` the trace must come from a smooth forward pass, making
    the gradient exact (used by finite-difference checks).
    """
    T, B, _ = grad_logits.shape
    L = model.n_layers

    if model.unit_kind == "relu":
        grads = {}
        g_x = None
        for l in reversed(range(L)):
            x_in = trace.layer_inputs(l)
            if l == L - 1:
                g_z = grad_logits
            else:
                g_z = g_x * (trace.v_pre[l] > 0.0)
            gW = np.einsum("tbo,tbi->oi", g_z, x_in)
            gb = g_z.sum(axis=(0, 1))
            grads[f"W{l}"] = gW
            grads[f"b{l}"] = gb
            g_x = np.einsum("tbo,oi->tbi", g_z, model.weights[l])
        return grads

    betas, thetas = model.betas, model.thetas
    grads = {f"W{l}": np.zeros_like(model.weights[l]) for l in range(L)}
    grads.update({f"b{l}": np.zeros_like(model.biases[l]) for l in range(L)})
    g_beta = np.zeros(L)
    g_theta = np.zeros(L)

    g_x_above = None  # dL/d(spikes of layer l) via the layer above, [T,B,units]
    for l in reversed(range(L)):
        v_pre = trace.v_pre[l]
        s = trace.spikes[l]
        x_in = trace.layer_inputs(l)
        integrating = l == L - 1 and not trace.output_reset
        surr = 1.0 / (1.0 + model.k * np.abs(v_pre - thetas[l])) ** 2
        g_vpre = np.zeros((T, B, model.sizes[l + 1]))
        g_vpre_next = np.zeros((B, model.sizes[l + 1]))
        hard = model.reset == "hard"
        for t in reversed(range(T)):
            g_v = betas[l] * g_vpre_next
            if hard:
                g_s = g_v * (-v_pre[t])
            else:
                g_s = g_v * (-thetas[l])
            if g_x_above is not None:
                g_s = g_s + g_x_above[t]
            if integrating:  # no spike or reset path at the readout
                g = g_v
            elif hard:
                g = g_v * (1.0 - s[t]) + surr[t] * g_s
            else:
                g = g_v + surr[t] * g_s
            if l == L - 1:
                g = g + grad_logits[t]
            g_vpre[t] = g
            g_vpre_next = g
            if t > 0:
                if hard:
                    v_prev = v_pre[t - 1] * (1.0 - s[t - 1])
                else:
                    v_prev = v_pre[t - 1] - s[t - 1] * thetas[l]
                g_beta[l] += float((g * v_prev).sum())
            if not integrating:
                theta_term = float((g_s * (-surr[t])).sum())
                if not hard:
                    theta_term += float((g_v * (-s[t])).sum())
                g_theta[l] += theta_term
        grads[f"W{l}"] += np.einsum("tbo,tbi->oi", g_vpre, x_in)
        grads[f"b{l}"] += g_vpre.sum(axis=(0, 1))
        g_x_above = np.einsum("tbo,oi->tbi", g_vpre, model.weights[l])

    grads["beta_raw"] = g_beta * betas * (1.0 - betas)
    grads["theta_raw"] = g_theta * _sigmoid(model.theta_raw)
    return grads


class Adam:
    """Adam over a dict of parameter arrays (updates in place)."""

    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1**self.t
        corr2 = 1.0 - b2**self.t
        for key, p in self.params.items():
            g = grads[key]
            self.m[key] = b1 * self.m[key] + (1 - b1) * g
            self.v[key] = b2 * self.v[key] + (1 - b2) * g * g
            mhat = self.m[key] / corr1
            vhat = self.v[key] / corr2
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-5
    batch: int = 32
    max_epochs: int = 500
    patience: int = 5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class TrainResult:
    best_model: NetworkModel
    history: list[dict] = field(default_factory=list)
    best_val_acc: float = 0.0
    convergence_epoch: int = 0
    spikes_at_convergence: int = 0
    wall_time: float = 0.0


def evaluate(model: NetworkModel, seqs, labels, batch: int = 256):
    """Accuracy and total spike count over a dataset."""
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    correct = 0
    spikes = 0
    for lo in range(0, n, batch):
        trace = forward(model, seqs[lo : lo + batch])
        correct += int((predict(trace) == labels[lo : lo + batch]).sum())
        spikes += trace.total_spikes()
    return correct / max(n, 1), spikes


def train(model: NetworkModel, train_data, val_data, cfg: TrainConfig) -> TrainResult:
    """Adam + BPTT with early stopping on validation accuracy.

    ``train_data``/``val_data`` are (seqs [n, T, D], labels) pairs. The
    history records per-epoch train loss, validation accuracy, and the
    spike count accumulated over that epoch's training passes; the
    convergence epoch is the first to reach 90% of the best accuracy.
    """
    X, y = train_data
    Xv, yv = val_data
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0 or len(Xv) == 0:
        raise ValueError("empty train or validation split")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(
        model.parameters(), cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    )
    best = TrainResult(best_model=model.copy())
    since_best = 0
    t0 = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(X))
        epoch_loss = 0.0
        epoch_spikes = 0
        for bi, lo in enumerate(range(0, len(X), cfg.batch)):
            idx = order[lo : lo + cfg.batch]
            trace = forward(model, X[idx])
            value, g_logits = loss_and_grad_logits(trace, y[idx])
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch, bi)
            grads = backward(model, trace, g_logits)
            opt.step(grads)
            epoch_loss += value * len(idx)
            epoch_spikes += trace.total_spikes()
        val_acc, _ = evaluate(model, Xv, yv)
        best.history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / len(X),
                "val_acc": val_acc,
                "spikes": epoch_spikes,
            }
        )
        if val_acc > best.best_val_acc:
            best.best_val_acc = val_acc
            best.best_model = model.copy()
            since_best = 0
        else:
            since_best += 1
        if since_best >= cfg.patience:
            break
    best.wall_time = time.perf_counter() - t0
    accs = np.array([row["val_acc"] for row in best.history])
    conv = int(np.argmax(accs >= 0.9 * accs.max()))
    best.convergence_epoch = conv + 1
    best.spikes_at_convergence = int(best.history[conv]["spikes"])
    return best


def flatten_static(seqs: np.ndarray) -> np.ndarray:
    """[n, T, D] sequences -> [n, 1, T*D] static inputs for the MLP twin."""
    seqs = np.asarray(seqs)
    n, T, D = seqs.shape
    return seqs.reshape(n, 1, T * D)


def save_checkpoint(path, model: NetworkModel):
    np.savez(
        path,
        version=np.array([CHECKPOINT_VERSION]),
        sizes=np.asarray(model.sizes, dtype=np.int64),
        unit_kind=np.frombuffer(model.unit_kind.encode(), dtype=np.uint8),
        T=np.array([model.T]),
        k=np.array([model.k]),
        seed=np.array([-1 if model.seed is None else model.seed]),
        reset=np.frombuffer(model.reset.encode(), dtype=np.uint8),
        beta_raw=model.beta_raw,
        theta_raw=model.theta_raw,
        **{f"W{l}": w for l, w in enumerate(model.weights)},
        **{f"b{l}": b for l, b in enumerate(model.biases)},
    )


def load_checkpoint(path) -> NetworkModel:
    with np.load(path) as data:
        version = int(data["version"][0])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        sizes = data["sizes"].tolist()
        n_layers = len(sizes) - 1
        seed = int(data["seed"][0])
        reset = (
            bytes(data["reset"].tobytes()).decode() if "reset" in data else "soft"
        )
        return NetworkModel(
            sizes=sizes,
            unit_kind=bytes(data["unit_kind"].tobytes()).decode(),
            T=int(data["T"][0]),
            weights=[data[f"W{l}"] for l in range(n_layers)],
            biases=[data[f"b{l}"] for l in range(n_layers)],
            beta_raw=data["beta_raw"],
            theta_raw=data["theta_raw"],
            k=float(data["k"][0]),
            seed=None if seed == -1 else seed,
            reset=reset,
        )
