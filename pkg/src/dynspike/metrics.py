"""Neural-activity and representation-quality measurements.

Everything here is a pure function of recorded forward traces (or of
representations derived from them): firing rates, population synchrony,
pairwise correlations, spike-deletion robustness, PCA-95% dimensionality
(via a self-contained Jacobi eigensolver), linear probes, and the
information-bottleneck plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import infodyn, snn

__all__ = [
    "ActivityStats",
    "ProbeResult",
    "firing_rate",
    "synchrony_cv",
    "pairwise_correlation",
    "rate_cv",
    "deletion_robustness",
    "effective_dim",
    "linear_probe",
    "ib_plane",
    "jacobi_eigh",
    "spike_count_reps",
    "activity_stats",
]

_ACTIVE_EPS = 1e-8  # spike-train std below this marks a unit silent
_CV_EPS = 1e-12


@dataclass
class ActivityStats:
    """Per-layer activity summary for one probe batch."""

    firing_rate: list[float]
    synchrony_cv: list[float]
    pairwise_corr: list[float]
    rate_cv: list[float]
    mean_current: list[float]
    std_current: list[float]
    silent_layers: list[int] = field(default_factory=list)


@dataclass
class ProbeResult:
    accuracy: float
    n_train: int
    n_test: int
    train_accuracy: float = 0.0


def firing_rate(trace: snn.ForwardTrace) -> list[float]:
    """Mean spike density per layer over (batch, units, steps)."""
    return [float(s.mean()) for s in trace.spikes]


def synchrony_cv(trace: snn.ForwardTrace) -> list[float]:
    """CV over time of the population rate, averaged over the batch.

    Layers whose population rate is zero for some sample are reported as
    NaN (flagged silent by ``activity_stats``).
    """
    out = []
    for s in trace.spikes:
        T = s.shape[0]
        if T < 2:
            raise ValueError("synchrony CV needs at least 2 time steps")
        pop = s.mean(axis=2)  # [T, B]
        mean = pop.mean(axis=0)
        std = pop.std(axis=0)
        ok = mean > 0
        out.append(float((std[ok] / mean[ok]).mean()) if ok.any() else float("nan"))
    return out


def pairwise_correlation(trace: snn.ForwardTrace) -> list[float]:
    """Mean |Pearson rho| over pairs of active units, per layer.

    Correlations are taken over the time axis of each sample's spike
    trains and averaged over the batch; units with spike-train std below
    1e-8 are excluded. Layers with fewer than two active units anywhere
    give NaN.
    """
    out = []
    for s in trace.spikes:
        T, B, N = s.shape
        vals = []
        for b in range(B):
            x = s[:, b, :]  # [T, N]
            std = x.std(axis=0)
            active = std > _ACTIVE_EPS
            if active.sum() < 2:
                continue
            xa = x[:, active]
            xa = (xa - xa.mean(axis=0)) / xa.std(axis=0)
            corr = (xa.T @ xa) / T
            iu = np.triu_indices(corr.shape[0], k=1)
            vals.append(float(np.abs(corr[iu]).mean()))
        out.append(float(np.mean(vals)) if vals else float("nan"))
    return out


def rate_cv(series) -> float:
    """std / (|mean| + eps) of a rate time series."""
    x = np.asarray(series, dtype=np.float64).ravel()
    if len(x) < 2:
        raise ValueError("rate series needs at least 2 points")
    return float(x.std() / (abs(x.mean()) + _CV_EPS))


def activity_stats(model: snn.NetworkModel, seqs) -> ActivityStats:
    """Full per-layer ActivityStats for a probe batch of input sequences."""
    trace = snn.forward(model, seqs)
    rates = firing_rate(trace)
    sync = synchrony_cv(trace)
    corr = pairwise_correlation(trace)
    rcv, mu_i, sd_i = [], [], []
    for l in range(model.n_layers):
        x_in = trace.layer_inputs(l)
        current = x_in @ model.weights[l].T + model.biases[l]
        mu_i.append(float(current.mean()))
        sd_i.append(float(current.std()))
        pop_rate = trace.spikes[l].mean(axis=(1, 2))  # [T]
        rcv.append(rate_cv(pop_rate))
    silent = [l for l, v in enumerate(sync) if not np.isfinite(v)]
    return ActivityStats(
        firing_rate=rates,
        synchrony_cv=sync,
        pairwise_corr=corr,
        rate_cv=rcv,
        mean_current=mu_i,
        std_current=sd_i,
        silent_layers=silent,
    )


def deletion_robustness(
    model: snn.NetworkModel,
    seqs,
    labels,
    p_grid,
    reps: int = 10,
    seed: int = 0,
    batch: int = 256,
) -> dict[float, float]:
    """Accuracy under random deletion of transmitted hidden-layer spikes.

    Each spike that fired in a hidden layer is zeroed on the wire with
    probability p (the neuron still resets); accuracy is averaged over
    ``reps`` repetitions per p. p=0 is evaluated clean, with no RNG draw.
    """
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    out = {}
    for p in p_grid:
        if not (0.0 <= p <= 0.8):
            raise ValueError("deletion probability must lie in [0, 0.8]")
        if p == 0.0:
            acc, _ = snn.evaluate(model, seqs, labels, batch=batch)
            out[0.0] = acc
            continue
        accs = []
        for _ in range(reps):
            correct = 0
            for lo in range(0, len(labels), batch):
                trace = snn.forward(
                    model, seqs[lo : lo + batch], deletion_p=p, rng=rng
                )
                correct += int(
                    (snn.predict(trace) == labels[lo : lo + batch]).sum()
                )
            accs.append(correct / len(labels))
        out[float(p)] = float(np.mean(accs))
    return out


def jacobi_eigh(A: np.ndarray, tol: float = 1e-10, max_sweeps: int = 50):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm falls below ``tol``
    relative to the matrix norm. Returns (eigenvalues desc, eigenvectors).
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    V = np.eye(n)
    scale = max(float(np.linalg.norm(A)), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2))
        if off / scale < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                # Rotation angle zeroing A[p, q] (Golub & Van Loan).
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    eigvals = np.diag(A).copy()
    order = np.argsort(eigvals)[::-1]
    return eigvals[order], V[:, order]


def effective_dim(reps, variance: float = 0.95) -> int:
    """Smallest k of principal components explaining ``variance`` of reps.

    ``reps`` is (n_samples, dim); when dim exceeds the sample count the
    Gram matrix is decomposed instead (same nonzero spectrum). The result
    is capped at the numerical rank.
    """
    X = np.asarray(reps, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    Xc = X - X.mean(axis=0)
    if d <= n:
        C = (Xc.T @ Xc) / (n - 1)
    else:
        C = (Xc @ Xc.T) / (n - 1)
    eigvals, _ = jacobi_eigh(C)
    eigvals = np.clip(eigvals, 0.0, None)
    total = eigvals.sum()
    if total <= 0:
        return 0
    rank = int((eigvals > 1e-12 * eigvals[0]).sum())
    cum = np.cumsum(eigvals) / total
    k = int(np.searchsorted(cum, variance) + 1)
    return min(k, rank)


def _stratified_split(labels: np.ndarray, test_frac: float, rng) -> tuple:
    train_idx, test_idx = [], []
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        idx = rng.permutation(idx)
        n_test = max(1, int(round(test_frac * len(idx))))
        test_idx.extend(idx[:n_test])
        train_idx.extend(idx[n_test:])
    return np.array(train_idx), np.array(test_idx)


def linear_probe(reps, labels, l2: float = 1e-4, seed: int = 0) -> ProbeResult:
    """Held-out accuracy of a multinomial logistic probe on representations.

    Features are standardized; the probe trains with full-batch gradient
    descent (L2 lambda=1e-4) until the gradient norm drops below 1e-6 or
    5000 iterations, on a stratified 80/20 split.
    """
    X = np.asarray(reps, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("linear probe needs at least 2 classes")
    y = np.searchsorted(classes, y)
    C = len(classes)
    rng = np.random.default_rng(seed)
    tr, te = _stratified_split(y, 0.2, rng)
    mu = X[tr].mean(axis=0)
    sd = X[tr].std(axis=0)
    sd[sd < 1e-12] = 1.0
    Xtr = (X[tr] - mu) / sd
    Xte = (X[te] - mu) / sd
    n, d = Xtr.shape
    W = np.zeros((C, d))
    b = np.zeros(C)
    onehot = np.eye(C)[y[tr]]
    # Fixed step from a Lipschitz bound of the regularized CE objective.
    lip = 0.25 * float(np.linalg.norm(Xtr, ord=2)) ** 2 / n + l2
    lr = 1.0 / lip
    for _ in range(5000):
        z = Xtr @ W.T + b
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        gW = (p - onehot).T @ Xtr / n + l2 * W
        gb = (p - onehot).mean(axis=0)
        gnorm = np.sqrt((gW**2).sum() + (gb**2).sum())
        W -= lr * gW
        b -= lr * gb
        if gnorm < 1e-6:
            break
    acc = float((np.argmax(Xte @ W.T + b, axis=1) == y[te]).mean())
    train_acc = float((np.argmax(Xtr @ W.T + b, axis=1) == y[tr]).mean())
    return ProbeResult(
        accuracy=acc, n_train=len(tr), n_test=len(te), train_accuracy=train_acc
    )


def spike_count_reps(trace: snn.ForwardTrace) -> list[np.ndarray]:
    """Per-layer time-aggregated spike counts, [B, units] each."""
    return [s.sum(axis=0) for s in trace.spikes]


def ib_plane(layer_reps, input_rep, labels, bins: int = 20, pca_dims: int = 10):
    """(I(T;X), I(T;Y)) per layer on the information plane."""
    labels = np.asarray(labels, dtype=np.int64)
    plane = []
    for rep in layer_reps:
        i_tx = infodyn.mutual_info(rep, input_rep, bins=bins, pca_dims=pca_dims)
        i_ty = infodyn.mutual_info(rep, labels, bins=bins, pca_dims=pca_dims)
        plane.append((i_tx, i_ty))
    return plane
