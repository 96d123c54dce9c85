"""Experiment drivers behind the CLI subcommands.

Each run function takes a validated config dict plus an output directory,
persists records incrementally (crash-safe JSONL), writes CSV summaries
and plot-ready data, and returns what its ``--check`` needs.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import backends, encoders, infodyn, meanfield, metrics, snn, statfit, tasks
from ..systems import EncodingConfig, SystemParams, mixed_oscillator
from .. import systems as dynsys
from . import probes
from .config import config_hash
from .records import RecordWriter, aggregate

__all__ = [
    "run_sweep",
    "run_attractors",
    "run_train",
    "run_rl",
    "run_binding",
    "run_theory",
    "run_report",
    "run_lyapunov",
    "run_ais",
    "run_encode",
    "run_fit",
    "CheckFailure",
]

_SYSTEM_FACTORIES = {
    "lorenz": dynsys.lorenz,
    "rossler": dynsys.rossler,
    "aizawa": dynsys.aizawa,
    "nose_hoover": dynsys.nose_hoover,
    "sprott_c": dynsys.sprott_c,
    "chua": dynsys.chua,
}


class CheckFailure(AssertionError):
    """An acceptance-style --check did not hold."""


def make_system(name: str, delta: float | None = None) -> SystemParams:
    if name == "mixed_oscillator":
        if delta is None:
            raise ValueError("mixed_oscillator needs a delta")
        return mixed_oscillator(delta)
    try:
        return _SYSTEM_FACTORIES[name]()
    except KeyError:
        raise ValueError(f"unknown system {name!r}")


def encoder_from_config(cfg_enc: dict, delta: float | None = None) -> encoders.EncoderSpec:
    variant = cfg_enc["variant"]
    if variant != "dynamical":
        return encoders.EncoderSpec(
            variant,
            T=cfg_enc["T"],
            threshold=cfg_enc["threshold"],
            decay=cfg_enc["decay"],
        )
    sys = make_system(cfg_enc["system"], cfg_enc["delta"] if delta is None else delta)
    enc_cfg = EncodingConfig(
        t_max=cfg_enc["t_max"], n_steps=cfg_enc["n_steps"], h=cfg_enc["h"]
    )
    return encoders.EncoderSpec("dynamical", system=sys, config=enc_cfg)


def build_dataset(cfg_ds: dict) -> tasks.Dataset:
    kind = cfg_ds["kind"]
    rng = cfg_ds["seed"]
    if kind == "blobs":
        return tasks.gen_blobs(
            cfg_ds["n"], cfg_ds["d"], cfg_ds["classes"], cfg_ds["spread"], rng
        )
    if kind == "binding":
        return tasks.gen_binding(cfg_ds["n"], cfg_ds["dim"], cfg_ds["noise"], rng)
    if kind == "csv":
        return tasks.load_dataset_csv(cfg_ds["train_csv"])
    raise ValueError(f"unknown dataset kind {kind!r}")


def split_dataset(cfg_ds: dict):
    """(train, val, test) split; a test CSV overrides the test fraction."""
    data = build_dataset(cfg_ds)
    if cfg_ds["kind"] == "csv" and cfg_ds["test_csv"]:
        test = tasks.load_dataset_csv(cfg_ds["test_csv"])
        train_all = data
    else:
        train_all, test = data.split(cfg_ds["test_frac"], rng=cfg_ds["seed"] + 1)
    train, val = train_all.split(cfg_ds["val_frac"], rng=cfg_ds["seed"] + 2)
    return train, val, test


def _train_config(cfg_train: dict, seed: int) -> snn.TrainConfig:
    return snn.TrainConfig(
        lr=cfg_train["lr"],
        batch=cfg_train["batch"],
        max_epochs=cfg_train["max_epochs"],
        patience=cfg_train["patience"],
        seed=seed,
    )


def _train_one(kind, sizes, T, enc_train, enc_val, enc_test, labels3, cfg_train, seed):
    """Train one network and evaluate on the test encodings."""
    y_tr, y_va, y_te = labels3
    model = snn.build_network(sizes, kind, T=T, seed=seed)
    t0 = time.perf_counter()
    result = snn.train(model, (enc_train, y_tr), (enc_val, y_va), _train_config(cfg_train, seed))
    wall = time.perf_counter() - t0
    acc, _ = snn.evaluate(result.best_model, enc_test, y_te)
    return {
        "accuracy": acc,
        "convergence_epoch": result.convergence_epoch,
        "total_spikes": result.spikes_at_convergence,
        "best_val_acc": result.best_val_acc,
        "epochs": len(result.history),
        "wall_time": wall,
    }, result.best_model


def _sweep_point(args):
    """All runs for one delta of the sweep (worker-pool unit)."""
    cfg, delta, payload = args
    train_X, val_X, test_X, y_tr, y_va, y_te = payload
    sys = make_system(cfg["encoder"]["system"], delta)
    dyn = probes.mode_dynamics(sys, spectrum_t=cfg["lyapunov"]["t_total"])
    spec = encoder_from_config(cfg["encoder"], delta)
    enc_tr = encoders.batch_encode(spec, train_X)
    enc_va = encoders.batch_encode(spec, val_X)
    enc_te = encoders.batch_encode(spec, test_X)
    d_in = enc_tr.shape[2]
    sizes = [d_in] + list(cfg["network"]["hidden"]) + [int(y_tr.max()) + 1]
    T = cfg["network"]["T"]
    records = []
    base = {
        "kind": "sweep",
        "delta": delta,
        "lambda_max": dyn.lambda_max,
        "lambda_sum": dyn.lambda_sum,
        "ais": dyn.ais_mean,
        "tau_corr": dyn.tau_corr,
        "diverging": dyn.diverging,
    }
    for seed in cfg["seeds"]:
        stats, _ = _train_one(
            "lif", sizes, T, enc_tr, enc_va, enc_te, (y_tr, y_va, y_te),
            cfg["train"], seed,
        )
        records.append({**base, "model": "snn", "seed": seed, **stats})
        if cfg["mlp_twin"]:
            flat = [snn.flatten_static(e) for e in (enc_tr, enc_va, enc_te)]
            mlp_sizes = [flat[0].shape[2]] + list(cfg["network"]["hidden"]) + [sizes[-1]]
            stats, _ = _train_one(
                "relu", mlp_sizes, 1, flat[0], flat[1], flat[2],
                (y_tr, y_va, y_te), cfg["train"], seed,
            )
            records.append({**base, "model": "mlp", "seed": seed, **stats})
    return records


def _pool_map(fn, items, jobs):
    """Yield results in input order as workers finish (records append
    incrementally, so an interrupted grid keeps its completed points)."""
    if jobs <= 1 or len(items) <= 1:
        for item in items:
            yield fn(item)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(fn, items)


def run_sweep(cfg: dict, out_dir, jobs: int = 1, check: bool = False):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    train, val, test = split_dataset(cfg["dataset"])
    payload = (
        train.features, val.features, test.features,
        train.labels, val.labels, test.labels,
    )
    work = [(cfg, float(d), payload) for d in cfg["deltas"]]
    results = _pool_map(_sweep_point, work, jobs)
    summary_rows = []
    for delta, recs in zip(cfg["deltas"], results):
        for rec in recs:
            writer.append(rec)
        snn_recs = [r for r in recs if r["model"] == "snn"]
        mlp_recs = [r for r in recs if r["model"] == "mlp"]
        acc = aggregate([r["accuracy"] for r in snn_recs])
        spk = aggregate([r["total_spikes"] for r in snn_recs])
        conv = aggregate([r["convergence_epoch"] for r in snn_recs])
        row = {
            "delta": delta,
            "lambda_max": snn_recs[0]["lambda_max"],
            "lambda_sum": snn_recs[0]["lambda_sum"],
            "ais": snn_recs[0]["ais"],
            "tau_corr": snn_recs[0]["tau_corr"],
            "snn_acc_mean": acc["mean"],
            "snn_acc_std": acc["std"],
            "spikes_mean": spk["mean"],
            "spikes_std": spk["std"],
            "convergence_mean": conv["mean"],
            "mlp_acc_mean": aggregate([r["accuracy"] for r in mlp_recs])["mean"],
            "n_seeds": acc["n"],
        }
        summary_rows.append(row)
    writer.write_summary(summary_rows)
    lam = [row["lambda_sum"] for row in summary_rows]
    spikes = [row["spikes_mean"] for row in summary_rows]
    accs = [row["snn_acc_mean"] for row in summary_rows]
    stds = [row["spikes_std"] for row in summary_rows]
    writer.write_plotdata(
        "spikes_vs_lambda_sum", lam, spikes,
        [s - e for s, e in zip(spikes, stds)], [s + e for s, e in zip(spikes, stds)],
    )
    writer.write_plotdata("accuracy_vs_lambda_sum", lam, accs)
    writer.write_plotdata("ais_vs_delta", [r["delta"] for r in summary_rows],
                          [r["ais"] for r in summary_rows])
    fit = statfit.sigmoid_fit(lam, spikes) if len(lam) >= 5 else None
    if fit is not None:
        writer.save_json("sigmoid_fit.json", {"params": fit.params,
                                              "r_squared": fit.r_squared,
                                              "p_value": fit.p_value})
    if check:
        by_delta = {row["delta"]: row for row in summary_rows}
        lo, hi = min(by_delta), max(by_delta)
        ratio = by_delta[lo]["spikes_mean"] / max(by_delta[hi]["spikes_mean"], 1.0)
        if ratio < 2.5:
            raise CheckFailure(f"spike ratio {ratio:.2f} < 2.5")
        if fit is None or fit.r_squared <= 0.9:
            r2 = None if fit is None else fit.r_squared
            raise CheckFailure(f"sigmoid fit R^2 {r2} <= 0.9")
    return summary_rows


def _attractor_point(args):
    cfg, name, t_max, n_steps, payload = args
    train_X, val_X, test_X, y_tr, y_va, y_te = payload
    sys = make_system(name)
    spec_cfg = EncodingConfig(t_max=t_max, n_steps=n_steps, h=cfg["h"])
    spec = encoders.EncoderSpec("dynamical", system=sys, config=spec_cfg)
    lyap = probes.mode_spectrum(sys, t_total=cfg["lyapunov"]["t_total"])
    ais_res = probes.mode_ais(sys, warmup=10.0)
    enc_tr = encoders.batch_encode(spec, train_X)
    enc_va = encoders.batch_encode(spec, val_X)
    enc_te = encoders.batch_encode(spec, test_X)
    sizes = [enc_tr.shape[2]] + list(cfg["network"]["hidden"]) + [int(y_tr.max()) + 1]
    records = []
    for seed in cfg["seeds"]:
        stats, _ = _train_one(
            "lif", sizes, n_steps, enc_tr, enc_va, enc_te,
            (y_tr, y_va, y_te), cfg["train"], seed,
        )
        records.append(
            {
                "kind": "attractors",
                "system": name,
                "t_max": t_max,
                "n_steps": n_steps,
                "seed": seed,
                "lambda_max": lyap.lambda_max,
                "lambda_sum": lyap.lambda_sum,
                "ais": ais_res.mean,
                **stats,
            }
        )
    return records


def run_attractors(cfg: dict, out_dir, jobs: int = 1, check: bool = False):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    train, val, test = split_dataset(cfg["dataset"])
    payload = (
        train.features, val.features, test.features,
        train.labels, val.labels, test.labels,
    )
    work = [
        (cfg, name, float(t), int(n), payload)
        for name in cfg["systems"]
        for t in cfg["t_max_grid"]
        for n in cfg["n_steps_grid"]
    ]
    results = _pool_map(_attractor_point, work, jobs)
    summary_rows = []
    for recs in results:
        for rec in recs:
            writer.append(rec)
        acc = aggregate([r["accuracy"] for r in recs])
        spk = aggregate([r["total_spikes"] for r in recs])
        summary_rows.append(
            {
                "system": recs[0]["system"],
                "t_max": recs[0]["t_max"],
                "n_steps": recs[0]["n_steps"],
                "lambda_max": recs[0]["lambda_max"],
                "lambda_sum": recs[0]["lambda_sum"],
                "ais": recs[0]["ais"],
                "acc_mean": acc["mean"],
                "acc_std": acc["std"],
                "spikes_mean": spk["mean"],
            }
        )
    writer.write_summary(summary_rows)
    return summary_rows


def run_train(cfg: dict, out_dir):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    train, val, test = split_dataset(cfg["dataset"])
    kind = cfg["kind"]
    spec = encoder_from_config(cfg["encoder"])
    enc = [encoders.batch_encode(spec, d.features) for d in (train, val, test)]
    if kind == "relu":
        enc = [snn.flatten_static(e) for e in enc]
        T = 1
    else:
        T = cfg["network"]["T"]
    sizes = [enc[0].shape[2]] + list(cfg["network"]["hidden"]) + [train.n_classes]
    stats, model = _train_one(
        kind, sizes, T, enc[0], enc[1], enc[2],
        (train.labels, val.labels, test.labels), cfg["train"], cfg["seed"],
    )
    ckpt = Path(out_dir) / cfg["checkpoint"]
    snn.save_checkpoint(ckpt, model)
    record = writer.append(
        {"kind": "train", "seed": cfg["seed"], "model": kind,
         "checkpoint": str(ckpt), **stats}
    )
    return record


def _rl_run(args):
    cfg, mode, seed = args
    hidden = list(cfg["hidden"])
    if mode == "mlp":
        spec = None
        sizes = [4] + hidden + [2]
        kind, T = "relu", 1
    else:
        delta = cfg["mode_deltas"][mode]
        spec = encoder_from_config(cfg["encoder"], delta)
        sizes = [12] + hidden + [2]
        kind, T = "lif", cfg["encoder"]["n_steps"]
    policy = snn.build_network(sizes, kind, T=T, seed=seed)
    rl_cfg = tasks.RLConfig(
        lr=cfg["lr"], gamma=cfg["gamma"], episodes=cfg["episodes"], seed=seed
    )
    t0 = time.perf_counter()
    history = tasks.reinforce_train(policy, spec, rl_cfg, rng=seed)
    wall = time.perf_counter() - t0
    returns = [h["return"] for h in history]
    final100 = float(np.mean(returns[-100:]))
    record = {
        "kind": "rl",
        "mode": mode,
        "seed": seed,
        "final100_mean_return": final100,
        "best_return": float(np.max(returns)),
        "solved": bool(any(h["solved"] for h in history)),
        "episodes": len(history),
        "mean_spikes_per_episode": float(np.mean([h["spikes"] for h in history])),
        "wall_time": wall,
    }
    return record, history


def run_rl(cfg: dict, out_dir, jobs: int = 1, check: bool = False):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    work = [(cfg, mode, seed) for mode in cfg["modes"] for seed in cfg["seeds"]]
    results = _pool_map(_rl_run, work, jobs)
    import json

    summary_rows = []
    by_mode: dict[str, list] = {}
    for (record, history) in results:
        writer.append(record)
        by_mode.setdefault(record["mode"], []).append(record)
        hist_path = Path(out_dir) / f"rl_history_{record['mode']}_{record['seed']}.jsonl"
        with open(hist_path, "w") as fh:
            for row in history:
                fh.write(json.dumps(row) + "\n")
    for mode, recs in by_mode.items():
        agg = aggregate([r["final100_mean_return"] for r in recs])
        summary_rows.append(
            {
                "mode": mode,
                "final100_mean": agg["mean"],
                "final100_std": agg["std"],
                "best_seed_final100": max(r["final100_mean_return"] for r in recs),
                "solve_rate": float(np.mean([r["solved"] for r in recs])),
                "spikes_mean": aggregate(
                    [r["mean_spikes_per_episode"] for r in recs]
                )["mean"],
                "n_seeds": len(recs),
            }
        )
    writer.write_summary(summary_rows)
    return summary_rows


def _binding_run(args):
    cfg, mode, seed, payload = args
    Xtr, Xva, Xte, y_tr, y_va, y_te = payload
    if mode == "mlp":
        enc = (Xtr[:, None, :], Xva[:, None, :], Xte[:, None, :])
        sizes = [Xtr.shape[1]] + list(cfg["network"]["hidden"]) + [2]
        kind, T = "relu", 1
    else:
        delta = cfg["mode_deltas"][mode]
        spec = encoder_from_config(cfg["encoder"], delta)
        enc = tuple(encoders.batch_encode(spec, X) for X in (Xtr, Xva, Xte))
        sizes = [enc[0].shape[2]] + list(cfg["network"]["hidden"]) + [2]
        kind, T = "lif", cfg["encoder"]["n_steps"]
    stats, model = _train_one(
        kind, sizes, T, enc[0], enc[1], enc[2], (y_tr, y_va, y_te),
        cfg["train"], seed,
    )
    reps = metrics.spike_count_reps(snn.forward(model, enc[2]))[-1] if kind == "lif" else None
    probe_acc = None
    if reps is not None and len(np.unique(y_te)) > 1:
        probe_acc = metrics.linear_probe(reps, y_te, seed=seed).accuracy
    return {"kind": "binding", "mode": mode, "seed": seed,
            "probe_accuracy": probe_acc, **stats}


def run_binding(cfg: dict, out_dir, jobs: int = 1, check: bool = False):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    data = build_dataset(cfg["dataset"])
    reduced, _ = tasks.pca_reduce(data.features, cfg["pca_dims"])
    data = tasks.Dataset(reduced, data.labels, data.n_classes, note="binding-pca")
    train_all, test = data.split(cfg["dataset"]["test_frac"], rng=cfg["dataset"]["seed"] + 1)
    train, val = train_all.split(cfg["dataset"]["val_frac"], rng=cfg["dataset"]["seed"] + 2)
    payload = (
        train.features, val.features, test.features,
        train.labels, val.labels, test.labels,
    )
    work = [(cfg, mode, seed, payload) for mode in cfg["modes"] for seed in cfg["seeds"]]
    results = _pool_map(_binding_run, work, jobs)
    summary_rows = []
    by_mode: dict[str, list] = {}
    for rec in results:
        writer.append(rec)
        by_mode.setdefault(rec["mode"], []).append(rec)
    for mode, recs in by_mode.items():
        acc = aggregate([r["accuracy"] for r in recs])
        summary_rows.append(
            {
                "mode": mode,
                "acc_mean": acc["mean"],
                "acc_std": acc["std"],
                "spikes_mean": aggregate([r["total_spikes"] for r in recs])["mean"],
                "probe_mean": aggregate([r["probe_accuracy"] for r in recs])["mean"],
                "n_seeds": acc["n"],
            }
        )
    writer.write_summary(summary_rows)
    if check:
        means = {row["mode"]: row["acc_mean"] for row in summary_rows}
        if "expansive" in means and "mlp" in means:
            if means["expansive"] < means["mlp"] + 0.10:
                raise CheckFailure(
                    f"expansive {means['expansive']:.3f} does not exceed "
                    f"mlp {means['mlp']:.3f} by 10 points"
                )
        if "expansive" in means and "transition" in means:
            if means["expansive"] <= means["transition"]:
                raise CheckFailure("expansive does not exceed transition")
    return summary_rows


def run_theory(cfg: dict, out_dir, check: bool = False):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    rows = []
    tau_m = cfg["tau_m"]
    for ratio in cfg["tau_ratios"]:
        tau_corr = ratio * tau_m
        var_eff = meanfield.effective_variance(cfg["sigma_i2"], tau_m, tau_corr)
        white = meanfield.effective_variance(cfg["sigma_i2"], tau_m, 0.0)
        factor = var_eff / white
        for mu in cfg["mu_grid"]:
            rate = meanfield.siegert_rate(
                meanfield.RateInputs(
                    mu_v=mu,
                    sigma_eff=math.sqrt(var_eff),
                    v_th=cfg["v_th"],
                    v_reset=cfg["v_reset"],
                    tau_m=tau_m,
                )
            )
            rows.append(
                {
                    "tau_ratio": ratio,
                    "tau_corr": tau_corr,
                    "variance_factor": factor,
                    "sigma_eff": math.sqrt(var_eff),
                    "mu_v": mu,
                    "rate": rate,
                }
            )
    writer.write_summary(rows, name="summary.csv")
    for row in rows:
        writer.append({"kind": "theory", **row})
    if check:
        factors = {}
        for row in rows:
            factors[row["tau_ratio"]] = row["variance_factor"]
        for ratio, expect in ((0.0, 1.0), (0.025, 1 / 1.025), (0.083, 1 / 1.083), (0.8, 1 / 1.8)):
            if ratio in factors and abs(factors[ratio] - expect) > 1e-9:
                raise CheckFailure(f"variance factor at ratio {ratio} is {factors[ratio]}")
    return rows


def run_report(cfg: dict, out_dir, check: bool = False):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    model = snn.load_checkpoint(cfg["checkpoint"])
    train, val, test = split_dataset(cfg["dataset"])
    spec = encoder_from_config(cfg["encoder"])
    enc_te = encoders.batch_encode(spec, test.features)
    if model.unit_kind == "relu":
        enc_te = snn.flatten_static(enc_te)
    probe_n = min(cfg["probe_batch"], len(enc_te))
    stats = metrics.activity_stats(model, enc_te[:probe_n])
    robustness = metrics.deletion_robustness(
        model, enc_te, test.labels, cfg["deletion_grid"],
        reps=cfg["deletion_reps"], seed=cfg["seed"],
    )
    trace = snn.forward(model, enc_te[:probe_n])
    reps = metrics.spike_count_reps(trace)
    input_rep = enc_te[:probe_n].reshape(probe_n, -1)
    if probe_n >= 100:  # MI estimator reliability floor
        plane = metrics.ib_plane(reps, input_rep, test.labels[:probe_n])
    else:
        plane = None
    probe = metrics.linear_probe(reps[-1], test.labels[:probe_n], seed=cfg["seed"])
    payload = {
        "firing_rate": stats.firing_rate,
        "synchrony_cv": stats.synchrony_cv,
        "pairwise_corr": stats.pairwise_corr,
        "rate_cv": stats.rate_cv,
        "mean_current": stats.mean_current,
        "std_current": stats.std_current,
        "deletion_robustness": robustness,
        "ib_plane": plane,
        "probe_accuracy": probe.accuracy,
    }
    writer.save_json("metrics_report.json", payload)
    for layer in range(model.n_layers):
        for metric in ("firing_rate", "synchrony_cv", "pairwise_corr", "rate_cv"):
            writer.append(
                {"kind": "metrics", "layer": layer + 1, "metric": metric,
                 "value": payload[metric][layer]}
            )
    writer.write_plotdata(
        "deletion_robustness",
        list(robustness.keys()), list(robustness.values()),
    )
    return payload


def run_lyapunov(cfg: dict, out_dir, check: bool = False):
    from ..lyapunov import LyapunovConfig, spectrum, stability_check

    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    lycfg = LyapunovConfig(
        h=cfg["lyapunov"]["h"],
        t_total=cfg["lyapunov"]["t_total"],
        qr_interval=cfg["lyapunov"]["qr_interval"],
        transient_steps=cfg["lyapunov"]["transient_steps"],
    )
    rows = []
    targets = [(name, None) for name in cfg["systems"]]
    targets += [("mixed_oscillator", float(d)) for d in cfg["deltas"]]
    for name, delta in targets:
        sys = make_system(name, delta)
        s0 = np.array(dynsys.default_init_map(1.0))
        if cfg["n_starts"] > 1:
            starts = s0 + 0.01 * np.random.default_rng(0).normal(
                size=(cfg["n_starts"], 3)
            )
            res = stability_check(sys, starts, lycfg)
            lams = res.mean
            extra = {"sum_spread": res.sum_spread, "unstable": res.unstable}
        else:
            sp = spectrum(sys, s0, lycfg)
            lams = sp.lambdas
            extra = {}
        row = {
            "system": sys.describe(),
            "delta": delta,
            "lambda_1": float(lams[0]),
            "lambda_2": float(lams[1]),
            "lambda_3": float(lams[2]),
            "lambda_sum": float(np.sum(lams)),
            **extra,
        }
        rows.append(row)
        writer.append({"kind": "lyapunov", **row})
    writer.write_summary(rows)
    return rows


def run_ais(cfg: dict, out_dir, check: bool = False):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    rows = []
    for name in cfg["systems"]:
        sys = make_system(name)
        res = probes.mode_ais(sys, bins=cfg["bins"], t_max=cfg["t_max"], warmup=10.0)
        rows.append({"system": name, "delta": None, "ais_mean": res.mean,
                     "ais_x": res.per_axis[0], "ais_y": res.per_axis[1],
                     "ais_z": res.per_axis[2]})
    for delta in cfg["deltas"]:
        sys = make_system("mixed_oscillator", float(delta))
        res = probes.mode_ais(sys, bins=cfg["bins"], t_max=cfg["t_max"])
        rows.append({"system": "mixed_oscillator", "delta": delta,
                     "ais_mean": res.mean, "ais_x": res.per_axis[0],
                     "ais_y": res.per_axis[1], "ais_z": res.per_axis[2]})
    for row in rows:
        writer.append({"kind": "ais", **row})
    writer.write_summary(rows)
    if check:
        by_delta = {r["delta"]: r["ais_mean"] for r in rows if r["delta"] is not None}
        if {2.0, -1.5, 10.0} <= set(by_delta):
            valley = by_delta[2.0]
            if not (valley < by_delta[-1.5] and valley < by_delta[10.0]):
                raise CheckFailure(
                    f"AIS valley violated: {valley:.3f} vs "
                    f"{by_delta[-1.5]:.3f} / {by_delta[10.0]:.3f}"
                )
    return rows


def run_encode(cfg: dict, out_dir):
    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    data = build_dataset(cfg["dataset"])
    spec = encoder_from_config(cfg["encoder"])
    values = encoders.batch_encode(spec, data.features, seed=cfg["seed"])
    key = encoders.cache_key(spec, data.features, cfg["seed"])
    path = Path(out_dir) / cfg["cache"]
    encoders.save_cache(path, values, cfg["seed"], key)
    writer.append(
        {"kind": "encode", "cache": str(path), "shape": list(values.shape),
         "spec_hash": key}
    )
    return {"cache": str(path), "shape": values.shape}


def run_fit(cfg: dict, out_dir):
    import csv as _csv
    import json

    writer = RecordWriter(out_dir, config_hash(cfg), backends.backend_name())
    with open(cfg["input_csv"]) as fh:
        reader = _csv.DictReader(fh)
        rows = list(reader)
    x = np.array([float(r[cfg["x_column"]]) for r in rows])
    y = np.array([float(r[cfg["y_column"]]) for r in rows])
    kind = cfg["kind"]
    if kind == "sigmoid":
        fit = statfit.sigmoid_fit(x, y)
        payload = {"kind": kind, "params": fit.params, "r_squared": fit.r_squared,
                   "p_value": fit.p_value, "n": fit.n, "converged": fit.converged}
    elif kind == "powerlaw":
        fits = statfit.powerlaw_fit(x, y, cfg["lambda_c"])
        payload = {
            "kind": kind,
            "sides": {
                label: {"params": f.params, "r_squared": f.r_squared,
                        "p_value": f.p_value, "n": f.n, "n_dropped": f.n_dropped}
                for label, f in fits.items()
            },
        }
    elif kind == "pearson":
        r, p = statfit.pearson(x, y)
        payload = {"kind": kind, "r": r, "p_value": p, "n": len(x)}
    else:
        raise ValueError(f"unknown fit kind {kind!r}")
    fits_path = Path(out_dir) / "fits.json"
    existing = []
    if fits_path.exists():
        with open(fits_path) as fh:
            existing = json.load(fh)
    existing.append(payload)
    writer.save_json("fits.json", existing)
    writer.append({"kind": "fit", **payload})
    return payload
