"""End-to-end training and evaluation pipelines.

Reconstruction: train an MLP to map noisy Bloch vectors back to their
noiseless originals, then report the Average Test Fidelity (ATF), the
mean Uhlmann fidelity between reconstructed and ideal states over a
held-out test set. The general fidelity is always used for the final
report, regardless of which loss drove training, and both the MSE and
infidelity training curves are recorded every epoch.

Classification: train a softmax MLP with cross-entropy to identify which
noise channel corrupted a state, and report test accuracy.

All runs are deterministic given the master seed: data seeds, the init
seed and the shuffle seed are spawned from it through a fixed Philox
stream, which also keeps train and test data disjoint.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import neuralnet as nn
from .channels import parse_channel_spec
from .qstate import bloch_from_density, density_from_bloch, fidelity_general
from .sampling import (
    ClassDataset,
    Dataset,
    build_classification_dataset,
    build_reconstruction_dataset,
    haar_pure,
    record_rng,
    stream_rng,
)

DEFAULT_TEST_SIZE = 500


@dataclass
class TrainConfig:
    task: str = "reconstruct"  # "reconstruct" | "classify"
    loss: str = nn.MSE
    hidden: list = field(default_factory=lambda: [128, 128])
    epochs: int = 0  # 0 -> per-task default
    batch_size: int = 0  # 0 -> full batch for M <= 64, else 32
    lr: float = 1e-3
    seed: int = 0
    repeats: int = 1
    purity_mode: str = "exact_norm"

    def resolved_epochs(self, n):
        if self.epochs:
            return self.epochs
        if self.task == "classify":
            return 600
        return 2000 if n == 1 else 1000

    def resolved_batch(self, M):
        if self.batch_size:
            return min(self.batch_size, M)
        return M if M <= 64 else 32


@dataclass
class MetricsLog:
    rows: list  # one dict per epoch
    final_metric: str  # "ATF" | "ACC"
    final_value: float
    test_size: int
    seed: int
    duration: float  # seconds; reported on stdout, kept out of files


def spawn_seeds(master, count):
    """Deterministic child seeds from a master seed."""
    return [int(s) for s in stream_rng(master).integers(0, 2**63, size=count)]


def _reconstruction_head(ds, purity_mode="exact_norm"):
    if ds.kind == "pure":
        return nn.Head("unit_norm", target_norm=float(np.sqrt(2**ds.n - 1)))
    return nn.Head("purity_rescale", mode=purity_mode)


def _clean_purities(ds):
    # Per-sample purity of the clean states, used by the purity_rescale head.
    return (1.0 + np.sum(ds.clean * ds.clean, axis=1)) / 2**ds.n


def evaluate_atf(model, test):
    """Mean Uhlmann fidelity between reconstructed and ideal test states."""
    if model.head.kind not in ("unit_norm", "purity_rescale", "linear"):
        raise ValueError("evaluate_atf requires a reconstruction model")
    purities = _clean_purities(test) if model.head.kind == "purity_rescale" else None
    preds = nn.forward(model, test.noisy, purities)
    total = 0.0
    for i in range(test.M):
        rho = density_from_bloch(test.clean[i])
        sigma = density_from_bloch(preds[i])
        total += fidelity_general(rho, sigma)
    return total / test.M


def evaluate_accuracy(model, test):
    """Fraction of correctly classified test samples."""
    hits = nn.predict_class(model, test.inputs) == test.labels
    return float(np.mean(hits))


def _resolve_recon_loss(loss, kind):
    # "infidelity" picks the pure or mixed Bloch form to match the data.
    if loss == "infidelity":
        return nn.INFIDELITY_PURE if kind == "pure" else nn.INFIDELITY_MIXED
    return loss


def train_reconstruction(cfg, train, test):
    """Mini-batch Adam training on (noisy, clean) pairs; returns (model, log)."""
    if cfg.task != "reconstruct":
        raise ValueError("config task must be 'reconstruct'")
    start = time.perf_counter()
    loss_kind = _resolve_recon_loss(cfg.loss, train.kind)
    if loss_kind not in (nn.MSE, nn.INFIDELITY_PURE, nn.INFIDELITY_MIXED):
        raise ValueError(f"not a reconstruction loss: {cfg.loss!r}")
    d = 4**train.n - 1
    head = _reconstruction_head(train, cfg.purity_mode)
    init_seed, shuffle_seed = spawn_seeds(cfg.seed, 2)
    model = nn.init_model([d] + list(cfg.hidden) + [d], head, stream_rng(init_seed))
    adam = nn.adam_init(model, lr=cfg.lr)
    shuffle = stream_rng(shuffle_seed)
    purities = _clean_purities(train) if head.kind == "purity_rescale" else None
    inf_kind = nn.INFIDELITY_PURE if train.kind == "pure" else nn.INFIDELITY_MIXED

    epochs = cfg.resolved_epochs(train.n)
    batch = cfg.resolved_batch(train.M)
    rows = []
    for epoch in range(1, epochs + 1):
        perm = shuffle.permutation(train.M)
        epoch_loss = 0.0
        num_batches = 0
        for lo in range(0, train.M, batch):
            idx = perm[lo : lo + batch]
            p = purities[idx] if purities is not None else None
            loss, gw, gb = nn.backward(model, train.noisy[idx], train.clean[idx], loss_kind, p)
            nn.adam_step(adam, model, gw, gb)
            epoch_loss += loss
            num_batches += 1
        # Record both curves on the full training set, whichever drove training.
        preds = nn.forward(model, train.noisy, purities)
        rows.append(
            {
                "epoch": epoch,
                "loss": epoch_loss / num_batches,
                "mse": nn.loss_mse(preds, train.clean),
                "infidelity": nn.loss_infidelity(preds, train.clean, inf_kind),
            }
        )
    atf = evaluate_atf(model, test)
    model.meta = {
        "task": "reconstruct",
        "loss": loss_kind,
        "n": train.n,
        "kind": train.kind,
        "channel_spec": train.channel_spec,
        "train_seed": train.seed,
        "config_seed": cfg.seed,
    }
    log = MetricsLog(rows, "ATF", atf, test.M, cfg.seed, time.perf_counter() - start)
    return model, log


def train_classification(cfg, train, test):
    """Cross-entropy training of a softmax classifier; returns (model, log)."""
    if cfg.task != "classify":
        raise ValueError("config task must be 'classify'")
    start = time.perf_counter()
    d_in = train.inputs.shape[1]
    num_classes = train.num_classes
    init_seed, shuffle_seed = spawn_seeds(cfg.seed, 2)
    model = nn.init_model(
        [d_in] + list(cfg.hidden) + [num_classes], nn.Head("softmax"), stream_rng(init_seed)
    )
    adam = nn.adam_init(model, lr=cfg.lr)
    shuffle = stream_rng(shuffle_seed)

    epochs = cfg.resolved_epochs(train.n)
    batch = cfg.resolved_batch(train.M)
    rows = []
    for epoch in range(1, epochs + 1):
        perm = shuffle.permutation(train.M)
        for lo in range(0, train.M, batch):
            idx = perm[lo : lo + batch]
            _, gw, gb = nn.backward(model, train.inputs[idx], train.labels[idx], nn.CCE)
            nn.adam_step(adam, model, gw, gb)
        probs = nn.forward(model, train.inputs)
        # Report the per-sample mean cross-entropy.
        rows.append({"epoch": epoch, "loss": nn.loss_cce(probs, train.labels) / train.M})
    acc = evaluate_accuracy(model, test)
    model.meta = {
        "task": "classify",
        "loss": nn.CCE,
        "n": train.n,
        "mode": train.mode,
        "channel_specs": train.channel_specs,
        "train_seed": train.seed,
        "config_seed": cfg.seed,
    }
    log = MetricsLog(rows, "ACC", acc, test.M, cfg.seed, time.perf_counter() - start)
    return model, log


def run_reconstruction_experiment(cfg, channel_spec, n, kind, train_size,
                                  test_size=DEFAULT_TEST_SIZE):
    """Generate disjoint train/test data from cfg.seed, train, and evaluate."""
    train_seed, test_seed = spawn_seeds(cfg.seed ^ 0x5EED, 2)
    train = build_reconstruction_dataset(channel_spec, n, train_size, kind, train_seed)
    test = build_reconstruction_dataset(channel_spec, n, test_size, kind, test_seed)
    return train_reconstruction(cfg, train, test)


def sweep_dataset_size(cfg, channel_spec, n, kind, sizes, repeats=5,
                       test_size=DEFAULT_TEST_SIZE, jobs=1):
    """Dataset-size sweep: mean/std/best final ATF per training-set size.

    Each repeat uses fresh training data and a fresh initialization.
    Returns rows of (size, mean, std, best, seeds).
    """
    repeat_seeds = spawn_seeds(cfg.seed, repeats)

    def one_run(size, rseed):
        from dataclasses import replace

        run_cfg = replace(cfg, seed=rseed, repeats=1)
        _, log = run_reconstruction_experiment(
            run_cfg, channel_spec, n, kind, size, test_size
        )
        return log.final_value

    rows = []
    for size in sizes:
        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                atfs = list(pool.map(lambda s: one_run(size, s), repeat_seeds))
        else:
            atfs = [one_run(size, s) for s in repeat_seeds]
        rows.append(
            {
                "size": size,
                "mean": float(np.mean(atfs)),
                "std": float(np.std(atfs)),
                "best": float(np.max(atfs)),
                "seeds": list(repeat_seeds),
            }
        )
    return rows


def bloch_cloud(channel_spec, samples, seed):
    """Uniform pure single-qubit states and their noisy images.

    Returns (clean, noisy) arrays of shape (samples, 3); plotting the
    noisy points shows the deformed Bloch sphere of the channel.
    """
    channel = parse_channel_spec(channel_spec)
    if channel.n != 1:
        raise ValueError("bloch_cloud requires a single-qubit channel")
    clean = np.empty((samples, 3))
    noisy = np.empty((samples, 3))
    for i in range(samples):
        rho = haar_pure(1, record_rng(seed, i))
        clean[i] = bloch_from_density(rho)
        noisy[i] = bloch_from_density(channel(rho))
    return clean, noisy


def _fmt(x):
    return format(float(x), ".17g")


def save_metrics(log, path):
    """Comma-separated metrics: header, one row per epoch, final summary row.

    Wall-clock duration is deliberately left out so reruns with the same
    seed produce byte-identical files.
    """
    lines = []
    if log.final_metric == "ATF":
        lines.append("epoch,loss,mse,infidelity")
        for row in log.rows:
            lines.append(
                f"{row['epoch']},{_fmt(row['loss'])},{_fmt(row['mse'])},{_fmt(row['infidelity'])}"
            )
    else:
        lines.append("epoch,loss")
        for row in log.rows:
            lines.append(f"{row['epoch']},{_fmt(row['loss'])}")
    lines.append(f"final,{log.final_metric},{_fmt(log.final_value)},N={log.test_size},seed={log.seed}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def save_sweep(rows, path):
    """Sweep table: size, mean, std, best, seeds (seeds ';'-separated)."""
    lines = ["size,mean,std,best,seeds"]
    for row in rows:
        seeds = ";".join(str(s) for s in row["seeds"])
        lines.append(
            f"{row['size']},{_fmt(row['mean'])},{_fmt(row['std'])},{_fmt(row['best'])},{seeds}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def save_bloch_cloud(clean, noisy, path):
    """Point pairs as comma-separated rows: clean xyz then noisy xyz."""
    lines = ["clean_x,clean_y,clean_z,noisy_x,noisy_y,noisy_z"]
    for c, m in zip(clean, noisy):
        lines.append(",".join(_fmt(v) for v in (*c, *m)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
