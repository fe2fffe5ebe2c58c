"""Random-state sampling and dataset construction.

Pure states are drawn from the Haar distribution (normalized complex
Gaussian vectors), mixed states from the Ginibre ensemble (GG^dag
normalized to unit trace, i.e. the Hilbert-Schmidt measure).

Datasets pair noisy and noiseless Bloch vectors (reconstruction) or map
Bloch-vector inputs to channel labels (classification). Generation is
reproducible: each record gets its own Philox substream keyed by
(seed, record index), so record i is independent of generation order.

File format: UTF-8, first line a JSON metadata object, then one record
per line of comma-separated decimal floats at 17 significant digits
(classification records end with the integer label).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels as chan
from .qstate import SUPPORTED_QUBITS, bloch_from_density, density_from_bloch

GENERATOR_NAME = "philox4x64"
FORMAT_VERSION = 1


def record_rng(seed, index):
    """Philox generator for record `index` of the stream with the given seed."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + int(index)))


def stream_rng(seed):
    """Philox generator for a whole stream (model init, shuffling, ...)."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def haar_pure(n, rng):
    """Haar-random pure state |psi><psi| on n qubits."""
    if n not in SUPPORTED_QUBITS:
        raise ValueError("unsupported qubit count")
    dim = 2**n
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def ginibre_mixed(n, rng):
    """Hilbert-Schmidt-random mixed state G G^dag / Tr[G G^dag] on n qubits."""
    if n not in SUPPORTED_QUBITS:
        raise ValueError("unsupported qubit count")
    dim = 2**n
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@dataclass
class Dataset:
    """Reconstruction dataset: rows of (noisy, clean) Bloch vectors."""

    n: int
    kind: str  # "pure" | "mixed"
    channel_spec: str
    noisy: np.ndarray  # (M, 4^n - 1)
    clean: np.ndarray  # (M, 4^n - 1)
    seed: int

    @property
    def M(self):
        return self.noisy.shape[0]


@dataclass
class ClassDataset:
    """Classification dataset: rows of (input vector, class label)."""

    n: int
    mode: str  # "IN" | "N"
    channel_specs: list
    inputs: np.ndarray  # (M, 2(4^n-1)) for IN, (M, 4^n-1) for N
    labels: np.ndarray  # (M,) ints in 0..C-1
    seed: int

    @property
    def M(self):
        return self.inputs.shape[0]

    @property
    def num_classes(self):
        return len(self.channel_specs)


def _sample_state(n, kind, rng):
    if kind == "pure":
        return haar_pure(n, rng)
    if kind == "mixed":
        return ginibre_mixed(n, rng)
    raise ValueError(f"unknown state kind {kind!r}")


def build_reconstruction_dataset(channel_spec, n, M, kind, seed):
    """M states of the given kind passed through the channel, as Bloch pairs."""
    if M < 1:
        raise ValueError("M must be >= 1")
    channel = chan.parse_channel_spec(channel_spec)
    if channel.n != n:
        raise ValueError(
            f"channel acts on {channel.n} qubit(s) but dataset requests {n}"
        )
    d = 4**n - 1
    noisy = np.empty((M, d))
    clean = np.empty((M, d))
    for m in range(M):
        rng = record_rng(seed, m)
        rho = _sample_state(n, kind, rng)
        clean[m] = bloch_from_density(rho)
        noisy[m] = bloch_from_density(chan.apply_channel(channel, rho))
    return Dataset(n, kind, channel_spec, noisy, clean, int(seed))


def build_classification_dataset(channel_specs, n, M, mode, seed):
    """Haar states, each corrupted by the channel of its class.

    Class of record m is m mod C, keeping per-class counts balanced
    within one. Mode "IN" emits [noisy, clean], mode "N" only noisy.
    """
    if mode not in ("IN", "N"):
        raise ValueError(f"unknown classification mode {mode!r}")
    if M < 1:
        raise ValueError("M must be >= 1")
    parsed = [chan.parse_channel_spec(s) for s in channel_specs]
    for c in parsed:
        if c.n != n:
            raise ValueError(
                f"channel acts on {c.n} qubit(s) but dataset requests {n}"
            )
    d = 4**n - 1
    width = 2 * d if mode == "IN" else d
    num_classes = len(channel_specs)
    inputs = np.empty((M, width))
    labels = np.empty(M, dtype=np.int64)
    for m in range(M):
        label = m % num_classes
        rng = record_rng(seed, m)
        rho = haar_pure(n, rng)
        clean = bloch_from_density(rho)
        noisy = bloch_from_density(chan.apply_channel(parsed[label], rho))
        inputs[m] = np.concatenate([noisy, clean]) if mode == "IN" else noisy
        labels[m] = label
    return ClassDataset(n, mode, list(channel_specs), inputs, labels, int(seed))


def _fmt(x):
    return format(float(x), ".17g")


def save_dataset(ds, path):
    """Write a Dataset or ClassDataset as metadata line + record lines."""
    import json

    lines = []
    if isinstance(ds, Dataset):
        meta = {
            "version": FORMAT_VERSION,
            "type": "reconstruction",
            "n": ds.n,
            "kind": ds.kind,
            "channel_spec": ds.channel_spec,
            "M": ds.M,
            "seed": ds.seed,
            "generator": GENERATOR_NAME,
        }
        lines.append(json.dumps(meta, sort_keys=True))
        for m in range(ds.M):
            vals = list(ds.noisy[m]) + list(ds.clean[m])
            lines.append(",".join(_fmt(v) for v in vals))
    elif isinstance(ds, ClassDataset):
        meta = {
            "version": FORMAT_VERSION,
            "type": "classification",
            "n": ds.n,
            "mode": ds.mode,
            "channel_specs": ds.channel_specs,
            "M": ds.M,
            "seed": ds.seed,
            "generator": GENERATOR_NAME,
        }
        lines.append(json.dumps(meta, sort_keys=True))
        for m in range(ds.M):
            row = ",".join(_fmt(v) for v in ds.inputs[m])
            lines.append(f"{row},{int(ds.labels[m])}")
    else:
        raise TypeError("expected Dataset or ClassDataset")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


class DatasetFormatError(ValueError):
    """Raised when a dataset file fails to parse; message carries the line."""


def load_dataset(path, verify=True):
    """Load a dataset file; optionally re-check record consistency."""
    import json

    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError("line 1: empty dataset file")
    try:
        meta = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"line 1: bad metadata: {exc}") from exc
    if meta.get("version") != FORMAT_VERSION:
        raise DatasetFormatError(f"line 1: unsupported version {meta.get('version')}")
    records = [ln for ln in lines[1:] if ln.strip()]
    if len(records) != meta["M"]:
        raise DatasetFormatError(
            f"line {len(lines)}: expected {meta['M']} records, found {len(records)}"
        )
    n = meta["n"]
    d = 4**n - 1
    if meta["type"] == "reconstruction":
        noisy = np.empty((meta["M"], d))
        clean = np.empty((meta["M"], d))
        for i, line in enumerate(records):
            parts = line.split(",")
            if len(parts) != 2 * d:
                raise DatasetFormatError(
                    f"line {i + 2}: expected {2 * d} values, found {len(parts)}"
                )
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise DatasetFormatError(f"line {i + 2}: {exc}") from exc
            noisy[i] = vals[:d]
            clean[i] = vals[d:]
        ds = Dataset(n, meta["kind"], meta["channel_spec"], noisy, clean, meta["seed"])
    elif meta["type"] == "classification":
        width = 2 * d if meta["mode"] == "IN" else d
        inputs = np.empty((meta["M"], width))
        labels = np.empty(meta["M"], dtype=np.int64)
        for i, line in enumerate(records):
            parts = line.split(",")
            if len(parts) != width + 1:
                raise DatasetFormatError(
                    f"line {i + 2}: expected {width + 1} values, found {len(parts)}"
                )
            try:
                inputs[i] = [float(p) for p in parts[:-1]]
                labels[i] = int(parts[-1])
            except ValueError as exc:
                raise DatasetFormatError(f"line {i + 2}: {exc}") from exc
        ds = ClassDataset(n, meta["mode"], meta["channel_specs"], inputs, labels, meta["seed"])
    else:
        raise DatasetFormatError(f"line 1: unknown dataset type {meta['type']!r}")
    if verify:
        verify_dataset(ds)
    return ds


def verify_dataset(ds, tol=1e-10):
    """Re-check dataset invariants: channel consistency, purity, balance."""
    if isinstance(ds, Dataset):
        channel = chan.parse_channel_spec(ds.channel_spec)
        for m in range(ds.M):
            rho = density_from_bloch(ds.clean[m])
            expect = bloch_from_density(chan.apply_channel(channel, rho))
            if np.max(np.abs(expect - ds.noisy[m])) > tol:
                raise ValueError(f"record {m} is inconsistent with channel {ds.channel_spec}")
            if ds.kind == "pure":
                norm_sq = float(ds.clean[m] @ ds.clean[m])
                if abs(norm_sq - (2**ds.n - 1)) > 1e-8:
                    raise ValueError(f"record {m}: clean state is not pure")
    elif isinstance(ds, ClassDataset):
        counts = np.bincount(ds.labels, minlength=ds.num_classes)
        if counts.max() - counts.min() > 1:
            raise ValueError("class labels are not balanced")
        if ds.mode == "IN":
            d = 4**ds.n - 1
            parsed = [chan.parse_channel_spec(s) for s in ds.channel_specs]
            for m in range(ds.M):
                noisy, clean = ds.inputs[m, :d], ds.inputs[m, d:]
                rho = density_from_bloch(clean)
                expect = bloch_from_density(
                    chan.apply_channel(parsed[ds.labels[m]], rho)
                )
                if np.max(np.abs(expect - noisy)) > tol:
                    raise ValueError(f"record {m} is inconsistent with its labelled channel")
    else:
        raise TypeError("expected Dataset or ClassDataset")
