"""Command-line frontend.

Subcommands: gen-data, train, eval, sweep, bloch-cloud. Every command is
deterministic given --seed (omitting it draws one from system entropy and
prints it), and every run prints the resolved seed. Exit codes: 0 on
success, 2 for usage or parse errors, 1 for runtime failures.

An optional --config JSON file may supply defaults for any flag (keys use
underscores, e.g. {"epochs": 500}); explicit flags win.

Examples (one per benchmark task):

  Single-qubit reconstruction (phase flip, 30 pure states):
    blochnet gen-data --channel "Z(0.2)" --qubits 1 --samples 30 --kind pure --seed 7 --out train.ds
    blochnet gen-data --channel "Z(0.2)" --qubits 1 --samples 500 --kind pure --seed 8 --out test.ds
    blochnet train --task reconstruct --loss mse --data train.ds --test-data test.ds --seed 9 --out model.json

  Two-qubit reconstruction (300 states, correlated amplitude damping):
    blochnet gen-data --channel "CAD(0.1,0.2)" --qubits 2 --samples 300 --kind pure --seed 7 --out train2.ds
    blochnet gen-data --channel "CAD(0.1,0.2)" --qubits 2 --samples 500 --kind pure --seed 8 --out test2.ds
    blochnet train --task reconstruct --loss infidelity --data train2.ds --test-data test2.ds --seed 9 --out model2.json

  Binary channel classification (IN mode, 300 training / 100 test samples):
    blochnet gen-data --classify --channels "Z(0.2);GAD(0.5,0.3)" --qubits 1 --samples 300 --mode IN --seed 7 --out ctrain.ds
    blochnet gen-data --classify --channels "Z(0.2);GAD(0.5,0.3)" --qubits 1 --samples 100 --mode IN --seed 8 --out ctest.ds
    blochnet train --task classify --data ctrain.ds --test-data ctest.ds --seed 9 --out cmodel.json
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys

from . import experiments as ex
from . import neuralnet as nn
from . import sampling
from .channels import ChannelSpecError, parse_channel_spec
from .sampling import DatasetFormatError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class CliError(Exception):
    """Usage-level error (exit code 2)."""


def _resolve_seed(args):
    if args.seed is None:
        args.seed = secrets.randbits(63)
    print(f"seed={args.seed}")
    return args.seed


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _build_parser(config):
    parser = argparse.ArgumentParser(
        prog="blochnet",
        description="Reconstruct and classify noisy quantum states with neural networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None, help="master RNG seed")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--config", help="JSON file with default flag values")

    g = sub.add_parser("gen-data", help="generate a dataset file")
    add_common(g)
    g.add_argument("--channel", help="channel spec, e.g. \"Z(0.2)*X(0.2)\"")
    g.add_argument("--qubits", type=int, default=1)
    g.add_argument("--samples", type=int, required=True)
    g.add_argument("--kind", choices=["pure", "mixed"], default="pure")
    g.add_argument("--classify", action="store_true", help="build a classification dataset")
    g.add_argument("--channels", help="';'-separated channel specs, one per class")
    g.add_argument("--mode", choices=["IN", "N"], default="IN")

    t = sub.add_parser("train", help="train a model on a dataset file")
    add_common(t)
    t.add_argument("--task", choices=["reconstruct", "classify"], default="reconstruct")
    t.add_argument("--loss", choices=["mse", "infidelity"], default="mse")
    t.add_argument("--hidden", type=_int_list, default=[128, 128],
                   help="comma-separated hidden layer sizes")
    t.add_argument("--epochs", type=int, default=0, help="0 picks the per-task default")
    t.add_argument("--batch", type=int, default=0, help="0 picks the default rule")
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--data", required=True)
    t.add_argument("--test-data", required=True)
    t.add_argument("--metrics-out", help="metrics CSV path (default: <out>.metrics.csv)")

    e = sub.add_parser("eval", help="evaluate a saved model on a dataset file")
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--config", help="JSON file with default flag values")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)

    s = sub.add_parser("sweep", help="ATF vs training-set size sweep")
    add_common(s)
    s.add_argument("--channel", required=True)
    s.add_argument("--qubits", type=int, default=1)
    s.add_argument("--kind", choices=["pure", "mixed"], default="pure")
    s.add_argument("--sizes", type=_int_list, required=True)
    s.add_argument("--repeats", type=int, default=5)
    s.add_argument("--test-size", type=int, default=ex.DEFAULT_TEST_SIZE)
    s.add_argument("--loss", choices=["mse", "infidelity"], default="mse")
    s.add_argument("--hidden", type=_int_list, default=[128, 128])
    s.add_argument("--epochs", type=int, default=0)
    s.add_argument("--batch", type=int, default=0)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--jobs", type=int, default=1)

    b = sub.add_parser("bloch-cloud", help="export clean/noisy Bloch point pairs")
    add_common(b)
    b.add_argument("--channel", required=True)
    b.add_argument("--samples", type=int, default=10000)

    if config:
        for action in parser._subparsers._group_actions[0].choices.values():
            known = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in config.items() if k in known})
    return parser


def _load_config(argv):
    # Pre-scan for --config so config values become parser defaults
    # (explicit flags then win naturally).
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        with open(known.config, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file: {exc}") from exc


def cmd_gen_data(args):
    seed = _resolve_seed(args)
    if args.classify:
        if not args.channels:
            raise CliError("--classify requires --channels")
        specs = [s.strip() for s in args.channels.split(";") if s.strip()]
        for spec in specs:
            parse_channel_spec(spec)
        ds = sampling.build_classification_dataset(
            specs, args.qubits, args.samples, args.mode, seed
        )
    else:
        if not args.channel:
            raise CliError("--channel is required (or use --classify)")
        parse_channel_spec(args.channel)
        ds = sampling.build_reconstruction_dataset(
            args.channel, args.qubits, args.samples, args.kind, seed
        )
    sampling.save_dataset(ds, args.out)
    print(f"wrote {ds.M} records to {args.out}")
    return EXIT_OK


def cmd_train(args):
    seed = _resolve_seed(args)
    train = sampling.load_dataset(args.data)
    test = sampling.load_dataset(args.test_data)
    cfg = ex.TrainConfig(
        task=args.task,
        loss=args.loss,
        hidden=args.hidden,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        seed=seed,
    )
    if args.task == "reconstruct":
        if not isinstance(train, sampling.Dataset):
            raise CliError("--task reconstruct needs a reconstruction dataset")
        model, log = ex.train_reconstruction(cfg, train, test)
    else:
        if not isinstance(train, sampling.ClassDataset):
            raise CliError("--task classify needs a classification dataset")
        model, log = ex.train_classification(cfg, train, test)
    nn.save_model(model, args.out)
    metrics_path = args.metrics_out or args.out + ".metrics.csv"
    ex.save_metrics(log, metrics_path)
    print(f"model written to {args.out}")
    print(f"metrics written to {metrics_path}")
    print(f"duration={log.duration:.2f}s")
    print(f"{log.final_metric}={log.final_value:.6f}")
    return EXIT_OK


def cmd_eval(args):
    _resolve_seed(args)
    model = nn.load_model(args.model)
    data = sampling.load_dataset(args.data)
    if model.meta.get("train_seed") == data.seed:
        print("warning: train/test overlap (dataset seed matches training data)")
    if model.meta.get("task") == "classify":
        if not isinstance(data, sampling.ClassDataset):
            raise CliError("classifier model needs a classification dataset")
        print(f"ACC={ex.evaluate_accuracy(model, data):.6f}")
    else:
        if not isinstance(data, sampling.Dataset):
            raise CliError("reconstruction model needs a reconstruction dataset")
        print(f"ATF={ex.evaluate_atf(model, data):.6f}")
    return EXIT_OK


def cmd_sweep(args):
    seed = _resolve_seed(args)
    cfg = ex.TrainConfig(
        task="reconstruct",
        loss=args.loss,
        hidden=args.hidden,
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        seed=seed,
    )
    rows = ex.sweep_dataset_size(
        cfg, args.channel, args.qubits, args.kind, args.sizes,
        repeats=args.repeats, test_size=args.test_size, jobs=args.jobs,
    )
    ex.save_sweep(rows, args.out)
    for row in rows:
        print(f"size={row['size']} mean={row['mean']:.4f} std={row['std']:.4f} best={row['best']:.4f}")
    print(f"sweep table written to {args.out}")
    return EXIT_OK


def cmd_bloch_cloud(args):
    seed = _resolve_seed(args)
    clean, noisy = ex.bloch_cloud(args.channel, args.samples, seed)
    ex.save_bloch_cloud(clean, noisy, args.out)
    print(f"wrote {args.samples} point pairs to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "bloch-cloud": cmd_bloch_cloud,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = _load_config(argv)
        parser = _build_parser(config)
        args = parser.parse_args(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (CliError, ChannelSpecError, DatasetFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
