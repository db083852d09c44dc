"""Command-line interface: ``gen-data``, ``train`` and ``eval``.

Configuration is a JSON object of flat dotted keys (``"sim.dt": 1e-4``);
nested objects are flattened on load. Unknown keys and wrongly typed values
are rejected. Exit codes: 0 ok, 2 configuration error, 3 compatibility
error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _params, trainkit
from .exceptions import CompatibilityError, ConfigError, NumericError, ShapeError
from .graphs import make_dataset, validation_size
from .io import (Checkpoint, GraphDataset, load_checkpoint, load_dataset, save_checkpoint, save_dataset,
                 save_scaler, write_metrics_csv, write_rollout_csv)
from .physics import SimConfig, generate_trajectory

EXIT_OK, EXIT_CONFIG, EXIT_COMPAT, EXIT_NUMERIC = 0, 2, 3, 4

_OPT_STR = (str, type(None))

# key -> (default, accepted types)
DEFAULTS = {
    "seed": (0, int),
    "sim.gravity": (-9.8, float),
    "sim.dt": (1e-4, float),
    "sim.box": ([[0.0, 1.0], [0.0, 1.0]], list),
    "sim.particle_radius": (0.05, float),
    "sim.restitution": (0.8, float),
    "sim.n_particles": (3, int),
    "sim.collisions": (True, bool),
    "sim.steps": (10000, int),
    "graph.radius": (0.35, float),
    "graph.validation_fraction": (0.3, float),
    "graph.stride": (1, int),
    "model.kind": ("cgnn", str),
    "model.processors": (1, int),
    "model.entangle": (False, bool),
    "train.batch_size": (4, int),
    "train.epochs": (1, int),
    "train.lr": (0.01, float),
    "train.beta1": (0.9, float),
    "train.beta2": (0.999, float),
    "train.eps": (1e-8, float),
    "train.gradient": (None, _OPT_STR),
    "train.fd_step": (1e-4, float),
    "train.checkpoint_every": (0, int),
    "io.dataset": (None, _OPT_STR),
    "io.scaler": (None, _OPT_STR),
    "io.checkpoint": (None, _OPT_STR),
    "io.metrics": (None, _OPT_STR),
    "io.rollout": (None, _OPT_STR),
}


def _flatten(obj, prefix=""):
    out = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _check_type(key, value, kinds):
    kinds = kinds if isinstance(kinds, tuple) else (kinds,)
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"{key}: expected {kinds[0].__name__}, got a boolean")
    if float in kinds and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kinds):
        raise ConfigError(f"{key}: expected {kinds[0].__name__}, got {type(value).__name__}")
    return value


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: v for k, (v, _) in DEFAULTS.items()})

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        flat = _flatten(raw)
        unknown = sorted(set(flat) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = cls()
        for key, value in flat.items():
            cfg.values[key] = _check_type(key, value, DEFAULTS[key][1])
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        if path is None:
            return cls()
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    def __getitem__(self, key):
        return self.values[key]

    def validate(self):
        v = self.values
        if v["sim.n_particles"] != 3:
            raise ConfigError("sim.n_particles must be 3; the models are built for three-particle graphs")
        if v["sim.steps"] < 4:
            raise ConfigError("sim.steps must be at least 4")
        if v["model.kind"] not in trainkit.MODELS:
            raise ConfigError(f"model.kind must be one of {sorted(trainkit.MODELS)}")
        try:
            self.sim_config()
            self.train_config()
            validation_size(10, v["graph.validation_fraction"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if v["graph.radius"] <= 0 or v["graph.stride"] < 1:
            raise ConfigError("graph.radius must be positive and graph.stride at least 1")

    def sim_config(self) -> SimConfig:
        v = self.values
        box = tuple(tuple(float(x) for x in axis) for axis in v["sim.box"])
        return SimConfig(gravity=v["sim.gravity"], dt=v["sim.dt"], box=box,
                         particle_radius=v["sim.particle_radius"], restitution=v["sim.restitution"],
                         n_particles=v["sim.n_particles"], collisions=v["sim.collisions"])

    def train_config(self, seed=None) -> trainkit.TrainConfig:
        v = self.values
        return trainkit.TrainConfig(
            model=v["model.kind"], processors=v["model.processors"], batch_size=v["train.batch_size"],
            epochs=v["train.epochs"], seed=v["seed"] if seed is None else seed, gradient=v["train.gradient"],
            fd_step=v["train.fd_step"], lr=v["train.lr"], beta1=v["train.beta1"], beta2=v["train.beta2"],
            eps=v["train.eps"], entangle=v["model.entangle"], checkpoint_every=v["train.checkpoint_every"])


def _pick(cli_value, cfg_value, what):
    path = cli_value if cli_value is not None else cfg_value
    if path is None:
        raise ConfigError(f"no {what} path given")
    return Path(path)


def _writable(path: Path):
    if not path.parent.exists() or not path.parent.is_dir():
        raise ConfigError(f"cannot write {path}: directory does not exist")


def cmd_gen_data(args, out=None):
    out = out or sys.stdout
    cfg = RunConfig.load(args.config)
    seed = cfg["seed"] if args.seed is None else args.seed
    path = _pick(args.out, cfg["io.dataset"], "dataset output")
    scaler_path = Path(cfg["io.scaler"]) if cfg["io.scaler"] else path.with_suffix(".scaler.json")
    _writable(path)
    _writable(scaler_path)
    traj = generate_trajectory(cfg.sim_config(), T=cfg["sim.steps"], seed=seed)
    fraction = cfg["graph.validation_fraction"]
    samples, scaler = make_dataset(traj, cfg["graph.radius"], None, fraction, cfg["graph.stride"])
    n_train = len(samples) - validation_size(len(samples), fraction)
    meta = {"seed": seed, "steps": cfg["sim.steps"], "stride": cfg["graph.stride"], "validation_fraction": fraction}
    dataset = GraphDataset(samples, n_train, scaler, traj.dt, cfg["graph.radius"], meta)
    try:
        save_dataset(path, dataset)
        save_scaler(scaler_path, scaler)
    except OSError as exc:
        raise ConfigError(f"cannot write output: {exc}") from exc
    hist = dict(sorted(zip(*np.unique([s.n_edges for s in samples], return_counts=True))))
    print(f"samples: {len(samples)} (train {n_train}, validation {len(samples) - n_train})", file=out)
    print("edge-count histogram: " + ", ".join(f"{int(k)}:{int(c)}" for k, c in hist.items()), file=out)
    print(f"dataset: {path}", file=out)
    print(f"scaler: {scaler_path}", file=out)
    return EXIT_OK


def _load_dataset(path):
    if not Path(path).is_file():
        raise ConfigError(f"dataset {path} does not exist")
    return load_dataset(path)


def _check_compatible(kind, samples):
    for s in samples:
        if s.n_nodes != 3:
            raise CompatibilityError(f"{kind} expects 3-node graphs, dataset has {s.n_nodes}")
        if not 3 <= s.n_edges <= 6:
            raise CompatibilityError(f"{kind} expects 3 to 6 edges, a sample has {s.n_edges}")


def cmd_train(args, out=None):
    out = out or sys.stdout
    cfg = RunConfig.load(args.config)
    seed = cfg["seed"] if args.seed is None else args.seed
    dataset = _load_dataset(_pick(args.dataset, cfg["io.dataset"], "dataset"))
    ckpt_path = _pick(args.checkpoint, cfg["io.checkpoint"], "checkpoint output")
    metrics_path = Path(args.out or cfg["io.metrics"] or ckpt_path.with_suffix(".metrics.csv"))
    _writable(ckpt_path)
    _writable(metrics_path)
    config = cfg.train_config(seed)
    kind = config.model
    train_samples = dataset.train
    _check_compatible(kind, train_samples)
    if len(train_samples) < config.batch_size:
        raise CompatibilityError(f"training split has {len(train_samples)} samples, fewer than one batch")
    n_params = _params.count(trainkit.get_model(kind).param_spec(config.processors))
    print(f"model: {kind}, processors: {config.processors}, parameters: {n_params}", file=out)

    def make_ckpt(params, **meta):
        return Checkpoint(kind, config.processors, params, dataset.scaler, dataset.radius, dataset.dt,
                          config.entangle, {"seed": seed, **meta})

    def on_checkpoint(n_batches, params):
        save_checkpoint(ckpt_path.with_name(f"{ckpt_path.stem}.batch{n_batches}{ckpt_path.suffix}"),
                        make_ckpt(params, batches=n_batches))

    params, metrics = trainkit.train(kind, train_samples, config, dataset.scaler, on_checkpoint=on_checkpoint)
    try:
        save_checkpoint(ckpt_path, make_ckpt(params, batches=len(metrics)))
        write_metrics_csv(metrics_path, metrics)
    except OSError as exc:
        raise ConfigError(f"cannot write output: {exc}") from exc
    last = metrics[-1]
    print(f"batches: {len(metrics)}, final loss: {last.batch_loss:.6g}, "
          f"avg percent error: {last.running_avg_percent_error:.6g}", file=out)
    print(f"checkpoint: {ckpt_path}", file=out)
    print(f"metrics: {metrics_path}", file=out)
    return EXIT_OK


def cmd_eval(args, out=None):
    out = out or sys.stdout
    cfg = RunConfig.load(args.config)
    ckpt_path = _pick(args.checkpoint, cfg["io.checkpoint"], "checkpoint")
    if not ckpt_path.is_file():
        raise ConfigError(f"checkpoint {ckpt_path} does not exist")
    ckpt = load_checkpoint(ckpt_path)
    dataset = _load_dataset(_pick(args.dataset, cfg["io.dataset"], "dataset"))
    metrics_path = Path(args.out or cfg["io.metrics"] or ckpt_path.with_suffix(".eval.csv"))
    rollout_path = Path(args.rollout or cfg["io.rollout"] or ckpt_path.with_suffix(".rollout.csv"))
    _writable(metrics_path)
    _writable(rollout_path)
    if ckpt.model not in trainkit.MODELS:
        raise CompatibilityError(f"checkpoint holds unknown model {ckpt.model!r}")
    try:
        _params.check_against(ckpt.params, trainkit.get_model(ckpt.model).param_spec(ckpt.processors))
    except (ShapeError, ValueError) as exc:
        raise CompatibilityError(f"checkpoint parameters do not fit {ckpt.model}: {exc}") from exc
    if not np.isclose(ckpt.radius, dataset.radius) or not np.isclose(ckpt.dt, dataset.dt):
        raise CompatibilityError("checkpoint and dataset disagree on radius or dt")
    samples = dataset.split(args.split)
    if not samples:
        raise CompatibilityError(f"dataset has no {args.split} samples")
    _check_compatible(ckpt.model, samples)
    kw = {} if ckpt.model == "cgnn" else {"entangle": ckpt.entangle}
    records = trainkit.validate(ckpt.model, ckpt.params, samples, ckpt.scaler, ckpt.processors, **kw)
    preds = trainkit.predict_batch(ckpt.model, ckpt.params, samples, ckpt.processors, **kw)
    rows = []
    for pred, s in zip(preds, samples):
        p_hat = trainkit.predict_next_positions(pred, s, ckpt.scaler)
        for j in range(s.n_nodes):
            rows.append((s.t + 1, j, p_hat[j, 0], p_hat[j, 1], s.next_pos[j, 0], s.next_pos[j, 1]))
    try:
        write_metrics_csv(metrics_path, records)
        write_rollout_csv(rollout_path, rows)
    except OSError as exc:
        raise ConfigError(f"cannot write output: {exc}") from exc
    loss = float(np.mean([r.batch_loss for r in records]))
    print(f"{args.split}: {len(records)} samples, mean loss {loss:.6g}, "
          f"avg percent error {records[-1].running_avg_percent_error:.6g}", file=out)
    print(f"metrics: {metrics_path}", file=out)
    print(f"rollout: {rollout_path}", file=out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="qgnnsim", description="Particle-dynamics graph networks, classical and simulated quantum.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="primary output file")
        return p

    g = common(sub.add_parser("gen-data", help="simulate a trajectory and write a graph dataset"))
    g.set_defaults(func=cmd_gen_data)
    t = common(sub.add_parser("train", help="train a model and write a checkpoint plus metrics CSV"))
    t.add_argument("--dataset")
    t.add_argument("--checkpoint", help="checkpoint output path")
    t.set_defaults(func=cmd_train)
    e = common(sub.add_parser("eval", help="evaluate a checkpoint and export predicted positions"))
    e.add_argument("--dataset")
    e.add_argument("--checkpoint", help="checkpoint to evaluate")
    e.add_argument("--split", choices=("train", "validation", "all"), default="validation")
    e.add_argument("--rollout", help="rollout CSV output path")
    e.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CompatibilityError as exc:
        print(f"compatibility error: {exc}", file=sys.stderr)
        return EXIT_COMPAT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
