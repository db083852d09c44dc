"""File formats: JSON-lines datasets, JSON checkpoints, metrics and rollout CSVs.

Datasets are one JSON object per line: a header line (format, version, dt,
radius, scaler, split sizes) followed by one line per time-step sample.
Checkpoints hold named parameter groups with explicit shapes, written with 17
significant digits so they reload bit for bit.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CompatibilityError
from .graphs import GraphSample, TargetScaler

DATASET_FORMAT = "qgnnsim-dataset"
CHECKPOINT_FORMAT = "qgnnsim-checkpoint"
FORMAT_VERSION = 1
METRICS_HEADER = ("batch", "loss", "position_mse", "avg_percent_error")
ROLLOUT_HEADER = ("t", "particle", "pred_x", "pred_y", "true_x", "true_y")

_ARRAY_FIELDS = ("N", "Er", "Es", "Ea_raw", "target", "accel", "pos", "vel", "next_pos")


@dataclass
class GraphDataset:
    samples: list
    n_train: int
    scaler: TargetScaler
    dt: float
    radius: float
    meta: dict = field(default_factory=dict)

    @property
    def train(self):
        return self.samples[: self.n_train]

    @property
    def validation(self):
        return self.samples[self.n_train:]

    def split(self, name):
        if name == "train":
            return self.train
        if name == "validation":
            return self.validation
        if name == "all":
            return list(self.samples)
        raise ValueError(f"unknown split {name!r}")


def _sample_record(sample: GraphSample, split):
    record = {"split": split, "t": int(sample.t), "dt": float(sample.dt)}
    for name in _ARRAY_FIELDS:
        value = getattr(sample, name)
        if value is not None:
            record[name] = np.asarray(value, dtype=float).tolist()
    return record


def _sample_from_record(record):
    try:
        arrays = {name: np.array(record[name], dtype=float) for name in _ARRAY_FIELDS if name in record}
        ne = len(record["Er"][0]) if record["Er"] else 0
        for name in ("Er", "Es"):
            arrays[name] = arrays[name].reshape(-1, ne)
        arrays["Ea_raw"] = arrays["Ea_raw"].reshape(-1, ne)
        sample = GraphSample(t=int(record["t"]), dt=float(record["dt"]), **arrays)
        return sample.check()
    except (KeyError, TypeError, ValueError) as exc:
        raise CompatibilityError(f"malformed sample record: {exc}") from exc


def save_dataset(path, dataset: GraphDataset):
    header = {
        "format": DATASET_FORMAT,
        "version": FORMAT_VERSION,
        "dt": dataset.dt,
        "radius": dataset.radius,
        "scaler": dataset.scaler.to_dict(),
        "n_samples": len(dataset.samples),
        "n_train": dataset.n_train,
        "n_validation": len(dataset.samples) - dataset.n_train,
        "meta": dataset.meta,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i, sample in enumerate(dataset.samples):
            split = "train" if i < dataset.n_train else "validation"
            fh.write(json.dumps(_sample_record(sample, split), sort_keys=True) + "\n")


def load_dataset(path) -> GraphDataset:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise CompatibilityError(f"{path} is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CompatibilityError(f"{path}: unreadable header") from exc
    if header.get("format") != DATASET_FORMAT or header.get("version") != FORMAT_VERSION:
        raise CompatibilityError(f"{path} is not a version-{FORMAT_VERSION} {DATASET_FORMAT} file")
    samples = []
    for line in lines[1:]:
        try:
            samples.append(_sample_from_record(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise CompatibilityError(f"{path}: unreadable sample line") from exc
    if len(samples) != header["n_samples"]:
        raise CompatibilityError(f"{path}: header promises {header['n_samples']} samples, found {len(samples)}")
    return GraphDataset(
        samples=samples,
        n_train=int(header["n_train"]),
        scaler=TargetScaler.from_dict(header["scaler"]),
        dt=float(header["dt"]),
        radius=float(header["radius"]),
        meta=header.get("meta", {}),
    )


def save_scaler(path, scaler: TargetScaler):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scaler.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_scaler(path) -> TargetScaler:
    with open(path, encoding="utf-8") as fh:
        return TargetScaler.from_dict(json.load(fh))


def _fmt(values):
    return "[" + ", ".join(repr(float(v)) for v in np.ravel(values)) + "]"


@dataclass
class Checkpoint:
    model: str
    processors: int
    params: dict
    scaler: TargetScaler
    radius: float
    dt: float
    entangle: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def n_params(self):
        return int(sum(np.size(v) for v in self.params.values()))


def save_checkpoint(path, ckpt: Checkpoint):
    head = {
        "format": CHECKPOINT_FORMAT,
        "version": FORMAT_VERSION,
        "model": ckpt.model,
        "processors": ckpt.processors,
        "entangle": ckpt.entangle,
        "radius": ckpt.radius,
        "dt": ckpt.dt,
        "meta": ckpt.meta,
    }
    lines = ["{"]
    for key, value in head.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(value, sort_keys=True)},")
    lines.append(f'  "scaler": {{"mean": {_fmt(ckpt.scaler.mean)}, "scale": {_fmt(ckpt.scaler.scale)}, '
                 f'"degenerate": {json.dumps(list(ckpt.scaler.degenerate))}}},')
    lines.append('  "params": [')
    groups = []
    for name, value in ckpt.params.items():
        shape = list(np.shape(value))
        groups.append(f'    {{"name": {json.dumps(name)}, "shape": {json.dumps(shape)}, "values": {_fmt(value)}}}')
    lines.append(",\n".join(groups))
    lines.append("  ]")
    lines.append("}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CompatibilityError(f"{path}: unreadable checkpoint") from exc
    if raw.get("format") != CHECKPOINT_FORMAT or raw.get("version") != FORMAT_VERSION:
        raise CompatibilityError(f"{path} is not a version-{FORMAT_VERSION} {CHECKPOINT_FORMAT} file")
    params = {}
    for group in raw["params"]:
        values = np.array(group["values"], dtype=float)
        shape = tuple(group["shape"])
        if values.size != int(np.prod(shape)):
            raise CompatibilityError(f"{group['name']}: {values.size} values for shape {shape}")
        params[group["name"]] = values.reshape(shape)
    return Checkpoint(
        model=raw["model"],
        processors=int(raw["processors"]),
        params=params,
        scaler=TargetScaler.from_dict(raw["scaler"]),
        radius=float(raw["radius"]),
        dt=float(raw["dt"]),
        entangle=bool(raw.get("entangle", False)),
        meta=raw.get("meta", {}),
    )


def write_metrics_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for r in records:
            writer.writerow([r.batch_index, repr(float(r.batch_loss)), repr(float(r.position_mse)),
                             repr(float(r.running_avg_percent_error))])


def read_metrics_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: (int(v) if k == "batch" else float(v)) for k, v in row.items()} for row in reader]


def write_rollout_csv(path, rows):
    """``rows`` yields (t, particle, pred_x, pred_y, true_x, true_y)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROLLOUT_HEADER)
        for t, j, px, py, tx, ty in rows:
            writer.writerow([int(t), int(j)] + [repr(float(v)) for v in (px, py, tx, ty)])
