"""Losses, gradient engines, Adam and the training / validation loops."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import _params, cgnn, iqgnn, qsim, sqgnn
from .exceptions import NumericError, ShapeError, UnsupportedParameterError
from .graphs import TargetScaler
from .pqc_blocks import FINAL_POOL_PAIRS, decoder_program
from .physics import euler_step
from .qsim import GateInstruction

logger = logging.getLogger(__name__)

MODELS = {"cgnn": cgnn, "sqgnn": sqgnn, "iqgnn": iqgnn}
GRADIENT_MODES = ("analytic", "central-fd", "parameter-shift-check")
PERCENT_FLOOR = 1e-6


def get_model(kind):
    try:
        return MODELS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; choose from {sorted(MODELS)}") from None


def mse_loss(pred, target):
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    loss = float(np.mean((pred - target) ** 2))
    if not np.isfinite(loss):
        raise NumericError("non-finite loss")
    return loss


def predict_batch(kind, params, samples, processors=1, **model_kw):
    return get_model(kind).forward_batch(list(samples), params, processors, **model_kw)


def batch_loss(kind, params, batch, processors=1, **model_kw):
    """Mean of per-sample MSE over ``batch``."""
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    preds = predict_batch(kind, params, batch, processors, **model_kw)
    return float(np.mean([mse_loss(p, s.target) for p, s in zip(preds, batch)]))


def grad_central_fd(loss_fn, params, h=1e-4):
    """Central differences of ``loss_fn`` at the flat vector ``params``."""
    x = np.array(params, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + h
        up = loss_fn(x)
        x[i] = orig - h
        down = loss_fn(x)
        x[i] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(f"non-finite loss while probing parameter {i}")
        grad[i] = (up - down) / (2 * h)
    return grad


def parameter_shift_check(program, params, index, qubit=0, initial=None):
    """d<Z_qubit>/d params[index] by the two-term shift rule.

    A parameter feeding several rotations (the encoder's shared triplet) is
    differentiated occurrence by occurrence and the shifts are summed.
    """
    params = np.asarray(params, dtype=float)
    if initial is None:
        initial = qsim.Statevector.zero(program.n_qubits)
    uses = [i for i, g in enumerate(program.instructions) if g.param == index]
    if not uses:
        raise UnsupportedParameterError(f"parameter {index} drives no gate of the program")
    if any(program.instructions[i].kind not in qsim.ROTATIONS for i in uses):
        raise UnsupportedParameterError(f"parameter {index} feeds a non-rotation gate")

    def shifted(position, delta):
        gates = list(program.instructions)
        g = gates[position]
        gates[position] = GateInstruction(g.kind, g.targets, angle=params[index] + delta)
        prog = qsim.CircuitProgram(program.n_qubits, gates, program.n_params)
        return qsim.expectation_z(qsim.run_program(prog, params, initial), qubit)

    return sum((shifted(i, np.pi / 2) - shifted(i, -np.pi / 2)) / 2 for i in uses)


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t: int = 0

    @classmethod
    def create(cls, n, **hyper):
        return cls(m=np.zeros(n), v=np.zeros(n), **hyper)


def adam_step(state: AdamState, params, grad):
    """One bias-corrected Adam update; returns ``(new_state, new_params)``."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape or state.m.shape != params.shape:
        raise ShapeError("parameter, gradient and moment lengths must match")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1 ** t)
    v_hat = v / (1 - state.beta2 ** t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, t=t), new_params


def percent_error(pred_next_pos, true_next_pos, floor=PERCENT_FLOOR):
    """Mean over coordinates of 100 |pred - true| / max(|true|, floor)."""
    pred = np.asarray(pred_next_pos, dtype=float)
    true = np.asarray(true_next_pos, dtype=float)
    if pred.shape != true.shape:
        raise ShapeError("position arrays differ in shape")
    return float(np.mean(100.0 * np.abs(pred - true) / np.maximum(np.abs(true), floor)))


def predict_next_positions(pred, sample, scaler: TargetScaler):
    """Denormalise a 2 x n prediction and advance the sample one Euler step (n x 2)."""
    accel = scaler.denormalize(pred).T
    next_pos, _ = euler_step(sample.pos, sample.vel, accel, sample.dt)
    return next_pos


@dataclass
class MetricsRecord:
    batch_index: int
    batch_loss: float
    position_mse: float
    running_avg_percent_error: float
    percent_error: float = 0.0
    epoch: int = 0


@dataclass
class TrainConfig:
    model: str = "cgnn"
    processors: int = 1
    batch_size: int = 4
    epochs: int = 1
    seed: int = 0
    gradient: str | None = None
    fd_step: float = 1e-4
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    entangle: bool = False
    checkpoint_every: int = 0

    def __post_init__(self):
        get_model(self.model)
        if self.processors not in (1, 2):
            raise ValueError("processors must be 1 or 2")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if not self.fd_step > 0:
            raise ValueError("finite-difference step must be positive")
        if self.gradient is None:
            self.gradient = "analytic" if self.model == "cgnn" else "central-fd"
        if self.gradient not in GRADIENT_MODES:
            raise ValueError(f"gradient mode must be one of {GRADIENT_MODES}")
        if self.gradient == "analytic" and self.model != "cgnn":
            raise ValueError("analytic gradients exist only for cgnn")

    @property
    def model_kw(self):
        return {} if self.model == "cgnn" else {"entangle": self.entangle}


def epoch_order(n, seed, epoch):
    """Shuffle for one epoch; depends only on (seed, epoch)."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def _position_metrics(preds, batch, scaler):
    mses, pes = [], []
    for pred, s in zip(preds, batch):
        p_hat = predict_next_positions(pred, s, scaler)
        mses.append(float(np.mean((p_hat - s.next_pos) ** 2)))
        pes.append(percent_error(p_hat, s.next_pos))
    return mses, pes


SHIFT_CHECK_TOL = 1e-6


def shift_check_gap(params):
    """Largest |parameter-shift - central FD| over the final pooling block's parameters."""
    program = decoder_program(FINAL_POOL_PAIRS, 4)
    dec = np.asarray(params["decoder"], dtype=float)
    initial = qsim.embed_amplitudes(np.arange(1, 17, dtype=float))

    def f(x):
        return qsim.expectation_z(qsim.run_program(program, x, initial), 2)

    fd = grad_central_fd(f, dec, 1e-5)
    shift = np.array([parameter_shift_check(program, dec, i, 2, initial) for i in range(6)])
    return float(np.max(np.abs(fd - shift)))


def train(kind, samples, config: TrainConfig | None = None, scaler: TargetScaler | None = None,
          params=None, on_checkpoint=None):
    """Train ``kind`` on ``samples``.

    Returns ``(params, metrics)`` with one :class:`MetricsRecord` per batch.
    Metrics for a batch are taken with the parameters that batch's gradient
    was computed at. Incomplete trailing batches are dropped.
    """
    config = config or TrainConfig(model=kind)
    if config.model != kind:
        config = replace(config, model=kind, gradient=None)
    samples = list(samples)
    if not samples:
        raise ValueError("cannot train on an empty dataset")
    scaler = scaler or TargetScaler.identity()
    model = get_model(kind)
    spec = model.param_spec(config.processors)
    if params is None:
        params = model.init_params(config.processors, np.random.default_rng(config.seed))
    _params.check_against(params, spec)
    x = _params.flatten(params)
    state = AdamState.create(x.size, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    kw = config.model_kw

    metrics = []
    pe_sum, pe_count = 0.0, 0
    n_batches = len(samples) // config.batch_size
    for epoch in range(config.epochs):
        order = epoch_order(len(samples), config.seed, epoch)
        for b in range(n_batches):
            batch = [samples[i] for i in order[b * config.batch_size:(b + 1) * config.batch_size]]
            current = _params.unflatten(x, spec)
            if config.gradient == "analytic":
                loss, grads = cgnn.loss_and_grad(batch, current, config.processors)
                grad = _params.flatten(grads)
                preds = model.forward_batch(batch, current, config.processors)
            else:
                preds = model.forward_batch(batch, current, config.processors, **kw)
                loss = float(np.mean([np.mean((p - s.target) ** 2) for p, s in zip(preds, batch)]))
                if np.isfinite(loss):
                    grad = grad_central_fd(
                        lambda v: batch_loss(kind, _params.unflatten(v, spec), batch, config.processors, **kw),
                        x,
                        config.fd_step,
                    )
                if config.gradient == "parameter-shift-check" and not metrics:
                    gap = shift_check_gap(current)
                    logger.info("parameter-shift vs finite-difference gap on decoder block: %.3g", gap)
                    if gap > SHIFT_CHECK_TOL:
                        raise NumericError(f"parameter-shift check failed: gap {gap:.3g}")
            mses, pes = _position_metrics(preds, batch, scaler)
            pe_sum += sum(pes)
            pe_count += len(pes)
            record = MetricsRecord(
                batch_index=len(metrics),
                batch_loss=loss,
                position_mse=float(np.mean(mses)),
                running_avg_percent_error=pe_sum / pe_count,
                percent_error=float(np.mean(pes)),
                epoch=epoch,
            )
            if not all(np.isfinite([record.batch_loss, record.position_mse, record.running_avg_percent_error])):
                raise NumericError(f"non-finite metrics at batch {record.batch_index}", record)
            metrics.append(record)
            state, x = adam_step(state, x, grad)
            if config.checkpoint_every and on_checkpoint and len(metrics) % config.checkpoint_every == 0:
                on_checkpoint(len(metrics), _params.unflatten(x, spec))
    return _params.unflatten(x, spec), metrics


def validate(kind, params, samples, scaler: TargetScaler | None = None, processors=1, **model_kw):
    """Per-sample metrics without touching ``params``; the running average is cumulative."""
    samples = list(samples)
    scaler = scaler or TargetScaler.identity()
    if not samples:
        return []
    preds = predict_batch(kind, params, samples, processors, **model_kw)
    mses, pes = _position_metrics(preds, samples, scaler)
    records = []
    for i, (pred, s) in enumerate(zip(preds, samples)):
        records.append(
            MetricsRecord(
                batch_index=i,
                batch_loss=mse_loss(pred, s.target),
                position_mse=mses[i],
                running_avg_percent_error=float(np.mean(pes[: i + 1])),
                percent_error=pes[i],
            )
        )
    return records
