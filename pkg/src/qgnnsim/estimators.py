"""Estimator-style front end over the featuriser and the three models.

The estimators follow the scikit-learn conventions: constructor arguments are
stored untouched, ``fit`` sets trailing-underscore attributes and returns
``self``. ``X`` is always a list of :class:`~qgnnsim.graphs.GraphSample`.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _params, trainkit
from ._validation import check_processors, check_samples, check_targets, check_trajectory
from .graphs import DEFAULT_RADIUS, TargetScaler, make_dataset, split_dataset, validation_size


class GraphFeaturizer(TransformerMixin, BaseEstimator):
    """Turns a trajectory into graph samples with normalised targets.

    ``fit`` learns the target scaler from the leading training block of the
    trajectory; ``transform`` builds every valid sample with that scaler.
    """

    def __init__(self, radius=DEFAULT_RADIUS, validation_fraction=0.3, stride=1):
        self.radius = radius
        self.validation_fraction = validation_fraction
        self.stride = stride

    def fit(self, traj, y=None):
        traj = check_trajectory(traj)
        _, self.scaler_ = make_dataset(traj, self.radius, None, self.validation_fraction, self.stride)
        return self

    def transform(self, traj):
        check_is_fitted(self, "scaler_")
        traj = check_trajectory(traj)
        samples, _ = make_dataset(traj, self.radius, self.scaler_, self.validation_fraction, self.stride)
        return samples

    def split(self, samples):
        return split_dataset(samples, self.validation_fraction)

    def n_validation(self, n_samples):
        return validation_size(n_samples, self.validation_fraction)


class _GraphRegressor(BaseEstimator):
    _kind = ""

    def _config(self):
        return trainkit.TrainConfig(
            model=self._kind,
            processors=check_processors(self.processors),
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.random_state,
            gradient=self.gradient,
            fd_step=self.fd_step,
            lr=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.epsilon,
            entangle=getattr(self, "entangle", False),
        )

    def fit(self, X, y=None, scaler: TargetScaler | None = None):
        """Train on ``X``; ``y`` (n x 2 x 3) overrides the samples' own targets."""
        samples = check_samples(X)
        if y is not None:
            y = check_targets(y, len(samples), samples[0].n_nodes)
            samples = [replace(s, target=t) for s, t in zip(samples, y)]
        config = self._config()
        self.scaler_ = scaler or TargetScaler.identity()
        self.params_, self.metrics_ = trainkit.train(self._kind, samples, config, scaler=self.scaler_)
        self.n_params_ = _params.count(_params.spec_of(self.params_))
        return self

    def _model_kw(self):
        return {} if self._kind == "cgnn" else {"entangle": self.entangle}

    def predict(self, X):
        """Normalised acceleration predictions, shape (n, 2, n_nodes)."""
        check_is_fitted(self, "params_")
        samples = check_samples(X)
        preds = trainkit.predict_batch(self._kind, self.params_, samples, self.processors, **self._model_kw())
        return np.stack(preds)

    def predict_acceleration(self, X):
        return np.stack([self.scaler_.denormalize(p) for p in self.predict(X)])

    def predict_positions(self, X):
        """Next positions (n, n_nodes, 2) from one Euler step of the predicted accelerations."""
        samples = check_samples(X)
        preds = self.predict(samples)
        return np.stack([trainkit.predict_next_positions(p, s, self.scaler_) for p, s in zip(preds, samples)])

    def score(self, X, y=None):
        """Negative mean squared error on normalised targets (higher is better)."""
        samples = check_samples(X)
        y = np.stack([s.target for s in samples]) if y is None else check_targets(y, len(samples), samples[0].n_nodes)
        return -float(np.mean((self.predict(samples) - y) ** 2))

    def validate(self, X):
        check_is_fitted(self, "params_")
        return trainkit.validate(self._kind, self.params_, check_samples(X), self.scaler_, self.processors,
                                 **self._model_kw())


class CGNNRegressor(_GraphRegressor):
    """Classical message-passing baseline with analytic gradients."""

    _kind = "cgnn"

    def __init__(self, processors=1, learning_rate=0.01, beta1=0.9, beta2=0.999, epsilon=1e-8, batch_size=4,
                 epochs=1, gradient=None, fd_step=1e-4, random_state=0):
        self.processors = processors
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.epochs = epochs
        self.gradient = gradient
        self.fd_step = fd_step
        self.random_state = random_state


class SQGNNRegressor(_GraphRegressor):
    """Amplitude-matrix quantum model trained by finite differences."""

    _kind = "sqgnn"

    def __init__(self, processors=1, learning_rate=0.01, beta1=0.9, beta2=0.999, epsilon=1e-8, batch_size=4,
                 epochs=1, gradient=None, fd_step=1e-4, random_state=0, entangle=False):
        self.processors = processors
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.epochs = epochs
        self.gradient = gradient
        self.fd_step = fd_step
        self.random_state = random_state
        self.entangle = entangle


class IQGNNRegressor(_GraphRegressor):
    """Single 8-qubit circuit model trained by finite differences."""

    _kind = "iqgnn"

    def __init__(self, processors=1, learning_rate=0.01, beta1=0.9, beta2=0.999, epsilon=1e-8, batch_size=4,
                 epochs=1, gradient=None, fd_step=1e-4, random_state=0, entangle=False):
        self.processors = processors
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.epochs = epochs
        self.gradient = gradient
        self.fd_step = fd_step
        self.random_state = random_state
        self.entangle = entangle


ESTIMATORS = {"cgnn": CGNNRegressor, "sqgnn": SQGNNRegressor, "iqgnn": IQGNNRegressor}
