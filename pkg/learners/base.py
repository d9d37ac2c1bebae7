"""
The online-learner contract shared by every model.

A learner sees each instance exactly once: `predict` first, then `update` with
the true label. `OnlineLearner` enforces that order and counts instances;
subclasses implement `_predict` and `_update`.
"""
import math
from collections import deque
from dataclasses import dataclass

from scipy.special import expit

from haphazard_bench.exceptions import ConfigurationError, ProtocolError


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float


class OnlineLearner:
    name = None
    deterministic = False
    # size-aware learners take the dataset width as a default for their layer sizes
    sized = False

    def __init__(self):
        self.instances_seen = 0
        self._pending = None

    def predict(self, instance):
        if self._pending is not None:
            raise ProtocolError(f'{self.name}: t={self._pending} was predicted but never updated')
        if instance.t < self.instances_seen:
            raise ProtocolError(f'{self.name}: t={instance.t} was already visited')
        prediction = self._predict(instance)
        self._pending = instance.t
        return prediction

    def update(self, instance, label):
        if self._pending != instance.t:
            raise ProtocolError(f'{self.name}: update of t={instance.t} without a prior predict')
        self._update(instance, label)
        self._pending = None
        self.instances_seen += 1

    def _predict(self, instance):
        raise NotImplementedError

    def _update(self, instance, label):
        raise NotImplementedError


def logistic(margin):
    return float(expit(margin))


def signed(label):
    return 1.0 if label == 1 else -1.0


class RollingAccuracy:
    """Fraction of correct outcomes over the last `window` predictions, Laplace-smoothed."""

    def __init__(self, window):
        self.outcomes = deque(maxlen=window)

    def add(self, correct):
        self.outcomes.append(1 if correct else 0)

    @property
    def value(self):
        return (sum(self.outcomes) + 1) / (len(self.outcomes) + 2)

    @property
    def error_rate(self):
        if not self.outcomes:
            return 0.0
        return 1.0 - sum(self.outcomes) / len(self.outcomes)

    def __len__(self):
        return len(self.outcomes)


class RunningStandardizer:
    """Per-feature running z-score over observed values (Welford); off unless a learner asks for it."""

    def __init__(self):
        self.count = {}
        self.mean = {}
        self.m2 = {}

    def transform(self, features):
        scaled = {}
        for fid, value in features.items():
            n = self.count.get(fid, 0)
            if n < 2:
                scaled[fid] = 0.0
                continue
            std = math.sqrt(self.m2[fid] / (n - 1))
            scaled[fid] = (value - self.mean[fid]) / std if std > 0 else 0.0
        return scaled

    def absorb(self, features):
        for fid, value in features.items():
            n = self.count.get(fid, 0) + 1
            mean = self.mean.get(fid, 0.0)
            delta = value - mean
            mean += delta / n
            self.m2[fid] = self.m2.get(fid, 0.0) + delta * (value - mean)
            self.mean[fid] = mean
            self.count[fid] = n


LEARNERS = {}


def register(cls):
    LEARNERS[cls.name] = cls
    return cls


def _populate():
    # importing the model modules fills LEARNERS
    from . import bayes, deep, linear, stumps  # noqa: F401


def learner_class(name):
    _populate()
    try:
        return LEARNERS[name]
    except KeyError:
        raise ConfigurationError(f'unknown model {name!r}; known models: {", ".join(sorted(LEARNERS))}') from None


def build_learner(name, params=None, seed=0, n_features=None):
    """Instantiate a learner from hyperparameters spelled as in the hyperparameter table."""
    cls = learner_class(name)
    if cls.sized:
        return cls.from_params(dict(params or {}), seed=seed, n_features=n_features)
    return cls.from_params(dict(params or {}), seed=seed)


def known_models():
    _populate()
    return sorted(LEARNERS)


def is_deterministic(name):
    return learner_class(name).deterministic


def take(params, mapping):
    """Translate table-named hyperparameters into keyword arguments, rejecting unknown names."""
    unknown = set(params) - set(mapping)
    if unknown:
        raise ConfigurationError(f'unknown hyperparameters {sorted(unknown)}; expected some of {sorted(mapping)}')
    return {mapping[key]: value for key, value in params.items()}
