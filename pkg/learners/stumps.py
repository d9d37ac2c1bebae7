"""
Decision-stump ensembles over haphazard inputs: DynFo and ORF3V.

A stump splits a single feature at a threshold and can only vote when that
feature is observed. Both ensembles refit stumps from a small FIFO buffer of
the most recent labeled instances.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from haphazard_bench.exceptions import InvalidInputError

from .base import OnlineLearner, Prediction, RollingAccuracy, register, take

logger = logging.getLogger(__name__)

BUFFER_SIZE = 20
WEIGHT_FLOOR = 1e-12


@dataclass
class DecisionStump:
    """`polarity` +1 predicts class 1 above the threshold, -1 below it; `constant` overrides both."""

    feature: int
    threshold: float = 0.0
    polarity: int = 1
    weight: float = 1.0
    constant: int = None

    def predict(self, features):
        value = features.get(self.feature)
        if value is None:
            return None
        if self.constant is not None:
            return self.constant
        above = value > self.threshold
        return int(above) if self.polarity > 0 else int(not above)


class InstanceBuffer:
    def __init__(self, cap=BUFFER_SIZE):
        self.cap = cap
        self.items = deque(maxlen=cap)

    def add(self, instance, label):
        self.items.append((instance, label))

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def column(self, feature, items=None):
        pairs = [(instance.features[feature], label) for instance, label in (items or self.items)
                 if feature in instance.features]
        values = np.array([value for value, _ in pairs], dtype=float)
        labels = np.array([label for _, label in pairs], dtype=int)
        return values, labels


def _balanced_accuracy(predicted, labels):
    positives = labels == 1
    tpr = (predicted[positives] == 1).mean()
    tnr = (predicted[~positives] == 0).mean()
    return 0.5 * (tpr + tnr)


def best_split(buffer, feature, items=None):
    """Return (stump, balanced accuracy on the buffered instances that observe `feature`)."""
    values, labels = buffer.column(feature, items)
    positives = int(labels.sum())
    if len(labels) < 2 or positives in (0, len(labels)):
        majority = 1 if positives * 2 > len(labels) else 0
        return DecisionStump(feature=feature, constant=majority), 0.5

    distinct = np.unique(values)
    best = DecisionStump(feature=feature, constant=int(positives * 2 > len(labels))), 0.5
    for low, high in zip(distinct[:-1], distinct[1:]):
        threshold = (low + high) / 2
        score = _balanced_accuracy((values > threshold).astype(int), labels)
        for polarity, candidate in ((1, score), (-1, 1.0 - score)):
            if candidate > best[1]:
                best = DecisionStump(feature=feature, threshold=float(threshold), polarity=polarity), candidate
    return best


def stump_fit(buffer, feature):
    return best_split(buffer, feature)[0]


def _vote(members, features):
    """Weighted vote of stumps able to predict; returns (class weights, per-member votes)."""
    weights = [0.0, 0.0]
    votes = []
    for member in members:
        vote = member.stump.predict(features)
        votes.append(vote)
        if vote is not None:
            weights[vote] += member.stump.weight
    return weights, votes


class _MajorityClass:
    def __init__(self):
        self.counts = [0, 0]

    def add(self, label):
        self.counts[label] += 1

    def prediction(self):
        n0, n1 = self.counts
        return Prediction(label=1 if n1 > n0 else 0, score=(n1 + 1) / (n0 + n1 + 2))


def _from_votes(weights, fallback):
    if weights[0] + weights[1] == 0:
        return fallback.prediction()
    label = 1 if weights[1] > weights[0] else 0
    return Prediction(label=label, score=weights[1] / (weights[0] + weights[1]))


class _WeakLearner:
    def __init__(self, stump, accepted, window):
        self.stump = stump
        self.accepted = frozenset(accepted)
        self.errors = RollingAccuracy(window)


@register
class DynFo(OnlineLearner):
    """
    Dynamic forest: up to M stumps, each fit on the best feature of its own
    accepted-feature sample. Weights move multiplicatively with each outcome
    and are clamped to [theta1, theta2]; a stump whose rolling error exceeds
    gamma is refit with probability beta and discarded otherwise.
    """

    name = 'dynfo'

    def __init__(self, alpha=0.5, beta=0.8, delta=0.01, epsilon=0.001, gamma=0.7, M=1000, N=BUFFER_SIZE,
                 theta1=0.05, theta2=0.6, seed=0):
        super().__init__()
        if not 0 < theta1 <= theta2:
            raise InvalidInputError(f'need 0 < theta1 <= theta2, got {theta1}, {theta2}')
        self.alpha = alpha
        self.beta = beta
        self.delta = delta
        self.epsilon = epsilon
        self.gamma = gamma
        self.M = M
        self.theta1 = theta1
        self.theta2 = theta2
        self.window = N
        self.buffer = InstanceBuffer(N)
        self.learners = []
        self.known = []
        self.majority = _MajorityClass()
        self.rng = np.random.default_rng(seed)
        self._votes = []

    @classmethod
    def from_params(cls, params, seed=0):
        mapping = {key: key for key in ('alpha', 'beta', 'delta', 'epsilon', 'gamma', 'M', 'N', 'theta1', 'theta2')}
        return cls(seed=seed, **take(params, mapping))

    @property
    def initial_weight(self):
        return (self.theta1 + self.theta2) / 2

    def _fit(self, accepted):
        best = None
        for feature in sorted(accepted):
            stump, score = best_split(self.buffer, feature)
            if best is None or score > best[1]:
                best = stump, score
        stump = best[0]
        stump.weight = self.initial_weight
        return stump

    def _spawn(self, accepted):
        learner = _WeakLearner(self._fit(accepted), accepted, self.window)
        if len(self.learners) >= self.M:
            weakest = min(range(len(self.learners)), key=lambda i: self.learners[i].stump.weight)
            self.learners[weakest] = learner
        else:
            self.learners.append(learner)

    def _predict(self, instance):
        weights, self._votes = _vote(self.learners, instance.features)
        return _from_votes(weights, self.majority)

    def _update(self, instance, label):
        for learner, vote in zip(self.learners, self._votes):
            stump = learner.stump
            if vote is None:
                stump.weight *= 1 - self.epsilon
            else:
                stump.weight *= (1 + self.alpha) if vote == label else (1 - self.alpha)
                learner.errors.add(vote == label)
            stump.weight = min(max(stump.weight, self.theta1), self.theta2)

        self.buffer.add(instance, label)
        self.majority.add(label)

        survivors = []
        for learner in self.learners:
            if len(learner.errors) == self.window and learner.errors.error_rate > self.gamma:
                if self.rng.random() >= self.beta:
                    continue
                learner.stump = self._fit(learner.accepted)
                learner.errors = RollingAccuracy(self.window)
            survivors.append(learner)
        self.learners = survivors

        known = set(self.known)
        for feature in sorted(instance.features):
            if feature not in known:
                self.known.append(feature)
                self._spawn({feature})
        if self.known and len(self.learners) < self.M:
            size = max(1, math.ceil(self.delta * len(self.known)))
            sample = self.rng.choice(len(self.known), size=size, replace=False)
            self._spawn({self.known[i] for i in sample})


class _Tree:
    def __init__(self, stump, born, window):
        self.stump = stump
        self.born = born
        self.errors = RollingAccuracy(window)


class _Forest:
    def __init__(self):
        self.trees = []
        self.replacements = 0


def hoeffding_bound(n, delta):
    return math.sqrt(math.log(1 / delta) / (2 * n))


@register
class ORF3V(OnlineLearner):
    """
    Online random feature forests: one forest of `forest_size` stumps per
    feature, each fit on a bootstrap of the window. Every `replacement_interval`
    instances each forest replaces one stump; stumps whose windowed error sits
    more than the Hoeffding bound above their forest's mean are pruned.
    """

    name = 'orf3v'
    strategies = ('oldest', 'random')

    def __init__(self, forest_size=5, replacement_interval=10, update_strategy='oldest', replacement_chance=0.7,
                 window=BUFFER_SIZE, alpha=0.1, delta=0.001, seed=0):
        super().__init__()
        if update_strategy not in self.strategies:
            raise InvalidInputError(f'updateStrategy must be one of {self.strategies}, got {update_strategy!r}')
        self.forest_size = forest_size
        self.replacement_interval = replacement_interval
        self.update_strategy = update_strategy
        self.replacement_chance = replacement_chance
        self.window = window
        self.alpha = alpha
        self.delta = delta
        self.buffer = InstanceBuffer(window)
        self.forests = {}
        self.majority = _MajorityClass()
        self.rng = np.random.default_rng(seed)
        self._votes = {}

    @classmethod
    def from_params(cls, params, seed=0):
        return cls(seed=seed, **take(params, {
            'forestSize': 'forest_size',
            'replacementInterval': 'replacement_interval',
            'updateStrategy': 'update_strategy',
            'replacementChance': 'replacement_chance',
            'windowsize': 'window',
            'alpha': 'alpha',
            'delta': 'delta',
        }))

    def _grow_tree(self, feature, weight=1.0):
        items = list(self.buffer)
        picks = self.rng.integers(0, len(items), size=len(items))
        stump, _ = best_split(self.buffer, feature, [items[i] for i in picks])
        stump.weight = weight
        return _Tree(stump, self.instances_seen, self.window)

    def _predict(self, instance):
        weights = [0.0, 0.0]
        self._votes = {}
        for feature in instance.features:
            forest = self.forests.get(feature)
            if forest is None:
                continue
            class_weights, votes = _vote(forest.trees, instance.features)
            weights[0] += class_weights[0]
            weights[1] += class_weights[1]
            self._votes[feature] = votes
        return _from_votes(weights, self.majority)

    def _update(self, instance, label):
        for feature, votes in self._votes.items():
            for tree, vote in zip(self.forests[feature].trees, votes):
                tree.stump.weight *= (1 + self.alpha) if vote == label else (1 - self.alpha)
                tree.errors.add(vote == label)
        self._rescale()

        self.buffer.add(instance, label)
        self.majority.add(label)

        for feature in sorted(instance.features):
            if feature not in self.forests:
                forest = _Forest()
                forest.trees = [self._grow_tree(feature) for _ in range(self.forest_size)]
                self.forests[feature] = forest

        if (self.instances_seen + 1) % self.replacement_interval == 0:
            for feature in sorted(self.forests):
                self._replace(feature, self.forests[feature])
        for forest in self.forests.values():
            self._prune(forest)

    def _rescale(self):
        top = max((tree.stump.weight for forest in self.forests.values() for tree in forest.trees), default=0.0)
        if top <= 0:
            return
        for forest in self.forests.values():
            for tree in forest.trees:
                tree.stump.weight = max(tree.stump.weight / top, WEIGHT_FLOOR)

    def _replace(self, feature, forest):
        weight = float(np.mean([tree.stump.weight for tree in forest.trees])) if forest.trees else 1.0
        if len(forest.trees) < self.forest_size:
            forest.trees.append(self._grow_tree(feature, weight))
            forest.replacements += 1
            return
        if self.update_strategy == 'oldest':
            index = min(range(len(forest.trees)), key=lambda i: forest.trees[i].born)
        else:
            if self.rng.random() < self.replacement_chance:
                return
            index = int(self.rng.integers(len(forest.trees)))
        forest.trees[index] = self._grow_tree(feature, weight)
        forest.replacements += 1

    def _prune(self, forest):
        full = [tree for tree in forest.trees if len(tree.errors) == self.window]
        if len(full) < 2:
            return
        mean_error = float(np.mean([tree.errors.error_rate for tree in full]))
        cutoff = mean_error + hoeffding_bound(self.window, self.delta)
        for tree in full:
            if len(forest.trees) > 1 and tree.errors.error_rate > cutoff:
                forest.trees.remove(tree)
                logger.debug('ORF3V pruned a stump on feature %d', tree.stump.feature)
