"""
Naive Bayes learners for haphazard inputs: NB3 and FAE.

Both keep per-feature, per-class sufficient statistics that grow as features
appear. A feature contributes two terms to a class log-posterior: the
(add-one smoothed) probability of it being observed in that class, and a
Gaussian likelihood of its value once both classes have seen it. Features are
ranked by the chi-squared statistic of their presence/class contingency table.
"""
import logging
import math

import numpy as np
from scipy.special import expit

from haphazard_bench.exceptions import InvalidInputError

from .base import OnlineLearner, Prediction, RollingAccuracy, register, take

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-6
_LOG_2PI = math.log(2 * math.pi)


class FeatureClassStats:
    """Counts, sums and sums of squares per (feature, class), plus class instance counts."""

    def __init__(self, capacity=16):
        self.class_counts = [0, 0]
        self.rows = {}
        self.fids = np.zeros(capacity, dtype=np.int64)
        self.presence = np.zeros((capacity, 2))
        self.sums = np.zeros((capacity, 2))
        self.sumsq = np.zeros((capacity, 2))

    @property
    def n(self):
        return self.class_counts[0] + self.class_counts[1]

    def __len__(self):
        return len(self.rows)

    def __contains__(self, fid):
        return fid in self.rows

    def _row(self, fid):
        row = self.rows.get(fid)
        if row is None:
            row = len(self.rows)
            if row == len(self.fids):
                self.fids = np.resize(self.fids, 2 * row)
                for name in ('presence', 'sums', 'sumsq'):
                    grown = np.zeros((2 * row, 2))
                    grown[:row] = getattr(self, name)
                    setattr(self, name, grown)
            self.fids[row] = fid
            self.rows[fid] = row
        return row

    def add(self, features, label):
        self.class_counts[label] += 1
        for fid, value in features.items():
            row = self._row(fid)
            self.presence[row, label] += 1
            self.sums[row, label] += value
            self.sumsq[row, label] += value * value

    def chi2_scores(self):
        """Smoothed 2x2 chi-squared statistic of every known feature, in row order."""
        k = len(self.rows)
        a = self.presence[:k, 0]
        b = self.presence[:k, 1]
        c = self.class_counts[0] - a
        d = self.class_counts[1] - b
        a, b, c, d = a + 1, b + 1, c + 1, d + 1
        total = a + b + c + d
        scores = total * (a * d - b * c) ** 2 / ((a + b) * (c + d) * (a + c) * (b + d))
        scores[self.presence[:k].sum(axis=1) == 0] = 0.0
        return scores

    def top_features(self, fraction):
        """The ceil(fraction * |known|) best-ranked features; ties go to the lower feature id."""
        k = len(self.rows)
        keep = math.ceil(fraction * k)
        if keep >= k:
            return set(self.rows)
        scores = self.chi2_scores()
        fids = self.fids[:k]
        order = np.lexsort((fids, -scores))
        return {int(fid) for fid in fids[order[:keep]]}

    def log_posteriors(self, features, allowed=None):
        n0, n1 = self.class_counts
        n = n0 + n1
        log_post = [math.log((n0 + 1) / (n + 2)), math.log((n1 + 1) / (n + 2))]
        for fid, value in features.items():
            if allowed is not None and fid not in allowed:
                continue
            row = self.rows.get(fid)
            if row is None:
                continue
            counts = self.presence[row]
            gaussian = counts[0] > 0 and counts[1] > 0
            for label in (0, 1):
                count = counts[label]
                log_post[label] += math.log((count + 1) / (self.class_counts[label] + 2))
                if gaussian:
                    mean = self.sums[row, label] / count
                    var = max(self.sumsq[row, label] / count - mean * mean, VARIANCE_FLOOR)
                    log_post[label] -= 0.5 * (_LOG_2PI + math.log(var) + (value - mean) ** 2 / var)
        return log_post

    def classify(self, features, allowed=None):
        lp0, lp1 = self.log_posteriors(features, allowed)
        return Prediction(label=1 if lp1 > lp0 else 0, score=float(expit(lp1 - lp0)))


def chi2_score(stats, feature):
    row = stats.rows.get(feature)
    if row is None:
        return 0.0
    return float(stats.chi2_scores()[row])


@register
class NB3(OnlineLearner):
    """A single naive Bayes classifier over the top-n chi-squared features."""

    name = 'nb3'
    deterministic = True

    def __init__(self, n_fraction=1.0):
        super().__init__()
        if not 0 < n_fraction <= 1:
            raise InvalidInputError(f'n must lie in (0, 1], got {n_fraction}')
        self.n_fraction = n_fraction
        self.stats = FeatureClassStats()

    @classmethod
    def from_params(cls, params, seed=0):
        return cls(**take(params, {'n': 'n_fraction'}))

    @property
    def pretrained(self):
        return self.stats.n > 0

    def selected_features(self):
        return self.stats.top_features(self.n_fraction)

    def _predict(self, instance):
        # before the single pretraining instance there is nothing to go on
        if not self.pretrained:
            return Prediction(label=0, score=0.5)
        return self.stats.classify(instance.features, self.selected_features())

    def _update(self, instance, label):
        self.stats.add(instance.features, label)


class _Member:
    def __init__(self, features, birth_t, window):
        self.features = frozenset(features)
        self.birth_t = birth_t
        self.stats = FeatureClassStats()
        self.accuracy = RollingAccuracy(window)
        self.age = 0
        self.below = 0
        self.vote = None

    def observed(self, features):
        return {fid: value for fid, value in features.items() if fid in self.features}


@register
class FAE(OnlineLearner):
    """
    Feature Adaptive Ensemble: naive Bayes members built on the top-M features
    of their time. Members vote with their rolling accuracy; a new member is
    spawned when the current top-M set drifts more than `f` from the youngest
    member's set, and members that trail the ensemble for `p` consecutive
    instances are dropped.
    """

    name = 'fae'
    deterministic = True

    def __init__(self, m=5, f=0.15, p=3, r=10, window=50, top_fraction=1.0):
        super().__init__()
        self.m = m
        self.f = f
        self.p = p
        self.r = r
        self.window = window
        self.top_fraction = top_fraction
        self.stats = FeatureClassStats()
        self.members = []
        self.ensemble_accuracy = RollingAccuracy(window)
        self.spawned_at = []
        self._last = None

    @classmethod
    def from_params(cls, params, seed=0):
        return cls(**take(params, {'m': 'm', 'f': 'f', 'p': 'p', 'r': 'r', 'N': 'window', 'M': 'top_fraction'}))

    def _spawn(self, instance, label):
        t = instance.t
        member = _Member(self.stats.top_features(self.top_fraction), t, self.window)
        member.stats.add(member.observed(instance.features), label)
        self.members.append(member)
        self.spawned_at.append(t)
        logger.debug('FAE spawned member %d at t=%d over %d features', len(self.members), t, len(member.features))
        return member

    def _predict(self, instance):
        if not self.members:
            self._last = None
            return Prediction(label=0, score=0.5)
        for member in self.members:
            member.vote = member.stats.classify(member.observed(instance.features))
        voters = [member for member in self.members if member.age >= self.m] or self.members
        weights = [0.0, 0.0]
        for member in voters:
            weights[member.vote.label] += member.accuracy.value
        label = 1 if weights[1] > weights[0] else 0
        self._last = label
        return Prediction(label=label, score=weights[1] / (weights[0] + weights[1]))

    def _update(self, instance, label):
        self.stats.add(instance.features, label)
        if not self.members:
            self._spawn(instance, label)
            return

        self.ensemble_accuracy.add(self._last == label)
        for member in self.members:
            member.accuracy.add(member.vote.label == label)
            member.stats.add(member.observed(instance.features), label)
            member.age += 1

        threshold = self.ensemble_accuracy.value
        for member in list(self.members):
            if member.age < self.m:
                continue
            member.below = member.below + 1 if member.accuracy.value < threshold else 0
            if member.below >= self.p and len(self.members) > 1:
                self.members.remove(member)
                logger.debug('FAE dropped member born at t=%d', member.birth_t)

        current = self.stats.top_features(self.top_fraction)
        youngest = max(self.members, key=lambda member: member.birth_t)
        union = current | youngest.features
        drift = len(current ^ youngest.features) / len(union) if union else 0.0
        if drift > self.f and instance.t - youngest.birth_t >= self.r:
            self._spawn(instance, label)
