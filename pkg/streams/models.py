"""
In-memory data model for dimension-varying streams.

Nothing here is a Django ORM model: instances are created by the thousand per
second and never persisted, so they are plain frozen dataclasses.
"""
import math
from dataclasses import dataclass, field

from haphazard_bench.exceptions import InvalidInputError, OrderingError


class FeatureRegistry:
    """Interns feature names into dense integer ids, in order of first sight."""

    def __init__(self, names=()):
        self._ids = {}
        self._names = []
        for name in names:
            self.intern(name)

    def intern(self, name):
        if not name:
            raise InvalidInputError('feature name must be a non-empty string')
        name = str(name)
        feature_id = self._ids.get(name)
        if feature_id is None:
            feature_id = len(self._names)
            self._ids[name] = feature_id
            self._names.append(name)
        return feature_id

    def name_of(self, feature_id):
        return self._names[feature_id]

    def get(self, name):
        return self._ids.get(name)

    @property
    def names(self):
        return list(self._names)

    def __contains__(self, name):
        return name in self._ids

    def __len__(self):
        return len(self._names)


def intern_feature(name, registry):
    return registry.intern(name)


@dataclass(frozen=True)
class HaphazardInstance:
    """X_t with its label: the observed (feature id -> value) pairs at time t."""

    t: int
    features: dict
    label: int

    def __post_init__(self):
        if self.t < 0:
            raise InvalidInputError(f'time index must be non-negative, got {self.t}')
        if self.label not in (0, 1):
            raise InvalidInputError(f'label must be 0 or 1, got {self.label!r}')
        for feature_id, value in self.features.items():
            if not math.isfinite(value):
                raise InvalidInputError(f'feature {feature_id} has non-finite value {value!r} at t={self.t}')

    @classmethod
    def from_pairs(cls, t, pairs, label):
        features = {}
        for feature_id, value in pairs:
            if feature_id in features:
                raise InvalidInputError(f'duplicate feature id {feature_id} at t={t}')
            features[feature_id] = float(value)
        return cls(t=t, features=features, label=label)

    @property
    def ids(self):
        return self.features.keys()

    def __len__(self):
        return len(self.features)


@dataclass
class FeatureRecord:
    first_seen: int
    last_seen: int
    observation_count: int = 0


@dataclass(frozen=True)
class FeatureDisposition:
    sudden: frozenset
    previously_seen: frozenset


@dataclass
class FeatureUniverse:
    """F̄_t: every feature observed so far. Obsolete features are never removed."""

    records: dict = field(default_factory=dict)
    last_t: int = -1

    @property
    def total_known(self):
        return len(self.records)

    def __contains__(self, feature_id):
        return feature_id in self.records

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def absorb(self, instance):
        if instance.t < self.last_t:
            raise OrderingError(f'instance t={instance.t} arrived after t={self.last_t}')
        self.last_t = instance.t
        for feature_id in instance.features:
            record = self.records.get(feature_id)
            if record is None:
                record = self.records[feature_id] = FeatureRecord(first_seen=instance.t, last_seen=instance.t)
            record.last_seen = instance.t
            record.observation_count += 1
        return self

    def obsolete(self, t, horizon):
        """Features not seen within the last `horizon` steps before `t`."""
        return {fid for fid, record in self.records.items() if record.last_seen < t - horizon}


def classify_features(instance, universe):
    sudden = frozenset(fid for fid in instance.features if fid not in universe)
    previously_seen = frozenset(fid for fid in instance.features if fid in universe)
    return FeatureDisposition(sudden=sudden, previously_seen=previously_seen)


def universe_absorb(instance, universe):
    return universe.absorb(instance)


def relation(instance, universe):
    """Names how F_t relates to F̄_{t-1}: empty, all_sudden, superset, all_seen or mixed."""
    observed = set(instance.features)
    if not observed:
        return 'empty'
    known = set(universe.records)
    if not observed & known:
        return 'all_sudden'
    if known and known <= observed:
        return 'superset'
    if observed <= known:
        return 'all_seen'
    return 'mixed'
