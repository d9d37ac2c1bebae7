"""
Synthesising haphazard streams from complete datasets.

Every (row, feature) cell is kept independently with probability p. Draws come
from one numpy PCG64 generator seeded with `MaskConfig.seed` and are consumed
in row-major order (row, then feature column); seed and order together fix the
stream, so both are part of the contract.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from haphazard_bench.exceptions import FormatError, InvalidInputError

from .models import FeatureRegistry, HaphazardInstance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaskConfig:
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidInputError(f'availability probability must lie in [0, 1], got {self.p}')


@dataclass
class HaphazardStream:
    instances: list
    registry: FeatureRegistry = field(default_factory=FeatureRegistry)

    def __iter__(self):
        return iter(self.instances)

    def __len__(self):
        return len(self.instances)

    def __getitem__(self, index):
        return self.instances[index]

    @property
    def labels(self):
        return [instance.label for instance in self.instances]


def _stream_from_presence(dataset, present):
    values = dataset.values
    instances = []
    for t in range(len(dataset)):
        columns = np.flatnonzero(present[t])
        instances.append(HaphazardInstance(
            t=t,
            features={int(column): float(values[t, column]) for column in columns},
            label=int(dataset.labels[t]),
        ))
    return HaphazardStream(instances=instances, registry=FeatureRegistry(dataset.feature_names))


def _warn_raw_columns(dataset):
    if dataset.raw:
        logger.warning('Columns %s are still raw categoricals and will be absent from the stream',
                       sorted(dataset.raw))


def as_stream(dataset):
    """Real haphazard data: presence is exactly non-missingness."""
    _warn_raw_columns(dataset)
    return _stream_from_presence(dataset, ~np.isnan(dataset.values))


def mask_stream(dataset, cfg):
    _warn_raw_columns(dataset)
    rng = np.random.default_rng(cfg.seed)
    draws = rng.random(dataset.values.shape)
    present = (draws < cfg.p) & ~np.isnan(dataset.values)
    stream = _stream_from_presence(dataset, present)
    logger.info('Masked %d x %d cells at p=%.2f (seed %d): %.4f available',
                len(dataset), dataset.n_features, cfg.p, cfg.seed,
                present.mean() if present.size else 0.0)
    return stream


def write_stream(stream, path):
    """
    A header line {"features": [name, ...]} listing the registry in id order,
    then one JSON object per instance: {"t": int, "x": {"id": value, ...}, "y": 0|1}.
    """
    path = Path(path)
    with path.open('w') as handle:
        handle.write(json.dumps({'features': stream.registry.names}, separators=(',', ':')) + '\n')
        for instance in stream:
            record = {
                't': instance.t,
                'x': {str(fid): instance.features[fid] for fid in sorted(instance.features)},
                'y': instance.label,
            }
            handle.write(json.dumps(record, separators=(',', ':')) + '\n')
    return path


def _feature_id(key, registry, has_header):
    feature_id = int(key)
    if feature_id < 0:
        raise ValueError(f'negative feature id {feature_id}')
    if feature_id >= len(registry):
        if has_header:
            raise ValueError(f'feature id {feature_id} is not in the header')
        # headerless files name features by their ids
        for missing in range(len(registry), feature_id + 1):
            registry.intern(str(missing))
    return feature_id


def read_stream(path):
    path = Path(path)
    registry = FeatureRegistry()
    has_header = False
    instances = []
    with path.open() as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if 'features' in record:
                    if has_header or instances:
                        raise ValueError('feature header must be the first line')
                    registry, has_header = FeatureRegistry(record['features']), True
                    continue
                pairs = [(_feature_id(key, registry, has_header), value) for key, value in record['x'].items()]
                instances.append(HaphazardInstance.from_pairs(record['t'], pairs, record['y']))
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f'{path}: line {line_number} is not a stream record ({exc})') from exc
    return HaphazardStream(instances=instances, registry=registry)
