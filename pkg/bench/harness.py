"""
Prequential experiment runner.

A run is one learner over one ordered pass of one stream: every instance is
predicted before its label is revealed for training. An experiment repeats
that per learner seed and aggregates the reports into a RunRecord.
"""
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from django.utils import timezone

from haphazard_bench.exceptions import FormatError, HaphazardError, InvalidInputError
from learners.base import build_learner, is_deterministic
from streams.loaders import DEFAULT_MISSING_MARKERS, encode_categorical, load_csv, load_libsvm
from streams.masking import MaskConfig, as_stream, mask_stream, read_stream

from .metrics import MetricAccumulator, MetricsReport

logger = logging.getLogger(__name__)

LOADERS = ('csv', 'libsvm', 'stream')
METRICS = ('balanced_accuracy', 'accuracy', 'auroc', 'auprc', 'errors', 'wall_time_s')


@dataclass
class ExperimentSpec:
    """
    `p` None means the dataset is already haphazard and is streamed as is.
    `seeds` seed the learner; the mask always uses `mask_seed` so every run
    sees the same stream. Deterministic models run once per listed seed and
    ignore `repeats`.
    """

    model: str
    dataset: str
    params: dict = field(default_factory=dict)
    loader: str = 'csv'
    loader_options: dict = field(default_factory=dict)
    p: float = None
    mask_seed: int = 0
    seeds: list = field(default_factory=lambda: [0])
    repeats: int = None

    def __post_init__(self):
        if self.loader not in LOADERS:
            raise InvalidInputError(f'unknown loader {self.loader!r}; expected one of {LOADERS}')
        if self.p is not None:
            MaskConfig(self.p, self.mask_seed)
            if self.loader == 'stream':
                raise InvalidInputError('stream files are already haphazard; drop --p')
        if self.repeats is not None and self.repeats < 1:
            raise InvalidInputError(f'repeats must be at least 1, got {self.repeats}')
        self.seeds = [int(seed) for seed in self.seeds]
        if not self.seeds:
            raise InvalidInputError('at least one seed is required')

    def run_seeds(self):
        if is_deterministic(self.model) or self.repeats is None:
            return list(self.seeds)
        seeds = list(self.seeds[:self.repeats])
        extra = max(seeds) + 1
        while len(seeds) < self.repeats:
            seeds.append(extra)
            extra += 1
        return seeds

    def to_dict(self):
        return asdict(self)

    @property
    def spec_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'), default=str)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    @property
    def dataset_name(self):
        return Path(self.dataset).stem


def load_dataset(path, loader='csv', options=None):
    """A complete (or natively haphazard) dataset from a csv or libsvm file, categoricals encoded."""
    options = dict(options or {})
    if loader == 'libsvm':
        return load_libsvm(path)
    if loader != 'csv':
        raise InvalidInputError(f'{loader} files hold streams, not datasets')
    categorical = options.get('categorical', {})
    dataset = load_csv(
        path,
        label_column=options.get('label_column', 'label'),
        missing_markers=options.get('missing', DEFAULT_MISSING_MARKERS),
        delimiter=options.get('delimiter', ','),
        header=options.get('header', True),
        categorical=tuple(categorical),
    )
    for column, scheme in categorical.items():
        dataset = encode_categorical(dataset, column, scheme)
    return dataset


def to_stream(dataset, p=None, mask_seed=0):
    if p is None:
        return as_stream(dataset)
    return mask_stream(dataset, MaskConfig(p, mask_seed))


def load_spec_stream(spec):
    """Load the dataset named by `spec` and turn it into a haphazard stream; returns (stream, width)."""
    if spec.loader == 'stream':
        stream = read_stream(spec.dataset)
        return stream, len(stream.registry)
    dataset = load_dataset(spec.dataset, spec.loader, spec.loader_options)
    return to_stream(dataset, spec.p, spec.mask_seed), dataset.n_features


def run_once(learner, stream):
    """One prequential pass; the clock covers the predict/update loop only."""
    acc = MetricAccumulator()
    started = time.perf_counter()
    for instance in stream:
        prediction = learner.predict(instance)
        learner.update(instance, instance.label)
        acc.record(prediction.score, prediction.label, instance.label)
    elapsed = time.perf_counter() - started
    if learner.instances_seen != len(stream):
        raise HaphazardError(f'{learner.name} saw {learner.instances_seen} of {len(stream)} instances')
    return MetricsReport.from_accumulator(acc, wall_time_s=elapsed)


@dataclass
class RunRecord:
    spec: dict
    spec_hash: str
    n_instances: int = 0
    status: str = 'ok'
    diagnostic: str = ''
    seeds: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == 'ok'

    @property
    def model(self):
        return self.spec['model']

    @property
    def dataset(self):
        return Path(self.spec['dataset']).stem

    @property
    def p(self):
        return self.spec['p']

    def summarize(self):
        for metric in METRICS:
            values = [report[metric] for report in self.reports]
            if not values or any(value is None for value in values):
                self.mean[metric] = self.std[metric] = None
                continue
            self.mean[metric] = float(np.mean(values))
            self.std[metric] = float(np.std(values))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except TypeError as exc:
            raise FormatError(f'not a run record: {exc}') from exc


def run_experiment(spec, stream=None, n_features=None):
    if stream is None:
        stream, n_features = load_spec_stream(spec)
    record = RunRecord(spec=spec.to_dict(), spec_hash=spec.spec_hash, n_instances=len(stream))
    for seed in spec.run_seeds():
        try:
            learner = build_learner(spec.model, spec.params, seed=seed, n_features=n_features)
        except InvalidInputError as exc:
            record.status = 'failed'
            record.diagnostic = f'invalid configuration {spec.params}: {exc}'
            logger.error('%s on %s failed: %s', spec.model, spec.dataset_name, record.diagnostic)
            break
        try:
            report = run_once(learner, stream)
        except (HaphazardError, ArithmeticError) as exc:
            record.status = 'failed'
            record.diagnostic = f'seed {seed}, after {learner.instances_seen} instances: {exc}'
            logger.error('%s on %s failed: %s', spec.model, spec.dataset_name, record.diagnostic)
            break
        record.seeds.append(seed)
        record.reports.append(report.to_dict())
        logger.info('%s on %s (p=%s, seed %d): bAcc %.4f in %.2fs', spec.model, spec.dataset_name, spec.p, seed,
                    report.balanced_accuracy, report.wall_time_s)
    record.summarize()
    return record


def run_cells(specs, jobs=1):
    """Run every spec; results come back in input order whatever the degree of parallelism."""
    specs = list(specs)
    if jobs <= 1 or len(specs) <= 1:
        return [run_experiment(spec) for spec in specs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_experiment, specs))


class ResultStore:
    """RunRecords as `<spec_hash>.json`; wall-clock timestamps live apart in manifest.json."""

    MANIFEST = 'manifest.json'

    def __init__(self, directory):
        self.directory = Path(directory)

    def path_for(self, record):
        return self.directory / f'{record.spec_hash}.json'

    def save(self, record):
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(record)
        path.write_text(json.dumps(record.to_dict(), sort_keys=True, indent=2) + '\n')
        manifest = self._manifest()
        manifest[path.name] = timezone.now().isoformat()
        (self.directory / self.MANIFEST).write_text(json.dumps(manifest, sort_keys=True, indent=2) + '\n')
        return path

    def _manifest(self):
        path = self.directory / self.MANIFEST
        if not path.exists():
            return {}
        return json.loads(path.read_text())

    def load_all(self):
        records = []
        for path in sorted(self.directory.glob('*.json')):
            if path.name == self.MANIFEST:
                continue
            try:
                records.append(RunRecord.from_dict(json.loads(path.read_text())))
            except json.JSONDecodeError as exc:
                raise FormatError(f'{path} is not valid JSON: {exc}') from exc
        return records
