"""
Tabular dataset loading and categorical encoding.

Datasets are dense: one float64 matrix with NaN marking values that were
already missing in the source file. Columns named in `categorical` are kept as
raw strings until `encode_categorical` turns them into numbers.
"""
import csv
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from haphazard_bench.exceptions import EncodingError, FormatError, InvalidInputError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_MISSING_MARKERS = ('?', 'nan', 'NaN', '')

SCHEMES = ('integer_codes', 'bracket_median')

_INTERVAL = re.compile(r'^\s*[\[(]\s*(-?\d+(?:\.\d+)?)\s*[,-]\s*(-?\d+(?:\.\d+)?)\s*[\])]\s*$')

_POSITIVE_LABELS = {'1', '+1', '1.0', '+1.0'}
_NEGATIVE_LABELS = {'0', '-1', '0.0', '-1.0'}


@dataclass
class Dataset:
    values: np.ndarray
    labels: np.ndarray
    feature_names: list
    provenance: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.feature_names):
            raise FormatError(
                f'values of shape {self.values.shape} do not match {len(self.feature_names)} feature names'
            )
        if len(self.labels) != self.values.shape[0]:
            raise FormatError(f'{len(self.labels)} labels for {self.values.shape[0]} rows')
        if len(self.labels) and not np.isin(self.labels, (0, 1)).all():
            raise FormatError('labels must be 0 or 1')

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    @property
    def missing_count(self):
        missing = np.isnan(self.values)
        # raw columns are NaN until encoded; count their own missing markers instead
        missing[:, [self.feature_names.index(name) for name in self.raw]] = False
        return int(missing.sum()) + sum(cell is None for cells in self.raw.values() for cell in cells)


def _parse_label(text, row, column):
    token = text.strip()
    if token in _POSITIVE_LABELS:
        return 1
    if token in _NEGATIVE_LABELS:
        return 0
    raise ParseError(f'label {text!r} is not one of 0/1 or -1/+1', row=row, column=column)


def load_csv(path, label_column, missing_markers=DEFAULT_MISSING_MARKERS, delimiter=',', header=True,
             categorical=()):
    """Read a delimited file; `label_column` is a header name, or an index when there is no header."""
    path = Path(path)
    markers = {marker.strip() for marker in missing_markers}
    with path.open(newline='') as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        rows = [row for row in reader if row]

    if header:
        if not rows:
            raise FormatError(f'{path} has no header row')
        names, rows = [name.strip() for name in rows[0]], rows[1:]
        first_data_row = 2
    else:
        width = len(rows[0]) if rows else 0
        names = [str(index) for index in range(width)]
        first_data_row = 1

    label_name = str(label_column)
    if label_name not in names:
        raise FormatError(f'label column {label_column!r} not found in {path}')
    label_index = names.index(label_name)
    feature_columns = [index for index, name in enumerate(names) if index != label_index]
    feature_names = [names[index] for index in feature_columns]
    unknown = set(categorical) - set(feature_names)
    if unknown:
        raise FormatError(f'categorical columns {sorted(unknown)} not found in {path}')

    values = np.full((len(rows), len(feature_columns)), np.nan)
    labels = np.zeros(len(rows), dtype=np.int8)
    raw = {name: [] for name in categorical}
    for offset, row in enumerate(rows):
        line = first_data_row + offset
        if len(row) != len(names):
            raise FormatError(f'{path}: row {line} has {len(row)} cells, expected {len(names)}')
        labels[offset] = _parse_label(row[label_index], line, label_name)
        for position, index in enumerate(feature_columns):
            name = names[index]
            cell = row[index].strip()
            missing = cell in markers
            if name in raw:
                raw[name].append(None if missing else cell)
                continue
            if missing:
                continue
            try:
                values[offset, position] = float(cell)
            except ValueError:
                raise ParseError(f'non-numeric cell {cell!r}', row=line, column=name) from None
            if not np.isfinite(values[offset, position]):
                raise ParseError(f'non-finite cell {cell!r}', row=line, column=name)

    dataset = Dataset(
        values=values,
        labels=labels,
        feature_names=feature_names,
        provenance={'source': str(path), 'loader': 'csv', 'encodings': {}},
        raw=raw,
    )
    logger.info('Loaded %s: %d rows, %d features, %d missing cells',
                path.name, len(dataset), dataset.n_features, dataset.missing_count)
    return dataset


def load_libsvm(path):
    """Read `label idx:val ...` lines with 1-based indices; absent indices are missing."""
    path = Path(path)
    labels = []
    sparse_rows = []
    width = 0
    with path.open() as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_parse_label(tokens[0], line_number, 'label'))
            row = {}
            for token in tokens[1:]:
                index_text, sep, value_text = token.partition(':')
                try:
                    if not sep:
                        raise ValueError
                    index = int(index_text)
                    value = float(value_text)
                except ValueError:
                    raise ParseError(f'malformed index:value token {token!r}', row=line_number) from None
                if index < 1 or not np.isfinite(value):
                    raise ParseError(f'invalid token {token!r}', row=line_number)
                if index in row:
                    raise ParseError(f'duplicate index {index}', row=line_number, column=index)
                row[index] = value
                width = max(width, index)
            sparse_rows.append(row)

    values = np.full((len(sparse_rows), width), np.nan)
    for offset, row in enumerate(sparse_rows):
        for index, value in row.items():
            values[offset, index - 1] = value
    dataset = Dataset(
        values=values,
        labels=np.asarray(labels, dtype=np.int8),
        feature_names=[str(index) for index in range(1, width + 1)],
        provenance={'source': str(path), 'loader': 'libsvm', 'encodings': {}},
    )
    logger.info('Loaded %s: %d rows, %d features', path.name, len(dataset), dataset.n_features)
    return dataset


def _bracket_median(cell, column):
    match = _INTERVAL.match(cell)
    if match is None:
        raise EncodingError(f'{cell!r} in column {column!r} is not an interval like "[a,b]"')
    low, high = float(match.group(1)), float(match.group(2))
    return (low + high) / 2


def encode_categorical(dataset, column, scheme):
    if scheme not in SCHEMES:
        raise InvalidInputError(f'unknown encoding scheme {scheme!r}; expected one of {SCHEMES}')
    if column not in dataset.raw:
        raise InvalidInputError(f'column {column!r} has no raw categorical values to encode')

    cells = dataset.raw[column]
    encoded = np.full(len(cells), np.nan)
    if scheme == 'integer_codes':
        codes = {}
        for row, cell in enumerate(cells):
            if cell is not None:
                encoded[row] = codes.setdefault(cell, len(codes) + 1)
    else:
        for row, cell in enumerate(cells):
            if cell is not None:
                encoded[row] = _bracket_median(cell, column)

    values = dataset.values.copy()
    values[:, dataset.feature_names.index(column)] = encoded
    raw = {name: cells for name, cells in dataset.raw.items() if name != column}
    provenance = dict(dataset.provenance)
    provenance['encodings'] = {**provenance.get('encodings', {}), column: scheme}
    return replace(dataset, values=values, raw=raw, provenance=provenance)


def encode_all_categoricals(dataset, columns, scheme):
    for column in columns:
        dataset = encode_categorical(dataset, column, scheme)
    return dataset


def size_group(n_instances):
    if n_instances <= 10_000:
        return 'Small'
    if n_instances <= 100_000:
        return 'Medium'
    return 'Large'


def describe_dataset(dataset):
    n = len(dataset)
    positives = int(dataset.labels.sum())
    return {
        'source': dataset.provenance.get('source'),
        'instances': n,
        'features': dataset.n_features,
        'imbalance_ratio': round(100 * positives / n, 2) if n else None,
        'missing_values': dataset.missing_count,
        'size_group': size_group(n),
    }
