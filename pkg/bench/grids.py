"""
Hyperparameter tables and grid search.

The hyperparameter file has one TOML table per model, keyed by the names the
learners document. A list is a search axis, a scalar is held fixed.
"""
import itertools
import json
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from haphazard_bench.exceptions import ConfigurationError, FormatError, SearchError

from .harness import load_spec_stream, run_cells, run_experiment

logger = logging.getLogger(__name__)


def load_hyperparameters(path):
    path = Path(path)
    try:
        with path.open('rb') as handle:
            return tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigurationError(f'hyperparameter file {path} does not exist') from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f'{path} is not valid TOML: {exc}') from exc


@dataclass
class GridSpec:
    model: str
    axes: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)

    @classmethod
    def from_table(cls, model, table):
        axes = {name: list(value) for name, value in table.items() if isinstance(value, list)}
        fixed = {name: value for name, value in table.items() if not isinstance(value, list)}
        for name, values in axes.items():
            if not values:
                raise ConfigurationError(f'{model}.{name} has an empty search list')
        return cls(model=model, axes=axes, fixed=fixed)

    @classmethod
    def from_file(cls, path, model):
        tables = load_hyperparameters(path)
        if model not in tables:
            raise ConfigurationError(f'{path} has no [{model}] table')
        return cls.from_table(model, tables[model])

    def cells(self):
        """Every assignment, in declared parameter order with the first axis varying slowest."""
        names = list(self.axes)
        return [
            {**self.fixed, **dict(zip(names, values))}
            for values in itertools.product(*(self.axes[name] for name in names))
        ]

    def default(self):
        """The first cell: what `run` uses when no searched configuration is given."""
        return self.cells()[0]

    def __len__(self):
        return math.prod(len(values) for values in self.axes.values())


@dataclass
class GridResult:
    model: str
    p: float
    best: dict
    best_score: float
    cells: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n')
        return path


def load_best_config(path):
    """Read a grid result file back as (model, hyperparameters)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return data['model'], data['best']
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f'{path} is not a grid result: {exc}') from exc


def grid_search(grid, base_spec, p=0.5, jobs=1):
    """
    Evaluate every cell at availability `p` and return the assignment with the
    highest mean balanced accuracy. Failed cells score -inf; ties keep the
    earlier cell.
    """
    cells = grid.cells()
    if not cells:
        raise SearchError(f'empty grid for {grid.model}')
    specs = [replace(base_spec, model=grid.model, params=cell, p=p) for cell in cells]
    if jobs > 1:
        records = run_cells(specs, jobs=jobs)
    else:
        stream, width = load_spec_stream(specs[0])
        records = [run_experiment(spec, stream=stream, n_features=width) for spec in specs]

    best_index, best_score = None, -math.inf
    scored = []
    for index, (cell, record) in enumerate(zip(cells, records)):
        score = record.mean['balanced_accuracy'] if record.ok else -math.inf
        scored.append({
            'params': cell,
            'score': None if math.isinf(score) else score,
            'status': record.status,
            'diagnostic': record.diagnostic,
        })
        if score > best_score:
            best_index, best_score = index, score
        logger.info('%s cell %d/%d %s: %s', grid.model, index + 1, len(cells), cell,
                    'failed' if math.isinf(score) else f'{score:.4f}')

    if best_index is None:
        raise SearchError(f'every one of the {len(cells)} {grid.model} cells failed')
    return GridResult(model=grid.model, p=p, best=cells[best_index], best_score=best_score, cells=scored)
