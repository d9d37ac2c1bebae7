"""
Benchmark summaries built from persisted RunRecords.

Everything here is a pure function of the records, so regenerating a report
from the same results directory gives byte-identical files.
"""
import csv
import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from learners.base import is_deterministic
from streams.loaders import size_group

from .metrics import SIZE_GROUPS, GroupSummary, aggregate_report, star_rating

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['dataset', 'p', 'model', 'bAcc', 'bAcc_std', 'Time', 'Err', 'Acc', 'ROC', 'PRC', 'status']
STARRED = ('performance', 'data_scalability', 'prediction_consistency', 'feature_scalability')


def _p_key(p):
    return -1.0 if p is None else p


@dataclass
class BenchmarkReport:
    rows: list = field(default_factory=list)
    winners: dict = field(default_factory=dict)
    win_counts: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)
    aggregates: dict = field(default_factory=dict)
    stars: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _row(record):
    mean, std = record.mean, record.std

    def pct(value):
        return None if value is None else round(100 * value, 2)

    return {
        'dataset': record.dataset,
        'p': record.p,
        'model': record.model,
        'bAcc': pct(mean.get('balanced_accuracy')),
        'bAcc_std': pct(std.get('balanced_accuracy')),
        'Time': None if mean.get('wall_time_s') is None else round(mean['wall_time_s'], 2),
        'Err': mean.get('errors'),
        'Acc': pct(mean.get('accuracy')),
        'ROC': pct(mean.get('auroc')),
        'PRC': pct(mean.get('auprc')),
        'status': record.status,
    }


def win_counts(records):
    """Best mean bAcc per (dataset, p) cell; ties go to the alphabetically first model."""
    cells = defaultdict(list)
    for record in records:
        if record.ok:
            cells[(record.dataset, _p_key(record.p))].append(record)
    winners = {}
    counts = defaultdict(int)
    for key in sorted(cells):
        best = min(cells[key], key=lambda record: (-record.mean['balanced_accuracy'], record.model))
        winners[f'{key[0]}@{cells[key][0].p}'] = best.model
        counts[best.model] += 1
    models = sorted({record.model for record in records})
    return winners, {model: counts[model] for model in models}


def group_summaries(records, groups=None):
    """model -> size group -> GroupSummary over every successful record in that group."""
    groups = groups or {}
    collected = defaultdict(lambda: defaultdict(list))
    for record in records:
        if not record.ok:
            continue
        group = groups.get(record.dataset) or size_group(record.n_instances)
        collected[record.model][group].append(record)

    summaries = {}
    for model in sorted(collected):
        summaries[model] = {}
        for group in SIZE_GROUPS:
            members = collected[model].get(group)
            if not members:
                logger.warning('No %s results for %s; the group is left out of its aggregates', group, model)
                continue
            summaries[model][group] = GroupSummary(
                model=model,
                group=group,
                mean_bacc=float(np.mean([100 * r.mean['balanced_accuracy'] for r in members])),
                mean_std=float(np.mean([100 * r.std['balanced_accuracy'] for r in members])),
                mean_time=float(np.mean([r.mean['wall_time_s'] for r in members])),
            )
    return summaries


def _feature_times(records, model, feature_pair, p=0.5):
    if not feature_pair:
        return None
    times = []
    for dataset in feature_pair:
        matches = [r.mean['wall_time_s'] for r in records
                   if r.ok and r.model == model and r.dataset == dataset and r.p == p]
        if not matches:
            return None
        times.append(float(np.mean(matches)))
    return tuple(times)


def summarize(records, groups=None, feature_pair=None):
    records = sorted(records, key=lambda r: (r.dataset, _p_key(r.p), r.model, r.spec_hash))
    report = BenchmarkReport(rows=[_row(record) for record in records])
    report.winners, report.win_counts = win_counts(records)

    summaries = group_summaries(records, groups)
    for model, by_group in summaries.items():
        report.groups[model] = {group: asdict(summary) for group, summary in by_group.items()}
        aggregate = aggregate_report(by_group, _feature_times(records, model, feature_pair),
                                     deterministic=is_deterministic(model))
        report.aggregates[model] = aggregate.to_dict()
        stars = {metric: star_rating(metric, getattr(aggregate, metric))
                 for metric in STARRED if getattr(aggregate, metric) is not None}
        if aggregate.mean_time:
            stars['speed'] = star_rating('speed', aggregate.mean_time)
        report.stars[model] = stars
    return report


def write_csv(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(SUMMARY_COLUMNS)
        for row in report.rows:
            writer.writerow(['' if row[column] is None else row[column] for column in SUMMARY_COLUMNS])
    return path


def write_json(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + '\n')
    return path
