"""
Per-run prequential metrics, cross-model aggregate metrics and carbon estimates.
"""
import bisect
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from sklearn.metrics import average_precision_score, roc_auc_score

from haphazard_bench.exceptions import FormatError, InvalidInputError, UndefinedMetricError

logger = logging.getLogger(__name__)

SIZE_GROUPS = ('Small', 'Medium', 'Large')


class MetricAccumulator:
    def __init__(self):
        self.tp = 0
        self.fp = 0
        self.tn = 0
        self.fn = 0
        self.scores = []
        self.labels = []
        self.predictions = []

    @property
    def n(self):
        return len(self.labels)

    @property
    def errors(self):
        return self.fp + self.fn

    @property
    def positives(self):
        return self.tp + self.fn

    @property
    def negatives(self):
        return self.tn + self.fp

    def record(self, score, predicted, label):
        if not 0.0 <= score <= 1.0:
            raise InvalidInputError(f'score must lie in [0, 1], got {score}')
        if predicted not in (0, 1) or label not in (0, 1):
            raise InvalidInputError(f'predicted and true labels must be 0 or 1, got {predicted!r} and {label!r}')
        if predicted == 1:
            if label == 1:
                self.tp += 1
            else:
                self.fp += 1
        elif label == 1:
            self.fn += 1
        else:
            self.tn += 1
        self.scores.append(float(score))
        self.labels.append(int(label))
        self.predictions.append(int(predicted))
        return self

    @property
    def scored(self):
        return list(zip(self.scores, self.labels))

    @property
    def degenerate(self):
        """Only one class ever occurred, so bAcc reduces to that class's rate and AUROC/AUPRC are undefined."""
        return self.positives == 0 or self.negatives == 0


def record(acc, score, predicted, label):
    return acc.record(score, predicted, label)


def balanced_accuracy(acc):
    rates = []
    if acc.positives:
        rates.append(acc.tp / acc.positives)
    if acc.negatives:
        rates.append(acc.tn / acc.negatives)
    if not rates:
        raise UndefinedMetricError('balanced accuracy needs at least one labeled instance')
    return sum(rates) / len(rates)


def _split(scored):
    scores = [score for score, _ in scored]
    labels = [label for _, label in scored]
    if len(set(labels)) < 2:
        raise UndefinedMetricError('AUROC/AUPRC need both a positive and a negative label')
    return labels, scores


def auroc(scored):
    labels, scores = _split(scored)
    return float(roc_auc_score(labels, scores))


def auprc(scored):
    labels, scores = _split(scored)
    return float(average_precision_score(labels, scores))


def cumulative_error_rate(accuracy):
    return 1.0 - accuracy


@dataclass
class MetricsReport:
    n: int
    errors: int
    accuracy: float
    balanced_accuracy: float
    auroc: float = None
    auprc: float = None
    wall_time_s: float = 0.0
    degenerate: bool = False

    CSV_COLUMNS = ('bAcc', 'Time', 'Err', 'Acc', 'ROC', 'PRC')

    @classmethod
    def from_accumulator(cls, acc, wall_time_s=0.0):
        if acc.n == 0:
            raise UndefinedMetricError('no instance was recorded')
        recount = sum(p != y for p, y in zip(acc.predictions, acc.labels))
        assert recount == acc.errors and acc.errors + (acc.tp + acc.tn) == acc.n, 'confusion counts out of sync'
        report = cls(
            n=acc.n,
            errors=acc.errors,
            accuracy=(acc.tp + acc.tn) / acc.n,
            balanced_accuracy=balanced_accuracy(acc),
            wall_time_s=wall_time_s,
            degenerate=acc.degenerate,
        )
        if not acc.degenerate:
            report.auroc = auroc(acc.scored)
            report.auprc = auprc(acc.scored)
        return report

    @property
    def cer(self):
        return cumulative_error_rate(self.accuracy)

    def to_dict(self):
        return asdict(self)

    def csv_row(self):
        """Percentages for rates, seconds for time, in table column order; undefined areas are blank."""
        def pct(value):
            return '' if value is None else f'{100 * value:.2f}'
        return [pct(self.balanced_accuracy), f'{self.wall_time_s:.2f}', str(self.errors),
                pct(self.accuracy), pct(self.auroc), pct(self.auprc)]


@dataclass(frozen=True)
class GroupSummary:
    """One model's mean bAcc (%), mean std of bAcc across repeats, and mean time (s) over a size group."""

    model: str
    group: str
    mean_bacc: float
    mean_std: float
    mean_time: float


def _relative_change(before, after):
    if before == 0:
        return 0.0 if after == 0 else math.copysign(math.inf, after)
    return (after - before) / before * 100


def percentage_changes(values):
    return [_relative_change(before, after) for before, after in zip(values, values[1:])]


def data_scalability_measure(changes, printed_form=False):
    """
    Rewards increases and penalises decreases between consecutive size groups.
    The default denominator squares (1 + |n|); `printed_form` uses (1 + n**2).
    """
    increases = [change for change in changes if change > 0]
    decreases = [change for change in changes if change < 0]
    numerator = sum(1 + change for change in increases)
    if not decreases:
        return float(numerator)
    if printed_form:
        denominator = sum(1 + change * change for change in decreases)
    else:
        denominator = sum((1 + abs(change)) ** 2 for change in decreases)
    return numerator / denominator


@dataclass
class AggregateReport:
    performance: float = None
    data_scalability: float = None
    prediction_consistency: float = None
    mean_time: float = None
    speed: float = None
    feature_scalability: float = None
    gaps: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _mean(values):
    return sum(values) / len(values)


def aggregate_report(summaries, feature_times=None, deterministic=False):
    """
    `summaries` maps size group -> GroupSummary of one model; `feature_times`
    is the (fewer-features, more-features) time pair, e.g. (SUSY, HIGGS) at p=0.5.
    """
    report = AggregateReport()
    present = [group for group in SIZE_GROUPS if group in summaries]
    missing = [group for group in SIZE_GROUPS if group not in summaries]
    for group in missing:
        report.gaps.append(f'group {group} missing')

    if not missing:
        means = [summaries[group].mean_bacc for group in SIZE_GROUPS]
        report.performance = _mean(means)
        report.data_scalability = data_scalability_measure(percentage_changes(means))
    if present:
        if not deterministic:
            report.prediction_consistency = _mean([summaries[group].mean_std for group in present])
        report.mean_time = _mean([summaries[group].mean_time for group in present])
        report.speed = 1.0 / report.mean_time if report.mean_time > 0 else math.inf

    if feature_times is None:
        report.gaps.append('feature pair timings missing')
    else:
        fewer, more = feature_times
        if fewer > 0:
            report.feature_scalability = more / fewer
        else:
            report.feature_scalability = math.inf if more > 0 else math.nan
    return report


_STAR_EDGES = {
    # higher is better: lower edges of the 1..5 star bins
    'performance': (50.7, 53.18, 55.66, 58.14, 60.62),
    'data_scalability': (0.0, 0.08, 0.15, 0.23, 0.3),
    # lower is better: lower edges of the 5..1 star bins
    'prediction_consistency': (0.21, 0.43, 0.65, 0.87, 1.09),
    'feature_scalability': (1.0, 1.84, 2.68, 3.52, 4.36),
}


def star_rating(metric, value):
    """One to five stars on the documented bins; `speed` takes the mean time in seconds. NaN gets no stars."""
    if math.isnan(value):
        return None
    if metric == 'speed':
        # (1, 2] -> 5 stars ... (4, 5] -> 2, beyond -> 1, on log10 seconds
        position = bisect.bisect_left((2, 3, 4, 5), math.log10(value))
        return 5 - position
    try:
        edges = _STAR_EDGES[metric]
    except KeyError:
        raise InvalidInputError(f'no star bins for {metric!r}') from None
    position = bisect.bisect_right(edges, value)
    if metric in ('performance', 'data_scalability'):
        return min(max(position, 1), 5)
    return min(max(6 - position, 1), 5)


@dataclass(frozen=True)
class HardwareProfile:
    cores: int
    power_per_core_w: float
    memory_power_w: float
    pue: float
    carbon_intensity_g_per_kwh: float

    def __post_init__(self):
        if self.cores <= 0 or self.power_per_core_w <= 0 or self.memory_power_w < 0:
            raise InvalidInputError('hardware profile needs positive cores and power draws')
        if self.pue < 1:
            raise InvalidInputError(f'PUE must be at least 1, got {self.pue}')
        if self.carbon_intensity_g_per_kwh < 0:
            raise InvalidInputError('carbon intensity must be non-negative')

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
            return cls(**{name: data[name] for name in cls.__dataclass_fields__})
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise FormatError(f'{path} is not a hardware profile: {exc}') from exc


DEFAULT_PROFILES = {
    # 128 cores at 12 W, 1 TB of memory at 0.3725 W/GB
    'dgx128': HardwareProfile(cores=128, power_per_core_w=12.0, memory_power_w=1000 * 0.3725,
                              pue=1.67, carbon_intensity_g_per_kwh=7.62),
}


def carbon_estimate(wall_time_s, profile):
    hours = wall_time_s / 3600
    draw_kw = (profile.cores * profile.power_per_core_w + profile.memory_power_w) / 1000
    energy_kwh = hours * draw_kw * profile.pue
    return {'energy_kwh': energy_kwh, 'carbon_kg': energy_kwh * profile.carbon_intensity_g_per_kwh / 1000}
