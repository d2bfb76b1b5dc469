# -*- coding: utf-8 -*-
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#

"""Confusion matrices, macro metrics and stratified cross-validation."""

import collections
import logging

import numpy as np

from .classifier import Model, count_params
from .common import D_HEAD, N_FOLDS, N_HEADS, SEED
from .config import TrainConfig
from .errors import DimError, EmptyInputError, InvalidKError, InvalidLabelError
from .signals import MurmurClass
from .training import dataset_labels, predict_batch, train


logger = logging.getLogger(__name__)


N_CLASSES = len(MurmurClass)

# Sentinel of metrics with a zero denominator
NOT_DEFINED = None

MACRO_METRICS = ('macro_specificity', 'macro_f1', 'macro_accuracy')


ClassMetrics = collections.namedtuple('ClassMetrics', ['specificity', 'f1', 'accuracy'])


class ConfusionMatrix:
    """Counts of true (rows) against predicted (columns) classes."""

    def __init__(self, counts=None):
        if counts is None:
            counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (N_CLASSES, N_CLASSES) or np.any(counts < 0):
            raise DimError(cause="confusion counts must be a non-negative %dx%d matrix"
                           % (N_CLASSES, N_CLASSES))
        self.counts = counts

    @property
    def total(self):
        return int(self.counts.sum())

    def one_vs_rest(self, i):
        """True positives, false positives, false negatives and true negatives of class `i`."""

        tp = int(self.counts[i, i])
        fp = int(self.counts[:, i].sum()) - tp
        fn = int(self.counts[i, :].sum()) - tp
        tn = self.total - tp - fp - fn
        return tp, fp, fn, tn

    def __add__(self, other):
        return ConfusionMatrix(self.counts + other.counts)

    def to_list(self):
        return self.counts.tolist()


def _class_index(value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) \
            or not 0 <= value < N_CLASSES:
        raise InvalidLabelError(label=value)
    return int(value)


def confusion(preds, labels):
    """Tally predictions against true labels.

    :raises DimError: when both lists have different lengths
    """
    if len(preds) != len(labels):
        raise DimError(cause="%d predictions for %d labels" % (len(preds), len(labels)))

    cm = ConfusionMatrix()
    for pred, label in zip(preds, labels):
        cm.counts[_class_index(label), _class_index(pred)] += 1
    return cm


def _ratio(numerator, denominator):
    return numerator / denominator if denominator else NOT_DEFINED


def per_class_metrics(cm):
    """One-vs-rest specificity, F1 and accuracy of every class.

    Metrics whose denominator is zero are `NOT_DEFINED`.

    :returns: an ordered dict of `MurmurClass` -> `ClassMetrics`

    :raises EmptyInputError: when the matrix is empty
    """
    if cm.total == 0:
        raise EmptyInputError(cause="confusion matrix with no counts")

    metrics = collections.OrderedDict()
    for label in MurmurClass:
        tp, fp, fn, tn = cm.one_vs_rest(int(label))
        metrics[label] = ClassMetrics(specificity=_ratio(tn, tn + fp),
                                      f1=_ratio(2 * tp, 2 * tp + fp + fn),
                                      accuracy=_ratio(tp + tn, tp + tn + fp + fn))
    return metrics


class MetricsReport:
    """Per-class and macro-averaged metrics of a confusion matrix."""

    def __init__(self, confusion_matrix, per_class, fold_id=None):
        self.confusion = confusion_matrix
        self.per_class = per_class
        self.fold_id = fold_id

        for name, field in zip(MACRO_METRICS, ClassMetrics._fields):
            values = [getattr(m, field) for m in per_class.values()]
            mean = sum(0.0 if v is NOT_DEFINED else v for v in values) / N_CLASSES
            setattr(self, name, mean)

    @property
    def not_defined(self):
        """Names of the per-class metrics that are not defined."""

        return ['%s.%s' % (label.label, field)
                for label, metrics in self.per_class.items()
                for field in ClassMetrics._fields
                if getattr(metrics, field) is NOT_DEFINED]

    def to_dict(self):
        report = {
            'fold': self.fold_id,
            'confusion': self.confusion.to_list(),
            'per_class': {
                label.label: dict(metrics._asdict()) for label, metrics in self.per_class.items()
            },
            'not_defined': self.not_defined
        }
        for name in MACRO_METRICS:
            report[name] = getattr(self, name)
        return report


def macro_metrics(cm, fold_id=None):
    """Macro-averaged specificity, F1 and accuracy.

    Each macro value is the mean over the four classes; metrics that
    are not defined count as zero.

    :returns: a `MetricsReport`
    """
    return MetricsReport(cm, per_class_metrics(cm), fold_id=fold_id)


class FoldPlan:
    """Assignment of every sample to one of `k` folds."""

    def __init__(self, k, assignments, seed):
        self.k = k
        self.assignments = assignments
        self.seed = seed

    def test_indices(self, fold):
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold):
        return np.flatnonzero(self.assignments != fold)

    def folds(self):
        return [self.test_indices(fold) for fold in range(self.k)]


def _round_robin(members_by_class, k, rng):
    """Shuffle the members of each class and deal them to the folds.

    Dealing goes on across classes from the fold where the previous
    class stopped.
    """
    assignments = {}
    offset = 0
    for label in sorted(members_by_class):
        members = members_by_class[label]
        shuffled = rng.permutation(len(members))
        for i, position in enumerate(shuffled):
            assignments[members[position]] = (offset + i) % k
        offset = (offset + len(members)) % k
    return assignments


def stratified_kfold(labels, k=N_FOLDS, seed=SEED, groups=None):
    """Split samples in `k` folds keeping class proportions.

    Within each class, samples are shuffled with a generator seeded
    by `seed` and assigned to folds round-robin, so per-class counts
    of two folds differ at most by one. When `groups` is given, whole
    groups are dealt instead of samples; a group takes the class of
    its first sample.

    :param labels: class index of every sample
    :param k: number of folds
    :param seed: seed of the shuffling
    :param groups: optional group key of every sample

    :returns: a `FoldPlan`

    :raises InvalidKError: when `k` is lower than 2
    """
    if k < 2:
        raise InvalidKError(k=k)

    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)

    if groups is None:
        units = [[i] for i in range(len(labels))]
    else:
        if len(groups) != len(labels):
            raise DimError(cause="%d groups for %d labels" % (len(groups), len(labels)))
        members = collections.OrderedDict()
        for i, group in enumerate(groups):
            members.setdefault(group, []).append(i)
        units = list(members.values())

    by_class = collections.defaultdict(list)
    for u, unit in enumerate(units):
        by_class[int(labels[unit[0]])].append(u)

    for label, unit_ids in sorted(by_class.items()):
        if len(unit_ids) < k:
            logger.warning("Class %s has %d %s for %d folds; some folds will miss it",
                           MurmurClass(label).label, len(unit_ids),
                           'groups' if groups is not None else 'samples', k)

    unit_folds = _round_robin(by_class, k, rng)

    assignments = np.empty(len(labels), dtype=np.int64)
    for u, unit in enumerate(units):
        assignments[unit] = unit_folds[u]

    return FoldPlan(k, assignments, seed)


def holdout_split(labels, fraction, seed=SEED):
    """Stratified split in training and held-out samples.

    Each class gives `round(fraction * n_class)` shuffled samples to
    the held-out part.

    :returns: a tuple with the sorted training and held-out indices
    """
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)

    held_out = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        n_out = int(round(fraction * len(members)))
        held_out.extend(rng.permutation(members)[:n_out].tolist())

    held_out = np.array(sorted(held_out), dtype=np.int64)
    training = np.setdiff1d(np.arange(len(labels)), held_out)
    return training, held_out


def neural_trainer(cfg=None, heads=N_HEADS, d_head=D_HEAD):
    """Trainer training the transformer classifier on each fold."""

    def fit_predict(train_stacks, test_stacks):
        model, _ = train(train_stacks, cfg=cfg, heads=heads, d_head=d_head)
        return predict_batch(test_stacks, model)[0]

    return fit_predict


def aggregate(reports):
    """Mean and population standard deviation of the macro metrics."""

    summary = collections.OrderedDict()
    for name in MACRO_METRICS:
        values = np.array([getattr(report, name) for report in reports])
        summary[name] = {'mean': float(values.mean()), 'std': float(values.std())}
    return summary


class CrossValidation:
    """Reports of every fold of a cross-validation and their summary."""

    def __init__(self, plan, reports):
        self.plan = plan
        self.reports = reports
        self.aggregate = aggregate(reports)

    def to_dict(self):
        return {
            'k': self.plan.k,
            'seed': self.plan.seed,
            'folds': [report.to_dict() for report in self.reports],
            'aggregate': self.aggregate
        }


def cross_validate(stacks, k=N_FOLDS, cfg=None, heads=N_HEADS, d_head=D_HEAD,
                   seed=SEED, groups=None, trainer=None):
    """Stratified k-fold cross-validation of a classifier.

    For each fold, `trainer` is called with the stacks of the other
    folds and the stacks of the fold, and must return the predicted
    class of every stack of the fold. By default the transformer
    classifier is trained with `cfg`, `heads` and `d_head`.

    :returns: a `CrossValidation`
    """
    cfg = cfg or TrainConfig(seed=seed)
    trainer = trainer or neural_trainer(cfg=cfg, heads=heads, d_head=d_head)

    labels = dataset_labels(stacks)
    plan = stratified_kfold(labels, k=k, seed=seed, groups=groups)

    reports = []
    for fold in range(k):
        train_idx, test_idx = plan.train_indices(fold), plan.test_indices(fold)

        preds = trainer([stacks[i] for i in train_idx], [stacks[i] for i in test_idx])
        report = macro_metrics(confusion(list(preds), labels[test_idx].tolist()), fold_id=fold)
        reports.append(report)

        logger.info("Fold %d/%d; macro accuracy %.4f, macro F1 %.4f",
                    fold + 1, k, report.macro_accuracy, report.macro_f1)

    return CrossValidation(plan, reports)


def sweep_architectures(stacks, heads_grid, d_head_grid, k=N_FOLDS, cfg=None,
                        seed=SEED, groups=None):
    """Cross-validate the classifier over a grid of heads and head sizes.

    :returns: a list of dicts, one per architecture, with its number
        of parameters and the summary of its cross-validation
    """
    results = []
    M = stacks[0].M

    for heads in heads_grid:
        for d_head in d_head_grid:
            total, breakdown = count_params(Model.create(M, heads=heads, d_head=d_head))
            cv = cross_validate(stacks, k=k, cfg=cfg, heads=heads, d_head=d_head,
                                seed=seed, groups=groups)
            results.append({
                'heads': heads,
                'd_head': d_head,
                'params': total,
                'params_breakdown': dict(breakdown),
                'aggregate': cv.aggregate
            })
            logger.info("Architecture heads=%d, d_head=%d; macro accuracy %.4f",
                        heads, d_head, cv.aggregate['macro_accuracy']['mean'])
    return results
