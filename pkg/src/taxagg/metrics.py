"""LCA-based hierarchical precision, recall and F1."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyInput, KeyMismatch, NoCommonAncestor
from .taxonomy import Taxonomy


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    flagged: bool = False

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))


def f1_score(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2.0 * p * r / (p + r)


def lca_prf(t: Taxonomy, predicted: str, gold: str) -> PRF:
    """Compare the upward paths of ``predicted`` and ``gold`` to their LCA.

    Each augmented set is the shortest upward path from the class to the
    LCA, both ends included.  Classes without a common ancestor score zero
    and are flagged.
    """
    try:
        top = t.lca(predicted, gold)
    except NoCommonAncestor:
        return PRF(0.0, 0.0, 0.0, True)
    pred_aug = set(t.shortest_upward_path(predicted, top))
    gold_aug = set(t.shortest_upward_path(gold, top))
    both = len(pred_aug & gold_aug)
    p = both / len(pred_aug)
    r = both / len(gold_aug)
    return PRF(p, r, f1_score(p, r))


def lca_prf_multi(t: Taxonomy, predicted: str, golds: Iterable[str]) -> PRF:
    """Score against whichever gold class gives the best F1; flagged when there are several."""
    golds = sorted(set(golds))
    if not golds:
        raise EmptyInput("no gold class")
    if len(golds) == 1:
        return lca_prf(t, predicted, golds[0])
    best = max((lca_prf(t, predicted, g) for g in golds), key=lambda m: m.f1)
    return PRF(best.precision, best.recall, best.f1, True)


@dataclass(frozen=True)
class EvalReport:
    per_instance: list          # (instance_id, P, R, F, flagged)
    mean: tuple
    std: tuple

    @property
    def mean_f1(self) -> float:
        return self.mean[2]

    @property
    def mean_precision(self) -> float:
        return self.mean[0]


def _mean_std(xs):
    n = len(xs)
    mu = math.fsum(xs) / n
    var = math.fsum((x - mu) ** 2 for x in xs) / n
    return mu, math.sqrt(var)


def evaluate(t: Taxonomy, predictions: Mapping[str, str], golds: Mapping[str, object]) -> EvalReport:
    """Per-instance LCA metrics plus their mean and population standard deviation.

    ``golds`` values may be a class id or a collection of class ids.
    """
    if set(predictions) != set(golds):
        only_p = sorted(set(predictions) - set(golds))[:3]
        only_g = sorted(set(golds) - set(predictions))[:3]
        raise KeyMismatch(f"instance sets differ (predictions only: {only_p}, gold only: {only_g})")
    if not predictions:
        raise EmptyInput("no instances to evaluate")
    rows = []
    for i in sorted(predictions):
        g = golds[i]
        m = lca_prf(t, predictions[i], g) if isinstance(g, str) else lca_prf_multi(t, predictions[i], g)
        rows.append((i, m.precision, m.recall, m.f1, m.flagged))
    stats = [_mean_std([row[k] for row in rows]) for k in (1, 2, 3)]
    return EvalReport(rows, tuple(s[0] for s in stats), tuple(s[1] for s in stats))
