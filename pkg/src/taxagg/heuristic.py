"""Score propagation through the taxonomy and the entropy-terminated walk."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .paths import walk_entropy
from .scores import ScoreSheet
from .taxonomy import Taxonomy


@dataclass(frozen=True)
class PropagatedScores:
    graph: Taxonomy
    p: Mapping[str, float]


def propagate(t: Taxonomy, s: ScoreSheet) -> PropagatedScores:
    """Push every classifier score onto its class and each ancestor once.

    The ancestor *set* is used, so a class reachable along several upward
    paths still receives a given score only once.  Summation runs over
    sorted classifiers and classes, so the result does not depend on the
    order classifiers were supplied in.
    """
    s.validate(t)
    graph = t.induced_subgraph(s.classes())
    p = dict.fromkeys(graph.classes, 0.0)
    for _, c, y in s.hooks():
        p[c] += y
        for a in t.ancestors(c):
            p[a] += y
    return PropagatedScores(graph, p)


def aggregate_heuristic(t: Taxonomy, s: ScoreSheet, theta: float, measure: str = "normalized") -> list:
    return walk_entropy(propagate(t, s), theta, measure=measure)
