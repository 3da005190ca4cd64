"""Turning per-class scores into a terminated root-to-terminal label path."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError
from .taxonomy import Taxonomy

ENTROPY_MEASURES = ("normalized", "score")


def normalized_entropy(values: Sequence[float]) -> float:
    """Entropy of ``values`` (rescaled to sum 1) divided by ``ln(len(values))``.

    One value gives 0; an all-zero list gives 1 (nothing to tell the
    children apart).
    """
    if len(values) == 0:
        raise ValueError("normalized_entropy needs at least one value")
    n = len(values)
    if n == 1:
        return 0.0
    total = float(sum(values))
    if total <= 0.0:
        return 1.0
    h = 0.0
    for v in values:
        if v > 0.0:
            q = v / total
            h -= q * math.log(q)
    return min(1.0, max(0.0, h / math.log(n)))


def score_entropy(values: Sequence[float]) -> float:
    """``-sum(v * ln v) / len(values)`` taken on the raw scores.

    The scores are not rescaled, so aggregates above 1 contribute negative
    terms; large, dominant children drive the value down.
    """
    if len(values) == 0:
        raise ValueError("score_entropy needs at least one value")
    h = 0.0
    for v in values:
        if v > 0.0:
            h -= v * math.log(v)
    return h / len(values)


def _measure(name):
    if name == "normalized":
        return normalized_entropy
    if name == "score":
        return score_entropy
    raise ValidationError(f"unknown entropy measure {name!r}; expected one of {ENTROPY_MEASURES}")


@dataclass(frozen=True)
class EntropyPolicy:
    theta: float
    measure: str = "normalized"

    def __post_init__(self):
        _check_unit("theta", self.theta)
        _measure(self.measure)


@dataclass(frozen=True)
class MarginalPolicy:
    # values slightly above 1 are allowed: they force every path down to the root
    tau: float

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0 + 1e-2):
            raise ValidationError(f"tau={self.tau!r} outside [0, 1]")


@dataclass(frozen=True)
class EntryLevelPolicy:
    base: object
    entry_set: frozenset

    def __post_init__(self):
        object.__setattr__(self, "entry_set", frozenset(self.entry_set))


def _check_unit(name, x):
    if not (0.0 <= x <= 1.0):
        raise ValidationError(f"{name}={x!r} outside [0, 1]")


def _pick_start(roots: Iterable[str], score: Mapping[str, float]) -> str:
    roots = list(roots)
    if not roots:
        raise ValidationError("graph has no root")
    return min(roots, key=lambda r: (-score.get(r, 0.0), r))


def _argmax(nodes, score):
    return min(nodes, key=lambda c: (-score.get(c, 0.0), c))


def walk_entropy(graph, theta: float, start: str | None = None, measure: str = "normalized") -> list:
    """Greedy top-down walk over propagated scores.

    ``graph`` is anything with ``.graph`` (a :class:`Taxonomy`) and ``.p``
    (class -> score).  At each node the entropy of the children's scores is
    compared with ``theta``; the walk stops when it is strictly larger or
    when the node has no children, and otherwise moves to the best child.
    """
    _check_unit("theta", theta)
    entropy = _measure(measure)
    t: Taxonomy = graph.graph
    p = graph.p
    node = start if start is not None else _pick_start(t.roots, p)
    t.children(node)  # raises UnknownClass
    path = [node]
    while True:
        kids = sorted(t.children(node))
        if not kids:
            return path
        g = entropy([p.get(c, 0.0) for c in kids])
        if g > theta:
            return path
        node = _argmax(kids, p)
        path.append(node)


def walk_marginal(marginal: Mapping[str, float], t: Taxonomy, tau: float, start: str | None = None) -> list:
    """Descend while some child's marginal reaches ``tau``, taking the largest."""
    node = start if start is not None else _pick_start(
        [r for r in t.roots if r in marginal] or t.roots, marginal
    )
    path = [node]
    while True:
        kids = [c for c in t.children(node) if c in marginal and marginal[c] >= tau]
        if not kids:
            return path
        node = _argmax(kids, marginal)
        path.append(node)


def entry_level_backoff(path: Sequence[str], entry_set) -> tuple[list, bool]:
    """Cut ``path`` after its deepest entry-level class.

    Returns ``(path, flagged)``; ``flagged`` is True when no node of the path
    is entry-level and the path came back unchanged.
    """
    for i in range(len(path) - 1, -1, -1):
        if path[i] in entry_set:
            return list(path[: i + 1]), False
    return list(path), True


def decide_path(policy, t: Taxonomy, scores: Mapping[str, float]) -> tuple[list, bool]:
    """Apply a termination policy to a score map over ``t``'s classes.

    Entropy policies read the scores as propagated heuristic scores,
    marginal policies as posterior marginals.
    """
    if isinstance(policy, EntryLevelPolicy):
        path, _ = decide_path(policy.base, t, scores)
        return entry_level_backoff(path, policy.entry_set)
    if isinstance(policy, EntropyPolicy):
        return walk_entropy(_Scored(t, scores), policy.theta, measure=policy.measure), False
    if isinstance(policy, MarginalPolicy):
        return walk_marginal(scores, t, policy.tau), False
    raise ValidationError(f"unknown termination policy {policy!r}")


@dataclass(frozen=True)
class _Scored:
    graph: Taxonomy
    p: Mapping[str, float]
