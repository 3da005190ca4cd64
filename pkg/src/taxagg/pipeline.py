"""End-to-end aggregation: sheets in, label paths out."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .heuristic import propagate
from .junction import PosteriorReport, infer_batch
from .metrics import evaluate
from .network import Network
from .paths import decide_path
from .scores import ScoreSheet
from .taxonomy import Taxonomy


@dataclass(frozen=True)
class AggregateRecord:
    instance_id: str
    method: str
    terminal: str
    path: list
    paths: list            # every root path of the terminal within the scored graph
    scores: Mapping[str, float]
    log_evidence: float | None = None
    flagged: bool = False


def evidence_matrix(net: Network, sheets: Sequence[ScoreSheet]) -> tuple[np.ndarray, np.ndarray]:
    slot = {c: i for i, c in enumerate(net.class_nodes)}
    l0 = np.zeros((len(sheets), len(slot)))
    l1 = np.zeros_like(l0)
    for r, sheet in enumerate(sheets):
        for ev in net.evidence_for_sheet(sheet):
            i = slot[ev.node]
            l0[r, i] += ev.log_l0
            l1[r, i] += ev.log_l1
    return l0, l1


def posteriors(net: Network, sheets: Sequence[ScoreSheet]) -> list:
    """Exact posterior report for every sheet, computed as one batch."""
    if not sheets:
        return []
    for s in sheets:
        s.validate(net.graph)
    l0, l1 = evidence_matrix(net, sheets)
    marg, log_z = infer_batch(net, l0, l1)
    out = []
    for r, sheet in enumerate(sheets):
        m = {c: min(1.0, max(0.0, float(v))) for c, v in zip(net.class_nodes, marg[r])}
        out.append(PosteriorReport(sheet.instance_id, m, float(log_z[r])))
    return out


def aggregate_graphical(net: Network, sheets: Sequence[ScoreSheet], policy) -> list:
    reports = posteriors(net, sheets)
    return [_record(net.graph, "graphical", rep.instance_id, rep.marginal, policy, rep.log_evidence) for rep in reports]


def aggregate_heuristic_batch(t: Taxonomy, sheets: Sequence[ScoreSheet], policy) -> list:
    out = []
    for sheet in sheets:
        prop = propagate(t, sheet)
        out.append(_record(prop.graph, "heuristic", sheet.instance_id, prop.p, policy, None))
    return out


def _record(graph: Taxonomy, method, iid, scores, policy, log_evidence) -> AggregateRecord:
    path, flagged = decide_path(policy, graph, scores)
    return AggregateRecord(
        instance_id=iid,
        method=method,
        terminal=path[-1],
        path=path,
        paths=graph.root_paths(path[-1]),
        scores=dict(sorted(scores.items())),
        log_evidence=log_evidence,
        flagged=flagged,
    )


def individual_predictions(sheets: Sequence[ScoreSheet], classifier_id: str) -> dict:
    """Each instance's top-scoring class for one classifier (ties: smallest id)."""
    out = {}
    for sheet in sheets:
        scores = sheet.entries.get(classifier_id)
        if not scores:
            continue
        out[sheet.instance_id] = min(scores, key=lambda c: (-scores[c], c))
    return out


def tune_threshold(
    candidates: Iterable[float],
    predict: Callable[[float], Mapping[str, str]],
    t: Taxonomy,
    golds: Mapping[str, object],
) -> tuple[float, float]:
    """Pick the threshold maximising mean LCA F1 on a labeled split.

    Ties go to the earliest candidate.  Returns ``(threshold, mean F1)``.
    """
    best = None
    for thr in candidates:
        preds = predict(thr)
        f = evaluate(t, preds, {i: golds[i] for i in preds}).mean_f1
        if best is None or f > best[1]:
            best = (thr, f)
    if best is None:
        raise ValidationError("no threshold candidates")
    return best


def terminals(records: Iterable[AggregateRecord]) -> dict:
    return {r.instance_id: r.terminal for r in records}


def decide_all(scored: Mapping[str, tuple], policy) -> dict:
    """Terminal class per instance from cached ``(graph, scores)`` pairs."""
    return {iid: decide_path(policy, graph, scores)[0][-1] for iid, (graph, scores) in scored.items()}
