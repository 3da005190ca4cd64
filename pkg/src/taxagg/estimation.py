"""Fitting observation parameters from labeled data or, without labels, by EM."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyInput, NonImprovingLikelihood, UnknownClass, ValidationError
from .junction import infer_batch
from .network import (
    SIGMA_FLOOR,
    Binormal,
    Discrete,
    ObservationParams,
    build_network,
    normal_logpdf,
    observe,
)
from .scores import ScoreSheet
from .taxonomy import Taxonomy

log = logging.getLogger(__name__)

EM_SLACK = 1e-8


def gold_to_binary(t: Taxonomy, gold: str | Iterable[str]) -> dict:
    """Binary labels implied by a gold class: 1 on it and all its ancestors.

    Several gold classes (multi-label gold) take the union.
    """
    golds = [gold] if isinstance(gold, str) else list(gold)
    on = set()
    for g in golds:
        on.add(g)
        on |= t.ancestors(g)
    return {c: int(c in on) for c in t.classes}


# -- closed-form fits ----------------------------------------------------------


def _moments(y: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    """Weighted mean and population standard deviation, plus the total weight.

    Uses exactly rounded sums, so the result does not depend on the order
    of the observations.
    """
    total = math.fsum(w.tolist())
    if total <= 0.0:
        return total, math.nan, math.nan
    mu = math.fsum((w * y).tolist()) / total
    var = math.fsum((w * (y - mu) ** 2).tolist()) / total
    return total, mu, math.sqrt(max(var, 0.0))


def binormal_from_weights(
    y, w1, *, floor: float = SIGMA_FLOOR, min_count: float = 2.0, previous: Binormal | None = None
) -> tuple[Binormal, bool]:
    """Binormal fit where observation ``i`` counts ``w1[i]`` towards ``z=1`` and
    ``1 - w1[i]`` towards ``z=0``.

    A side whose total weight is below ``min_count`` is not estimable.  With
    ``previous`` given it keeps its previous value (the EM choice); without
    it, the pooled standard deviation and the pooled mean shifted by one
    unit are used and the result is flagged.
    """
    y = np.asarray(y, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    if y.shape != w1.shape:
        raise ValidationError("scores and weights differ in length")
    if len(y) == 0:
        raise EmptyInput("no observations to fit")
    n1, mu1, s1 = _moments(y, w1)
    n0, mu0, s0 = _moments(y, 1.0 - w1)
    flagged = False
    if n0 < min_count or n1 < min_count:
        if previous is not None:
            if n0 < min_count:
                mu0, s0 = previous.mu0, previous.sigma0
            if n1 < min_count:
                mu1, s1 = previous.mu1, previous.sigma1
        else:
            flagged = True
            _, pooled_mu, pooled_sd = _moments(y, np.ones_like(y))
            if n0 < min_count:
                mu0, s0 = pooled_mu - 1.0, pooled_sd
            if n1 < min_count:
                mu1, s1 = pooled_mu + 1.0, pooled_sd
    return Binormal(mu0, max(s0, floor), mu1, max(s1, floor)), flagged


def fit_binormal(scores: Sequence[tuple[float, int]], floor: float = SIGMA_FLOOR) -> tuple[Binormal, bool]:
    """Class-conditional Gaussian fit from ``(transformed score, z)`` pairs.

    Returns ``(params, flagged)``; ``flagged`` marks the insufficient-data
    fallback (fewer than two observations on one side).
    """
    if not scores:
        raise EmptyInput("no observations to fit")
    y = np.array([s for s, _ in scores], dtype=float)
    z = np.array([zz for _, zz in scores], dtype=float)
    if not np.all((z == 0) | (z == 1)):
        raise ValidationError("labels must be 0 or 1")
    return binormal_from_weights(y, z, floor=floor)


def discrete_from_weights(y, w1, smoothing: float = 1.0) -> Discrete:
    y = np.asarray(y, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    w0 = 1.0 - w1
    s = smoothing
    n1 = math.fsum(w1.tolist())
    n0 = math.fsum(w0.tolist())
    hit1 = math.fsum((w1 * (y == 1)).tolist())
    hit0 = math.fsum((w0 * (y == 0)).tolist())
    alpha = (hit1 + s) / (n1 + 2 * s) if n1 + 2 * s > 0 else 0.5
    beta = (hit0 + s) / (n0 + 2 * s) if n0 + 2 * s > 0 else 0.5
    return Discrete(alpha, beta)


def fit_discrete(labels: Sequence[tuple[int, int]], smoothing: float = 1.0) -> Discrete:
    """Estimate ``(alpha, beta)`` from ``(y, z)`` pairs with ``smoothing`` pseudo-counts."""
    if smoothing < 0:
        raise ValidationError("smoothing must be non-negative")
    y = np.array([a for a, _ in labels], dtype=float)
    z = np.array([b for _, b in labels], dtype=float)
    return discrete_from_weights(y, z, smoothing)


# -- per-hook data ------------------------------------------------------------


@dataclass
class HookData:
    """Observed values of every hook across a list of instances.

    ``values[h]`` and ``rows[h]`` hold, for hook ``h``, the observed value
    and the instance row of every instance where the classifier scored the
    class.  Abstentions simply do not appear.
    """

    instance_ids: list
    hooks: list
    kinds: dict
    values: dict = field(default_factory=dict)
    rows: dict = field(default_factory=dict)


def collect_hooks(t: Taxonomy, sheets: Sequence[ScoreSheet], kinds: Mapping[str, str] | None = None) -> HookData:
    if not sheets:
        raise EmptyInput("no instances")
    kinds = dict(kinds or {})
    vals: dict = {}
    rows: dict = {}
    for r, sheet in enumerate(sheets):
        sheet.validate(t)
        for j, c, y in sheet.hooks():
            kind = kinds.get(j, "binormal")
            if kind not in ("binormal", "discrete"):
                raise ValidationError(f"unknown observation kind {kind!r} for classifier {j!r}")
            probe = ObservationParams(j, c, Binormal(0, 1, 0, 1) if kind == "binormal" else Discrete(0.5, 0.5))
            vals.setdefault((j, c), []).append(observe(probe, y))
            rows.setdefault((j, c), []).append(r)
    hooks = sorted(vals)
    return HookData(
        instance_ids=[s.instance_id for s in sheets],
        hooks=hooks,
        kinds={h: kinds.get(h[0], "binormal") for h in hooks},
        values={h: np.array(vals[h]) for h in hooks},
        rows={h: np.array(rows[h], dtype=np.int64) for h in hooks},
    )


def m_step(
    data: HookData,
    q: Mapping[str, np.ndarray],
    *,
    previous: Mapping[tuple, ObservationParams] | None = None,
    floor: float = SIGMA_FLOOR,
    smoothing: float = 1.0,
) -> list:
    """Refit every hook from per-class soft labels.

    ``q[c]`` is the vector (one entry per instance row) of ``Pr[z(c)=1]``.
    Hard 0/1 vectors make this the supervised fit.
    """
    out = []
    for h in data.hooks:
        j, c = h
        if c not in q:
            raise UnknownClass(c)
        w = q[c][data.rows[h]]
        y = data.values[h]
        if data.kinds[h] == "binormal":
            prev = previous[h].dist if previous is not None else None
            dist, flagged = binormal_from_weights(y, w, floor=floor, previous=prev)
        else:
            dist, flagged = discrete_from_weights(y, w, smoothing), False
        out.append(ObservationParams(j, c, dist, flagged))
    return out


def fit_supervised(
    t: Taxonomy,
    sheets: Sequence[ScoreSheet],
    golds: Mapping[str, str | Iterable[str]],
    kinds: Mapping[str, str] | None = None,
    floor: float = SIGMA_FLOOR,
    smoothing: float = 1.0,
) -> list:
    """Fit every observed hook from a labeled validation set."""
    data = collect_hooks(t, sheets, kinds)
    missing = [i for i in data.instance_ids if i not in golds]
    if missing:
        raise ValidationError(f"no gold label for instance {missing[0]!r}")
    q = gold_matrix(t, [golds[i] for i in data.instance_ids], {c for _, c in data.hooks})
    return m_step(data, q, floor=floor, smoothing=smoothing)


def gold_matrix(t: Taxonomy, golds: Sequence, classes: Iterable[str]) -> dict:
    classes = list(classes)
    q = {c: np.zeros(len(golds)) for c in classes}
    for r, g in enumerate(golds):
        z = gold_to_binary(t, g)
        for c in classes:
            q[c][r] = z[c]
    return q


# -- EM ---------------------------------------------------------------------


@dataclass
class SoftLabels:
    instance_ids: list
    classes: tuple
    q: np.ndarray   # (n_instances, n_classes)

    def __getitem__(self, key):
        instance_id, c = key
        return float(self.q[self.instance_ids.index(instance_id), self.classes.index(c)])

    def column(self, c: str) -> np.ndarray:
        return self.q[:, self.classes.index(c)]


@dataclass
class EMResult:
    params: list
    soft_labels: SoftLabels
    trace: list
    converged: bool
    effective_counts: dict   # hook -> (sum of 1 - q, sum of q)


def default_init(data: HookData) -> list:
    """Symmetric start on the logit scale; discrete hooks start at 0.7 / 0.7."""
    out = []
    for j, c in data.hooks:
        if data.kinds[(j, c)] == "binormal":
            out.append(ObservationParams(j, c, Binormal(-1.0, 1.0, 1.0, 1.0)))
        else:
            out.append(ObservationParams(j, c, Discrete(0.7, 0.7)))
    return out


def _log_lik_matrix(net, data: HookData, params: Mapping[tuple, ObservationParams]):
    n = len(data.instance_ids)
    k = len(net.class_nodes)
    l0 = np.zeros((n, k))
    l1 = np.zeros((n, k))
    slot = {c: i for i, c in enumerate(net.class_nodes)}
    for h in data.hooks:
        dist = params[h].dist
        y = data.values[h]
        rows = data.rows[h]
        if isinstance(dist, Binormal):
            a0 = normal_logpdf(y, dist.mu0, dist.sigma0)
            a1 = normal_logpdf(y, dist.mu1, dist.sigma1)
        else:
            with np.errstate(divide="ignore"):
                a0 = np.where(y == 1, np.log(1.0 - dist.beta), np.log(dist.beta))
                a1 = np.where(y == 1, np.log(dist.alpha), np.log(1.0 - dist.alpha))
        np.add.at(l0[:, slot[h[1]]], rows, a0)
        np.add.at(l1[:, slot[h[1]]], rows, a1)
    return l0, l1


def _log_prior(params, smoothing: float) -> float:
    # Beta(s+1, s+1) prior on discrete parameters; zero for binormal hooks
    if smoothing == 0:
        return 0.0
    out = 0.0
    for p in params.values():
        if isinstance(p.dist, Discrete):
            for v in p.dist.values():
                out += smoothing * (math.log(v) + math.log(1.0 - v))
    return out


def em_fit(
    t: Taxonomy,
    sheets: Sequence[ScoreSheet],
    init: Sequence[ObservationParams] | None = None,
    *,
    kinds: Mapping[str, str] | None = None,
    max_iters: int = 100,
    tol: float = 1e-6,
    floor: float = SIGMA_FLOOR,
    smoothing: float = 1.0,
    network_options: Mapping | None = None,
) -> EMResult:
    """Estimate observation parameters without labels.

    Each iteration computes exact posterior marginals of every class node
    for every instance (E-step), then refits each hook with the marginals
    as soft labels (M-step).  Network leaks stay fixed.  Iteration stops
    when the total log-evidence improves by less than ``tol`` or after
    ``max_iters`` M-steps.  When discrete hooks use ``smoothing > 0`` the
    traced objective includes their Beta log-prior.
    """
    data = collect_hooks(t, sheets, kinds)
    if init is None:
        init = default_init(data)
    params = {p.hook: p for p in init}
    missing = [h for h in data.hooks if h not in params]
    if missing:
        raise ValidationError(f"no initial parameters for hook {missing[0]}")
    for h in data.hooks:
        if params[h].kind != data.kinds[h]:
            raise ValidationError(f"hook {h}: initial kind {params[h].kind!r} != data kind {data.kinds[h]!r}")
    params = {h: params[h] for h in data.hooks}
    net = build_network(t, list(params.values()), **dict(network_options or {}))
    slot = {c: i for i, c in enumerate(net.class_nodes)}

    trace: list = []
    converged = False
    for it in range(max_iters + 1):
        l0, l1 = _log_lik_matrix(net, data, params)
        marg, log_z = infer_batch(net, l0, l1)
        objective = float(math.fsum(log_z.tolist())) + _log_prior(params, smoothing)
        if trace and objective < trace[-1] - EM_SLACK:
            raise NonImprovingLikelihood(
                f"EM objective decreased at iteration {it}: {trace[-1]!r} -> {objective!r}"
            )
        trace.append(objective)
        log.debug("em iteration %d objective %.9g", it, objective)
        if len(trace) >= 2 and trace[-1] - trace[-2] < tol:
            converged = True
            break
        if it == max_iters:
            break
        q = {c: marg[:, slot[c]] for c in net.class_nodes}
        new = m_step(data, q, previous=params, floor=floor, smoothing=smoothing)
        params = {p.hook: p for p in new}

    counts = {}
    for h in data.hooks:
        w = marg[data.rows[h], slot[h[1]]]
        counts[h] = (float(np.sum(1.0 - w)), float(np.sum(w)))
    soft = SoftLabels(list(data.instance_ids), net.class_nodes, marg)
    return EMResult([params[h] for h in data.hooks], soft, trace, converged, counts)
