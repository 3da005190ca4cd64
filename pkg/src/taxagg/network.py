"""Bayesian network over taxonomy classes with classifier-score observations.

Class nodes are binary.  In the network, arrows run from a taxonomy child
to its taxonomy parent, so a class's BN parents are its taxonomy children,
and a class is forced on whenever any of them is on.  Every observed
classifier score hangs off its class node; once observed it reduces to a
pair of likelihoods ``(L0, L1)`` that multiply into that node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ChildFanoutExceeded, NonFiniteInput, UnknownClass, ValidationError
from .scores import ScoreSheet
from .taxonomy import Taxonomy

SCORE_EPS = 1e-6
SIGMA_FLOOR = 1e-3
DEFAULT_FANOUT_CAP = 20
PRIOR_CLIP = 1e-6
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def transform_score(y: float, eps: float = SCORE_EPS) -> float:
    """Logit of a probability score, after clamping into ``[eps, 1 - eps]``."""
    if not math.isfinite(y):
        raise NonFiniteInput(f"score {y!r} is not finite")
    y = min(max(y, eps), 1.0 - eps)
    return math.log(y / (1.0 - y))


def inverse_transform(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def normal_logpdf(y, mu, sigma):
    z = (y - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI


# -- observation models ----------------------------------------------------


@dataclass(frozen=True)
class Binormal:
    mu0: float
    sigma0: float
    mu1: float
    sigma1: float

    kind = "binormal"

    def __post_init__(self):
        vals = (self.mu0, self.sigma0, self.mu1, self.sigma1)
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteInput(f"non-finite binormal parameters {vals}")
        if self.sigma0 <= 0 or self.sigma1 <= 0:
            raise ValidationError(f"binormal sigmas must be positive, got {self.sigma0}, {self.sigma1}")

    def values(self) -> tuple:
        return (self.mu0, self.sigma0, self.mu1, self.sigma1)

    def log_likelihood(self, y: float) -> tuple[float, float]:
        return normal_logpdf(y, self.mu0, self.sigma0), normal_logpdf(y, self.mu1, self.sigma1)


@dataclass(frozen=True)
class Discrete:
    """``alpha = Pr[y=1 | z=1]`` and ``beta = Pr[y=0 | z=0]``."""

    alpha: float
    beta: float

    kind = "discrete"

    def __post_init__(self):
        for v in (self.alpha, self.beta):
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"discrete parameters must lie in [0, 1], got {self.alpha}, {self.beta}")

    def values(self) -> tuple:
        return (self.alpha, self.beta)

    def log_likelihood(self, y: float) -> tuple[float, float]:
        if y == 1:
            return _log(1.0 - self.beta), _log(self.alpha)
        if y == 0:
            return _log(self.beta), _log(1.0 - self.alpha)
        raise ValidationError(f"discrete observation must be 0 or 1, got {y!r}")


def _log(x):
    return math.log(x) if x > 0.0 else -math.inf


@dataclass(frozen=True)
class ObservationParams:
    classifier_id: str
    node: str
    dist: Binormal | Discrete
    flagged: bool = False  # set when fitting fell back to defaults

    @property
    def kind(self) -> str:
        return self.dist.kind

    @property
    def hook(self) -> tuple[str, str]:
        return (self.classifier_id, self.node)


@dataclass(frozen=True)
class EvidenceFactor:
    """Likelihood of one observed score under ``z=0`` and ``z=1``, kept in logs."""

    node: str
    log_l0: float
    log_l1: float

    def __post_init__(self):
        if math.isnan(self.log_l0) or math.isnan(self.log_l1):
            raise NonFiniteInput(f"NaN likelihood on {self.node!r}")
        if self.log_l0 == -math.inf and self.log_l1 == -math.inf:
            raise ValidationError(f"evidence on {self.node!r} has zero likelihood under both states")

    @classmethod
    def from_likelihood(cls, node: str, l0: float, l1: float) -> "EvidenceFactor":
        if l0 < 0 or l1 < 0:
            raise ValidationError("likelihoods must be non-negative")
        return cls(node, _log(l0), _log(l1))

    @property
    def likelihood(self) -> tuple[float, float]:
        return math.exp(self.log_l0), math.exp(self.log_l1)


def score_evidence(obs: ObservationParams, y_observed: float) -> EvidenceFactor:
    """Evidence factor for one observation.

    For a binormal hook ``y_observed`` is the already-transformed score;
    for a discrete hook it is the 0/1 label.
    """
    if not math.isfinite(y_observed):
        raise NonFiniteInput(f"observation {y_observed!r} for {obs.hook} is not finite")
    l0, l1 = obs.dist.log_likelihood(y_observed)
    return EvidenceFactor(obs.node, l0, l1)


def observe(obs: ObservationParams, score: float) -> float:
    """Map a probability-space sheet score to the value a hook observes."""
    if obs.kind == "binormal":
        return transform_score(score)
    return 1.0 if score >= 0.5 else 0.0


# -- network ---------------------------------------------------------------


@dataclass(frozen=True)
class Network:
    """Compiled network description.

    ``variables`` lists every binary variable: class nodes first (sorted),
    then any auxiliary OR nodes introduced for high-fanout classes.
    ``families[v] = (bn_parents, leak)``: the variable is on for sure when a
    BN parent is on and with probability ``leak`` otherwise; for parentless
    class nodes ``leak`` is the prior.
    """

    graph: Taxonomy
    class_nodes: tuple
    variables: tuple
    families: Mapping[str, tuple]
    class_parents: Mapping[str, tuple]
    models: Mapping[tuple, ObservationParams] = field(default_factory=dict)
    treewidth_cap: int = 20

    @property
    def hooks(self) -> tuple:
        return tuple(sorted(self.models))

    def leak(self, node: str) -> float:
        return self.families[node][1]

    def cpd_table(self, node: str) -> np.ndarray:
        """``Pr[z=1 | bn parents]`` for every parent configuration.

        Entry ``i`` corresponds to the configuration whose bit ``b`` is the
        state of ``class_parents[node][b]``.
        """
        if node not in self.class_parents:
            raise UnknownClass(node)
        k = len(self.class_parents[node])
        lam = self.leak(node)
        table = np.ones(1 << k)
        table[0] = lam
        return table

    @cached_property
    def junction_tree(self):
        from .junction import compile_junction_tree

        return compile_junction_tree(self)

    def evidence_for_sheet(self, sheet: ScoreSheet) -> list:
        out = []
        for j, c, y in sheet.hooks():
            obs = self.models.get((j, c))
            if obs is None:
                raise ValidationError(
                    f"instance {sheet.instance_id!r}: no observation parameters for classifier {j!r}, class {c!r}"
                )
            out.append(score_evidence(obs, observe(obs, y)))
        return out

    def dump(self) -> str:
        """Deterministic text listing used by golden tests and ``--dump-network``."""
        lines = [f"network {len(self.class_nodes)} class nodes, {len(self.variables)} variables, {len(self.models)} hooks"]
        for v in self.variables:
            parents, lam = self.families[v]
            kind = "class" if v in self.class_parents else "aux-or"
            label = "leak" if parents else "prior"
            lines.append(f"node {v} [{kind}] bn_parents=[{','.join(parents)}] {label}={lam:.9g}")
        for j, c in self.hooks:
            obs = self.models[(j, c)]
            vals = " ".join(f"{x:.9g}" for x in obs.dist.values())
            lines.append(f"hook {j} -> {c} {obs.kind} {vals}")
        return "\n".join(lines) + "\n"


LEAK_RULES = ("inverse", "leaf-mass")


def _covered(t: Taxonomy, modeled_children: Iterable[str]) -> set:
    out = set()
    for d in modeled_children:
        out.add(d)
        out |= t.descendants(d)
    return out


def structural_leak(
    t: Taxonomy,
    node: str,
    modeled_children: Iterable[str],
    rule: str = "inverse",
    weights: Mapping[str, float] | None = None,
) -> float:
    """Leak of ``node`` derived from the full taxonomy.

    With ``U`` the leaves under ``node`` not covered by any modeled child:

    ``"inverse"``
        ``1 / (1 + U + 1)``.
    ``"leaf-mass"``
        ``(W(U) + 1) / (W(L) - W(C) + 2)``: the add-one estimate of
        ``Pr[node | no modeled child]`` when the true class is a leaf drawn
        in proportion to its weight ``W`` (1 by default).  ``L`` is the set
        of all leaves and ``C`` those covered by the modeled children.
    """
    covered = _covered(t, modeled_children)
    uncovered = [leaf for leaf in t.leaf_descendants(node) if leaf not in covered and leaf != node]
    if rule == "inverse":
        return 1.0 / (len(uncovered) + 2.0)
    if rule == "leaf-mass":
        w = weights or {}
        mass = lambda leaves: math.fsum(float(w.get(leaf, 1.0)) for leaf in leaves)
        covered_mass = mass(leaf for leaf in t.leaves if leaf in covered)
        return (mass(uncovered) + 1.0) / (mass(t.leaves) - covered_mass + 2.0)
    raise ValidationError(f"unknown leak rule {rule!r}; expected one of {LEAK_RULES}")


def structural_priors(
    t: Taxonomy,
    parentless: Sequence[str],
    rule: str = "inverse",
    weights: Mapping[str, float] | None = None,
) -> dict:
    """Priors of the parentless network nodes.

    ``"inverse"`` normalises the nodes' own weights over the parentless
    set; ``"leaf-mass"`` gives each node the weight share of the full
    taxonomy leaves under it.
    """
    w = weights or {}
    if rule == "inverse":
        raw = {c: float(w.get(c, 1.0)) for c in parentless}
        total = math.fsum(raw.values())
        out = {c: (v / total if total > 0 else 1.0 / len(parentless)) for c, v in raw.items()}
    elif rule == "leaf-mass":
        total = math.fsum(float(w.get(leaf, 1.0)) for leaf in t.leaves)
        out = {
            c: math.fsum(float(w.get(leaf, 1.0)) for leaf in t.leaf_descendants(c)) / total
            for c in parentless
        }
    else:
        raise ValidationError(f"unknown leak rule {rule!r}; expected one of {LEAK_RULES}")
    return {c: min(max(v, PRIOR_CLIP), 1.0 - PRIOR_CLIP) for c, v in out.items()}


def build_network(
    t: Taxonomy,
    models: Sequence[ObservationParams] = (),
    *,
    classes: Iterable[str] | None = None,
    weights: Mapping[str, float] | None = None,
    leaks: Mapping[str, float] | None = None,
    priors: Mapping[str, float] | None = None,
    fanout_cap: int = DEFAULT_FANOUT_CAP,
    fanout: str = "decompose",
    treewidth_cap: int = 20,
    leak_rule: str = "leaf-mass",
) -> Network:
    """Build the network over the induced subgraph of the modeled classes.

    Parameters
    ----------
    t : full taxonomy; leaks are derived from its structure.
    models : observation parameters, one per (classifier, class) hook.
    classes : extra seed classes; when nothing is seeded at all the whole
        taxonomy is used.
    weights : per-class weights (default 1) feeding the structural priors
        and, under the ``"leaf-mass"`` rule, the leaks.
    leaks, priors : explicit per-node overrides of the structural values.
    fanout : ``"decompose"`` replaces a class with more than ``fanout_cap``
        children by a chain of deterministic OR nodes; ``"error"`` raises
        :class:`ChildFanoutExceeded` instead.
    leak_rule : ``"inverse"`` or ``"leaf-mass"``; see :func:`structural_leak`.
    """
    if fanout not in ("decompose", "error"):
        raise ValidationError(f"fanout must be 'decompose' or 'error', got {fanout!r}")
    model_map = {}
    for obs in models:
        if obs.node not in t:
            raise UnknownClass(obs.node)
        if obs.hook in model_map:
            raise ValidationError(f"duplicate observation parameters for hook {obs.hook}")
        model_map[obs.hook] = obs
    seed = {obs.node for obs in models}
    if classes is not None:
        for c in classes:
            if c not in t:
                raise UnknownClass(c)
            seed.add(c)
    graph = t.induced_subgraph(seed) if seed else t
    class_nodes = tuple(sorted(graph.classes))
    leaks = dict(leaks or {})
    priors = dict(priors or {})
    for name, overrides in (("leak", leaks), ("prior", priors)):
        for c, v in overrides.items():
            if c not in graph:
                raise UnknownClass(c)
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"{name} for {c!r} = {v!r} outside [0, 1]")

    class_parents = {c: tuple(sorted(graph.children(c))) for c in class_nodes}
    parentless = [c for c in class_nodes if not class_parents[c]]
    for c, v in (weights or {}).items():
        if c not in t:
            raise UnknownClass(c)
        if v < 0 or not math.isfinite(v):
            raise ValidationError(f"weight for {c!r} must be finite and non-negative, got {v!r}")
    default_priors = structural_priors(t, parentless, leak_rule, weights)

    families: dict[str, tuple] = {}
    variables = list(class_nodes)
    for c in class_nodes:
        kids = class_parents[c]
        if not kids:
            families[c] = ((), priors.get(c, default_priors[c]))
            continue
        lam = leaks[c] if c in leaks else structural_leak(t, c, kids, leak_rule, weights)
        if len(kids) <= fanout_cap:
            families[c] = (kids, lam)
            continue
        if fanout == "error":
            raise ChildFanoutExceeded(f"class {c!r} has {len(kids)} children (cap {fanout_cap})")
        prev = kids[0]
        for i, kid in enumerate(kids[1:], start=1):
            aux = f"{c}#or{i}"
            families[aux] = ((prev, kid), 0.0)
            variables.append(aux)
            prev = aux
        families[c] = ((prev,), lam)

    return Network(
        graph=graph,
        class_nodes=class_nodes,
        variables=tuple(variables),
        families=families,
        class_parents=class_parents,
        models=model_map,
        treewidth_cap=treewidth_cap,
    )
