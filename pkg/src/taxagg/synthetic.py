"""Synthetic taxonomies, gold labels and classifier score sheets.

Scores follow the same bi-normal assumption the graphical aggregator makes:
a classifier's logit score for a class is Normal(mu1, sigma1) when the
instance belongs to the class and Normal(mu0, sigma0) otherwise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .estimation import gold_to_binary
from .network import Binormal, ObservationParams
from .scores import ScoreSheet
from .taxonomy import Taxonomy, build_taxonomy

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    depth: int = 3
    branching: tuple = (3, 4)
    dag_prob: float = 0.0
    n_classifiers: int = 10
    classes_per_classifier: tuple = (8, 12)
    n_instances: int = 500
    mu0: float = -1.0
    mu1: float = 1.0
    sigma0: float = 1.0
    sigma1: float = 1.0
    mu_jitter: float = 0.0
    sigma_floor: float = 1e-3

    def __post_init__(self):
        if isinstance(self.branching, int):
            object.__setattr__(self, "branching", (self.branching, self.branching))
        if isinstance(self.classes_per_classifier, int):
            k = self.classes_per_classifier
            object.__setattr__(self, "classes_per_classifier", (k, k))
        object.__setattr__(self, "branching", tuple(int(b) for b in self.branching))
        object.__setattr__(self, "classes_per_classifier", tuple(int(k) for k in self.classes_per_classifier))
        for name in ("depth", "n_classifiers", "n_instances"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        lo, hi = self.branching
        if lo < 1 or hi < lo:
            raise ValidationError(f"bad branching range {self.branching}")
        lo, hi = self.classes_per_classifier
        if lo < 1 or hi < lo:
            raise ValidationError(f"bad classes_per_classifier range {self.classes_per_classifier}")
        if not 0.0 <= self.dag_prob <= 1.0:
            raise ValidationError("dag_prob must lie in [0, 1]")
        if self.sigma0 <= 0 or self.sigma1 <= 0:
            raise ValidationError("sigmas must be positive")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SyntheticData:
    config: GenConfig
    taxonomy: Taxonomy
    classifier_classes: dict
    true_params: list
    golds: dict = field(default_factory=dict)
    sheets: list = field(default_factory=list)


def _name(i: int, width: int) -> str:
    return f"c{i:0{width}d}"


def gen_taxonomy(cfg: GenConfig, rng: np.random.Generator | None = None) -> Taxonomy:
    """Level-by-level random taxonomy.

    Every node above the last level gets a branching factor drawn from
    ``cfg.branching``.  A child that is not its parent's first child gains,
    with probability ``cfg.dag_prob``, a second parent drawn uniformly from
    the other nodes on its parent's level.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    lo, hi = cfg.branching
    width = max(3, len(str(hi ** (cfg.depth + 1))))
    levels = [[_name(0, width)]]
    counter = 1
    edges = []
    for _ in range(cfg.depth):
        nxt = []
        parents_level = levels[-1]
        for parent in parents_level:
            for k in range(int(rng.integers(lo, hi + 1))):
                child = _name(counter, width)
                counter += 1
                nxt.append(child)
                edges.append((child, parent))
                others = [p for p in parents_level if p != parent]
                if k > 0 and others and rng.random() < cfg.dag_prob:
                    extra = others[int(rng.integers(len(others)))]
                    edges.append((child, extra))
        levels.append(nxt)
    return build_taxonomy(edges, extra_classes=levels[0])


def gen_classifiers(cfg: GenConfig, t: Taxonomy, rng: np.random.Generator) -> tuple[dict, list]:
    """Random class subsets and the true observation parameters of every hook."""
    candidates = sorted(t.classes - t.roots)
    if not candidates:
        candidates = sorted(t.classes)
    lo, hi = cfg.classes_per_classifier
    width = len(str(cfg.n_classifiers - 1))
    subsets = {}
    params = []
    for j in range(cfg.n_classifiers):
        name = f"f{j:0{width}d}"
        k = min(int(rng.integers(lo, hi + 1)), len(candidates))
        chosen = sorted(rng.choice(candidates, size=k, replace=False).tolist())
        subsets[name] = chosen
        for c in chosen:
            d0, d1 = (rng.uniform(-cfg.mu_jitter, cfg.mu_jitter, size=2) if cfg.mu_jitter > 0 else (0.0, 0.0))
            dist = Binormal(
                cfg.mu0 + float(d0),
                max(cfg.sigma0, cfg.sigma_floor),
                cfg.mu1 + float(d1),
                max(cfg.sigma1, cfg.sigma_floor),
            )
            params.append(ObservationParams(name, c, dist))
    return subsets, params


def gen_instances(cfg: GenConfig, t: Taxonomy, params: list, rng: np.random.Generator) -> tuple[dict, list]:
    """Gold leaves (uniform) and probability-space score sheets."""
    for p in params:
        if p.node not in t:
            raise ValidationError(f"classifier class {p.node!r} not in taxonomy")
    leaves = sorted(t.leaves)
    hooks = sorted(params, key=lambda p: p.hook)
    width = len(str(cfg.n_instances - 1))
    golds = {}
    sheets = []
    for i in range(cfg.n_instances):
        iid = f"i{i:0{width}d}"
        gold = leaves[int(rng.integers(len(leaves)))]
        z = gold_to_binary(t, gold)
        entries: dict = {}
        for p in hooks:
            d = p.dist
            x = rng.normal(d.mu1, d.sigma1) if z[p.node] else rng.normal(d.mu0, d.sigma0)
            entries.setdefault(p.classifier_id, {})[p.node] = float(1.0 / (1.0 + np.exp(-x)))
        golds[iid] = gold
        sheets.append(ScoreSheet(iid, entries))
    return golds, sheets


def generate(cfg: GenConfig) -> SyntheticData:
    """Taxonomy, classifiers, and instances from one seeded stream."""
    rng = np.random.default_rng(cfg.seed)
    t = gen_taxonomy(cfg, rng)
    subsets, params = gen_classifiers(cfg, t, rng)
    golds, sheets = gen_instances(cfg, t, params, rng)
    return SyntheticData(cfg, t, subsets, params, golds, sheets)
