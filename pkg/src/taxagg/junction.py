"""Exact marginals: junction-tree message passing and a brute-force oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import TooLarge, TreewidthExceeded, UnknownClass, ValidationError
from .network import EvidenceFactor, Network

BRUTE_FORCE_MAX_NODES = 20


@dataclass(frozen=True)
class PosteriorReport:
    instance_id: str
    marginal: Mapping[str, float]
    log_evidence: float


# -- graph compilation -------------------------------------------------------


def moralize(families: Mapping[str, tuple], variables: Sequence[str]) -> dict:
    """Undirected moral graph: each family (node plus BN parents) becomes a clique."""
    adj = {v: set() for v in variables}
    for v in variables:
        fam = (v,) + tuple(families[v][0])
        for i, a in enumerate(fam):
            for b in fam[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
    return adj


def triangulate_min_fill(adj: Mapping[str, set]) -> tuple[list, list]:
    """Greedy min-fill elimination; ties broken by variable name.

    Returns ``(elimination_order, cliques)`` where cliques are the maximal
    elimination cliques in the order they were created.
    """
    g = {v: set(ns) for v, ns in adj.items()}
    order = []
    raw = []
    while g:
        best = None
        for v in sorted(g):
            ns = g[v]
            fill = 0
            nl = list(ns)
            for i, a in enumerate(nl):
                ga = g[a]
                for b in nl[i + 1:]:
                    if b not in ga:
                        fill += 1
            if best is None or fill < best[0]:
                best = (fill, v)
                if fill == 0:
                    break
        v = best[1]
        ns = g.pop(v)
        for a in ns:
            g[a].discard(v)
            g[a] |= ns - {a}
        order.append(v)
        raw.append(frozenset(ns | {v}))
    cliques = []
    for c in raw:
        if any(c < other for other in raw) or c in cliques:
            continue
        cliques.append(c)
    return order, cliques


def _spanning_tree(cliques: list) -> list:
    """Maximum-weight spanning tree over separator sizes (Kruskal).

    Zero-weight pairs are admitted too, so disconnected components get
    joined by empty separators and the result is always a single tree.
    """
    n = len(cliques)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            pairs.append((-len(cliques[i] & cliques[j]), i, j))
    pairs.sort()
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
            if len(edges) == n - 1:
                break
    return edges


@dataclass(frozen=True)
class JunctionTree:
    variables: tuple
    cliques: tuple            # tuple of tuples of variable names, in bit order
    induced_width: int
    base_pot: np.ndarray
    pot_off: np.ndarray
    pot_len: np.ndarray
    e_child: np.ndarray
    e_parent: np.ndarray
    cmap_off: np.ndarray
    pmap_off: np.ndarray
    sep_off: np.ndarray
    sep_len: np.ndarray
    maps: np.ndarray
    slot_of: Mapping[str, int]   # class node -> evidence / read-out slot
    slot_clique: np.ndarray
    slot_bit: np.ndarray

    def run(self, log_l0: np.ndarray, log_l1: np.ndarray):
        """Calibrate for a batch of evidence given as ``(n, slots)`` log-likelihoods.

        Returns ``(marginals (n, slots), log_evidence (n,))``.
        """
        lik0, lik1, offset = _scale(log_l0, log_l1)
        marg, log_z = kernels.calibrate_batch(
            self.base_pot, self.pot_off, self.pot_len,
            self.e_child, self.e_parent, self.cmap_off, self.pmap_off,
            self.sep_off, self.sep_len, self.maps,
            self.slot_clique, self.slot_bit, self.slot_clique, self.slot_bit,
            lik0, lik1,
        )
        return marg, log_z + offset


def _scale(log_l0, log_l1):
    log_l0 = np.asarray(log_l0, dtype=float)
    log_l1 = np.asarray(log_l1, dtype=float)
    m = np.maximum(log_l0, log_l1)
    if np.any(~np.isfinite(m)):
        raise ValidationError("evidence with zero likelihood under both states")
    return np.exp(log_l0 - m), np.exp(log_l1 - m), m.sum(axis=-1)


def _local_configs(size: int) -> np.ndarray:
    return np.arange(1 << size, dtype=np.int64)


def _project(clique_vars: tuple, sub_vars: Iterable[str]) -> np.ndarray:
    """Index into the ``sub_vars`` table for every configuration of ``clique_vars``."""
    pos = {v: b for b, v in enumerate(clique_vars)}
    cfg = _local_configs(len(clique_vars))
    out = np.zeros_like(cfg)
    for k, v in enumerate(sub_vars):
        out |= ((cfg >> pos[v]) & 1) << k
    return out


def compile_junction_tree(net: Network) -> JunctionTree:
    variables = net.variables
    adj = moralize(net.families, variables)
    _, clique_sets = triangulate_min_fill(adj)
    width = max(len(c) for c in clique_sets) - 1
    if width > net.treewidth_cap:
        raise TreewidthExceeded(f"induced width {width} exceeds cap {net.treewidth_cap}")
    rank = {v: i for i, v in enumerate(variables)}
    cliques = tuple(tuple(sorted(c, key=rank.__getitem__)) for c in clique_sets)
    sizes = np.array([1 << len(c) for c in cliques], dtype=np.int64)
    pot_off = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    base = np.ones(int(sizes.sum()))

    # each family goes to the first clique that contains it
    home = {}
    for v in variables:
        fam = {v, *net.families[v][0]}
        q = next(i for i, c in enumerate(clique_sets) if fam <= c)
        parents, leak = net.families[v]
        cfg_v = (_local_configs(len(cliques[q])) >> cliques[q].index(v)) & 1
        any_on = np.zeros(len(cfg_v), dtype=bool)
        for p in parents:
            any_on |= ((_local_configs(len(cliques[q])) >> cliques[q].index(p)) & 1).astype(bool)
        table = np.where(any_on, cfg_v.astype(float), np.where(cfg_v == 1, leak, 1.0 - leak))
        sl = slice(pot_off[q], pot_off[q] + sizes[q])
        base[sl] *= table
        home[v] = q

    # tree edges oriented towards clique 0, listed leaves-first
    tree = _spanning_tree(list(clique_sets))
    nbrs = {i: [] for i in range(len(cliques))}
    for i, j in tree:
        nbrs[i].append(j)
        nbrs[j].append(i)
    bfs = [0]
    up = {0: -1}
    for q in bfs:
        for r in sorted(nbrs[q]):
            if r not in up:
                up[r] = q
                bfs.append(r)
    collect = [(q, up[q]) for q in reversed(bfs) if up[q] >= 0]

    maps = []
    cmap_off, pmap_off, sep_off, sep_len = [], [], [], []
    cursor = 0
    sep_cursor = 0
    for c, p in collect:
        sep = [v for v in cliques[c] if v in clique_sets[p]]
        cm = _project(cliques[c], sep)
        pm = _project(cliques[p], sep)
        cmap_off.append(cursor)
        maps.append(cm)
        cursor += len(cm)
        pmap_off.append(cursor)
        maps.append(pm)
        cursor += len(pm)
        sep_off.append(sep_cursor)
        sep_len.append(1 << len(sep))
        sep_cursor += 1 << len(sep)

    slot_of = {c: i for i, c in enumerate(net.class_nodes)}
    slot_clique = np.array([home[c] for c in net.class_nodes], dtype=np.int64)
    slot_bit = np.array([cliques[home[c]].index(c) for c in net.class_nodes], dtype=np.int64)
    i64 = lambda xs: np.asarray(xs, dtype=np.int64)
    return JunctionTree(
        variables=variables,
        cliques=cliques,
        induced_width=width,
        base_pot=base,
        pot_off=pot_off,
        pot_len=sizes,
        e_child=i64([c for c, _ in collect]),
        e_parent=i64([p for _, p in collect]),
        cmap_off=i64(cmap_off),
        pmap_off=i64(pmap_off),
        sep_off=i64(sep_off),
        sep_len=i64(sep_len),
        maps=np.concatenate(maps).astype(np.int64) if maps else np.zeros(0, dtype=np.int64),
        slot_of=slot_of,
        slot_clique=slot_clique,
        slot_bit=slot_bit,
    )


# -- inference ---------------------------------------------------------------


def evidence_arrays(net: Network, evidence: Iterable[EvidenceFactor]) -> tuple[np.ndarray, np.ndarray]:
    """Combine evidence factors into per-class-node log-likelihood vectors.

    Factors on the same node multiply (their logs add), matching the
    conditional independence of classifiers given the true label.
    """
    k = len(net.class_nodes)
    l0 = np.zeros(k)
    l1 = np.zeros(k)
    slot = {c: i for i, c in enumerate(net.class_nodes)}
    for ev in evidence:
        i = slot.get(ev.node)
        if i is None:
            raise UnknownClass(ev.node)
        l0[i] += ev.log_l0
        l1[i] += ev.log_l1
    return l0, l1


def infer_marginals(net: Network, evidence: Iterable[EvidenceFactor], instance_id: str = "") -> PosteriorReport:
    l0, l1 = evidence_arrays(net, evidence)
    marg, log_z = net.junction_tree.run(l0[None, :], l1[None, :])
    return _report(net, instance_id, marg[0], float(log_z[0]))


def infer_batch(net: Network, log_l0: np.ndarray, log_l1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Marginals for many instances at once; rows align with ``net.class_nodes``."""
    marg, log_z = net.junction_tree.run(log_l0, log_l1)
    if np.any(~np.isfinite(log_z)):
        bad = int(np.flatnonzero(~np.isfinite(log_z))[0])
        raise ValidationError(f"row {bad}: evidence has zero probability under the network")
    return marg, log_z


def _report(net, instance_id, marg, log_z) -> PosteriorReport:
    if not math.isfinite(log_z):
        raise ValidationError(f"instance {instance_id!r}: evidence has zero probability under the network")
    marginal = {c: min(1.0, max(0.0, float(m))) for c, m in zip(net.class_nodes, marg)}
    return PosteriorReport(instance_id, marginal, log_z)


def brute_force_marginals(net: Network, evidence: Iterable[EvidenceFactor], instance_id: str = "") -> PosteriorReport:
    """Exact marginals by summing over every configuration of the class nodes.

    Works on the class nodes directly (the OR over all BN parents is
    evaluated lazily), so it is independent of any fanout decomposition
    and of the junction-tree machinery.
    """
    nodes = net.class_nodes
    if len(nodes) > BRUTE_FORCE_MAX_NODES:
        raise TooLarge(f"{len(nodes)} class nodes; brute force supports at most {BRUTE_FORCE_MAX_NODES}")
    idx = {c: i for i, c in enumerate(nodes)}
    par_ptr = [0]
    par_idx = []
    for c in nodes:
        par_idx.extend(idx[p] for p in net.class_parents[c])
        par_ptr.append(len(par_idx))
    leak = np.array([net.leak(c) for c in nodes])
    l0, l1 = evidence_arrays(net, evidence)
    lik0, lik1, offset = _scale(l0, l1)
    acc, total = kernels.enumerate_configs(
        np.asarray(par_ptr, dtype=np.int64), np.asarray(par_idx, dtype=np.int64), leak, lik0, lik1
    )
    if total <= 0.0:
        return _report(net, instance_id, np.full(len(nodes), np.nan), -math.inf)
    return _report(net, instance_id, acc / total, math.log(total) + float(offset))
