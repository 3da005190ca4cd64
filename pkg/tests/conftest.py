"""Shared fixtures and independent oracles for the test suite."""

from collections import deque

import numpy as np
import pytest
from hypothesis import settings

from taxagg.datasets import two_classifier_sheet, wordnet_animals
from taxagg.network import build_network
from taxagg.taxonomy import build_taxonomy

# first calls pay one-off import / JIT costs, so wall-clock deadlines are meaningless here
settings.register_profile("repo", deadline=None)
settings.load_profile("repo")


@pytest.fixture
def animals():
    return wordnet_animals()


@pytest.fixture
def example_sheet():
    return two_classifier_sheet()


# -- oracles -------------------------------------------------------------------


def bfs_ancestors(t, c):
    """Ancestors of ``c`` by plain breadth-first search over parent links."""
    seen = set()
    todo = deque(t.parents(c))
    while todo:
        a = todo.popleft()
        if a not in seen:
            seen.add(a)
            todo.extend(t.parents(a))
    return seen


def enumeration_oracle(net, l0, l1):
    """Marginals and log-evidence by enumerating every class configuration.

    Written directly from the model definition: a class with taxonomy
    children is on for sure when any child is on and with its leak
    otherwise; a childless class is on with its prior.  Evidence enters
    as a per-node log-likelihood.  Everything is vectorised over the
    2**K configurations with numpy, no shared code with the kernels.
    """
    nodes = list(net.class_nodes)
    k = len(nodes)
    idx = {c: i for i, c in enumerate(nodes)}
    z = ((np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)
    logp = np.zeros(1 << k)
    with np.errstate(divide="ignore"):
        for c in nodes:
            i = idx[c]
            kids = [idx[x] for x in net.class_parents[c]]
            lam = net.leak(c)
            any_kid = z[:, kids].any(axis=1) if kids else np.zeros(1 << k, bool)
            p_on = np.where(any_kid, 1.0, lam)
            logp += np.log(np.where(z[:, i], p_on, 1.0 - p_on))
        logp += np.where(z, l1[None, :], l0[None, :]).sum(axis=1)
    m = logp.max()
    w = np.exp(logp - m)
    total = w.sum()
    marg = (w[:, None] * z).sum(axis=0) / total
    return marg, float(np.log(total) + m)


# -- random structures -------------------------------------------------------------


def random_taxonomy(rng, n, extra_parent_prob=0.3):
    """Random DAG over ``n`` classes named ``n00..``; node i picks parents among 0..i-1."""
    names = [f"n{i:02d}" for i in range(n)]
    edges = []
    roots = []
    for i in range(1, n):
        if rng.random() < 0.15:
            roots.append(names[i])
            continue
        ps = {int(rng.integers(i))}
        while rng.random() < extra_parent_prob and len(ps) < i:
            ps.add(int(rng.integers(i)))
        edges.extend((names[i], names[p]) for p in sorted(ps))
    return build_taxonomy(edges, extra_classes=[names[0], *roots])


def random_network(rng, max_nodes=12, fanout_cap=20):
    n = int(rng.integers(1, max_nodes + 1))
    t = random_taxonomy(rng, n)
    leaks = {c: float(rng.uniform(0.01, 0.99)) for c in t.classes if t.children(c)}
    priors = {c: float(rng.uniform(0.01, 0.99)) for c in t.classes if not t.children(c)}
    net = build_network(t, classes=t.classes, leaks=leaks, priors=priors, fanout_cap=fanout_cap)
    return net


def random_evidence(rng, net, rows=1, scale=3.0):
    k = len(net.class_nodes)
    mask = rng.random((rows, k)) < 0.6
    l0 = np.where(mask, rng.normal(0, scale, (rows, k)), 0.0)
    l1 = np.where(mask, rng.normal(0, scale, (rows, k)), 0.0)
    return l0, l1
