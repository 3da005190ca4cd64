"""Class taxonomies: immutable IS-A DAGs with precomputed closures."""

from __future__ import annotations

import re
import warnings
import heapq
from typing import Iterable, Mapping

from .errors import (
    CycleDetected,
    EmptyInput,
    NoCommonAncestor,
    PathExplosion,
    UnknownClass,
    ValidationError,
)

_ID_RE = re.compile(r"^\S+$")

DEFAULT_PATH_CAP = 64


class DuplicateEdgeWarning(UserWarning):
    pass


def check_class_id(c) -> str:
    if not isinstance(c, str) or not _ID_RE.match(c):
        raise ValidationError(f"malformed class id {c!r}: must be a non-empty token without whitespace")
    return c


class Taxonomy:
    """Immutable class taxonomy.

    Edges are ``(child, parent)`` pairs meaning *child IS-A parent*.  All
    closures are computed once at construction; every query afterwards is a
    dictionary lookup, so instances can be shared freely between threads.
    """

    __slots__ = (
        "_classes", "_edges", "_parents", "_children", "_ancestors",
        "_descendants", "_roots", "_leaves", "_depth", "_topo",
    )

    def __init__(self, classes: Iterable[str], edges: Iterable[tuple[str, str]]):
        classes = {check_class_id(c) for c in classes}
        edges = set(edges)
        parents: dict[str, set] = {c: set() for c in classes}
        children: dict[str, set] = {c: set() for c in classes}
        for child, parent in edges:
            if child not in parents:
                raise UnknownClass(child)
            if parent not in parents:
                raise UnknownClass(parent)
            if child == parent:
                raise CycleDetected([child, child])
            parents[child].add(parent)
            children[parent].add(child)

        topo = _topological_order(classes, parents, children)

        ancestors: dict[str, frozenset] = {}
        depth: dict[str, int] = {}
        for c in topo:  # roots first
            acc = set()
            d = 0
            for p in parents[c]:
                acc.add(p)
                acc |= ancestors[p]
                d = max(d, depth[p] + 1)
            ancestors[c] = frozenset(acc)
            depth[c] = d
        descendants: dict[str, set] = {c: set() for c in classes}
        for c, anc in ancestors.items():
            for a in anc:
                descendants[a].add(c)

        self._classes = frozenset(classes)
        self._edges = frozenset(edges)
        self._parents = {c: frozenset(v) for c, v in parents.items()}
        self._children = {c: frozenset(v) for c, v in children.items()}
        self._ancestors = ancestors
        self._descendants = {c: frozenset(v) for c, v in descendants.items()}
        self._roots = frozenset(c for c in classes if not parents[c])
        self._leaves = frozenset(c for c in classes if not children[c])
        self._depth = depth
        self._topo = tuple(topo)

    # -- basic accessors -------------------------------------------------

    @property
    def classes(self) -> frozenset:
        return self._classes

    @property
    def edges(self) -> frozenset:
        return self._edges

    @property
    def roots(self) -> frozenset:
        return self._roots

    @property
    def leaves(self) -> frozenset:
        return self._leaves

    def __len__(self):
        return len(self._classes)

    def __contains__(self, c):
        return c in self._classes

    def __eq__(self, other):
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return self._classes == other._classes and self._edges == other._edges

    def __hash__(self):
        return hash((self._classes, self._edges))

    def __repr__(self):
        return f"Taxonomy({len(self._classes)} classes, {len(self._edges)} edges)"

    def _check(self, c):
        if c not in self._classes:
            raise UnknownClass(c)

    def parents(self, c: str) -> frozenset:
        self._check(c)
        return self._parents[c]

    def children(self, c: str) -> frozenset:
        self._check(c)
        return self._children[c]

    def ancestors(self, c: str) -> frozenset:
        self._check(c)
        return self._ancestors[c]

    def descendants(self, c: str) -> frozenset:
        self._check(c)
        return self._descendants[c]

    def depth(self, c: str) -> int:
        """Length of the longest root-to-``c`` path."""
        self._check(c)
        return self._depth[c]

    def topological_order(self) -> tuple:
        """Classes ordered parents-before-children, ties broken lexicographically."""
        return self._topo

    def leaf_descendants(self, c: str) -> frozenset:
        self._check(c)
        if c in self._leaves:
            return frozenset([c])
        return frozenset(d for d in self._descendants[c] if d in self._leaves)

    def sorted_edges(self) -> list:
        return sorted(self._edges)

    # -- path queries ----------------------------------------------------

    def root_paths(self, c: str, cap: int = DEFAULT_PATH_CAP) -> list:
        """All simple root-to-``c`` paths, sorted lexicographically by node sequence."""
        self._check(c)
        out = []
        # each stack entry is a partial path written terminal-first
        stack = [(c,)]
        while stack:
            partial = stack.pop()
            head = partial[-1]
            ps = self._parents[head]
            if not ps:
                out.append(list(reversed(partial)))
                if len(out) > cap:
                    raise PathExplosion(f"more than {cap} root paths reach {c!r}")
                continue
            for p in ps:
                stack.append(partial + (p,))
        out.sort()
        return out

    def shortest_upward_path(self, c: str, target: str) -> list:
        """Shortest ``c -> ... -> target`` path following parent edges.

        Ties between equal-length paths go to the lexicographically smallest
        node sequence.
        """
        self._check(c)
        self._check(target)
        if c == target:
            return [c]
        if target not in self._ancestors[c]:
            raise NoCommonAncestor(f"{target!r} is not an ancestor of {c!r}")
        # BFS by levels, keeping the lexicographically smallest path per node
        best = {c: (c,)}
        frontier = [c]
        while frontier:
            nxt: dict[str, tuple] = {}
            for node in frontier:
                for p in self._parents[node]:
                    if p in best:
                        continue
                    if p != target and target not in self._ancestors[p]:
                        continue
                    cand = best[node] + (p,)
                    if p not in nxt or cand < nxt[p]:
                        nxt[p] = cand
            best.update(nxt)
            if target in nxt:
                return list(nxt[target])
            frontier = sorted(nxt)
        raise AssertionError("unreachable: target is an ancestor")

    def lca(self, a: str, b: str) -> str:
        """Deepest common ancestor-or-self of ``a`` and ``b``.

        Depth is the longest path from any root; ties go to the
        lexicographically smallest class id.
        """
        self._check(a)
        self._check(b)
        if a == b:
            return a
        common = (self._ancestors[a] | {a}) & (self._ancestors[b] | {b})
        if not common:
            raise NoCommonAncestor(f"{a!r} and {b!r} share no ancestor")
        return min(common, key=lambda c: (-self._depth[c], c))

    def induced_subgraph(self, seed: Iterable[str]) -> "Taxonomy":
        """Subgraph over ``seed`` plus every ancestor of a seed class."""
        keep = set()
        for c in seed:
            self._check(c)
            keep.add(c)
            keep |= self._ancestors[c]
        edges = [(ch, p) for ch, p in self._edges if ch in keep and p in keep]
        return Taxonomy(keep, edges)

    def is_label_path(self, path) -> bool:
        if not path or path[0] not in self._roots:
            return False
        return all(path[i] in self._parents.get(path[i + 1], ()) for i in range(len(path) - 1))


def _topological_order(classes, parents, children) -> list:
    indeg = {c: len(parents[c]) for c in classes}
    heap = [c for c in classes if indeg[c] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        c = heapq.heappop(heap)
        order.append(c)
        for ch in children[c]:
            indeg[ch] -= 1
            if indeg[ch] == 0:
                heapq.heappush(heap, ch)
    if len(order) != len(classes):
        remaining = {c for c in classes if indeg[c] > 0}
        raise CycleDetected(_find_cycle(remaining, parents))
    return order


def _find_cycle(nodes, parents) -> list:
    # walk parent edges inside the residual set until a node repeats
    start = min(nodes)
    seen = {}
    path = []
    node = start
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = min(p for p in parents[node] if p in nodes)
    return path[seen[node]:] + [node]


def build_taxonomy(edge_list: Iterable[tuple[str, str]], extra_classes: Iterable[str] = ()) -> Taxonomy:
    """Validate an edge list and build a :class:`Taxonomy`.

    Duplicate edges are dropped with a :class:`DuplicateEdgeWarning`.
    ``extra_classes`` allows isolated single-node taxonomies.
    """
    edges = []
    seen = set()
    dupes = 0
    for pair in edge_list:
        child, parent = pair
        check_class_id(child)
        check_class_id(parent)
        if (child, parent) in seen:
            dupes += 1
            continue
        seen.add((child, parent))
        edges.append((child, parent))
    classes = set(extra_classes)
    for child, parent in edges:
        classes.add(child)
        classes.add(parent)
    if not classes:
        raise EmptyInput("taxonomy edge list is empty")
    if dupes:
        warnings.warn(f"dropped {dupes} duplicate edge(s)", DuplicateEdgeWarning, stacklevel=2)
    return Taxonomy(classes, edges)


def taxonomy_from_parents(parent_map: Mapping[str, Iterable[str]]) -> Taxonomy:
    edges = [(c, p) for c, ps in parent_map.items() for p in ps]
    return build_taxonomy(edges, extra_classes=parent_map.keys())

