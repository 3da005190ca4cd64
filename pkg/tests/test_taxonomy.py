import warnings

import numpy as np
import pytest

from taxagg.errors import CycleDetected, EmptyInput, NoCommonAncestor, PathExplosion, UnknownClass, ValidationError
from taxagg.taxonomy import DuplicateEdgeWarning, Taxonomy, build_taxonomy, taxonomy_from_parents

from conftest import bfs_ancestors, random_taxonomy


class TestBuild:
    def test_dog_has_two_parents(self, animals):
        assert animals.parents("dog") == {"domestic_animal", "canine"}
        assert len(animals) == 19
        assert len(animals.edges) == 19
        assert animals.roots == {"animal"}

    def test_single_edge(self):
        t = build_taxonomy([("a", "b")])
        assert t.roots == {"b"}
        assert t.leaves == {"a"}
        assert t.ancestors("a") == {"b"}

    def test_two_cycle(self):
        with pytest.raises(CycleDetected) as exc:
            build_taxonomy([("a", "b"), ("b", "a")])
        assert set(exc.value.cycle) >= {"a", "b"}

    def test_longer_cycle_and_self_loop(self):
        with pytest.raises(CycleDetected):
            build_taxonomy([("a", "b"), ("b", "c"), ("c", "a"), ("d", "a")])
        with pytest.raises(CycleDetected):
            build_taxonomy([("a", "a")])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            build_taxonomy([])

    def test_duplicate_edge_warns(self):
        with pytest.warns(DuplicateEdgeWarning):
            t = build_taxonomy([("a", "b"), ("a", "b")])
        assert len(t.edges) == 1

    def test_whitespace_id_rejected(self):
        with pytest.raises(ValidationError):
            build_taxonomy([("working dog", "dog")])

    def test_from_parents(self, animals):
        pm = {c: animals.parents(c) for c in animals.classes}
        assert taxonomy_from_parents(pm) == animals

    def test_unknown_class_queries(self, animals):
        for q in (animals.ancestors, animals.descendants, animals.root_paths, animals.parents):
            with pytest.raises(UnknownClass):
                q("unicorn")


class TestClosure:
    def test_doberman_ancestors(self, animals):
        expected = {"pinscher", "watch_dog", "working_dog", "dog", "domestic_animal", "canine", "carnivore", "animal"}
        assert animals.ancestors("doberman") == expected
        assert animals.ancestors("doberman") == bfs_ancestors(animals, "doberman")

    def test_root_and_dog(self, animals):
        assert animals.ancestors("animal") == set()
        assert animals.ancestors("dog") == {"domestic_animal", "canine", "carnivore", "animal"}

    def test_against_bfs_oracle_random(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            t = random_taxonomy(rng, 25)
            for c in t.classes:
                assert t.ancestors(c) == bfs_ancestors(t, c)

    def test_duality(self, animals):
        for a in animals.classes:
            for b in animals.classes:
                assert (a in animals.ancestors(b)) == (b in animals.descendants(a))

    def test_depth_is_longest_root_path(self, animals):
        # dog: animal -> carnivore -> canine -> dog is longer than via domestic_animal
        assert animals.depth("dog") == 3
        assert animals.depth("animal") == 0
        assert animals.depth("doberman") == 7

    def test_topological_order(self, animals):
        pos = {c: i for i, c in enumerate(animals.topological_order())}
        for child, parent in animals.edges:
            assert pos[parent] < pos[child]


class TestRootPaths:
    def test_doberman_two_paths(self, animals):
        paths = animals.root_paths("doberman")
        assert len(paths) == 2
        assert paths == sorted(paths)
        assert [p[1] for p in paths] == ["carnivore", "domestic_animal"]
        assert all(p[0] == "animal" and p[-1] == "doberman" for p in paths)
        assert all(animals.is_label_path(p) for p in paths)

    def test_root(self, animals):
        assert animals.root_paths("animal") == [["animal"]]

    def test_tree_has_single_paths(self):
        t = build_taxonomy([("b", "a"), ("c", "a"), ("d", "b"), ("e", "b")])
        assert all(len(t.root_paths(c)) == 1 for c in t.classes)

    def test_union_is_ancestor_closure(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            t = random_taxonomy(rng, 15)
            for c in t.classes:
                nodes = set().union(*map(set, t.root_paths(c, cap=10_000)))
                assert nodes == {c} | t.ancestors(c)

    def test_explosion(self):
        # a ladder of diamonds doubles the path count at every rung
        edges = []
        prev = "r"
        for i in range(8):
            edges += [(f"l{i}", prev), (f"m{i}", prev), (f"j{i}", f"l{i}"), (f"j{i}", f"m{i}")]
            prev = f"j{i}"
        t = build_taxonomy(edges)
        assert len(t.root_paths("j5")) == 64
        with pytest.raises(PathExplosion):
            t.root_paths("j6")
        assert len(t.root_paths("j7", cap=1000)) == 256


class TestLCA:
    def test_animals(self, animals):
        assert animals.lca("doberman", "rottweiler") == "working_dog"
        assert animals.lca("fox", "cat") == "carnivore"
        assert animals.lca("dog", "dog") == "dog"
        assert animals.lca("doberman", "dog") == "dog"

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        t = random_taxonomy(rng, 30)
        cs = sorted(t.classes)
        for a in cs:
            for b in cs:
                try:
                    x = t.lca(a, b)
                except NoCommonAncestor:
                    with pytest.raises(NoCommonAncestor):
                        t.lca(b, a)
                    continue
                assert x == t.lca(b, a)
                assert x in ({a} | t.ancestors(a)) & ({b} | t.ancestors(b))

    def test_multi_root(self):
        t = build_taxonomy([("a", "r1"), ("b", "r2")])
        with pytest.raises(NoCommonAncestor):
            t.lca("a", "b")

    def test_lexicographic_tie_break(self):
        # x and y share two equally deep common ancestors p and q
        t = build_taxonomy([("p", "r"), ("q", "r"), ("x", "p"), ("x", "q"), ("y", "p"), ("y", "q")])
        assert t.lca("x", "y") == "p"


class TestInducedSubgraph:
    def test_worked_example(self, animals):
        sub = animals.induced_subgraph({"dog", "fox", "cat", "doberman", "rottweiler"})
        assert len(sub) == 14
        assert not {"hunting_dog", "hound", "bluetick", "domestic_cat", "wild_cat"} & sub.classes
        assert sub.parents("dog") == {"domestic_animal", "canine"}

    def test_root_seed(self, animals):
        sub = animals.induced_subgraph({"animal"})
        assert sub.classes == {"animal"} and not sub.edges

    def test_all_leaves(self, animals):
        assert animals.induced_subgraph(animals.leaves) == animals

    def test_idempotent(self, animals):
        seed = {"fox", "pinscher"}
        once = animals.induced_subgraph(seed)
        assert once.induced_subgraph(seed) == once

    def test_unknown_seed(self, animals):
        with pytest.raises(UnknownClass):
            animals.induced_subgraph({"unicorn"})


def test_equality_and_hash(animals):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        other = Taxonomy(animals.classes, animals.edges)
    assert other == animals and hash(other) == hash(animals)
