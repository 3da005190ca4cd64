import math

import numpy as np
import pytest

from taxagg.errors import InvalidScore, UnknownClass, ValidationError
from taxagg.heuristic import PropagatedScores, aggregate_heuristic, propagate
from taxagg.paths import (
    EntropyPolicy,
    EntryLevelPolicy,
    MarginalPolicy,
    decide_path,
    entry_level_backoff,
    normalized_entropy,
    score_entropy,
    walk_entropy,
    walk_marginal,
)
from taxagg.scores import ScoreSheet
from taxagg.taxonomy import build_taxonomy

EXAMPLE_SCORES = {
    "dog": 1.7, "canine": 1.9, "carnivore": 2.0, "animal": 2.0,
    "working_dog": 0.7, "watch_dog": 0.4, "pinscher": 0.4, "doberman": 0.4,
    "shepherd_dog": 0.3, "rottweiler": 0.3, "domestic_animal": 1.7,
    "fox": 0.2, "feline": 0.1, "cat": 0.1,
}
EXAMPLE_PATH = ["animal", "carnivore", "canine", "dog", "working_dog"]


class TestPropagate:
    def test_worked_example_scores(self, animals, example_sheet):
        prop = propagate(animals, example_sheet)
        assert set(prop.p) == set(EXAMPLE_SCORES)
        for c, v in EXAMPLE_SCORES.items():
            assert prop.p[c] == pytest.approx(v, abs=1e-9), c

    def test_single_class(self, animals):
        prop = propagate(animals, ScoreSheet("i", {"f": {"fox": 1.0}}))
        assert prop.p == {"fox": 1.0, "canine": 1.0, "carnivore": 1.0, "animal": 1.0}

    def test_dag_counts_ancestor_once(self, animals):
        # dog reaches carnivore along one route and animal along two; each gets the score once
        prop = propagate(animals, ScoreSheet("i", {"f": {"dog": 0.5}}))
        assert prop.p["animal"] == 0.5

    def test_bad_inputs(self, animals):
        with pytest.raises(UnknownClass):
            propagate(animals, ScoreSheet("i", {"f": {"unicorn": 0.5}}))
        with pytest.raises(InvalidScore):
            propagate(animals, ScoreSheet("i", {"f": {"dog": 1.3}}))

    def test_root_carries_total_mass(self, animals):
        rng = np.random.default_rng(0)
        classes = sorted(animals.classes)
        for _ in range(50):
            picks = rng.choice(classes, size=4, replace=False)
            sheet = ScoreSheet("i", {"f": {c: float(rng.random()) for c in picks}})
            prop = propagate(animals, sheet)
            assert prop.p["animal"] == pytest.approx(sum(sheet.entries["f"].values()), abs=1e-12)


class TestEntropy:
    def test_values(self):
        assert normalized_entropy([1, 1]) == pytest.approx(1.0)
        assert normalized_entropy([1, 0]) == 0.0
        # hand value: p = (17/37, 20/37), H / ln 2
        p = (17 / 37, 20 / 37)
        expected = -sum(x * math.log(x) for x in p) / math.log(2)
        assert expected == pytest.approx(0.995253, abs=5e-7)
        assert normalized_entropy([1.7, 2.0]) == pytest.approx(expected, abs=1e-12)
        assert normalized_entropy([0.4, 0.3]) == pytest.approx(0.98523, abs=5e-6)
        assert normalized_entropy([3.0]) == 0.0

    def test_score_measure(self):
        v = [1.7, 2.0]
        expected = -(1.7 * math.log(1.7) + 2.0 * math.log(2.0)) / 2
        assert score_entropy(v) == pytest.approx(expected, abs=1e-12)


class TestWalkEntropy:
    def test_worked_example_path_score_measure(self, animals, example_sheet):
        prop = propagate(animals, example_sheet)
        for theta in (0.25, 0.30, 0.36):
            assert walk_entropy(prop, theta, measure="score") == EXAMPLE_PATH
        assert aggregate_heuristic(animals, example_sheet, 0.3, "score") == EXAMPLE_PATH

    def test_normalized_measure_cannot_stop_at_working_dog(self, animals, example_sheet):
        prop = propagate(animals, example_sheet)
        seen = {tuple(walk_entropy(prop, th)) for th in np.linspace(0, 1, 2001)}
        assert tuple(EXAMPLE_PATH) not in seen

    def test_theta_zero_stops_at_branching_start(self, animals, example_sheet):
        prop = propagate(animals, example_sheet)
        assert walk_entropy(prop, 0.0) == ["animal"]

    def test_strict_inequality(self):
        t = build_taxonomy([("a", "r"), ("b", "r")])
        prop = PropagatedScores(t, {"r": 1.0, "a": 1.0, "b": 0.0})
        assert walk_entropy(prop, 0.0) == ["r", "a"]

    def test_theta_one_reaches_leaf(self, animals, example_sheet):
        prop = propagate(animals, example_sheet)
        path = walk_entropy(prop, 1.0)
        assert path[-1] in prop.graph.leaves
        assert prop.graph.is_label_path(path)

    def test_bad_theta(self):
        with pytest.raises(ValidationError):
            EntropyPolicy(1.5)
        with pytest.raises(ValidationError):
            EntropyPolicy(0.5, measure="gini")


class TestWalkMarginal:
    def test_chain(self, animals):
        chain = animals.root_paths("doberman")[0]
        m = {c: (1.0 if c in chain else 0.0) for c in animals.classes}
        assert walk_marginal(m, animals, 0.5) == chain

    def test_tau_above_one(self, animals):
        m = {c: 1.0 for c in animals.classes}
        assert walk_marginal(m, animals, 1.01) == ["animal"]

    def test_tie_break(self):
        t = build_taxonomy([("a", "r"), ("b", "r")])
        assert walk_marginal({"r": 1, "a": 0.6, "b": 0.6}, t, 0.5) == ["r", "a"]

    def test_multi_root_start(self):
        t = build_taxonomy([("a", "r1"), ("b", "r2")])
        assert walk_marginal({"r1": 0.2, "r2": 0.9, "a": 0.1, "b": 0.8}, t, 0.5) == ["r2", "b"]


class TestEntryLevel:
    def test_backoff(self):
        assert entry_level_backoff(EXAMPLE_PATH, {"dog"}) == (EXAMPLE_PATH[:4], False)
        assert entry_level_backoff(EXAMPLE_PATH, {"working_dog"}) == (EXAMPLE_PATH, False)
        assert entry_level_backoff(EXAMPLE_PATH, {"cat"}) == (EXAMPLE_PATH, True)

    def test_policy(self, animals, example_sheet):
        prop = propagate(animals, example_sheet)
        pol = EntryLevelPolicy(EntropyPolicy(0.3, "score"), {"dog", "fox", "cat"})
        assert decide_path(pol, prop.graph, prop.p) == (EXAMPLE_PATH[:4], False)

    def test_marginal_policy_via_decide(self, animals):
        m = {c: 1.0 for c in animals.classes}
        assert decide_path(MarginalPolicy(1.01), animals, m) == (["animal"], False)
