import math

import numpy as np
import pytest

from taxagg.errors import EmptyInput, ValidationError
from taxagg.estimation import (
    EM_SLACK,
    collect_hooks,
    default_init,
    em_fit,
    fit_binormal,
    fit_discrete,
    fit_supervised,
    gold_matrix,
    gold_to_binary,
    m_step,
)
from taxagg.network import SIGMA_FLOOR, Discrete
from taxagg.scores import ScoreSheet
from taxagg.synthetic import GenConfig, generate


class TestGoldToBinary:
    def test_doberman(self, animals):
        z = gold_to_binary(animals, "doberman")
        on = {c for c, v in z.items() if v}
        assert on == {"doberman"} | animals.ancestors("doberman")
        assert len(on) == 9
        assert z["rottweiler"] == z["cat"] == z["fox"] == 0

    def test_root_and_dag(self, animals):
        assert {c for c, v in gold_to_binary(animals, "animal").items() if v} == {"animal"}
        z = gold_to_binary(animals, "dog")
        assert z["domestic_animal"] == z["canine"] == 1

    def test_multi_label_union(self, animals):
        z = gold_to_binary(animals, ["fox", "cat"])
        assert z["fox"] == z["cat"] == z["feline"] == z["canine"] == 1
        assert z["dog"] == 0


class TestFitBinormal:
    def test_zero_variance_hits_floor(self):
        d, flagged = fit_binormal([(0, 0), (0, 0), (2, 1), (2, 1)])
        assert (d.mu0, d.sigma0, d.mu1, d.sigma1) == (0.0, SIGMA_FLOOR, 2.0, SIGMA_FLOOR)
        assert not flagged

    def test_hand_moments(self):
        d, _ = fit_binormal([(-1, 0), (1, 0), (5, 1), (7, 1), (3, 1)])
        assert (d.mu0, d.sigma0) == (0.0, 1.0)
        assert d.mu1 == pytest.approx(5.0, abs=1e-15)
        assert d.sigma1 == pytest.approx(math.sqrt(8 / 3), abs=1e-15)

    def test_one_sided_fallback_is_flagged(self):
        d, flagged = fit_binormal([(-1, 0), (1, 0)])
        assert flagged
        assert (d.mu0, d.sigma0) == (0.0, 1.0)
        assert d.mu1 == 1.0  # pooled mean shifted up by one

    def test_no_signal(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=50)
        d, _ = fit_binormal([(v, 0) for v in y] + [(v, 1) for v in y])
        assert d.mu0 == d.mu1 and d.sigma0 == d.sigma1

    def test_order_invariant(self):
        rng = np.random.default_rng(1)
        pairs = [(float(v), int(z)) for v, z in zip(rng.normal(size=200), rng.integers(0, 2, 200))]
        a, _ = fit_binormal(pairs)
        b, _ = fit_binormal(pairs[::-1])
        assert a == b

    def test_errors(self):
        with pytest.raises(EmptyInput):
            fit_binormal([])
        with pytest.raises(ValidationError):
            fit_binormal([(0.0, 2)])


class TestFitDiscrete:
    def test_perfect(self):
        d = fit_discrete([(1, 1)] * 5 + [(0, 0)] * 5, smoothing=0)
        assert (d.alpha, d.beta) == (1.0, 1.0)

    def test_no_positives_smoothed(self):
        d = fit_discrete([(0, 0)] * 4, smoothing=1)
        assert d.alpha == 0.5

    def test_counting(self):
        labels = [(1, 1)] * 8 + [(0, 1)] * 2 + [(0, 0)] * 9 + [(1, 0)]
        d = fit_discrete(labels, smoothing=0)
        assert (d.alpha, d.beta) == pytest.approx((0.8, 0.9), abs=1e-15)

    def test_negative_smoothing(self):
        with pytest.raises(ValidationError):
            fit_discrete([(1, 1)], smoothing=-1)


class TestSupervised:
    def test_gold_clamped_m_step_equals_fit_binormal(self):
        data = generate(GenConfig(seed=3, n_instances=120, n_classifiers=3))
        t = data.taxonomy
        hooks = collect_hooks(t, data.sheets)
        golds = [data.golds[i] for i in hooks.instance_ids]
        q = gold_matrix(t, golds, {c for _, c in hooks.hooks})
        fitted = {p.hook: p for p in m_step(hooks, q)}
        for h in hooks.hooks:
            z = [gold_to_binary(t, golds[r])[h[1]] for r in hooks.rows[h]]
            ref, flagged = fit_binormal(list(zip(hooks.values[h].tolist(), z)))
            assert fitted[h].dist == ref
            assert fitted[h].flagged == flagged

    def test_recovery_within_standard_error(self):
        cfg = GenConfig(seed=5, n_instances=600, n_classifiers=4, mu0=-1.0, mu1=1.5, sigma0=0.8, sigma1=1.2)
        data = generate(cfg)
        truth = {p.hook: p.dist for p in data.true_params}
        fitted = fit_supervised(data.taxonomy, data.sheets, data.golds)
        hooks = collect_hooks(data.taxonomy, data.sheets)
        for p in fitted:
            z = np.array([gold_to_binary(data.taxonomy, data.golds[hooks.instance_ids[r]])[p.node] for r in hooks.rows[p.hook]])
            n1, n0 = int(z.sum()), int((1 - z).sum())
            if n0 >= 2:
                assert abs(p.dist.mu0 - truth[p.hook].mu0) <= 3 * cfg.sigma0 / math.sqrt(n0)
            if n1 >= 2:
                assert abs(p.dist.mu1 - truth[p.hook].mu1) <= 3 * cfg.sigma1 / math.sqrt(n1)

    def test_missing_gold(self, animals, example_sheet):
        with pytest.raises(ValidationError):
            fit_supervised(animals, [example_sheet], {})

    def test_discrete_kind(self, animals):
        sheets = [
            ScoreSheet("a", {"f": {"dog": 0.9, "cat": 0.1}}),
            ScoreSheet("b", {"f": {"dog": 0.2, "cat": 0.8}}),
            ScoreSheet("c", {"f": {"dog": 0.7, "cat": 0.4}}),
        ]
        golds = {"a": "doberman", "b": "cat", "c": "fox"}
        params = {p.hook: p for p in fit_supervised(animals, sheets, golds, kinds={"f": "discrete"}, smoothing=0)}
        assert params[("f", "dog")].dist == Discrete(1.0, 0.5)
        assert params[("f", "cat")].dist == Discrete(1.0, 1.0)


@pytest.fixture(scope="module")
def small():
    return generate(GenConfig(seed=1, depth=2, branching=(2, 3), n_classifiers=4,
                              classes_per_classifier=(3, 5), n_instances=150, sigma0=0.5, sigma1=0.5))


class TestEM:
    def test_trace_monotone(self, small):
        res = em_fit(small.taxonomy, small.sheets, max_iters=40)
        assert np.all(np.diff(res.trace) >= -EM_SLACK)
        assert len(res.params) == len(collect_hooks(small.taxonomy, small.sheets).hooks)

    def test_deterministic(self, small):
        a = em_fit(small.taxonomy, small.sheets, max_iters=10)
        b = em_fit(small.taxonomy, small.sheets, max_iters=10)
        assert a.trace == b.trace
        assert [p.dist for p in a.params] == [p.dist for p in b.params]

    def test_discrete_em_monotone(self, small):
        kinds = {j: "discrete" for j in small.classifier_classes}
        res = em_fit(small.taxonomy, small.sheets, kinds=kinds, max_iters=30)
        assert np.all(np.diff(res.trace) >= -EM_SLACK)
        assert all(isinstance(p.dist, Discrete) for p in res.params)

    def test_init_must_cover_hooks(self, small):
        data = collect_hooks(small.taxonomy, small.sheets)
        init = default_init(data)[1:]
        with pytest.raises(ValidationError):
            em_fit(small.taxonomy, small.sheets, init)

    def test_soft_labels_shape(self, small):
        res = em_fit(small.taxonomy, small.sheets, max_iters=3)
        assert res.soft_labels.q.shape == (len(small.sheets), len(res.soft_labels.classes))
        assert np.all((res.soft_labels.q >= 0) & (res.soft_labels.q <= 1))
