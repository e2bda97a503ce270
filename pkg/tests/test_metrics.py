import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatelab.metrics import aggregate, confusion, evaluate, scores

CLASSES = ("NOT", "HOF")


def brute_force(labels, preds, classes):
    """Counts every quantity by direct iteration; shares no code with the library."""
    out = {}
    tp_all = fp_all = fn_all = 0
    f1s, sup = [], []
    for c in classes:
        tp = sum(1 for y, p in zip(labels, preds) if y == c and p == c)
        fp = sum(1 for y, p in zip(labels, preds) if y != c and p == c)
        fn = sum(1 for y, p in zip(labels, preds) if y == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[f"precision[{c}]"], out[f"recall[{c}]"], out[f"f1[{c}]"] = prec, rec, f1
        f1s.append(f1)
        sup.append(tp + fn)
        tp_all, fp_all, fn_all = tp_all + tp, fp_all + fp, fn_all + fn
    mp = tp_all / (tp_all + fp_all) if tp_all + fp_all else 0.0
    mr = tp_all / (tp_all + fn_all) if tp_all + fn_all else 0.0
    out["micro_f1"] = 2 * mp * mr / (mp + mr) if mp + mr else 0.0
    out["macro_f1"] = sum(f1s) / len(f1s)
    out["weighted_f1"] = sum(f * s for f, s in zip(f1s, sup)) / sum(sup)
    return out


def random_instance(rng):
    k = int(rng.integers(2, 5))
    n = int(rng.integers(1, 201))
    classes = [f"c{i}" for i in range(k)]
    labels = [classes[i] for i in rng.integers(0, k, n)]
    preds = [classes[i] for i in rng.integers(0, k, n)]
    return labels, preds, classes


class TestHandWorked:
    def test_two_by_two(self):
        # NOT row: 1 correct, 1 predicted HOF. HOF row: 2 correct.
        # F1(NOT) = 2*(1*0.5)/(1+0.5) = 2/3; F1(HOF) = 2*(2/3*1)/(2/3+1) = 0.8
        cm, rep = evaluate(["NOT", "NOT", "HOF", "HOF"], ["NOT", "HOF", "HOF", "HOF"], CLASSES)
        np.testing.assert_array_equal(cm.counts, [[1, 1], [0, 2]])
        assert rep.f1[0] == pytest.approx(2 / 3, abs=1e-12)
        assert rep.f1[1] == pytest.approx(0.8, abs=1e-12)
        assert rep.macro_f1 == pytest.approx(0.7333, abs=1e-4)
        assert rep.weighted_f1 == pytest.approx(0.7333, abs=1e-4)
        assert rep.micro_f1 == pytest.approx(0.75, abs=1e-4)

    def test_perfect(self):
        _, rep = evaluate(list("abcab"), list("abcab"), "abc")
        assert rep.macro_f1 == rep.micro_f1 == rep.weighted_f1 == 1.0

    def test_zero_support_class(self):
        _, rep = evaluate(["a", "a"], ["a", "b"], ["a", "b", "c"])
        assert rep.precision[1] == 0 and rep.recall[1] == 0 and rep.f1[2] == 0
        assert np.isfinite(rep.macro_f1)

    def test_misclassification_rate(self):
        labels = ["HOF"] * 483 + ["NOT"] * 10
        preds = ["NOT"] * 160 + ["HOF"] * 323 + ["NOT"] * 10
        cm, _ = evaluate(labels, preds, CLASSES)
        assert f"{100 * cm.misclassification_rate('HOF'):.2f}" == "33.13"

    def test_render(self):
        cm, _ = evaluate(["NOT", "HOF"], ["NOT", "NOT"], CLASSES)
        assert "NOT" in cm.render() and "HOF" in cm.render()


class TestErrors:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion(["NOT"], ["NOT", "HOF"], CLASSES)

    def test_empty(self):
        with pytest.raises(ValueError):
            confusion([], [], CLASSES)

    def test_unknown(self):
        with pytest.raises(ValueError):
            confusion(["NOT"], ["XXX"], CLASSES)


def test_oracle_equivalence_sample():
    rng = np.random.default_rng(0)
    for _ in range(200):
        labels, preds, classes = random_instance(rng)
        got = scores(confusion(labels, preds, classes)).as_dict()
        want = brute_force(labels, preds, classes)
        assert got.keys() == want.keys()
        for k in want:
            assert abs(got[k] - want[k]) <= 1e-9, k


@st.composite
def instances(draw):
    k = draw(st.integers(2, 4))
    n = draw(st.integers(1, 60))
    labels = draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    preds = draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    return labels, preds, list(range(k))


class TestProperties:
    @given(instances(), st.randoms())
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariant(self, inst, rnd):
        labels, preds, classes = inst
        order = list(range(len(labels)))
        rnd.shuffle(order)
        a = scores(confusion(labels, preds, classes)).as_dict()
        b = scores(confusion([labels[i] for i in order], [preds[i] for i in order], classes)).as_dict()
        assert a == pytest.approx(b, abs=1e-12)

    @given(instances())
    @settings(max_examples=100, deadline=None)
    def test_micro_is_accuracy(self, inst):
        labels, preds, classes = inst
        rep = scores(confusion(labels, preds, classes))
        acc = np.mean(np.array(labels) == np.array(preds))
        assert rep.micro_f1 == pytest.approx(acc, abs=1e-12)
        assert 0 <= rep.macro_f1 <= 1 and 0 <= rep.weighted_f1 <= 1

    @given(st.integers(2, 4), st.integers(1, 15), st.integers(0, 2**31))
    @settings(max_examples=100, deadline=None)
    def test_macro_equals_weighted_when_balanced(self, k, per_class, seed):
        rng = np.random.default_rng(seed)
        labels = [c for c in range(k) for _ in range(per_class)]
        preds = list(rng.integers(0, k, len(labels)))
        rep = scores(confusion(labels, preds, range(k)))
        assert rep.macro_f1 == pytest.approx(rep.weighted_f1, abs=1e-12)


class TestAggregate:
    def test_single_run(self):
        agg = aggregate([{"macro_f1": 0.78}])
        assert agg["macro_f1"].mean == 0.78 and agg["macro_f1"].sd == 0.0

    def test_two_runs(self):
        agg = aggregate([{"macro_f1": 0.78}, {"macro_f1": 0.80}])
        assert agg["macro_f1"].mean == pytest.approx(0.79, abs=1e-12)
        assert agg["macro_f1"].sd == pytest.approx(0.01, abs=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])
