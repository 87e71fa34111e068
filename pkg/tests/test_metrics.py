import contextlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gripnet.metrics import (
    DegenerateLabelError,
    SplitSpec,
    f1_metrics,
    rank_metrics,
    ranking_report,
    stratified_split,
)

from oracles import (
    ap_at_k_bruteforce,
    auprc_sweep,
    auroc_pair_counting,
    f1_bruteforce,
)


class TestRankMetrics:
    def test_perfect_ranking_is_exactly_one(self):
        auroc, auprc, ap50 = rank_metrics([0.9, 0.8, 0.3], [1, 1, 0])
        assert auroc == 1.0
        assert auprc == 1.0
        assert ap50 == 1.0

    def test_half_right_pairs(self):
        # one of the two (pos, neg) pairs ranks correctly
        auroc, _, _ = rank_metrics([0.5, 0.9, 0.2], [1, 0, 0])
        assert auroc == 0.5

    def test_degenerate_label_raises(self):
        with pytest.raises(DegenerateLabelError):
            rank_metrics([0.1, 0.2], [1, 1])
        with pytest.raises(DegenerateLabelError):
            rank_metrics([0.1, 0.2], [0, 0])

    @pytest.mark.parametrize("trial", range(60))
    def test_matches_bruteforce_oracles(self, trial):
        rng = np.random.default_rng(1000 + trial)
        n = int(rng.integers(2, 101))
        labels = rng.integers(0, 2, size=n)
        if labels.sum() == 0:
            labels[0] = 1
        if labels.sum() == n:
            labels[0] = 0
        # quantized scores force plenty of ties
        scores = np.round(rng.random(n), 2)
        auroc, auprc, ap50 = rank_metrics(scores, labels)
        assert auroc == pytest.approx(auroc_pair_counting(scores, labels), abs=1e-12)
        assert auprc == pytest.approx(auprc_sweep(scores, labels), abs=1e-12)
        assert ap50 == pytest.approx(ap_at_k_bruteforce(scores, labels), abs=1e-12)

    @given(
        st.lists(
            st.tuples(st.integers(0, 100), st.booleans()),
            min_size=4,
            max_size=60,
        ).filter(lambda items: 0 < sum(lab for _, lab in items) < len(items))
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_transform_invariance(self, items):
        # quantized scores keep exp() injective, so ties are preserved exactly
        scores = np.array([s for s, _ in items], dtype=float) / 100.0
        labels = np.array([int(lab) for _, lab in items])
        base = rank_metrics(scores, labels)
        squeezed = rank_metrics(np.exp(2.0 * scores) / 10.0, labels)
        assert base[0] == pytest.approx(squeezed[0], abs=1e-12)  # auroc
        assert base[2] == pytest.approx(squeezed[2], abs=1e-12)  # ap@50

    def test_report_skips_degenerate_labels_with_warning(self):
        per_label = {
            "good": (np.array([0.8, 0.1]), np.array([1, 0])),
            "allpos": (np.array([0.5, 0.5]), np.array([1, 1])),
        }
        with pytest.warns(UserWarning, match="allpos"):
            report = ranking_report(per_label)
        assert list(report.per_label) == ["good"]
        assert report.skipped_labels == ["allpos"]
        assert report.macro_auroc == 1.0

    def test_report_json_has_rounded_values(self):
        report = ranking_report({"l": (np.array([0.9, 0.8, 0.3]), np.array([1, 0, 1]))})
        doc = report.to_json_dict()
        assert set(doc) == {"per_label", "macro", "skipped_labels"}
        assert doc["macro"]["auroc"] == 0.5


class TestF1Metrics:
    def test_perfect_predictions(self):
        report = f1_metrics(["a", "b", "a"], ["a", "b", "a"])
        assert report.micro_f1 == 1.0
        assert report.macro_f1 == 1.0

    def test_two_thirds_micro(self):
        report = f1_metrics(["a", "b", "a"], ["a", "a", "a"])
        assert report.micro_f1 == pytest.approx(2.0 / 3.0, abs=1e-12)

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_micro_equals_accuracy(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 40))
            classes = ["x", "y", "z"]
            pred = [classes[k] for k in rng.integers(0, 3, size=n)]
            true = [classes[k] for k in rng.integers(0, 3, size=n)]
            report = f1_metrics(pred, true, classes=classes)
            accuracy = sum(p == t for p, t in zip(pred, true)) / n
            assert report.micro_f1 == pytest.approx(accuracy, abs=1e-12)

    @pytest.mark.parametrize("trial", range(30))
    def test_matches_bruteforce(self, trial):
        rng = np.random.default_rng(2000 + trial)
        n = int(rng.integers(1, 100))
        classes = [f"c{k}" for k in range(int(rng.integers(2, 6)))]
        pred = [classes[k] for k in rng.integers(0, len(classes), size=n)]
        true = [classes[k] for k in rng.integers(0, len(classes), size=n)]
        with pytest.warns(UserWarning) if _has_absent(pred, true, classes) else _nullcontext():
            report = f1_metrics(pred, true, classes=classes)
        micro, macro, per_class = f1_bruteforce(pred, true, classes)
        assert report.micro_f1 == pytest.approx(micro, abs=1e-12)
        assert report.macro_f1 == pytest.approx(macro, abs=1e-12)
        for cls in classes:
            assert report.per_class[cls]["f1"] == pytest.approx(per_class[cls], abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            f1_metrics(["a"], ["a", "b"])

    def test_absent_class_warns_and_scores_zero(self):
        with pytest.warns(UserWarning, match="'ghost'"):
            report = f1_metrics(["a"], ["a"], classes=["a", "ghost"])
        assert report.per_class["ghost"]["f1"] == 0.0
        assert report.macro_f1 == 0.5


def _has_absent(pred, true, classes):
    observed = set(pred) | set(true)
    return any(c not in observed for c in classes)


def _nullcontext():
    return contextlib.nullcontext()


class TestStratifiedSplit:
    def test_ten_items_split_nine_one(self):
        items = [("e", k) for k in range(10)]
        train, test = stratified_split(items, SplitSpec(seed=1), key=lambda e: e[0])
        assert len(train) == 9 and len(test) == 1

    def test_ceil_rule_on_three(self):
        items = list(range(3))
        train, test = stratified_split(items, SplitSpec(seed=2), key=lambda _: "s")
        assert len(train) == 2 and len(test) == 1

    def test_deterministic_and_seed_sensitive(self):
        items = list(range(50))
        spec1 = SplitSpec(seed=7)
        a = stratified_split(items, spec1, key=lambda x: x % 3)
        b = stratified_split(items, spec1, key=lambda x: x % 3)
        assert a == b
        c = stratified_split(items, SplitSpec(seed=8), key=lambda x: x % 3)
        assert a != c

    @given(
        st.lists(st.integers(0, 4), min_size=1, max_size=200),
        st.integers(0, 2**31),
    )
    @settings(max_examples=80, deadline=None)
    def test_split_conservation(self, strata, seed):
        items = list(enumerate(strata))
        train, test = stratified_split(items, SplitSpec(seed=seed), key=lambda e: e[1])
        assert sorted(train + test) == sorted(items)
        # per-stratum ceil rule
        for s in set(strata):
            n = strata.count(s)
            n_test = sum(1 for _, v in test if v == s)
            assert n_test == -(-n // 10)  # ceil(n / 10)

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=1.0)
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=0.0)

    def test_fraction_float_trap(self):
        # ceil((1 - 0.7) * 10) must be 3, not 4 (float 0.3*10 rounds up)
        assert SplitSpec(train_fraction=0.7).test_count(10) == 3
        assert SplitSpec(train_fraction=0.9).test_count(10) == 1
        assert SplitSpec(train_fraction=0.9).test_count(20) == 2

    def test_empty_items_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            stratified_split([], SplitSpec(), key=lambda x: x)
