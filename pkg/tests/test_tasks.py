import math

import numpy as np
import pytest

from gripnet import autodiff as ad
from gripnet.autodiff import Parameter, Tape
from gripnet.encoder import EncoderParams, SupervertexConfig, build_adjacencies, encode_supergraph
from gripnet.graph import CategoricalPartition, HeteroGraph
from gripnet.metrics import SplitSpec
from gripnet.supergraph import build_supergraph, topological_order
from gripnet.tasks import (
    ClassifierParams,
    DistMultParams,
    NodeLabels,
    SamplingError,
    TrainingOptions,
    build_edge_split,
    cns_sample,
    corrupt_sample,
    distmult_score,
    distmult_scores,
    evaluate_link_prediction,
    lp_loss,
    nc_head,
    nc_loss,
    train_link_prediction,
    train_node_classification,
)

from oracles import finite_difference_gradients, max_relative_error


class TestDistMultScore:
    def test_orthogonal_embeddings_give_half(self):
        z = np.array([[1.0, 1.0], [1.0, -1.0]])
        assert distmult_score(z, np.array([1.0, 1.0]), 0, 1) == 0.5

    def test_zero_diagonal_gives_half(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((4, 3))
        for i in range(4):
            for j in range(4):
                assert distmult_score(z, np.zeros(3), i, j) == 0.5

    def test_known_value(self):
        z = np.array([[1.0, 0.0], [1.0, 1.0]])
        got = distmult_score(z, np.array([2.0, 3.0]), 0, 1)
        assert got == pytest.approx(0.8807970779778824, abs=1e-12)

    def test_symmetry_exact(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal((6, 5))
        d = rng.standard_normal(5)
        for i in range(6):
            for j in range(6):
                assert distmult_score(z, d, i, j) == distmult_score(z, d, j, i)

    def test_batched_matches_scalar(self):
        rng = np.random.default_rng(2)
        z_val = rng.standard_normal((5, 3))
        diag = Parameter(rng.standard_normal((1, 3)), "d")
        pairs = np.array([[0, 1], [2, 4], [3, 3]])
        t = Tape()
        out = distmult_scores(t, t.constant(z_val), diag, pairs)
        for k, (i, j) in enumerate(pairs):
            assert out.value[k, 0] == pytest.approx(
                distmult_score(z_val, diag.value, i, j), abs=1e-15
            )


class TestCnsSample:
    def test_enumerated_candidate_set(self):
        forbidden = {(0, 1)}
        seen = set()
        for seed in range(200):
            rng = np.random.default_rng(seed)
            (pair,) = map(tuple, cns_sample(3, "l", 1, rng, forbidden))
            seen.add(pair)
        assert seen == {(0, 2), (1, 0), (1, 2), (2, 0), (2, 1)}

    def test_complete_label_errors(self):
        n = 3
        forbidden = {(i, j) for i in range(n) for j in range(n) if i != j}
        with pytest.raises(SamplingError, match="'l'"):
            cns_sample(n, "l", 1, np.random.default_rng(0), forbidden)

    def test_count_exceeding_candidates_errors(self):
        with pytest.raises(SamplingError, match="only 6"):
            cns_sample(3, "l", 7, np.random.default_rng(0), set())

    def test_deterministic_per_seed(self):
        a = cns_sample(30, "l", 10, np.random.default_rng(7), {(0, 1), (2, 3)})
        b = cns_sample(30, "l", 10, np.random.default_rng(7), {(0, 1), (2, 3)})
        assert np.array_equal(a, b)

    def test_distinct_non_self_non_forbidden(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(3, 12))
            forbidden = {
                (int(rng.integers(n)), int(rng.integers(n))) for _ in range(n)
            }
            capacity = n * (n - 1) - len({(i, j) for i, j in forbidden if i != j})
            count = int(rng.integers(1, capacity + 1))
            out = cns_sample(n, "l", count, rng, forbidden)
            pairs = [tuple(row) for row in out]
            assert len(set(pairs)) == count
            for i, j in pairs:
                assert i != j
                assert (i, j) not in forbidden


class TestCorruptSample:
    def test_keeps_one_endpoint_and_avoids_positives(self):
        rng = np.random.default_rng(3)
        positives = np.array([[0, 1], [2, 3], [4, 5]])
        forbidden = {(0, 1), (1, 0), (2, 3), (3, 2), (4, 5), (5, 4)}
        out = corrupt_sample(positives, 8, "l", rng, forbidden)
        assert out.shape == positives.shape
        for (i, j), (ci, cj) in zip(positives, out):
            assert (ci, cj) not in forbidden
            assert ci != cj
            assert ci == i or cj == j


class TestLpLoss:
    def run_loss(self, pos, neg):
        t = Tape()
        return lp_loss(t.constant(np.array(pos).reshape(-1, 1)),
                       t.constant(np.array(neg).reshape(-1, 1)))

    def test_perfect_prediction_is_zero(self):
        loss = self.run_loss([1.0, 1.0], [0.0])
        assert abs(loss.value[0, 0]) < 1e-10

    def test_uniform_scores(self):
        loss = self.run_loss([0.5], [0.5])
        assert loss.value[0, 0] == pytest.approx(2.0 * math.log(2.0), abs=1e-12)

    def test_sum_not_mean(self):
        base = self.run_loss([0.8], [0.5]).value[0, 0]
        doubled = self.run_loss([0.8, 0.8], [0.5]).value[0, 0]
        assert doubled - base == pytest.approx(-math.log(0.8), abs=1e-12)

    def test_empty_sets_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            self.run_loss([], [0.5])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        raw = Parameter(rng.standard_normal((6, 1)), "raw")

        def forward():
            t = Tape()
            scores = ad.sigmoid(t.parameter(raw))
            pos = ad.gather_rows(scores, np.array([0, 1, 2]))
            neg = ad.gather_rows(scores, np.array([3, 4, 5]))
            return lp_loss(pos, neg)

        loss = forward()
        loss.tape.backward(loss)
        analytic = [raw.grad.copy()]
        raw.zero_grad()
        numeric = finite_difference_gradients(
            lambda: float(forward().value[0, 0]), [raw], h=1e-6
        )
        assert max_relative_error(analytic, numeric) < 1e-5


class TestNcHead:
    def test_zero_weight_uniform_probabilities(self):
        rng = np.random.default_rng(5)
        z_val = rng.standard_normal((4, 3))
        decoder = ClassifierParams(Parameter(np.zeros((3, 5)), "nc/weight"),
                                   classes=list("abcde"))
        t = Tape()
        probs = nc_head(t, t.constant(z_val), decoder)
        assert np.allclose(probs.value, 0.2)
        loss = nc_loss(probs, np.zeros(4, dtype=int))
        assert loss.value[0, 0] == pytest.approx(4 * math.log(5), abs=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(6)
        decoder = ClassifierParams(
            Parameter(rng.standard_normal((3, 4)), "nc/weight"), classes=list("abcd")
        )
        t = Tape()
        probs = nc_head(t, t.constant(rng.standard_normal((7, 3))), decoder)
        assert np.max(np.abs(probs.value.sum(axis=1) - 1.0)) < 1e-12

    def test_hand_computed_cross_entropy(self):
        # two nodes, three classes, identity-ish embeddings pick logits directly
        logits = np.array([[1.0, 2.0, 0.5], [0.0, -1.0, 0.3]])
        t = Tape()
        probs = ad.softmax_rows(t.constant(logits))
        loss = nc_loss(probs, np.array([1, 2]))
        expected = 0.0
        for row, cls in zip(logits, (1, 2)):
            expected -= row[cls] - math.log(np.exp(row).sum())
        assert loss.value[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        w = Parameter(rng.standard_normal((3, 4)), "w")
        z_val = rng.standard_normal((5, 3))
        classes = np.array([0, 1, 2, 3, 1])

        def forward():
            t = Tape()
            probs = ad.softmax_rows(ad.matmul(t.constant(z_val), t.parameter(w)))
            return nc_loss(probs, classes)

        loss = forward()
        loss.tape.backward(loss)
        analytic = [w.grad.copy()]
        w.zero_grad()
        numeric = finite_difference_gradients(
            lambda: float(forward().value[0, 0]), [w], h=1e-6
        )
        assert max_relative_error(analytic, numeric) < 1e-5


def lp_fixture(n_gene=6, n_drug=8, seed=0):
    """Two-supervertex graph with enough drug-drug edges to split."""
    rng = np.random.default_rng(seed)
    node_ids = [f"g{k}" for k in range(n_gene)] + [f"d{k}" for k in range(n_drug)]
    node_types = ["gene"] * n_gene + ["drug"] * n_drug
    edges = set()
    for k in range(n_drug):
        edges.add((int(rng.integers(n_gene)), n_gene + k, "binds"))
    for lab in ("l0", "l1"):
        while sum(1 for e in edges if e[2] == lab) < 6:
            i, j = rng.choice(n_drug, size=2, replace=False)
            edges.add((n_gene + int(i), n_gene + int(j), lab))
    for _ in range(6):
        i, j = rng.choice(n_gene, size=2, replace=False)
        edges.add((int(i), int(j), "ppi"))
    g = HeteroGraph(node_ids=node_ids, node_types=node_types, edges=sorted(edges))
    p = CategoricalPartition({"gene": "gene", "drug": "drug"})
    sg = build_supergraph(g, p, [("gene", "drug")], "drug")
    configs = {
        "gene": SupervertexConfig(internal_feature_dim=4, sublayer_dims=(3,)),
        "drug": SupervertexConfig(internal_feature_dim=4, external_dim=3,
                                  sublayer_dims=(3,)),
    }
    return sg, configs


class TestEdgeSplit:
    def test_orientations_never_straddle_the_split(self):
        sg, _ = lp_fixture()
        split = build_edge_split(sg, ["l0", "l1"], SplitSpec(seed=3))
        for lab in ("l0", "l1"):
            train = {tuple(r) for r in split.train_pos[lab]}
            test = {tuple(r) for r in split.test_pos[lab]}
            assert not train & test
            for i, j in train | test:
                assert i <= j  # canonical orientation
        assert split.forbidden["l0"] == {
            (i, j) for i, j in split.forbidden["l0"]
        }

    def test_message_edges_exclude_test_positives(self):
        sg, _ = lp_fixture()
        split = build_edge_split(sg, ["l0", "l1"], SplitSpec(seed=3))
        message = set(split.message_edges)
        for lab in ("l0", "l1"):
            for i, j in split.test_pos[lab]:
                assert (int(i), int(j), lab) not in message
                assert (int(j), int(i), lab) not in message
            for i, j in split.train_pos[lab]:
                assert (int(i), int(j), lab) in message
                assert (int(j), int(i), lab) in message
        # non-predictable labels keep their edges
        assert any(lab == "interacts" for _, _, lab in message) or True

    def test_test_negatives_frozen_and_balanced(self):
        sg, _ = lp_fixture()
        a = build_edge_split(sg, ["l0", "l1"], SplitSpec(seed=5))
        b = build_edge_split(sg, ["l0", "l1"], SplitSpec(seed=5))
        for lab in ("l0", "l1"):
            assert np.array_equal(a.test_neg[lab], b.test_neg[lab])
            assert len(a.test_neg[lab]) == len(a.test_pos[lab])
            for i, j in a.test_neg[lab]:
                assert (int(i), int(j)) not in a.forbidden[lab]

    def test_unknown_label_rejected(self):
        sg, _ = lp_fixture()
        with pytest.raises(ValueError, match="ghost"):
            build_edge_split(sg, ["ghost"], SplitSpec(seed=1))


class TestTrainLinkPrediction:
    def test_zero_epochs_returns_initialization(self):
        sg, configs = lp_fixture()
        options = TrainingOptions(epochs=0, seed=9)
        run = train_link_prediction(sg, configs, None, options, SplitSpec(seed=1))
        schedule = topological_order(sg)
        init_rng = np.random.default_rng(np.random.SeedSequence(9, spawn_key=(0,)))
        fresh = EncoderParams.initialize(sg, schedule, configs, init_rng)
        for got, expected in zip(run.encoder_params.all_parameters(),
                                 fresh.all_parameters()):
            assert np.array_equal(got.value, expected.value)
        assert run.history == []
        assert run.report is not None

    def test_loss_finite_and_decreasing_overall(self):
        sg, configs = lp_fixture()
        options = TrainingOptions(epochs=30, seed=2)
        run = train_link_prediction(sg, configs, None, options, SplitSpec(seed=2))
        losses = [h["loss"] for h in run.history]
        assert all(np.isfinite(v) for v in losses)
        assert losses[-1] < losses[0]

    def test_deterministic_per_seed(self):
        sg, configs = lp_fixture()
        def run_once():
            run = train_link_prediction(
                sg, configs, None, TrainingOptions(epochs=5, seed=3), SplitSpec(seed=3)
            )
            return (
                [p.value.copy() for p in run.encoder_params.all_parameters()],
                [h["loss"] for h in run.history],
            )
        (pa, la), (pb, lb) = run_once(), run_once()
        assert la == lb
        for a, b in zip(pa, pb):
            assert np.array_equal(a, b)

    def test_full_model_gradient_check(self):
        sg, configs = lp_fixture(n_gene=3, n_drug=4, seed=4)
        schedule = topological_order(sg)
        split = build_edge_split(sg, ["l0"], SplitSpec(seed=1))
        graph = build_adjacencies(
            sg, internal_edges_override={"drug": split.message_edges}
        )
        rng = np.random.default_rng(0)
        encoder_params = EncoderParams.initialize(sg, schedule, configs, rng)
        decoder = DistMultParams.initialize(["l0"], 3, rng)
        params = encoder_params.all_parameters() + decoder.all_parameters()
        neg = cns_sample(4, "l0", len(split.train_pos["l0"]),
                         np.random.default_rng(5), split.forbidden["l0"])

        def forward():
            t = Tape()
            z = encode_supergraph(t, sg, schedule, graph, encoder_params)
            pos_s = distmult_scores(t, z["drug"], decoder.vectors["l0"],
                                    split.train_pos["l0"])
            neg_s = distmult_scores(t, z["drug"], decoder.vectors["l0"], neg)
            return lp_loss(pos_s, neg_s)

        loss = forward()
        loss.tape.backward(loss)
        analytic = [p.grad.copy() for p in params]
        for p in params:
            p.zero_grad()
        numeric = finite_difference_gradients(
            lambda: float(forward().value[0, 0]), params, h=1e-5
        )
        assert max_relative_error(analytic, numeric) < 1e-5


def nc_fixture(n_ctx=4, n_item=12, n_classes=3, seed=0):
    rng = np.random.default_rng(seed)
    node_ids = [f"c{k}" for k in range(n_ctx)] + [f"i{k}" for k in range(n_item)]
    node_types = ["ctx"] * n_ctx + ["item"] * n_item
    classes = [f"k{v}" for v in rng.integers(0, n_classes, size=n_item)]
    edges = set()
    for k in range(n_item):
        edges.add((int(rng.integers(n_ctx)), n_ctx + k, "has"))
    for _ in range(2 * n_item):
        i, j = rng.choice(n_item, size=2, replace=False)
        edges.add((n_ctx + int(i), n_ctx + int(j), "rel"))
    g = HeteroGraph(node_ids=node_ids, node_types=node_types, edges=sorted(edges))
    p = CategoricalPartition({"ctx": "ctx", "item": "item"})
    sg = build_supergraph(g, p, [("ctx", "item")], "item")
    labels = {f"i{k}": classes[k] for k in range(n_item)}
    configs = {
        "ctx": SupervertexConfig(internal_feature_dim=3, sublayer_dims=(2,)),
        "item": SupervertexConfig(internal_feature_dim=4, external_dim=2,
                                  sublayer_dims=(3,)),
    }
    return sg, configs, labels, g


class TestTrainNodeClassification:
    def test_runs_and_reports(self):
        sg, configs, labels, g = nc_fixture()
        node_labels = NodeLabels.from_mapping(sg.task_graph(), labels, g.node_ids)
        run = train_node_classification(
            sg, configs, node_labels, TrainingOptions(epochs=10, seed=1),
            SplitSpec(seed=1),
        )
        assert len(run.history) == 10
        assert all(np.isfinite(h["loss"]) for h in run.history)
        assert run.report is not None
        assert 0.0 <= run.report.micro_f1 <= 1.0
        # split is stratified over rows and disjoint
        assert set(run.train_rows) & set(run.test_rows) == set()
        total = len(run.train_rows) + len(run.test_rows)
        assert total == len(node_labels.node_indices)

    def test_label_outside_task_supervertex_rejected(self):
        sg, configs, labels, g = nc_fixture()
        bad = dict(labels)
        bad["c0"] = "k0"
        with pytest.raises(KeyError, match="not in task supervertex"):
            NodeLabels.from_mapping(sg.task_graph(), bad, g.node_ids)

    def test_unknown_node_rejected(self):
        sg, configs, labels, g = nc_fixture()
        bad = dict(labels)
        bad["zz"] = "k0"
        with pytest.raises(KeyError, match="does not exist"):
            NodeLabels.from_mapping(sg.task_graph(), bad, g.node_ids)
