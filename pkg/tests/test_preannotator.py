import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelkit.errors import InputError
from labelkit.geometry import BBox, iou
from labelkit.preannotator import (
    ClusterGraph,
    PipelineSettings,
    VerifiedDetection,
    build_cluster_graph,
    preannotate_image,
    resolve_cluster,
    verify_label,
)
from labelkit.providers import Detection, Embedding, ImageRef, MockProvider
from labelkit.records import LabelClass


def embeddings_for_sims(sims):
    """Unit vectors whose dot products with a fixed probe equal sims exactly."""
    n = len(sims)
    probe = Embedding(tuple([1.0] + [0.0] * n))
    labels = []
    for j, s in enumerate(sims):
        values = [0.0] * (n + 1)
        values[0] = s
        values[j + 1] = math.sqrt(max(0.0, 1.0 - s * s))
        labels.append(Embedding(tuple(values)))
    return probe, labels


def make_verified(box, label_index, n_labels, verified_score, det_score=0.5, raw="cat"):
    base = (1.0 - verified_score) / (n_labels - 1) if n_labels > 1 else 0.0
    probs = tuple(
        verified_score if i == label_index else base for i in range(n_labels)
    )
    return VerifiedDetection(
        detection=Detection(box=box, label_text=raw, score=det_score),
        assigned_label=label_index,
        label_probs=probs,
        verified_score=verified_score,
    )


def vocab(*names):
    return [LabelClass(id=i + 1, project_id=None, name=n) for i, n in enumerate(names)]


class TestVerifyLabel:
    def test_singleton(self):
        probe, labels = embeddings_for_sims([0.8])
        probs, best = verify_label(probe, labels)
        assert probs == [1.0]
        assert best == 0

    def test_identical_labels_split_evenly_lowest_wins(self):
        probe, labels = embeddings_for_sims([0.4, 0.4])
        probs, best = verify_label(probe, labels)
        assert probs == pytest.approx([0.5, 0.5], abs=1e-12)
        assert best == 0

    def test_two_class_example(self):
        probe, labels = embeddings_for_sims([0.3, 0.1])
        probs, best = verify_label(probe, labels, temperature=1.0)
        assert probs == pytest.approx([0.5498, 0.4502], abs=1e-4)
        assert best == 0

    def test_zero_labels_rejected(self):
        probe, _ = embeddings_for_sims([0.5])
        with pytest.raises(InputError):
            verify_label(probe, [])

    def test_bad_temperature(self):
        probe, labels = embeddings_for_sims([0.5])
        for tau in (0.0, -1.0, math.inf):
            with pytest.raises(InputError):
                verify_label(probe, labels, temperature=tau)

    @given(
        st.lists(st.floats(-1, 1), min_size=2, max_size=20),
        st.sampled_from([0.1, 1.0, 10.0]),
    )
    @settings(max_examples=150)
    def test_softmax_properties(self, sims, tau):
        probe, labels = embeddings_for_sims(sims)
        probs, best = verify_label(probe, labels, temperature=tau)
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)
        assert all(0.0 < p < 1.0 for p in probs) or len(probs) == 1
        # the winner attains the top probability; it matches the similarity
        # argmax except when a sub-representable gap collapses to a
        # probability tie, where the lowest tied index wins
        assert probs[best] == max(probs)
        expected = max(range(len(sims)), key=lambda i: (sims[i], -i))
        if best != expected:
            assert probs[best] == probs[expected]
            assert best == probs.index(max(probs))


def boxes_component_oracle(boxes, threshold):
    """Union-find over all pairs, independent of the graph implementation."""
    parent = list(range(len(boxes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if iou(boxes[i], boxes[j]) > threshold:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(boxes)):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(sorted(g)) for g in groups.values())


def verified_from_boxes(boxes):
    return [make_verified(b, 0, 1, 1.0) for b in boxes]


class TestBuildClusterGraph:
    def test_empty(self):
        graph = build_cluster_graph([], 0.9)
        assert graph == ClusterGraph(nodes=(), edges=frozenset(), components=())

    def test_transitive_chain(self):
        a = BBox(0, 0, 100, 100)
        b = BBox(2.5641, 0, 102.5641, 100)   # iou(a,b) ~ 0.95
        c = BBox(6.7308, 0, 106.7308, 100)   # iou(b,c) ~ 0.92, iou(a,c) ~ 0.87
        assert iou(a, b) > 0.9 and iou(b, c) > 0.9 and iou(a, c) < 0.9
        graph = build_cluster_graph(verified_from_boxes([a, b, c]), 0.9)
        assert graph.edges == frozenset({(0, 1), (1, 2)})
        assert graph.components == ((0, 1, 2),)

    def test_exact_threshold_is_not_an_edge(self):
        a = BBox(0, 0, 10, 10)
        b = BBox(0, 0, 10, 9)  # inter 90, union 100
        assert iou(a, b) == 0.9
        graph = build_cluster_graph(verified_from_boxes([a, b]), 0.9)
        assert graph.edges == frozenset()
        assert len(graph.components) == 2

    def test_bad_threshold(self):
        with pytest.raises(InputError):
            build_cluster_graph([], 0.0)
        with pytest.raises(InputError):
            build_cluster_graph([], 1.1)

    @given(
        st.lists(
            st.tuples(
                st.floats(0, 80), st.floats(0, 80), st.floats(1, 40), st.floats(1, 40)
            ),
            max_size=30,
        ),
        st.sampled_from([0.3, 0.7, 0.9]),
    )
    @settings(max_examples=80, deadline=None)
    def test_matches_union_find_oracle(self, raw, threshold):
        boxes = [BBox(x, y, x + w, y + h) for x, y, w, h in raw]
        graph = build_cluster_graph(verified_from_boxes(boxes), threshold)
        assert sorted(graph.components) == boxes_component_oracle(boxes, threshold)

    def test_edges_match_pairwise_strict_comparison(self):
        rng = np.random.default_rng(4)
        boxes = [
            BBox(x, y, x + w, y + h)
            for x, y, w, h in zip(
                rng.uniform(0, 50, 20),
                rng.uniform(0, 50, 20),
                rng.uniform(5, 30, 20),
                rng.uniform(5, 30, 20),
            )
        ]
        graph = build_cluster_graph(verified_from_boxes(boxes), 0.5)
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                assert graph.has_edge(i, j) == (iou(boxes[i], boxes[j]) > 0.5)


@pytest.fixture
def cat_scene(make_png):
    path = make_png("scene.png", 100, 100)
    truth = {"scene.png": [("cat", BBox(10, 10, 60, 60))]}
    return path, truth


class TestResolveCluster:
    def test_singleton_passthrough(self, cat_scene):
        path, truth = cat_scene
        provider = MockProvider(truth, known_classes=["dog"])
        member = make_verified(BBox(10, 10, 60, 60), 0, 2, 0.9, det_score=0.8)
        got = resolve_cluster([member], ImageRef(path=path), vocab("cat", "dog"), provider)
        assert got.geometry == member.detection.box
        assert got.class_id == 1
        assert got.verified_score == 0.9
        assert got.detector_score == 0.8
        assert got.source == "auto_verified"

    def test_consistent_keeps_highest_confidence(self, cat_scene):
        path, truth = cat_scene
        provider = MockProvider(truth, known_classes=["dog"])
        low = make_verified(BBox(10, 10, 60, 60), 0, 2, 0.7)
        high = make_verified(BBox(11, 10, 61, 60), 0, 2, 0.9)
        got = resolve_cluster([low, high], ImageRef(path=path), vocab("cat", "dog"), provider)
        assert got.verified_score == 0.9
        assert got.geometry == high.detection.box

    def test_confidence_tie_prefers_larger_area(self, cat_scene):
        path, truth = cat_scene
        provider = MockProvider(truth, known_classes=["dog"])
        small = make_verified(BBox(10, 10, 59, 60), 0, 2, 0.9)
        large = make_verified(BBox(10, 10, 60, 61), 0, 2, 0.9)
        got = resolve_cluster([small, large], ImageRef(path=path), vocab("cat", "dog"), provider)
        assert got.geometry == large.detection.box

    def test_full_tie_prefers_first_member(self, cat_scene):
        path, truth = cat_scene
        provider = MockProvider(truth, known_classes=["dog"])
        first = make_verified(BBox(10, 10, 60, 60), 0, 2, 0.9)
        second = make_verified(BBox(11, 10, 61, 60), 0, 2, 0.9)
        assert first.detection.box.area == second.detection.box.area
        got = resolve_cluster([first, second], ImageRef(path=path), vocab("cat", "dog"), provider)
        assert got.geometry == first.detection.box

    def test_conflict_union_reverification_picks_matching_member(self, cat_scene):
        path, truth = cat_scene
        provider = MockProvider(truth, known_classes=["dog"], embedding_noise=0.0)
        cat_member = make_verified(BBox(10, 10, 59, 59), 0, 2, 0.6)
        dog_member = make_verified(BBox(11, 11, 60, 60), 1, 2, 0.8)
        got = resolve_cluster(
            [cat_member, dog_member], ImageRef(path=path), vocab("cat", "dog"), provider
        )
        assert got.class_id == 1  # cat, backed by the union-crop check
        assert got.geometry == cat_member.detection.box

    def test_conflict_without_matching_member_returns_union_box(self, cat_scene):
        path, truth = cat_scene
        provider = MockProvider(truth, known_classes=["dog", "bird"], embedding_noise=0.0)
        dog_member = make_verified(BBox(10, 10, 59, 59), 1, 3, 0.8)
        bird_member = make_verified(BBox(11, 11, 60, 60), 2, 3, 0.7)
        got = resolve_cluster(
            [dog_member, bird_member],
            ImageRef(path=path),
            vocab("cat", "dog", "bird"),
            provider,
        )
        assert got.class_id == 1  # the union crop reads as cat
        assert got.geometry == BBox(10, 10, 60, 60)
        assert got.detector_score is None
        assert got.verified_score is not None

    def test_empty_component_rejected(self, cat_scene):
        path, truth = cat_scene
        provider = MockProvider(truth)
        with pytest.raises(InputError):
            resolve_cluster([], ImageRef(path=path), vocab("cat"), provider)


class TestPipelineSettings:
    def test_defaults(self):
        s = PipelineSettings()
        assert s.detection_threshold == 0.2
        assert s.cluster_iou_threshold == 0.9
        assert s.temperature == 1.0
        assert s.acceptance_mode == "live_filter"
        assert s.min_confidence_filter == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"detection_threshold": -0.1},
            {"cluster_iou_threshold": 0.0},
            {"temperature": 0.0},
            {"acceptance_mode": "yolo"},
            {"min_confidence_filter": 2.0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(InputError):
            PipelineSettings(**kwargs)


class TestPreannotateImage:
    def test_duplicates_collapse_to_one(self, make_png):
        path = make_png("dup.png", 100, 100)
        truth = {"dup.png": [("cat", BBox(20, 20, 70, 70))]}
        provider = MockProvider(truth, seed=2, duplicate_range=(3, 3), known_classes=["dog"])
        got = preannotate_image(
            ImageRef(path=path), PipelineSettings(), vocab("cat", "dog"), provider
        )
        assert len(got) == 1
        assert got[0].class_id == 1
        assert got[0].state == "pending"

    def test_zero_detections_yield_empty(self, make_png):
        path = make_png("blank.png")
        provider = MockProvider({}, known_classes=["cat"])
        got = preannotate_image(
            ImageRef(path=path), PipelineSettings(), vocab("cat"), provider
        )
        assert got == []

    def test_detector_mislabel_corrected_by_verification(self, make_png):
        path = make_png("fix.png", 100, 100)
        truth = {"fix.png": [("cat", BBox(10, 10, 60, 60))]}
        provider = MockProvider(
            truth,
            seed=3,
            duplicate_range=(1, 1),
            mislabel_rate=1.0,
            embedding_noise=0.0,
            known_classes=["dog"],
        )
        dets = provider.detect(ImageRef(path=path), ["cat", "dog"], 0.2)
        assert [d.label_text.lower().rstrip(".") for d in dets] == ["dog"]
        got = preannotate_image(
            ImageRef(path=path), PipelineSettings(), vocab("cat", "dog"), provider
        )
        assert len(got) == 1
        assert got[0].class_id == 1  # cat

    def test_one_annotation_per_planted_object(self, make_png):
        path = make_png("multi.png", 200, 150)
        truth = {
            "multi.png": [
                ("cat", BBox(10, 10, 60, 60)),
                ("dog", BBox(100, 20, 170, 90)),
                ("cat", BBox(30, 90, 90, 140)),
            ]
        }
        provider = MockProvider(truth, seed=5, duplicate_range=(2, 4))
        got = preannotate_image(
            ImageRef(path=path), PipelineSettings(), vocab("cat", "dog"), provider
        )
        assert len(got) == 3

    def test_blind_trust_accepts(self, make_png):
        path = make_png("bt.png", 100, 100)
        truth = {"bt.png": [("cat", BBox(10, 10, 60, 60))]}
        provider = MockProvider(truth, seed=1)
        got = preannotate_image(
            ImageRef(path=path),
            PipelineSettings(acceptance_mode="blind_trust"),
            vocab("cat"),
            provider,
        )
        assert [a.state for a in got] == ["accepted"]
        assert [a.source for a in got] == ["auto_verified"]

    def test_min_confidence_filter_drops_low_scores(self, make_png):
        path = make_png("mc.png", 100, 100)
        truth = {"mc.png": [("cat", BBox(10, 10, 60, 60))]}
        provider = MockProvider(truth, seed=1, known_classes=["dog"], embedding_noise=0.0)
        keep = preannotate_image(
            ImageRef(path=path), PipelineSettings(), vocab("cat", "dog"), provider
        )
        # two classes, exact embedding: top softmax prob is e/(e+1)
        expected = math.e / (math.e + 1.0)
        assert keep[0].verified_score == pytest.approx(expected, abs=1e-9)
        dropped = preannotate_image(
            ImageRef(path=path),
            PipelineSettings(min_confidence_filter=0.9),
            vocab("cat", "dog"),
            provider,
        )
        assert dropped == []

    def test_no_same_label_overlaps_above_threshold(self, make_png):
        path = make_png("sup.png", 200, 150)
        truth = {
            "sup.png": [
                ("cat", BBox(10, 10, 80, 80)),
                ("dog", BBox(90, 30, 180, 120)),
            ]
        }
        provider = MockProvider(truth, seed=8, duplicate_range=(1, 5), embedding_noise=0.3)
        settings_obj = PipelineSettings()
        got = preannotate_image(
            ImageRef(path=path), settings_obj, vocab("cat", "dog"), provider
        )
        for i in range(len(got)):
            for j in range(i + 1, len(got)):
                if got[i].class_id == got[j].class_id:
                    assert (
                        iou(got[i].geometry, got[j].geometry)
                        <= settings_obj.cluster_iou_threshold
                    )

    def test_empty_vocabulary_rejected(self, make_png):
        path = make_png("v.png")
        with pytest.raises(InputError):
            preannotate_image(
                ImageRef(path=path), PipelineSettings(), [], MockProvider({})
            )

    def test_raw_detection_count_monotone_in_threshold(self, make_png):
        path = make_png("mono.png", 120, 120)
        truth = {"mono.png": [("cat", BBox(10, 10, 50, 50)), ("dog", BBox(60, 60, 110, 110))]}
        provider = MockProvider(truth, seed=6, duplicate_range=(2, 4), distractor_count=4)
        image = ImageRef(path=path)
        counts = [
            len(provider.detect(image, ["cat", "dog"], t)) for t in (0.0, 0.2, 0.5, 0.8)
        ]
        assert counts == sorted(counts, reverse=True)


class TestVerifiedDetectionInvariants:
    def test_probs_must_sum_to_one(self):
        with pytest.raises(InputError):
            VerifiedDetection(
                detection=Detection(box=BBox(0, 0, 1, 1), label_text="cat", score=0.5),
                assigned_label=0,
                label_probs=(0.6, 0.6),
                verified_score=0.6,
            )

    def test_assigned_must_be_argmax(self):
        with pytest.raises(InputError):
            VerifiedDetection(
                detection=Detection(box=BBox(0, 0, 1, 1), label_text="cat", score=0.5),
                assigned_label=1,
                label_probs=(0.7, 0.3),
                verified_score=0.3,
            )
