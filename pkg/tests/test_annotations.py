import itertools
import json

import numpy as np
import pytest

from finsent.annotations import (
    AnnotationSet,
    GroundTruth,
    fleiss_kappa,
    ground_truth,
    load_annotations,
    majority_label,
    vote_matrix,
    write_ground_truth,
)
from finsent.labels import Label

from oracles import HAND_KAPPA, WORKED, brute_force_kappa, random_matrix

P, N, U, X = Label.POSITIVE, Label.NEGATIVE, Label.NEUTRAL, Label.NONE

class TestFleissKappa:
    def test_worked_example(self):
        assert HAND_KAPPA == pytest.approx(0.210, abs=1e-3)
        assert fleiss_kappa(WORKED) == pytest.approx(HAND_KAPPA, abs=1e-12)
        assert fleiss_kappa(WORKED) == pytest.approx(0.210, abs=1e-3)

    def test_unanimous_is_exactly_one(self):
        assert fleiss_kappa([[4, 0, 0, 0], [0, 4, 0, 0], [0, 0, 0, 4]]) == 1.0
        assert fleiss_kappa([[3, 0], [3, 0]]) == 1.0

    def test_opposite_pairs(self):
        assert fleiss_kappa([[1, 1], [1, 1]]) == pytest.approx(-1.0, abs=1e-9)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            m = random_matrix(rng, int(rng.integers(2, 13)), int(rng.integers(2, 7)))
            k = fleiss_kappa(m)
            assert k == pytest.approx(brute_force_kappa(m), abs=1e-9)
            assert -1.0 <= k <= 1.0

    def test_rater_permutation_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n_items, n_raters = 6, 5
            votes = rng.integers(0, 4, (n_items, n_raters))
            perm = votes[:, rng.permutation(n_raters)]
            as_matrix = lambda v: np.array([np.bincount(row, minlength=4) for row in v])
            assert fleiss_kappa(as_matrix(votes)) == fleiss_kappa(as_matrix(perm))

    def test_unanimous_item_does_not_lower_kappa(self):
        rng = np.random.default_rng(9)
        checked = 0
        for _ in range(300):
            n_raters = int(rng.integers(2, 7))
            m = random_matrix(rng, int(rng.integers(2, 10)), n_raters)
            k = fleiss_kappa(m)
            if k >= 1.0:
                continue
            for c in range(4):
                extra = np.zeros((1, 4), dtype=int)
                extra[0, c] = n_raters
                assert fleiss_kappa(np.vstack([m, extra])) >= k - 1e-12
            checked += 1
        assert checked > 200

    @pytest.mark.parametrize(
        "matrix", [[[2, 0], [1, 0]], [[1, 1]], [[1, 0], [1, 0]], [[-1, 3], [1, 1]], [1, 2, 3]]
    )
    def test_invalid(self, matrix):
        with pytest.raises(ValueError):
            fleiss_kappa(matrix)


class TestMajority:
    def test_examples(self):
        assert majority_label([P, P, N, U]) is P
        assert majority_label([P, P, N, N]) is None
        assert majority_label([X]) is X
        with pytest.raises(ValueError):
            majority_label([])

    def test_order_invariance(self):
        votes = [P, N, N, U, N]
        for perm in itertools.permutations(votes):
            assert majority_label(list(perm)) is N

    def test_ground_truth_drops_ties_and_none(self):
        ann = AnnotationSet(
            {
                "a": {"r1": P, "r2": P, "r3": N, "r4": U},
                "b": {"r1": P, "r2": P, "r3": N, "r4": N},
                "c": {"r1": X, "r2": X, "r3": X, "r4": P},
                "d": {"r1": U, "r2": U, "r3": U, "r4": P},
            }
        )
        truth = ground_truth(ann)
        assert dict(truth.labels) == {"a": P, "d": U}
        assert truth.distribution() == {"positive": 1, "negative": 0, "neutral": 1}
        assert dict(truth.restricted([P, N]).labels) == {"a": P}


class TestLoad:
    def write(self, tmp_path, body):
        p = tmp_path / "a.csv"
        p.write_text("doc_id,annotator_id,label\n" + body)
        return p

    def test_four_votes(self, tmp_path):
        p = self.write(tmp_path, "".join(f"d1,r{i},positive\n" for i in range(4)))
        ann = load_annotations(p)
        assert len(ann) == 1 and len(ann.votes("d1")) == 4
        assert ann.annotators() == ["r0", "r1", "r2", "r3"]

    def test_empty(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("")
        assert len(load_annotations(p)) == 0

    def test_duplicate_pair(self, tmp_path):
        p = self.write(tmp_path, "d1,r1,positive\nd1,r1,negative\n")
        with pytest.raises(ValueError, match="duplicate"):
            load_annotations(p)

    def test_unknown_label(self, tmp_path):
        p = self.write(tmp_path, "d1,r1,happy\n")
        with pytest.raises(ValueError):
            load_annotations(p)

    def test_unknown_doc(self, tmp_path):
        p = self.write(tmp_path, "d9,r1,positive\n")
        with pytest.raises(ValueError, match="unknown document"):
            load_annotations(p, known_ids=["d1"])

    def test_vote_matrix_and_roundtrip(self, tmp_path):
        p = self.write(tmp_path, "d2,r1,none\nd2,r2,none\nd1,r1,positive\nd1,r2,neutral\n")
        docs, m = vote_matrix(load_annotations(p))
        assert docs == ["d1", "d2"]
        assert m.tolist() == [[1, 0, 1, 0], [0, 0, 0, 2]]
        truth = GroundTruth({"d1": P, "d3": N})
        out = tmp_path / "gt.json"
        write_ground_truth(truth, out, {"fleiss_kappa": 0.5})
        data = json.loads(out.read_text())
        assert GroundTruth.from_json(data["labels"]) == truth and data["fleiss_kappa"] == 0.5
