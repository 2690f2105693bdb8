"""Second-order gradient boosting of regression trees for binary labels.

Features are sparse: an index absent from a ``SparseVector`` (or stored with
weight 0) is *missing*, and each split learns which child missing values
follow.  Split search is exact and greedy over the sorted present values of
every feature, evaluated for all nodes of a tree level at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .labels import Label
from .vectorizer import SparseVector

__all__ = [
    "BoostParams",
    "Leaf",
    "Split",
    "Ensemble",
    "train",
    "predict_margin",
    "predict_proba",
    "predict_label",
    "feature_importance",
    "split_train_test",
    "cross_validate",
    "logistic_loss",
    "grad_hess",
    "sigmoid",
]


@dataclass(frozen=True)
class BoostParams:
    n_rounds: int = 200
    max_depth: int = 3
    learning_rate: float = 0.3
    l2_lambda: float = 1.0
    gamma_min_gain: float = 0.0
    min_child_weight: float = 1.0
    base_score: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.l2_lambda < 0 or self.gamma_min_gain < 0 or self.min_child_weight < 0:
            raise ValueError("l2_lambda, gamma_min_gain and min_child_weight must be >= 0")
        if not 0 < self.base_score < 1:
            raise ValueError("base_score must be in (0, 1)")


@dataclass(frozen=True)
class Leaf:
    weight: float


@dataclass(frozen=True)
class Split:
    """Present values ``< threshold`` go left; missing values follow ``default_left``."""

    feature: int
    threshold: float
    default_left: bool
    left: "TreeNode"
    right: "TreeNode"
    gain: float = 0.0


TreeNode = Union[Leaf, Split]


def sigmoid(m: float) -> float:
    if m >= 0:
        return 1.0 / (1.0 + math.exp(-m))
    e = math.exp(m)
    return e / (1.0 + e)


def _sigmoid_array(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    pos = m >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-m[pos]))
    e = np.exp(m[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_loss(margin: float, y: int) -> float:
    """``-log p(y | margin)`` computed without cancellation."""
    z = -margin if y == 1 else margin
    return max(z, 0.0) + math.log1p(math.exp(-abs(z)))


def grad_hess(margin: float, y: int) -> tuple[float, float]:
    p = sigmoid(margin)
    return p - y, p * (1.0 - p)


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _tree_to_json(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "default_left": node.default_left,
        "gain": node.gain,
        "left": _tree_to_json(node.left),
        "right": _tree_to_json(node.right),
    }


def _tree_from_json(data: dict) -> TreeNode:
    if "leaf" in data:
        return Leaf(float(data["leaf"]))
    return Split(
        int(data["feature"]),
        float(data["threshold"]),
        bool(data["default_left"]),
        _tree_from_json(data["left"]),
        _tree_from_json(data["right"]),
        float(data.get("gain", 0.0)),
    )


def _max_feature(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return -1
    return max(node.feature, _max_feature(node.left), _max_feature(node.right))


@dataclass(frozen=True, eq=False)
class Ensemble:
    trees: tuple[TreeNode, ...]
    params: BoostParams
    dimension: int
    gain_by_feature: tuple[float, ...]
    loss_trace: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.gain_by_feature) != self.dimension:
            raise ValueError("gain_by_feature length must equal dimension")
        for tree in self.trees:
            if _max_feature(tree) >= self.dimension:
                raise ValueError("tree references a feature beyond the model dimension")

    @property
    def base_margin(self) -> float:
        return _logit(self.params.base_score)

    def to_json(self) -> dict:
        return {
            "params": asdict(self.params),
            "base_score": self.params.base_score,
            "dimension": self.dimension,
            "trees": [_tree_to_json(t) for t in self.trees],
            "gain_by_feature": list(self.gain_by_feature),
            "loss_trace": list(self.loss_trace),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Ensemble":
        return cls(
            tuple(_tree_from_json(t) for t in data["trees"]),
            BoostParams(**data["params"]),
            int(data["dimension"]),
            tuple(float(x) for x in data["gain_by_feature"]),
            tuple(float(x) for x in data.get("loss_trace", ())),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Ensemble":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


class _Columns:
    """Present (nonzero) entries sorted by (feature, value, row)."""

    def __init__(self, features: Sequence[SparseVector], dimension: int):
        feats, vals, rows = [], [], []
        for i, x in enumerate(features):
            if x.dimension != dimension:
                raise ValueError(f"sample {i} has dimension {x.dimension}, expected {dimension}")
            for j, v in zip(x.indices, x.weights):
                if v != 0.0:
                    feats.append(j)
                    vals.append(v)
                    rows.append(i)
        feat = np.asarray(feats, dtype=np.int64)
        val = np.asarray(vals, dtype=float)
        row = np.asarray(rows, dtype=np.int64)
        order = np.lexsort((row, val, feat))
        self.feat, self.val, self.row = feat[order], val[order], row[order]
        bounds = np.searchsorted(self.feat, np.arange(dimension + 1))
        self._bounds = bounds

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self._bounds[j], self._bounds[j + 1]
        return self.row[lo:hi], self.val[lo:hi]


def _threshold_between(a: float, b: float) -> float:
    t = a + (b - a) / 2.0
    return t if a < t <= b else b


def _best_splits(cols: _Columns, pos: np.ndarray, n_nodes: int, g, h, params: BoostParams):
    """Best split per active node as ``(gain, feature, threshold, default_left)`` or None."""
    lam = params.l2_lambda
    active = pos >= 0
    Gn = np.bincount(pos[active], weights=g[active], minlength=n_nodes)
    Hn = np.bincount(pos[active], weights=h[active], minlength=n_nodes)
    Cn = np.bincount(pos[active], minlength=n_nodes).astype(float)
    best: list = [None] * n_nodes

    nd_all = pos[cols.row]
    sel = nd_all >= 0
    if not sel.any():
        return best
    f, v, r, nd = cols.feat[sel], cols.val[sel], cols.row[sel], nd_all[sel]
    key = f * n_nodes + nd
    order = np.argsort(key, kind="stable")
    f, v, r, nd, key = f[order], v[order], r[order], nd[order], key[order]
    gg, hh = g[r], h[r]

    m = key.size
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    ends = np.r_[starts[1:], m] - 1
    gid = np.repeat(np.arange(starts.size), np.diff(np.r_[starts, m]))

    cg, ch = np.cumsum(gg), np.cumsum(hh)
    cg0 = np.r_[0.0, cg][starts]
    ch0 = np.r_[0.0, ch][starts]
    cg_in = cg - cg0[gid]
    ch_in = ch - ch0[gid]
    cc_in = np.arange(m) - starts[gid] + 1.0

    gnode = nd[starts]
    G, H, C = Gn[gnode], Hn[gnode], Cn[gnode]
    GM = G - cg_in[ends]
    HM = H - ch_in[ends]
    CM = C - cc_in[ends]

    # (a) present values split at a value change; missing left or right
    inner = np.flatnonzero((np.r_[key[1:] == key[:-1], False]) & (np.r_[v[1:] != v[:-1], False]))
    ig = gid[inner]
    cand_node = [np.repeat(nd[inner], 2)]
    cand_feat = [np.repeat(f[inner], 2)]
    cand_rank = [np.repeat(inner - starts[ig], 2)]
    cand_dir = [np.tile([1, 0], inner.size)]  # 1 = missing goes left
    GL = np.column_stack([cg_in[inner] + GM[ig], cg_in[inner]]).ravel()
    HL = np.column_stack([ch_in[inner] + HM[ig], ch_in[inner]]).ravel()
    CL = np.column_stack([cc_in[inner] + CM[ig], cc_in[inner]]).ravel()
    thr = np.repeat([_threshold_between(v[i], v[i + 1]) for i in inner], 2) if inner.size else np.empty(0)
    # (b) missing vs present: all present values go right
    cand_node.append(gnode)
    cand_feat.append(f[starts])
    cand_rank.append(np.full(starts.size, -1))
    cand_dir.append(np.ones(starts.size, dtype=int))
    GL = np.r_[GL, GM]
    HL = np.r_[HL, HM]
    CL = np.r_[CL, CM]
    thr = np.r_[thr, v[starts]]

    node = np.concatenate(cand_node)
    feat = np.concatenate(cand_feat)
    rank = np.concatenate(cand_rank)
    dirn = np.concatenate(cand_dir)
    Gt, Ht, Ct = Gn[node], Hn[node], Cn[node]
    GR, HR, CR = Gt - GL, Ht - HL, Ct - CL
    gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - Gt * Gt / (Ht + lam))
    ok = (
        (CL > 0)
        & (CR > 0)
        & (HL >= params.min_child_weight)
        & (HR >= params.min_child_weight)
        & (gain > params.gamma_min_gain)
    )
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return best
    # per node: highest gain, then lowest feature, lowest split rank, missing-left first
    order = np.lexsort((-dirn[idx], rank[idx], feat[idx], -gain[idx], node[idx]))
    idx = idx[order]
    first = np.r_[True, node[idx][1:] != node[idx][:-1]]
    for i in idx[first]:
        best[int(node[i])] = (float(gain[i]), int(feat[i]), float(thr[i]), bool(dirn[i]))
    return best


def _grow_tree(cols: _Columns, g: np.ndarray, h: np.ndarray, params: BoostParams, gain_acc: np.ndarray):
    n = g.size
    lam = params.l2_lambda
    pos = np.zeros(n, dtype=np.int64)
    # node specs for the current level: list of placeholders filled bottom-up
    level: list[dict] = [{}]
    root = level[0]
    leaf_of = np.full(n, -1, dtype=np.int64)
    leaf_weights: list[float] = []
    for depth in range(params.max_depth + 1):
        n_nodes = len(level)
        splits = (
            _best_splits(cols, pos, n_nodes, g, h, params)
            if depth < params.max_depth
            else [None] * n_nodes
        )
        active = pos >= 0
        Gn = np.bincount(pos[active], weights=g[active], minlength=n_nodes)
        Hn = np.bincount(pos[active], weights=h[active], minlength=n_nodes)
        new_pos = np.full(n, -1, dtype=np.int64)
        next_level: list[dict] = []
        for k, spec in enumerate(level):
            members = pos == k
            if splits[k] is None:
                w = float(-Gn[k] / (Hn[k] + lam))
                spec["leaf"] = w
                leaf_of[members] = len(leaf_weights)
                leaf_weights.append(w)
                continue
            gain, feat, thr, default_left = splits[k]
            gain_acc[feat] += gain
            rows, vals = cols.column(feat)
            go_left = np.full(n, default_left)
            go_left[rows] = vals < thr
            left, right = {}, {}
            spec.update(feature=feat, threshold=thr, default_left=default_left, gain=gain, left=left, right=right)
            new_pos[members & go_left] = len(next_level)
            next_level.append(left)
            new_pos[members & ~go_left] = len(next_level)
            next_level.append(right)
        if not next_level:
            break
        pos, level = new_pos, next_level
    return _tree_from_json(root), np.asarray(leaf_weights)[leaf_of]


def train(features: Sequence[SparseVector], labels: Sequence[int], params: BoostParams | None = None) -> Ensemble:
    params = params or BoostParams()
    if len(features) != len(labels):
        raise ValueError("features and labels differ in length")
    if len(features) < 2:
        raise ValueError("need at least two samples")
    y = np.asarray(labels, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if np.all(y == y[0]):
        raise ValueError("training labels contain a single class")
    dimension = features[0].dimension
    cols = _Columns(features, dimension)

    base = _logit(params.base_score)
    leaf_sum = np.zeros(y.size)
    gain_acc = np.zeros(dimension)
    trees: list[TreeNode] = []
    margin = base + params.learning_rate * leaf_sum
    losses = [_mean_loss(margin, y)]
    for _ in range(params.n_rounds):
        p = _sigmoid_array(margin)
        g = p - y
        h = p * (1.0 - p)
        tree, w = _grow_tree(cols, g, h, params, gain_acc)
        trees.append(tree)
        leaf_sum += w
        margin = base + params.learning_rate * leaf_sum
        losses.append(_mean_loss(margin, y))
    return Ensemble(tuple(trees), params, dimension, tuple(float(x) for x in gain_acc), tuple(losses))


def _mean_loss(margin: np.ndarray, y: np.ndarray) -> float:
    z = np.where(y == 1, -margin, margin)
    return float(np.mean(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))))


def _leaf_weight(node: TreeNode, x: dict[int, float]) -> float:
    while isinstance(node, Split):
        v = x.get(node.feature)
        if v is None:
            node = node.left if node.default_left else node.right
        else:
            node = node.left if v < node.threshold else node.right
    return node.weight


def predict_margin(x: SparseVector, model: Ensemble) -> float:
    if x.dimension != model.dimension:
        raise ValueError(f"input dimension {x.dimension} != model dimension {model.dimension}")
    present = {j: v for j, v in zip(x.indices, x.weights) if v != 0.0}
    total = 0.0
    for tree in model.trees:
        total += _leaf_weight(tree, present)
    return model.base_margin + model.params.learning_rate * total


def predict_proba(x: SparseVector, model: Ensemble) -> float:
    return sigmoid(predict_margin(x, model))


def predict_label(x: SparseVector, model: Ensemble, threshold: float = 0.5) -> Label:
    """Class 1 is Positive; a probability exactly at ``threshold`` is Positive."""
    return Label.POSITIVE if predict_proba(x, model) >= threshold else Label.NEGATIVE


def feature_importance(model: Ensemble, top_n: int | None = None, terms: Sequence[str] | None = None) -> list[tuple[str, float]]:
    gains = np.asarray(model.gain_by_feature)
    used = np.flatnonzero(gains > 0)
    order = used[np.lexsort((used, -gains[used]))]
    if top_n is not None:
        order = order[:top_n]
    name = (lambda j: terms[j]) if terms is not None else str
    return [(name(int(j)), float(gains[j])) for j in order]


def split_train_test(n: int, test_fraction: float, labels: Sequence[int], seed: int = 0) -> tuple[list[int], list[int]]:
    """Stratified, seeded split of ``range(n)``.

    Each class contributes ``round(size * test_fraction)`` test samples,
    clamped so that both sides keep at least one member of the class.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    if len(labels) != n:
        raise ValueError("labels length must equal n")
    rng = np.random.default_rng(seed)
    by_class: dict = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for lab in sorted(by_class, key=str):
        members = np.asarray(by_class[lab])
        if members.size < 2:
            raise ValueError(f"class {lab!r} has fewer than 2 members")
        perm = members[rng.permutation(members.size)]
        n_test = min(max(int(round(members.size * test_fraction)), 1), members.size - 1)
        test_idx.extend(int(i) for i in perm[:n_test])
        train_idx.extend(int(i) for i in perm[n_test:])
    return sorted(train_idx), sorted(test_idx)


def cross_validate(
    features: Sequence[SparseVector],
    labels: Sequence[int],
    params: BoostParams | None = None,
    n_splits: int = 5,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> dict:
    """Held-out accuracy over ``n_splits`` reseeded stratified splits."""
    params = params or BoostParams()
    accs = []
    for k in range(n_splits):
        tr, te = split_train_test(len(features), test_fraction, labels, seed + k)
        model = train([features[i] for i in tr], [labels[i] for i in tr], params)
        correct = sum(
            (predict_label(features[i], model) is Label.POSITIVE) == (labels[i] == 1) for i in te
        )
        accs.append(correct / len(te))
    arr = np.asarray(accs)
    return {"accuracies": accs, "mean": float(arr.mean()), "std": float(arr.std(ddof=0))}
