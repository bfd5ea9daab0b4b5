"""Gradient boosted decision trees for binary clause classification.

Second-order boosting with the logistic loss and exact greedy split
finding over sparse, non-negative count vectors.  An absent index means
the value 0.  Trees route left iff ``value < threshold``.

Per node with gradient sum G and hessian sum H:

    leaf value = -eta * G / (H + lambda)
    split gain = 1/2 [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .features import SparseVector

MODEL_VERSION = 1
# Split gains within this relative distance of the best are ties.
GAIN_TIE_RTOL = 1e-9
MIN_SPLIT_GAIN = 1e-12


@dataclass(frozen=True)
class TrainParams:
    num_trees: int = 200
    max_depth: int = 9
    learning_rate: float = 0.3
    l2_lambda: float = 1.0
    min_examples_per_leaf: int = 1
    gamma: float = 0.0
    positive_weight: float = 1.0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.l2_lambda < 0 or self.gamma < 0:
            raise ValueError("l2_lambda and gamma must be non-negative")
        if self.min_examples_per_leaf < 1:
            raise ValueError("min_examples_per_leaf must be positive")
        if self.positive_weight <= 0:
            raise ValueError("positive_weight must be positive")


@dataclass
class TrainReport:
    losses: List[float]
    training_error: float
    wall_time: float


class Tree:
    """A decision tree in flat array form.  Node 0 is the root; a leaf has
    ``feature == -1``."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = list(feature)
        self.threshold = list(threshold)
        self.left = list(left)
        self.right = list(right)
        self.value = list(value)

    @classmethod
    def leaf(cls, value: float) -> "Tree":
        return cls([-1], [0.0], [-1], [-1], [float(value)])

    def __len__(self) -> int:
        return len(self.feature)

    def evaluate(self, entries: dict) -> float:
        i = 0
        feature, threshold = self.feature, self.threshold
        while feature[i] >= 0:
            if entries.get(feature[i], 0) < threshold[i]:
                i = self.left[i]
            else:
                i = self.right[i]
        return self.value[i]

    def depth(self, i: int = 0) -> int:
        if self.feature[i] < 0:
            return 0
        return 1 + max(self.depth(self.left[i]), self.depth(self.right[i]))

    def to_json(self, i: int = 0) -> dict:
        if self.feature[i] < 0:
            return {"leaf": self.value[i]}
        return {"f": self.feature[i], "t": self.threshold[i],
                "l": self.to_json(self.left[i]), "r": self.to_json(self.right[i])}

    @classmethod
    def from_json(cls, node: dict) -> "Tree":
        feature, threshold, left, right, value = [], [], [], [], []

        def add(n) -> int:
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "leaf" in n:
                value[i] = float(n["leaf"])
                return i
            try:
                feature[i] = int(n["f"])
                threshold[i] = float(n["t"])
                left[i] = add(n["l"])
                right[i] = add(n["r"])
            except (KeyError, TypeError) as e:
                raise ValueError(f"malformed tree node: {e}") from None
            return i

        add(node)
        return cls(feature, threshold, left, right, value)


@dataclass
class Ensemble:
    trees: List[Tree] = field(default_factory=list)
    base_margin: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._flat = None

    @property
    def num_features(self) -> int:
        return int(self.meta.get("num_features", 0))

    def _check(self, v: SparseVector) -> None:
        n = self.num_features
        if n and v.dimension != n:
            raise ValueError(f"vector dimension {v.dimension} does not match model ({n})")

    def margin(self, v: SparseVector) -> float:
        self._check(v)
        m = self.base_margin
        entries = v.entries
        for t in self.trees:
            m += t.evaluate(entries)
        return m

    def probability(self, v: SparseVector) -> float:
        return sigmoid(self.margin(v))

    def margins(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        """Batch margins; bit-identical to :meth:`margin` per vector."""
        if not vectors:
            return np.zeros(0)
        for v in vectors:
            self._check(v)
        if not self.trees:
            return np.full(len(vectors), self.base_margin)
        feat, thr, left, right, value, used, depth = self._flatten()
        col = {f: j for j, f in enumerate(used)}
        X = np.zeros((len(vectors), len(used) + 1))
        for b, v in enumerate(vectors):
            for i, x in v.entries.items():
                j = col.get(i)
                if j is not None:
                    X[b, j] = x
        T = len(self.trees)
        node = np.zeros((len(vectors), T), dtype=np.int64)
        tix = np.arange(T)
        rows = np.arange(len(vectors))[:, None]
        for _ in range(depth):
            f = feat[tix, node]
            go_left = X[rows, f] < thr[tix, node]
            node = np.where(go_left, left[tix, node], right[tix, node])
        leaves = value[tix, node]
        acc = np.concatenate([np.full((len(vectors), 1), self.base_margin), leaves], axis=1)
        return np.cumsum(acc, axis=1)[:, -1]

    def probabilities(self, vectors: Sequence[SparseVector]) -> np.ndarray:
        return sigmoid(self.margins(vectors))

    def _flatten(self):
        if self._flat is not None:
            return self._flat
        used = sorted({f for t in self.trees for f in t.feature if f >= 0})
        col = {f: j for j, f in enumerate(used)}
        dummy = len(used)  # always-zero column used by leaves
        M = max(len(t) for t in self.trees)
        T = len(self.trees)
        feat = np.full((T, M), dummy, dtype=np.int64)
        thr = np.full((T, M), np.inf)
        left = np.zeros((T, M), dtype=np.int64)
        right = np.zeros((T, M), dtype=np.int64)
        value = np.zeros((T, M))
        for k, t in enumerate(self.trees):
            for i in range(len(t)):
                if t.feature[i] >= 0:
                    feat[k, i] = col[t.feature[i]]
                    thr[k, i] = t.threshold[i]
                    left[k, i] = t.left[i]
                    right[k, i] = t.right[i]
                else:
                    left[k, i] = right[k, i] = i
                    value[k, i] = t.value[i]
        depth = max(t.depth() for t in self.trees)
        self._flat = (feat, thr, left, right, value, used, depth)
        return self._flat

    def tree_margins(self, v: SparseVector) -> List[float]:
        """Per-tree leaf contributions (without the base margin)."""
        return [t.evaluate(v.entries) for t in self.trees]


def sigmoid(x):
    if isinstance(x, np.ndarray):
        out = np.empty_like(x, dtype=float)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        e = np.exp(x[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def clause_weight(prob: float, scaled: bool = False) -> float:
    """Weight of a clause given its positive-class probability.

    Binary mode: 1.0 for ``prob >= 0.5``, else 10.0.  Scaled mode grows
    linearly from 1.0 (prob 1) to 10.0 (prob 0).
    """
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability {prob} outside [0, 1]")
    if scaled:
        return 1.0 + 9.0 * (1.0 - prob)
    return 1.0 if prob >= 0.5 else 10.0


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


class _Columns:
    """Non-zero entries of the training matrix, sorted by (feature, value)."""

    def __init__(self, vectors: Sequence[SparseVector]):
        rows, cols, vals = [], [], []
        for r, v in enumerate(vectors):
            for i, x in v.entries.items():
                if x < 0:
                    raise ValueError("feature values must be non-negative")
                if x:
                    rows.append(r)
                    cols.append(i)
                    vals.append(x)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        order = np.lexsort((rows, vals, cols))
        self.row = rows[order]
        self.col = cols[order]
        self.val = vals[order]
        self.n = len(vectors)


def _logloss(margin: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    # log(1 + e^-m) for positives, log(1 + e^m) for negatives
    l = np.where(y > 0, np.logaddexp(0.0, -margin), np.logaddexp(0.0, margin))
    return float(np.sum(w * l) / np.sum(w))


def train(data: Sequence[Tuple[SparseVector, int]], params: TrainParams = TrainParams(),
          hash_base: Optional[int] = None, progress=None) -> Tuple[Ensemble, TrainReport]:
    """Fit a boosted ensemble on ``(vector, label)`` pairs."""
    start = time.perf_counter()
    if not data:
        raise ValueError("no training data")
    dims = {v.dimension for v, _ in data}
    if len(dims) != 1:
        raise ValueError(f"training vectors have mixed dimensions {sorted(dims)}")
    dim = dims.pop()
    y = np.array([int(l) for _, l in data], dtype=float)
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("training data must contain both labels")
    w = np.where(y > 0, params.positive_weight, 1.0)
    cols = _Columns([v for v, _ in data])

    margin = np.zeros(len(y))
    trees: List[Tree] = []
    losses: List[float] = []
    for k in range(params.num_trees):
        p = sigmoid(margin)
        grad = (p - y) * w
        hess = p * (1.0 - p) * w
        tree, leaf_of_row = _grow_tree(cols, grad, hess, params)
        trees.append(tree)
        margin = margin + np.asarray(tree.value)[leaf_of_row]
        losses.append(_logloss(margin, y, w))
        if progress:
            progress(k, losses[-1])
    error = float(np.mean((margin >= 0) != (y > 0)))
    meta = {
        "hash_base": hash_base if hash_base is not None else dim // 2,
        "num_features": dim,
        "max_depth": params.max_depth,
        "learning_rate": params.learning_rate,
        "num_trees": params.num_trees,
        "l2_lambda": params.l2_lambda,
        "gamma": params.gamma,
        "min_examples_per_leaf": params.min_examples_per_leaf,
        "positive_weight": params.positive_weight,
    }
    report = TrainReport(losses, error, time.perf_counter() - start)
    return Ensemble(trees, 0.0, meta), report


def _leaf_value(G: float, H: float, params: TrainParams) -> float:
    return -params.learning_rate * G / (H + params.l2_lambda)


def _grow_tree(cols: _Columns, grad: np.ndarray, hess: np.ndarray, params: TrainParams):
    n = cols.n
    node_of_row = np.zeros(n, dtype=np.int64)
    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    G = [float(np.sum(grad))]
    H = [float(np.sum(hess))]
    count = [n]
    frontier = [0]
    e_row, e_col, e_val = cols.row, cols.col, cols.val
    for _ in range(params.max_depth):
        frontier = [i for i in frontier if count[i] >= 2 * params.min_examples_per_leaf]
        if not frontier:
            break
        splits = _best_splits(frontier, node_of_row, e_row, e_col, e_val, grad, hess,
                              G, H, count, params)
        if not splits:
            break
        split_feat = np.full(len(feature), -1, dtype=np.int64)
        split_thr = np.zeros(len(feature))
        new_frontier = []
        for nid, (f, t) in sorted(splits.items()):
            split_feat[nid] = f
            split_thr[nid] = t
            feature[nid] = f
            threshold[nid] = t
            for side in ("l", "r"):
                j = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                G.append(0.0)
                H.append(0.0)
                count.append(0)
                if side == "l":
                    left[nid] = j
                else:
                    right[nid] = j
                new_frontier.append(j)
        # route rows of split nodes
        sf = split_feat[node_of_row]
        in_split = sf >= 0
        rowval = np.zeros(n)
        m = split_feat[node_of_row[e_row]] == e_col
        rowval[e_row[m]] = e_val[m]
        idx = np.nonzero(in_split)[0]
        parents = node_of_row[idx]
        go_left = rowval[idx] < split_thr[parents]
        lt = np.asarray(left)[parents]
        rt = np.asarray(right)[parents]
        node_of_row[idx] = np.where(go_left, lt, rt)
        nn = len(feature)
        sg = np.bincount(node_of_row, weights=grad, minlength=nn)
        sh = np.bincount(node_of_row, weights=hess, minlength=nn)
        sc = np.bincount(node_of_row, minlength=nn)
        for j in new_frontier:
            G[j] = float(sg[j])
            H[j] = float(sh[j])
            count[j] = int(sc[j])
        frontier = new_frontier
    value = [0.0] * len(feature)
    for i in range(len(feature)):
        if feature[i] < 0:
            value[i] = _leaf_value(G[i], H[i], params)
    return Tree(feature, threshold, left, right, value), node_of_row


def _best_splits(frontier, node_of_row, e_row, e_col, e_val, grad, hess, G, H, count, params):
    """Best (feature, threshold) per frontier node, or none if no gain."""
    lam, gamma, minleaf = params.l2_lambda, params.gamma, params.min_examples_per_leaf
    nnodes = len(G)
    active = np.zeros(nnodes, dtype=bool)
    active[frontier] = True
    enode = node_of_row[e_row]
    keep = active[enode]
    if not np.any(keep):
        return {}
    nd = enode[keep]
    f = e_col[keep]
    v = e_val[keep]
    g = grad[e_row[keep]]
    h = hess[e_row[keep]]
    # entries are (feature, value)-sorted; a stable sort on node keeps that
    order = np.argsort(nd, kind="stable")
    nd, f, v, g, h = nd[order], f[order], v[order], g[order], h[order]

    # (node, feature, value) groups
    m = len(nd)
    new_val = np.ones(m, dtype=bool)
    new_val[1:] = (nd[1:] != nd[:-1]) | (f[1:] != f[:-1]) | (v[1:] != v[:-1])
    vstart = np.nonzero(new_val)[0]
    vg = np.add.reduceat(g, vstart)
    vh = np.add.reduceat(h, vstart)
    vc = np.diff(np.append(vstart, m))
    vnode = nd[vstart]
    vfeat = f[vstart]
    vval = v[vstart]

    # (node, feature) groups over the value groups
    k = len(vstart)
    new_pair = np.ones(k, dtype=bool)
    new_pair[1:] = (vnode[1:] != vnode[:-1]) | (vfeat[1:] != vfeat[:-1])
    pstart = np.nonzero(new_pair)[0]
    pair_id = np.cumsum(new_pair) - 1
    pg = np.add.reduceat(vg, pstart)
    ph = np.add.reduceat(vh, pstart)
    pc = np.add.reduceat(vc, pstart)
    pnode = vnode[pstart]

    Gn = np.asarray(G)[pnode]
    Hn = np.asarray(H)[pnode]
    Cn = np.asarray(count)[pnode]
    zc = Cn - pc
    has_zero = zc > 0
    zg = np.where(has_zero, Gn - pg, 0.0)
    zh = np.where(has_zero, Hn - ph, 0.0)

    # within-pair running sums of the positive-value groups
    cg = np.cumsum(vg)
    ch = np.cumsum(vh)
    cc = np.cumsum(vc)
    off = pstart[pair_id] - 1
    base_g = np.where(off >= 0, cg[np.maximum(off, 0)], 0.0)
    base_h = np.where(off >= 0, ch[np.maximum(off, 0)], 0.0)
    base_c = np.where(off >= 0, cc[np.maximum(off, 0)], 0)
    run_g = cg - base_g
    run_h = ch - base_h
    run_c = cc - base_c

    # candidate A: between 0 and the first positive value of a pair
    a_pair = np.nonzero(has_zero)[0]
    a_idx = pstart[a_pair]
    a_node = pnode[a_pair]
    a_feat = vfeat[a_idx]
    a_thr = vval[a_idx] / 2.0
    a_gl, a_hl, a_cl = zg[a_pair], zh[a_pair], zc[a_pair]
    # candidate B: between consecutive positive values of a pair
    last_in_pair = np.ones(k, dtype=bool)
    last_in_pair[:-1] = new_pair[1:]
    b_idx = np.nonzero(~last_in_pair)[0]
    b_pair = pair_id[b_idx]
    b_node = vnode[b_idx]
    b_feat = vfeat[b_idx]
    b_thr = (vval[b_idx] + vval[b_idx + 1]) / 2.0
    b_gl = zg[b_pair] + run_g[b_idx]
    b_hl = zh[b_pair] + run_h[b_idx]
    b_cl = zc[b_pair] + run_c[b_idx]

    c_node = np.concatenate([a_node, b_node])
    c_feat = np.concatenate([a_feat, b_feat])
    c_thr = np.concatenate([a_thr, b_thr])
    gl = np.concatenate([a_gl, b_gl])
    hl = np.concatenate([a_hl, b_hl])
    cl = np.concatenate([a_cl, b_cl])
    if len(c_node) == 0:
        return {}
    Gt = np.asarray(G)[c_node]
    Ht = np.asarray(H)[c_node]
    Ct = np.asarray(count)[c_node]
    gr, hr, cr = Gt - gl, Ht - hl, Ct - cl
    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - Gt * Gt / (Ht + lam)) - gamma
    ok = (cl >= minleaf) & (cr >= minleaf) & (gain > MIN_SPLIT_GAIN)
    if not np.any(ok):
        return {}
    c_node, c_feat, c_thr, gain = c_node[ok], c_feat[ok], c_thr[ok], gain[ok]
    return _pick(c_node, c_feat, c_thr, gain)


def _pick(c_node, c_feat, c_thr, gain) -> dict:
    """Per node: max gain, ties (relative tolerance) broken by lowest
    feature then lowest threshold."""
    order = np.lexsort((gain, c_node))
    c_node, c_feat, c_thr, gain = c_node[order], c_feat[order], c_thr[order], gain[order]
    starts = np.nonzero(np.r_[True, c_node[1:] != c_node[:-1]])[0]
    best = np.maximum.reduceat(gain, starts)
    group = np.cumsum(np.r_[True, c_node[1:] != c_node[:-1]]) - 1
    tied = gain >= best[group] - GAIN_TIE_RTOL * np.maximum(1.0, np.abs(best[group]))
    c_node, c_feat, c_thr = c_node[tied], c_feat[tied], c_thr[tied]
    order = np.lexsort((c_thr, c_feat, c_node))
    c_node, c_feat, c_thr = c_node[order], c_feat[order], c_thr[order]
    first = np.r_[True, c_node[1:] != c_node[:-1]]
    return {int(nid): (int(f), float(t)) for nid, f, t in
            zip(c_node[first], c_feat[first], c_thr[first])}


def split_gain(gl, hl, gr, hr, params: TrainParams) -> float:
    lam = params.l2_lambda
    g, h = gl + gr, hl + hr
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - g * g / (h + lam)) - params.gamma


# --------------------------------------------------------------------------
# Model files
# --------------------------------------------------------------------------


def model_to_json(m: Ensemble) -> str:
    doc = {
        "version": MODEL_VERSION,
        "meta": m.meta,
        "base_margin": m.base_margin,
        "trees": [t.to_json() for t in m.trees],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def model_from_json(text: str) -> Ensemble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed model file: {e}") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise ValueError("malformed model file: missing version")
    if doc["version"] != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc['version']!r}")
    try:
        trees = [Tree.from_json(t) for t in doc["trees"]]
        return Ensemble(trees, float(doc["base_margin"]), dict(doc["meta"]))
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed model file: {e}") from None


def save_model(m: Ensemble, path) -> None:
    Path(path).write_text(model_to_json(m))


def load_model(path) -> Ensemble:
    return model_from_json(Path(path).read_text())
