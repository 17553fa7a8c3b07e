"""Binary classifiers implemented from first principles.

All models share conventions chosen for reproducibility: deterministic
tie-breaking (first index / class 0), explicit seeds wherever randomness
exists, and ``x <= threshold`` routing to the left branch of every tree.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabels


class ModelKind(enum.Enum):
    KNN = "knn"
    DECISION_TREE = "dt"
    RANDOM_FOREST = "rf"
    GRADIENT_BOOSTING = "gb"
    SVM = "svm"
    MLP = "mlp"


MODEL_KINDS_BY_NAME = {kind.value: kind for kind in ModelKind}


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    hyperparameters: dict = field(default_factory=dict)


def _check_labels(y: np.ndarray) -> None:
    if np.unique(y).size < 2:
        raise DegenerateLabels("training labels contain a single class")


def _majority(labels: np.ndarray) -> int:
    # ties resolve to class 0
    return int(np.sum(labels == 1) > np.sum(labels == 0))


# --- k-nearest neighbours -------------------------------------------------------


class KnnClassifier:
    """Majority vote of the k nearest training rows (Euclidean)."""

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = int(k)
        self._x: np.ndarray | None = None
        self._y: np.ndarray | None = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "KnnClassifier":
        _check_labels(y)
        self._x = np.asarray(x, dtype=float)
        self._y = np.asarray(y, dtype=int)
        return self

    def predict_row(self, row: np.ndarray) -> int:
        d = np.sum((self._x - row) ** 2, axis=1)
        order = np.argsort(d, kind="stable")[:min(self.k, d.size)]
        return _majority(self._y[order])

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.asarray([self.predict_row(r) for r in np.atleast_2d(x)])


# --- CART trees --------------------------------------------------------------------


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _gini_of_labels(labels: np.ndarray) -> float:
    return _gini(np.array([np.sum(labels == 0), np.sum(labels == 1)]))


def best_gini_split(x_col: np.ndarray, y: np.ndarray,
                    min_samples_leaf: int = 1):
    """Best (threshold, weighted impurity) for one feature, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; on impurity ties the lowest threshold wins.
    """
    order = np.argsort(x_col, kind="stable")
    xs, ys = x_col[order], y[order]
    n = xs.size
    ones = np.cumsum(ys == 1)
    zeros = np.cumsum(ys == 0)
    best = None
    for i in range(min_samples_leaf - 1, n - min_samples_leaf):
        if xs[i] == xs[i + 1]:
            continue
        n_left = i + 1
        left = np.array([zeros[i], ones[i]])
        right = np.array([zeros[-1] - zeros[i], ones[-1] - ones[i]])
        score = (n_left * _gini(left) + (n - n_left) * _gini(right)) / n
        if best is None or score < best[1] - 1e-15:
            best = ((xs[i] + xs[i + 1]) / 2.0, score)
    return best


def _best_sse_split(x_col: np.ndarray, r: np.ndarray,
                    min_samples_leaf: int = 1):
    order = np.argsort(x_col, kind="stable")
    xs, rs = x_col[order], r[order]
    n = xs.size
    csum = np.cumsum(rs)
    csum2 = np.cumsum(rs * rs)
    total, total2 = csum[-1], csum2[-1]
    best = None
    for i in range(min_samples_leaf - 1, n - min_samples_leaf):
        if xs[i] == xs[i + 1]:
            continue
        n_left = i + 1
        sse_left = csum2[i] - csum[i] ** 2 / n_left
        n_right = n - n_left
        sse_right = (total2 - csum2[i]) - (total - csum[i]) ** 2 / n_right
        score = sse_left + sse_right
        if best is None or score < best[1] - 1e-12:
            best = ((xs[i] + xs[i + 1]) / 2.0, score)
    return best


def _grow_tree(x, target, depth, max_depth, min_samples_leaf, splitter,
               node_score, leaf_value, feature_sampler=None) -> _TreeNode:
    node = _TreeNode()
    n, d = x.shape
    stop = (max_depth is not None and depth >= max_depth) \
        or n < 2 * min_samples_leaf or node_score(target) <= 0.0
    if not stop:
        features = feature_sampler(d) if feature_sampler else range(d)
        best = None
        for f in features:
            cand = splitter(x[:, f], target, min_samples_leaf)
            if cand is not None and (best is None or cand[1] < best[2] - 1e-15):
                best = (f, cand[0], cand[1])
        if best is not None and best[2] < node_score(target) - 1e-15:
            f, thr, _ = best
            mask = x[:, f] <= thr
            node.feature, node.threshold = int(f), float(thr)
            node.left = _grow_tree(x[mask], target[mask], depth + 1, max_depth,
                                   min_samples_leaf, splitter, node_score,
                                   leaf_value, feature_sampler)
            node.right = _grow_tree(x[~mask], target[~mask], depth + 1,
                                    max_depth, min_samples_leaf, splitter,
                                    node_score, leaf_value, feature_sampler)
            return node
    node.value = leaf_value(target)
    return node


def _tree_predict_row(node: _TreeNode, row: np.ndarray):
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.value


class DecisionTreeClassifier:
    """CART with Gini impurity and axis-aligned binary splits."""

    def __init__(self, max_depth: int | None = None, min_samples_leaf: int = 1):
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self._root: _TreeNode | None = None

    def fit(self, x, y) -> "DecisionTreeClassifier":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        _check_labels(y)
        self._root = _grow_tree(
            x, y, 0, self.max_depth, self.min_samples_leaf,
            best_gini_split, _gini_of_labels, _majority)
        return self

    @property
    def root(self) -> _TreeNode:
        return self._root

    def predict_row(self, row) -> int:
        return int(_tree_predict_row(self._root, np.asarray(row, dtype=float)))

    def predict(self, x) -> np.ndarray:
        return np.asarray([self.predict_row(r) for r in np.atleast_2d(x)])


class _RegressionTree:
    """SSE-split tree used as the gradient-boosting base learner."""

    def __init__(self, max_depth: int = 3, min_samples_leaf: int = 1):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self._root: _TreeNode | None = None

    def fit(self, x, r) -> "_RegressionTree":
        def sse(values):
            return float(np.sum((values - values.mean()) ** 2)) \
                if values.size else 0.0

        self._root = _grow_tree(
            np.asarray(x, dtype=float), np.asarray(r, dtype=float), 0,
            self.max_depth, self.min_samples_leaf,
            _best_sse_split, sse, lambda v: float(v.mean()))
        return self

    def leaves_for(self, x: np.ndarray) -> list[_TreeNode]:
        out = []
        for row in np.atleast_2d(x):
            node = self._root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold \
                    else node.right
            out.append(node)
        return out

    def predict(self, x) -> np.ndarray:
        return np.asarray([_tree_predict_row(self._root, row)
                           for row in np.atleast_2d(x)])


class RandomForestClassifier:
    """Bagged CART trees with sqrt(d) feature subsampling per split."""

    def __init__(self, n_estimators: int = 100, max_depth: int | None = None,
                 min_samples_leaf: int = 1, seed: int = 0):
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.seed = int(seed)
        self._trees: list[_TreeNode] = []

    def fit(self, x, y) -> "RandomForestClassifier":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        _check_labels(y)
        n, d = x.shape
        m = max(1, int(round(math.sqrt(d))))
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_estimators)
        self._trees = []
        for ss in seeds:
            rng = np.random.default_rng(ss)
            idx = rng.integers(0, n, n)
            xb, yb = x[idx], y[idx]

            def sampler(n_features, rng=rng):
                k = min(m, n_features)
                return sorted(rng.choice(n_features, size=k, replace=False))

            self._trees.append(_grow_tree(
                xb, yb, 0, self.max_depth, self.min_samples_leaf,
                best_gini_split, _gini_of_labels, _majority,
                feature_sampler=sampler))
        return self

    def predict_row(self, row) -> int:
        row = np.asarray(row, dtype=float)
        votes = sum(int(_tree_predict_row(t, row)) for t in self._trees)
        return int(votes > len(self._trees) - votes)

    def predict(self, x) -> np.ndarray:
        return np.asarray([self.predict_row(r) for r in np.atleast_2d(x)])


# --- gradient boosting ---------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class GradientBoostingClassifier:
    """Stage-wise shallow regression trees on the logistic loss.

    Each stage fits residuals ``y - p`` and applies a per-leaf Newton step
    ``sum(residual) / sum(p (1 - p))`` scaled by the learning rate.
    """

    def __init__(self, n_estimators: int = 100, learning_rate: float = 0.1,
                 max_depth: int = 3, min_samples_leaf: int = 1):
        self.n_estimators = int(n_estimators)
        self.learning_rate = float(learning_rate)
        self.max_depth = int(max_depth)
        self.min_samples_leaf = int(min_samples_leaf)
        self._trees: list[_RegressionTree] = []
        self._base_score = 0.0

    def fit(self, x, y) -> "GradientBoostingClassifier":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_labels(y.astype(int))
        p0 = min(max(float(y.mean()), 1e-9), 1.0 - 1e-9)
        self._base_score = math.log(p0 / (1.0 - p0))
        scores = np.full(y.size, self._base_score)
        self._trees = []
        for _ in range(self.n_estimators):
            p = _sigmoid(scores)
            residual = y - p
            hessian = p * (1.0 - p)
            tree = _RegressionTree(self.max_depth,
                                   self.min_samples_leaf).fit(x, residual)
            leaves = tree.leaves_for(x)
            # replace leaf means with Newton steps
            groups: dict[int, list[int]] = {}
            for i, leaf in enumerate(leaves):
                groups.setdefault(id(leaf), []).append(i)
            for leaf, idx in ((leaves[v[0]], v) for v in groups.values()):
                num = float(residual[idx].sum())
                den = float(hessian[idx].sum())
                leaf.value = num / max(den, 1e-12)
            self._trees.append(tree)
            scores = scores + self.learning_rate * tree.predict(x)
        return self

    def decision_scores(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        scores = np.full(x.shape[0], self._base_score)
        for tree in self._trees:
            scores = scores + self.learning_rate * tree.predict(x)
        return scores

    def predict_row(self, row) -> int:
        return int(_sigmoid(self.decision_scores(row))[0] > 0.5)

    def predict(self, x) -> np.ndarray:
        return (_sigmoid(self.decision_scores(x)) > 0.5).astype(int)


# --- support vector machine ------------------------------------------------------------


class SvmClassifier:
    """Soft-margin SVM trained by most-violating-pair dual optimization.

    Kernels: ``"linear"`` or ``"rbf"`` (``exp(-gamma ||a - b||^2)``).
    Optimization stops when the maximal KKT violation drops below ``tol``;
    hitting the iteration cap is not an error (best-so-far is kept).
    """

    def __init__(self, c: float = 1.0, kernel: str = "linear",
                 gamma: float = 0.1, tol: float = 1e-3,
                 max_iter: int = 20000):
        if kernel not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {kernel!r}")
        self.c = float(c)
        self.kernel = kernel
        self.gamma = float(gamma)
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self._x: np.ndarray | None = None
        self._sy: np.ndarray | None = None
        self._alpha: np.ndarray | None = None
        self._bias = 0.0

    def _kernel_matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.kernel == "linear":
            return a @ b.T
        aa = np.sum(a * a, axis=1)[:, None]
        bb = np.sum(b * b, axis=1)[None, :]
        sq = np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)
        return np.exp(-self.gamma * sq)

    def fit(self, x, y) -> "SvmClassifier":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        _check_labels(y)
        s = np.where(y == 1, 1.0, -1.0)
        n = x.shape[0]
        k = self._kernel_matrix(x, x)
        q = (s[:, None] * s[None, :]) * k
        alpha = np.zeros(n)
        grad = -np.ones(n)

        for _ in range(self.max_iter):
            up = ((s > 0) & (alpha < self.c)) | ((s < 0) & (alpha > 0))
            low = ((s < 0) & (alpha < self.c)) | ((s > 0) & (alpha > 0))
            viol = -s * grad
            up_vals = np.where(up, viol, -np.inf)
            low_vals = np.where(low, viol, np.inf)
            i = int(np.argmax(up_vals))
            j = int(np.argmin(low_vals))
            if up_vals[i] - low_vals[j] < self.tol:
                break
            if s[i] != s[j]:
                quad = max(q[i, i] + q[j, j] + 2.0 * q[i, j], 1e-12)
                delta = (-grad[i] - grad[j]) / quad
                diff = alpha[i] - alpha[j]
                ai, aj = alpha[i] + delta, alpha[j] + delta
                if diff > 0 and aj < 0:
                    aj, ai = 0.0, diff
                elif diff <= 0 and ai < 0:
                    ai, aj = 0.0, -diff
                if diff > 0 and ai > self.c:
                    ai, aj = self.c, self.c - diff
                elif diff <= 0 and aj > self.c:
                    aj, ai = self.c, self.c + diff
            else:
                quad = max(q[i, i] + q[j, j] - 2.0 * q[i, j], 1e-12)
                delta = (grad[i] - grad[j]) / quad
                total = alpha[i] + alpha[j]
                ai, aj = alpha[i] - delta, alpha[j] + delta
                if total > self.c:
                    if ai > self.c:
                        ai, aj = self.c, total - self.c
                    elif aj > self.c:
                        aj, ai = self.c, total - self.c
                else:
                    if aj < 0:
                        aj, ai = 0.0, total
                    elif ai < 0:
                        ai, aj = 0.0, total
            d_i, d_j = ai - alpha[i], aj - alpha[j]
            alpha[i], alpha[j] = ai, aj
            grad = grad + q[:, i] * d_i + q[:, j] * d_j

        free = (alpha > 1e-12) & (alpha < self.c - 1e-12)
        if np.any(free):
            bias = float(np.mean((-s * grad)[free]))
        else:
            up = ((s > 0) & (alpha < self.c)) | ((s < 0) & (alpha > 0))
            low = ((s < 0) & (alpha < self.c)) | ((s > 0) & (alpha > 0))
            viol = -s * grad
            hi = np.max(np.where(up, viol, -np.inf))
            lo = np.min(np.where(low, viol, np.inf))
            bias = float((hi + lo) / 2.0)
        self._x, self._sy, self._alpha, self._bias = x, s, alpha, bias
        return self

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        k = self._kernel_matrix(x, self._x)
        return k @ (self._alpha * self._sy) + self._bias

    def predict_row(self, row) -> int:
        return int(self.decision_function(row)[0] > 0.0)

    def predict(self, x) -> np.ndarray:
        return (self.decision_function(x) > 0.0).astype(int)


# --- multi-layer perceptron ---------------------------------------------------------------


def init_mlp_params(n_features: int, hidden: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "w1": rng.normal(0.0, math.sqrt(2.0 / n_features), (n_features, hidden)),
        "b1": np.zeros(hidden),
        "w2": rng.normal(0.0, math.sqrt(1.0 / hidden), (hidden, 1)),
        "b2": np.zeros(1),
    }


def mlp_loss_and_grad(params: dict, x: np.ndarray, y: np.ndarray):
    """Binary cross-entropy and its exact gradient for the 1-hidden-layer net.

    Architecture: ReLU hidden layer, sigmoid output. Exposed separately so
    the analytic gradient can be checked against finite differences.
    """
    n = x.shape[0]
    z1 = x @ params["w1"] + params["b1"]
    a1 = np.maximum(z1, 0.0)
    z2 = (a1 @ params["w2"] + params["b2"]).ravel()
    p = _sigmoid(z2)
    eps = 1e-12
    loss = -float(np.mean(y * np.log(np.clip(p, eps, None))
                          + (1.0 - y) * np.log(np.clip(1.0 - p, eps, None))))
    dz2 = ((p - y) / n)[:, None]
    grads = {
        "w2": a1.T @ dz2,
        "b2": dz2.sum(axis=0),
    }
    da1 = dz2 @ params["w2"].T
    dz1 = da1 * (z1 > 0.0)
    grads["w1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


class MlpClassifier:
    """One hidden layer, full-batch gradient descent with momentum 0.9."""

    def __init__(self, hidden: int = 16, learning_rate: float = 0.01,
                 epochs: int = 500, momentum: float = 0.9, seed: int = 0):
        self.hidden = int(hidden)
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.momentum = float(momentum)
        self.seed = int(seed)
        self._params: dict | None = None

    def fit(self, x, y) -> "MlpClassifier":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_labels(y.astype(int))
        params = init_mlp_params(x.shape[1], self.hidden, self.seed)
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
        for _ in range(self.epochs):
            _, grads = mlp_loss_and_grad(params, x, y)
            for key in params:
                velocity[key] = self.momentum * velocity[key] \
                    - self.learning_rate * grads[key]
                params[key] = params[key] + velocity[key]
        self._params = params
        return self

    def decision_function(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a1 = np.maximum(x @ self._params["w1"] + self._params["b1"], 0.0)
        return (a1 @ self._params["w2"] + self._params["b2"]).ravel()

    def predict_row(self, row) -> int:
        return int(_sigmoid(self.decision_function(row))[0] > 0.5)

    def predict(self, x) -> np.ndarray:
        return (_sigmoid(self.decision_function(x)) > 0.5).astype(int)


# --- dispatch ----------------------------------------------------------------------


def train(spec: ModelSpec, x: np.ndarray, y: np.ndarray, seed: int = 0):
    """Instantiate and fit the classifier named by ``spec``.

    ``seed`` feeds the models that use randomness (random forest bootstrap
    and MLP initialization); the rest ignore it.
    """
    hp = dict(spec.hyperparameters)
    kind = spec.kind
    if kind is ModelKind.KNN:
        model = KnnClassifier(k=hp.get("k", 5))
    elif kind is ModelKind.DECISION_TREE:
        model = DecisionTreeClassifier(
            max_depth=hp.get("max_depth"),
            min_samples_leaf=hp.get("min_samples_leaf", 1))
    elif kind is ModelKind.RANDOM_FOREST:
        model = RandomForestClassifier(
            n_estimators=hp.get("n_estimators", 100),
            max_depth=hp.get("max_depth"),
            min_samples_leaf=hp.get("min_samples_leaf", 1),
            seed=seed)
    elif kind is ModelKind.GRADIENT_BOOSTING:
        model = GradientBoostingClassifier(
            n_estimators=hp.get("n_estimators", 100),
            learning_rate=hp.get("learning_rate", 0.1),
            max_depth=hp.get("max_depth", 3))
    elif kind is ModelKind.SVM:
        model = SvmClassifier(
            c=hp.get("c", 1.0), kernel=hp.get("kernel", "linear"),
            gamma=hp.get("gamma", 0.1))
    elif kind is ModelKind.MLP:
        model = MlpClassifier(
            hidden=hp.get("hidden", 16),
            learning_rate=hp.get("learning_rate", 0.01),
            epochs=hp.get("epochs", 500), seed=seed)
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown model kind {kind!r}")
    return model.fit(x, y)


def predict(model, x_row) -> int:
    return int(model.predict_row(np.asarray(x_row, dtype=float)))
