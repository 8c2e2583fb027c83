"""Scoring functions, induced labeling functions, margins and finite classes.

A scoring function maps a point ``x`` to ``k`` real scores, one per class;
the induced labeling function predicts the argmax score, breaking exact ties
toward the smallest class index so every downstream oracle is deterministic.

Binary classifiers enter the same machinery lifted to scoring functions with
unit confidence: the predicted class scores ``+1`` and the other ``-1``, so
0-1 and margin computations share one interface.

Suprema in this package are always taken over *finite* classes built here;
that keeps discrepancy and complexity computations exact and enumerable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .data import LabeledSample


class ScoringFunction:
    """Deterministic map from points to k-vectors of class scores."""

    k: int

    def scores(self, X: np.ndarray) -> np.ndarray:
        """(n, d) feature rows -> (n, k) score rows."""
        raise NotImplementedError

    def score_point(self, x: np.ndarray) -> np.ndarray:
        return self.scores(np.asarray(x, dtype=np.float64)[None, :])[0]


class TabularScorer(ScoringFunction):
    """Explicit score table over a fixed point set.

    Only defined on its own points; rows are matched exactly (bitwise) so a
    tabular scorer cannot silently extrapolate.
    """

    def __init__(self, points: np.ndarray, table: np.ndarray):
        points = np.ascontiguousarray(points, dtype=np.float64)
        table = np.asarray(table, dtype=np.float64)
        if points.ndim != 2 or table.ndim != 2 or len(points) != len(table):
            raise ValueError("points must be (m, d) and table (m, k)")
        self.points = points
        self.table = table
        self.k = table.shape[1]
        self._index = {points[i].tobytes(): i for i in range(len(points))}

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        rows = np.empty(len(X), dtype=np.int64)
        for i in range(len(X)):
            key = X[i].tobytes()
            if key not in self._index:
                raise KeyError("point not in the tabular scorer's point set")
            rows[i] = self._index[key]
        return self.table[rows]


class LinearScorer(ScoringFunction):
    """Scores ``W @ x`` for a (k, d) weight matrix."""

    def __init__(self, weights: np.ndarray):
        W = np.asarray(weights, dtype=np.float64)
        if W.ndim != 2:
            raise ValueError("weights must be a (k, d) matrix")
        self.weights = W
        self.k = W.shape[0]

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.weights.shape[1]:
            raise ValueError("feature dimension mismatch")
        return X @ self.weights.T


class BinaryRuleScorer(ScoringFunction):
    """A {0,1}-valued rule lifted to scores with fixed confidence c.

    The predicted class scores ``+c`` and the other class ``-c`` (c=1 by
    default), so the induced labeling function reproduces the rule exactly.
    """

    def __init__(self, rule: Callable[[np.ndarray], np.ndarray], confidence: float = 1.0):
        self.rule = rule
        self.confidence = confidence
        self.k = 2

    def scores(self, X: np.ndarray) -> np.ndarray:
        labels = np.asarray(self.rule(np.asarray(X, dtype=np.float64)), dtype=np.int64)
        c = self.confidence
        out = np.empty((len(labels), 2))
        out[:, 0] = np.where(labels == 0, c, -c)
        out[:, 1] = np.where(labels == 1, c, -c)
        return out


class MlpScorer(ScoringFunction):
    """Wraps a dense network so trained models plug into the oracles."""

    def __init__(self, model):
        from .nn import forward, output_dim

        self._forward = forward
        self.model = model
        self.k = output_dim(model)

    def scores(self, X: np.ndarray) -> np.ndarray:
        out, _ = self._forward(self.model, np.asarray(X, dtype=np.float64))
        return out


@dataclass(frozen=True)
class LabelingFunction:
    """argmax-of-scores classifier; exact ties go to the smallest index."""

    scorer: ScoringFunction

    def labels(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.scorer.scores(X), axis=1)

    def __call__(self, x: np.ndarray) -> int:
        return int(np.argmax(self.scorer.score_point(x)))


@dataclass(frozen=True)
class FiniteScoringClass:
    """Ordered, immutable collection of scoring functions with shared k.

    The closure flags declare structural properties that some identities
    require (complement closure for binary symmetry, permutation closure for
    MDD nonnegativity); property suites only assert those identities on
    classes that carry the matching flag.
    """

    members: tuple
    k: int
    closed_under_complement: bool = False
    closed_under_permutation: bool = False

    def __post_init__(self):
        if not self.members:
            raise ValueError("a scoring class must be nonempty")
        for m in self.members:
            if m.k != self.k:
                raise ValueError("all members must share the same k")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[ScoringFunction]:
        return iter(self.members)

    def __getitem__(self, i: int) -> ScoringFunction:
        return self.members[i]

    def induced_labelers(self) -> tuple[LabelingFunction, ...]:
        return tuple(LabelingFunction(m) for m in self.members)

    def scores_tensor(self, X: np.ndarray) -> np.ndarray:
        """(|class|, n, k) stacked member scores on X, in iteration order."""
        return np.stack([m.scores(X) for m in self.members])

    def labels_matrix(self, X: np.ndarray) -> np.ndarray:
        """(|class|, n) induced labels on X, in iteration order."""
        return np.argmax(self.scores_tensor(X), axis=2)


def finite_class(
    members: Sequence[ScoringFunction],
    closed_under_complement: bool = False,
    closed_under_permutation: bool = False,
) -> FiniteScoringClass:
    members = tuple(members)
    if not members:
        raise ValueError("a scoring class must be nonempty")
    return FiniteScoringClass(
        members,
        members[0].k,
        closed_under_complement=closed_under_complement,
        closed_under_permutation=closed_under_permutation,
    )


def predict_label(f: ScoringFunction, x: np.ndarray) -> int:
    """argmax class of f at x, smallest index on exact ties."""
    return int(np.argmax(f.score_point(x)))


def margins(f: ScoringFunction, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vector of margins ``(f(x_i, y_i) - max_{y' != y_i} f(x_i, y')) / 2``."""
    s = f.scores(X)
    return margins_from_scores(s, y)


def margins_from_scores(scores: np.ndarray, y: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    k = scores.shape[1]
    if k < 2:
        raise ValueError("margins need k >= 2")
    if y.min() < 0 or y.max() >= k:
        raise ValueError("labels out of range for margin computation")
    idx = np.arange(len(y))
    own = scores[idx, y]
    masked = scores.copy()
    masked[idx, y] = -np.inf
    other = masked.max(axis=1)
    return 0.5 * (own - other)


def margin(f: ScoringFunction, x: np.ndarray, y: int) -> float:
    """Margin of f at a single labeled point.

    Negative iff the induced classifier strictly disagrees with y; zero is
    possible on exact score ties.
    """
    if y < 0 or y >= f.k:
        raise ValueError(f"label {y} out of range for k={f.k}")
    return float(margins(f, np.asarray(x, dtype=np.float64)[None, :], np.array([y]))[0])


def ramp_loss(t, rho: float):
    """Piecewise-linear margin surrogate: 1 below 0, 0 above rho, linear between.

    1/rho-Lipschitz, nonincreasing, valued in [0, 1]. Accepts scalars or
    arrays.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    out = np.clip(1.0 - np.asarray(t, dtype=np.float64) / rho, 0.0, 1.0)
    if np.ndim(t) == 0:
        return float(out)
    return out


def err01(h: LabelingFunction, s: LabeledSample) -> float:
    """Fraction of sample rows where h disagrees with the recorded label."""
    s.require_fully_labeled()
    return float(np.mean(h.labels(s.features) != s.labels))


def margin_err(f: ScoringFunction, s: LabeledSample, rho: float) -> float:
    """Mean ramp loss of f's margins on a fully labeled sample.

    Upper-bounds ``err01`` of the induced classifier for every rho > 0.
    """
    s.require_fully_labeled()
    return float(np.mean(ramp_loss(margins(f, s.features, s.labels), rho)))


def threshold_class(thresholds: Sequence[float], signs: Sequence[int]) -> FiniteScoringClass:
    """Binary stumps on coordinate 0.

    Sign +1 predicts class 1 on ``x0 >= theta``; sign -1 is the exact
    complement (class 1 on ``x0 < theta``). With both signs present the
    class is closed under complement.
    """
    thresholds = list(thresholds)
    signs = list(signs)
    if not thresholds or not signs:
        raise ValueError("thresholds and signs must be nonempty")
    if any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be +1 or -1")
    members = []
    for theta in thresholds:
        for sign in signs:
            if sign == 1:
                rule = lambda X, t=theta: (X[:, 0] >= t).astype(np.int64)
            else:
                rule = lambda X, t=theta: (X[:, 0] < t).astype(np.int64)
            members.append(BinaryRuleScorer(rule))
    return finite_class(
        members,
        closed_under_complement=set(signs) == {-1, 1},
        closed_under_permutation=set(signs) == {-1, 1},
    )


def linear_class(weight_grid: Sequence[np.ndarray]) -> FiniteScoringClass:
    """Linear scorers, one per (k, d) weight matrix, in grid order."""
    members = [LinearScorer(W) for W in weight_grid]
    return finite_class(members)


def relu_example_class(a_grid: Sequence[float], b_grid: Sequence[float]) -> FiniteScoringClass:
    """Binary rules ``1 if relu(x0 - a) >= relu(x1 - b) else 0`` over a grid.

    Concrete ReLU family whose disparity discrepancy depends on the anchor:
    on dirac masses at (-1, 1) and (1, -1) exactly the value pairs (0,0),
    (0,1) and (1,1) occur.
    """
    a_grid = list(a_grid)
    b_grid = list(b_grid)
    if not a_grid or not b_grid:
        raise ValueError("grids must be nonempty")
    members = []
    for a in a_grid:
        for b in b_grid:
            def rule(X, a=a, b=b):
                left = np.maximum(X[:, 0] - a, 0.0)
                right = np.maximum(X[:, 1] - b, 0.0)
                return (left >= right).astype(np.int64)

            members.append(BinaryRuleScorer(rule))
    return finite_class(members)


def save_tabular_scores(path, scorer: TabularScorer) -> None:
    """Serialize a tabular score table: columns point_index, score_0..score_{k-1}."""
    header = ",".join(["point_index"] + [f"score_{j}" for j in range(scorer.k)])
    lines = [header]
    for i in range(len(scorer.points)):
        vals = ",".join(f"{v:.17g}" for v in scorer.table[i])
        lines.append(f"{i},{vals}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_tabular_scores(path, points: np.ndarray) -> TabularScorer:
    """Rebuild a tabular scorer from its score-table CSV and its point set."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines or not lines[0].startswith("point_index,score_0"):
        raise ValueError(f"{path}: not a tabular score table")
    k = len(lines[0].split(",")) - 1
    table = np.zeros((len(points), k))
    for ln in lines[1:]:
        parts = ln.split(",")
        i = int(parts[0])
        table[i] = [float(v) for v in parts[1:]]
    return TabularScorer(points, table)
