"""Complexity estimation and numeric bound evaluators.

Function classes are handled through their restriction to a point sample: a
matrix with one row per class member and one column per point. On top of
that come Monte-Carlo and exhaustive Rademacher complexity, greedy covering
numbers with a numeric entropy-integral term, an exhaustive VC search for
small point sets, and itemized evaluators for the generalization bounds.

Monte-Carlo trials use per-trial derived sign streams, so estimates are
deterministic in (seed, trials) and independent of evaluation order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledSample
from .prng import Xoshiro256StarStar, derive_seed, sign_matrix
from .scoring import FiniteScoringClass

#: Sentinel for exact 2**n enumeration instead of Monte-Carlo trials.
EXHAUSTIVE = "exhaustive"

_EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class FunctionValueMatrix:
    """Restriction of a function class to a sample: values[j, i] = g_j(x_i)."""

    values: np.ndarray
    row_labels: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("values must be a nonempty (rows, n) matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def rows(self) -> int:
        return self.values.shape[0]


def pi1_matrix(F: FiniteScoringClass, points: np.ndarray) -> FunctionValueMatrix:
    """Per-class score projections: one row per (member, class) pair.

    Row ``j * k + y`` holds member j's scores for class y; |rows| = |F| * k.
    """
    tensor = F.scores_tensor(points)  # (|F|, n, k)
    m, n, k = tensor.shape
    values = tensor.transpose(0, 2, 1).reshape(m * k, n)
    labels = tuple((j, y) for j in range(m) for y in range(k))
    return FunctionValueMatrix(values, labels)


def pih_matrix(
    F: FiniteScoringClass, labelers, points: np.ndarray
) -> FunctionValueMatrix:
    """Scores evaluated at another classifier's predictions.

    One row per (labeler, member) pair: row ``a * |F| + b`` holds member b's
    score at labeler a's predicted class, point by point.
    """
    labelers = tuple(labelers)
    tensor = F.scores_tensor(points)  # (|F|, n, k)
    n = tensor.shape[1]
    rows = []
    labels = []
    col = np.arange(n)
    for a, h in enumerate(labelers):
        pred = h.labels(points)
        for b in range(len(F)):
            rows.append(tensor[b][col, pred])
            labels.append((a, b))
    return FunctionValueMatrix(np.array(rows), tuple(labels))


@dataclass(frozen=True)
class RademacherEstimate:
    estimate: float
    std_error: float
    trials: int  # number of sign vectors actually averaged


def _sup_values(values: np.ndarray, signs: np.ndarray) -> np.ndarray:
    # signs: (t, n); values: (rows, n) -> per-draw sup over rows, shape (t,)
    return (signs @ values.T).max(axis=1) / values.shape[1]


def empirical_rademacher(
    M: FunctionValueMatrix, trials, seed: int | None = None
) -> RademacherEstimate:
    """Empirical Rademacher complexity of the rows of M.

    With integer ``trials``, Monte-Carlo averages ``max_j (1/n) sum_i s_i
    M[j, i]`` over that many sign draws and reports the standard error of the
    mean. With ``trials=EXHAUSTIVE`` (n <= 20) all 2**n sign vectors are
    enumerated exactly and the standard error is 0.
    """
    values = M.values
    n = values.shape[1]
    if trials == EXHAUSTIVE:
        if n > _EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive enumeration supports n <= {_EXHAUSTIVE_LIMIT}")
        total = 0.0
        count = 1 << n
        block = 1 << 14
        shifts = np.arange(n, dtype=np.uint64)
        for start in range(0, count, block):
            idx = np.arange(start, min(start + block, count), dtype=np.uint64)
            signs = (((idx[:, None] >> shifts) & np.uint64(1)).astype(np.float64)) * 2.0 - 1.0
            total += _sup_values(values, signs).sum()
        return RademacherEstimate(total / count, 0.0, count)
    if not isinstance(trials, int) or trials < 1:
        raise ValueError("trials must be a positive integer or EXHAUSTIVE")
    if seed is None:
        raise ValueError("Monte-Carlo estimation needs a seed")
    sups = _sup_values(values, sign_matrix(seed, trials, n))
    se = float(sups.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return RademacherEstimate(float(sups.mean()), se, trials)


def expected_rademacher(
    matrix_builder,
    population: np.ndarray,
    n: int,
    trials,
    seed: int,
    resamples: int = 16,
) -> float:
    """Distribution-level Rademacher complexity, approximated by averaging the
    empirical complexity over datasets resampled from the population.

    ``matrix_builder(points) -> FunctionValueMatrix`` evaluates the class.
    Resample r draws n points (with replacement, uniform over the population
    rows) from a stream derived from (seed, r).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 0.0
    for r in range(resamples):
        rng = Xoshiro256StarStar(derive_seed(seed, 101, r))
        idx = rng.integers(len(population), n)
        M = matrix_builder(population[idx])
        total += empirical_rademacher(M, trials, derive_seed(seed, 102, r)).estimate
    return total / resamples


class ComplexityBoundViolation(AssertionError):
    """A certified upper bound was numerically exceeded."""


@dataclass(frozen=True)
class LinearRademacherReport:
    estimate: float
    std_error: float
    bound: float
    vc_surrogate: int
    radius: float


def linear_pihf_rademacher(
    x_points: np.ndarray,
    lam: float,
    h_weights: np.ndarray,
    trials,
    seed: int | None = None,
) -> LinearRademacherReport:
    """Empirical Rademacher complexity of scores-at-predictions for the
    binary linear family ``f(x, y) = sgn(y) w . x`` with ``||w||_2 <= lam``.

    The supremum over w is closed-form per draw (Cauchy-Schwarz):
    ``lam * || sum_i s_i h(x_i) x_i ||_2 / m``; the labeler h ranges over the
    finite grid given by ``h_weights`` rows (``h(x) = sgn(w_h . x)``,
    ``sgn(0) = +1``). The result is certified against the VC-style bound
    ``2 lam r sqrt(d log(e m / d) / m)`` with d = input dimension + 1; the
    bound is only finite for m >= d.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    X = np.asarray(x_points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("x_points must be (m, d)")
    W = np.asarray(h_weights, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != X.shape[1]:
        raise ValueError("h_weights must be (g, d)")
    m, d = X.shape
    hlab = np.where(X @ W.T >= 0.0, 1.0, -1.0).T  # (g, m)
    signed = hlab[:, :, None] * X[None, :, :]  # (g, m, d)

    def draw_values(signs: np.ndarray) -> np.ndarray:
        v = np.einsum("tm,gmd->tgd", signs, signed)
        return lam * np.linalg.norm(v, axis=2).max(axis=1) / m

    if trials == EXHAUSTIVE:
        if m > _EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive enumeration supports m <= {_EXHAUSTIVE_LIMIT}")
        idx = np.arange(1 << m, dtype=np.uint64)
        signs = (((idx[:, None] >> np.arange(m, dtype=np.uint64)) & np.uint64(1)) * 2.0) - 1.0
        vals = draw_values(signs.astype(np.float64))
        est, se = float(vals.mean()), 0.0
    else:
        if seed is None:
            raise ValueError("Monte-Carlo estimation needs a seed")
        vals = draw_values(sign_matrix(seed, trials, m))
        est = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    r = float(np.linalg.norm(X, axis=1).max())
    d_vc = d + 1
    bound = (
        2.0 * lam * r * math.sqrt(d_vc * math.log(math.e * m / d_vc) / m)
        if m >= d_vc
        else float("inf")
    )
    if est > bound + 1e-12:
        raise ComplexityBoundViolation(
            f"linear-class estimate {est} exceeds certified bound {bound}"
        )
    return LinearRademacherReport(est, se, bound, d_vc, r)


def _l2_distances(values: np.ndarray) -> np.ndarray:
    n = values.shape[1]
    diff = values[:, None, :] - values[None, :, :]
    return np.sqrt(np.mean(diff * diff, axis=2))


def covering_number(M: FunctionValueMatrix, eps: float) -> int:
    """Greedy upper bound on the L2 covering number of the rows of M.

    Metric: ``d(g, g') = sqrt(mean_i (g_i - g'_i)^2)``. Farthest-point
    traversal starting from row 0 gives nested covers, so the count is
    nonincreasing in eps and reaches 1 once eps is at least the diameter.
    Greedy covers are valid upper bounds on the minimum cover size.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    dist = _l2_distances(M.values)
    to_cover = dist[0].copy()
    count = 1
    while True:
        far = int(np.argmax(to_cover))
        if to_cover[far] <= eps:
            return count
        count += 1
        np.minimum(to_cover, dist[far], out=to_cover)


def exact_covering_number(M: FunctionValueMatrix, eps: float, max_rows: int = 12) -> int:
    """Minimum internal eps-cover by exhaustive subset search (small inputs)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    rows = M.rows
    if rows > max_rows:
        raise ValueError(f"exact cover search supports at most {max_rows} rows")
    dist = _l2_distances(M.values)
    covered_by = dist <= eps
    for size in range(1, rows + 1):
        for subset in itertools.combinations(range(rows), size):
            if np.all(covered_by[list(subset)].any(axis=0)):
                return size
    return rows


def dudley_term(M: FunctionValueMatrix, eps_grid=None) -> float:
    """Numeric entropy-integral complexity bound for the rows of M.

    Evaluates ``min over eps in the grid of 4 eps + (12 / sqrt(n)) *
    integral_eps^L sqrt(log N2(tau)) d tau`` with L the largest empirical L2
    row norm, the integral by trapezoid on the grid points, and N2 the greedy
    covering number. Minimizing over a finite grid upper-bounds the exact
    infimum, so the result stays a valid complexity upper bound.
    """
    values = M.values
    n = values.shape[1]
    L = float(np.sqrt(np.mean(values * values, axis=1)).max())
    if L == 0.0:
        return 0.0
    if eps_grid is None:
        eps_grid = [L * 2.0**-j for j in range(0, 11)]
    eps_grid = sorted(float(e) for e in eps_grid)
    if not eps_grid or eps_grid[0] <= 0:
        raise ValueError("eps grid must be nonempty and positive")
    taus = sorted({e for e in eps_grid if e < L} | {L})
    entropy = {t: math.sqrt(math.log(covering_number(M, t))) for t in taus}
    best = math.inf
    for eps in eps_grid:
        if eps >= L:
            candidate = 4.0 * eps
        else:
            nodes = [t for t in taus if eps <= t]
            if nodes[0] > eps:
                nodes = [eps] + nodes
                entropy.setdefault(eps, math.sqrt(math.log(covering_number(M, eps))))
            ys = [entropy[t] for t in nodes]
            integral = float(np.trapezoid(ys, nodes))
            candidate = 4.0 * eps + 12.0 / math.sqrt(n) * integral
        best = min(best, candidate)
    return best


def vc_dimension(labels_matrix: np.ndarray, max_points: int = 12) -> int:
    """Exact VC dimension of a finite set of binary labelers on a point set,
    by exhaustive shattering search. Supports at most ``max_points`` points."""
    B = np.asarray(labels_matrix)
    if B.ndim != 2:
        raise ValueError("labels_matrix must be (|H|, n)")
    if not np.isin(B, (0, 1)).all():
        raise ValueError("labels must be binary")
    n = B.shape[1]
    if n > max_points:
        raise ValueError(f"exhaustive VC search supports n <= {max_points} points")
    upper = min(n, int(math.log2(max(B.shape[0], 1))) if B.shape[0] > 1 else 0)
    for size in range(upper, 0, -1):
        for subset in itertools.combinations(range(n), size):
            patterns = {tuple(row) for row in B[:, subset]}
            if len(patterns) == 1 << size:
                return size
    return 0


@dataclass(frozen=True)
class BoundReport:
    """Itemized right-hand side of a generalization bound.

    The named additive terms always sum to ``total`` (to 1e-12); keeping the
    terms separate is what makes the evaluators auditable.
    """

    terms: dict
    total: float
    delta: float
    n: int
    m: int
    k: int | None = None
    rho: float | None = None


def _report(terms: dict, delta, n, m, k=None, rho=None) -> BoundReport:
    vals = list(terms.values())
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("all bound terms must be finite")
    return BoundReport(dict(terms), math.fsum(vals), delta, n, m, k, rho)


def _check_delta(delta: float, players: int) -> None:
    # a bound holding with probability 1 - players*delta needs delta < 1/players
    if not 0 < delta < 1.0 / players:
        raise ValueError(f"delta must lie in (0, 1/{players})")


def _confidence(delta: float, n: int) -> float:
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def bound_mdd(
    source_margin_err: float,
    mdd_value: float,
    ideal_joint_err: float,
    rad_pi1f_source: float,
    rad_pihf_source: float,
    rad_pihf_target: float,
    n: int,
    m: int,
    k: int,
    rho: float,
    delta: float,
) -> BoundReport:
    """Margin-theory target-error bound (holds with probability 1 - 3 delta):

    err + MDD + lambda + (2k^2/rho) R_P(per-class projections)
    + (2k/rho) R_P(scores-at-predictions) + 2 sqrt(log(2/delta)/2n)
    + (2k/rho) R_Q(scores-at-predictions) + sqrt(log(2/delta)/2m).
    """
    _check_delta(delta, 3)
    if not rho > 0:
        raise ValueError("rho must be positive")
    terms = {
        "source_margin_error": source_margin_err,
        "mdd": mdd_value,
        "ideal_joint_error": ideal_joint_err,
        "pi1f_complexity_source": (2.0 * k * k / rho) * rad_pi1f_source,
        "pihf_complexity_source": (2.0 * k / rho) * rad_pihf_source,
        "confidence_source": 2.0 * _confidence(delta, n),
        "pihf_complexity_target": (2.0 * k / rho) * rad_pihf_target,
        "confidence_target": _confidence(delta, m),
    }
    return _report(terms, delta, n, m, k, rho)


def mdd_estimation_gap_bound(
    rad_pihf_source: float,
    rad_pihf_target: float,
    n: int,
    m: int,
    k: int,
    rho: float,
    delta: float,
) -> BoundReport:
    """Two-sided bound on |empirical MDD - population MDD|, uniform over
    anchors (holds with probability 1 - 2 delta):

    (2k/rho)(R_P + R_Q) + sqrt(log(2/delta)/2n) + sqrt(log(2/delta)/2m).
    """
    _check_delta(delta, 2)
    if not rho > 0:
        raise ValueError("rho must be positive")
    terms = {
        "pihf_complexity_source": (2.0 * k / rho) * rad_pihf_source,
        "pihf_complexity_target": (2.0 * k / rho) * rad_pihf_target,
        "confidence_source": _confidence(delta, n),
        "confidence_target": _confidence(delta, m),
    }
    return _report(terms, delta, n, m, k, rho)


def bound_dd_binary_rademacher(
    source_err: float,
    dd_value: float,
    ideal_joint_err: float,
    rad_hdh_source: float,
    rad_h_source: float,
    rad_hdh_target: float,
    n: int,
    m: int,
    delta: float,
) -> BoundReport:
    """Binary 0-1 target-error bound, Rademacher form (probability 1 - 3 delta)."""
    _check_delta(delta, 3)
    terms = {
        "source_error": source_err,
        "dd": dd_value,
        "ideal_joint_error": ideal_joint_err,
        "hdh_complexity_source": 2.0 * rad_hdh_source,
        "h_complexity_source": 2.0 * rad_h_source,
        "confidence_source": 2.0 * _confidence(delta, n),
        "hdh_complexity_target": 2.0 * rad_hdh_target,
        "confidence_target": _confidence(delta, m),
    }
    return _report(terms, delta, n, m, k=2)


def bound_dd_binary_vc(
    source_err: float,
    dd_value: float,
    ideal_joint_err: float,
    vc_dim: int,
    n: int,
    m: int,
    delta: float,
) -> BoundReport:
    """Binary 0-1 target-error bound in VC form, with the explicit constants
    4, 2, 2, 1 and a single ideal-joint-error term (probability 1 - 3 delta)."""
    _check_delta(delta, 3)
    if vc_dim < 1:
        raise ValueError("vc_dim must be >= 1")
    if n < vc_dim or m < vc_dim:
        raise ValueError("VC form needs n, m >= vc_dim")
    terms = {
        "source_error": source_err,
        "dd": dd_value,
        "ideal_joint_error": ideal_joint_err,
        "vc_complexity_source": 4.0 * math.sqrt(vc_dim * math.log(math.e * n / vc_dim) / n),
        "confidence_source": 2.0 * _confidence(delta, n),
        "vc_complexity_target": 2.0 * math.sqrt(vc_dim * math.log(math.e * m / vc_dim) / m),
        "confidence_target": _confidence(delta, m),
    }
    return _report(terms, delta, n, m, k=2)


@dataclass(frozen=True)
class GapCheckReport:
    repetitions: int
    violations: int
    violation_rate: float
    delta: float
    tolerated_rate: float  # 2 * delta, the probability budget of the bound
    max_gap: float
    min_slack: float  # bound minus gap, over all repetitions and anchors


def mdd_gap_check(
    F: FiniteScoringClass,
    P: LabeledSample,
    Q: LabeledSample,
    rho: float,
    delta: float,
    n_sub: int,
    m_sub: int,
    repetitions: int,
    seed: int,
    trials=EXHAUSTIVE,
) -> GapCheckReport:
    """Empirical check of the MDD estimation-gap bound by repeated subsampling.

    P and Q act as finite populations; each repetition draws n_sub and m_sub
    points i.i.d. (with replacement, matching sampling from the empirical
    distribution), computes the max over anchors f in F of
    |empirical MDD - population MDD|, and compares against the gap bound
    evaluated with the subsample's own empirical Rademacher complexities. A
    repetition violates if any anchor exceeds its bound; the violation rate
    should not materially exceed 2 delta.
    """
    if n_sub < 1 or m_sub < 1:
        raise ValueError("subsample sizes must be >= 1")
    if n_sub > P.n or m_sub > Q.n:
        raise ValueError("subsample cannot exceed the population size")
    _check_delta(delta, 2)
    size = len(F)
    k = F.k
    labels_p = F.labels_matrix(P.features)
    labels_q = F.labels_matrix(Q.features)
    scores_p = F.scores_tensor(P.features)
    scores_q = F.scores_tensor(Q.features)

    def pointwise(scores, labels):
        # out[j_disturber, j_anchor, i] = ramp margin loss of member j_d at
        # member j_a's predicted label on point i
        from .scoring import margins_from_scores, ramp_loss

        out = np.empty((size, size, scores.shape[1]))
        for jd in range(size):
            for ja in range(size):
                out[jd, ja] = ramp_loss(
                    margins_from_scores(scores[jd], labels[ja]), rho
                )
        return out

    point_p = pointwise(scores_p, labels_p)
    point_q = pointwise(scores_q, labels_q)
    pop_mdd = (point_q.mean(axis=2) - point_p.mean(axis=2)).max(axis=0)

    pihf_p = pih_matrix(F, F.induced_labelers(), P.features).values
    pihf_q = pih_matrix(F, F.induced_labelers(), Q.features).values

    conf = _confidence(delta, n_sub) + _confidence(delta, m_sub)
    violations = 0
    max_gap = 0.0
    min_slack = math.inf
    for rep in range(repetitions):
        rng = Xoshiro256StarStar(derive_seed(seed, 201, rep))
        idx_p = rng.integers(P.n, n_sub)
        idx_q = rng.integers(Q.n, m_sub)
        emp_mdd = (
            point_q[:, :, idx_q].mean(axis=2) - point_p[:, :, idx_p].mean(axis=2)
        ).max(axis=0)
        gap = float(np.abs(emp_mdd - pop_mdd).max())
        rad_p = empirical_rademacher(
            FunctionValueMatrix(pihf_p[:, idx_p]), trials, derive_seed(seed, 202, rep)
        ).estimate
        rad_q = empirical_rademacher(
            FunctionValueMatrix(pihf_q[:, idx_q]), trials, derive_seed(seed, 203, rep)
        ).estimate
        bound = (2.0 * k / rho) * (rad_p + rad_q) + conf
        max_gap = max(max_gap, gap)
        min_slack = min(min_slack, bound - gap)
        if gap > bound:
            violations += 1
    return GapCheckReport(
        repetitions,
        violations,
        violations / repetitions,
        delta,
        2.0 * delta,
        max_gap,
        min_slack,
    )
