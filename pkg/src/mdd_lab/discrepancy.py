"""Exact disparities and discrepancies over finite classes.

All suprema are exhaustive scans over the class in iteration order, with the
first maximizer reported as witness; the scan order is fixed, so results are
deterministic regardless of how the per-member work is scheduled.

Expected-vs-empirical: every operation takes empirical samples. "Expected"
quantities are obtained by passing the full support as a sample (a dirac
distribution is a one-row sample), so one code path covers both readings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import LabeledSample
from .scoring import (
    FiniteScoringClass,
    LabelingFunction,
    ScoringFunction,
    margins_from_scores,
    ramp_loss,
)


@dataclass(frozen=True)
class DiscrepancyReport:
    """Value of a supremum together with the member index achieving it."""

    value: float
    argmax_member_index: int
    per_member_values: np.ndarray | None = None


class ExternalAnchorWarning(UserWarning):
    """The anchor classifier is not (semantically) a member of the class."""


def disparity01(h1: LabelingFunction, h2: LabelingFunction, s: LabeledSample) -> float:
    """Fraction of sample points where the two classifiers disagree."""
    return float(np.mean(h1.labels(s.features) != h2.labels(s.features)))


def margin_disparity(
    f1: ScoringFunction, f2: ScoringFunction, s: LabeledSample, rho: float
) -> float:
    """Mean ramp loss of f1's margin at f2's predicted labels.

    Not symmetric in (f1, f2): f2 only supplies labels, f1 supplies scores.
    """
    pseudo = np.argmax(f2.scores(s.features), axis=1)
    m = margins_from_scores(f1.scores(s.features), pseudo)
    return float(np.mean(ramp_loss(m, rho)))


def _anchor_member_index(labels_matrix: np.ndarray, anchor_labels: np.ndarray) -> int | None:
    hits = np.nonzero(np.all(labels_matrix == anchor_labels[None, :], axis=1))[0]
    return int(hits[0]) if len(hits) else None


def _check_anchor(found: int | None, allow_external: bool, kind: str) -> None:
    if found is None:
        if not allow_external:
            raise ValueError(
                f"{kind} anchor is not a member of the class on the given support; "
                "pass allow_external=True to evaluate anyway"
            )
        warnings.warn(
            f"{kind} evaluated at an external anchor; nonnegativity is not guaranteed",
            ExternalAnchorWarning,
            stacklevel=3,
        )


def dd(
    h: LabelingFunction,
    H: FiniteScoringClass,
    P: LabeledSample,
    Q: LabeledSample,
    allow_external: bool = False,
    record_per_member: bool = False,
) -> DiscrepancyReport:
    """Disparity discrepancy of Q against P anchored at h.

    Maximizes ``disparity01(h', h, Q) - disparity01(h', h, P)`` over the
    members h' of H. Nonnegative whenever h is (semantically) in H, since the
    h' = h candidate contributes 0. Labels of P and Q are unused.
    """
    hp = h.labels(P.features)
    hq = h.labels(Q.features)
    labels_p = H.labels_matrix(P.features)
    labels_q = H.labels_matrix(Q.features)
    anchor_idx = _anchor_member_index(
        np.concatenate([labels_p, labels_q], axis=1),
        np.concatenate([hp, hq]),
    )
    _check_anchor(anchor_idx, allow_external, "dd")
    values = np.mean(labels_q != hq[None, :], axis=1) - np.mean(
        labels_p != hp[None, :], axis=1
    )
    best = int(np.argmax(values))
    return DiscrepancyReport(
        float(values[best]), best, values if record_per_member else None
    )


def hdh_divergence(
    H: FiniteScoringClass,
    P: LabeledSample,
    Q: LabeledSample,
    record_per_member: bool = False,
) -> DiscrepancyReport:
    """Symmetric-difference divergence: max over ordered member pairs (h, h')
    of ``|disparity01(h', h, Q) - disparity01(h', h, P)|``.

    The witness index is the flat pair index ``i * len(H) + j`` for anchor i
    and disturber j.
    """
    labels_p = H.labels_matrix(P.features)
    labels_q = H.labels_matrix(Q.features)
    # pairwise disagreement rates, shape (|H|, |H|)
    disp_p = np.mean(labels_p[:, None, :] != labels_p[None, :, :], axis=2)
    disp_q = np.mean(labels_q[:, None, :] != labels_q[None, :, :], axis=2)
    gaps = np.abs(disp_q - disp_p).reshape(-1)
    best = int(np.argmax(gaps))
    return DiscrepancyReport(float(gaps[best]), best, gaps if record_per_member else None)


def mdd(
    f: ScoringFunction,
    F: FiniteScoringClass,
    P: LabeledSample,
    Q: LabeledSample,
    rho: float,
    allow_external: bool = False,
    record_per_member: bool = False,
) -> DiscrepancyReport:
    """Margin disparity discrepancy of Q against P anchored at f.

    Maximizes ``margin_disparity(f', f, Q, rho) - margin_disparity(f', f, P,
    rho)`` over f' in F. Zero when P and Q are the same sample. Nonnegative
    when f is in F *and* F contains a member disagreeing with f everywhere
    (permutation-closed classes do); for an anchor outside F the sign is
    unconstrained, hence the external-anchor flagging.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    pseudo_p = np.argmax(f.scores(P.features), axis=1)
    pseudo_q = np.argmax(f.scores(Q.features), axis=1)
    labels_all = F.labels_matrix(np.concatenate([P.features, Q.features]))
    anchor_idx = _anchor_member_index(labels_all, np.concatenate([pseudo_p, pseudo_q]))
    _check_anchor(anchor_idx, allow_external, "mdd")
    values = np.empty(len(F))
    for j, fp in enumerate(F):
        disp_q = np.mean(ramp_loss(margins_from_scores(fp.scores(Q.features), pseudo_q), rho))
        disp_p = np.mean(ramp_loss(margins_from_scores(fp.scores(P.features), pseudo_p), rho))
        values[j] = disp_q - disp_p
    best = int(np.argmax(values))
    return DiscrepancyReport(
        float(values[best]), best, values if record_per_member else None
    )


def ideal_lambda(
    F: FiniteScoringClass, P: LabeledSample, Q_labeled: LabeledSample, rho: float
) -> tuple[float, int]:
    """Ideal combined margin loss: min over F of source plus target margin error.

    Both samples must be fully labeled (this is the oracle quantity that uses
    held-out target labels). Returns the minimum and its witness index.
    """
    from .scoring import margin_err

    P.require_fully_labeled()
    Q_labeled.require_fully_labeled()
    if not rho > 0:
        raise ValueError("rho must be positive")
    values = np.array(
        [margin_err(fs, P, rho) + margin_err(fs, Q_labeled, rho) for fs in F]
    )
    best = int(np.argmin(values))
    return float(values[best]), best
