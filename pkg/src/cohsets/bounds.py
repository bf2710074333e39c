"""Balancedness constants and the Frobenius-KL bound chain.

The squared Frobenius gap between the rescaled transition matrix and its
reduction is bounded by an input-weighted sum of columnwise KL divergences,
divided by a balancedness constant. The same quantity has an exact
likelihood form, which also yields a computable lower bound on the degree of
coherence of the reduced model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dbmr import CountMatrix, ReducedModel, log_likelihood, relaxed_log_likelihood
from .model import TransitionModel

_KAPPA_CHOICES = ("post", "pr", "q1", "q2")


@dataclass(frozen=True)
class BoundConstants:
    """Candidate balancedness constants for the Frobenius-KL bound."""

    kappa_diff: float
    kappa_col: float
    kappa_prior: float
    kappa_post: float
    kappa_post_tag: str
    col_usable: bool
    deviations: np.ndarray


@dataclass(frozen=True)
class BoundReport:
    constants: BoundConstants
    kappa_choice: str
    kappa_value: float
    kappa_tag: str
    frob_gap_sq: float
    kl_form: float
    likelihood_form: float
    coherence_bound: float

    def to_dict(self) -> dict:
        return {
            "kappa_diff": self.constants.kappa_diff,
            "kappa_col": self.constants.kappa_col,
            "kappa_prior": self.constants.kappa_prior,
            "kappa_post": self.constants.kappa_post,
            "kappa_post_tag": self.constants.kappa_post_tag,
            "col_usable": self.constants.col_usable,
            "max_deviation": float(np.max(self.constants.deviations)),
            "kappa_choice": self.kappa_choice,
            "kappa_value": self.kappa_value,
            "kappa_tag": self.kappa_tag,
            "frob_gap_sq": self.frob_gap_sq,
            "kl_form": self.kl_form,
            "likelihood_form": self.likelihood_form,
            "coherence_bound": self.coherence_bound,
        }


def balancedness(x: np.ndarray) -> float:
    """1-norm over (length times max magnitude); 1.0 for the zero vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a nonempty 1-d array")
    peak = np.abs(x).max()
    if peak == 0.0:
        return 1.0
    return float(np.abs(x).sum() / (x.size * peak))


def weighted_balancedness(x: np.ndarray, weights: np.ndarray) -> float:
    """1-norm over the largest weight-relative magnitude; 1.0 for zero."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if x.shape != weights.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and weights must be nonempty 1-d arrays of equal length")
    if (weights <= 0.0).any():
        raise ValueError("weights must be strictly positive")
    peak = (np.abs(x) / weights).max()
    if peak == 0.0:
        return 1.0
    return float(np.abs(x).sum() / peak)


def deviation_coefficient(u: np.ndarray, v: np.ndarray) -> float:
    """Two thirds of the largest relative deviation of v from u.

    Zero-over-zero entries contribute 0; a positive deviation on a zero entry
    of u makes the coefficient infinite.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1 or u.size == 0:
        raise ValueError("u and v must be nonempty 1-d arrays of equal length")
    diff = np.abs(u - v)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(diff == 0.0, 0.0, diff / u)
    return float(ratio.max() * (2.0 / 3.0))


def bound_constants(model: TransitionModel, reduced: ReducedModel) -> BoundConstants:
    """Columnwise balancedness constants for the model/reduction pair.

    kappa_diff halves the smallest weighted balancedness of the column
    differences; kappa_col halves the smallest weighted column balancedness
    damped by (1 - deviation). kappa_col can be -inf or negative when some
    column deviates too strongly; it is then flagged unusable. kappa_post,
    the better of the two, never falls below the prior constant min(q)/2.
    """
    P = model.matrix
    L = reduced.approx
    q = model.output_dist
    n = P.shape[1]
    diff_terms = np.empty(n)
    col_terms = np.empty(n)
    deviations = np.empty(n)
    # Entries live in [0, 1], so differences at rounding scale mean the column
    # was reproduced exactly; snap them to zero so the zero-vector convention
    # applies instead of the balancedness of accumulated roundoff.
    zero_tol = 32.0 * np.finfo(np.float64).eps
    for j in range(n):
        diff = P[:, j] - L[:, j]
        if np.abs(diff).max() <= zero_tol:
            diff_terms[j] = 1.0
            deviations[j] = 0.0
        else:
            diff_terms[j] = weighted_balancedness(diff, q)
            deviations[j] = deviation_coefficient(P[:, j], L[:, j])
        with np.errstate(invalid="ignore"):
            col_terms[j] = weighted_balancedness(P[:, j], q) * (1.0 - deviations[j])
    kappa_diff = 0.5 * float(diff_terms.min())
    kappa_col = 0.5 * float(col_terms.min())
    kappa_prior = 0.5 * float(q.min())
    if kappa_diff >= kappa_col:
        kappa_post, tag = kappa_diff, "q1"
    else:
        kappa_post, tag = kappa_col, "q2"
    if kappa_post < kappa_prior - 1e-12:
        raise FloatingPointError(
            f"kappa_post {kappa_post} fell below the prior constant {kappa_prior}"
        )
    deviations.flags.writeable = False
    return BoundConstants(
        kappa_diff=kappa_diff,
        kappa_col=kappa_col,
        kappa_prior=kappa_prior,
        kappa_post=kappa_post,
        kappa_post_tag=tag,
        col_usable=bool((deviations < 1.0).all() and kappa_col > 0.0),
        deviations=deviations,
    )


def _weighted_kl_sum(model: TransitionModel, reduced: ReducedModel) -> float:
    """Input-weighted sum of columnwise KL divergences of P from the reduction."""
    P = model.matrix
    L = reduced.approx
    support = P > 0.0
    if (L[support] <= 0.0).any():
        return float("inf")
    ratio = np.zeros_like(P)
    ratio[support] = P[support] * np.log(P[support] / L[support])
    return float(model.input_dist @ ratio.sum(axis=0))


def frobenius_kl_bound(
    counts: CountMatrix,
    model: TransitionModel,
    reduced: ReducedModel,
    kappa_choice: str = "post",
) -> BoundReport:
    """Evaluate the bound chain: squared gap <= KL form = likelihood form.

    The KL form divides the input-weighted columnwise KL sum by the chosen
    kappa; the likelihood form rescales the log-likelihood drop from the full
    model to the reduction by kappa times the sample size. Both are infinite
    when the reduction misses observed support. The report also carries the
    induced lower bound on the reduced model's degree of coherence.
    """
    if kappa_choice not in _KAPPA_CHOICES:
        raise ValueError(f"kappa_choice must be one of {_KAPPA_CHOICES}")
    constants = bound_constants(model, reduced)
    kappa_value = {
        "post": constants.kappa_post,
        "pr": constants.kappa_prior,
        "q1": constants.kappa_diff,
        "q2": constants.kappa_col,
    }[kappa_choice]
    kappa_tag = constants.kappa_post_tag if kappa_choice == "post" else kappa_choice
    gap = model.rescaled - reduced.approx_rescaled
    frob_gap_sq = float(np.sum(gap * gap))
    kl_sum = _weighted_kl_sum(model, reduced)
    full_objective = log_likelihood(counts, model.matrix)
    reduced_objective = relaxed_log_likelihood(
        counts, reduced.factor, reduced.affiliation
    )
    full_norm_sq = float(np.sum(model.rescaled * model.rescaled))
    if kappa_value > 0.0:
        kl_form = kl_sum / kappa_value
        likelihood_form = (full_objective - reduced_objective) / (
            kappa_value * counts.total
        )
        coherence_bound = full_norm_sq - likelihood_form
        if np.isfinite(kl_form):
            if frob_gap_sq > kl_form + 1e-9:
                raise FloatingPointError(
                    f"squared gap {frob_gap_sq} exceeds its KL bound {kl_form}"
                )
            if abs(kl_form - likelihood_form) > 1e-6 * (1.0 + abs(kl_form)):
                raise FloatingPointError(
                    f"KL form {kl_form} and likelihood form {likelihood_form} disagree"
                )
    else:
        # Degenerate kappa: the chain is vacuous, report raw values only.
        kl_form = float("inf") if kl_sum > 0 else 0.0
        likelihood_form = kl_form
        coherence_bound = float("-inf")
    return BoundReport(
        constants=constants,
        kappa_choice=kappa_choice,
        kappa_value=kappa_value,
        kappa_tag=kappa_tag,
        frob_gap_sq=frob_gap_sq,
        kl_form=kl_form,
        likelihood_form=likelihood_form,
        coherence_bound=coherence_bound,
    )


def coherence_lower_bound(
    counts: CountMatrix,
    model: TransitionModel,
    reduced: ReducedModel,
    kappa_value: float,
) -> float:
    """Lower bound on the reduced degree of coherence from the likelihood drop.

    Returns -inf when the reduction misses observed support.
    """
    if kappa_value <= 0.0:
        raise ValueError("kappa_value must be positive")
    full_objective = log_likelihood(counts, model.matrix)
    reduced_objective = relaxed_log_likelihood(
        counts, reduced.factor, reduced.affiliation
    )
    full_norm_sq = float(np.sum(model.rescaled * model.rescaled))
    return float(
        (reduced_objective - full_objective) / (kappa_value * counts.total)
        + full_norm_sq
    )


def pinsker_l2(
    u: np.ndarray, v: np.ndarray, weights: np.ndarray
) -> tuple[tuple[float, bool], ...]:
    """Four KL-based upper bounds for squared distances between distributions.

    Returns ((a), (b), (c), (d)) as (value, applicable) pairs:
      (a) bounds the squared 2-norm via the difference balancedness,
      (b) bounds the weight-relative squared distance via the weighted kind,
      (c) and (d) replace the difference balancedness with the balancedness
          of u damped by (1 - deviation); they require deviation < 1.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    kl = _kl(u, v)
    size = u.size
    diff = u - v
    alpha = deviation_coefficient(u, v)
    bound_a = 2.0 * kl / (size * balancedness(diff))
    bound_b = 2.0 * kl / weighted_balancedness(diff, weights)
    applicable = bool(alpha < 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound_c = 2.0 * kl / (size * balancedness(u) * (1.0 - alpha))
        bound_d = 2.0 * kl / (weighted_balancedness(u, weights) * (1.0 - alpha))
    return (
        (float(bound_a), True),
        (float(bound_b), True),
        (float(bound_c), applicable),
        (float(bound_d), applicable),
    )


def _kl(u: np.ndarray, v: np.ndarray) -> float:
    support = u > 0.0
    if (v[support] <= 0.0).any():
        return float("inf")
    return float(np.sum(u[support] * np.log(u[support] / v[support])))
