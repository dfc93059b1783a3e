"""Aggregation estimators and noise analysis for elicited probabilities.

Seven ways to turn a question's answer history y_1..y_n into one CPT entry:

  equal-average     arithmetic mean, the transparent baseline
  middle-value      weighted median, robust to stray outliers
  balanced-average  weighted mean in log-odds space, boundary-aware
  anchored-average  prior-regularized weighted mean (Beta shrinkage)
  expert-consensus  latent-consensus Beta model, two-stage grid posterior
  latest-answer     most recent entry, a workflow rule rather than a statistic
  cautious-average  RMS, deliberately alarm-sensitive; never weighted

Recency enters through half-life weights: an answer's weight halves per
half-life of age. Dispersion is surfaced, never hidden: residuals and sample
sd for the mean, a Beta credible interval for the anchored estimate, and the
posterior sd/interval for the consensus model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import betaln

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

from .bowtie import ModelWarning
from .cpt import Cpt, ParentConfig, RowStatus, RowSumError, complete_last_state
from .graph import RiskDag
from .questions import Answer, AnswerLedger, Question, question_id

ESTIMATORS = (
    "equal-average",
    "middle-value",
    "balanced-average",
    "anchored-average",
    "expert-consensus",
    "latest-answer",
    "cautious-average",
)

DEFAULT_KAPPA = 8.0
LOGIT_EPS = 1e-6      # answer clipping before log-odds / Beta log-density
SUPPORT_EPS = 1e-6    # consensus posterior support [eps, 1-eps]
COARSE_POINTS = 121
FINE_POINTS = 401
COARSE_PAD_CELLS = 3
# Stage-1 mass region: coarse cells whose density is at least this fraction
# of the peak. Cells below carry no mass the fine grid could miss.
REGION_REL_DENSITY = 1e-10


class EstimatorError(Exception):
    pass


class NoDataError(EstimatorError):
    """No answers (and no prior able to stand in)."""


@dataclass(frozen=True)
class EstimatorConfig:
    estimator: str = "equal-average"
    p0: float = 0.5
    k_prior: float = 0.0
    kappa: float = DEFAULT_KAPPA
    half_life: float | None = None  # seconds

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise EstimatorError(f"unknown estimator {self.estimator!r}; expected one of {ESTIMATORS}")
        if not 0.0 < self.p0 < 1.0:
            raise EstimatorError("p0 must lie strictly inside (0, 1)")
        if self.k_prior < 0.0:
            raise EstimatorError("k_prior must be >= 0")
        if self.kappa <= 0.0:
            raise EstimatorError("kappa must be > 0")
        if self.half_life is not None and self.half_life <= 0.0:
            raise EstimatorError("half_life must be > 0 when set")


@dataclass(frozen=True)
class QuestionOverride:
    """Per-question parameter override; None fields fall back to the config."""

    prior: tuple[float, float] | None = None  # (p0, k_prior)
    kappa: float | None = None
    half_life: float | None = None


def effective_config(config: EstimatorConfig, question: Question | None = None) -> EstimatorConfig:
    if question is None:
        return config
    p0, k_prior = config.p0, config.k_prior
    if question.prior_override is not None:
        p0, k_prior = question.prior_override
    return replace(
        config,
        p0=p0,
        k_prior=k_prior,
        kappa=question.kappa_override if question.kappa_override is not None else config.kappa,
        half_life=question.half_life_override if question.half_life_override is not None else config.half_life,
    )


def half_life_weights(
    answers: Sequence[Answer], half_life: float | None, now: datetime
) -> np.ndarray:
    """w_i = 2^(-age_i / half_life); all ones when no half-life is set."""
    if half_life is None:
        return np.ones(len(answers))
    if half_life <= 0:
        raise EstimatorError("half_life must be > 0")
    if now.tzinfo is None:
        now = now.replace(tzinfo=timezone.utc)
    ages = np.array([(now - a.timestamp).total_seconds() for a in answers], dtype=float)
    if np.any(ages < 0):
        warnings.warn("answers dated after 'now'; clamping their age to 0", ModelWarning, stacklevel=2)
        ages = np.maximum(ages, 0.0)
    return np.exp2(-ages / half_life)


def _values(answers: Sequence[float]) -> np.ndarray:
    vals = np.asarray(list(answers), dtype=float)
    if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
        raise EstimatorError("answers must lie in [0, 1]")
    return vals


@dataclass(frozen=True)
class EqualAverageResult:
    estimate: float
    residuals: tuple[float, ...]
    sample_sd: float | None  # undefined for n = 1
    spread: tuple[float, float]  # mean +/- sd clamped to [0, 1]; degenerate for n = 1
    n: int


def estimate_equal_average(answers: Sequence[float]) -> EqualAverageResult:
    """Arithmetic mean with residual/sd/spread noise analysis. Unweighted."""
    vals = _values(answers)
    n = vals.size
    if n == 0:
        raise NoDataError("equal-average needs at least one answer")
    mean = float(vals.sum() / n)
    residuals = tuple(float(v - mean) for v in vals)
    if n > 1:
        sd = float(math.sqrt(sum(r * r for r in residuals) / (n - 1)))
        spread = (max(0.0, mean - sd), min(1.0, mean + sd))
    else:
        sd = None
        spread = (mean, mean)
    return EqualAverageResult(mean, residuals, sd, spread, n)


def estimate_middle_value(answers: Sequence[float], weights: Sequence[float] | None = None) -> float:
    """Weighted median: smallest value whose cumulative weight reaches half
    the total; exact halves resolve to the lower value."""
    vals = _values(answers)
    if vals.size == 0:
        raise NoDataError("middle-value needs at least one answer")
    w = np.ones(vals.size) if weights is None else np.asarray(list(weights), dtype=float)
    if w.shape != vals.shape:
        raise EstimatorError("weights must match answers in length")
    if np.any(w < 0):
        raise EstimatorError("weights must be >= 0")
    total = float(w.sum())
    if total <= 0.0:
        raise NoDataError("all weights are zero")
    order = np.argsort(vals, kind="stable")
    half = total / 2.0
    cum = 0.0
    for i in order:
        cum += float(w[i])
        if cum >= half - 1e-12 * total:
            return float(vals[i])
    return float(vals[order[-1]])


def estimate_balanced_average(answers: Sequence[float], weights: Sequence[float] | None = None) -> float:
    """Weighted mean on the log-odds scale, mapped back to [0, 1]."""
    vals = _values(answers)
    if vals.size == 0:
        raise NoDataError("balanced-average needs at least one answer")
    w = np.ones(vals.size) if weights is None else np.asarray(list(weights), dtype=float)
    if w.shape != vals.shape:
        raise EstimatorError("weights must match answers in length")
    total = float(w.sum())
    if total <= 0.0:
        raise NoDataError("all weights are zero")
    clipped = np.clip(vals, LOGIT_EPS, 1.0 - LOGIT_EPS)
    logits = np.log(clipped / (1.0 - clipped))
    mean_logit = float(np.dot(w, logits) / total)
    return float(1.0 / (1.0 + math.exp(-mean_logit)))


@dataclass(frozen=True)
class AnchoredResult:
    estimate: float
    interval95: tuple[float, float]


def estimate_anchored_average(
    answers: Sequence[float],
    weights: Sequence[float] | None,
    p0: float,
    k_prior: float,
) -> AnchoredResult:
    """Prior-regularized weighted mean (a0+S)/(a0+b0+T).

    The 95% noise band is the equal-tail interval of the Beta whose mean is
    the estimate, shapes (a0+S, b0+T-S); degenerate when a shape hits zero.
    """
    vals = _values(answers)
    if k_prior < 0:
        raise EstimatorError("k_prior must be >= 0")
    if k_prior > 0 and not 0.0 < p0 < 1.0:
        raise EstimatorError("p0 must lie in (0, 1) when the prior is active")
    w = np.ones(vals.size) if weights is None else np.asarray(list(weights), dtype=float)
    if w.shape != vals.shape:
        raise EstimatorError("weights must match answers in length")
    a0 = p0 * k_prior
    b0 = (1.0 - p0) * k_prior
    s = float(np.dot(w, vals)) if vals.size else 0.0
    t = float(w.sum()) if vals.size else 0.0
    if k_prior == 0.0 and t <= 0.0:
        raise NoDataError("anchored-average without a prior needs weighted answers")
    if vals.size == 0:
        estimate = p0  # prior mean, exactly
    else:
        estimate = (a0 + s) / (a0 + b0 + t)
    alpha = a0 + s
    beta = b0 + t - s
    if alpha > 0.0 and beta > 0.0:
        lo, hi = stats.beta.ppf((0.025, 0.975), alpha, beta)
        interval = (float(lo), float(hi))
    else:
        interval = (estimate, estimate)
    return AnchoredResult(float(estimate), interval)


@dataclass(frozen=True)
class ConsensusResult:
    mean: float
    sd: float
    interval95: tuple[float, float]


def _consensus_log_kernel(
    grid: np.ndarray,
    values: np.ndarray,
    weights: np.ndarray,
    a0: float,
    b0: float,
    kappa: float,
) -> np.ndarray:
    log_k = np.zeros_like(grid)
    if a0 > 0.0 and b0 > 0.0:
        log_k += (a0 - 1.0) * np.log(grid) + (b0 - 1.0) * np.log1p(-grid)
    a = kappa * grid
    b = kappa * (1.0 - grid)
    for y, w in zip(values, weights):
        if w == 0.0:
            continue
        yc = min(max(float(y), LOGIT_EPS), 1.0 - LOGIT_EPS)
        log_f = (a - 1.0) * math.log(yc) + (b - 1.0) * math.log1p(-yc) - betaln(a, b)
        log_k += w * log_f
    return log_k


def _grid_summary(grid: np.ndarray, log_kernel: np.ndarray) -> ConsensusResult:
    dens = np.exp(log_kernel - log_kernel.max())
    z = float(_trapezoid(dens, grid))
    if z <= 0.0 or not math.isfinite(z):
        raise EstimatorError("consensus posterior vanished numerically")
    pdf = dens / z
    mean = float(_trapezoid(grid * pdf, grid))
    var = float(_trapezoid((grid - mean) ** 2 * pdf, grid))
    sd = math.sqrt(max(var, 0.0))
    segment = 0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid)
    cdf = np.concatenate(([0.0], np.cumsum(segment)))
    cdf /= cdf[-1]
    lo = float(np.interp(0.025, cdf, grid))
    hi = float(np.interp(0.975, cdf, grid))
    return ConsensusResult(mean, sd, (lo, hi))


def estimate_expert_consensus(
    answers: Sequence[float],
    weights: Sequence[float] | None,
    p0: float,
    k_prior: float,
    kappa: float = DEFAULT_KAPPA,
) -> ConsensusResult:
    """Latent-consensus posterior: Beta(a0, b0) prior, Beta(kappa*p, kappa*(1-p))
    likelihood per answer, weights as likelihood exponents.

    Two-stage grid: 121 coarse points find the mass-carrying region, 401 fine
    points over that region (padded by 3 coarse cells) yield the summary.
    """
    if kappa <= 0.0:
        raise EstimatorError("kappa must be > 0")
    if k_prior < 0:
        raise EstimatorError("k_prior must be >= 0")
    if k_prior > 0 and not 0.0 < p0 < 1.0:
        raise EstimatorError("p0 must lie in (0, 1) when the prior is active")
    vals = _values(answers)
    w = np.ones(vals.size) if weights is None else np.asarray(list(weights), dtype=float)
    if w.shape != vals.shape:
        raise EstimatorError("weights must match answers in length")

    a0 = p0 * k_prior
    b0 = (1.0 - p0) * k_prior
    effective_n = float(w.sum()) if vals.size else 0.0
    if vals.size == 0 or effective_n == 0.0:
        if k_prior > 0.0:
            sd = math.sqrt(a0 * b0 / ((a0 + b0) ** 2 * (a0 + b0 + 1.0)))
            lo, hi = stats.beta.ppf((0.025, 0.975), a0, b0)
            return ConsensusResult(float(p0), float(sd), (float(lo), float(hi)))
        # uniform reference Beta(1, 1)
        return ConsensusResult(0.5, math.sqrt(1.0 / 12.0), (0.025, 0.975))

    coarse = np.linspace(SUPPORT_EPS, 1.0 - SUPPORT_EPS, COARSE_POINTS)
    log_coarse = _consensus_log_kernel(coarse, vals, w, a0, b0, kappa)
    rel = log_coarse - log_coarse.max()
    carrying = np.flatnonzero(rel >= math.log(REGION_REL_DENSITY))
    lo_i = max(0, int(carrying[0]) - COARSE_PAD_CELLS)
    hi_i = min(COARSE_POINTS - 1, int(carrying[-1]) + COARSE_PAD_CELLS)
    fine = np.linspace(coarse[lo_i], coarse[hi_i], FINE_POINTS)
    log_fine = _consensus_log_kernel(fine, vals, w, a0, b0, kappa)
    return _grid_summary(fine, log_fine)


def estimate_latest_answer(answers: Sequence[float]) -> float:
    """Most recent entry; the ledger keeps per-question chronological order,
    with append order breaking timestamp ties."""
    vals = _values(answers)
    if vals.size == 0:
        raise NoDataError("latest-answer needs at least one answer")
    return float(vals[-1])


def estimate_cautious_average(answers: Sequence[float]) -> float:
    """Root mean square of the raw values; high judgments weigh in harder.
    Half-life weighting deliberately does not apply here."""
    vals = _values(answers)
    if vals.size == 0:
        raise NoDataError("cautious-average needs at least one answer")
    return float(math.sqrt(float(np.mean(vals * vals))))


def run_estimator(
    name: str,
    values: Sequence[float],
    weights: Sequence[float] | None,
    config: EstimatorConfig,
) -> float:
    """Dispatch on estimator name; raises NoDataError when nothing backs a value."""
    if name == "equal-average":
        return estimate_equal_average(values).estimate
    if name == "middle-value":
        return estimate_middle_value(values, weights)
    if name == "balanced-average":
        return estimate_balanced_average(values, weights)
    if name == "anchored-average":
        return estimate_anchored_average(values, weights, config.p0, config.k_prior).estimate
    if name == "expert-consensus":
        return estimate_expert_consensus(values, weights, config.p0, config.k_prior, config.kappa).mean
    if name == "latest-answer":
        return estimate_latest_answer(values)
    if name == "cautious-average":
        return estimate_cautious_average(values)
    raise EstimatorError(f"unknown estimator {name!r}")


# -- per-question summary (noise analysis) ------------------------------------


@dataclass(frozen=True)
class QuestionSummary:
    question_id: str
    n: int
    values: tuple[float, ...]
    estimates: Mapping[str, float]
    location: float | None  # the configured estimator's value
    residuals: tuple[float, ...]
    sample_sd: float | None
    spread: tuple[float, float] | None         # equal-average mean +/- sd
    anchored_interval: tuple[float, float] | None
    consensus_sd: float | None
    consensus_interval: tuple[float, float] | None


def summarize_question(
    question: Question,
    answers: Sequence[Answer],
    config: EstimatorConfig,
    now: datetime | None = None,
) -> QuestionSummary:
    cfg = effective_config(config, question)
    now = now or datetime.now(timezone.utc)
    weights = half_life_weights(answers, cfg.half_life, now)
    values = [a.value for a in answers]

    estimates: dict[str, float] = {}
    for name in ESTIMATORS:
        try:
            estimates[name] = run_estimator(name, values, weights, cfg)
        except NoDataError:
            pass

    residuals: tuple[float, ...] = ()
    sample_sd = None
    spread = None
    anchored_interval = None
    consensus_sd = None
    consensus_interval = None
    if values:
        eq = estimate_equal_average(values)
        residuals, sample_sd, spread = eq.residuals, eq.sample_sd, eq.spread
    if values or cfg.k_prior > 0:
        anchored = estimate_anchored_average(values, weights, cfg.p0, cfg.k_prior)
        anchored_interval = anchored.interval95
        consensus = estimate_expert_consensus(values, weights, cfg.p0, cfg.k_prior, cfg.kappa)
        consensus_sd = consensus.sd
        consensus_interval = consensus.interval95

    return QuestionSummary(
        question_id=question.id,
        n=len(values),
        values=tuple(values),
        estimates=estimates,
        location=estimates.get(cfg.estimator),
        residuals=residuals,
        sample_sd=sample_sd,
        spread=spread,
        anchored_interval=anchored_interval,
        consensus_sd=consensus_sd,
        consensus_interval=consensus_interval,
    )


# -- CPT materialization -------------------------------------------------------


@dataclass(frozen=True)
class MaterializeReport:
    filled: tuple[tuple[str, ParentConfig], ...]
    skipped: tuple[tuple[str, ParentConfig, str], ...]
    invalid: tuple[tuple[str, ParentConfig, float], ...]


def materialize_cpts(
    dag: RiskDag,
    cpts: Mapping[str, Cpt],
    ledger: AnswerLedger,
    config: EstimatorConfig,
    overrides: Mapping[str, QuestionOverride] | None = None,
    now: datetime | None = None,
) -> tuple[dict[str, Cpt], MaterializeReport]:
    """Estimate every asked state independently, complete the last state, and
    reject (never renormalize) rows whose asked states already exceed 1."""
    now = now or datetime.now(timezone.utc)
    overrides = overrides or {}
    out = {nid: c.copy() for nid, c in cpts.items()}
    filled: list[tuple[str, ParentConfig]] = []
    skipped: list[tuple[str, ParentConfig, str]] = []
    invalid: list[tuple[str, ParentConfig, float]] = []

    for nid, cpt in out.items():
        node = dag.node(nid) if nid in dag else None
        if node is None or node.kind.is_gate:
            continue
        if cpt.is_stale(dag):
            for cfg_row in cpt.expected_configs():
                skipped.append((nid, cfg_row, "stale-snapshot"))
            continue
        for cfg_row in cpt.expected_configs():
            estimates: list[float] = []
            answered = 0
            for s in range(cpt.k - 1):
                qid = question_id(nid, s, cfg_row)
                ov = overrides.get(qid)
                question = Question(
                    id=qid,
                    node_id=nid,
                    state_index=s,
                    config=cfg_row,
                    prior_override=ov.prior if ov else None,
                    kappa_override=ov.kappa if ov else None,
                    half_life_override=ov.half_life if ov else None,
                )
                eff = effective_config(config, question)
                answers = ledger.for_question(qid)
                values = [a.value for a in answers]
                prior_backed = eff.estimator in ("anchored-average", "expert-consensus") and eff.k_prior > 0
                if not values and not prior_backed:
                    continue
                weights = half_life_weights(answers, eff.half_life, now)
                try:
                    estimates.append(run_estimator(eff.estimator, values, weights, eff))
                    answered += 1
                except NoDataError:
                    continue
            if answered == 0:
                skipped.append((nid, cfg_row, "no-data"))
                continue
            if answered < cpt.k - 1:
                cpt.mark_partial(cfg_row)
                skipped.append((nid, cfg_row, "partial"))
                continue
            try:
                row = complete_last_state(estimates, cpt.k)
            except RowSumError as exc:
                cpt.mark_invalid(cfg_row)
                invalid.append((nid, cfg_row, exc.total))
                continue
            cpt.set_row(cfg_row, row)
            filled.append((nid, cfg_row))

    return out, MaterializeReport(tuple(filled), tuple(skipped), tuple(invalid))
