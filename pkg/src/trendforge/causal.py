"""Five-minute panel construction and quasi-Poisson fixed-effects fitting.

The estimand is the jump in new-tweet volume when a hashtag reaches the
trending page: counts per (hashtag, bin) are regressed with a log link on
a trending indicator, a linear time trend, their interaction, the volume
of network-exposed tweets, an optional top-10 indicator and hashtag fixed
effects. Inference uses a cluster-robust sandwich aggregated by hashtag,
with a quasi-Poisson dispersion reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import qr as scipy_qr
from scipy.stats import chi2

from .datastore import TOP10, TOP50, CampaignDataset
from .errors import (
    EmptyPanel,
    NotConverged,
    NoTrendingInterval,
    RankDeficient,
    SeparationSuspected,
    TermMissing,
)
from .exposure import NETWORK_EXPOSED, TRENDING_EXPOSED

EARLIEST = "earliest"
DONUT_HOLE = "donut_hole"

TRENDING_EXPOSED_ONLY = "trending_exposed_only"
ALL_NON_ASTROTURFED = "all_non_astroturfed"

# model terms, in design-matrix column order
T_INTERCEPT = "intercept"
T_TRENDING = "trending"
T_TIME = "time"
T_TRENDING_TIME = "trending_time"
T_EXPOSURE = "exposure"
T_TOP10 = "top10"

COEF_CAP = 30.0
MAX_ITER = 50
DEVIANCE_RTOL = 1e-8
SCORE_TOL = 1e-6


@dataclass(frozen=True)
class ModelSpec:
    outcome_mode: str = TRENDING_EXPOSED_ONLY
    include_top10: bool = False
    strategy: str = EARLIEST
    window: tuple[int, int] = (-288, 48)  # bins: -24 h .. +4 h
    bin_seconds: int = 300

    def __post_init__(self):
        if self.outcome_mode not in (TRENDING_EXPOSED_ONLY, ALL_NON_ASTROTURFED):
            raise ValueError(f"unknown outcome_mode {self.outcome_mode!r}")
        if self.strategy not in (EARLIEST, DONUT_HOLE):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        min_t, max_t = self.window
        if not (min_t <= 0 < max_t):
            raise ValueError("window must contain t=0")
        if self.bin_seconds <= 0:
            raise ValueError("bin_seconds must be positive")


@dataclass(frozen=True)
class PanelRow:
    hashtag: str
    t: int
    y: int
    exposed: int
    trending: int
    top10: int


def _overlaps(spans: Sequence[tuple[int, int]], lo: int, hi: int) -> bool:
    return any(s < hi and lo < e for s, e in spans)


def build_panel(
    datasets: Mapping[str, CampaignDataset],
    classifications: Mapping[str, Mapping[int, str]],
    spec: ModelSpec = ModelSpec(),
) -> tuple[list[PanelRow], list[str]]:
    """Panel rows over the event window, plus hashtags skipped for never
    trending.

    Earliest places t=0 at the recorded start of trending (assuming the
    hashtag trended at the start of the uncertainty period); donut-hole
    drops every bin intersecting the uncertainty window and places t=0
    at its end. Bins with no tweets still yield rows (zero counts are
    informative for a count model).
    """
    rows: list[PanelRow] = []
    skipped: list[str] = []
    min_t, max_t = spec.window
    for hashtag in sorted(datasets):
        ds = datasets[hashtag]
        timeline = ds.timeline
        if timeline is None:
            # no trending record at all is a wiring error, unlike a
            # recorded timeline that simply never reached the top 50
            raise NoTrendingInterval(hashtag)
        top50 = timeline.bucket_spans(TOP50)
        if not top50:
            skipped.append(hashtag)
            continue
        top10 = timeline.bucket_spans(TOP10)
        recorded_onset = top50[0][0]
        if spec.strategy == EARLIEST:
            origin = recorded_onset
            drop_lo, drop_hi = 0, 0  # empty
        else:
            origin = recorded_onset + timeline.uncertainty_s
            drop_lo, drop_hi = recorded_onset, origin

        classes = classifications.get(hashtag, {})
        y_counts: dict[int, int] = {}
        e_counts: dict[int, int] = {}
        for tw in ds.tweets:
            if ds.effective_template(tw):
                continue  # astroturfed content never counts
            b = (tw.ts - origin) // spec.bin_seconds
            cls = classes.get(tw.user_id)
            if cls == NETWORK_EXPOSED:
                e_counts[b] = e_counts.get(b, 0) + 1
            if spec.outcome_mode == ALL_NON_ASTROTURFED:
                y_counts[b] = y_counts.get(b, 0) + 1
            elif cls == TRENDING_EXPOSED:
                y_counts[b] = y_counts.get(b, 0) + 1

        for t in range(min_t, max_t):
            lo = origin + t * spec.bin_seconds
            hi = lo + spec.bin_seconds
            if drop_hi > drop_lo and lo < drop_hi and drop_lo < hi:
                continue
            rows.append(
                PanelRow(
                    hashtag=hashtag,
                    t=t,
                    y=y_counts.get(t, 0),
                    exposed=e_counts.get(t, 0),
                    trending=1 if _overlaps(top50, lo, hi) else 0,
                    top10=1 if _overlaps(top10, lo, hi) else 0,
                )
            )
    if not rows:
        raise EmptyPanel("no panel rows; are any hashtags trending?")
    return rows, skipped


@dataclass
class GlmFit:
    coefficients: dict[str, float]
    cov_terms: list[str]  # terms covered by cov_cluster, in order
    cov_cluster: np.ndarray
    dispersion: float
    n_obs: int
    n_clusters: int
    iterations: int
    converged: bool
    deviance: float
    max_abs_score: float

    def se(self, term: str) -> float:
        if term not in self.cov_terms:
            raise TermMissing(term)
        i = self.cov_terms.index(term)
        return math.sqrt(self.cov_cluster[i, i])


def _design(
    panel: Sequence[PanelRow], include_top10: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    hashtags = sorted({r.hashtag for r in panel})
    fe_terms = [f"fe:{h}" for h in hashtags[1:]]  # first hashtag is reference
    terms = [T_INTERCEPT, T_TRENDING, T_TIME, T_TRENDING_TIME, T_EXPOSURE]
    if include_top10:
        terms.append(T_TOP10)
    terms += fe_terms
    fe_index = {h: i for i, h in enumerate(hashtags)}
    n = len(panel)
    p = len(terms)
    X = np.zeros((n, p))
    y = np.empty(n)
    cl = np.empty(n, dtype=np.int64)
    n_base = 6 if include_top10 else 5
    for i, r in enumerate(panel):
        X[i, 0] = 1.0
        X[i, 1] = r.trending
        X[i, 2] = r.t
        X[i, 3] = r.trending * r.t
        X[i, 4] = r.exposed
        if include_top10:
            X[i, 5] = r.top10
        g = fe_index[r.hashtag]
        if g > 0:
            X[i, n_base + g - 1] = 1.0
        y[i] = r.y
        cl[i] = g
    return X, y, cl, terms


def _poisson_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(term - (y - mu)))


def _check_rank(X: np.ndarray, terms: list[str]) -> None:
    _, R, piv = scipy_qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max() * max(X.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        bad = sorted(terms[j] for j in piv[rank:])
        raise RankDeficient(bad)


def fit_glm(
    X: np.ndarray,
    y: np.ndarray,
    clusters: np.ndarray,
    terms: list[str],
) -> GlmFit:
    """Poisson log-link IRLS with a cluster-robust sandwich covariance.

    Coefficients are the Poisson MLE (quasi-Poisson leaves them unchanged
    and only scales the naive covariance); the reported covariance is
    A^-1 B A^-1 over the non-fixed-effect terms, where A is the Fisher
    information at the optimum and B aggregates scores by cluster, scaled
    by G/(G-1).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    clusters = np.asarray(clusters)
    n, p = X.shape
    n_clusters = len(set(clusters.tolist()))
    if n_clusters < 2:
        raise RankDeficient(["clusters (need at least 2 hashtags)"])
    if n <= p:
        raise RankDeficient(terms)
    _check_rank(X, terms)

    mu = y + 0.5
    eta = np.log(mu)
    dev = _poisson_deviance(y, mu)
    beta = None
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITER + 1):
        w = mu
        z = eta + (y - mu) / mu
        wx = X * w[:, None]
        a = X.T @ wx
        b = wx.T @ z
        try:
            beta_new = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            raise RankDeficient(terms) from None
        eta_new = np.clip(X @ beta_new, -COEF_CAP, COEF_CAP)
        mu_new = np.exp(eta_new)
        dev_new = _poisson_deviance(y, mu_new)
        # between model iterates the deviance must not increase; the first
        # step from the artificial start is exempt
        halvings = 0
        while beta is not None and dev_new > dev * (1 + 1e-12) and halvings < 30:
            eta_new = 0.5 * (eta_new + eta)
            mu_new = np.exp(eta_new)
            dev_new = _poisson_deviance(y, mu_new)
            halvings += 1
        eta, mu = eta_new, mu_new
        beta = beta_new
        score = X.T @ (y - mu)
        max_score = float(np.abs(score).max())
        rel = abs(dev - dev_new) / (abs(dev_new) + 1e-12)
        dev = dev_new
        if rel < DEVIANCE_RTOL and max_score <= SCORE_TOL:
            converged = True
            break
    if not converged:
        raise NotConverged(iterations)

    for j, term in enumerate(terms):
        if abs(beta[j]) > COEF_CAP:
            raise SeparationSuspected(term, float(beta[j]))

    resid = y - mu
    pearson = float(np.sum(resid * resid / mu))
    dispersion = pearson / (n - p)

    a = X.T @ (X * mu[:, None])
    a_inv = np.linalg.inv(a)
    score_rows = X * resid[:, None]
    g_count = n_clusters
    b_mat = np.zeros((p, p))
    for g in sorted(set(clusters.tolist())):
        s_g = score_rows[clusters == g].sum(axis=0)
        b_mat += np.outer(s_g, s_g)
    cov_full = a_inv @ b_mat @ a_inv * (g_count / (g_count - 1))

    non_fe = [i for i, t in enumerate(terms) if not t.startswith("fe:")]
    cov_terms = [terms[i] for i in non_fe]
    cov = cov_full[np.ix_(non_fe, non_fe)]
    cov = 0.5 * (cov + cov.T)  # enforce exact symmetry

    score = X.T @ (y - mu)
    return GlmFit(
        coefficients={t: float(b) for t, b in zip(terms, beta)},
        cov_terms=cov_terms,
        cov_cluster=cov,
        dispersion=dispersion,
        n_obs=n,
        n_clusters=n_clusters,
        iterations=iterations,
        converged=converged,
        deviance=dev,
        max_abs_score=float(np.abs(score).max()),
    )


def fit_quasipoisson(
    panel: Sequence[PanelRow], spec: ModelSpec = ModelSpec()
) -> GlmFit:
    """Fit the trending-effect model on a built panel (see fit_glm)."""
    X, y, clusters, terms = _design(panel, spec.include_top10)
    return fit_glm(X, y, clusters, terms)


def wald_test(fit: GlmFit, combination: Mapping[str, float]) -> tuple[float, float]:
    """Wald chi-square (1 df) for a linear combination of coefficients."""
    c = np.zeros(len(fit.cov_terms))
    for term, weight in combination.items():
        if term not in fit.cov_terms:
            raise TermMissing(term)
        c[fit.cov_terms.index(term)] = weight
    estimate = sum(w * fit.coefficients[t] for t, w in combination.items())
    variance = float(c @ fit.cov_cluster @ c)
    if variance <= 0:
        raise TermMissing("combination has zero variance")
    stat = estimate * estimate / variance
    return stat, float(chi2.sf(stat, df=1))


@dataclass(frozen=True)
class EffectEstimate:
    term: str
    estimate: float
    se: float
    percent_increase: float
    ci_low_percent: float
    ci_high_percent: float


def trending_effect_report(fit: GlmFit) -> list[EffectEstimate]:
    """Effects on the percent scale: 100 * (exp(coef) - 1), with 95% CIs
    from exp of the coefficient plus/minus 1.96 cluster-robust SEs."""

    def entry(term: str, estimate: float, se: float) -> EffectEstimate:
        return EffectEstimate(
            term=term,
            estimate=estimate,
            se=se,
            percent_increase=100.0 * (math.exp(estimate) - 1.0),
            ci_low_percent=100.0 * (math.exp(estimate - 1.96 * se) - 1.0),
            ci_high_percent=100.0 * (math.exp(estimate + 1.96 * se) - 1.0),
        )

    out = [entry(T_TRENDING, fit.coefficients[T_TRENDING], fit.se(T_TRENDING))]
    if T_TOP10 in fit.coefficients:
        out.append(entry(T_TOP10, fit.coefficients[T_TOP10], fit.se(T_TOP10)))
        total = fit.coefficients[T_TRENDING] + fit.coefficients[T_TOP10]
        c = np.zeros(len(fit.cov_terms))
        c[fit.cov_terms.index(T_TRENDING)] = 1.0
        c[fit.cov_terms.index(T_TOP10)] = 1.0
        se_total = math.sqrt(float(c @ fit.cov_cluster @ c))
        out.append(entry("trending_plus_top10", total, se_total))
    return out
