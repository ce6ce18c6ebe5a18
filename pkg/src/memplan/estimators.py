"""Estimator-style entry points.

Thin wrappers over the functional modules so pipelines get the familiar
fit / transform / predict / get_params surface. All learned state lives
in trailing-underscore attributes; constructor args are stored verbatim.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import autoswap, swapsim
from .autoswap import MIB, ScoreWeights, TransferModel
from .errors import LimitUnreachable
from .smartpool import build_conflict_graph, make_lookup_table, plan_pool
from .trace import validate_trace
from .validation import as_profile, as_trace, check_positive


class IterationAnalyzer(BaseEstimator):
    """Detects the repeating iteration of a trace and extracts the
    per-variable lifetime profile of its last full period."""

    def fit(self, X, y=None):
        trace = as_trace(X)
        validate_trace(trace)
        self.profile_ = as_profile(trace)
        self.period_ = self.profile_.period
        self.window_ = self.profile_.window
        self.peak_bytes_ = self.profile_.load.peak_bytes
        return self

    def transform(self, X):
        return as_profile(X)

    def fit_transform(self, X, y=None):
        return self.fit(X).profile_


class PoolPlanner(BaseEstimator):
    """Plans static pool offsets for one iteration window.

    predict maps window-relative malloc op indices to byte offsets.
    """

    def __init__(self, policy: str = "best_fit"):
        self.policy = policy

    def fit(self, X, y=None):
        profile = as_profile(X)
        self.profile_ = profile
        self.graph_ = build_conflict_graph(profile)
        self.plan_ = plan_pool(self.graph_, policy=self.policy)
        self.footprint_bytes_ = self.plan_.footprint_bytes
        self.peak_load_bytes_ = self.plan_.peak_load_bytes
        self.alpha_ = self.plan_.competitive_ratio
        self.lookup_ = make_lookup_table(self.plan_, profile)
        return self

    def predict(self, X):
        indices = np.asarray(X, dtype=int).ravel()
        return np.array([self.lookup_.offset_for(int(i)) for i in indices])

    def transform(self, X):
        return self.predict(X)


class SwapPlanner(BaseEstimator):
    """Plans swaps to keep one iteration under a byte limit, then
    simulates the plan to measure achieved peak and time overhead."""

    def __init__(self,
                 limit_bytes: int,
                 score: str = "swdoa",
                 threshold_bytes: int = MIB,
                 bandwidth_bytes_per_s: float = 12e9,
                 latency_us: float = 10.0,
                 weights: ScoreWeights | None = None,
                 bo_budget: int = 40,
                 seed: int = 0):
        self.limit_bytes = limit_bytes
        self.score = score
        self.threshold_bytes = threshold_bytes
        self.bandwidth_bytes_per_s = bandwidth_bytes_per_s
        self.latency_us = latency_us
        self.weights = weights
        self.bo_budget = bo_budget
        self.seed = seed

    def _select_and_simulate(self, profile, score, weights):
        selection = autoswap.select_by_score(
            self.candidates_, profile, self.limit_bytes,
            score=score, weights=weights,
        )
        schedule = swapsim.build_schedule(selection, profile)
        result = swapsim.simulate(schedule, profile, self.limit_bytes)
        return selection, result

    def fit(self, X, y=None):
        check_positive("limit_bytes", self.limit_bytes)
        profile = as_profile(X)
        self.profile_ = profile
        transfer = TransferModel(
            bandwidth_bytes_per_s=self.bandwidth_bytes_per_s,
            latency_us=self.latency_us,
        )
        self.candidates_ = autoswap.filter_candidates(
            profile, threshold_bytes=self.threshold_bytes, transfer=transfer,
        )
        self.load_min_ = swapsim.compute_load_min(profile, self.candidates_)
        if self.limit_bytes < profile.load.peak_bytes \
                and self.limit_bytes < self.load_min_:
            raise LimitUnreachable(self.limit_bytes, self.load_min_)

        self.weights_ = self.weights
        if self.score == "bo":
            def overhead_of(w: ScoreWeights) -> float:
                _, res = self._select_and_simulate(profile, "combined", w)
                return res.overhead_us

            self.weights_, _ = autoswap.optimize_weights(
                overhead_of, budget=self.bo_budget, seed=self.seed,
            )
            score = "combined"
        else:
            score = self.score
        self.selection_, self.result_ = self._select_and_simulate(
            profile, score, self.weights_,
        )
        self.schedule_ = self.result_.schedule
        self.overhead_us_ = self.result_.overhead_us
        self.achieved_peak_bytes_ = self.result_.achieved_peak_bytes
        return self

    def transform(self, X=None):
        """Profile of the fitted window with swapped lifetimes split at
        their scheduled absences, ready for pool planning. X is ignored:
        the split only makes sense for the window fit saw."""
        return swapsim.combine_with_pool(self.profile_, self.schedule_)
