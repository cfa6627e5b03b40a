"""Stability criteria over exponent curves, per-pair and system verdicts.

Decision logic per pair, watching the stream of exponent estimates:

  * rising from the start          -> unstable in the first swing
  * falls, first peak positive     -> unstable after several swings
  * falls, first peak non-positive -> stable

The system is stable only if every assessable pair is stable; a single
unstable pair settles the system verdict immediately.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (ClassificationRefused, ClassificationTimeout,
                     LyapstabWarning, NoAssessablePairError, PeakSearchTimeout)
from .ingest import AlignedDataset, EventMeta
from .mle import iter_mle
from .pairs import SdgpConfig, SdgpTrace, build_pair_trace, identify_sdgp
from .swings import (ClassifierConfig, EstimatorParams, SwingClassifier,
                     SwingPattern, _ExtremumScanner, distance_series,
                     find_mle_start)

PENDING = "PENDING"
UNSTABLE_FIRST_SWING = "UNSTABLE_FIRST_SWING"
UNSTABLE_MULTI_SWING = "UNSTABLE_MULTI_SWING"
STABLE = "STABLE"
UNDETERMINED_TIMEOUT = "UNDETERMINED_TIMEOUT"
SKIPPED = "SKIPPED"

PAIR_STATUSES = (PENDING, UNSTABLE_FIRST_SWING, UNSTABLE_MULTI_SWING, STABLE,
                 UNDETERMINED_TIMEOUT, SKIPPED)

SYSTEM_PENDING = "PENDING"
SYSTEM_STABLE = "STABLE"
SYSTEM_UNSTABLE = "UNSTABLE"
SYSTEM_UNDETERMINED = "UNDETERMINED"

UNSTABLE_STATUSES = (UNSTABLE_FIRST_SWING, UNSTABLE_MULTI_SWING)


@dataclass
class PairVerdict:
    severe: str
    least: str
    status: str = PENDING
    decision_time: float | None = None  # s after clearing
    peak_lambda: float | None = None
    pattern: SwingPattern | None = None
    w: int | None = None
    m_n: int | None = None
    note: str | None = None


@dataclass
class SystemVerdict:
    status: str
    decision_time: float | None
    pairs: list[PairVerdict]


@dataclass(frozen=True)
class AssessmentConfig:
    """Knobs of the end-to-end pipeline; time limits are seconds after clearing."""

    sigma: float = 0.7
    n_trend: int = 24        # exponent samples for the initial-trend test
    t_max: float = 10.0
    classifier: ClassifierConfig = ClassifierConfig()


class PairAssessor:
    """Consumes (time, lambda) updates for one pair until a verdict freezes.

    The initial-trend test fires on the first ``n_trend`` updates: positive
    fitted slope plus a net rise means first-swing instability.  Otherwise
    the first confirmed peak of the (smoothed) exponent curve decides by its
    sign.  Verdicts never change once set.
    """

    def __init__(self, severe: str, least: str,
                 config: AssessmentConfig = AssessmentConfig()):
        self.cfg = config
        self.verdict = PairVerdict(severe=severe, least=least)
        self._lams: list[float] = []
        self._times: list[float] = []
        self._sm: list[float] = []
        self._hw = config.classifier.smooth_width // 2
        self._trend_done = False
        self._scanner = _ExtremumScanner(+1, config.classifier.n_peak, self._hw)

    def push(self, lam: float, t: float) -> PairVerdict:
        if self.verdict.status != PENDING:
            return self.verdict
        self._lams.append(lam)
        self._times.append(t)
        i_fin = len(self._lams) - 1 - self._hw
        if i_fin >= 0:
            lo = max(0, i_fin - self._hw)
            self._sm.append(float(np.mean(self._lams[lo:len(self._lams)])))

        if not self._trend_done and len(self._lams) == self.cfg.n_trend:
            ts = np.asarray(self._times)
            ls = np.asarray(self._lams)
            tc = ts - ts.mean()
            slope = float((tc * (ls - ls.mean())).sum() / (tc * tc).sum())
            self._trend_done = True
            if slope > 0.0 and ls[-1] > ls[0]:
                self._freeze(UNSTABLE_FIRST_SWING, t)
                return self.verdict
        if self._trend_done:
            j = self._scanner.scan(self._sm)
            if j is not None:
                peak = self._lams[j]
                self.verdict.peak_lambda = float(peak)
                self._freeze(UNSTABLE_MULTI_SWING if peak > 0.0 else STABLE, t)
        return self.verdict

    def finalize(self, t: float | None = None) -> PairVerdict:
        """Called when the stream ends or the time budget runs out."""
        if self.verdict.status == PENDING:
            self._freeze(UNDETERMINED_TIMEOUT,
                         t if t is not None else
                         (self._times[-1] if self._times else 0.0))
        return self.verdict

    def _freeze(self, status: str, t: float) -> None:
        self.verdict.status = status
        self.verdict.decision_time = float(t)


def aggregate(verdicts: list[PairVerdict]) -> SystemVerdict:
    """Combine pair verdicts: any unstable pair decides; stability needs all.

    Skipped pairs are excluded; if every pair was skipped there is nothing to
    say and :class:`NoAssessablePairError` is raised.
    """
    live = [v for v in verdicts if v.status != SKIPPED]
    if not live:
        raise NoAssessablePairError("every pair was skipped")
    unstable = [v for v in live if v.status in UNSTABLE_STATUSES]
    if unstable:
        t = min(v.decision_time for v in unstable)
        return SystemVerdict(SYSTEM_UNSTABLE, t, verdicts)
    if any(v.status == PENDING for v in live):
        return SystemVerdict(SYSTEM_PENDING, None, verdicts)
    if all(v.status == STABLE for v in live):
        t = max(v.decision_time for v in live)
        return SystemVerdict(SYSTEM_STABLE, t, verdicts)
    # at least one timeout, none unstable
    t = max(v.decision_time for v in live if v.decision_time is not None)
    return SystemVerdict(SYSTEM_UNDETERMINED, t, verdicts)


def _assess_pair(trace: SdgpTrace, pair: tuple[str, str],
                 config: AssessmentConfig) -> PairVerdict:
    severe, least = pair
    dt = trace.dt
    max_samples = int(round(config.t_max / dt))
    clf = SwingClassifier(dt, config.classifier)
    try:
        decision = clf.run(trace.rel_speed[:max_samples + 1])
    except ClassificationRefused as exc:
        warnings.warn(f"pair ({severe}, {least}) skipped: {exc}",
                      LyapstabWarning, stacklevel=3)
        return PairVerdict(severe, least, status=SKIPPED, note=str(exc))
    except ClassificationTimeout as exc:
        return PairVerdict(severe, least, status=UNDETERMINED_TIMEOUT,
                           decision_time=config.t_max, note=str(exc))

    verdict = PairVerdict(severe, least, pattern=decision.pattern, w=decision.w)
    d = distance_series(trace.rel_angle[:max_samples + 1], decision.w)
    try:
        m_n = find_mle_start(decision.pattern, decision.w, d, config.classifier)
    except PeakSearchTimeout as exc:
        verdict.status = UNDETERMINED_TIMEOUT
        verdict.decision_time = config.t_max
        verdict.note = str(exc)
        return verdict
    verdict.m_n = m_n

    params = EstimatorParams(w=decision.w, m_n=m_n, dt=dt,
                             pattern=decision.pattern,
                             decided_at=decision.decided_at)
    assessor = PairAssessor(severe, least, config)
    try:
        for t, lam in iter_mle(trace, params):
            if t > config.t_max:
                break
            if assessor.push(lam, t).status != PENDING:
                break
    except ValueError as exc:
        verdict.status = UNDETERMINED_TIMEOUT
        verdict.decision_time = config.t_max
        verdict.note = str(exc)
        return verdict
    result = assessor.finalize(min(config.t_max, (len(trace) - 1) * dt))
    verdict.status = result.status
    verdict.decision_time = result.decision_time
    verdict.peak_lambda = result.peak_lambda
    return verdict


@dataclass
class AssessmentReport:
    system: SystemVerdict
    pairs: list[PairVerdict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return {SYSTEM_STABLE: 0, SYSTEM_UNSTABLE: 2}.get(self.system.status, 3)

    def to_dict(self) -> dict:
        return {
            "system": {
                "status": self.system.status,
                "decision_time_s": self.system.decision_time,
            },
            "pairs": [
                {
                    "severe": v.severe,
                    "least": v.least,
                    "pattern": v.pattern.value if v.pattern else None,
                    "w": v.w,
                    "m_n": v.m_n,
                    "status": v.status,
                    "decision_time_s": v.decision_time,
                    "peak_lambda": v.peak_lambda,
                }
                for v in self.pairs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_assessment(dataset: AlignedDataset, meta: EventMeta,
                   config: AssessmentConfig = AssessmentConfig()) -> AssessmentReport:
    """End-to-end pipeline: pair selection, classification, exponent, verdicts.

    Per-pair failures are recorded in that pair's verdict without aborting
    the others; pair-selection failures propagate (there is nothing to run).
    """
    pairs = identify_sdgp(dataset, SdgpConfig(sigma=config.sigma))
    verdicts = [
        _assess_pair(build_pair_trace(dataset, pair), pair, config)
        for pair in pairs
    ]
    system = aggregate(verdicts)
    return AssessmentReport(system=system, pairs=verdicts)
