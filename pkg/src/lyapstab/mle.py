"""Maximal Lyapunov exponent estimation via growing-window recursive least squares.

The observable is the log of the separation distance between two segments of
one relative-angle series; its slope against time is the exponent.  The
recursive update never inverts a matrix after initialisation:

    gain  g = P x / (1 + x' P x)
    est   E += g (y - x' E)
    cov   P -= g x' P

with regressor x = (t, 1).  A two-point exact fit seeds the recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularInitError
from .pairs import SdgpTrace
from .swings import EstimatorParams

# Distances can hit exact zero at oscillation nodes; clamp before the log.
EPS_DISTANCE = 1e-12  # rad


def log_distance(d: float) -> float:
    """Natural log of the separation, clamped away from log(0)."""
    if d < 0.0:
        raise ValueError("distances are magnitudes; got a negative value")
    return math.log(max(d, EPS_DISTANCE))


@dataclass
class RlsState:
    """Running line fit L = lambda_hat * t + c_hat with covariance P.

    ``k`` counts observations absorbed beyond the two-point initialisation;
    ``residual_stat`` accumulates squared innovations as a fit diagnostic.
    """

    lambda_hat: float
    c_hat: float
    P: np.ndarray
    k: int = 1
    residual_stat: float = 0.0
    t_last: float = field(default=math.nan)

    def predict(self, t: float) -> float:
        return self.lambda_hat * t + self.c_hat


def rls_init(L0: float, L1: float, t0: float, t1: float) -> RlsState:
    """Exact two-point initialisation: line through the first observations.

    P is the inverse of the 2x2 normal matrix of rows (t0, 1), (t1, 1),
    written in closed form: det = (t0 - t1)^2.
    """
    if not t1 > t0:
        raise SingularInitError(f"need t1 > t0, got t0={t0!r}, t1={t1!r}")
    lam = (L1 - L0) / (t1 - t0)
    det = (t0 - t1) ** 2
    P = np.array([[2.0, -(t0 + t1)], [-(t0 + t1), t0 * t0 + t1 * t1]]) / det
    return RlsState(lambda_hat=lam, c_hat=L0 - lam * t0, P=P, k=1, t_last=t1)


def rls_update(state: RlsState, L_new: float, t_new: float) -> RlsState:
    """Absorb one observation; updates the state in place and returns it."""
    if not math.isfinite(L_new):
        raise ValueError("non-finite observation")
    if not t_new > state.t_last:
        raise ValueError(f"times must increase: {t_new!r} after {state.t_last!r}")
    x = np.array([t_new, 1.0])
    Px = state.P @ x
    gain = Px / (1.0 + x @ Px)
    innovation = L_new - (state.lambda_hat * t_new + state.c_hat)
    state.lambda_hat += gain[0] * innovation
    state.c_hat += gain[1] * innovation
    P = state.P - np.outer(gain, Px)
    state.P = 0.5 * (P + P.T)
    state.k += 1
    state.residual_stat += innovation * innovation
    state.t_last = t_new
    return state


@dataclass
class MleSeries:
    """Exponent estimate after each absorbed observation, at absolute times."""

    times: np.ndarray
    lambdas: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


def iter_mle(trace: SdgpTrace, params: EstimatorParams):
    """Yield (time, lambda_hat) pairs as the fit absorbs the distance stream.

    Fitted points are L_i = log |theta_{m_n + i} - theta_{m_n - w + i}| at
    absolute times (m_n + i) * dt.  Internally the fit runs on times relative
    to the fitting start (pure reparameterisation: the slope is unchanged and
    better conditioned).  The first value arrives with the second point.
    """
    theta = trace.rel_angle
    w, m_n, dt = params.w, params.m_n, params.dt
    if len(theta) < m_n + 2:
        raise ValueError(
            f"need at least {m_n + 2} angle samples to start fitting, "
            f"have {len(theta)}")

    def L(i: int) -> float:
        j = (m_n - w) + i
        return log_distance(abs(theta[j + w] - theta[j]))

    state = rls_init(L(0), L(1), 0.0, dt)
    yield (m_n + 1) * dt, state.lambda_hat
    for i in range(2, len(theta) - m_n):
        rls_update(state, L(i), i * dt)
        yield (m_n + i) * dt, state.lambda_hat


def estimate_stream(trace: SdgpTrace, params: EstimatorParams) -> MleSeries:
    """Run the exponent fit over all available data of one pair."""
    times, lambdas = [], []
    for t, lam in iter_mle(trace, params):
        times.append(t)
        lambdas.append(lam)
    return MleSeries(times=np.array(times), lambdas=np.array(lambdas))
