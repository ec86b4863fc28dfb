"""EKF over the full object state (px, py, theta, cx, cy, l, mu).

The push dynamics rollout is the process model (latent parameters evolve as a
random walk) and the noisy pose is the observation.  Process Jacobians come
from central finite differences: the rollout is only piecewise smooth across
contact-mode switches, so analytic derivatives would be wrong at the mode
boundaries anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import chi2

from .dynamics import MIN_LIMIT_PARAM, ObjectState, PushAction, rollout
from .geometry import Pose2, ShapeContour, wrap_angle

STATE_DIM = 7
_H = np.hstack([np.eye(3), np.zeros((3, 4))])
GATE_THRESHOLD = float(chi2.ppf(0.999, df=3))
GATE_INFLATION = 0.25  # diagonal growth per gated update

L_BOUNDS = (1e-3, 0.5)
MU_BOUNDS = (0.01, 2.0)


@dataclass(frozen=True)
class FilterConfig:
    """Process-noise scales and finite-difference settings.

    Pose noise std-devs scale linearly with push length, referenced to a 5 cm
    push; c/l/mu noise is a small constant per step.
    """

    q_pos: float = 1e-3       # m std per 5 cm push
    q_theta: float = 0.01     # rad std per 5 cm push
    q_com: float = 5e-4       # m std per step
    q_l: float = 5e-4
    q_mu: float = 0.01
    substep: float = 0.005
    fd_deltas: tuple = (1e-5, 1e-5, 1e-5, 1e-5, 1e-5, 1e-5, 1e-4)


DEFAULT_FILTER_CONFIG = FilterConfig()


@dataclass(frozen=True)
class BeliefState:
    """Gaussian belief over the 7-dim object state.

    `gated` is True when the most recent observation was rejected by the
    innovation gate (the update was skipped).
    """

    mean: np.ndarray
    cov: np.ndarray
    gated: bool = False

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).copy()
        cov = np.asarray(self.cov, dtype=float).copy()
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def pose(self) -> Pose2:
        return Pose2(self.mean[:2], self.mean[2])

    def object_state(self) -> ObjectState:
        m = self.mean
        return ObjectState(
            Pose2(m[:2], m[2]), m[3:5],
            _clip(m[5], L_BOUNDS), _clip(m[6], MU_BOUNDS),
        )


def _clip(x, bounds):
    return min(max(float(x), bounds[0]), bounds[1])


def _require_pd(mat: np.ndarray, name: str) -> None:
    sym_err = np.abs(mat - mat.T).max()
    if sym_err > 1e-9:
        raise ValueError(f"{name} is not symmetric (max asymmetry {sym_err:.2e})")
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is not positive definite") from None


def init_belief(obs0, l0: float = 0.04, mu0: float = 0.3,
                prior_cov: np.ndarray | None = None) -> BeliefState:
    """Belief from the first observation: COM at zero, l and mu at their priors."""
    if prior_cov is None:
        prior_cov = np.diag([4e-6, 4e-6, 1e-3, 9e-4, 9e-4, 4e-4, 0.04])
    prior_cov = np.asarray(prior_cov, dtype=float)
    _require_pd(prior_cov, "prior_cov")
    p = obs0.pose
    mean = np.array([p.position[0], p.position[1], p.theta, 0.0, 0.0, l0, mu0])
    return BeliefState(mean, prior_cov)


def _process(mean: np.ndarray, action: PushAction, contour: ShapeContour,
             substep: float) -> np.ndarray:
    """Apply the push to a 7-vector; c, l, mu pass through unchanged."""
    state = ObjectState(
        Pose2(mean[:2], mean[2]), mean[3:5],
        _clip(mean[5], L_BOUNDS), _clip(mean[6], MU_BOUNDS),
    )
    pred = rollout(state, contour, action, substep)
    out = mean.copy()
    out[0] += pred.delta_position[0]
    out[1] += pred.delta_position[1]
    out[2] = wrap_angle(out[2] + pred.delta_theta)
    return out


def _process_noise(action: PushAction, config: FilterConfig) -> np.ndarray:
    scale = action.length / 0.05
    return np.diag([
        (config.q_pos * scale) ** 2,
        (config.q_pos * scale) ** 2,
        (config.q_theta * scale) ** 2,
        config.q_com ** 2,
        config.q_com ** 2,
        config.q_l ** 2,
        config.q_mu ** 2,
    ])


def process_jacobian(mean: np.ndarray, action: PushAction, contour: ShapeContour,
                     config: FilterConfig = DEFAULT_FILTER_CONFIG) -> np.ndarray:
    """Central finite-difference Jacobian of the process map."""
    F = np.zeros((STATE_DIM, STATE_DIM))
    for j in range(STATE_DIM):
        d = config.fd_deltas[j]
        hi = mean.copy()
        lo = mean.copy()
        hi[j] += d
        lo[j] -= d
        ghi = _process(hi, action, contour, config.substep)
        glo = _process(lo, action, contour, config.substep)
        diff = ghi - glo
        diff[2] = wrap_angle(ghi[2] - glo[2])
        F[:, j] = diff / (2.0 * d)
    return F


def predict(belief: BeliefState, action: PushAction, contour: ShapeContour,
            config: FilterConfig = DEFAULT_FILTER_CONFIG) -> BeliefState:
    """Propagate the belief through the push dynamics (substep rollout)."""
    Q = _process_noise(action, config)
    try:
        mean = _process(belief.mean, action, contour, config.substep)
        F = process_jacobian(belief.mean, action, contour, config)
    except Exception:
        # declared miss: keep the mean, admit extra uncertainty
        cov = belief.cov + 4.0 * Q
        return BeliefState(belief.mean, 0.5 * (cov + cov.T))
    cov = F @ belief.cov @ F.T + Q
    return BeliefState(mean, 0.5 * (cov + cov.T))


def update(belief: BeliefState, obs, R: np.ndarray) -> BeliefState:
    """EKF pose update (Joseph form) with a chi-square innovation gate."""
    R = np.asarray(R, dtype=float)
    _require_pd(R, "R")
    z = obs.pose.as_array()
    y = z - _H @ belief.mean
    y[2] = wrap_angle(y[2])
    S = _H @ belief.cov @ _H.T + R
    maha = float(y @ np.linalg.solve(S, y))
    if maha > GATE_THRESHOLD:
        # skip the update, but admit the model miss: without re-opening the
        # covariance a single overconfident collapse would gate out every
        # later observation for good
        cov = belief.cov + GATE_INFLATION * np.diag(np.diag(belief.cov))
        return BeliefState(belief.mean, cov, gated=True)
    K = belief.cov @ _H.T @ np.linalg.inv(S)
    mean = belief.mean + K @ y
    mean[2] = wrap_angle(mean[2])
    mean[5] = _clip(mean[5], L_BOUNDS)
    mean[6] = _clip(mean[6], MU_BOUNDS)
    IKH = np.eye(STATE_DIM) - K @ _H
    cov = IKH @ belief.cov @ IKH.T + K @ R @ K.T
    return BeliefState(mean, 0.5 * (cov + cov.T), gated=False)
