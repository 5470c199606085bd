"""Linear time-invariant plant: simulation, stability certificates, and
steady-state geometry.

The plant is ``x_{t+1} = A x_t + B u_t + w_t`` with a strongly stable A.
Stability is certified from the norm decay of powers of A: the returned
(gamma, kappa) satisfy ``||A^k|| <= kappa * (1-gamma)**k``, which is the
only property the downstream bounds ever use.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError, NotStronglyStableError, UnreachableTargetError
from .linalg import as_matrix, as_vector, solve_least_squares, spectral_norm, spectral_radius_estimate

K_CHECK = 200            # horizon over which the norm-decay certificate is scanned
STABILITY_MARGIN = 0.05  # fraction of the stability gap reserved as margin
MIN_STATE_BOUND = 1e-12  # keeps the smoothness constant finite on trivial problems
RADIUS_POWER = 64        # power used for the construction-time radius estimate


@dataclass(frozen=True)
class StabilityCert:
    """Decay certificate: ``||A^k|| <= kappa * (1-gamma)**k`` for all k."""

    gamma: float
    kappa: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidInputError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.kappa < 1.0:
            raise InvalidInputError(f"kappa must be >= 1, got {self.kappa}")


@dataclass(frozen=True)
class BoxSet:
    """Axis-aligned bounded box, used for both input and disturbance sets."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", as_vector(self.lower, "lower"))
        object.__setattr__(self, "upper", as_vector(self.upper, "upper"))
        if self.lower.shape != self.upper.shape:
            raise InvalidInputError("box bounds must have equal dimension")
        if np.any(self.lower > self.upper):
            raise InvalidInputError("box lower bound exceeds upper bound")

    @classmethod
    def symmetric(cls, halfwidth: float, dim: int) -> "BoxSet":
        bound = float(halfwidth) * np.ones(dim)
        return cls(-bound, bound)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def clamp(self, v: np.ndarray) -> np.ndarray:
        return np.clip(v, self.lower, self.upper)

    def contains(self, v, tol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def max_corner_norm(self) -> float:
        """2-norm of the largest-magnitude corner of the box."""
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))


@dataclass(frozen=True)
class StateBound:
    """Uniform bound D on the state norm along any admissible run."""

    d: float

    def __post_init__(self):
        if not self.d > 0.0:
            raise InvalidInputError(f"state bound must be positive, got {self.d}")


@dataclass(frozen=True)
class LtiSystem:
    """The plant ``x_{t+1} = A x_t + B u_t + w_t`` with a stable A."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.a, "A")
        b = as_matrix(self.b, "B")
        if a.shape[0] != a.shape[1]:
            raise InvalidInputError(f"A must be square, got shape {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise InvalidInputError(
                f"B must have {a.shape[0]} rows to match A, got shape {b.shape}"
            )
        radius = spectral_radius_estimate(a, RADIUS_POWER)
        if radius >= 1.0:
            raise NotStronglyStableError(
                f"estimated spectral radius {radius:.6g} >= 1; A must be stable"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def state_dim(self) -> int:
        return self.a.shape[0]

    @property
    def input_dim(self) -> int:
        return self.b.shape[1]

    @cached_property
    def steady_state_gain(self) -> np.ndarray:
        """The map S = (I - A)^{-1} B from constant inputs to steady states."""
        eye = np.eye(self.state_dim)
        return np.linalg.solve(eye - self.a, self.b)


def step(sys: LtiSystem, x, u, w) -> np.ndarray:
    """One transition ``A x + B u + w``."""
    x = as_vector(x, "state")
    u = as_vector(u, "input")
    w = as_vector(w, "disturbance")
    if x.shape[0] != sys.state_dim or w.shape[0] != sys.state_dim:
        raise InvalidInputError("state/disturbance dimension does not match the system")
    if u.shape[0] != sys.input_dim:
        raise InvalidInputError("input dimension does not match the system")
    return sys.a @ x + sys.b @ u + w


def certify_strong_stability(a, k_check: int = K_CHECK) -> StabilityCert:
    """Certify ``||A^k|| <= kappa * (1-gamma)**k`` from the decay of powers.

    gamma takes the radius estimate plus a 5% safety margin off the
    stability gap; kappa is then the smallest constant making the decay
    inequality hold for k = 0..k_check.  The zero matrix is the one case
    where gamma = 1 is valid (A^k = 0 for k >= 1).
    """
    a = as_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"A must be square, got shape {a.shape}")
    if spectral_norm(a) == 0.0:
        return StabilityCert(gamma=1.0, kappa=1.0)
    radius = spectral_radius_estimate(a, RADIUS_POWER)
    if radius >= 1.0:
        raise NotStronglyStableError(
            f"estimated spectral radius {radius:.6g} >= 1; cannot certify strong stability"
        )
    gamma = (1.0 - radius) * (1.0 - STABILITY_MARGIN)
    decay = 1.0 - gamma
    kappa = 1.0
    power = np.eye(a.shape[0])
    for k in range(1, k_check + 1):
        power = power @ a
        kappa = max(kappa, spectral_norm(power) / decay**k)
    return StabilityCert(gamma=gamma, kappa=kappa)


def steady_state_of_input(sys: LtiSystem, u) -> np.ndarray:
    """The state the plant settles at under constant input u (no disturbance)."""
    u = as_vector(u, "input")
    if u.shape[0] != sys.input_dim:
        raise InvalidInputError("input dimension does not match the system")
    return np.linalg.solve(np.eye(sys.state_dim) - sys.a, sys.b @ u)


def input_for_steady_state(sys: LtiSystem, z, tol: float | None = None) -> np.ndarray:
    """Minimum-norm input holding the plant at steady state z.

    Solves ``B u = (I - A) z`` by least squares; if the residual exceeds
    ``tol`` (default 1e-8 * (1 + ||z||)) the target is not on the
    steady-state manifold and UnreachableTargetError is raised.
    """
    z = as_vector(z, "target state")
    if z.shape[0] != sys.state_dim:
        raise InvalidInputError("target dimension does not match the system")
    if tol is None:
        tol = 1e-8 * (1.0 + float(np.linalg.norm(z)))
    rhs = (np.eye(sys.state_dim) - sys.a) @ z
    u = solve_least_squares(sys.b, rhs)
    residual = float(np.linalg.norm(sys.b @ u - rhs))
    if residual > tol:
        raise UnreachableTargetError(
            f"target is not a reachable steady state: residual {residual:.3e} > tol {tol:.3e}"
        )
    return u


def _as_step_array(seq, dim: int) -> np.ndarray:
    arr = np.asarray(seq, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, dim)
    return np.atleast_2d(arr)


def _check_sequences(sys: LtiSystem, x1, u_seq, w_seq):
    x1 = as_vector(x1, "initial state")
    if x1.shape[0] != sys.state_dim:
        raise InvalidInputError("initial state dimension does not match the system")
    u_seq = _as_step_array(u_seq, sys.input_dim)
    w_seq = _as_step_array(w_seq, sys.state_dim)
    if u_seq.shape[0] != w_seq.shape[0]:
        raise InvalidInputError(
            f"input sequence has {u_seq.shape[0]} steps but disturbance sequence has {w_seq.shape[0]}"
        )
    if u_seq.size and u_seq.shape[1] != sys.input_dim:
        raise InvalidInputError("input sequence dimension does not match the system")
    if w_seq.size and w_seq.shape[1] != sys.state_dim:
        raise InvalidInputError("disturbance sequence dimension does not match the system")
    return x1, u_seq, w_seq


def simulate(sys: LtiSystem, x1, u_seq, w_seq=None) -> np.ndarray:
    """Roll the plant forward; returns the (T, N) state trajectory.

    ``u_seq`` has T-1 rows; ``w_seq`` defaults to zeros.
    """
    if w_seq is None:
        w_seq = np.zeros((len(u_seq), sys.state_dim))
    x1, u_seq, w_seq = _check_sequences(sys, x1, u_seq, w_seq)
    horizon = u_seq.shape[0] + 1
    states = np.empty((horizon, sys.state_dim))
    states[0] = x1
    for t in range(horizon - 1):
        states[t + 1] = sys.a @ states[t] + sys.b @ u_seq[t] + w_seq[t]
    return states


def simulate_decomposed(sys: LtiSystem, x1, u_seq, w_seq):
    """Split a run into nominal and disturbance-driven parts.

    Returns (nominal, disturbed_part, full) trajectories, each (T, N):
    the nominal part evolves under the inputs alone (starting from x1),
    the disturbance part under the disturbances alone (starting from 0),
    and the full trajectory is their sum.
    """
    x1, u_seq, w_seq = _check_sequences(sys, x1, u_seq, w_seq)
    horizon = u_seq.shape[0] + 1
    nominal = np.empty((horizon, sys.state_dim))
    dist = np.empty((horizon, sys.state_dim))
    nominal[0] = x1
    dist[0] = 0.0
    for t in range(horizon - 1):
        nominal[t + 1] = sys.a @ nominal[t] + sys.b @ u_seq[t]
        dist[t + 1] = sys.a @ dist[t] + w_seq[t]
    return nominal, dist, nominal + dist


def state_bound(cert: StabilityCert, sys: LtiSystem, x1, u_set: BoxSet, w_set: BoxSet) -> StateBound:
    """Worst-case state norm over admissible inputs and disturbances.

    Sums the geometric series of decaying transition norms:
    ``D = kappa ||x1|| + (kappa/gamma) (||B|| u_max + w_max)``, clamped
    away from zero so downstream constants stay finite.
    """
    x1 = as_vector(x1, "initial state")
    u_max = u_set.max_corner_norm()
    w_max = w_set.max_corner_norm()
    d = cert.kappa * float(np.linalg.norm(x1))
    d += (cert.kappa / cert.gamma) * (spectral_norm(sys.b) * u_max + w_max)
    return StateBound(max(d, MIN_STATE_BOUND))
