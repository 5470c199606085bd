"""Online policies: the target-state controller (projected online gradient
descent over the steady-state manifold) and the disturbance-action baseline.

Both controllers follow the same round protocol: ``act`` is called with the
observed state and returns an admissible input, then ``observe`` delivers the
round's feedback (a cost gradient for the target-state controller, the full
cost oracle for the disturbance-action one) together with the next state.
"""

import math
from dataclasses import dataclass

import numpy as np

from .costs import CostOracle
from .errors import InvalidInputError, ProjectionFailureError
from .linalg import as_vector, spectral_norm
from .system import BoxSet, LtiSystem, StabilityCert, input_for_steady_state

PROJECTION_MOVE_TOL = 1e-10   # stop the inner descent once iterates move less than this
PROJECTION_MAX_ITER = 5000
PROJECTION_FAIL_TOL = 1e-6    # movement above this at the cap is a hard failure
PROJECTION_TOL = 1e-7         # advertised accuracy of the computed projection


def _box_descent(grad_fn, step: float, u0: np.ndarray, u_set: BoxSet):
    """Fixed-step projected gradient descent over a box.

    Returns (u, iterations, last_move).  Raises ProjectionFailureError if
    the iteration cap is hit while the iterate is still moving by more
    than PROJECTION_FAIL_TOL.
    """
    u = u_set.clamp(u0)
    moved = np.inf
    for it in range(1, PROJECTION_MAX_ITER + 1):
        u_next = u_set.clamp(u - step * grad_fn(u))
        moved = float(np.linalg.norm(u_next - u))
        u = u_next
        if moved < PROJECTION_MOVE_TOL:
            return u, it, moved
    if moved > PROJECTION_FAIL_TOL:
        raise ProjectionFailureError(
            f"projection did not converge: still moving {moved:.3e} after {PROJECTION_MAX_ITER} iterations"
        )
    return u, PROJECTION_MAX_ITER, moved


def _project_input(sys: LtiSystem, u_set: BoxSet, y: np.ndarray, u0=None, step=None):
    """Input u in the box whose steady state S u is closest to y."""
    s = sys.steady_state_gain
    if step is None:
        step = 1.0 / spectral_norm(s) ** 2
    if u0 is None:
        u0 = np.zeros(sys.input_dim)

    def grad(u):
        return s.T @ (s @ u - y)

    return _box_descent(grad, step, u0, u_set)


def project_steady_state(sys: LtiSystem, u_set: BoxSet, y) -> np.ndarray:
    """Euclidean projection of y onto the steady-state manifold S(U).

    The manifold is parametrized by the input box, so the projection is a
    box-constrained least-squares problem in u, solved by projected
    gradient descent with step 1/lambda_max(S^T S).  The returned point is
    exactly of the form S u with u in the box.
    """
    y = as_vector(y, "point")
    if y.shape[0] != sys.state_dim:
        raise InvalidInputError("point dimension does not match the system")
    u, _, _ = _project_input(sys, u_set, y)
    return sys.steady_state_gain @ u


def regret_optimal_step_size(l: float, t: int, cert: StabilityCert) -> float:
    """Regret-optimal step size 2*gamma / (L * sqrt(T * (1 + 4 kappa^2)))."""
    if l <= 0.0:
        raise InvalidInputError(f"smoothness constant must be positive, got {l}")
    if t < 1:
        raise InvalidInputError(f"horizon must be at least 1, got {t}")
    return 2.0 * cert.gamma / (l * math.sqrt(t * (1.0 + 4.0 * cert.kappa**2)))


def estimate_disturbance(sys: LtiSystem, x, u, x_next) -> np.ndarray:
    """Recover the disturbance from one observed transition: x' - A x - B u."""
    x = as_vector(x, "state")
    u = as_vector(u, "input")
    x_next = as_vector(x_next, "next state")
    if x.shape[0] != sys.state_dim or x_next.shape[0] != sys.state_dim:
        raise InvalidInputError("state dimension does not match the system")
    if u.shape[0] != sys.input_dim:
        raise InvalidInputError("input dimension does not match the system")
    return x_next - sys.a @ x - sys.b @ u


class OlcController:
    """Tracks a target steady state updated by projected gradient steps.

    The controller keeps an iterate z on the steady-state manifold.  Each
    round it plays the input holding the plant at z (independent of the
    observed state), and on receiving the cost gradient it takes one
    projected-OGD step: z <- Pi_X(z - eta * delta).
    """

    feedback = "gradient"

    def __init__(self, sys: LtiSystem, u_set: BoxSet, eta: float, z0=None):
        if eta <= 0.0:
            raise InvalidInputError(f"step size must be positive, got {eta}")
        if u_set.dim != sys.input_dim:
            raise InvalidInputError("input box dimension does not match the system")
        self.sys = sys
        self.u_set = u_set
        self.eta = float(eta)
        self._step = 1.0 / spectral_norm(sys.steady_state_gain) ** 2
        if z0 is None:
            z0 = np.zeros(sys.state_dim)
        # start from the manifold point nearest the requested z0
        self._u, _, _ = _project_input(sys, u_set, as_vector(z0, "z0"), step=self._step)
        self.z = sys.steady_state_gain @ self._u

    def act(self, x) -> np.ndarray:
        """Input holding the plant at the current target (clamped into the box)."""
        u = input_for_steady_state(self.sys, self.z)
        return self.u_set.clamp(u)

    def observe(self, delta, x_next=None) -> None:
        """One projected gradient step on the target state."""
        delta = as_vector(delta, "gradient")
        target = self.z - self.eta * delta
        # warm start at the previous inner minimizer; the projection problem
        # is strongly convex whenever B has full column rank, so the warm
        # start changes the iteration count, not the answer
        self._u, _, _ = _project_input(self.sys, self.u_set, target, u0=self._u, step=self._step)
        self.z = self.sys.steady_state_gain @ self._u


@dataclass(frozen=True)
class OlcXuState:
    """Joint iterate (z, u) on the input-augmented manifold, for costs that
    charge the input as well as the state."""

    z: np.ndarray
    u: np.ndarray
    eta: float


def project_joint_steady_state(sys: LtiSystem, u_set: BoxSet, z_target, u_target, u0=None):
    """Project (z_target, u_target) onto {(S u, u) : u in U}.

    Minimizes ``||S u - z_target||^2 + ||u - u_target||^2`` over the box
    and returns (S u, u).
    """
    z_target = as_vector(z_target, "z target")
    u_target = as_vector(u_target, "u target")
    s = sys.steady_state_gain
    step = 1.0 / (spectral_norm(s) ** 2 + 1.0)

    def grad(u):
        return s.T @ (s @ u - z_target) + (u - u_target)

    u, _, _ = _box_descent(grad, step, u0 if u0 is not None else np.zeros(sys.input_dim), u_set)
    return s @ u, u


def olcxu_update(state: OlcXuState, delta_x, delta_u, sys: LtiSystem, u_set: BoxSet) -> OlcXuState:
    """Joint gradient step followed by projection onto the augmented manifold."""
    delta_x = as_vector(delta_x, "state gradient")
    delta_u = as_vector(delta_u, "input gradient")
    z, u = project_joint_steady_state(
        sys,
        u_set,
        state.z - state.eta * delta_x,
        state.u - state.eta * delta_u,
        u0=state.u,
    )
    return OlcXuState(z=z, u=u, eta=state.eta)


def project_dac_blocks(blocks: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Scale each matrix block into its Frobenius ball of radius radii[i]."""
    projected = blocks.copy()
    for i in range(blocks.shape[0]):
        norm = float(np.linalg.norm(blocks[i]))
        if norm > radii[i]:
            projected[i] *= radii[i] / norm if norm > 0.0 else 0.0
    return projected


class DacController:
    """Disturbance-action baseline: inputs are a learned linear function of
    the last ``h_mem`` disturbances.

    The blocks M^[0..h_mem-1] are updated by online gradient descent on a
    truncated surrogate state (the state the plant would be in had the
    current blocks generated the inputs over the recent past), then
    projected onto per-block Frobenius balls with radii decaying as
    radius * (1-gamma)^i.  Disturbances are recovered exactly from
    observed transitions since A and B are known.
    """

    feedback = "cost"

    def __init__(
        self,
        sys: LtiSystem,
        u_set: BoxSet,
        h_mem: int,
        eta_g: float,
        radius: float,
        gamma: float,
    ):
        if h_mem < 1:
            raise InvalidInputError(f"memory horizon must be >= 1, got {h_mem}")
        if eta_g <= 0.0 or radius <= 0.0:
            raise InvalidInputError("eta_g and radius must be positive")
        if not 0.0 < gamma <= 1.0:
            raise InvalidInputError(f"gamma must lie in (0, 1], got {gamma}")
        if u_set.dim != sys.input_dim:
            raise InvalidInputError("input box dimension does not match the system")
        self.sys = sys
        self.u_set = u_set
        self.h_mem = int(h_mem)
        self.eta_g = float(eta_g)
        self.radii = float(radius) * (1.0 - gamma) ** np.arange(self.h_mem)
        self.blocks = np.zeros((self.h_mem, sys.input_dim, sys.state_dim))
        # newest-first ring of past disturbances, zero-padded for t <= 0;
        # the surrogate looks back 2*h_mem steps
        self.history = np.zeros((2 * self.h_mem + 1, sys.state_dim))
        # powers A^i and A^i B for i = 0..h_mem
        n = sys.state_dim
        self._a_pows = np.empty((self.h_mem + 1, n, n))
        self._a_pows[0] = np.eye(n)
        for i in range(1, self.h_mem + 1):
            self._a_pows[i] = self._a_pows[i - 1] @ sys.a
        self._ab_pows = self._a_pows @ sys.b
        self._last_x = None
        self._last_u = None

    def act(self, x) -> np.ndarray:
        """Play sum_i M^[i-1] w_{t-i}, clamped into the input box."""
        x = as_vector(x, "state")
        u = np.einsum("jmn,jn->m", self.blocks, self.history[: self.h_mem])
        u = self.u_set.clamp(u)
        self._last_x = x
        self._last_u = u
        return u

    def surrogate_state(self, blocks=None) -> np.ndarray:
        """Truncated prediction of the current state under the given blocks."""
        if blocks is None:
            blocks = self.blocks
        h = self.h_mem
        # virtual inputs s_i the blocks would have produced i steps back
        virtual = np.zeros((h + 1, self.sys.input_dim))
        for j in range(1, h + 1):
            virtual += self.history[j : j + h + 1] @ blocks[j - 1].T
        y = np.einsum("ikn,in->k", self._a_pows, self.history[: h + 1])
        y += np.einsum("ikm,im->k", self._ab_pows, virtual)
        return y

    def surrogate_grad_blocks(self, delta: np.ndarray) -> np.ndarray:
        """Gradient of cost(surrogate_state) with respect to each block."""
        h = self.h_mem
        q = np.einsum("ikm,k->im", self._ab_pows, delta)  # (A^i B)^T delta
        grads = np.empty_like(self.blocks)
        for j in range(1, h + 1):
            grads[j - 1] = q.T @ self.history[j : j + h + 1]
        return grads

    def update(self, cost: CostOracle) -> None:
        """One OGD step on the surrogate loss, then project the blocks."""
        delta = cost.grad(self.surrogate_state())
        stepped = self.blocks - self.eta_g * self.surrogate_grad_blocks(delta)
        self.blocks = project_dac_blocks(stepped, self.radii)

    def observe(self, cost: CostOracle, x_next) -> None:
        """Update the blocks from this round's cost, then record the
        disturbance revealed by the observed transition."""
        if self._last_x is None:
            raise InvalidInputError("observe called before act")
        self.update(cost)
        w = estimate_disturbance(self.sys, self._last_x, self._last_u, x_next)
        self.history = np.vstack([w[None, :], self.history[:-1]])
