"""Offline best-in-hindsight solvers defining the regret baselines.

All three solvers (best fixed input, best steady state, best
disturbance-action blocks) run first-order projected descent with a
backtracking line search, with gradients propagated through the linear
dynamics by the adjoint recursion.  A brute-force grid oracle validates
the fixed-input solver on low-dimensional inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .controllers import project_dac_blocks
from .costs import quad_batch_grads, quad_batch_values, stack_quadratics
from .errors import InvalidInputError, UnsupportedDimensionError
from .linalg import as_vector
from .system import BoxSet, LtiSystem, certify_strong_stability, simulate

DESCENT_MOVE_TOL = 1e-9
DESCENT_MAX_ITER = 20_000
GRID_MAX_RESOLUTION = 400


@dataclass
class BenchmarkResult:
    """Solution of one hindsight problem.

    ``optimizer`` is the argmin (an input, a steady state, or a stack of
    disturbance-action blocks); ``step_costs`` are the per-step costs of
    the optimizer's trajectory, which regret curves are computed against.
    ``value_nominal`` re-evaluates the same objective through the
    shifted-cost route (nominal trajectory plus disturbance response) and
    must match ``value``.
    """

    optimizer: np.ndarray
    value: float
    iterations: int
    converged: bool
    step_costs: np.ndarray = field(repr=False)
    value_nominal: float | None = None


def _cost_values(costs, states) -> np.ndarray:
    stacked = stack_quadratics(costs)
    if stacked is not None:
        return quad_batch_values(*stacked, states)
    return np.array([cost.value(x) for cost, x in zip(costs, states)])


def _cost_grads(costs, states) -> np.ndarray:
    stacked = stack_quadratics(costs)
    if stacked is not None:
        return quad_batch_grads(*stacked, states)
    return np.stack([cost.grad(x) for cost, x in zip(costs, states)])


def _adjoint_states(sys: LtiSystem, grads: np.ndarray) -> np.ndarray:
    """Backward recursion lambda_t = grad_t + A^T lambda_{t+1}."""
    horizon = grads.shape[0]
    lam = np.empty_like(grads)
    lam[horizon - 1] = grads[horizon - 1]
    at = sys.a.T
    for t in range(horizon - 2, -1, -1):
        lam[t] = grads[t] + at @ lam[t + 1]
    return lam


def adjoint_input_gradients(sys: LtiSystem, x1, u_seq, w_seq, costs) -> np.ndarray:
    """Gradients of the trajectory cost with respect to each input.

    Simulates forward, runs the adjoint recursion backward, and returns
    the (T-1, M) array with row t-1 equal to B^T lambda_{t+1}.
    """
    costs = list(costs)
    u_seq = np.atleast_2d(np.asarray(u_seq, dtype=float))
    w_seq = np.atleast_2d(np.asarray(w_seq, dtype=float))
    if len(costs) != u_seq.shape[0] + 1:
        raise InvalidInputError(
            f"got {len(costs)} costs for {u_seq.shape[0]} inputs; need one more cost than inputs"
        )
    states = simulate(sys, x1, u_seq, w_seq)
    lam = _adjoint_states(sys, _cost_grads(costs, states))
    return lam[1:] @ sys.b


def _projected_descent(value_fn, grad_fn, project_fn, x0, move_tol, max_iter):
    """Projected gradient descent with a backtracking line search.

    Each iteration starts from a Barzilai-Borwein trial step (the inverse
    Rayleigh quotient of the last displacement, a cheap curvature probe)
    and halves it until the quadratic upper model holds at the projected
    candidate, which keeps the objective monotone.  Returns
    (x, value, iterations, converged).
    """
    x = project_fn(x0)
    f = value_fn(x)
    g = grad_fn(x)
    step = 1.0
    for it in range(1, max_iter + 1):
        while True:
            cand = project_fn(x - step * g)
            d = cand - x
            f_cand = value_fn(cand)
            gap = float(np.vdot(g, d)) + 0.5 / step * float(np.vdot(d, d))
            if f_cand <= f + gap + 1e-12 * (1.0 + abs(f)):
                break
            step *= 0.5
            if step < 1e-18:
                break
        moved = float(np.linalg.norm(d.ravel()))
        g_cand = grad_fn(cand)
        dg = g_cand - g
        sty = float(np.vdot(d, dg))
        step = float(np.vdot(d, d)) / sty if sty > 0.0 else step * 2.0
        x, f, g = cand, f_cand, g_cand
        if moved < move_tol:
            return x, f, it, True
    return x, f, max_iter, False


def _constant_input_states(sys: LtiSystem, x1, u, w_seq) -> np.ndarray:
    horizon = w_seq.shape[0] + 1
    states = np.empty((horizon, sys.state_dim))
    states[0] = x1
    bu = sys.b @ u
    for t in range(horizon - 1):
        states[t + 1] = sys.a @ states[t] + bu + w_seq[t]
    return states


def _disturbance_response(sys: LtiSystem, w_seq: np.ndarray) -> np.ndarray:
    horizon = w_seq.shape[0] + 1
    xd = np.empty((horizon, sys.state_dim))
    xd[0] = 0.0
    for t in range(horizon - 1):
        xd[t + 1] = sys.a @ xd[t] + w_seq[t]
    return xd


def best_fixed_input(
    sys: LtiSystem,
    x1,
    w_seq,
    costs,
    u_set: BoxSet,
    move_tol: float = DESCENT_MOVE_TOL,
    max_iter: int = DESCENT_MAX_ITER,
) -> BenchmarkResult:
    """Best time-invariant input in hindsight.

    Minimizes the cumulative cost of the constant-input trajectory over
    the input box; the trajectory is affine in u so the problem is
    convex.  The gradient sums the per-slot adjoint gradients since every
    slot shares the same input.

    The optimum's value is computed twice -- on the disturbed trajectory
    directly, and through the nominal trajectory with shifted costs --
    and both are returned (they agree up to roundoff).
    """
    costs = list(costs)
    x1 = as_vector(x1, "initial state")
    w_seq = np.atleast_2d(np.asarray(w_seq, dtype=float))
    if len(costs) != w_seq.shape[0] + 1:
        raise InvalidInputError("need one more cost than disturbances")

    def value_fn(u):
        return float(np.sum(_cost_values(costs, _constant_input_states(sys, x1, u, w_seq))))

    def grad_fn(u):
        states = _constant_input_states(sys, x1, u, w_seq)
        lam = _adjoint_states(sys, _cost_grads(costs, states))
        return lam[1:].sum(axis=0) @ sys.b

    u_star, _, iters, converged = _projected_descent(
        value_fn, grad_fn, u_set.clamp, np.zeros(sys.input_dim), move_tol, max_iter
    )
    states = _constant_input_states(sys, x1, u_star, w_seq)
    step_costs = _cost_values(costs, states)
    # same objective through the superposition route
    nominal = _constant_input_states(sys, x1, u_star, np.zeros_like(w_seq))
    xd = _disturbance_response(sys, w_seq)
    value_nominal = float(np.sum(_cost_values(costs, nominal + xd)))
    return BenchmarkResult(
        optimizer=u_star,
        value=float(np.sum(step_costs)),
        iterations=iters,
        converged=converged,
        step_costs=step_costs,
        value_nominal=value_nominal,
    )


def best_steady_state(
    costs,
    sys: LtiSystem,
    u_set: BoxSet,
    move_tol: float = DESCENT_MOVE_TOL,
    max_iter: int = DESCENT_MAX_ITER,
) -> BenchmarkResult:
    """Best fixed point of the steady-state manifold in hindsight.

    Works in the input parametrization x = S u, so the feasible set is
    the input box and the projection is a clamp.
    """
    costs = list(costs)
    if not costs:
        raise InvalidInputError("cost sequence is empty")
    s = sys.steady_state_gain

    def value_fn(u):
        x = s @ u
        return float(np.sum(_cost_values(costs, np.broadcast_to(x, (len(costs), x.shape[0])))))

    def grad_fn(u):
        x = s @ u
        total = _cost_grads(costs, np.broadcast_to(x, (len(costs), x.shape[0]))).sum(axis=0)
        return s.T @ total

    u_star, _, iters, converged = _projected_descent(
        value_fn, grad_fn, u_set.clamp, np.zeros(sys.input_dim), move_tol, max_iter
    )
    x_star = s @ u_star
    step_costs = _cost_values(costs, np.broadcast_to(x_star, (len(costs), x_star.shape[0])))
    return BenchmarkResult(
        optimizer=x_star,
        value=float(np.sum(step_costs)),
        iterations=iters,
        converged=converged,
        step_costs=step_costs,
    )


def _dac_inputs(blocks: np.ndarray, w_seq: np.ndarray) -> np.ndarray:
    """Inputs u_t = sum_j M^[j-1] w_{t-j} for t = 1..T-1, zero-padded history."""
    h = blocks.shape[0]
    horizon_inputs = w_seq.shape[0]
    u = np.zeros((horizon_inputs, blocks.shape[1]))
    for j in range(1, h + 1):
        if j < horizon_inputs + 1:
            u[j:] += w_seq[: horizon_inputs - j] @ blocks[j - 1].T
    return u


def best_dac(
    sys: LtiSystem,
    x1,
    w_seq,
    costs,
    h_mem: int,
    radius: float,
    gamma: float | None = None,
    move_tol: float = DESCENT_MOVE_TOL,
    max_iter: int = DESCENT_MAX_ITER,
) -> BenchmarkResult:
    """Best disturbance-action blocks in hindsight.

    The nominal trajectory is affine in the blocks, so minimizing the
    shifted-cost total over the per-block Frobenius balls (radii decaying
    as radius * (1-gamma)^i) is convex.  Costs are realized by evaluating
    the original costs on the full trajectory (nominal plus disturbance
    response), which equals the shifted-cost total identically.
    """
    costs = list(costs)
    x1 = as_vector(x1, "initial state")
    w_seq = np.atleast_2d(np.asarray(w_seq, dtype=float))
    if len(costs) != w_seq.shape[0] + 1:
        raise InvalidInputError("need one more cost than disturbances")
    if gamma is None:
        gamma = certify_strong_stability(sys.a).gamma
    radii = float(radius) * (1.0 - gamma) ** np.arange(h_mem)
    xd = _disturbance_response(sys, w_seq)

    def full_states(blocks):
        nominal = simulate(sys, x1, _dac_inputs(blocks, w_seq))
        return nominal + xd

    def value_fn(blocks):
        return float(np.sum(_cost_values(costs, full_states(blocks))))

    def grad_fn(blocks):
        states = full_states(blocks)
        lam = _adjoint_states(sys, _cost_grads(costs, states))
        q = lam[1:] @ sys.b  # per-slot input gradients, (T-1, M)
        grads = np.zeros_like(blocks)
        horizon_inputs = w_seq.shape[0]
        for j in range(1, h_mem + 1):
            if j < horizon_inputs + 1:
                grads[j - 1] = q[j:].T @ w_seq[: horizon_inputs - j]
        return grads

    blocks0 = np.zeros((h_mem, sys.input_dim, sys.state_dim))
    blocks, _, iters, converged = _projected_descent(
        value_fn,
        grad_fn,
        lambda m: project_dac_blocks(m, radii),
        blocks0,
        move_tol,
        max_iter,
    )
    states = full_states(blocks)
    step_costs = _cost_values(costs, states)
    # dual route: simulate the disturbed system directly under the same inputs
    direct = simulate(sys, x1, _dac_inputs(blocks, w_seq), w_seq)
    value_direct = float(np.sum(_cost_values(costs, direct)))
    return BenchmarkResult(
        optimizer=blocks,
        value=value_direct,
        iterations=iters,
        converged=converged,
        step_costs=step_costs,
        value_nominal=float(np.sum(step_costs)),
    )


def grid_oracle_fixed_input(
    sys: LtiSystem,
    x1,
    w_seq,
    costs,
    u_set: BoxSet,
    resolution: int,
) -> BenchmarkResult:
    """Brute-force fixed-input benchmark on a regular grid.

    ``resolution`` counts intervals per axis (so resolution+1 points
    including both box edges); coarse grids are exact subsets of any
    refinement by an integer factor.  Only 1- and 2-dimensional input
    spaces are supported -- this is a validation oracle, not a solver.
    """
    costs = list(costs)
    x1 = as_vector(x1, "initial state")
    w_seq = np.atleast_2d(np.asarray(w_seq, dtype=float))
    if sys.input_dim > 2:
        raise UnsupportedDimensionError(
            f"grid oracle supports input dimension <= 2, got {sys.input_dim}"
        )
    if not 1 <= resolution <= GRID_MAX_RESOLUTION:
        raise InvalidInputError(
            f"resolution must be in [1, {GRID_MAX_RESOLUTION}], got {resolution}"
        )
    if len(costs) != w_seq.shape[0] + 1:
        raise InvalidInputError("need one more cost than disturbances")

    axes = [
        np.linspace(u_set.lower[i], u_set.upper[i], resolution + 1)
        for i in range(u_set.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)  # (P, M)

    stacked = stack_quadratics(costs)
    points = grid.shape[0]
    totals = np.zeros(points)
    states = np.broadcast_to(x1, (points, sys.state_dim)).copy()
    inputs_through_b = grid @ sys.b.T
    for t in range(len(costs)):
        if stacked is not None:
            qs, cs = stacked
            d = states - cs[t]
            totals += np.einsum("pi,ij,pj->p", d, qs[t], d)
        else:
            totals += np.array([costs[t].value(states[p]) for p in range(points)])
        if t < len(costs) - 1:
            states = states @ sys.a.T + inputs_through_b + w_seq[t]
    best = int(np.argmin(totals))
    u_star = grid[best]
    step_costs = _cost_values(costs, _constant_input_states(sys, x1, u_star, w_seq))
    return BenchmarkResult(
        optimizer=u_star,
        value=float(totals[best]),
        iterations=points,
        converged=True,
        step_costs=step_costs,
    )
