"""Costs that charge the input too: the joint state+input iterate.

When each round's cost is f_t(x, u), the controller tracks a pair (z, u)
on the augmented manifold {(S u, u) : u in U}.  Each round takes a
gradient step in both coordinates and projects the pair back.  With an
input penalty, the iterate settles at a compromise between state tracking
and actuation effort rather than at the pure state optimum.
"""

import numpy as np

from olcontrol import (
    BoxSet,
    LtiSystem,
    OlcXuState,
    default_system_matrices,
    olcxu_update,
    simulate,
    steady_state_of_input,
)

sys = LtiSystem(*default_system_matrices())
u_box = BoxSet.symmetric(5.0, 2)

target = np.array([2.0, 0.5, 2.0])
q = np.eye(3)

for effort_weight in (0.0, 0.5, 2.0):
    state = OlcXuState(z=np.zeros(3), u=np.zeros(2), eta=0.08)
    for _ in range(400):
        delta_x = 2.0 * q @ (state.z - target)
        delta_u = 2.0 * effort_weight * state.u
        state = olcxu_update(state, delta_x, delta_u, sys, u_box)
    state_cost = float((state.z - target) @ q @ (state.z - target))
    effort = float(state.u @ state.u)
    print(f"effort weight {effort_weight:3.1f}: "
          f"z = {np.array_str(state.z, precision=3)}  u = {np.array_str(state.u, precision=3)}  "
          f"state cost {state_cost:6.3f}  effort {effort:6.3f}")

# reference: the holdable state closest to the target, ignoring effort
u_free, *_ = np.linalg.lstsq(sys.steady_state_gain, target, rcond=None)
free = steady_state_of_input(sys, u_free)
print(f"\nfor reference, the holdable state nearest the target is "
      f"{np.array_str(free, precision=3)} (input {np.array_str(u_free, precision=3)})")
print("raising the effort weight pulls u toward zero and lets z drift off target")
