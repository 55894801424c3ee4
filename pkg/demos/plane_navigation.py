"""Solve the two-block plane world and look at the result.

Run with ``python3 demos/plane_navigation.py``. Prints the solver report, a
coarse text map of the greedy policy and the average return over uniformly
drawn start states.
"""

import numpy as np

from ktpi.envs import default_plane_world
from ktpi.evaluation import RolloutConfig, average_return, solve
from ktpi.mdp import Region
from ktpi.sampling import evenly_spaced

ARROWS = "→↗↗↑↖↖←↙↙↓↘↘"


def policy_map(world, policy, counts=(20, 20)):
    pts = evenly_spaced(world.problem.bounds, counts)
    labels = world.classify_batch(pts)
    acts = policy.act(pts)
    grid = np.full(counts, " ", dtype="<U1")
    for p, lab, a in zip(pts, labels, acts):
        i = int(p[0] / 10 * counts[0])
        j = int(p[1] / 10 * counts[1])
        grid[i, j] = {Region.GOAL: "G", Region.OBSTACLE: "#"}.get(int(lab), ARROWS[a])
    # print with y growing upward
    return "\n".join("".join(grid[:, j]) for j in reversed(range(counts[1])))


def main():
    world = default_plane_world()
    states = evenly_spaced(world.problem.bounds, (10, 10))
    policy, vr, report = solve(world, states, lengthscale=1.5, lam=3.0)
    print(f"converged={report.converged} after {report.iterations} iterations, "
          f"Bellman residual {report.bellman_residual:.3g}")
    print(policy_map(world, policy))
    res = average_return(policy, world, RolloutConfig(n_start_states=300, trials_per_state=3))
    print(f"average return {res.average_return:.4f}, goal rate {res.goal_rate:.3f}")


if __name__ == "__main__":
    main()
