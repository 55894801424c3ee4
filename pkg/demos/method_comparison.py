"""Taylor kernel PI, direct kernel PI and grid PI on the same lattice.

A small version of the comparison run by the acceptance suite. Each kernel
method uses the best (lengthscale, lambda) cell of its own 6 x 6 sweep; the
Taylor solver in particular degrades with short lengthscales on this lattice.
The grid method uses a 1000-sample discretization.
"""

from ktpi.baselines import GridSolution, discretize, grid_policy_iteration
from ktpi.envs import default_plane_world
from ktpi.evaluation import RolloutConfig, average_return, solve
from ktpi.sampling import evenly_spaced


def main(counts=(6, 6)):
    world = default_plane_world()
    states = evenly_spaced(world.problem.bounds, counts)
    cfg = RolloutConfig(n_start_states=200, trials_per_state=3)
    for method, ls, lam in (("taylor", 3.0, 3.0), ("direct", 1.0, 0.5)):
        policy, _, report = solve(world, states, ls, lam, method=method)
        res = average_return(policy, world, cfg)
        print(f"{method:>6}: return {res.average_return:.4f} after {report.iterations} iterations")
    mdp = discretize(world, counts, mc_samples=1000, seed=0)
    policy, values, iterations = grid_policy_iteration(mdp)
    res = average_return(GridSolution(mdp, policy, values), world, cfg)
    print(f"{'grid':>6}: return {res.average_return:.4f} after {iterations} iterations")


if __name__ == "__main__":
    main()
