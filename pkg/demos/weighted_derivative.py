"""
Hölder behaviour of the weighted time derivative x_n^-gamma u_t.

A homogeneous run with zero face data and a smooth initial bump is solved
at two resolutions.  The parabolic Hölder report of x_n^-gamma u_t on
Q_{1/2}^+ settles at exponent 1 - gamma and keeps growing just above it.

    python3 demos/weighted_derivative.py
"""

from degenlab import cylinder_nodes, holder_seminorm, solve_problem, weighted_time_derivative
from degenlab.harness import GridParams, homogeneous_config

GAMMA = 0.5
GRID = GridParams(tan_ratio=0.25, time_ratio=2.0, grading_q=4.0)

if __name__ == "__main__":
    offsets = (-0.2, 0.0, 0.1, 0.2)
    print("N    " + "  ".join(f"exp={1 - GAMMA + d:.2f}" for d in offsets))
    for n in (64, 128, 256):
        grid = GRID.build(n, GAMMA)
        u = solve_problem(homogeneous_config(GAMMA), grid)
        w = weighted_time_derivative(u)
        region = cylinder_nodes(grid, ((0.0, 0.0), 0.0), 0.5)
        vals = [holder_seminorm(w, 1 - GAMMA + d, "parabolic", region).seminorm_lower_bound for d in offsets]
        print(f"{n:<4} " + "  ".join(f"{v:9.4f}" for v in vals))
