"""
Checking the search against brute force
=======================================

On instances small enough to enumerate, the exhaustive sequence oracle and
the propagation-based search must agree on the optimum exactly.
"""

from gcp_rcjs.bench import brute_force_optimum
from gcp_rcjs.cp import SolverConfig, build_model, solve
from gcp_rcjs.instance import GenConfig, generate_instance

agree = 0
for seed in range(20):
    # two machines with 3 or 4 jobs each keeps enumeration cheap
    inst = generate_instance(GenConfig(machines=2, seed=seed, jobs_per_machine=(3, 4)))
    oracle = brute_force_optimum(inst)
    res = solve(build_model(inst), SolverConfig(node_budget=10**6))
    same = res.best_objective == oracle.optimal_objective
    agree += same
    print(f"seed {seed:2d}: n={inst.n} oracle={oracle.optimal_objective} "
          f"search={res.best_objective} ({res.status.value}, {res.stats.nodes} nodes) "
          f"sequences={oracle.enumerated_count}")

print(f"{agree}/20 agree")
