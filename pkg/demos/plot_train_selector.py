"""
Evolving a variable selector
============================

A short training run: the population is scored on a random sample of the
training instances each generation, the generation best is re-scored on
the whole set, and offspring are screened on small instances before they
enter the next population. Scaled down here so it finishes in about a
minute.
"""

from gcp_rcjs.gp import GPConfig, evolve
from gcp_rcjs.instance import GenConfig, generate_instance

train = [generate_instance(GenConfig(machines=4, precedence_probability=p, seed=100 + k))
         for k, p in enumerate((0.2, 0.5, 0.8, 0.2, 0.5, 0.8))]
small = [generate_instance(GenConfig(machines=2, seed=200 + k)) for k in range(3)]

cfg = GPConfig(population_size=20, generations=5, sample_size=3, preselect_count=3,
               node_budget=5_000, preselect_node_budget=1_000, seed=1)


def report(entry):
    print(f"gen {entry.generation}: sampled {float(entry.best_sampled_fitness):9.2f}  "
          f"full {float(entry.gen_best_full_fitness):9.2f}  "
          f"best so far {float(entry.best_so_far_full_fitness):9.2f}  nodes {entry.nodes_used}")


state = evolve(cfg, train, small, on_generation=report)

# The best-so-far column never goes up: the incumbent is only replaced
# by a selector that is strictly better on the full training set.
print("best selector:", state.best.selector)
