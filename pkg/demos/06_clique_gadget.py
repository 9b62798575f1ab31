"""Clique gadgets: point sets whose optimal coordinate subspace finds cliques.

Run:  python demos/06_clique_gadget.py
"""

import numpy as np

from robsub.hardness import (
    adjacency_excess,
    brute_force_best_coordinate,
    clique_margin_bound,
    complete_graph,
    gen_gadget,
    naive_instance_cost,
    coordinate_subspace_cost,
    petersen_graph,
)

p = 1.0

print("K4 (3-regular, has triangles) vs Petersen (3-regular, triangle-free), k=3.")
for name, adj in (("K4", complete_graph(4)), ("Petersen", petersen_graph())):
    inst = gen_gadget(adj, k=3, b1=1e4, b2=10**6)
    best_set, best_cost = brute_force_best_coordinate(inst, p)
    sub = inst.adjacency[np.ix_(best_set, best_set)]
    is_clique = bool(np.all(sub.sum(axis=1) == inst.k - 1))
    print(f"  {name:9s} d={inst.d:2d}  best set {best_set}  "
          f"clique: {is_clique}  excess cost {adjacency_excess(inst, best_cost):.6f}")

inst_k4 = gen_gadget(complete_graph(4), 3)
inst_pet = gen_gadget(petersen_graph(), 3)
margin = (adjacency_excess(inst_pet, brute_force_best_coordinate(inst_pet, p)[1])
          - adjacency_excess(inst_k4, brute_force_best_coordinate(inst_k4, p)[1]))
print(f"\nmeasured clique/no-clique margin: {margin:.6f}")
print(f"predicted additive margin:        {clique_margin_bound(inst_k4, p):.6f}")

print("\nClosed-form coordinate costs agree with direct projector evaluation:")
v = np.eye(4)[:, [0, 1, 2]]
cf = coordinate_subspace_cost(inst_k4, (0, 1, 2), p)
nv = naive_instance_cost(inst_k4, v, p)
print(f"  closed form {cf:.9f}   naive {nv:.9f}   diff {abs(cf - nv):.2e}")
