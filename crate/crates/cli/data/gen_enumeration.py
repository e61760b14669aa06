"""Writes enumeration.json: every action of Z2, Z3, Z4 and Z2xZ2 on 1..4 atoms.

An action is a tuple of permutations, one per cyclic factor, with order
dividing the factor order and commuting pairwise. Permutations are lists
`p` with `p[i]` the image of atom `i`.
"""
import itertools
import json

GROUPS = [[2], [3], [4], [2, 2]]


def compose(p, q):
    return tuple(p[q[i]] for i in range(len(q)))


def order_divides(p, n):
    q = tuple(range(len(p)))
    for _ in range(n):
        q = compose(p, q)
    return q == tuple(range(len(p)))


def actions(orders, atoms):
    perms = list(itertools.permutations(range(atoms)))
    choices = [[p for p in perms if order_divides(p, n)] for n in orders]
    for gens in itertools.product(*choices):
        if all(compose(a, b) == compose(b, a) for a, b in itertools.combinations(gens, 2)):
            yield [list(g) for g in gens]


entries = [
    {"group": orders, "atoms": atoms, "generators": gens}
    for orders in GROUPS
    for atoms in range(1, 5)
    for gens in actions(orders, atoms)
]
with open("enumeration.json", "w") as f:
    json.dump(entries, f, separators=(",", ":"))
    f.write("\n")
print(len(entries))
