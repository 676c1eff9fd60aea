"""
Search by pairwise elimination
==============================

Candidates are n-bit strings k with an oracle value f(k). Pairs that differ
only in their lowest bit are merged into one, keeping the preferred value,
which halves the set. Repeating until one entry is left identifies the most
significant bit of an optimum; the procedure then restarts on the
remaining bits.
"""

from gpgate.search import (
    CandidateSpace,
    ReductionRule,
    apply_oracle,
    brute_force_optimum,
    determine_optimum,
    operation_count,
    physical_combiner,
    random_oracle,
    reduce_pairs,
    uniform_superposition,
)

# %% one reduction round, by hand
space = CandidateSpace.from_values([7, 3, 5, 5, 9, 1, 4, 8])
cset = apply_oracle(uniform_superposition(space), space)
print("start   ", cset.bitstrings(), cset.values, f"weight {cset.weight:.4f}")
while cset.n_bits:
    cset, ops = reduce_pairs(cset, ReductionRule.minimizing())
    print("reduced ", cset.bitstrings(), cset.values, f"({ops} pair operations)")

# %% the full iterated search on a random cost table
for n in (4, 8, 12):
    space = CandidateSpace.from_values(random_oracle(n, seed=n))
    res = determine_optimum(space, ReductionRule.minimizing())
    k, v = brute_force_optimum(space)
    N = space.size
    print(f"n={n:2d}  found {res.bitstring} (f={res.value})  brute force f={v} at k={k}  "
          f"ops {res.total_operations} = {operation_count(n)}, n*N {n * N}, N^2 {N * N}")

# The literal operation count grows like 2N, well below N^2.

# %% NOR merging with the simulated lattice gate
gate = physical_combiner()
print("\nlattice NOR truth table:", {(a, b): gate(a, b) for a in (0, 1) for b in (0, 1)})
