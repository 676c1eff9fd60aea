"""Classical bookkeeping for search by pairwise elimination.

A register of ``n`` qubits holds the equal superposition of all ``N = 2**n``
candidate strings ``k``. An oracle attaches a value ``f(k)`` to each one.
Entries are then paired on their least significant bit, ``(j|0) = 2j`` and
``(j|1) = 2j + 1``. Each pair collapses onto a single value, either a boolean
combination of the two (e.g. NOR of two legality bits) or the preferred of
the two (e.g. the smaller cost). Every reduction halves the candidate count.

This module simulates the amplitude bookkeeping with plain Python objects.
It does not simulate the physics; the optional physical combiner runs the
lattice gate for each pair and thresholds the readout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

MAX_BITS = 20
MAX_OPTIMUM_BITS = 16


class SpaceTooLarge(ValueError):
    pass


class EmptyCollapse(ValueError):
    pass


def bitstring(k: int, n_bits: int) -> str:
    return format(k, f"0{n_bits}b") if n_bits else ""


@dataclass(frozen=True)
class CandidateSpace:
    """``n_bits`` qubits and an oracle on their integer value.

    ``kind`` is ``"legality"`` for 0/1 oracles or ``"cost"`` for ordered
    values.
    """

    n_bits: int
    oracle: Callable[[int], object]
    kind: str = "cost"

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be positive")
        if self.n_bits > MAX_BITS:
            raise SpaceTooLarge(f"{self.n_bits} bits exceeds the desk-scale limit of {MAX_BITS}")
        if self.kind not in ("legality", "cost"):
            raise ValueError(f"unknown oracle kind {self.kind!r}")

    @property
    def size(self) -> int:
        return 1 << self.n_bits

    @classmethod
    def from_table(cls, table: Mapping[str, object], kind: str = "cost") -> "CandidateSpace":
        """Oracle given as ``{bitstring: value}`` covering every string of one length."""
        if not table:
            raise ValueError("empty oracle table")
        widths = {len(key) for key in table}
        if len(widths) != 1:
            raise ValueError("oracle table keys must share one length")
        n = widths.pop()
        values = {}
        for key, value in table.items():
            if set(key) - {"0", "1"}:
                raise ValueError(f"bad bitstring key {key!r}")
            values[int(key, 2)] = value
        if len(values) != 1 << n:
            raise ValueError(f"oracle table must list all {1 << n} bitstrings of length {n}")
        return cls(n, values.__getitem__, kind)

    @classmethod
    def from_values(cls, values: Sequence, kind: str = "cost") -> "CandidateSpace":
        values = list(values)
        n = int(math.log2(len(values))) if values else 0
        if 1 << n != len(values):
            raise ValueError("value list length must be a power of two")
        return cls(n, values.__getitem__, kind)


class Entry(NamedTuple):
    k: int
    value: object
    # index, in the set the reduction started from, of the entry whose value survived
    origin: int


@dataclass(frozen=True)
class CandidateSet:
    n_bits: int
    entries: tuple[Entry, ...]
    annotated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ks = [e.k for e in self.entries]
        if ks != sorted(set(ks)):
            raise ValueError("entries must be unique and sorted by k")
        if ks and not 0 <= ks[-1] < (1 << self.n_bits):
            raise ValueError("entry index out of range for n_bits")

    def __len__(self):
        return len(self.entries)

    @property
    def weight(self) -> float:
        """Common amplitude ``1/sqrt(N')`` of every surviving entry."""
        return 1.0 / math.sqrt(len(self.entries)) if self.entries else 0.0

    @property
    def keys(self) -> list[int]:
        return [e.k for e in self.entries]

    @property
    def values(self) -> list:
        return [e.value for e in self.entries]

    def bitstrings(self) -> list[str]:
        return [bitstring(e.k, self.n_bits) for e in self.entries]


def uniform_superposition(space: CandidateSpace) -> CandidateSet:
    """All ``2**n`` strings with equal weight and no oracle value yet."""
    return CandidateSet(space.n_bits, tuple(Entry(k, None, k) for k in range(space.size)))


def apply_oracle(cset: CandidateSet, space: CandidateSpace) -> CandidateSet:
    """Attach ``f(k)`` to every entry; membership and weights are unchanged."""
    if cset.annotated:
        raise ValueError("candidate set already carries oracle values")
    return CandidateSet(cset.n_bits, tuple(Entry(e.k, space.oracle(e.k), e.origin) for e in cset.entries), True)


def collapse_subset(cset: CandidateSet, predicate: Callable[[int, object], bool]) -> CandidateSet:
    """Keep the entries consistent with a measurement outcome, renormalized.

    ``predicate(k, value)`` selects survivors.
    """
    kept = tuple(e for e in cset.entries if predicate(e.k, e.value))
    if not kept:
        raise EmptyCollapse("no entry is consistent with the measurement")
    return CandidateSet(cset.n_bits, kept, cset.annotated)


class PairGroup(NamedTuple):
    j: int
    branch0: Optional[Entry]
    branch1: Optional[Entry]

    @property
    def f0(self):
        return None if self.branch0 is None else self.branch0.value

    @property
    def f1(self):
        return None if self.branch1 is None else self.branch1.value


def factor_lsb(cset: CandidateSet) -> list[PairGroup]:
    """Group entries by their high ``n - 1`` bits, split on the lowest bit."""
    if cset.n_bits < 1:
        raise ValueError("cannot factor a zero-bit set")
    groups: dict[int, list] = {}
    for e in cset.entries:
        slot = groups.setdefault(e.k >> 1, [None, None])
        slot[e.k & 1] = e
    return [PairGroup(j, b0, b1) for j, (b0, b1) in sorted(groups.items())]


def flatten_groups(groups: Sequence[PairGroup], n_bits: int, annotated: bool = True) -> CandidateSet:
    """Inverse of :func:`factor_lsb`."""
    entries = [e for g in groups for e in (g.branch0, g.branch1) if e is not None]
    return CandidateSet(n_bits, tuple(entries), annotated)


@dataclass(frozen=True)
class ReductionRule:
    """How a pair of branch values collapses onto one.

    ``combiner``: ``table[2*f0 + f1]`` gives the new bit.
    ``selector``: keep the preferred value (``minimize`` or not); ties go
    to branch 0.
    """

    kind: str
    table: tuple[int, int, int, int] | None = None
    minimize: bool = True
    tie_break: str = "prefer_zero_branch"

    def __post_init__(self):
        if self.kind == "combiner":
            if self.table is None or len(self.table) != 4 or set(self.table) - {0, 1}:
                raise ValueError("a combiner needs a total 0/1 table of four entries")
            object.__setattr__(self, "table", tuple(int(t) for t in self.table))
        elif self.kind != "selector":
            raise ValueError(f"unknown reduction kind {self.kind!r}")
        if self.tie_break != "prefer_zero_branch":
            raise ValueError("only prefer_zero_branch tie-breaking is supported")

    @classmethod
    def nor(cls) -> "ReductionRule":
        return cls("combiner", (1, 0, 0, 0))

    @classmethod
    def combiner(cls, table) -> "ReductionRule":
        return cls("combiner", tuple(table))

    @classmethod
    def minimizing(cls) -> "ReductionRule":
        return cls("selector", minimize=True)

    @classmethod
    def maximizing(cls) -> "ReductionRule":
        return cls("selector", minimize=False)

    def prefers_branch1(self, f0, f1) -> bool:
        return f1 < f0 if self.minimize else f1 > f0


def reduce_pairs(
    cset: CandidateSet,
    rule: ReductionRule,
    combiner: Callable[[int, int], int] | None = None,
) -> tuple[CandidateSet, int]:
    """One round of pairwise elimination over the lowest bit.

    A group missing one branch (possible after a collapse) passes its
    present entry through unchanged. ``combiner`` replaces the rule's table
    for combiner rules, e.g. with a simulated physical gate.

    Returns the reduced set over ``n - 1`` bits and the number of pair
    reductions performed (groups that had both branches).
    """
    if not cset.annotated:
        raise ValueError("apply the oracle before reducing")
    if rule.kind == "combiner" and combiner is None:
        combiner = lambda a, b: rule.table[2 * a + b]  # noqa: E731
    entries, ops = [], 0
    for g in factor_lsb(cset):
        if g.branch0 is None or g.branch1 is None:
            e = g.branch0 or g.branch1
            entries.append(Entry(g.j, e.value, e.origin))
            continue
        ops += 1
        if rule.kind == "combiner":
            a, b = int(g.f0), int(g.f1)
            if a not in (0, 1) or b not in (0, 1):
                raise ValueError("combiner rules need 0/1 oracle values")
            entries.append(Entry(g.j, int(combiner(a, b)), g.branch0.origin))
        else:
            keep = g.branch1 if rule.prefers_branch1(g.f0, g.f1) else g.branch0
            entries.append(Entry(g.j, keep.value, keep.origin))
    return CandidateSet(cset.n_bits - 1, tuple(entries), True), ops


def reduce_to_value(cset: CandidateSet, rule: ReductionRule, combiner=None) -> tuple[Entry, int]:
    """Reduce round after round until a single entry is left."""
    ops = 0
    while cset.n_bits > 0:
        cset, n = reduce_pairs(cset, rule, combiner)
        ops += n
    (entry,) = cset.entries
    return entry, ops


class RoundTrace(NamedTuple):
    round: int
    bit_position: int  # counted from the most significant bit
    chosen_bit: int
    value: object
    candidates: int
    operations: int


@dataclass(frozen=True)
class OptimumResult:
    bitstring: str
    k: int
    value: object
    total_operations: int
    trace: tuple[RoundTrace, ...]


def operation_count(n_bits: int) -> int:
    """Pair reductions used by :func:`determine_optimum` on a full set.

    Round ``r`` reduces ``2**m`` candidates (``m = n - r``) to one with
    ``2**m - 1`` reductions; summed over rounds this is ``2**(n+1) - n - 2``.
    """
    return (1 << (n_bits + 1)) - n_bits - 2


def determine_optimum(space: CandidateSpace, rule: ReductionRule) -> OptimumResult:
    """Fix the optimal string one qubit per round, most significant first.

    Each round reduces the current candidates pairwise down to a single
    survivor and keeps only the most significant remaining bit of its
    branch. The problem is then restricted to the candidates sharing that
    bit, and the next round starts on the remaining qubits.
    """
    if rule.kind != "selector":
        raise ValueError("determine_optimum needs a preference selector rule")
    if space.n_bits > MAX_OPTIMUM_BITS:
        raise SpaceTooLarge(f"iterated search is limited to {MAX_OPTIMUM_BITS} bits")
    n = space.n_bits
    current = apply_oracle(uniform_superposition(space), space)
    prefix, total, trace = 0, 0, []
    for r in range(n):
        m = current.n_bits
        # origins index the current round's set
        start = CandidateSet(m, tuple(Entry(e.k, e.value, e.k) for e in current.entries), True)
        survivor, ops = reduce_to_value(start, rule)
        bit = survivor.origin >> (m - 1)
        total += ops
        trace.append(RoundTrace(r, r, bit, survivor.value, len(start), ops))
        prefix = (prefix << 1) | bit
        low = (1 << (m - 1)) - 1
        current = CandidateSet(
            m - 1,
            tuple(Entry(e.k & low, e.value, e.k & low) for e in current.entries if e.k >> (m - 1) == bit),
            True,
        )
    value = space.oracle(prefix)
    return OptimumResult(bitstring(prefix, n), prefix, value, total, tuple(trace))


def brute_force_optimum(space: CandidateSpace, minimize: bool = True) -> tuple[int, object]:
    """Exhaustive optimum; ties resolve to the smallest ``k``."""
    best_k, best_v = 0, space.oracle(0)
    for k in range(1, space.size):
        v = space.oracle(k)
        if (v < best_v) if minimize else (v > best_v):
            best_k, best_v = k, v
    return best_k, best_v


def direct_combiner_value(values: Sequence[int], table) -> int:
    """Fold a combiner over a complete value list by recursive halving.

    Splitting on the most significant bit gives the same pairing tree as
    repeated lowest-bit reduction, so this serves as an independent check.
    """
    if len(values) == 1:
        return int(values[0])
    half = len(values) // 2
    a = direct_combiner_value(values[:half], table)
    b = direct_combiner_value(values[half:], table)
    return int(table[2 * a + b])


def physical_combiner(params=None, evo=None, scheme=None, site=None) -> Callable[[int, int], int]:
    """Pair combiner that runs the lattice gate and thresholds the readout at 0.5.

    Defaults to the published NOR parameters, step and readout site (1,1).
    """
    from .constants import paper_evolution, paper_params
    from .gate import GateCase, initial_state
    from .integrator import DEFAULT_SCHEME, propagate_final
    from .lattice import READOUT_SITE, SiteIndex

    params = params or paper_params()
    evo = evo or paper_evolution()
    scheme = scheme or DEFAULT_SCHEME
    index = SiteIndex.parse(site or READOUT_SITE).linear

    def combine(f0: int, f1: int) -> int:
        final = propagate_final([initial_state(GateCase(f0, f1, 0))], params, evo, scheme)[0]
        p = abs(final[index]) ** 2
        return int(p > 0.5)

    return combine


def random_oracle(n_bits: int, seed: int, high: int = 100) -> list[int]:
    """Seeded integer costs in ``[0, high)``, one per string."""
    rng = np.random.default_rng(seed)
    return [int(v) for v in rng.integers(0, high, size=1 << n_bits)]
