import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpgate.search import (
    CandidateSet,
    CandidateSpace,
    EmptyCollapse,
    Entry,
    ReductionRule,
    SpaceTooLarge,
    apply_oracle,
    brute_force_optimum,
    collapse_subset,
    determine_optimum,
    direct_combiner_value,
    factor_lsb,
    flatten_groups,
    operation_count,
    physical_combiner,
    random_oracle,
    reduce_pairs,
    reduce_to_value,
    uniform_superposition,
)


def annotated(values, kind="cost"):
    space = CandidateSpace.from_values(values, kind)
    return apply_oracle(uniform_superposition(space), space)


def weight_ok(cset):
    return abs(cset.weight**2 * len(cset) - 1) <= 1e-12


# -- superposition, oracle, collapse -----------------------------------------------


@pytest.mark.parametrize("n", [1, 3, 10])
def test_uniform_superposition(n):
    s = uniform_superposition(CandidateSpace(n, lambda k: 0))
    assert s.keys == list(range(2**n))
    assert s.weight == pytest.approx(1 / math.sqrt(2**n), abs=1e-15)
    assert weight_ok(s)
    assert all(v is None for v in s.values)


def test_space_too_large():
    with pytest.raises(SpaceTooLarge):
        CandidateSpace(21, lambda k: 0)


def test_apply_oracle_examples():
    const = annotated([0] * 8)
    assert const.values == [0] * 8
    ident = annotated([0, 1, 2, 3])
    assert ident.values == [0, 1, 2, 3]
    assert len(ident) == 4 and weight_ok(ident)
    with pytest.raises(ValueError):
        apply_oracle(ident, CandidateSpace.from_values([0, 1, 2, 3]))


def test_collapse_examples():
    s = annotated([0, 1, 0, 1], "legality")
    assert collapse_subset(s, lambda k, v: True) == s
    odd = collapse_subset(s, lambda k, v: v == 1)
    assert odd.bitstrings() == ["01", "11"]
    assert odd.weight == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    with pytest.raises(EmptyCollapse):
        collapse_subset(s, lambda k, v: False)


def test_oracle_table_parsing():
    space = CandidateSpace.from_table({"00": 3, "01": 1, "10": 2, "11": 0})
    assert [space.oracle(k) for k in range(4)] == [3, 1, 2, 0]
    with pytest.raises(ValueError):
        CandidateSpace.from_table({"00": 1, "01": 2})
    with pytest.raises(ValueError):
        CandidateSpace.from_table({"0": 1, "01": 2})
    with pytest.raises(ValueError):
        CandidateSpace.from_table({"0x": 1, "01": 2})


def test_candidate_set_rejects_unsorted():
    with pytest.raises(ValueError):
        CandidateSet(2, (Entry(1, 0, 1), Entry(0, 0, 0)))


# -- factoring -----------------------------------------------------------------


def test_factor_full_set():
    groups = factor_lsb(annotated([5, 6, 7, 8]))
    assert [g.j for g in groups] == [0, 1]
    assert [(g.f0, g.f1) for g in groups] == [(5, 6), (7, 8)]


def test_factor_partial_set():
    s = collapse_subset(annotated([5, 6, 7, 8]), lambda k, v: k in (0, 3))
    groups = factor_lsb(s)
    assert [(g.j, g.f0, g.f1) for g in groups] == [(0, 5, None), (1, None, 8)]


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 10**6))
def test_factor_flatten_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    s = annotated(list(rng.integers(0, 9, 2**n)))
    mask = rng.random(2**n) < 0.6
    mask[rng.integers(2**n)] = True
    s = collapse_subset(s, lambda k, v: mask[k])
    assert flatten_groups(factor_lsb(s), n) == s


# -- reduction -----------------------------------------------------------------


def test_nor_combiner_table():
    s = annotated([0, 0, 0, 1, 1, 0, 1, 1], "legality")
    out, ops = reduce_pairs(s, ReductionRule.nor())
    assert out.values == [1, 0, 0, 0]
    assert ops == 4 and out.n_bits == 2 and weight_ok(out)


def test_selector_min_and_tie():
    out, _ = reduce_pairs(annotated([5, 3]), ReductionRule.minimizing())
    assert out.values == [3] and out.entries[0].origin == 1
    out, _ = reduce_pairs(annotated([4, 4]), ReductionRule.minimizing())
    assert out.values == [4] and out.entries[0].origin == 0
    out, _ = reduce_pairs(annotated([4, 4]), ReductionRule.maximizing())
    assert out.entries[0].origin == 0


def test_missing_branch_passes_through():
    s = collapse_subset(annotated([1, 0, 0, 1], "legality"), lambda k, v: k != 1)
    out, ops = reduce_pairs(s, ReductionRule.nor())
    # group 0 keeps its only branch; group 1 is a real NOR of (0, 1)
    assert out.values == [1, 0]
    assert ops == 1
    assert weight_ok(out)


def test_reduce_requires_oracle():
    with pytest.raises(ValueError):
        reduce_pairs(uniform_superposition(CandidateSpace(2, lambda k: 0)), ReductionRule.nor())


def test_bad_combiner_table():
    with pytest.raises(ValueError):
        ReductionRule.combiner((1, 0, 2, 0))
    with pytest.raises(ValueError):
        ReductionRule.combiner((1, 0, 0))


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 10**6))
def test_full_reductions_leave_one_entry(n, seed):
    s = annotated(random_oracle(n, seed))
    total = 0
    for _ in range(n):
        size = len(s)
        s, ops = reduce_pairs(s, ReductionRule.minimizing())
        assert len(s) == size // 2
        assert weight_ok(s)
        total += ops
    assert len(s) == 1
    assert total == 2**n - 1


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_nor_reduction_exhaustive(n):
    rule = ReductionRule.nor()
    for bits in itertools.product((0, 1), repeat=2**n):
        entry, ops = reduce_to_value(annotated(bits, "legality"), rule)
        assert entry.value == direct_combiner_value(bits, rule.table)
        assert ops == 2**n - 1


def test_nor_final_value_matches_all_zero_only_for_one_bit():
    # with one pair, NOR is 1 exactly when both values are 0; deeper trees alternate
    for bits in itertools.product((0, 1), repeat=2):
        entry, _ = reduce_to_value(annotated(bits, "legality"), ReductionRule.nor())
        assert entry.value == int(not any(bits))
    entry, _ = reduce_to_value(annotated([0, 0, 0, 0], "legality"), ReductionRule.nor())
    assert entry.value == 0


def test_direct_combiner_by_hand():
    nor = (1, 0, 0, 0)
    # NOR(NOR(0,0), NOR(0,1)) = NOR(1, 0) = 0
    assert direct_combiner_value([0, 0, 0, 1], nor) == 0
    # NOR(NOR(1,0), NOR(1,1)) = NOR(0, 0) = 1
    assert direct_combiner_value([1, 0, 1, 1], nor) == 1


# -- iterated optimum ----------------------------------------------------------------


def test_determine_optimum_monotone():
    res = determine_optimum(CandidateSpace.from_values(list(range(8))), ReductionRule.minimizing())
    assert res.bitstring == "000" and res.value == 0


def test_determine_optimum_random_n8():
    values = random_oracle(8, 7)
    space = CandidateSpace.from_values(values)
    res = determine_optimum(space, ReductionRule.minimizing())
    k, v = brute_force_optimum(space)
    assert (res.k, res.value) == (k, v)
    assert res.total_operations == operation_count(8) == 502
    assert len(res.trace) == 8


@pytest.mark.parametrize("n", range(1, 11))
def test_operation_count_closed_form(n):
    res = determine_optimum(CandidateSpace.from_values(random_oracle(n, n)), ReductionRule.minimizing())
    assert res.total_operations == sum(2**m - 1 for m in range(1, n + 1)) == 2 ** (n + 1) - n - 2


def test_determine_optimum_needs_selector():
    with pytest.raises(ValueError):
        determine_optimum(CandidateSpace(2, lambda k: 0, "legality"), ReductionRule.nor())


def test_determine_optimum_bit_limit():
    with pytest.raises(SpaceTooLarge):
        determine_optimum(CandidateSpace(17, lambda k: k), ReductionRule.minimizing())


@pytest.mark.parametrize("seed", range(120))
def test_determine_optimum_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    # small value range forces plenty of ties
    values = random_oracle(n, seed, high=int(rng.choice([3, 10, 100])))
    space = CandidateSpace.from_values(values)
    minimize = bool(seed % 2)
    rule = ReductionRule.minimizing() if minimize else ReductionRule.maximizing()
    res = determine_optimum(space, rule)
    assert (res.k, res.value) == brute_force_optimum(space, minimize)


# -- physical combiner --------------------------------------------------------------


def test_physical_combiner_truth_table():
    combine = physical_combiner()
    assert [combine(a, b) for a in (0, 1) for b in (0, 1)] == [1, 0, 0, 0]


def test_physical_mode_matches_ideal_two_bits():
    combine = physical_combiner()
    rule = ReductionRule.nor()
    for bits in itertools.product((0, 1), repeat=4):
        s = annotated(bits, "legality")
        ideal, _ = reduce_to_value(s, rule)
        phys, _ = reduce_to_value(s, rule, combine)
        assert ideal.value == phys.value
