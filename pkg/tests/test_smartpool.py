"""Conflict graphs, pool planning, the exact small-instance solver, and
the malloc lookup table."""
import itertools
import random

import pytest

import memplan as mp
from oracles import random_interval_arcs


def g_from(arcs, period=100, peak=0):
    return mp.conflict_graph_from_arcs(period, arcs, peak)


def arc(var, size, lo, hi):
    return (var, size, lo, ((lo, hi),), False)


def adjacent(g, a, b):
    idx = {pv.var: i for i, pv in enumerate(g.vars)}
    return idx[b] in g.adj[idx[a]]


def test_touching_intervals_do_not_conflict():
    g = g_from([arc("a", 10, 0, 5), arc("b", 10, 5, 9)])
    assert not adjacent(g, "a", "b")


def test_overlapping_intervals_conflict():
    g = g_from([arc("a", 10, 0, 5), arc("b", 10, 3, 9)])
    assert adjacent(g, "a", "b")


def test_adjacency_is_symmetric_and_irreflexive():
    rng = random.Random(42)
    arcs, _ = random_interval_arcs(rng, 20)
    g = g_from(arcs)
    for i, nbrs in enumerate(g.adj):
        assert i not in nbrs
        for j in nbrs:
            assert i in g.adj[j]


def test_max_weight_clique_equals_peak_load_on_random_instances():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(2, 12)
        arcs, peak = random_interval_arcs(rng, n)
        g = g_from(arcs, peak=peak)
        sizes = [a[1] for a in arcs]
        segs = [a[3][0] for a in arcs]
        # the heaviest point gives a clique of exactly peak weight
        loads = [0] * 101
        for (lo, hi), s in zip(segs, sizes):
            for r in range(lo, hi):
                loads[r] += s
        peak_pt = max(range(101), key=lambda r: loads[r])
        assert loads[peak_pt] == peak
        cover = [i for i, (lo, hi) in enumerate(segs)
                 if lo <= peak_pt < hi]
        for i, j in itertools.combinations(cover, 2):
            assert j in g.adj[i]
        assert sum(sizes[i] for i in cover) == peak
        # and no clique can weigh more (intervals pairwise overlapping
        # share a point, so every clique is bounded by some point load)
        if n <= 10:
            best = 0
            for mask in range(1, 1 << n):
                members = [i for i in range(n) if mask >> i & 1]
                if all(j in g.adj[i]
                       for i, j in itertools.combinations(members, 2)):
                    best = max(best, sum(sizes[i] for i in members))
            assert best == peak


def test_independent_vars_share_offset_zero():
    g = g_from([arc("a", 10, 0, 5), arc("b", 10, 5, 9)])
    for policy in ("first_fit", "best_fit"):
        plan = mp.plan_pool(g, policy)
        assert plan.offsets == {"a": 0, "b": 0}
        assert plan.footprint_bytes == 10


def test_conflicting_vars_stack():
    g = g_from([arc("a", 10, 0, 5), arc("b", 10, 3, 9)])
    for policy in ("first_fit", "best_fit"):
        plan = mp.plan_pool(g, policy)
        assert sorted(plan.offsets.values()) == [0, 10]
        assert plan.footprint_bytes == 20
        mp.check_plan(plan, g)


def test_chain_places_middle_var_above_both_ends():
    # A-B conflict, B-C conflict, A and C independent
    arcs = [arc("A", 30, 0, 5), arc("B", 20, 4, 8), arc("C", 25, 6, 9)]
    g = g_from(arcs, peak=50)
    for policy in ("first_fit", "best_fit"):
        plan = mp.plan_pool(g, policy)
        assert plan.offsets == {"A": 0, "C": 0, "B": 30}
        assert plan.footprint_bytes == 50
        assert plan.competitive_ratio == 1.0
        mp.check_plan(plan, g)
    assert mp.brute_force_optimal_footprint(g) == 50


def test_brute_force_independent_set_is_max_size():
    arcs = [arc("a", 17, 0, 2), arc("b", 23, 2, 4), arc("c", 5, 4, 6)]
    g = g_from(arcs, peak=23)
    assert mp.brute_force_optimal_footprint(g) == 23


def test_brute_force_clique_is_sum():
    arcs = [arc("a", 10, 0, 8), arc("b", 20, 2, 6)]
    g = g_from(arcs, peak=30)
    assert mp.brute_force_optimal_footprint(g) == 30


def test_footprint_sandwich_on_small_random_instances():
    rng = random.Random(99)
    for _ in range(100):
        n = rng.randint(2, 6)
        arcs, peak = random_interval_arcs(rng, n)
        g = g_from(arcs, peak=peak)
        opt = mp.brute_force_optimal_footprint(g)
        for policy in ("first_fit", "best_fit"):
            plan = mp.plan_pool(g, policy)
            mp.check_plan(plan, g)
            assert peak <= opt <= plan.footprint_bytes


def test_brute_force_rejects_large_graphs():
    rng = random.Random(1)
    arcs, peak = random_interval_arcs(rng, 11)
    g = g_from(arcs, peak=peak)
    with pytest.raises(mp.GraphTooLarge):
        mp.brute_force_optimal_footprint(g)
    small, speak = random_interval_arcs(rng, 4)
    with pytest.raises(mp.GraphTooLarge):
        mp.brute_force_optimal_footprint(g_from(small, peak=speak),
                                         max_vars=3)


def test_largest_variable_sits_at_offset_zero():
    rng = random.Random(3)
    for _ in range(50):
        arcs, peak = random_interval_arcs(rng, rng.randint(2, 15))
        g = g_from(arcs, peak=peak)
        for policy in ("first_fit", "best_fit"):
            plan = mp.plan_pool(g, policy)
            biggest = max(g.vars, key=lambda pv: pv.size)
            assert plan.offsets[biggest.var] == 0


def test_planning_is_deterministic():
    rng = random.Random(5)
    arcs, peak = random_interval_arcs(rng, 30)
    g = g_from(arcs, peak=peak)
    a = mp.plan_pool(g, "best_fit")
    b = mp.plan_pool(g, "best_fit")
    assert a.offsets == b.offsets
    assert a.footprint_bytes == b.footprint_bytes


def test_unknown_policy_rejected():
    g = g_from([arc("a", 1, 0, 1)])
    with pytest.raises(ValueError):
        mp.plan_pool(g, "worst_fit")


def test_check_plan_rejects_overlap():
    g = g_from([arc("a", 10, 0, 5), arc("b", 10, 3, 9)])
    plan = mp.plan_pool(g, "best_fit")
    bad = mp.PoolPlan(policy=plan.policy,
                      offsets={"a": 0, "b": 5},
                      sizes=plan.sizes,
                      footprint_bytes=15,
                      peak_load_bytes=plan.peak_load_bytes)
    with pytest.raises(mp.MemplanError):
        mp.check_plan(bad, g)


def _generator_profile(seed=0, depth=5, iterations=4):
    spec = mp.vgg_like(depth=depth, scale=0.4, iterations=iterations,
                       seed=seed)
    t = mp.generate_synthetic_trace(spec)
    det = mp.detect_iteration(t)
    return mp.extract_lifetimes(t, det.window)


def test_single_var_lookup_table():
    ops = []
    for k in (1, 2):
        ops += [
            ("malloc", f"x{k}", 10), ("write", f"x{k}", 0),
            ("read", f"x{k}", 0), ("read", f"x{k}", 0),
            ("free", f"x{k}", 0), ("malloc", f"y{k}", 3),
            ("write", f"y{k}", 0), ("free", f"y{k}", 0),
        ]
    from conftest import make_trace
    t = make_trace(ops)
    det = mp.detect_iteration(t)
    profile = mp.extract_lifetimes(t, det.window)
    plan = mp.plan_pool(mp.build_conflict_graph(profile), "best_fit")
    table = mp.make_lookup_table(plan, profile)
    assert len(table) == 2
    assert 0 in table and 5 in table
    assert table.offset_for(0) == 0
    assert table.var_for(0) == "x2"


def test_lookup_table_requires_planned_offsets():
    profile = _generator_profile()
    empty = mp.PoolPlan(policy="best_fit", offsets={}, sizes={},
                        footprint_bytes=0, peak_load_bytes=0)
    with pytest.raises(mp.MissingVariable):
        mp.make_lookup_table(empty, profile)


def test_replay_never_double_books_addresses():
    for seed in (0, 4):
        profile = _generator_profile(seed=seed)
        g = mp.build_conflict_graph(profile)
        plan = mp.plan_pool(g, "best_fit")
        table = mp.make_lookup_table(plan, profile)
        for v in profile.variables:
            if v.alloc_index is not None:
                assert table.offset_for(v.alloc_index) == plan.offsets[v.var]
        for r in range(profile.period):
            live = [v for v in profile.variables if v.covers(r)]
            spans = sorted((plan.offsets[v.var],
                            plan.offsets[v.var] + v.size) for v in live)
            for (_, hi), (lo, _) in zip(spans, spans[1:]):
                assert hi <= lo, f"overlap at op {r}"
            assert spans[-1][1] <= plan.footprint_bytes


def test_plan_alpha_near_one_on_layered_instances():
    for seed in (0, 1):
        profile = _generator_profile(seed=seed, depth=7)
        g = mp.build_conflict_graph(profile)
        plan = mp.plan_pool(g, "best_fit")
        assert plan.peak_load_bytes <= plan.footprint_bytes
        assert plan.competitive_ratio <= 1.10
