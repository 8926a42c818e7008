"""Metropolis chain vs. exact enumeration on small tori."""

import math
import random

import pytest
from hypothesis import given, strategies as st

from tilephase.configuration import Placement, Torus
from tilephase.criteria import build_supercell
from tilephase.gcmc import (
    OracleCapError,
    PinnedWindow,
    Sampler,
    SimParams,
    activity,
    acceptance_table,
    enumerate_admissible,
    exact_oracle,
    fit_slope,
    measure_correctness,
    random_admissible,
    run,
    scaling_points,
    slot_table,
)
from tilephase.tilings import enumerate_tiling_classes

T22 = Torus(((2, 0), (0, 2)))
T33 = Torus(((3, 0), (0, 3)))
T44 = Torus(((4, 0), (0, 4)))


def chain_histogram(system, domain, beta, seed, steps):
    sampler = Sampler(system, domain, beta, seed=seed)
    hist = {}
    for _ in range(steps):
        sampler.step()
        hist[sampler.mask] = hist.get(sampler.mask, 0) + 1
    return hist


def diamond_grid(diamond):
    return build_supercell(diamond, enumerate_tiling_classes(diamond, 4, group="t"))


def test_slot_table_is_shared(monomino, diamond):
    slots = slot_table(monomino, T22)
    assert len(slots) == 4
    assert enumerate_admissible(monomino, T22)[0] == slots
    assert Sampler(monomino, T22, 0.0).slots == slots
    # one oriented image per species on every site
    assert len(slot_table(diamond, T44)) == 16


def test_acceptance_table_balances_exactly(diamond_octagon):
    for beta in (0.0, 0.3, 1.0, 2.7, 10.0):
        for i, x, log_ins, log_del in acceptance_table(diamond_octagon, beta):
            assert x == beta / math.sqrt(53) * diamond_octagon.species[i].weight
            assert log_ins == min(0.0, x)
            assert log_del == min(0.0, -x)
            # ratio-level detailed balance, exact in floating point
            assert log_ins - log_del == x


@given(st.floats(min_value=0.0, max_value=80.0, allow_nan=False))
def test_acceptance_identity_for_any_beta(monomino, beta):
    ((_, x, log_ins, log_del),) = acceptance_table(monomino, beta)
    assert log_ins - log_del == x


def test_uniform_at_beta_zero(monomino):
    oracle = exact_oracle(monomino, T22, 0.0)
    assert oracle.size == 16
    assert max(oracle.probs) == min(oracle.probs) == 1 / 16
    hist = chain_histogram(monomino, T22, 0.0, seed=5, steps=100_000)
    assert len(hist) == 16
    assert oracle.tv_distance(hist) < 0.02


def test_chain_matches_oracle_at_positive_beta(monomino, diamond):
    oracle = exact_oracle(monomino, T22, 1.3)
    hist = chain_histogram(monomino, T22, 1.3, seed=9, steps=200_000)
    assert oracle.tv_distance(hist) < 0.02

    oracle = exact_oracle(diamond, T44, 1.0)
    assert oracle.size == 743
    hist = chain_histogram(diamond, T44, 1.0, seed=777, steps=300_000)
    assert oracle.tv_distance(hist) < 0.1


def test_admissible_counts(monomino, diamond):
    slots, masks, weights = enumerate_admissible(monomino, T33)
    assert len(masks) == 2 ** 9 == 512
    assert all(w == bin(m).count("1") for m, w in zip(masks, weights))
    _, masks, weights = enumerate_admissible(diamond, T44)
    assert len(masks) == 743
    assert max(weights) == 16  # the two perfect packings of 8 diamonds
    assert sum(1 for w in weights if w == 16) == 2


def test_oracle_cap_is_checked_while_growing(monomino):
    with pytest.raises(OracleCapError, match="cap of 100") as err:
        enumerate_admissible(monomino, T33, cap=100)
    assert "101" in str(err.value)


def test_single_site_density_is_logistic(monomino):
    oracle = exact_oracle(monomino, Torus(((1, 0), (0, 1))), 1.0)
    assert oracle.species_densities() == (math.e / (1 + math.e),)


def test_run_is_deterministic(monomino):
    params = SimParams(
        monomino, T33, beta=1.0, sweeps=300, burn_in=50, sample_interval=10,
        seed=42,
    )
    first = run(params)
    second = run(params)
    assert first.trajectory == second.trajectory
    assert first.snapshot == second.snapshot
    other = run(SimParams(
        monomino, T33, beta=1.0, sweeps=300, burn_in=50, sample_interval=10,
        seed=43,
    ))
    assert other.trajectory != first.trajectory


def test_trajectory_observables(monomino):
    grid = build_supercell(monomino, enumerate_tiling_classes(monomino, 2, group="t"))
    params = SimParams(
        monomino, T33, beta=2.0, sweeps=40, burn_in=10, sample_interval=5,
        seed=1, grid=grid,
    )
    result = run(params)
    assert [row.sweep for row in result.trajectory] == [15, 20, 25, 30, 35, 40]
    for row in result.trajectory:
        assert row.density == sum(row.counts) / 9
        assert len(row.fractions) == 1 and 0.0 <= row.fractions[0] <= 1.0
        assert row.contours >= 0 and row.contour_support >= 0
        assert all(0.0 <= a <= 1.0 for a in row.acceptance)


def test_measure_correctness_of_perfect_snapshot(diamond):
    grid = diamond_grid(diamond)
    placements = [
        Placement((x, y), 0, 0)
        for x in range(4)
        for y in range(4)
        if (x - y) % 2 == 0
    ]
    from tilephase.configuration import Configuration

    row = measure_correctness(Configuration(diamond, T44, placements), grid)
    assert row.fractions == (1.0,)
    assert row.contours == 0 and row.contour_support == 0
    assert row.density == 8 / 16


def test_pinned_window_enumeration(diamond):
    grid = diamond_grid(diamond)
    model = PinnedWindow.build(diamond, grid, [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert model.track == (0, 0)
    assert len(model.window.sites) == 8
    assert len(model.weight_sums) == 16
    assert sum(model.track_correct) == 1
    assert math.isclose(sum(model.distribution(1.7)), 1.0, abs_tol=1e-12)
    with pytest.raises(ValueError, match="tracked cell"):
        PinnedWindow.build(diamond, grid, [(0, 0), (0, 1)], track=(5, 5))


def test_pinned_window_defect_scaling(diamond):
    grid = diamond_grid(diamond)
    model = PinnedWindow.build(diamond, grid, [(0, 0), (0, 1), (1, 0), (1, 1)])
    betas = [math.log(10) * (2.0 + k / 5) for k in range(6)]
    probs = [model.correct_probability(b) for b in betas]
    assert all(b > a for a, b in zip(probs, probs[1:]))
    points = scaling_points(model, betas)
    assert points[0][0] == pytest.approx(2.0 * math.log(10) * 2 / 2)
    slope = fit_slope(points)
    # defect probability falls off like 1/z: one missing tile dominates
    assert slope == pytest.approx(-0.99067, abs=1e-4)
    assert abs(slope + 1.0) <= 0.1


def test_scaling_needs_positive_defect(diamond):
    grid = diamond_grid(diamond)
    model = PinnedWindow.build(diamond, grid, [(0, 0), (0, 1), (1, 0), (1, 1)])
    with pytest.raises(ValueError, match="vanished"):
        scaling_points(model, [800.0])


def test_activity_uses_the_lightest_species(monomino, diamond_octagon):
    assert activity(monomino, 2.0) == math.exp(2.0)
    assert activity(diamond_octagon, 1.0) == math.exp(2 / math.sqrt(53))


def test_random_admissible_is_reproducible(diamond):
    first = random_admissible(diamond, T44, random.Random(3))
    second = random_admissible(diamond, T44, random.Random(3))
    assert first == second
    assert first.is_admissible
    empty = random_admissible(diamond, T44, random.Random(3), fill=0.0)
    assert len(empty) == 0
    packed = random_admissible(diamond, T44, random.Random(3), fill=1.0)
    assert packed.is_admissible and len(packed) > 0
