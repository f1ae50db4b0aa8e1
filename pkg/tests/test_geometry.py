from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import bundled
from revealed_persuasion.dataset import World, revealed_signal
from revealed_persuasion.forward import _interval
from revealed_persuasion.geometry import (
    candidate_set,
    posterior_cover,
    region,
    satisfies,
    simplex_halfspaces,
    vertex_enumerate,
)


def test_simplex_vertices():
    for n in (2, 3, 4):
        verts = vertex_enumerate(simplex_halfspaces(n), n)
        assert sorted(verts) == sorted(tuple(F(int(j == k)) for j in range(n)) for k in range(n))


def test_four_action_cover_intervals():
    d = bundled("four_action_violation")
    cover = posterior_cover(d.world, d.observations[0].menu)
    spans = {a: sorted(v[1] for v in r.vertices) for a, r in cover.regions.items()}
    assert spans == {
        "a": [0, F(1, 5)],
        "b": [F(1, 5), F(3, 5)],
        "c": [F(3, 5), F(4, 5)],
        "d": [F(4, 5), 1],
    }
    assert len(cover.outer_points) == 5


def test_three_state_regions():
    d = bundled("three_state_full_information")
    menu = d.observations[0].menu
    b = region(d.world, menu, "b")
    assert b.contains((F(1, 3), F(2, 3), F(0)))
    assert not b.contains((F(1, 3), F(1, 3), F(1, 3)))
    assert (F(2, 5), F(3, 5), F(0)) in b.vertices
    assert (F(1, 3), F(2, 3), F(0)) not in b.vertices
    a = region(d.world, menu, "a")
    assert a.contains((F(1, 3), F(1, 3), F(1, 3)))
    with pytest.raises(KeyError):
        region(d.world, ("a", "b"), "c")


def test_empty_region_for_dominated_action():
    world = World(("w1", "w2"), ("a", "z"), {"a": (F(1), F(1)), "z": (F(0), F(0))})
    assert region(world, ("a", "z"), "z").empty


def test_candidates_add_prior_for_unrevealed_optimal_actions():
    d = bundled("four_action_violation")
    obs = d.observations[0]
    cover = posterior_cover(d.world, obs.menu)
    cand = candidate_set(d.world, cover, revealed_signal(obs))
    prior = obs.prior
    assert cand.prior_actions == ("b",)
    assert prior in cand.points["b"] and prior not in cand.points["c"]


def test_candidate_extras_kept_only_inside_region():
    d = bundled("four_action_violation")
    obs = d.observations[0]
    cover = posterior_cover(d.world, obs.menu)
    inside, outside = (F(7, 10), F(3, 10)), (F(1, 10), F(9, 10))
    cand = candidate_set(d.world, cover, revealed_signal(obs), {"b": [inside, outside]})
    assert cand.extra == {"b": (inside,)}
    with pytest.raises(ValueError):
        candidate_set(d.world, cover, revealed_signal(obs), {"zz": [inside]})
    with pytest.raises(ValueError):
        candidate_set(d.world, cover, revealed_signal(obs), {"b": [(F(1, 2), F(1, 3))]})


utilities = st.lists(st.integers(-9, 9), min_size=2, max_size=2)


@settings(max_examples=60)
@given(st.lists(utilities, min_size=2, max_size=5))
def test_binary_vertices_match_indifference_points(rows):
    """Two states: vertices are the interval ends from pairwise indifferences."""
    acts = tuple(f"x{k}" for k in range(len(rows)))
    v = {a: (F(r[0], 10), F(r[1], 10)) for a, r in zip(acts, rows)}
    world = World(("w1", "w2"), acts, v)
    for a in acts:
        reg = region(world, acts, a)
        span = _interval(v, acts, a)
        if span is None:
            assert reg.empty
        else:
            assert sorted({p[1] for p in reg.vertices}) == sorted({span[0], span[1]})


@settings(max_examples=40)
@given(st.lists(st.lists(st.integers(-9, 9), min_size=3, max_size=3), min_size=2, max_size=4))
def test_vertices_are_feasible_and_tight(rows):
    acts = tuple(f"x{k}" for k in range(len(rows)))
    world = World(("w1", "w2", "w3"), acts, {a: tuple(F(x) for x in r) for a, r in zip(acts, rows)})
    for a in acts:
        reg = region(world, acts, a)
        for p in reg.vertices:
            assert sum(p) == 1 and satisfies(reg.halfspaces, p)
            # an extreme point of a 2-dimensional slice has two independent tight constraints
            normals = {tuple(n) for n, _ in reg.tight(p)}
            assert len(normals) >= 2
