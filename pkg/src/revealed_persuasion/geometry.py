"""Receiver optimality regions inside the belief simplex and their extreme points."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

from .dataset import RevealedSignal, World
from .rational import Vec, dot, in_simplex, render, solve_square, sub

Halfspace = tuple  # (normal: Vec, offset: Fraction) meaning normal . p >= offset


def simplex_halfspaces(dim: int) -> list:
    """Nonnegativity of each coordinate."""
    return [(tuple(Fraction(int(k == j)) for k in range(dim)), Fraction(0)) for j in range(dim)]


def satisfies(halfspaces: Sequence[Halfspace], p: Sequence[Fraction]) -> bool:
    return all(dot(n, p) >= o for n, o in halfspaces)


def vertex_enumerate(halfspaces: Sequence[Halfspace], dim: int) -> list:
    """Extreme points of ``{p : sum(p) = 1, normal . p >= offset}``.

    Basis enumeration: every choice of ``dim - 1`` linearly independent tight
    constraints, together with the sum-to-one equality, pins down one point;
    the feasible ones are the vertices.
    """
    useful = [(tuple(n), o) for n, o in halfspaces if any(x != 0 for x in n)]
    ones = tuple(Fraction(1) for _ in range(dim))
    found: list = []
    seen = set()
    for subset in combinations(range(len(useful)), dim - 1):
        matrix = [useful[k][0] for k in subset] + [ones]
        rhs = [useful[k][1] for k in subset] + [Fraction(1)]
        point = solve_square(matrix, rhs)
        if point is None or point in seen:
            continue
        if satisfies(useful, point):
            seen.add(point)
            found.append(point)
    found.sort(key=lambda p: tuple(-x for x in p))
    return found


@dataclass(frozen=True)
class OptimalityRegion:
    """Beliefs at which ``action`` is a receiver best response within the menu."""

    menu_index: int
    action: str
    halfspaces: tuple
    vertices: tuple

    @property
    def empty(self) -> bool:
        return not self.vertices

    def contains(self, p: Sequence[Fraction]) -> bool:
        return in_simplex(p) and satisfies(self.halfspaces, p)

    def tight(self, p: Sequence[Fraction]) -> list:
        return [(n, o) for n, o in self.halfspaces if dot(n, p) == o]


def region(world: World, menu: Sequence[str], action: str, menu_index: int = 0) -> OptimalityRegion:
    if action not in menu:
        raise KeyError(f"action {action!r} is not in the menu")
    dim = world.dim
    hs = list(simplex_halfspaces(dim))
    for b in menu:
        if b == action:
            continue
        normal = sub(world.v(action), world.v(b))
        if any(x != 0 for x in normal):
            hs.append((normal, Fraction(0)))
    return OptimalityRegion(menu_index, action, tuple(hs), tuple(vertex_enumerate(hs, dim)))


@dataclass(frozen=True)
class PosteriorCover:
    menu_index: int
    regions: Mapping[str, OptimalityRegion]
    outer_points: tuple

    def to_dict(self, states: Sequence[str] | None = None) -> dict:
        def show(p):
            return [render(x) for x in p]

        return {
            "menu_index": self.menu_index,
            "regions": {
                a: {"vertices": [show(v) for v in r.vertices], "empty": r.empty} for a, r in self.regions.items()
            },
            "outer_points": [show(p) for p in self.outer_points],
        }


def posterior_cover(world: World, menu: Sequence[str], menu_index: int = 0) -> PosteriorCover:
    regions = {a: region(world, menu, a, menu_index) for a in menu}
    outer: list = []
    for r in regions.values():
        for v in r.vertices:
            if v not in outer:
                outer.append(v)
    outer.sort(key=lambda p: tuple(-x for x in p))
    return PosteriorCover(menu_index, regions, tuple(outer))


@dataclass(frozen=True)
class CandidateSet:
    """Per action: extreme points of its region, plus the prior where it qualifies.

    ``prior_actions`` lists the actions for which the prior was added because it
    is receiver-optimal there and not already revealed for that action.
    ``extra`` holds user-declared posteriors that are hypothesised to be
    strictly suboptimal for the sender whenever they are not chosen.
    """

    menu_index: int
    points: Mapping[str, tuple]
    prior_actions: tuple
    extra: Mapping[str, tuple] = field(default_factory=dict)


def candidate_set(
    world: World,
    cover: PosteriorCover,
    revealed: RevealedSignal,
    extra: Mapping[str, Sequence[Vec]] | None = None,
) -> CandidateSet:
    if cover.menu_index != revealed.menu_index:
        raise ValueError("cover and revealed signal come from different observations")
    prior = revealed.prior
    menu = list(cover.regions)
    optimal_at_prior = set(world.best_responses(menu, prior))
    points: dict = {}
    prior_actions = []
    for a, reg in cover.regions.items():
        pts = list(reg.vertices)
        if a in optimal_at_prior and revealed.posterior_of(a) != prior:
            prior_actions.append(a)
            if prior not in pts:
                pts.append(prior)
        points[a] = tuple(pts)
    kept_extra: dict = {}
    for a, pts in (extra or {}).items():
        if a not in cover.regions:
            raise ValueError(f"excluded posterior given for {a!r}, which is not in the menu")
        for p in pts:
            p = tuple(p)
            if len(p) != world.dim or not in_simplex(p):
                raise ValueError(f"excluded posterior {[render(x) for x in p]} is not a belief")
            if cover.regions[a].contains(p) and p not in kept_extra.get(a, ()):
                kept_extra[a] = kept_extra.get(a, ()) + (p,)
    return CandidateSet(cover.menu_index, points, tuple(prior_actions), kept_extra)
