"""Shared fixtures-by-function for the test suite: bundled data and random instances."""

from __future__ import annotations

import random
from fractions import Fraction as F
from pathlib import Path

import revealed_persuasion
from revealed_persuasion.axioms import check_nias, nbps_layout, refine_witness
from revealed_persuasion.dataset import MenuObservation, SdscDataset, World, load_dataset, validate
from revealed_persuasion.forward import SenderProblem

DATA = Path(revealed_persuasion.__file__).parent / "data"


def data_path(name: str) -> Path:
    return DATA / f"{name}.json"


def bundled(name: str) -> SdscDataset:
    return load_dataset(data_path(name))


def random_tiny_dataset(rng: random.Random, n_menus: int, n_actions: int) -> SdscDataset:
    """Binary-state data that passes obedience but need not come from a persuader.

    Each menu either pools at the prior or splits it into two tenth-grid
    posteriors recommending different optimal actions.
    """
    acts = tuple("abcde"[:n_actions])
    while True:
        v = {a: (F(rng.randint(-9, 9), 10), F(rng.randint(-9, 9), 10)) for a in acts}
        world = World(("w1", "w2"), acts, v)
        q = F(rng.randint(1, 9), 10)
        prior = (1 - q, q)
        observations, menus = [], set()
        for i in range(n_menus):
            menu = tuple(sorted(rng.sample(acts, rng.randint(2, n_actions))))
            if menu in menus:
                continue
            menus.add(menu)
            sigma = {a: [F(0), F(0)] for a in menu}
            if rng.random() < 0.2:
                sigma[world.best_responses(menu, prior)[0]] = [F(1), F(1)]
            else:
                lo = F(rng.randint(0, int(q * 10) - 1), 10)
                hi = F(rng.randint(int(q * 10) + 1, 10), 10)
                a_lo = rng.choice(world.best_responses(menu, (1 - lo, lo)))
                a_hi = rng.choice(world.best_responses(menu, (1 - hi, hi)))
                if a_lo == a_hi:
                    continue
                m_lo = (hi - q) / (hi - lo)
                for a, m, p in ((a_lo, m_lo, (1 - lo, lo)), (a_hi, 1 - m_lo, (1 - hi, hi))):
                    for k in range(2):
                        sigma[a][k] += m * p[k] / prior[k]
            observations.append(MenuObservation(menu, prior, {a: tuple(r) for a, r in sigma.items()}, f"M{i + 1}"))
        if observations:
            dataset = SdscDataset(world, tuple(observations))
            if not validate(dataset) and check_nias(dataset).consistent:
                return dataset


def lp_witness_on_grid(dataset: SdscDataset, denominator: int) -> bool:
    """Whether the canonical LP reshuffle, with no-op moves cancelled and scaled to
    total one, has every coordinate on the ``1/denominator`` grid."""
    layout = nbps_layout(dataset)
    x = refine_witness(layout)
    value = dict(zip(layout.system.column_labels, x))
    for label in layout.system.column_labels:
        if label[0] != "rev":
            continue
        i, a = label[1], label[2]
        sig = layout.signals[i]
        p = sig.posterior_of(a)
        twin = ("cand", i, a, p)
        if twin in value and p != sig.prior:
            m = min(value[label], value[twin])
            value[label] -= m
            value[twin] -= m
    total = sum(value.values())
    return all((v / total * denominator).denominator == 1 for v in value.values())


def with_dominated_action(problems: list, rng: random.Random) -> list:
    """Add an action worse than every other action in every state to every menu."""
    world = problems[0].world
    v = dict(world.receiver_utility)
    v["dom"] = tuple(min(row[k] for row in v.values()) - 1 for k in range(world.dim))
    world2 = World(world.states, world.actions + ("dom",), v)
    u = dict(problems[0].u)
    u["dom"] = tuple(F(rng.randint(-9, 9), 10) for _ in world.states)
    return [SenderProblem(world2, u, p.menu + ("dom",), p.prior, p.label) for p in problems]
