"""State-dependent stochastic choice data and the signals it reveals."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .rational import Vec, dot, render, to_rational


@dataclass(frozen=True)
class World:
    """States, the grand action set and the receiver's utility ``v[action][state]``."""

    states: tuple
    actions: tuple
    receiver_utility: Mapping[str, Vec]

    @property
    def dim(self) -> int:
        return len(self.states)

    def v(self, action: str) -> Vec:
        return self.receiver_utility[action]

    def receiver_value(self, action: str, p: Sequence[Fraction]) -> Fraction:
        return dot(self.receiver_utility[action], p)

    def best_responses(self, menu: Sequence[str], p: Sequence[Fraction]) -> list:
        values = {a: self.receiver_value(a, p) for a in menu}
        top = max(values.values())
        return [a for a in menu if values[a] == top]

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "actions": list(self.actions),
            "receiver_utility": {
                a: {s: render(x) for s, x in zip(self.states, self.receiver_utility[a])}
                for a in self.actions
            },
        }


@dataclass(frozen=True)
class MenuObservation:
    """One menu, its prior, and ``sigma[action][state]`` for the menu's actions."""

    menu: tuple
    prior: Vec
    sigma: Mapping[str, Vec]
    label: str = ""

    def name(self, index: int) -> str:
        return self.label or f"obs{index}"


@dataclass(frozen=True)
class SdscDataset:
    world: World
    observations: tuple

    def common_prior(self) -> Vec | None:
        priors = {obs.prior for obs in self.observations}
        return next(iter(priors)) if len(priors) == 1 else None

    def to_dict(self) -> dict:
        out = self.world.to_dict()
        states = self.world.states
        obs_out = []
        for obs in self.observations:
            entry = {
                "menu": list(obs.menu),
                "prior": {s: render(x) for s, x in zip(states, obs.prior)},
                "sigma": {
                    a: {s: render(x) for s, x in zip(states, obs.sigma[a])} for a in obs.menu
                },
            }
            if obs.label:
                entry["label"] = obs.label
            obs_out.append(entry)
        out["observations"] = obs_out
        return out


@dataclass(frozen=True)
class Atom:
    action: str
    posterior: Vec
    mass: Fraction


@dataclass(frozen=True)
class RevealedSignal:
    menu_index: int
    prior: Vec
    atoms: tuple = field(default_factory=tuple)

    def posterior_of(self, action: str) -> Vec | None:
        for atom in self.atoms:
            if atom.action == action:
                return atom.posterior
        return None

    def to_dict(self) -> dict:
        return {
            "menu_index": self.menu_index,
            "atoms": [
                {"action": a.action, "posterior": [render(x) for x in a.posterior], "mass": render(a.mass)}
                for a in self.atoms
            ],
        }


def validate(dataset: SdscDataset) -> list:
    """Every invariant breach as a human-readable string; empty when valid."""
    problems = []
    world = dataset.world
    if len(world.states) < 2:
        problems.append("world: at least two states are required")
    if len(set(world.states)) != len(world.states):
        problems.append("world: duplicate state labels")
    if len(set(world.actions)) != len(world.actions):
        problems.append("world: duplicate action labels")
    for a in world.actions:
        row = world.receiver_utility.get(a)
        if row is None or len(row) != len(world.states):
            problems.append(f"world: receiver utility missing or incomplete for action {a!r}")
    seen = set()
    for i, obs in enumerate(dataset.observations):
        where = f"observation {obs.name(i)}"
        if not obs.menu:
            problems.append(f"{where}: empty menu")
        if len(set(obs.menu)) != len(obs.menu):
            problems.append(f"{where}: duplicate actions in menu")
        for a in obs.menu:
            if a not in world.receiver_utility:
                problems.append(f"{where}: action {a!r} not in the grand action set")
        for a in obs.sigma:
            if a not in obs.menu:
                problems.append(f"{where}: choice probabilities given for {a!r} outside the menu")
        if len(obs.prior) != len(world.states):
            problems.append(f"{where}: prior has wrong dimension")
            continue
        if sum(obs.prior) != 1:
            problems.append(f"{where}: prior sums to {render(sum(obs.prior))}")
        for s, x in zip(world.states, obs.prior):
            if x <= 0:
                problems.append(f"{where}: prior lacks full support at state {s!r}")
        for k, s in enumerate(world.states):
            column = []
            for a in obs.menu:
                row = obs.sigma.get(a)
                if row is None or len(row) != len(world.states):
                    continue
                column.append(row[k])
            if any(x < 0 for x in column):
                problems.append(f"{where}: negative choice probability at state {s!r}")
            if sum(column, Fraction(0)) != 1:
                problems.append(
                    f"{where}: choice probabilities at state {s!r} sum to {render(sum(column, Fraction(0)))}"
                )
        for a in obs.menu:
            row = obs.sigma.get(a)
            if row is not None and len(row) != len(world.states):
                problems.append(f"{where}: choice row for {a!r} has wrong dimension")
        key = (frozenset(obs.menu), obs.prior)
        if key in seen:
            problems.append(f"{where}: menu repeated at an identical prior; aggregate it first")
        seen.add(key)
    return problems


def marginal_choice_prob(obs: MenuObservation, action: str) -> Fraction:
    if action not in obs.menu:
        raise KeyError(f"action {action!r} is not in the menu")
    return dot(obs.sigma[action], obs.prior)


def revealed_signal(obs: MenuObservation, menu_index: int = 0) -> RevealedSignal:
    """Bayes-rule posteriors ``p(w) = sigma(a|w) p0(w) / sigma(a)`` with their masses."""
    atoms = []
    for a in obs.menu:
        mass = marginal_choice_prob(obs, a)
        if mass == 0:
            continue
        post = tuple(s * q / mass for s, q in zip(obs.sigma[a], obs.prior))
        atoms.append(Atom(a, post, mass))
    return RevealedSignal(menu_index, obs.prior, tuple(atoms))


def is_informative(sig: RevealedSignal) -> bool:
    return any(atom.posterior != sig.prior for atom in sig.atoms)


def mixes_prior_with_information(sig: RevealedSignal) -> bool:
    """True when the prior and some other posterior are both revealed in one menu.

    Such a menu cannot come from a sender who only informs when it pays.
    """
    at_prior = any(atom.posterior == sig.prior for atom in sig.atoms)
    return at_prior and is_informative(sig)


def sigma_from_signal(atoms: Sequence[Atom], prior: Sequence[Fraction], menu: Sequence[str]) -> dict:
    """Invert Bayes' rule: ``sigma(a|w) = mass * p(w) / p0(w)``."""
    sigma = {a: [Fraction(0)] * len(prior) for a in menu}
    for atom in atoms:
        for k, q in enumerate(prior):
            sigma[atom.action][k] += atom.mass * atom.posterior[k] / q
    return {a: tuple(row) for a, row in sigma.items()}


# JSON ingestion -----------------------------------------------------------


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files."""


def _state_row(raw: Mapping, states: Sequence[str], what: str) -> Vec:
    if not isinstance(raw, Mapping):
        raise DatasetFormatError(f"{what}: expected an object keyed by state")
    unknown = set(raw) - set(states)
    if unknown:
        raise DatasetFormatError(f"{what}: unknown states {sorted(unknown)}")
    try:
        return tuple(to_rational(raw.get(s, "0")) for s in states)
    except (TypeError, ValueError) as exc:
        raise DatasetFormatError(f"{what}: {exc}") from None


def world_from_dict(data: Mapping) -> World:
    try:
        states = tuple(data["states"])
        actions = tuple(data["actions"])
        raw_v = data["receiver_utility"]
    except KeyError as exc:
        raise DatasetFormatError(f"missing key {exc}") from None
    missing = [a for a in actions if a not in raw_v]
    if missing:
        raise DatasetFormatError(f"receiver_utility missing actions {missing}")
    for a in actions:
        if set(raw_v[a]) != set(states):
            raise DatasetFormatError(f"receiver_utility for {a!r} must list every state")
    v = {a: _state_row(raw_v[a], states, f"receiver_utility[{a}]") for a in actions}
    return World(states, actions, v)


def dataset_from_dict(data: Mapping) -> SdscDataset:
    world = world_from_dict(data)
    observations = []
    for i, raw in enumerate(data.get("observations", [])):
        try:
            menu = tuple(raw["menu"])
            prior = _state_row(raw["prior"], world.states, f"observations[{i}].prior")
            raw_sigma = raw["sigma"]
        except KeyError as exc:
            raise DatasetFormatError(f"observations[{i}]: missing key {exc}") from None
        sigma = {
            a: _state_row(row, world.states, f"observations[{i}].sigma[{a}]") for a, row in raw_sigma.items()
        }
        for a in menu:
            sigma.setdefault(a, tuple(Fraction(0) for _ in world.states))
        observations.append(MenuObservation(menu, prior, sigma, str(raw.get("label", ""))))
    if not observations:
        raise DatasetFormatError("dataset has no observations")
    dataset = SdscDataset(world, tuple(observations))
    problems = validate(dataset)
    if problems:
        raise DatasetFormatError("; ".join(problems))
    return dataset


def load_dataset(path: str | Path) -> SdscDataset:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}: invalid JSON ({exc})") from None
    return dataset_from_dict(data)
