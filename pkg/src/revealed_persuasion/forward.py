"""Optimal persuasion when both utilities are known, and synthetic data from it."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

import numpy as np

from .axioms import CONSISTENT, VIOLATED, Verdict
from .dataset import (
    Atom,
    DatasetFormatError,
    MenuObservation,
    SdscDataset,
    World,
    _state_row,
    is_informative,
    revealed_signal,
    sigma_from_signal,
    world_from_dict,
)
from .farkas import solve_lp
from .geometry import posterior_cover
from .rational import Vec, dot, render

INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SenderProblem:
    world: World
    u: Mapping[str, Vec]
    menu: tuple
    prior: Vec
    label: str = ""

    def phi_at_prior(self) -> Fraction:
        """Sender payoff without information; receiver ties go the sender's way."""
        best = self.world.best_responses(self.menu, self.prior)
        return max(dot(self.u[a], self.prior) for a in best)

    def sender_best_at_prior(self) -> str:
        best = self.world.best_responses(self.menu, self.prior)
        return max(best, key=lambda a: (dot(self.u[a], self.prior), -self.menu.index(a)))


@dataclass(frozen=True)
class OptimalSignal:
    """Recommendation-form optimum: one posterior per recommended action.

    ``support`` keeps the raw outer-point atoms found by the LP before atoms
    sharing an action are merged; ``benefit`` records strict gain over
    revealing nothing.
    """

    atoms: tuple
    value: Fraction
    lam: Vec
    support: tuple = field(default=(), compare=False)
    benefit: bool = False

    def to_dict(self) -> dict:
        return {
            "value": render(self.value),
            "benefit": self.benefit,
            "hyperplane": [render(x) for x in self.lam],
            "atoms": [
                {"action": a.action, "posterior": [render(x) for x in a.posterior], "mass": render(a.mass)}
                for a in self.atoms
            ],
        }


def _merge(atoms: Sequence[Atom]) -> tuple:
    grouped: dict = {}
    for atom in atoms:
        mass, acc = grouped.get(atom.action, (Fraction(0), None))
        moment = tuple(atom.mass * x for x in atom.posterior)
        acc = moment if acc is None else tuple(x + y for x, y in zip(acc, moment))
        grouped[atom.action] = (mass + atom.mass, acc)
    return tuple(Atom(a, tuple(x / m for x in acc), m) for a, (m, acc) in grouped.items())


def solve(problem: SenderProblem, *, nontrivial: bool = True) -> OptimalSignal:
    """Maximize expected sender utility over signals supported on outer points.

    With ``nontrivial`` set, a problem without strict gain returns the
    uninformative signal, recommending the sender's favourite among the
    receiver's best responses at the prior.
    """
    world = problem.world
    cover = posterior_cover(world, problem.menu)
    columns = [(a, p) for a in problem.menu for p in cover.regions[a].vertices]
    N = world.dim
    A_eq = [[p[k] for _, p in columns] for k in range(N)]
    c = [dot(problem.u[a], p) for a, p in columns]
    res = solve_lp(c, A_eq, list(problem.prior))
    if res.status != "optimal":  # pragma: no cover - the prior is always a mixture of vertices
        raise RuntimeError(f"persuasion LP ended with status {res.status}")
    lam = tuple(res.y_eq)
    raw = tuple(Atom(a, p, m) for (a, p), m in zip(columns, res.x) if m > 0)
    phi0 = problem.phi_at_prior()
    benefit = res.value > phi0
    if nontrivial and not benefit:
        atoms = (Atom(problem.sender_best_at_prior(), problem.prior, Fraction(1)),)
    else:
        atoms = _merge(raw)
    return OptimalSignal(atoms, res.value, lam, raw, benefit)


def benefits_from_persuasion(problem: SenderProblem) -> bool:
    return solve(problem).value > problem.phi_at_prior()


def generate_dataset(problems: Sequence[SenderProblem]) -> SdscDataset:
    if not problems:
        raise ValueError("at least one problem is required")
    world = problems[0].world
    if any(p.world != world for p in problems):
        raise ValueError("all problems must share one world")
    observations = []
    for prob in problems:
        if any(q <= 0 for q in prob.prior):
            raise ValueError("priors must have full support")
        sig = solve(prob)
        sigma = sigma_from_signal(sig.atoms, prob.prior, prob.menu)
        observations.append(MenuObservation(tuple(prob.menu), tuple(prob.prior), sigma, prob.label))
    return SdscDataset(world, tuple(observations))


def problems_from_dict(data: Mapping) -> list:
    """A world, a sender utility per action and state, and a list of menus with priors."""
    world = world_from_dict(data)
    raw_u = data.get("sender_utility")
    if not isinstance(raw_u, Mapping):
        raise DatasetFormatError("missing sender_utility")
    u = {}
    for a in world.actions:
        if a not in raw_u:
            raise DatasetFormatError(f"sender_utility missing action {a!r}")
        u[a] = _state_row(raw_u[a], world.states, f"sender_utility[{a}]")
    problems = []
    for k, raw in enumerate(data.get("problems", [])):
        try:
            menu = tuple(raw["menu"])
            prior = _state_row(raw["prior"], world.states, f"problems[{k}].prior")
        except KeyError as exc:
            raise DatasetFormatError(f"problems[{k}]: missing key {exc}") from None
        unknown = [a for a in menu if a not in world.receiver_utility]
        if unknown or not menu:
            raise DatasetFormatError(f"problems[{k}]: bad menu {list(menu)}")
        if sum(prior) != 1 or any(q <= 0 for q in prior):
            raise DatasetFormatError(f"problems[{k}]: prior must be a full-support distribution")
        problems.append(SenderProblem(world, u, menu, prior, str(raw.get("label", f"M{k + 1}"))))
    if not problems:
        raise DatasetFormatError("no problems listed")
    return problems


def load_problems(path) -> list:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}: invalid JSON ({exc})") from None
    return problems_from_dict(data)


# Random instances ---------------------------------------------------------


def _tenths(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-9, 9), 10)


def random_prior(rng: random.Random, n: int) -> Vec:
    weights = [rng.randint(1, 9) for _ in range(n)]
    total = sum(weights)
    return tuple(Fraction(w, total) for w in weights)


def random_problems(
    rng: random.Random,
    *,
    n_states: int | None = None,
    n_actions: int | None = None,
    n_menus: int | None = None,
    varying_priors: bool = False,
) -> list:
    """A shared world and sender utility with one or more menus over it."""
    n_states = n_states or rng.choice([2, 3])
    n_actions = n_actions or rng.randint(2, 5)
    n_menus = n_menus or rng.randint(1, 3)
    states = tuple(f"w{k + 1}" for k in range(n_states))
    actions = tuple(f"x{k + 1}" for k in range(n_actions))
    v = {a: tuple(_tenths(rng) for _ in states) for a in actions}
    u = {a: tuple(_tenths(rng) for _ in states) for a in actions}
    world = World(states, actions, v)
    prior = random_prior(rng, n_states)
    menus: list = []
    for _ in range(n_menus * 4):
        if len(menus) == n_menus:
            break
        size = rng.randint(min(2, n_actions), n_actions)
        menu = tuple(sorted(rng.sample(actions, size)))
        if menu not in menus:
            menus.append(menu)
    problems = []
    for i, menu in enumerate(menus):
        p0 = random_prior(rng, n_states) if varying_priors else prior
        problems.append(SenderProblem(world, u, menu, p0, f"M{i + 1}"))
    return problems


# Brute-force oracle -------------------------------------------------------


def _interval(v: Mapping[str, Vec], menu: Sequence[str], a: str) -> tuple | None:
    """Where ``a`` is optimal, as an interval of the second state's probability."""
    lo, hi = Fraction(0), Fraction(1)
    for b in menu:
        d0 = v[a][0] - v[b][0]
        d1 = v[a][1] - v[b][1]
        slope = d1 - d0  # advantage(q) = d0 + slope * q >= 0
        if slope == 0:
            if d0 < 0:
                return None
        elif slope > 0:
            lo = max(lo, -d0 / slope)
        else:
            hi = min(hi, -d0 / slope)
    return (lo, hi) if lo <= hi else None


def _compositions(k: int, d: int) -> np.ndarray:
    """All nonnegative integer ``k``-vectors with sum at most ``d``."""
    arr = np.arange(d + 1, dtype=np.int64).reshape(-1, 1)
    for _ in range(k - 1):
        sums = arr.sum(axis=1)
        counts = d - sums + 1
        base = np.repeat(arr, counts, axis=0)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        col = np.arange(counts.sum(), dtype=np.int64) - starts
        arr = np.hstack([base, col.reshape(-1, 1)])
    return arr


def brute_force_nbps(dataset: SdscDataset, grid_denominator: int = 30, *, max_free: int = 8) -> Verdict:
    """Exhaustive search for reshuffles whose normalized weights lie on a grid.

    Binary states only. Columns are built here from scratch (interval
    endpoints, plus the prior where it qualifies); the equality system is
    reduced once, and every grid point of the free coordinates is tried.
    """
    world = dataset.world
    if world.dim != 2:
        raise ValueError("the brute-force oracle handles two states only")
    v = world.receiver_utility
    cols: list = []  # (kind, obs, action, q, gain)
    for i, obs in enumerate(dataset.observations):
        q0 = obs.prior[1]
        sig = revealed_signal(obs, i)
        revealed = {atom.action: atom.posterior[1] for atom in sig.atoms}
        informative = is_informative(sig)
        if informative and q0 in revealed.values():
            return Verdict("NBPS", VIOLATED, failures=("prior revealed alongside other posteriors",))
        for a, q in revealed.items():
            cols.append(("rev", i, a, q, 0))
        values = {a: v[a][0] * (1 - q0) + v[a][1] * q0 for a in obs.menu}
        top = max(values.values())
        for a in obs.menu:
            span = _interval(v, obs.menu, a)
            if span is None:
                continue
            points = {span[0], span[1]}
            if values[a] == top and revealed.get(a) != q0:
                points.add(q0)
            for q in sorted(points):
                if revealed.get(a) == q and q != q0:
                    continue  # moving a revealed atom onto itself changes nothing
                gain = 1 if (q == q0 and informative and values[a] == top and revealed.get(a) != q0) else 0
                cols.append(("cand", i, a, q, gain))
    n = len(cols)
    rows: dict = {}
    for j, (kind, i, a, q, _) in enumerate(cols):
        s = 1 if kind == "rev" else -1
        for key, coef in ((("m", i, 0), 1), (("m", i, 1), q), (("a", a, 0), -1), (("a", a, 1), -q)):
            rows.setdefault(key, [Fraction(0)] * n)[j] += s * coef
    matrix = [r for r in rows.values() if any(r)]
    # reduced row echelon form
    pivots: list = []
    r = 0
    for c in range(n):
        pr = next((k for k in range(r, len(matrix)) if matrix[k][c] != 0), None)
        if pr is None:
            continue
        matrix[r], matrix[pr] = matrix[pr], matrix[r]
        pv = matrix[r][c]
        matrix[r] = [x / pv for x in matrix[r]]
        for k in range(len(matrix)):
            if k != r and matrix[k][c] != 0:
                f = matrix[k][c]
                matrix[k] = [x - f * y for x, y in zip(matrix[k], matrix[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    if len(free) > max_free:
        return Verdict("NBPS", INCONCLUSIVE, failures=(f"{len(free)} free coordinates exceed the search budget",))
    d = grid_denominator
    if not free:
        return Verdict("NBPS", CONSISTENT, failures=("only the zero reshuffle exists",))
    L = lcm(*[x.denominator for row in matrix[: len(pivots)] for x in row]) if pivots else 1
    coef = [[int(-row[c] * L) for c in free] for row in matrix[: len(pivots)]]
    big = max([abs(x) for row in coef for x in row] + [1]) * d * len(free) >= 2**62
    coef_arr = np.array(coef, dtype=object if big else np.int64).reshape(len(pivots), len(free))
    gain_idx = [j for j, col in enumerate(cols) if col[4]]
    for first in range(d + 1):
        rest = _compositions(len(free) - 1, d - first) if len(free) > 1 else np.zeros((1, 0), dtype=np.int64)
        grid = np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest])
        if big:
            grid = grid.astype(object)
        dep_scaled = grid @ coef_arr.T
        ok = np.all(dep_scaled % L == 0, axis=1) & np.all(dep_scaled >= 0, axis=1)
        dep = dep_scaled // L
        ok &= grid.sum(axis=1) + dep.sum(axis=1) == d
        if not ok.any():
            continue
        full = np.zeros((len(grid), n), dtype=grid.dtype)
        full[:, free] = grid
        full[:, pivots] = dep
        gain = full[:, gain_idx].sum(axis=1) if gain_idx else np.zeros(len(grid), dtype=np.int64)
        hits = np.nonzero(ok & (gain > 0))[0]
        if len(hits):
            x = full[hits[0]]
            desc = ", ".join(
                f"{cols[j][0]}({cols[j][1]},{cols[j][2]},{render(cols[j][3])})={int(x[j])}/{d}"
                for j in range(n) if x[j]
            )
            return Verdict("NBPS", VIOLATED, failures=(f"grid reshuffle: {desc}",))
    return Verdict("NBPS", CONSISTENT)
