"""Persuasion when only the posterior mean of a state in [0, 1] matters.

Utilities are affine in the mean, the prior has finite support ``Z`` and a
signal is feasible iff its distribution of means is a mean-preserving
contraction (MPC) of the prior. The pieces mirror the finite-state test:
revealed means, candidate means per action, a linear reshuffling system, a
dual price function and a forward solver to generate data.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .axioms import CONSISTENT, VIOLATED, Verdict, check_nias
from .dataset import DatasetFormatError, MenuObservation, SdscDataset, World
from .farkas import LE, PRIMAL, Certificate, FeasibilitySystem, SystemBuilder, decide, replay, solve_lp
from .rational import AffineFn1D, render, to_rational

ZERO = Fraction(0)


def _plus(x: Fraction) -> Fraction:
    return x if x > 0 else ZERO


# Domain types -------------------------------------------------------------


@dataclass(frozen=True)
class MeanWorld:
    """Finite support ``Z`` of the state and receiver utilities affine in the mean."""

    support: tuple
    actions: tuple
    receiver_utility: Mapping[str, AffineFn1D]

    def v(self, action: str, z: Fraction) -> Fraction:
        return self.receiver_utility[action](z)

    def best_responses(self, menu: Sequence[str], z: Fraction) -> list:
        values = {a: self.v(a, z) for a in menu}
        top = max(values.values())
        return [a for a in menu if values[a] == top]

    def region(self, menu: Sequence[str], action: str) -> tuple | None:
        """The interval of means at which ``action`` is optimal within ``menu``."""
        lo, hi = Fraction(0), Fraction(1)
        va = self.receiver_utility[action]
        for b in menu:
            vb = self.receiver_utility[b]
            slope = va.slope - vb.slope
            gap = va.intercept - vb.intercept  # advantage(z) = gap + slope * z
            if slope == 0:
                if gap < 0:
                    return None
            elif slope > 0:
                lo = max(lo, -gap / slope)
            else:
                hi = min(hi, -gap / slope)
        return (lo, hi) if lo <= hi else None

    def to_dict(self) -> dict:
        return {
            "support": [render(z) for z in self.support],
            "actions": list(self.actions),
            "receiver_utility": {a: self.receiver_utility[a].to_dict() for a in self.actions},
        }


@dataclass(frozen=True)
class MeanObservation:
    """A menu, the prior pmf over ``Z`` and ``sigma[action][k]`` for each support point."""

    menu: tuple
    prior: tuple
    sigma: Mapping[str, tuple]
    label: str = ""

    def name(self, index: int) -> str:
        return self.label or f"obs{index}"


@dataclass(frozen=True)
class MeanDataset:
    world: MeanWorld
    observations: tuple

    def common_prior(self) -> tuple | None:
        priors = {obs.prior for obs in self.observations}
        return next(iter(priors)) if len(priors) == 1 else None

    def to_dict(self) -> dict:
        out = self.world.to_dict()
        out["observations"] = []
        for obs in self.observations:
            entry = {
                "menu": list(obs.menu),
                "prior": [render(x) for x in obs.prior],
                "sigma": {a: [render(x) for x in obs.sigma[a]] for a in obs.menu},
            }
            if obs.label:
                entry["label"] = obs.label
            out["observations"].append(entry)
        return out


@dataclass(frozen=True)
class MeanAtom:
    action: str
    mean: Fraction
    mass: Fraction


@dataclass(frozen=True)
class MeanRevealedSignal:
    menu_index: int
    prior_atoms: tuple  # (z, f0(z)) with positive mass
    atoms: tuple

    @property
    def prior_mean(self) -> Fraction:
        return sum((z * w for z, w in self.prior_atoms), ZERO)

    def mean_of(self, action: str) -> Fraction | None:
        for atom in self.atoms:
            if atom.action == action:
                return atom.mean
        return None

    @property
    def informative(self) -> bool:
        z0 = self.prior_mean
        return any(atom.mean != z0 for atom in self.atoms)

    def distribution(self) -> tuple:
        return tuple((atom.mean, atom.mass) for atom in self.atoms)

    def profile(self) -> tuple:
        return integral_profile(self.prior_atoms, self.distribution())


# Mean-preserving contractions -------------------------------------------


def integral(prior: Sequence, dist: Sequence, z: Fraction) -> Fraction:
    """``I(z)``: the integral over ``[0, z]`` of ``F0 - F`` for atom lists ``(point, mass)``."""
    return sum((w * _plus(z - x) for x, w in prior), ZERO) - sum((w * _plus(z - x) for x, w in dist), ZERO)


def integral_profile(prior: Sequence, dist: Sequence) -> tuple:
    """``I`` at every breakpoint; it is linear in between."""
    points = sorted({Fraction(0), Fraction(1)} | {x for x, _ in prior} | {x for x, _ in dist})
    return tuple((z, integral(prior, dist, z)) for z in points)


@dataclass(frozen=True)
class MpcResult:
    feasible: bool
    profile: tuple


def mpc_check(prior_pmf: Sequence, dist: Sequence) -> MpcResult:
    """Whether ``dist`` is a mean-preserving contraction of ``prior_pmf``.

    Both arguments are sequences of ``(point, mass)`` pairs on ``[0, 1]``.
    """
    profile = integral_profile(prior_pmf, dist)
    ok = all(v >= 0 for _, v in profile) and profile[-1][1] == 0
    ok = ok and sum((w for _, w in prior_pmf), ZERO) == sum((w for _, w in dist), ZERO)
    return MpcResult(ok, profile)


# Validation and loading ---------------------------------------------------


def validate_mean(dataset: MeanDataset) -> list:
    world = dataset.world
    out = []
    Z = world.support
    if list(Z) != sorted(set(Z)):
        out.append("support must be strictly increasing")
    if not Z or Z[0] != 0 or Z[-1] != 1:
        out.append("support must include 0 and 1")
    if any(z < 0 or z > 1 for z in Z):
        out.append("support must lie in [0, 1]")
    for a in world.actions:
        if a not in world.receiver_utility:
            out.append(f"receiver utility missing for {a!r}")
    for i, obs in enumerate(dataset.observations):
        where = f"observation {obs.name(i)}"
        if not obs.menu or len(set(obs.menu)) != len(obs.menu):
            out.append(f"{where}: empty menu or duplicate actions")
        for a in obs.menu:
            if a not in world.receiver_utility:
                out.append(f"{where}: action {a!r} not in the grand action set")
        if len(obs.prior) != len(Z):
            out.append(f"{where}: prior has wrong length")
            continue
        if any(x < 0 for x in obs.prior) or sum(obs.prior) != 1:
            out.append(f"{where}: prior is not a distribution over the support")
        for a in obs.sigma:
            if a not in obs.menu:
                out.append(f"{where}: choice probabilities given for {a!r} outside the menu")
        rows = [obs.sigma.get(a, ()) for a in obs.menu]
        if any(len(r) != len(Z) for r in rows):
            out.append(f"{where}: choice rows must have one entry per support point")
            continue
        for k, z in enumerate(Z):
            col = [r[k] for r in rows]
            if any(x < 0 for x in col) or sum(col) != 1:
                out.append(f"{where}: choice probabilities at z={render(z)} are not a distribution")
    return out


def _rational_list(raw, what: str) -> tuple:
    if not isinstance(raw, list):
        raise DatasetFormatError(f"{what}: expected a list")
    try:
        return tuple(to_rational(x) for x in raw)
    except (TypeError, ValueError) as exc:
        raise DatasetFormatError(f"{what}: {exc}") from None


def _affine(raw, what: str) -> AffineFn1D:
    try:
        return AffineFn1D.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"{what}: expected intercept and slope ({exc})") from None


def mean_world_from_dict(data: Mapping) -> MeanWorld:
    try:
        support = _rational_list(data["support"], "support")
        actions = tuple(data["actions"])
        raw_v = data["receiver_utility"]
    except KeyError as exc:
        raise DatasetFormatError(f"missing key {exc}") from None
    missing = [a for a in actions if a not in raw_v]
    if missing:
        raise DatasetFormatError(f"receiver_utility missing actions {missing}")
    v = {a: _affine(raw_v[a], f"receiver_utility[{a}]") for a in actions}
    return MeanWorld(support, actions, v)


def mean_dataset_from_dict(data: Mapping) -> MeanDataset:
    world = mean_world_from_dict(data)
    observations = []
    for i, raw in enumerate(data.get("observations", [])):
        try:
            menu = tuple(raw["menu"])
            prior = _rational_list(raw["prior"], f"observations[{i}].prior")
            raw_sigma = raw["sigma"]
        except KeyError as exc:
            raise DatasetFormatError(f"observations[{i}]: missing key {exc}") from None
        sigma = {a: _rational_list(row, f"observations[{i}].sigma[{a}]") for a, row in raw_sigma.items()}
        for a in menu:
            sigma.setdefault(a, tuple(ZERO for _ in world.support))
        observations.append(MeanObservation(menu, prior, sigma, str(raw.get("label", ""))))
    if not observations:
        raise DatasetFormatError("dataset has no observations")
    dataset = MeanDataset(world, tuple(observations))
    problems = validate_mean(dataset)
    if problems:
        raise DatasetFormatError("; ".join(problems))
    return dataset


def _load_json(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}: invalid JSON ({exc})") from None


def load_mean_dataset(path) -> MeanDataset:
    return mean_dataset_from_dict(_load_json(path))


# Revealed means and candidates --------------------------------------------


def prior_atoms(world: MeanWorld, prior: Sequence[Fraction]) -> tuple:
    return tuple((z, w) for z, w in zip(world.support, prior) if w > 0)


def revealed_means(world: MeanWorld, obs: MeanObservation, menu_index: int = 0) -> MeanRevealedSignal:
    atoms = []
    for a in obs.menu:
        mass = sum((s * f for s, f in zip(obs.sigma[a], obs.prior)), ZERO)
        if mass == 0:
            continue
        moment = sum((s * f * z for s, f, z in zip(obs.sigma[a], obs.prior, world.support)), ZERO)
        atoms.append(MeanAtom(a, moment / mass, mass))
    return MeanRevealedSignal(menu_index, prior_atoms(world, obs.prior), tuple(atoms))


def zero_set(world: MeanWorld, sig: MeanRevealedSignal) -> tuple:
    """Support points where the revealed distribution's MPC constraint binds."""
    dist = sig.distribution()
    return tuple(z for z in world.support if integral(sig.prior_atoms, dist, z) == 0)


@dataclass(frozen=True)
class MeanCandidateSet:
    """Per action: the endpoints of its interval, the support points inside, and the prior mean if inside."""

    menu_index: int
    points: Mapping[str, tuple]
    prior_mean: Fraction
    prior_actions: tuple


def mean_candidate_set(world: MeanWorld, menu: Sequence[str], prior_mean: Fraction, menu_index: int = 0) -> MeanCandidateSet:
    points = {}
    prior_actions = []
    for a in menu:
        span = world.region(menu, a)
        if span is None:
            points[a] = ()
            continue
        lo, hi = span
        pts = {lo, hi} | {z for z in world.support if lo <= z <= hi}
        if lo <= prior_mean <= hi:
            pts.add(prior_mean)
            prior_actions.append(a)
        points[a] = tuple(sorted(pts))
    return MeanCandidateSet(menu_index, points, prior_mean, tuple(prior_actions))


# Obedience ----------------------------------------------------------------


def as_state_dataset(dataset: MeanDataset) -> SdscDataset:
    """The same data with each support point as a state, for the obedience test."""
    world = dataset.world
    states = tuple(f"z={render(z)}" for z in world.support)
    v = {a: tuple(world.v(a, z) for z in world.support) for a in world.actions}
    obs = tuple(MenuObservation(o.menu, o.prior, dict(o.sigma), o.label) for o in dataset.observations)
    return SdscDataset(World(states, world.actions, v), obs)


def check_nias_mean(dataset: MeanDataset) -> Verdict:
    inner = check_nias(as_state_dataset(dataset))
    return Verdict("NIAS_MEAN", inner.outcome, failures=inner.failures)


# Price functions ----------------------------------------------------------


@dataclass(frozen=True)
class PriceFunction:
    """``z -> base(z) + sum(rho * max(k - z, 0))`` over kinks ``(k, rho)``."""

    base: AffineFn1D
    kinks: tuple = ()

    def __call__(self, z: Fraction) -> Fraction:
        return self.base(z) + sum((rho * _plus(k - z) for k, rho in self.kinks), ZERO)

    def pieces(self) -> list:
        """``(lo, hi, affine)`` on consecutive intervals between kinks."""
        cuts = sorted({Fraction(0), Fraction(1)} | {k for k, rho in self.kinks if rho != 0 and 0 < k < 1})
        out = []
        for lo, hi in zip(cuts, cuts[1:]):
            active = [(k, rho) for k, rho in self.kinks if k >= hi]
            slope = self.base.slope - sum((rho for _, rho in active), ZERO)
            intercept = self.base.intercept + sum((rho * k for k, rho in active), ZERO)
            out.append((lo, hi, AffineFn1D(slope, intercept)))
        return out

    def convex(self) -> bool:
        slopes = [f.slope for _, _, f in self.pieces()]
        return all(s <= t for s, t in zip(slopes, slopes[1:]))

    def breakpoints(self) -> list:
        """Interior points where the slope actually changes."""
        ps = self.pieces()
        return [hi for (_, hi, f), (_, _, g) in zip(ps, ps[1:]) if f.slope != g.slope]

    def to_dict(self) -> dict:
        return {
            "pieces": [
                {"from": render(lo), "to": render(hi), **f.to_dict()} for lo, hi, f in self.pieces()
            ],
        }


@dataclass(frozen=True)
class MeanRationalization:
    u: Mapping[str, AffineFn1D]
    prices: tuple

    def to_dict(self, states=None) -> dict:
        return {
            "u": {a: f.to_dict() for a, f in self.u.items()},
            "price_functions": [p.to_dict() for p in self.prices],
        }


def phi_at(world: MeanWorld, u: Mapping[str, AffineFn1D], menu: Sequence[str], z: Fraction) -> Fraction:
    """Sender payoff at mean ``z`` with receiver ties broken in the sender's favour."""
    return max(u[a](z) for a in world.best_responses(menu, z))


# The reshuffling system ---------------------------------------------------


@dataclass(frozen=True)
class NbpsmLayout:
    signals: tuple
    zero_sets: tuple
    candidates: tuple
    system: FeasibilitySystem


def _require_common_prior(dataset: MeanDataset) -> None:
    if dataset.common_prior() is None:
        raise ValueError("posterior-mean observations must share one prior")


def nbpsm_layout(dataset: MeanDataset) -> NbpsmLayout:
    _require_common_prior(dataset)
    world = dataset.world
    builder = SystemBuilder()
    signals, zeros, cands = [], [], []
    for i, obs in enumerate(dataset.observations):
        sig = revealed_means(world, obs, i)
        zs = zero_set(world, sig)
        cand = mean_candidate_set(world, obs.menu, sig.prior_mean, i)
        signals.append(sig)
        zeros.append(zs)
        cands.append(cand)
        interior = [z for z in zs if 0 < z < 1]
        for z_star in interior:
            builder.add_row(("int", i, z_star), LE)
        if sig.informative:
            builder.add_row(("prior", i), LE)
        for atom in sig.atoms:
            col = ("rev", i, atom.action)
            builder.add_column(col)
            builder.set(("mass", i), col, Fraction(1))
            builder.set(("mean", i), col, atom.mean)
            builder.set(("act0", atom.action), col, Fraction(1))
            builder.set(("act1", atom.action), col, atom.mean)
            for z_star in interior:
                builder.set(("int", i, z_star), col, -_plus(z_star - atom.mean))
        for a in obs.menu:
            for z in cand.points[a]:
                col = ("cand", i, a, z)
                builder.add_column(col)
                builder.set(("mass", i), col, Fraction(-1))
                builder.set(("mean", i), col, -z)
                builder.set(("act0", a), col, Fraction(-1))
                builder.set(("act1", a), col, -z)
                for z_star in interior:
                    builder.set(("int", i, z_star), col, _plus(z_star - z))
                if sig.informative and z == sig.prior_mean:
                    builder.set(("prior", i), col, Fraction(-1))
        if sig.informative:
            col = ("y", i)
            builder.add_column(col, Fraction(-1))
            builder.set(("prior", i), col, Fraction(1))
            for z_star in interior:
                builder.set(("int", i, z_star), col, Fraction(1))
    return NbpsmLayout(tuple(signals), tuple(zeros), tuple(cands), builder.build())


def build_nbpsm_system(dataset: MeanDataset) -> FeasibilitySystem:
    return nbpsm_layout(dataset).system


def extract_mean_rationalizer(dataset: MeanDataset, layout: NbpsmLayout, y: Sequence[Fraction]) -> MeanRationalization:
    value = dict(zip(layout.system.row_labels, y))
    u = {
        a: AffineFn1D(-value.get(("act1", a), ZERO), -value.get(("act0", a), ZERO))
        for a in dataset.world.actions
    }
    prices = []
    for i in range(len(dataset.observations)):
        base = AffineFn1D(value.get(("mean", i), ZERO), value.get(("mass", i), ZERO))
        kinks = tuple(
            (z, -value.get(("int", i, z), ZERO)) for z in layout.zero_sets[i] if 0 < z < 1
        )
        prices.append(PriceFunction(base, tuple((z, r) for z, r in kinks if r != 0)))
    return MeanRationalization(u, tuple(prices))


def mean_rationalizer_failures(dataset: MeanDataset, r: MeanRationalization) -> list:
    world = dataset.world
    out = []
    if len(r.prices) != len(dataset.observations):
        return ["one price function per observation is required"]
    for i, obs in enumerate(dataset.observations):
        name = obs.name(i)
        lam = r.prices[i]
        sig = revealed_means(world, obs, i)
        if not lam.convex():
            out.append(f"{name}: price function is not convex")
        dist = sig.distribution()
        for k in lam.breakpoints():
            if integral(sig.prior_atoms, dist, k) != 0:
                out.append(f"{name}: price function bends at {render(k)} where the MPC constraint is slack")
        for atom in sig.atoms:
            if lam(atom.mean) != r.u[atom.action](atom.mean):
                out.append(f"{name}: price differs from u({atom.action}) at its revealed mean")
        cand = mean_candidate_set(world, obs.menu, sig.prior_mean, i)
        for a, pts in cand.points.items():
            for z in pts:
                if r.u[a](z) > lam(z):
                    out.append(f"{name}: u({a}) exceeds the price at {render(z)}")
        if sig.informative:
            bends = bool(lam.breakpoints())
            lifted = lam(sig.prior_mean) > phi_at(world, r.u, obs.menu, sig.prior_mean)
            if not (bends or lifted):
                out.append(f"{name}: informative menu but the price function shows no strict gain")
    return out


def validate_mean_rationalizer(dataset: MeanDataset, r: MeanRationalization) -> bool:
    return not mean_rationalizer_failures(dataset, r)


# Witnesses ----------------------------------------------------------------


@dataclass(frozen=True)
class MeanMenuWitness:
    """One menu's part of a violating reshuffle, each distribution normalized to one.

    ``revealed`` is the share of the observed means given up, ``alternative``
    the replacement, and ``prior`` a pseudo-prior on the binding support
    points of which both are contractions.
    """

    observation: int
    label: str
    weight: Fraction
    revealed: tuple
    alternative: tuple
    prior: tuple
    prior_mass: Fraction

    def to_dict(self) -> dict:
        def show(items):
            return [{"action": a, "mean": render(z), "mass": render(w)} for a, z, w in items]

        return {
            "observation": self.observation,
            "label": self.label,
            "weight": render(self.weight),
            "revealed": show(self.revealed),
            "alternative": show(self.alternative),
            "pseudo_prior": [{"point": render(z), "mass": render(w)} for z, w in self.prior],
            "prior_mass": render(self.prior_mass),
        }


@dataclass(frozen=True)
class MeanWitness:
    menus: tuple
    kind: str = "mean_reallocation"

    @property
    def prior_menus(self) -> list:
        return [m.observation for m in self.menus if m.prior_mass > 0]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "menus": [m.to_dict() for m in self.menus]}


def _split(system: FeasibilitySystem) -> tuple:
    A_eq = [list(r) for r, k in zip(system.matrix, system.row_kinds) if k != LE]
    A_le = [list(r) for r, k in zip(system.matrix, system.row_kinds) if k == LE]
    return A_eq, A_le


def refine_mean_witness(layout: NbpsmLayout) -> tuple:
    """Largest prior slack among perturbations of the data, then the least mass moved."""
    S = layout.system
    n = len(S.objective)
    A_eq, A_le = _split(S)
    caps, bounds = [], []
    for j, label in enumerate(S.column_labels):
        if label[0] == "rev":
            sig = layout.signals[label[1]]
            mass = next(atom.mass for atom in sig.atoms if atom.action == label[2])
            caps.append([Fraction(int(k == j)) for k in range(n)])
            bounds.append(mass)
    A_ub = A_le + caps
    b_ub = [ZERO] * len(A_le) + bounds
    gain = [-v for v in S.objective]
    first = solve_lp(gain, A_eq, [ZERO] * len(A_eq), A_ub, b_ub)
    if first.status != "optimal" or first.value <= 0:  # pragma: no cover - a witness is known to exist
        raise RuntimeError("witness refinement failed")
    moved = [Fraction(-1) if label[0] == "rev" else ZERO for label in S.column_labels]
    second = solve_lp(moved, A_eq + [gain], [ZERO] * len(A_eq) + [first.value], A_ub, b_ub)
    return second.x


def pseudo_prior(zeros: Sequence[Fraction], revealed: Sequence) -> tuple:
    """A prior on ``zeros`` whose integrated CDF matches ``revealed`` there.

    Between consecutive binding points the CDF is the slope of the integrated
    revealed CDF, so the result is a contraction source for ``revealed``.
    """
    pts = sorted(zeros)
    J = [sum((w * _plus(z - x) for _, x, w in revealed), ZERO) for z in pts]
    cdf = [(J[k + 1] - J[k]) / (pts[k + 1] - pts[k]) for k in range(len(pts) - 1)]
    masses = [cdf[0]] + [cdf[k] - cdf[k - 1] for k in range(1, len(cdf))] + [1 - cdf[-1]]
    return tuple((z, w) for z, w in zip(pts, masses) if w != 0)


def decode_mean_witness(dataset: MeanDataset, layout: NbpsmLayout, x: Sequence[Fraction]) -> MeanWitness:
    rev: dict = {}
    alt: dict = {}
    for label, val in zip(layout.system.column_labels, x):
        if val == 0:
            continue
        if label[0] == "rev":
            rev.setdefault(label[1], []).append((label[2], val))
        elif label[0] == "cand":
            alt.setdefault(label[1], []).append((label[2], label[3], val))
    menus = []
    for i in sorted(set(rev) | set(alt)):
        sig = layout.signals[i]
        beta = sum((w for _, w in rev.get(i, [])), ZERO)
        revealed = tuple((a, sig.mean_of(a), w / beta) for a, w in rev.get(i, []))
        alternative = tuple((a, z, w / beta) for a, z, w in alt.get(i, []))
        prior_mass = ZERO
        if sig.informative:
            prior_mass = sum((w for _, z, w in alternative if z == sig.prior_mean), ZERO)
        menus.append(
            MeanMenuWitness(
                i, dataset.observations[i].name(i), beta, revealed, alternative,
                pseudo_prior(layout.zero_sets[i], revealed), prior_mass,
            )
        )
    return MeanWitness(tuple(menus))


def mean_witness_failures(dataset: MeanDataset, witness: MeanWitness) -> list:
    """Recheck a reshuffle of means directly against the data."""
    world = dataset.world
    out = []
    balance: dict = {}
    strict = False
    if not witness.menus:
        return ["empty reshuffle"]
    for m in witness.menus:
        i = m.observation
        obs = dataset.observations[i]
        sig = revealed_means(world, obs, i)
        cand = mean_candidate_set(world, obs.menu, sig.prior_mean, i)
        F = [(z, w) for _, z, w in m.revealed]
        G = [(z, w) for _, z, w in m.alternative]
        if m.weight <= 0:
            out.append(f"{m.label}: nonpositive weight")
        if any(w < 0 for _, w in F + G + list(m.prior)):
            out.append(f"{m.label}: negative mass")
        for a, z, _ in m.revealed:
            if sig.mean_of(a) != z:
                out.append(f"{m.label}: ({a}, {render(z)}) is not a revealed mean")
        for a, z, _ in m.alternative:
            if z not in cand.points.get(a, ()):
                out.append(f"{m.label}: ({a}, {render(z)}) is not a candidate")
        if any(z not in world.support for z, _ in m.prior):
            out.append(f"{m.label}: pseudo-prior leaves the support")
        if not mpc_check(m.prior, F).feasible:
            out.append(f"{m.label}: revealed share is not a contraction of the pseudo-prior")
        if not mpc_check(m.prior, G).feasible:
            out.append(f"{m.label}: alternative is not a contraction of the pseudo-prior")
        data = sig.distribution()
        for z in world.support:
            if integral(sig.prior_atoms, data, z) == 0 and integral(m.prior, F, z) != 0:
                out.append(f"{m.label}: binding point {render(z)} is not binding for the revealed share")
        for a, z, w in m.revealed:
            b = balance.setdefault(a, [ZERO, ZERO])
            b[0] += m.weight * w
            b[1] += m.weight * w * z
        for a, z, w in m.alternative:
            b = balance.setdefault(a, [ZERO, ZERO])
            b[0] -= m.weight * w
            b[1] -= m.weight * w * z
        if sig.informative and m.prior_mass > 0:
            inner = [v for z, v in integral_profile(m.prior, G) if 0 < z < 1]
            if inner and all(v > 0 for v in inner):
                strict = True
    for a, (mass, moment) in balance.items():
        if mass != 0 or moment != 0:
            out.append(f"action {a} changes its choice mass or mean")
    if not strict:
        out.append("no informative menu gets prior-mean mass with a strictly positive integral gap")
    return out


# Top-level checks ---------------------------------------------------------


def check_nbpsm(dataset: MeanDataset) -> Verdict:
    layout = nbpsm_layout(dataset)
    cert = decide(layout.system)
    if not replay(layout.system, cert):  # pragma: no cover - guards the engine
        raise RuntimeError("certificate failed exact replay")
    if cert.kind == PRIMAL:
        x = refine_mean_witness(layout)
        cert = Certificate(PRIMAL, primal=x, optimum=cert.optimum, pivots=cert.pivots)
        if not replay(layout.system, cert):  # pragma: no cover
            raise RuntimeError("refined witness failed exact replay")
        witness = decode_mean_witness(dataset, layout, x)
        return Verdict("NBPS_M", VIOLATED, witness=witness, certificate=cert, system=layout.system)
    r = extract_mean_rationalizer(dataset, layout, cert.dual)
    return Verdict("NBPS_M", CONSISTENT, rationalizer=r, certificate=cert, system=layout.system)


def check_mean(dataset: MeanDataset) -> list:
    nias = check_nias_mean(dataset)
    if not nias.consistent:
        return [nias]
    return [nias, check_nbpsm(dataset)]


# Forward problem ----------------------------------------------------------


@dataclass(frozen=True)
class MeanProblem:
    world: MeanWorld
    u: Mapping[str, AffineFn1D]
    menu: tuple
    prior: tuple
    label: str = ""

    @property
    def prior_mean(self) -> Fraction:
        return sum((z * w for z, w in zip(self.world.support, self.prior)), ZERO)

    def phi_at_prior(self) -> Fraction:
        return phi_at(self.world, self.u, self.menu, self.prior_mean)

    def sender_best_at_prior(self) -> str:
        best = self.world.best_responses(self.menu, self.prior_mean)
        z0 = self.prior_mean
        return max(best, key=lambda a: (self.u[a](z0), -self.menu.index(a)))


@dataclass(frozen=True)
class MeanSolution:
    """Optimal recommendation-form distribution of means and its price function.

    ``support`` holds the LP's raw atoms before atoms sharing an action are
    merged.
    """

    atoms: tuple
    value: Fraction
    price: PriceFunction
    support: tuple = ()
    benefit: bool = False

    def distribution(self) -> tuple:
        return tuple((atom.mean, atom.mass) for atom in self.atoms)

    def to_dict(self) -> dict:
        return {
            "value": render(self.value),
            "benefit": self.benefit,
            "atoms": [{"action": a.action, "mean": render(a.mean), "mass": render(a.mass)} for a in self.atoms],
            "price_function": self.price.to_dict(),
        }


def _merge(atoms: Sequence[MeanAtom]) -> tuple:
    grouped: dict = {}
    for atom in atoms:
        m, s = grouped.get(atom.action, (ZERO, ZERO))
        grouped[atom.action] = (m + atom.mass, s + atom.mass * atom.mean)
    return tuple(MeanAtom(a, s / m, m) for a, (m, s) in grouped.items())


def _bends_inside(price: PriceFunction, atoms: Sequence[MeanAtom]) -> bool:
    lo = min(a.mean for a in atoms)
    hi = max(a.mean for a in atoms)
    return any(lo < k < hi for k in price.breakpoints())


def mean_solve(problem: MeanProblem, *, nontrivial: bool = True) -> MeanSolution:
    """Maximize expected sender utility over contractions of the prior.

    Masses live on the candidate means of every action; the contraction
    constraint is imposed at each interior support point, which suffices
    because the integral gap is concave between support points.
    """
    world = problem.world
    z0 = problem.prior_mean
    cand = mean_candidate_set(world, problem.menu, z0)
    columns = [(a, z) for a in problem.menu for z in cand.points[a]]
    c = [problem.u[a](z) for a, z in columns]
    A_eq = [[Fraction(1)] * len(columns), [z for _, z in columns]]
    b_eq = [Fraction(1), z0]
    pa = prior_atoms(world, problem.prior)
    inner = [zp for zp in world.support if 0 < zp < 1]
    A_ub = [[_plus(zp - z) for _, z in columns] for zp in inner]
    b_ub = [sum((w * _plus(zp - x) for x, w in pa), ZERO) for zp in inner]
    res = solve_lp(c, A_eq, b_eq, A_ub, b_ub)
    if res.status != "optimal":  # pragma: no cover - pooling at the prior mean is always feasible
        raise RuntimeError(f"mean persuasion LP ended with status {res.status}")
    price = PriceFunction(
        AffineFn1D(res.y_eq[1], res.y_eq[0]),
        tuple((zp, rho) for zp, rho in zip(inner, res.y_ub) if rho != 0),
    )
    raw = tuple(MeanAtom(a, z, m) for (a, z), m in zip(columns, res.x) if m > 0)
    benefit = _bends_inside(price, raw) or price(z0) > problem.phi_at_prior()
    if nontrivial and not benefit:
        atoms = (MeanAtom(problem.sender_best_at_prior(), z0, Fraction(1)),)
    else:
        atoms = _merge(raw)
    return MeanSolution(atoms, res.value, price, raw, benefit)


def mean_benefit(problem: MeanProblem) -> bool:
    """Strict gain from persuasion: the price bends under the optimum, or sits above the no-information payoff."""
    return mean_solve(problem).benefit


def _coupling(world: MeanWorld, prior: Sequence[Fraction], atoms: Sequence[MeanAtom]) -> dict:
    """Joint law of support point and action with the given prior and conditional means."""
    ks = [k for k, w in enumerate(prior) if w > 0]
    cols = [(k, j) for k in ks for j in range(len(atoms))]
    A_eq, b_eq = [], []
    for k in ks:
        A_eq.append([Fraction(int(kk == k)) for kk, _ in cols])
        b_eq.append(prior[k])
    for j, atom in enumerate(atoms):
        A_eq.append([Fraction(int(jj == j)) for _, jj in cols])
        b_eq.append(atom.mass)
        A_eq.append([world.support[k] if jj == j else ZERO for k, jj in cols])
        b_eq.append(atom.mass * atom.mean)
    res = solve_lp([ZERO] * len(cols), A_eq, b_eq)
    if res.status != "optimal":
        raise ValueError("the distribution of means is not a contraction of the prior")
    return {col: x for col, x in zip(cols, res.x)}


def mean_dataset_from_solutions(world: MeanWorld, problems: Sequence[MeanProblem], solutions: Sequence[MeanSolution]) -> MeanDataset:
    observations = []
    for prob, sol in zip(problems, solutions):
        joint = _coupling(world, prob.prior, sol.atoms)
        sigma = {a: [ZERO] * len(world.support) for a in prob.menu}
        for k, w in enumerate(prob.prior):
            if w == 0:
                sigma[sol.atoms[0].action][k] = Fraction(1)
                continue
            for j, atom in enumerate(sol.atoms):
                sigma[atom.action][k] += joint[(k, j)] / w
        observations.append(
            MeanObservation(tuple(prob.menu), tuple(prob.prior), {a: tuple(r) for a, r in sigma.items()}, prob.label)
        )
    return MeanDataset(world, tuple(observations))


def generate_mean_dataset(problems: Sequence[MeanProblem]) -> MeanDataset:
    if not problems:
        raise ValueError("at least one problem is required")
    world = problems[0].world
    if any(p.world != world for p in problems):
        raise ValueError("all problems must share one world")
    return mean_dataset_from_solutions(world, problems, [mean_solve(p) for p in problems])


def mean_problems_from_dict(data: Mapping) -> list:
    world = mean_world_from_dict(data)
    raw_u = data.get("sender_utility")
    if not isinstance(raw_u, Mapping) or any(a not in raw_u for a in world.actions):
        raise DatasetFormatError("sender_utility must list every action")
    u = {a: _affine(raw_u[a], f"sender_utility[{a}]") for a in world.actions}
    problems = []
    for k, raw in enumerate(data.get("problems", [])):
        try:
            menu = tuple(raw["menu"])
            prior = _rational_list(raw["prior"], f"problems[{k}].prior")
        except KeyError as exc:
            raise DatasetFormatError(f"problems[{k}]: missing key {exc}") from None
        if len(prior) != len(world.support) or any(w < 0 for w in prior) or sum(prior) != 1:
            raise DatasetFormatError(f"problems[{k}]: prior must be a distribution over the support")
        if not menu or any(a not in world.receiver_utility for a in menu):
            raise DatasetFormatError(f"problems[{k}]: bad menu {list(menu)}")
        problems.append(MeanProblem(world, u, menu, prior, str(raw.get("label", f"M{k + 1}"))))
    if not problems:
        raise DatasetFormatError("no problems listed")
    return problems


def load_mean_problems(path) -> list:
    return mean_problems_from_dict(_load_json(path))


def random_mean_problems(
    rng: random.Random, *, n_support: int | None = None, n_actions: int | None = None, n_menus: int | None = None
) -> list:
    """A shared world, sender utility and prior on at most five support points."""
    n_support = n_support or rng.randint(2, 5)
    inner = sorted(rng.sample(range(1, 10), n_support - 2))
    support = (Fraction(0),) + tuple(Fraction(k, 10) for k in inner) + (Fraction(1),)
    n_actions = n_actions or rng.randint(2, 4)
    n_menus = n_menus or rng.randint(1, 3)
    actions = tuple(f"x{k + 1}" for k in range(n_actions))

    def affine():
        return AffineFn1D(Fraction(rng.randint(-9, 9), 10), Fraction(rng.randint(-9, 9), 10))

    v = {a: affine() for a in actions}
    u = {a: affine() for a in actions}
    world = MeanWorld(support, actions, v)
    weights = [rng.randint(0, 9) for _ in support]
    if sum(weights) == 0:
        weights[0] = weights[-1] = 1
    total = sum(weights)
    prior = tuple(Fraction(w, total) for w in weights)
    menus: list = []
    for _ in range(n_menus * 4):
        if len(menus) == n_menus:
            break
        menu = tuple(sorted(rng.sample(actions, rng.randint(min(2, n_actions), n_actions))))
        if menu not in menus:
            menus.append(menu)
    return [MeanProblem(world, u, m, prior, f"M{k + 1}") for k, m in enumerate(menus)]
