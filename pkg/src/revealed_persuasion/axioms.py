"""Consistency tests for stochastic choice generated by a persuading sender.

The main entry points are ``check_nias`` (every recommendation is obeyed) and
``check_nbps`` (no Bayes-plausible reshuffling of the revealed signals onto
prior/outer-point candidates keeps every action's state-dependent choice
frequency while adding mass at the prior). A consistent verdict carries a
sender utility and per-menu supporting hyperplanes; a violated one carries the
reshuffling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .dataset import (
    Atom,
    RevealedSignal,
    SdscDataset,
    is_informative,
    mixes_prior_with_information,
    revealed_signal,
)
from .farkas import PRIMAL, Certificate, FeasibilitySystem, SystemBuilder, decide, replay, solve_lp
from .geometry import CandidateSet, PosteriorCover, candidate_set, posterior_cover
from .rational import Vec, dot, render, sub

CONSISTENT = "Consistent"
VIOLATED = "Violated"

STATE_DEP = "state_dep"
TRANSPARENT = "transparent"
VARYING_PRIORS = "varying_priors"
EXTENDED = "extended"
MODES = (STATE_DEP, TRANSPARENT, VARYING_PRIORS, EXTENDED)

AXIOM_FOR_MODE = {STATE_DEP: "NBPS", TRANSPARENT: "SINBPS", VARYING_PRIORS: "UNBPS", EXTENDED: "NBPS_EXT"}

CHARACTERIZATION = {
    "NIAS": "obedience of recommendations (necessary for any persuasion model)",
    "UNIAS": "obedience of recommendations, observation by observation",
    "NBPS": "NIAS + NBPS characterize nontrivial Bayesian persuasion",
    "SINBPS": "NIAS + SI-NBPS characterize persuasion by a sender with state-independent utility",
    "UNBPS": "UNIAS + UNBPS characterize nontrivial persuasion across varying priors",
    "NBPS_EXT": "NIAS + NBPS with user-declared suboptimal posteriors",
    "NIAS_MEAN": "obedience of recommendations at revealed posterior means",
    "NBPS_M": "NIAS + NBPS-M characterize nontrivial posterior-mean persuasion",
}


def _show(p: Sequence[Fraction]) -> list:
    return [render(x) for x in p]


@dataclass(frozen=True)
class SenderRationalization:
    """Sender utility ``u[action][state]`` and one hyperplane per observation."""

    u: Mapping[str, Vec]
    lambdas: tuple

    def to_dict(self, states: Sequence[str]) -> dict:
        return {
            "u": {a: {s: render(x) for s, x in zip(states, row)} for a, row in self.u.items()},
            "lambdas": [{s: render(x) for s, x in zip(states, lam)} for lam in self.lambdas],
        }


@dataclass(frozen=True)
class MenuReallocation:
    """One observation's share of a violating reshuffle.

    ``decreased`` and ``increased`` are normalized to probability one and
    ``weight`` is the common scale; ``perturbed`` is the revealed signal
    after moving ``weight / delta`` of mass.
    """

    observation: int
    label: str
    weight: Fraction
    decreased: tuple
    increased: tuple
    prior_mass: Fraction
    perturbed: tuple = ()

    def to_dict(self) -> dict:
        def atoms(items):
            return [{"action": a, "posterior": _show(p), "mass": render(m)} for a, p, m in items]

        return {
            "observation": self.observation,
            "label": self.label,
            "weight": render(self.weight),
            "decreased": atoms(self.decreased),
            "increased": atoms(self.increased),
            "prior_mass": render(self.prior_mass),
            "perturbed_signal": atoms(self.perturbed),
        }


@dataclass(frozen=True)
class Witness:
    kind: str  # "reallocation" or "prior_mixing"
    menus: tuple = ()
    delta: Fraction = Fraction(1)
    mixing_observations: tuple = ()

    @property
    def prior_menus(self) -> list:
        return [m.observation for m in self.menus if m.prior_mass > 0]

    def to_dict(self) -> dict:
        if self.kind == "prior_mixing":
            return {"kind": self.kind, "observations": list(self.mixing_observations)}
        return {"kind": self.kind, "delta": render(self.delta), "menus": [m.to_dict() for m in self.menus]}


@dataclass(frozen=True)
class Verdict:
    axiom: str
    outcome: str
    witness: Witness | None = None
    rationalizer: SenderRationalization | None = None
    failures: tuple = ()
    certificate: Certificate | None = None
    system: FeasibilitySystem | None = field(default=None, compare=False, repr=False)

    @property
    def consistent(self) -> bool:
        return self.outcome == CONSISTENT

    def to_dict(self, states: Sequence[str] | None = None) -> dict:
        out = {"axiom": self.axiom, "outcome": self.outcome, "characterization": CHARACTERIZATION.get(self.axiom, "")}
        if self.failures:
            out["failures"] = list(self.failures)
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        if self.rationalizer is not None and states is not None:
            out["rationalizer"] = self.rationalizer.to_dict(states)
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


# NIAS ---------------------------------------------------------------------


def nias_failures(dataset: SdscDataset) -> list:
    world = dataset.world
    out = []
    for i, obs in enumerate(dataset.observations):
        sig = revealed_signal(obs, i)
        for atom in sig.atoms:
            va = world.receiver_value(atom.action, atom.posterior)
            for b in obs.menu:
                vb = world.receiver_value(b, atom.posterior)
                if vb > va:
                    out.append(
                        f"{obs.name(i)}: recommended {atom.action!r} but {b!r} is better "
                        f"({render(vb)} > {render(va)}) at posterior {_show(atom.posterior)}"
                    )
    return out


def check_nias(dataset: SdscDataset, *, varying_priors: bool = False) -> Verdict:
    axiom = "UNIAS" if varying_priors else "NIAS"
    fails = nias_failures(dataset)
    return Verdict(axiom, VIOLATED if fails else CONSISTENT, failures=tuple(fails))


# NBPS system --------------------------------------------------------------


class PriorMixingError(ValueError):
    """A menu reveals both the prior and some other posterior."""

    def __init__(self, observations):
        super().__init__(f"observations {list(observations)} reveal the prior alongside other posteriors")
        self.observations = tuple(observations)


@dataclass(frozen=True)
class NbpsLayout:
    """Everything needed to interpret the columns and rows of an NBPS system."""

    mode: str
    signals: tuple
    covers: tuple
    candidates: tuple
    system: FeasibilitySystem


def _check_mode(dataset: SdscDataset, mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode != VARYING_PRIORS and dataset.common_prior() is None:
        raise ValueError("observations use different priors; use the varying-priors mode")


def nbps_layout(
    dataset: SdscDataset, mode: str = STATE_DEP, exclude: Mapping | None = None
) -> NbpsLayout:
    """Build the reshuffling system together with its covers and candidate sets.

    ``exclude`` maps ``(observation index, action)`` to posteriors that the
    sender would never induce unless they are chosen (extended mode).
    """
    _check_mode(dataset, mode)
    world = dataset.world
    signals = tuple(revealed_signal(obs, i) for i, obs in enumerate(dataset.observations))
    mixing = [i for i, sig in enumerate(signals) if mixes_prior_with_information(sig)]
    if mixing:
        raise PriorMixingError(mixing)
    exclude = exclude or {}
    if exclude and mode != EXTENDED:
        raise ValueError("excluded posteriors are only meaningful in extended mode")
    covers, cands = [], []
    builder = SystemBuilder()
    N = world.dim
    transparent = mode == TRANSPARENT

    def action_rows(a, p, sign):
        if transparent:
            builder.set(("act", a), col, Fraction(sign))
        else:
            for k in range(N):
                builder.set(("act", a, k), col, sign * p[k])

    for i, (obs, sig) in enumerate(zip(dataset.observations, signals)):
        cover = posterior_cover(world, obs.menu, i)
        extra = {a: pts for (j, a), pts in exclude.items() if j == i}
        cand = candidate_set(world, cover, sig, extra)
        covers.append(cover)
        cands.append(cand)
        revealed_posts = {atom.posterior for atom in sig.atoms}
        informative = is_informative(sig)
        for atom in sig.atoms:
            col = ("rev", i, atom.action)
            builder.add_column(col)
            for k in range(N):
                builder.set(("menu", i, k), col, atom.posterior[k])
            action_rows(atom.action, atom.posterior, -1)
        for a in obs.menu:
            points = list(cand.points[a]) + [p for p in cand.extra.get(a, ()) if p not in cand.points[a]]
            for p in points:
                col = ("cand", i, a, p)
                cost = Fraction(0)
                if p == sig.prior and informative and a in cand.prior_actions:
                    cost = Fraction(-1)
                if p in cand.extra.get(a, ()) and p not in revealed_posts:
                    cost = Fraction(-1)
                builder.add_column(col, cost)
                for k in range(N):
                    builder.set(("menu", i, k), col, -p[k])
                action_rows(a, p, 1)
    system = builder.build()
    return NbpsLayout(mode, signals, tuple(covers), tuple(cands), system)


def build_nbps_system(dataset: SdscDataset, mode: str = STATE_DEP, exclude: Mapping | None = None) -> FeasibilitySystem:
    return nbps_layout(dataset, mode, exclude).system


# Decoding -----------------------------------------------------------------


def _perturbed(sig: RevealedSignal, dec: dict, inc: dict, delta: Fraction) -> tuple:
    masses: dict = {}
    for atom in sig.atoms:
        masses[(atom.action, atom.posterior)] = atom.mass - dec.get(atom.action, Fraction(0)) / delta
    for (a, p), w in inc.items():
        masses[(a, p)] = masses.get((a, p), Fraction(0)) + w / delta
    return tuple((a, p, m) for (a, p), m in masses.items() if m != 0)


def refine_witness(layout: NbpsLayout) -> tuple:
    """Pick a canonical reshuffle once one is known to exist.

    Among reshuffles that are genuine perturbations of the observed signals
    (no revealed atom loses more than its own mass), first maximize the fresh
    mass placed on objective columns, then move as little mass as possible.
    """
    S = layout.system
    n = len(S.objective)
    A_eq = [list(row) for row, k in zip(S.matrix, S.row_kinds) if k == "eq"]
    A_le = [list(row) for row, k in zip(S.matrix, S.row_kinds) if k == "le"]
    caps, bounds = [], []
    for j, label in enumerate(S.column_labels):
        if label[0] == "rev":
            sig = layout.signals[label[1]]
            mass = next(atom.mass for atom in sig.atoms if atom.action == label[2])
            caps.append([Fraction(int(k == j)) for k in range(n)])
            bounds.append(mass)
    A_ub = A_le + caps
    b_ub = [Fraction(0)] * len(A_le) + bounds
    gain = [-v for v in S.objective]
    first = solve_lp(gain, A_eq, [Fraction(0)] * len(A_eq), A_ub, b_ub)
    if first.status != "optimal" or first.value <= 0:  # pragma: no cover - decide already found a witness
        raise RuntimeError("witness refinement failed")
    moved = [Fraction(-1) if label[0] == "rev" else Fraction(0) for label in S.column_labels]
    second = solve_lp(moved, A_eq + [gain], [Fraction(0)] * len(A_eq) + [first.value], A_ub, b_ub)
    return second.x


def decode_witness(dataset: SdscDataset, layout: NbpsLayout, x: Sequence[Fraction]) -> Witness:
    labels = layout.system.column_labels
    dec: dict = {}
    inc: dict = {}
    for label, val in zip(labels, x):
        if val == 0:
            continue
        if label[0] == "rev":
            dec.setdefault(label[1], {})[label[2]] = val
        else:
            _, i, a, p = label
            inc.setdefault(i, {})[(a, p)] = val
    touched = sorted(set(dec) | set(inc))
    weights = {i: sum(dec.get(i, {}).values(), Fraction(0)) for i in touched}
    delta = max(weights.values())
    for i in touched:
        sig = layout.signals[i]
        for atom in sig.atoms:
            b = dec.get(i, {}).get(atom.action, Fraction(0))
            if b:
                delta = max(delta, b / atom.mass)
    menus = []
    for i in touched:
        sig = layout.signals[i]
        beta = weights[i]
        d, n = dec.get(i, {}), inc.get(i, {})
        decreased = tuple((a, sig.posterior_of(a), w / beta) for a, w in d.items())
        increased = tuple((a, p, w / beta) for (a, p), w in n.items())
        prior_mass = sum((w / beta for (a, p), w in n.items() if p == sig.prior), Fraction(0))
        if not is_informative(sig):
            prior_mass = Fraction(0)
        menus.append(
            MenuReallocation(
                i, dataset.observations[i].name(i), beta, decreased, increased, prior_mass,
                _perturbed(sig, d, n, delta),
            )
        )
    return Witness("reallocation", tuple(menus), delta)


def extract_rationalizer(dataset: SdscDataset, layout: NbpsLayout, y: Sequence[Fraction]) -> SenderRationalization:
    world = dataset.world
    N = world.dim
    value = dict(zip(layout.system.row_labels, y))
    u = {}
    for a in world.actions:
        if layout.mode == TRANSPARENT:
            c = value.get(("act", a), Fraction(0))
            u[a] = tuple(c for _ in range(N))
        else:
            u[a] = tuple(value.get(("act", a, k), Fraction(0)) for k in range(N))
    lambdas = tuple(
        tuple(value.get(("menu", i, k), Fraction(0)) for k in range(N)) for i in range(len(dataset.observations))
    )
    return SenderRationalization(u, lambdas)


# Validation ---------------------------------------------------------------


def sender_value_at_prior(dataset: SdscDataset, i: int, u: Mapping[str, Vec]) -> Fraction:
    """Sender payoff from no information, ties broken in the sender's favour."""
    obs = dataset.observations[i]
    best = dataset.world.best_responses(obs.menu, obs.prior)
    return max(dot(u[a], obs.prior) for a in best)


def rationalizer_failures(
    dataset: SdscDataset,
    r: SenderRationalization,
    *,
    transparent: bool = False,
    exclude: Mapping | None = None,
) -> list:
    world = dataset.world
    out = []
    if len(r.lambdas) != len(dataset.observations):
        return ["one hyperplane per observation is required"]
    if transparent:
        for a, row in r.u.items():
            if len(set(row)) > 1:
                out.append(f"u({a}) depends on the state")
    for i, obs in enumerate(dataset.observations):
        lam = r.lambdas[i]
        sig = revealed_signal(obs, i)
        name = obs.name(i)
        for atom in sig.atoms:
            lhs, rhs = dot(r.u[atom.action], atom.posterior), dot(lam, atom.posterior)
            if lhs != rhs:
                out.append(f"{name}: u({atom.action}) is off the hyperplane at its revealed posterior")
        cover = posterior_cover(world, obs.menu, i)
        for a, reg in cover.regions.items():
            for p in reg.vertices:
                if dot(r.u[a], p) > dot(lam, p):
                    out.append(f"{name}: u({a}) exceeds the hyperplane at vertex {_show(p)}")
        if is_informative(sig):
            phi = sender_value_at_prior(dataset, i, r.u)
            if not dot(lam, obs.prior) > phi:
                out.append(f"{name}: informative menu but no strict gain over revealing nothing")
        revealed_posts = {atom.posterior for atom in sig.atoms}
        for (j, a), pts in (exclude or {}).items():
            if j != i:
                continue
            for p in pts:
                p = tuple(p)
                if cover.regions[a].contains(p) and p not in revealed_posts:
                    if not dot(r.u[a], p) < dot(lam, p):
                        out.append(f"{name}: excluded posterior {_show(p)} for {a} is not strictly suboptimal")
    return out


def validate_rationalizer(
    dataset: SdscDataset,
    r: SenderRationalization,
    *,
    transparent: bool = False,
    exclude: Mapping | None = None,
) -> bool:
    return not rationalizer_failures(dataset, r, transparent=transparent, exclude=exclude)


# Witness replay -----------------------------------------------------------


def witness_failures(
    dataset: SdscDataset, witness: Witness, mode: str = STATE_DEP, exclude: Mapping | None = None
) -> list:
    """Recheck a reshuffle directly against the data, without the LP."""
    world = dataset.world
    signals = [revealed_signal(obs, i) for i, obs in enumerate(dataset.observations)]
    if witness.kind == "prior_mixing":
        bad = [i for i in witness.mixing_observations if not mixes_prior_with_information(signals[i])]
        if bad or not witness.mixing_observations:
            return [f"observations {bad} do not mix the prior with other posteriors"]
        return []
    out = []
    N = world.dim
    balance: dict = {}
    prior_total = Fraction(0)
    if not witness.menus:
        return ["empty reshuffle"]
    for m in witness.menus:
        i = m.observation
        obs, sig = dataset.observations[i], signals[i]
        if m.weight <= 0:
            out.append(f"{m.label}: nonpositive weight")
        cover = posterior_cover(world, obs.menu, i)
        extra = {a: pts for (j, a), pts in (exclude or {}).items() if j == i}
        cand = candidate_set(world, cover, sig, extra)
        if sum((w for _, _, w in m.decreased), Fraction(0)) != 1:
            out.append(f"{m.label}: decreased atoms do not sum to one")
        if sum((w for _, _, w in m.increased), Fraction(0)) != 1:
            out.append(f"{m.label}: increased atoms do not sum to one")
        mean_dec = [Fraction(0)] * N
        mean_inc = [Fraction(0)] * N
        for a, p, w in m.decreased:
            if w < 0 or sig.posterior_of(a) != p:
                out.append(f"{m.label}: decreased atom ({a}, {_show(p)}) is not a revealed atom")
            for k in range(N):
                mean_dec[k] += w * p[k]
            key = a if mode == TRANSPARENT else (a,)
            bal = balance.setdefault(key, [Fraction(0)] * (1 if mode == TRANSPARENT else N))
            for k in range(len(bal)):
                bal[k] += m.weight * w * (1 if mode == TRANSPARENT else p[k])
        revealed_posts = {atom.posterior for atom in sig.atoms}
        informative = is_informative(sig)
        for a, p, w in m.increased:
            allowed = p in cand.points.get(a, ()) or p in cand.extra.get(a, ())
            if w < 0 or not allowed:
                out.append(f"{m.label}: increased atom ({a}, {_show(p)}) is not a candidate")
            for k in range(N):
                mean_inc[k] += w * p[k]
            key = a if mode == TRANSPARENT else (a,)
            bal = balance.setdefault(key, [Fraction(0)] * (1 if mode == TRANSPARENT else N))
            for k in range(len(bal)):
                bal[k] -= m.weight * w * (1 if mode == TRANSPARENT else p[k])
            if informative and p == sig.prior and a in cand.prior_actions:
                prior_total += m.weight * w
            if p in cand.extra.get(a, ()) and p not in revealed_posts:
                prior_total += m.weight * w
        if mean_dec != mean_inc:
            out.append(f"{m.label}: reshuffle is not Bayes plausible")
        pert = m.perturbed
        if any(w < 0 for _, _, w in pert):
            out.append(f"{m.label}: perturbed signal has negative mass")
        if sum((w for _, _, w in pert), Fraction(0)) != 1:
            out.append(f"{m.label}: perturbed signal does not sum to one")
        mean = [sum((w * p[k] for _, p, w in pert), Fraction(0)) for k in range(N)]
        if tuple(mean) != obs.prior:
            out.append(f"{m.label}: perturbed signal does not average to the prior")
    for key, bal in balance.items():
        if any(v != 0 for v in bal):
            out.append(f"action {key} changes its state-dependent choice frequencies")
    if prior_total <= 0:
        out.append("no fresh mass is placed at the prior")
    return out


# Top-level checks ---------------------------------------------------------


def check_nbps(dataset: SdscDataset, mode: str = STATE_DEP, exclude: Mapping | None = None) -> Verdict:
    axiom = AXIOM_FOR_MODE[mode] if mode in AXIOM_FOR_MODE else mode
    try:
        layout = nbps_layout(dataset, mode, exclude)
    except PriorMixingError as exc:
        return Verdict(axiom, VIOLATED, witness=Witness("prior_mixing", mixing_observations=exc.observations),
                       failures=(str(exc),))
    cert = decide(layout.system)
    if not replay(layout.system, cert):  # pragma: no cover - guards the engine
        raise RuntimeError("certificate failed exact replay")
    if cert.kind == PRIMAL:
        x = refine_witness(layout)
        cert = Certificate(PRIMAL, primal=x, optimum=cert.optimum, pivots=cert.pivots)
        if not replay(layout.system, cert):  # pragma: no cover
            raise RuntimeError("refined witness failed exact replay")
        witness = decode_witness(dataset, layout, x)
        return Verdict(axiom, VIOLATED, witness=witness, certificate=cert, system=layout.system)
    r = extract_rationalizer(dataset, layout, cert.dual)
    return Verdict(axiom, CONSISTENT, rationalizer=r, certificate=cert, system=layout.system)


def check(dataset: SdscDataset, mode: str = STATE_DEP, exclude: Mapping | None = None) -> list:
    """NIAS first, then the requested NBPS variant; returns the verdicts run."""
    nias = check_nias(dataset, varying_priors=(mode == VARYING_PRIORS))
    if not nias.consistent:
        return [nias]
    return [nias, check_nbps(dataset, mode, exclude)]


def check_single_menu(dataset: SdscDataset) -> Verdict:
    """Geometric test for one observation.

    Violated iff the signal is informative and some action that is optimal at
    the prior is recommended at a posterior from which the ray away from the
    prior stays inside that action's region a little longer.
    """
    if len(dataset.observations) != 1:
        raise ValueError("exactly one observation is required")
    world = dataset.world
    obs = dataset.observations[0]
    sig = revealed_signal(obs, 0)
    if not is_informative(sig):
        return Verdict("NBPS", CONSISTENT)
    if mixes_prior_with_information(sig):
        return Verdict("NBPS", VIOLATED, witness=Witness("prior_mixing", mixing_observations=(0,)))
    cover = posterior_cover(world, obs.menu, 0)
    for a in world.best_responses(obs.menu, obs.prior):
        p = sig.posterior_of(a)
        if p is None:
            continue
        direction = sub(p, obs.prior)
        reg = cover.regions[a]
        if all(dot(n, direction) >= 0 for n, _ in reg.tight(p)) and all(
            p[k] > 0 or direction[k] >= 0 for k in range(world.dim)
        ):
            return Verdict("NBPS", VIOLATED, failures=(f"ray from the prior through {a}'s posterior extends",))
    return Verdict("NBPS", CONSISTENT)
