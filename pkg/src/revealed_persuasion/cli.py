"""Command-line front end.

Exit codes: 0 consistent (or a certificate that replays), 3 violated, 2 bad
input, 1 a certificate that fails to replay.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import axioms, forward, means
from .axioms import CONSISTENT, EXTENDED, STATE_DEP, TRANSPARENT, VARYING_PRIORS
from .dataset import DatasetFormatError, dataset_from_dict, revealed_signal
from .farkas import DUAL, PRIMAL, Certificate, replay
from .geometry import posterior_cover
from .rational import render, to_rational

EXIT_OK = 0
EXIT_REPLAY_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_VIOLATED = 3

CERT_FORMAT = "revealed-persuasion-certificate/1"


def _resolve(path: str) -> Path:
    """A path on disk, or the name of a bundled example."""
    p = Path(path)
    if p.exists():
        return p
    data = resources.files("revealed_persuasion") / "data"
    for name in (path, f"{path}.json"):
        candidate = data / name
        if candidate.is_file():
            return Path(str(candidate))
    raise DatasetFormatError(f"no such file or bundled example: {path}")


def _read_json(path: str) -> dict:
    with open(_resolve(path)) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}: invalid JSON ({exc})") from None


def _approx(x) -> str:
    return f"{render(x)} (~{float(x):.4g})"


# Exclusions ---------------------------------------------------------------


def parse_exclusions(data: dict, dataset) -> dict:
    """``{"exclude": [{"observation": 0 | label, "action": a, "posteriors": [...]}]}``."""
    states = dataset.world.states
    labels = {obs.label: i for i, obs in enumerate(dataset.observations) if obs.label}
    out: dict = {}
    entries = data.get("exclude") if isinstance(data, dict) else None
    if not isinstance(entries, list):
        raise DatasetFormatError("exclusion file needs an 'exclude' list")
    for k, entry in enumerate(entries):
        try:
            ref, action, posts = entry["observation"], entry["action"], entry["posteriors"]
        except (KeyError, TypeError) as exc:
            raise DatasetFormatError(f"exclude[{k}]: missing key {exc}") from None
        i = labels.get(ref, ref)
        if not isinstance(i, int) or not 0 <= i < len(dataset.observations):
            raise DatasetFormatError(f"exclude[{k}]: unknown observation {ref!r}")
        if action not in dataset.observations[i].menu:
            raise DatasetFormatError(f"exclude[{k}]: action {action!r} is not in the menu")
        for raw in posts:
            try:
                if isinstance(raw, dict):
                    p = tuple(to_rational(raw[s]) for s in states)
                else:
                    p = tuple(to_rational(x) for x in raw)
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(f"exclude[{k}]: bad posterior ({exc})") from None
            if len(p) != len(states) or sum(p) != 1 or any(x < 0 for x in p):
                raise DatasetFormatError(f"exclude[{k}]: posterior is not a belief")
            out.setdefault((i, action), []).append(p)
    return out


def _exclusions_to_list(exclude: dict) -> list:
    return [
        {"observation": i, "action": a, "posteriors": [[render(x) for x in p] for p in pts]}
        for (i, a), pts in exclude.items()
    ]


# check --------------------------------------------------------------------


def _describe(verdict, dataset, out) -> None:
    print(f"{verdict.axiom}: {verdict.outcome}  [{axioms.CHARACTERIZATION.get(verdict.axiom, '')}]", file=out)
    for line in verdict.failures:
        print(f"  - {line}", file=out)
    w = verdict.witness
    if w is not None and getattr(w, "kind", "") in ("reallocation", "mean_reallocation"):
        names = [dataset.observations[i].name(i) for i in w.prior_menus]
        print(f"  prior mass placed in: {', '.join(names)}", file=out)
        for m in w.menus:
            print(f"  {m.label}: weight {_approx(m.weight)}, prior mass {_approx(m.prior_mass)}", file=out)
    elif w is not None and w.kind == "prior_mixing":
        names = [dataset.observations[i].name(i) for i in w.mixing_observations]
        print(f"  prior revealed alongside other posteriors in: {', '.join(names)}", file=out)


def run_check(args, out) -> int:
    data = _read_json(args.file)
    if args.posterior_mean:
        dataset = means.mean_dataset_from_dict(data)
        try:
            verdicts = means.check_mean(dataset)
        except ValueError as exc:
            raise DatasetFormatError(str(exc)) from None
        mode, exclude, states = "posterior_mean", {}, None
    else:
        dataset = dataset_from_dict(data)
        exclude = parse_exclusions(_read_json(args.exclude), dataset) if args.exclude else {}
        mode = TRANSPARENT if args.transparent_motives else VARYING_PRIORS if args.varying_priors else STATE_DEP
        if exclude:
            mode = EXTENDED
        try:
            verdicts = axioms.check(dataset, mode, exclude or None)
        except ValueError as exc:
            raise DatasetFormatError(str(exc)) from None
        states = dataset.world.states
    report = {
        "format": CERT_FORMAT,
        "mode": mode,
        "dataset": dataset.to_dict(),
        "exclude": _exclusions_to_list(exclude),
        "verdicts": [v.to_dict(states) for v in verdicts],
    }
    if args.certificate:
        with open(args.certificate, "w") as fh:
            json.dump(report, fh, indent=2)
    if args.json:
        json.dump({k: v for k, v in report.items() if k != "dataset"}, out, indent=2)
        print(file=out)
    else:
        for v in verdicts:
            _describe(v, dataset, out)
        print("certificate:", file=out)
        json.dump(report["verdicts"], out, indent=2)
        print(file=out)
    return EXIT_OK if all(v.outcome == CONSISTENT for v in verdicts) else EXIT_VIOLATED


# replay -------------------------------------------------------------------


def replay_report(report: dict) -> list:
    """Every way in which a saved report fails to verify; empty when it holds."""
    if report.get("format") != CERT_FORMAT:
        raise DatasetFormatError("not a certificate file")
    mode = report.get("mode")
    verdicts = report.get("verdicts") or []
    problems = []
    if mode == "posterior_mean":
        dataset = means.mean_dataset_from_dict(report["dataset"])
        nias = means.check_nias_mean(dataset)
    else:
        dataset = dataset_from_dict(report["dataset"])
        exclude = parse_exclusions({"exclude": report.get("exclude", [])}, dataset) if report.get("exclude") else {}
        nias = axioms.check_nias(dataset, varying_priors=(mode == VARYING_PRIORS))
    if not verdicts or verdicts[0].get("outcome") != nias.outcome:
        problems.append("obedience verdict does not match the data")
    if len(verdicts) < 2:
        return problems
    claim = verdicts[1]
    if "certificate" not in claim:
        # only the prior-mixing shortcut has no LP certificate
        sigs = [revealed_signal(o, i) for i, o in enumerate(dataset.observations)] if mode != "posterior_mean" else []
        obs = claim.get("witness", {}).get("observations", [])
        if not obs or not all(0 <= i < len(sigs) and axioms.mixes_prior_with_information(sigs[i]) for i in obs):
            problems.append("prior-mixing claim does not hold")
        return problems
    cert = Certificate.from_dict(claim["certificate"])
    if mode == "posterior_mean":
        layout = means.nbpsm_layout(dataset)
    else:
        layout = axioms.nbps_layout(dataset, mode, exclude or None)
    if not replay(layout.system, cert):
        problems.append("certificate does not satisfy its defining inequalities")
        return problems
    if cert.kind == PRIMAL:
        if claim.get("outcome") != axioms.VIOLATED:
            problems.append("primal witness attached to a non-violated verdict")
        if mode == "posterior_mean":
            w = means.decode_mean_witness(dataset, layout, cert.primal)
            problems += means.mean_witness_failures(dataset, w)
        else:
            w = axioms.decode_witness(dataset, layout, cert.primal)
            problems += axioms.witness_failures(dataset, w, mode, exclude or None)
    elif cert.kind == DUAL:
        if claim.get("outcome") != CONSISTENT:
            problems.append("dual certificate attached to a non-consistent verdict")
        if mode == "posterior_mean":
            r = means.extract_mean_rationalizer(dataset, layout, cert.dual)
            problems += means.mean_rationalizer_failures(dataset, r)
        else:
            r = axioms.extract_rationalizer(dataset, layout, cert.dual)
            problems += axioms.rationalizer_failures(
                dataset, r, transparent=(mode == TRANSPARENT), exclude=exclude or None
            )
    return problems


def run_replay(args, out) -> int:
    report = _read_json(args.certificate)
    try:
        problems = replay_report(report)
    except (KeyError, TypeError) as exc:
        raise DatasetFormatError(f"malformed certificate ({exc})") from None
    if problems:
        for p in problems:
            print(f"FAILED: {p}", file=out)
        return EXIT_REPLAY_FAILED
    print("certificate verified", file=out)
    return EXIT_OK


# solve / gen --------------------------------------------------------------


def run_solve(args, out) -> int:
    data = _read_json(args.file)
    results = []
    if args.posterior_mean:
        for prob in means.mean_problems_from_dict(data):
            sol = means.mean_solve(prob)
            results.append({"label": prob.label, **sol.to_dict()})
    else:
        for prob in forward.problems_from_dict(data):
            sol = forward.solve(prob)
            results.append({"label": prob.label, **sol.to_dict()})
    json.dump(results, out, indent=2)
    print(file=out)
    return EXIT_OK


def run_gen(args, out) -> int:
    if args.random is not None:
        rng = random.Random(args.random)
        if args.posterior_mean:
            problems = means.random_mean_problems(rng, n_actions=args.actions, n_menus=args.menus)
        else:
            problems = forward.random_problems(rng, n_states=args.states, n_actions=args.actions, n_menus=args.menus)
    elif args.file:
        data = _read_json(args.file)
        problems = (means.mean_problems_from_dict if args.posterior_mean else forward.problems_from_dict)(data)
    else:
        raise DatasetFormatError("gen needs a problem file or --random SEED")
    if args.posterior_mean:
        dataset = means.generate_mean_dataset(problems)
    else:
        dataset = forward.generate_dataset(problems)
    text = json.dumps(dataset.to_dict(), indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text, file=out)
    return EXIT_OK


# cover --------------------------------------------------------------------


def run_cover(args, out) -> int:
    data = _read_json(args.file)
    rows = []
    if args.posterior_mean:
        dataset = means.mean_dataset_from_dict(data)
        for i, obs in enumerate(dataset.observations):
            for a in obs.menu:
                span = dataset.world.region(obs.menu, a)
                pts = [] if span is None else [[span[0]], [span[1]]]
                rows.append((obs.name(i), a, pts))
        header = "mean"
    else:
        dataset = dataset_from_dict(data)
        for i, obs in enumerate(dataset.observations):
            cover = posterior_cover(dataset.world, obs.menu, i)
            for a, reg in cover.regions.items():
                rows.append((obs.name(i), a, [list(v) for v in reg.vertices]))
        header = ",".join(dataset.world.states)
    if args.csv:
        print(f"observation,action,vertex,{header}", file=out)
        for name, a, pts in rows:
            for k, p in enumerate(pts):
                print(",".join([name, a, str(k)] + [render(x) for x in p]), file=out)
        return EXIT_OK
    binary = args.posterior_mean or len(dataset.world.states) == 2
    for name, a, pts in rows:
        if not pts:
            print(f"{name} {a}: empty", file=out)
        elif binary:
            coords = sorted(p[-1] for p in pts)
            what = "mean" if args.posterior_mean else f"P({dataset.world.states[-1]})"
            print(f"{name} {a}: {what} in [{render(coords[0])}, {render(coords[-1])}]", file=out)
        else:
            shown = "; ".join("(" + ", ".join(render(x) for x in p) + ")" for p in pts)
            print(f"{name} {a}: vertices {shown}", file=out)
    return EXIT_OK


# entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revealed-persuasion",
        description="Test stochastic choice data for consistency with Bayesian persuasion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the obedience test and the matching reshuffling test")
    p.add_argument("file", help="dataset JSON (or the name of a bundled example)")
    flavour = p.add_mutually_exclusive_group()
    flavour.add_argument("--transparent-motives", action="store_true", help="sender utility ignores the state")
    flavour.add_argument("--posterior-mean", action="store_true", help="dataset is over posterior means")
    flavour.add_argument("--varying-priors", action="store_true", help="observations may use different priors")
    p.add_argument("--exclude", metavar="POINTS", help="JSON of posteriors the sender never induces unless chosen")
    p.add_argument("--json", action="store_true", help="print the JSON report only")
    p.add_argument("--certificate", metavar="OUT", help="write a self-contained certificate file")

    p = sub.add_parser("solve", help="optimal signal for each problem in a problem file")
    p.add_argument("file")
    p.add_argument("--posterior-mean", action="store_true")

    p = sub.add_parser("gen", help="generate a dataset from optimal persuasion")
    p.add_argument("file", nargs="?")
    p.add_argument("--posterior-mean", action="store_true")
    p.add_argument("--random", type=int, metavar="SEED", help="draw a random problem set instead of reading one")
    p.add_argument("--states", type=int, choices=(2, 3))
    p.add_argument("--actions", type=int)
    p.add_argument("--menus", type=int)
    p.add_argument("-o", "--output")

    p = sub.add_parser("cover", help="print each action's optimality region")
    p.add_argument("file")
    p.add_argument("--posterior-mean", action="store_true")
    p.add_argument("--csv", action="store_true")

    p = sub.add_parser("replay", help="re-verify a certificate written by check --certificate")
    p.add_argument("certificate")
    return parser


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "check" and args.exclude and (args.transparent_motives or args.posterior_mean or args.varying_priors):
        print("error: --exclude combines only with the default state-dependent test", file=sys.stderr)
        return EXIT_BAD_INPUT
    handler = {"check": run_check, "solve": run_solve, "gen": run_gen, "cover": run_cover, "replay": run_replay}
    try:
        return handler[args.command](args, out)
    except (DatasetFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


def main() -> None:
    sys.exit(run())
