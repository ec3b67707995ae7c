"""Command-line front end: every analysis as a subcommand with JSON output.

Exit codes: 0 when the check passed or the verdict is true, 1 when a check
failed or a counterexample was found, 2 for usage, format, and validation
errors. Identical inputs and seeds produce byte-identical reports.
"""
from __future__ import annotations

import argparse
import json
import random
import sys

from .action_update import Announcement
from .analysis import (
    Protocol,
    SweepSpec,
    check_solution,
    find_b_indistinguishable_pair,
    inequality_check,
    lemma2_check,
    run_protocol,
    single_announcement_sweep,
    threshold_l,
    two_announcement_trace,
)
from .epistemic_core import find_world, model_from_json, model_to_json
from .errors import DelcardsError
from .formula import evaluate, parse, render
from .russian_cards import build_rcp, deal_from_json, encode_deal, parse_deal_text


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="delcards", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    rcp = sub.add_parser("rcp", help="instance generation")
    rcp_sub = rcp.add_subparsers(dest="rcp_command", required=True)
    build = rcp_sub.add_parser("build", help="generate the deal model as JSON")
    build.add_argument("--k", type=int, required=True)
    build.add_argument("--l", type=int, required=True)
    build.add_argument("--deal", help='deal JSON, e.g. {"a":[0,1,2],"b":[3,4,5],"c":[6]}')
    build.add_argument("--out", help="write the model JSON here instead of stdout")
    build.add_argument("--world-cap", type=int, default=None)
    build.set_defaults(handler=_cmd_rcp_build)

    mc = sub.add_parser("mc", help="model-check one formula at one world")
    mc.add_argument("--model", required=True, help="model JSON file")
    mc.add_argument("--world", required=True, help='base id, e.g. "012|345|6"')
    mc.add_argument("--formula", required=True)
    mc.set_defaults(handler=_cmd_mc)

    protocol = sub.add_parser("protocol", help="run or verify an announcement protocol")
    protocol_sub = protocol.add_subparsers(dest="protocol_command", required=True)
    for name in ("run", "verify"):
        p = protocol_sub.add_parser(name)
        p.add_argument("--file", required=True, help="protocol JSON file")
        p.add_argument("--strong", action="store_true",
                       help="require the goals at every surviving world, not just w*")
        p.add_argument("--world-cap", type=int, default=None)
        p.set_defaults(handler=_cmd_protocol, mode=name)

    sweep = sub.add_parser("sweep", help="impossibility sweeps")
    sweep_sub = sweep.add_subparsers(dest="sweep_command", required=True)
    single = sweep_sub.add_parser("single", help="no single announcement teaches a the deal")
    single.add_argument("--k", type=int, required=True)
    single.add_argument("--l", type=int, required=True)
    single.add_argument("--max-extra", type=int, default=3)
    single.add_argument("--samples", type=int, default=0)
    single.add_argument("--seed", type=int, default=0)
    single.add_argument("--world-cap", type=int, default=None)
    single.set_defaults(handler=_cmd_sweep_single)

    lemma2 = sub.add_parser("lemma2", help="cover/intersection safety of a hand set")
    lemma2.add_argument("--hands", required=True, help="JSON list of hands, e.g. [[0,1,2],[0,3,4]]")
    lemma2.add_argument("--k", type=int, required=True)
    lemma2.add_argument("--l", type=int, required=True)
    lemma2.set_defaults(handler=_cmd_lemma2)

    lemma4 = sub.add_parser("lemma4", help="indistinguishable-pair search")
    lemma4_sub = lemma4.add_subparsers(dest="lemma4_command", required=True)
    pair = lemma4_sub.add_parser("pair")
    pair.add_argument("--k", type=int, required=True)
    pair.add_argument("--l", type=int, required=True)
    pair.add_argument("--hands", required=True, help="JSON list of first-announcement hands")
    pair.add_argument("--by", choices=("a", "b"), default="a")
    pair.add_argument("--world-cap", type=int, default=None)
    pair.set_defaults(handler=_cmd_lemma4_pair)

    two = sub.add_parser("two-ann", help="two-announcement persistence traces")
    two.add_argument("--k", type=int, required=True)
    two.add_argument("--l", type=int, required=True)
    two.add_argument("--first", help="JSON list of first-announcement hands; sampled when absent")
    two.add_argument("--first-by", choices=("a", "b"), default="a")
    two.add_argument("--samples", type=int, default=1)
    two.add_argument("--seed", type=int, default=0)
    two.add_argument("--world-cap", type=int, default=None)
    two.set_defaults(handler=_cmd_two_ann)

    ineq = sub.add_parser("ineq", help="the exact counting inequality")
    ineq.add_argument("--k", type=int, required=True)
    ineq.add_argument("--l", type=int, default=None)
    ineq.add_argument("--k-max", type=int, default=None)
    ineq.set_defaults(handler=_cmd_ineq)

    return top


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2))


def _parse_hands_json(text: str) -> tuple[frozenset[int], ...]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("hands must be a JSON list of lists")
    return tuple(frozenset(h) for h in data)


def _cmd_rcp_build(args) -> int:
    deal = deal_from_json(json.loads(args.deal)) if args.deal else None
    inst = build_rcp(args.k, args.l, deal=deal, world_cap=args.world_cap)
    doc = model_to_json(inst.model)
    doc["actual"] = inst.actual.full_id()
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_mc(args) -> int:
    with open(args.model) as fh:
        model = model_from_json(json.load(fh))
    base = encode_deal(parse_deal_text(args.world))
    world = find_world(model, base)
    f = parse(args.formula)
    value = evaluate(model, world, f)
    _emit({"world": world.full_id(), "formula": render(f), "value": value})
    return 0 if value else 1


def _load_protocol(path: str) -> Protocol:
    with open(path) as fh:
        doc = json.load(fh)
    instance = doc["instance"]
    deal = deal_from_json(instance["deal"]) if instance.get("deal") else None
    steps = []
    for entry in doc["steps"]:
        if "hands" in entry:
            steps.append(Announcement(by=entry["by"], hands=tuple(frozenset(h) for h in entry["hands"])))
        else:
            steps.append(Announcement(by=entry["by"], formula=parse(entry["formula"])))
    return Protocol(k=instance["k"], l=instance["l"], deal=deal, steps=tuple(steps))


def _cmd_protocol(args) -> int:
    protocol = _load_protocol(args.file)
    inst = build_rcp(protocol.k, protocol.l, deal=protocol.deal, world_cap=args.world_cap)
    final, summaries = run_protocol(inst, protocol)
    counts = (len(inst.model.worlds),) + tuple(s.worlds for s in summaries)
    report = check_solution(final, inst.actual, inst.universe, step_worlds=counts, strong=args.strong)
    if args.mode == "run":
        _emit(
            {
                "instance": {"k": inst.k, "l": inst.l, "deal": inst.actual.base},
                "steps": [s.to_dict() for s in summaries],
                "solution": report.to_dict(),
            }
        )
    else:
        _emit(report.to_dict())
    return 0 if report.verdict else 1


def _cmd_sweep_single(args) -> int:
    inst = build_rcp(args.k, args.l, world_cap=args.world_cap)
    spec = SweepSpec(exhaustive_max_extra=args.max_extra, samples=args.samples, seed=args.seed)
    report = single_announcement_sweep(inst, spec)
    _emit(report.to_dict())
    return 0 if not report.violations else 1


def _cmd_lemma2(args) -> int:
    hands = _parse_hands_json(args.hands)
    universe = tuple(range(2 * args.k + args.l))
    report = lemma2_check(hands, universe)
    _emit(report.to_dict())
    return 0 if report.safe else 1


def _cmd_lemma4_pair(args) -> int:
    inst = build_rcp(args.k, args.l, world_cap=args.world_cap)
    hands = _parse_hands_json(args.hands)
    witness = find_b_indistinguishable_pair(inst, hands, by=args.by)
    _emit(
        {
            "k": args.k,
            "l": args.l,
            "by": args.by,
            "hands": [sorted(h) for h in hands],
            "witness": witness.to_dict() if witness else None,
        }
    )
    return 0 if witness else 1


def _cmd_two_ann(args) -> int:
    from .analysis import sample_valid_announcement

    inst = build_rcp(args.k, args.l, world_cap=args.world_cap)
    rng = random.Random(args.seed)
    traces = []
    for _ in range(args.samples):
        if args.first:
            first = _parse_hands_json(args.first)
        else:
            first = sample_valid_announcement(inst, rng, by=args.first_by)
        trace = two_announcement_trace(
            inst, first, seed=rng.randrange(2**32), first_by=args.first_by
        )
        traces.append(trace)
    all_confirmed = bool(traces) and all(t.confirmed for t in traces)
    _emit(
        {
            "k": args.k,
            "l": args.l,
            "seed": args.seed,
            "samples": args.samples,
            "first_by": args.first_by,
            "all_confirmed": all_confirmed,
            "traces": [t.to_dict() for t in traces],
        }
    )
    return 0 if all_confirmed else 1


def _cmd_ineq(args) -> int:
    ks = [args.k] if args.k_max is None else list(range(args.k, args.k_max + 1))
    witnesses = []
    for k in ks:
        l = args.l if args.l is not None else threshold_l(k)
        witnesses.append(inequality_check(k, l))
    payload = [w.to_dict() for w in witnesses]
    _emit(payload[0] if args.k_max is None else payload)
    return 0 if all(w.holds for w in witnesses) else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except DelcardsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def app() -> None:
    sys.exit(main())
