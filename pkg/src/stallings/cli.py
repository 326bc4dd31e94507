"""Command-line front end.

Every subcommand prints JSON (or DOT where asked) on standard output.
Exit status: 0 on success, 1 when a verification fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from . import action_builder as ab
from . import subgroups as sg
from .isoperimetry import phi_search, threshold_report
from .normality import degree_certify, predicate
from .schreier import SchreierView, is_tree_vertex
from .words import (Alphabet, MalformedWordError, cyclically_reduce,
                    enumerate_cyclically_reduced, inverse, reduce)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    rank: int = 2
    seed: int = 0
    fmt: str = "json"

    def __post_init__(self):
        if not 1 <= self.rank <= 26:
            raise UsageError("--rank must be between 1 and 26")

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.rank)


def _frac(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def _handle(cfg: RunConfig, text: str) -> sg.SubgroupHandle:
    return sg.from_generators(cfg.alphabet.parse_list(text), cfg.alphabet)


def _subgroup_json(h: sg.SubgroupHandle) -> dict:
    fmt = h.alphabet.format
    return {"generators": [fmt(g) for g in h.generators()],
            "graph": h.graph.to_json(h.alphabet)}


# -- word ---------------------------------------------------------------


def cmd_word(args, cfg: RunConfig) -> int:
    alph = cfg.alphabet
    fmt = alph.format
    if args.action == "enumerate":
        if args.length is None:
            raise UsageError("word enumerate needs --length")
        _emit({"length": args.length,
               "words": [fmt(w) for w in enumerate_cyclically_reduced(cfg.rank, args.length)]})
        return 0
    if args.word is None:
        raise UsageError(f"word {args.action} needs --word")
    w = alph.parse(args.word)
    if args.action == "reduce":
        _emit({"word": fmt(reduce(w))})
    elif args.action == "inverse":
        _emit({"word": fmt(inverse(w))})
    else:
        conj, core = cyclically_reduce(w)
        _emit({"conjugator": fmt(conj), "core": fmt(core)})
    return 0


# -- subgroup ---------------------------------------------------------


def cmd_subgroup(args, cfg: RunConfig) -> int:
    h = _handle(cfg, args.gens)
    alph = cfg.alphabet
    if args.action == "rank":
        _emit({"rank": sg.rank(h)})
    elif args.action == "index":
        idx = sg.index(h)
        _emit({"index": "infinite" if idx == float("inf") else idx, "rank": sg.rank(h)})
    elif args.action == "contains":
        if args.word is None:
            raise UsageError("subgroup contains needs --word")
        _emit({"contains": sg.contains(h, alph.parse(args.word))})
    elif args.action == "intersect":
        if args.other is None:
            raise UsageError("subgroup intersect needs --other")
        _emit(_subgroup_json(sg.intersect(h, _handle(cfg, args.other))))
    elif args.action == "conjugate":
        if args.word is None:
            raise UsageError("subgroup conjugate needs --word")
        _emit(_subgroup_json(sg.conjugate(h, alph.parse(args.word))))
    elif args.action == "graph":
        if cfg.fmt == "dot":
            sys.stdout.write(h.graph.to_dot(alph) + "\n")
        else:
            _emit(_subgroup_json(h))
    else:
        _emit(sg.malnormal_in_ball(h, args.radius).to_json(alph))
    return 0


# -- schreier / phi ----------------------------------------------------


def _fmt_vertex(x, alph: Alphabet) -> str:
    if is_tree_vertex(x):
        return f"{x[0]}.{alph.format(x[1])}"
    return str(x)


def cmd_schreier(args, cfg: RunConfig) -> int:
    h = _handle(cfg, args.subgroup)
    view = SchreierView.of_subgroup(h)
    ball = view.ball(view.base, args.radius)
    if cfg.fmt == "dot":
        sys.stdout.write(ball.graph.to_dot(cfg.alphabet) + "\n")
    else:
        out = ball.graph.to_json(cfg.alphabet)
        out["labels"] = [_fmt_vertex(x, cfg.alphabet) for x in ball.refs]
        _emit(out)
    return 0


def cmd_phi(args, cfg: RunConfig) -> int:
    h = _handle(cfg, args.subgroup)
    view = SchreierView.of_subgroup(h)
    bound = phi_search(view, args.max_size, args.radius, heuristics=args.heuristic)
    out = bound.to_json(lambda x: _fmt_vertex(x, cfg.alphabet))
    out["heuristic"] = args.heuristic
    _emit(out)
    return 0


# -- normality -------------------------------------------------------------


def cmd_normality(args, cfg: RunConfig) -> int:
    h = _handle(cfg, args.gens)
    if args.action == "certify":
        cert = degree_certify(h, args.degree, predicate(args.pred), args.radius, args.max_iter)
        _emit(cert.to_json())
        return 0
    report = threshold_report(h, args.degree, max_size=args.max_size, radius=args.radius)
    _emit(report.to_json())
    return 0


# -- action ----------------------------------------------------------------


def _budgets(text) -> ab.Budgets:
    budgets = ab.Budgets()
    if not text:
        return budgets
    for item in text.split(","):
        key, _, value = item.partition("=")
        key = key.strip().replace("-", "_")
        if not hasattr(budgets, key):
            raise UsageError(f"unknown budget {key!r}")
        try:
            number = int(value)
        except ValueError:
            raise UsageError(f"budget {key} needs an integer") from None
        if number < 1:
            raise UsageError(f"budget {key} must be positive")
        setattr(budgets, key, number)
    return budgets


def _load(path: str) -> ab.GammaSequence:
    if not os.path.exists(path):
        raise UsageError(f"no stage file at {path}; run 'action build' first")
    return ab.GammaSequence.load(path)


def cmd_action(args, cfg: RunConfig) -> int:
    if args.action == "build":
        budgets = _budgets(args.budget)
        seq = None
        if os.path.exists(args.state) and not args.fresh:
            seq = ab.GammaSequence.load(args.state)
            if seq.rank != cfg.rank or seq.policy != args.policy:
                raise UsageError("stage file was built with a different rank or policy; use --fresh")
        seq = seq or ab.GammaSequence.start(cfg.rank, args.policy)
        start = time.monotonic()
        for n in range(len(seq.stages), args.stages + 1):
            if args.time_limit and time.monotonic() - start > args.time_limit:
                raise ab.StageBuildError(f"stage {n}", f"{args.time_limit} s")
            try:
                seq = ab.build_stage(seq, n, budgets)
            except ab.VerificationFailure as exc:
                _emit(exc.report.to_json())
                return 1
            seq.save(args.state)
        seq.save(args.state)
        _emit({"state": args.state, "stages": [
            {"stage": m.n, "vertices": g.n, "k": m.k, "ball": m.ball_size,
             "quotient": m.quotient, "quotient_order": m.quotient_order,
             "schreier_rank": m.schreier_rank, "folner_size": len(m.folner),
             "folner_ratio": _frac(m.folner_ratio)}
            for g, m in zip(seq.stages, seq.meta)]})
        return 0
    seq = _load(args.state)
    if args.stage >= len(seq.stages):
        raise UsageError(f"stage {args.stage} has not been built")
    if args.action == "verify":
        report = ab.verify_stage(seq, args.stage)
        _emit(report.to_json())
        return 0 if report.ok else 1
    if cfg.fmt == "dot":
        view = seq.view(args.stage)
        sys.stdout.write(view.ball(0, args.depth).graph.to_dot(cfg.alphabet) + "\n")
    else:
        _emit(ab.export_action(seq, args.stage, args.depth))
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank", type=_positive, default=2, help="number of generators")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")
    common.add_argument("--format", dest="fmt", choices=["json", "dot"], default="json")

    parser = argparse.ArgumentParser(prog="stallings", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("word", parents=[common], help="reduce and enumerate words")
    p.add_argument("action", choices=["reduce", "inverse", "cyclic", "enumerate"])
    p.add_argument("--word")
    p.add_argument("--length", type=_nonnegative)
    p.set_defaults(func=cmd_word)

    p = sub.add_parser("subgroup", parents=[common], help="subgroup algorithms")
    p.add_argument("action", choices=["rank", "index", "contains", "intersect",
                                      "conjugate", "malnormal", "graph"])
    p.add_argument("--gens", required=True, help="comma separated words, e.g. a,baB")
    p.add_argument("--word")
    p.add_argument("--other", help="generators of the second subgroup")
    p.add_argument("--radius", type=_positive, default=3)
    p.set_defaults(func=cmd_subgroup)

    p = sub.add_parser("schreier", parents=[common], help="balls in Schreier graphs")
    p.add_argument("action", choices=["ball"])
    p.add_argument("--subgroup", required=True)
    p.add_argument("--radius", type=_nonnegative, default=2)
    p.set_defaults(func=cmd_schreier)

    p = sub.add_parser("phi", parents=[common], help="isoperimetric constant search")
    p.add_argument("--subgroup", required=True)
    p.add_argument("--max-size", type=_positive, default=8)
    p.add_argument("--radius", type=_nonnegative, default=4)
    p.add_argument("--heuristic", action="store_true")
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("normality", parents=[common], help="q-normality certificates")
    p.add_argument("action", choices=["certify", "threshold"])
    p.add_argument("--gens", required=True)
    p.add_argument("--degree", type=_nonnegative, default=1)
    p.add_argument("--pred", choices=["infinite", "nonamenable"], default="infinite")
    p.add_argument("--radius", type=_positive, default=2)
    p.add_argument("--max-iter", type=_positive, default=10)
    p.add_argument("--max-size", type=_positive, default=12)
    p.set_defaults(func=cmd_normality)

    p = sub.add_parser("action", parents=[common], help="stage-wise action construction")
    p.add_argument("action", choices=["build", "verify", "export"])
    p.add_argument("--state", default="stallings-action.json", help="stage file (JSON)")
    p.add_argument("--stages", type=_nonnegative, default=3)
    p.add_argument("--stage", type=_nonnegative, default=1)
    p.add_argument("--depth", type=_nonnegative, default=2)
    p.add_argument("--budget", help="e.g. max_k=40,max_ball=2000000")
    p.add_argument("--policy", choices=["minimal", "strict"], default="minimal")
    p.add_argument("--time-limit", type=_positive, help="seconds")
    p.add_argument("--fresh", action="store_true", help="ignore an existing stage file")
    p.set_defaults(func=cmd_action)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = RunConfig(args.rank, args.seed, args.fmt)
        random.seed(cfg.seed)
        return args.func(args, cfg)
    except (UsageError, MalformedWordError, ValueError) as exc:
        print(f"stallings: error: {exc}", file=sys.stderr)
        return 2
    except ab.StageBuildError as exc:
        _emit({"error": "budget exhausted", "search": exc.search, "budget": exc.budget})
        return 1


if __name__ == "__main__":
    sys.exit(main())
