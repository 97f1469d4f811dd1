"""Command-line interface.

Verbs:

    generate   sample questions from a bank into an instances file
    score      grade an answers file against an instances file
    run        end-to-end evaluation with an agent adapter
    report     render a JSON report as markdown

Exit codes: 0 success, 1 usage/config error, 2 bank error, 3 transport
exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .bank import (
    BankError,
    QuestionBank,
    SampleError,
    SampleMode,
    instantiate,
    load_bank,
    sample,
    shipped_bank_path,
)
from .harness import (
    EvaluationReport,
    OracleAgent,
    RemoteAgent,
    ReplayAgent,
    RunConfig,
    TransportError,
    assign_competence_level,
    bank_fingerprint,
    emit_report,
    level_pass_rates,
    report_from_json,
    run_evaluation,
    score_instances,
)
from .taxonomy import TagFilter

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BANK = 2
EXIT_TRANSPORT = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        raise UsageError(message)


def _parse_filter(raw: Optional[str]) -> TagFilter:
    if not raw:
        return TagFilter.empty()
    try:
        return TagFilter.from_dict(json.loads(raw))
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise UsageError(f"bad --filter: {exc}") from None


def _load_bank_arg(raw: Optional[str]) -> tuple[QuestionBank, Path]:
    path = Path(raw) if raw else shipped_bank_path()
    if not path.exists():
        raise BankError(f"bank file not found: {path}")
    return load_bank(path), path


def _write_out(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _make_agent(descriptor: str, config: RunConfig, instances) -> object:
    if descriptor == "oracle":
        return OracleAgent(instances)
    if descriptor.startswith("replay:"):
        path = descriptor.split(":", 1)[1]
        if not Path(path).exists():
            raise UsageError(f"replay file not found: {path}")
        return ReplayAgent(path)
    if descriptor == "remote":
        try:
            return RemoteAgent(config=config)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"unknown agent {descriptor!r} (expected oracle, replay:PATH, or remote)")


def _cmd_generate(args) -> int:
    bank, path = _load_bank_arg(args.bank)
    flt = _parse_filter(args.filter)
    instances = sample(bank, flt, args.n, args.mode, args.seed)
    payload = {
        "schema_version": 1,
        "bank": str(path),
        "bank_fingerprint": bank_fingerprint(path),
        "filter": flt.to_dict(),
        "mode": SampleMode.parse(args.mode).value,
        "n": args.n,
        "seed": args.seed,
        "instances": [
            {
                "id": inst.id,
                "level": inst.level.name,
                "tags": inst.tags.to_dict(),
                "kind": inst.kind,
                "prompt": inst.prompt,
                "provenance": dict(inst.provenance),
            }
            for inst in instances
        ],
    }
    _write_out(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def _cmd_score(args) -> int:
    bank, bank_path = _load_bank_arg(args.bank)
    instances_doc = json.loads(Path(args.instances).read_text(encoding="utf-8"))
    answers = json.loads(Path(args.answers).read_text(encoding="utf-8"))
    recorded = instances_doc.get("bank_fingerprint")
    if recorded and recorded != bank_fingerprint(bank_path):
        print(
            "warning: bank file differs from the one the instances were generated from",
            file=sys.stderr,
        )
    ordered = []
    for record in instances_doc["instances"]:
        template = bank.template(record["provenance"]["template_id"])
        ordered.append(instantiate(template, bank))
    items = score_instances(ordered, {str(k): str(v) for k, v in answers.items()})
    rates = level_pass_rates(items)
    report = EvaluationReport(
        run_id="offline",
        started_at="",
        duration_s=0.0,
        config={"mode": instances_doc.get("mode"), "seed": instances_doc.get("seed"),
                "agent": "replay-file", "threshold": args.threshold},
        items=tuple(items),
        level_pass_rates=rates,
        competence_level=assign_competence_level(rates, args.threshold),
    )
    _write_out(emit_report(report, "json"), args.out)
    return EXIT_OK


def _cmd_run(args) -> int:
    bank, path = _load_bank_arg(args.bank)
    flt = _parse_filter(args.filter)
    config = RunConfig(threshold=args.threshold, fail_fast=args.fail_fast)
    instances = sample(bank, flt, args.n, args.mode, args.seed)
    agent = _make_agent(args.agent, config, instances)
    report = run_evaluation(bank, flt, args.mode, args.n, args.seed, agent, config)
    _write_out(emit_report(report, "json"), args.out)
    return EXIT_OK


def _cmd_report(args) -> int:
    report = report_from_json(Path(args.input).read_text(encoding="utf-8"))
    _write_out(emit_report(report, "markdown"), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eagibench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--bank", help="bank file (default: shipped bank)")
        p.add_argument("--filter", help='tag filter as JSON, e.g. {"levels": [1, 3]}')
        p.add_argument("--mode", default="Targeted", help="Targeted | Stratified | Curriculum")
        p.add_argument("--n", type=int, required=True, help="number of items")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default: stdout)")

    g = sub.add_parser("generate", help="sample questions into an instances file")
    common(g)
    g.set_defaults(fn=_cmd_generate)

    s = sub.add_parser("score", help="grade an answers file against an instances file")
    s.add_argument("--bank", help="bank file (default: shipped bank)")
    s.add_argument("--instances", required=True)
    s.add_argument("--answers", required=True)
    s.add_argument("--threshold", type=float, default=0.7)
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_score)

    r = sub.add_parser("run", help="run an end-to-end evaluation")
    common(r)
    r.add_argument("--agent", required=True, help="oracle | replay:PATH | remote")
    r.add_argument("--threshold", type=float, default=0.7)
    r.add_argument("--fail-fast", action="store_true")
    r.set_defaults(fn=_cmd_run)

    m = sub.add_parser("report", help="render a JSON report as markdown")
    m.add_argument("--input", required=True)
    m.add_argument("--out")
    m.set_defaults(fn=_cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SampleError, ValueError) as exc:
        if isinstance(exc, BankError):
            print(f"bank error: {exc}", file=sys.stderr)
            return EXIT_BANK
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"transport exhausted: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
