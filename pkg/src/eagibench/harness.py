"""End-to-end evaluation runner: agents, aggregation, reports.

Adapters receive only the rendered prompt and public metadata (instance
id, level, tags) through ``answer``; ground-truth specs never cross the
adapter call interface.  The oracle agent is the one deliberate
exception: it is constructed *from* the instance list so the harness can
self-test (every objective item it answers must score Pass).

Remote calls may run concurrently (bounded in flight); scoring and
aggregation stay sequential over the sampled item order, so reports are
reproducible for a fixed seed and replay file.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence

import requests

from .bank import (
    QuestionBank,
    QuestionInstance,
    SampleMode,
    answer_kind,
    design_to_bank,
    sample,
)
from .scoring import Score, Verdict, score_answer, unscorable
from .taxonomy import CognitionLevel, TagFilter

REMOTE_URL_ENV = "EAGI_REMOTE_URL"
REMOTE_TOKEN_ENV = "EAGI_REMOTE_TOKEN"

REPORT_SCHEMA_VERSION = 1


class TransportError(RuntimeError):
    """Remote agent call failed after exhausting retries."""


@dataclass(frozen=True)
class RunConfig:
    threshold: float = 0.7
    fail_fast: bool = False
    max_in_flight: int = 4
    remote_timeout_s: float = 30.0
    remote_retries: int = 2
    remote_backoff_s: float = 0.5
    model: str = "default"

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "fail_fast": self.fail_fast,
            "max_in_flight": self.max_in_flight,
            "remote_timeout_s": self.remote_timeout_s,
            "remote_retries": self.remote_retries,
            "remote_backoff_s": self.remote_backoff_s,
            "model": self.model,
        }


class AgentAdapter(Protocol):
    name: str

    def answer(self, prompt: str, metadata: Mapping) -> str: ...


def _fence(payload: Mapping) -> str:
    return "```json\n" + json.dumps(payload) + "\n```"


class OracleAgent:
    """Answers every item from its ground truth (self-consistency fixture)."""

    name = "oracle"

    def __init__(self, instances: Sequence[QuestionInstance]):
        self._specs = {inst.id: inst.answer_spec for inst in instances}

    def answer(self, prompt: str, metadata: Mapping) -> str:
        spec = self._specs.get(metadata["instance_id"])
        if spec is None:
            return ""
        kind = answer_kind(spec)
        if kind == "numeric":
            return _fence({"value": spec.value, "unit": spec.unit})
        if kind == "fact":
            return _fence({"text": spec.canonical})
        if kind == "structured":
            return _fence({"fields": {f.name: f.expected for f in spec.fields}})
        if kind == "diagnosis":
            return _fence({"cause": spec.accepted_causes[0]})
        if kind == "fix":
            return _fence({"patch": dict(spec.reference_patch)})
        if kind == "design":
            return _fence({"design": design_to_bank(spec.reference_design)})
        if kind == "rubric":
            return " ".join(criterion.phrases[0] for criterion in spec.criteria)
        return ""


class ReplayAgent:
    """Answers from a keyed file: {"<instance id>": "<answer text>", ...}."""

    name = "replay"

    def __init__(self, answers: Mapping[str, str] | str | Path):
        if isinstance(answers, (str, Path)):
            answers = json.loads(Path(answers).read_text(encoding="utf-8"))
        self._answers = {str(k): str(v) for k, v in answers.items()}

    def answer(self, prompt: str, metadata: Mapping) -> str:
        return self._answers.get(metadata["instance_id"], "")


class RemoteAgent:
    """HTTP chat-completion adapter.

    Sends ``{"model": ..., "messages": [{"role": "user", "content": ...}]}``
    and reads the first choice's message content.  Endpoint and bearer
    token come from EAGI_REMOTE_URL / EAGI_REMOTE_TOKEN unless given
    explicitly; timeout and retry counts come from the run config.
    """

    name = "remote"

    def __init__(
        self,
        url: Optional[str] = None,
        token: Optional[str] = None,
        config: RunConfig = RunConfig(),
        session: Optional[requests.Session] = None,
    ):
        self.url = url or os.environ.get(REMOTE_URL_ENV)
        if not self.url:
            raise ValueError(f"remote agent needs a URL ({REMOTE_URL_ENV} or explicit)")
        self.token = token if token is not None else os.environ.get(REMOTE_TOKEN_ENV)
        self.config = config
        self._session = session or requests.Session()

    def answer(self, prompt: str, metadata: Mapping) -> str:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Optional[Exception] = None
        for attempt in range(self.config.remote_retries + 1):
            try:
                response = self._session.post(
                    self.url, json=payload, headers=headers, timeout=self.config.remote_timeout_s
                )
                response.raise_for_status()
                body = response.json()
                choice = body["choices"][0]
                message = choice.get("message")
                if message is not None:
                    return str(message["content"])
                return str(choice["text"])
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt < self.config.remote_retries:
                    time.sleep(self.config.remote_backoff_s * (attempt + 1))
        raise TransportError(f"remote agent failed after retries: {last_error}")


@dataclass(frozen=True)
class ItemResult:
    instance_id: str
    level: int
    kind: str
    score: Score

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "level": self.level,
            "level_name": CognitionLevel(self.level).name,
            "kind": self.kind,
            "value": self.score.value,
            "verdict": self.score.verdict.value,
            "evidence": [
                {"check_id": e.check_id, "outcome": e.outcome, "detail": e.detail}
                for e in self.score.evidence
            ],
        }


@dataclass(frozen=True)
class EvaluationReport:
    run_id: str
    started_at: str
    duration_s: float
    config: Mapping
    items: tuple[ItemResult, ...]
    level_pass_rates: Mapping[int, float]
    competence_level: int

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "run_id": self.run_id,
            "started_at": self.started_at,
            "duration_s": self.duration_s,
            "config": dict(self.config),
            "items": [item.to_dict() for item in self.items],
            "level_pass_rates": {str(k): v for k, v in self.level_pass_rates.items()},
            "competence_level": self.competence_level,
        }


def level_pass_rates(items: Sequence[ItemResult]) -> dict[int, float]:
    counts: dict[int, list[int]] = {}
    for item in items:
        total = counts.setdefault(item.level, [0, 0])
        total[0] += item.score.verdict is Verdict.Pass
        total[1] += 1
    return {lvl: passed / total for lvl, (passed, total) in sorted(counts.items())}


def assign_competence_level(rates: Mapping[int, float] | "EvaluationReport", threshold: float) -> int:
    """Largest level whose pass rate, and every populated level below it,
    clears the threshold.  Levels with no items are skipped, not assumed
    passed; 0 when no populated level clears it."""
    if isinstance(rates, EvaluationReport):
        rates = rates.level_pass_rates
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    competence = 0
    for level in sorted(rates):
        if rates[level] >= threshold:
            competence = level
        else:
            break
    return competence


def _collect_answers(
    instances: Sequence[QuestionInstance], agent: AgentAdapter, config: RunConfig
) -> list[str | TransportError]:
    def ask(instance: QuestionInstance):
        metadata = {
            "instance_id": instance.id,
            "level": int(instance.level),
            "tags": instance.tags.to_dict(),
        }
        try:
            return agent.answer(instance.prompt, metadata)
        except TransportError as exc:
            return exc

    if isinstance(agent, RemoteAgent) and config.max_in_flight > 1:
        with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
            return list(pool.map(ask, instances))
    return [ask(instance) for instance in instances]


def score_instances(
    instances: Sequence[QuestionInstance],
    answers: Mapping[str, str],
) -> list[ItemResult]:
    """Score a prepared answer set against instantiated questions."""
    results = []
    for instance in instances:
        score = score_answer(instance.answer_spec, answers.get(instance.id, ""))
        results.append(
            ItemResult(
                instance_id=instance.id,
                level=int(instance.level),
                kind=instance.kind,
                score=score,
            )
        )
    return results


def run_evaluation(
    bank: QuestionBank,
    flt: TagFilter,
    mode: SampleMode | str,
    n: int,
    seed: int,
    agent: AgentAdapter,
    config: RunConfig = RunConfig(),
) -> EvaluationReport:
    """Sample, prompt the agent per item, score, and aggregate.

    Transport failures mark the item Unscorable and the run continues,
    unless ``config.fail_fast`` re-raises the failure.
    """
    started = time.time()
    instances = sample(bank, flt, n, mode, seed)
    raw_answers = _collect_answers(instances, agent, config)

    items: list[ItemResult] = []
    for instance, answer in zip(instances, raw_answers):
        if isinstance(answer, TransportError):
            if config.fail_fast:
                raise answer
            from .scoring import unscorable

            score = unscorable(f"agent transport failure: {answer}")
        else:
            score = score_answer(instance.answer_spec, answer)
        items.append(
            ItemResult(
                instance_id=instance.id,
                level=int(instance.level),
                kind=instance.kind,
                score=score,
            )
        )

    rates = level_pass_rates(items)
    competence = assign_competence_level(rates, config.threshold)
    return EvaluationReport(
        run_id=uuid.uuid4().hex,
        started_at=time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        duration_s=round(time.time() - started, 6),
        config={
            "filter": flt.to_dict(),
            "mode": SampleMode.parse(mode).value,
            "n": n,
            "seed": seed,
            "agent": getattr(agent, "name", type(agent).__name__),
            **config.to_dict(),
        },
        items=tuple(items),
        level_pass_rates=rates,
        competence_level=competence,
    )


def emit_report(report: EvaluationReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if fmt == "markdown":
        return _markdown_report(report)
    raise ValueError(f"unknown report format: {fmt!r} (expected json or markdown)")


def report_from_json(document: str | Mapping) -> EvaluationReport:
    """Inverse of the json emitter (lossless round trip)."""
    raw = json.loads(document) if isinstance(document, str) else dict(document)
    if raw.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {raw.get('schema_version')!r}")
    from .scoring import Evidence

    items = tuple(
        ItemResult(
            instance_id=item["instance_id"],
            level=int(item["level"]),
            kind=item["kind"],
            score=Score(
                value=float(item["value"]),
                verdict=Verdict(item["verdict"]),
                evidence=tuple(
                    Evidence(e["check_id"], e["outcome"], e["detail"]) for e in item["evidence"]
                ),
            ),
        )
        for item in raw["items"]
    )
    return EvaluationReport(
        run_id=raw["run_id"],
        started_at=raw["started_at"],
        duration_s=float(raw["duration_s"]),
        config=raw["config"],
        items=items,
        level_pass_rates={int(k): float(v) for k, v in raw["level_pass_rates"].items()},
        competence_level=int(raw["competence_level"]),
    )


def _markdown_report(report: EvaluationReport) -> str:
    lines = [
        "# Evaluation report",
        "",
        f"- run id: `{report.run_id}`",
        f"- started: {report.started_at} (duration {report.duration_s:.2f} s)",
        f"- agent: {report.config.get('agent', '?')}",
        f"- items: {len(report.items)}",
        f"- **competence level: {report.competence_level}**",
        "",
        "| Level | Items | Pass rate |",
        "|-------|-------|-----------|",
    ]
    by_level: dict[int, int] = {}
    for item in report.items:
        by_level[item.level] = by_level.get(item.level, 0) + 1
    for level in sorted(report.level_pass_rates):
        name = CognitionLevel(level).name
        lines.append(
            f"| {level} ({name}) | {by_level.get(level, 0)} | {report.level_pass_rates[level]:.0%} |"
        )
    failed = [i for i in report.items if i.score.verdict is not Verdict.Pass]
    if failed:
        lines += ["", "## Items not passed", ""]
        for item in failed:
            lines.append(
                f"- `{item.instance_id}` (L{item.level}, {item.kind}): "
                f"{item.score.verdict.value}, value {item.score.value:.2f}"
            )
            for e in item.score.evidence:
                lines.append(f"    - {e.check_id}: {e.outcome} - {e.detail}")
    return "\n".join(lines) + "\n"


def bank_fingerprint(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
