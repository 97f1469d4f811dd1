"""Question bank: loading, template instantiation, and sampling.

Bank files are UTF-8 JSON with a mandatory ``schema_version``.  All units
are explicit in field names (``prop_diameter_in``, ``mtow_kg``, ...); the
published schema lives in ``docs/bank-schema.md``.

Ground-truth numerics are never stored in the bank.  A numeric answer
declares which physics function produces it and how its arguments bind to
the question context; the value is computed at instantiation time so the
bank can never drift from the oracle.

Sampling is reproducible: selection uses a seeded Mersenne Twister
(``random.Random``) driving an explicit Fisher-Yates shuffle over
id-sorted candidates, so identical (bank, filter, n, mode, seed) inputs
always give identical output.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from . import propulsion
from .design_space import DesignGrid, grid_from_dict
from .propulsion import (
    CT_DEFAULT,
    Design,
    Environment,
    M_PER_IN,
    PhysicsDomainError,
    Requirement,
    RequirementKind,
    RequirementSet,
)
from .taxonomy import CognitionLevel, TagFilter, TagSet, matches

SCHEMA_VERSION = 1

#: Bank-file design keys -> (Design field, scale to SI).
DESIGN_FIELD_MAP = {
    "kv_rpm_per_volt": ("kv", 1.0),
    "current_limit_a": ("current_limit_per_motor", 1.0),
    "battery_cells": ("battery_cells", 1.0),
    "battery_voltage_v": ("battery_voltage_nominal", 1.0),
    "battery_capacity_ah": ("battery_capacity", 1.0),
    "prop_diameter_in": ("prop_diameter", M_PER_IN),
    "prop_pitch_in": ("prop_pitch", M_PER_IN),
    "n_motors": ("n_motors", 1.0),
    "mtow_kg": ("mtow", 1.0),
    "thrust_coefficient_ct": ("thrust_coefficient_ct", 1.0),
    "footprint_m": ("footprint", 1.0),
}

_INT_DESIGN_FIELDS = {"battery_cells", "n_motors"}


class BankError(ValueError):
    """Bank file rejected; message carries the failing location."""

    def __init__(self, message: str, *, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(prefix + message)


class SampleError(ValueError):
    """Requested sample exceeds the matching population."""

    def __init__(self, requested: int, population: int):
        self.requested = requested
        self.population = population
        super().__init__(
            f"requested {requested} items but only {population} match the filter"
        )


class SampleMode(enum.Enum):
    Targeted = "Targeted"
    Stratified = "Stratified"
    Curriculum = "Curriculum"

    @classmethod
    def parse(cls, value) -> "SampleMode":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown sample mode: {value!r}")


def design_from_bank(raw: Mapping, defaults: Optional[Mapping] = None) -> Design:
    """Build a Design from bank-file keys, completing from defaults."""
    merged: dict = dict(defaults or {})
    merged.update({k: v for k, v in raw.items() if v is not None})
    unknown = [k for k in merged if k not in DESIGN_FIELD_MAP]
    if unknown:
        raise KeyError(unknown[0])
    kwargs = {}
    for key, value in merged.items():
        target, scale = DESIGN_FIELD_MAP[key]
        if key in _INT_DESIGN_FIELDS:
            kwargs[target] = int(value)
        else:
            kwargs[target] = float(value) * scale
    missing = [
        k
        for k in (
            "kv",
            "current_limit_per_motor",
            "battery_cells",
            "battery_voltage_nominal",
            "battery_capacity",
            "prop_diameter",
            "prop_pitch",
            "n_motors",
            "mtow",
        )
        if k not in kwargs
    ]
    if missing:
        raise ValueError(f"design is missing required field(s): {', '.join(missing)}")
    return Design(**kwargs)


def design_to_bank(design: Design) -> dict:
    """Inverse of :func:`design_from_bank` (values back in bank units)."""
    out = {
        "kv_rpm_per_volt": design.kv,
        "current_limit_a": design.current_limit_per_motor,
        "battery_cells": design.battery_cells,
        "battery_voltage_v": design.battery_voltage_nominal,
        "battery_capacity_ah": design.battery_capacity,
        "prop_diameter_in": design.prop_diameter / M_PER_IN,
        "prop_pitch_in": design.prop_pitch / M_PER_IN,
        "n_motors": design.n_motors,
        "mtow_kg": design.mtow,
        "thrust_coefficient_ct": design.thrust_coefficient_ct,
    }
    if design.footprint is not None:
        out["footprint_m"] = design.footprint
    return out


def environment_from_bank(raw: Optional[Mapping]) -> Environment:
    raw = raw or {}
    return Environment(
        air_density=float(raw.get("air_density_kg_m3", propulsion.AIR_DENSITY_SEA_LEVEL)),
        gravity=float(raw.get("gravity_m_s2", propulsion.GRAVITY_DEFAULT)),
    )


# ---------------------------------------------------------------------------
# Ground answer specs


@dataclass(frozen=True)
class FactSpec:
    canonical: str
    accepted_aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class NumericSpec:
    value: float
    unit: str
    rel_tol: float

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 0.1):
            raise ValueError(f"Numeric rel_tol must be in (0, 0.1], got {self.rel_tol}")


@dataclass(frozen=True)
class FieldExpectation:
    name: str
    kind: str  # "number" | "text"
    expected: Any
    unit: Optional[str] = None
    rel_tol: float = 0.02
    aliases: tuple[str, ...] = ()
    match: str = "contains"  # "contains" | "exact" (text fields)


@dataclass(frozen=True)
class StructuredSpec:
    fields: tuple[FieldExpectation, ...]

    def __post_init__(self):
        if not self.fields:
            raise ValueError("Structured spec needs at least one field")


@dataclass(frozen=True)
class DiagnosisSpec:
    accepted_causes: tuple[str, ...]
    vocabulary: Mapping[str, tuple[str, ...]]  # cause id -> keyword phrases

    def __post_init__(self):
        if not self.accepted_causes:
            raise ValueError("Diagnosis accepted_causes must be non-empty")
        for cause in self.accepted_causes:
            if cause not in self.vocabulary:
                raise ValueError(f"accepted cause {cause!r} missing from cause vocabulary")


@dataclass(frozen=True)
class FixSpec:
    base_design: Design
    environment: Environment
    requirements: RequirementSet
    failing_requirement_id: str
    patchable_fields: tuple[str, ...]
    reference_patch: Mapping[str, float]
    ct_overrides: Mapping[str, float] = field(default_factory=dict)
    loaded_rpm: Optional[float] = None

    def __post_init__(self):
        self.requirements.get(self.failing_requirement_id)  # must resolve
        for key in self.reference_patch:
            if key not in self.patchable_fields:
                raise ValueError(f"reference patch key {key!r} not in patchable fields")


@dataclass(frozen=True)
class DesignSynthesisSpec:
    requirements: RequirementSet
    grid_id: str
    grid: DesignGrid
    environment: Environment
    defaults: Mapping[str, Any]
    reference_design: Design
    mtow: float
    #: Requirement set that pins the grid's feasible set (the Pareto
    #: reference).  Fixed at authoring time so that grading-side
    #: requirement changes move the constraint fraction monotonically
    #: without shifting the reference front.
    reference_requirements: Optional[RequirementSet] = None

    def __post_init__(self):
        if self.reference_requirements is None:
            object.__setattr__(self, "reference_requirements", self.requirements)


@dataclass(frozen=True)
class RubricCriterion:
    key: str
    phrases: tuple[str, ...]

    def __post_init__(self):
        if not self.phrases:
            raise ValueError(f"rubric criterion {self.key!r} has no phrases")


@dataclass(frozen=True)
class RubricSpec:
    criteria: tuple[RubricCriterion, ...]
    pass_threshold: float

    def __post_init__(self):
        if not self.criteria:
            raise ValueError("Rubric needs at least one criterion")
        if not (0.0 < self.pass_threshold <= 1.0):
            raise ValueError(f"Rubric pass_threshold must be in (0, 1], got {self.pass_threshold}")


AnswerSpec = Union[
    FactSpec, NumericSpec, StructuredSpec, DiagnosisSpec, FixSpec, DesignSynthesisSpec, RubricSpec
]

ANSWER_KINDS = {
    FactSpec: "fact",
    NumericSpec: "numeric",
    StructuredSpec: "structured",
    DiagnosisSpec: "diagnosis",
    FixSpec: "fix",
    DesignSynthesisSpec: "design",
    RubricSpec: "rubric",
}


def answer_kind(spec: AnswerSpec) -> str:
    return ANSWER_KINDS[type(spec)]


# ---------------------------------------------------------------------------
# Templates and instances


@dataclass(frozen=True)
class DesignContext:
    id: str
    summary: str
    design: Optional[Design]
    design_raw: Optional[Mapping]
    environment: Environment
    environment_raw: Mapping


@dataclass(frozen=True)
class QuestionTemplate:
    id: str
    level: CognitionLevel
    tags: TagSet
    pattern: str
    answer_raw: Mapping
    params: Mapping[str, Any] = field(default_factory=dict)
    context_ref: Optional[str] = None
    notes: str = ""


@dataclass(frozen=True)
class QuestionInstance:
    id: str
    level: CognitionLevel
    tags: TagSet
    prompt: str
    answer_spec: AnswerSpec
    provenance: Mapping[str, Any]

    @property
    def kind(self) -> str:
        return answer_kind(self.answer_spec)


@dataclass(frozen=True)
class QuestionBank:
    schema_version: int
    contexts: Mapping[str, DesignContext]
    grids_raw: Mapping[str, Mapping]
    grids: Mapping[str, DesignGrid]
    cause_vocabulary: Mapping[str, tuple[str, ...]]
    ct_overrides: Mapping[str, float]
    templates: tuple[QuestionTemplate, ...]

    def template(self, template_id: str) -> QuestionTemplate:
        for t in self.templates:
            if t.id == template_id:
                return t
        raise KeyError(template_id)

    def __len__(self):
        return len(self.templates)


# Physics functions a numeric answer may reference, with their argument order.
_ORACLE_FUNCTIONS = {
    "no_load_rpm": (propulsion.no_load_rpm, ("kv", "voltage")),
    "torque_constant": (propulsion.torque_constant, ("kv",)),
    "max_torque": (propulsion.max_torque, ("kv", "current_limit")),
    "static_thrust": (propulsion.static_thrust, ("ct", "rho", "rpm", "diameter")),
    "calibrate_ct": (propulsion.calibrate_ct, ("thrust", "rho", "rpm", "diameter")),
    "thrust_scale_factor": (propulsion.thrust_scale_factor, ("d1", "d2")),
    "required_thrust_per_motor": (
        propulsion.required_thrust_per_motor,
        ("mtow", "n_motors", "gravity"),
    ),
    "ideal_hover_power": (
        propulsion.ideal_hover_power,
        ("total_thrust", "rho", "disk_area_total", "eta"),
    ),
    "hover_endurance": (propulsion.hover_endurance, ("capacity", "voltage", "eta_batt", "power")),
    "battery_nominal_voltage": (
        lambda cells: propulsion.CELL_VOLTAGE_NOMINAL * cells,
        ("cells",),
    ),
}


def _context_namespace(context: DesignContext) -> dict:
    ns: dict = {
        "rho": context.environment.air_density,
        "g": context.environment.gravity,
    }
    design = context.design
    if design is not None:
        ns.update(
            kv=design.kv,
            current_limit_a=design.current_limit_per_motor,
            cells=design.battery_cells,
            voltage_v=design.battery_voltage_nominal,
            capacity_ah=design.battery_capacity,
            diameter_in=design.prop_diameter / M_PER_IN,
            diameter_m=design.prop_diameter,
            pitch_in=design.prop_pitch / M_PER_IN,
            pitch_m=design.prop_pitch,
            n_motors=design.n_motors,
            mtow_kg=design.mtow,
            ct=design.thrust_coefficient_ct,
        )
    return ns


def _derive(ns: dict) -> None:
    if "kv" in ns and "voltage_v" in ns:
        ns.setdefault("no_load_rpm", ns["kv"] * ns["voltage_v"])
    if "mtow_kg" in ns and "n_motors" in ns:
        ns.setdefault(
            "required_thrust_n",
            propulsion.required_thrust_per_motor(ns["mtow_kg"], int(ns["n_motors"]), ns["g"]),
        )
    if "diameter_m" in ns and "n_motors" in ns:
        ns.setdefault(
            "disk_area_m2", propulsion.disk_area_total(ns["diameter_m"], int(ns["n_motors"]))
        )


def _namespace(template: QuestionTemplate, bank: QuestionBank) -> dict:
    ns: dict = {"rho": propulsion.AIR_DENSITY_SEA_LEVEL, "g": propulsion.GRAVITY_DEFAULT}
    if template.context_ref is not None:
        context = bank.contexts.get(template.context_ref)
        if context is None:
            raise BankError(
                f"template {template.id!r} references unknown context {template.context_ref!r}"
            )
        ns.update(_context_namespace(context))
        ns["context_summary"] = context.summary
    for key, value in template.params.items():
        ns[key] = value
        if isinstance(value, (int, float)) and key.endswith("_in"):
            ns[key[: -len("_in")] + "_m"] = float(value) * M_PER_IN
    _derive(ns)
    ns.setdefault("ct", CT_DEFAULT)
    return ns


def _resolve(value: Any, ns: Mapping, where: str) -> Any:
    """Resolve "$name" references against the binding namespace."""
    if isinstance(value, str) and value.startswith("$"):
        key = value[1:]
        if key not in ns:
            raise BankError(f"{where}: unbound reference ${key}")
        return ns[key]
    return value


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def _render(pattern: str, ns: Mapping, where: str) -> str:
    rendered = {k: _fmt(v) for k, v in ns.items()}
    try:
        return pattern.format(**rendered)
    except KeyError as exc:
        raise BankError(f"{where}: unbound placeholder {{{exc.args[0]}}} in pattern") from None
    except (IndexError, ValueError) as exc:
        raise BankError(f"{where}: malformed pattern: {exc}") from None


def _requirements_from_raw(raw_reqs: Sequence[Mapping], ns: Mapping, where: str) -> RequirementSet:
    reqs = []
    for raw in raw_reqs:
        try:
            kind = RequirementKind(raw["kind"])
        except ValueError:
            raise BankError(f"{where}: unknown requirement kind {raw.get('kind')!r}") from None
        except KeyError:
            raise BankError(f"{where}: requirement missing 'kind'") from None
        bound = _resolve(raw.get("bound"), ns, where)
        if bound is None:
            raise BankError(f"{where}: requirement {raw.get('id')!r} missing 'bound'")
        reqs.append(Requirement(id=str(raw["id"]), kind=kind, bound=float(bound)))
    try:
        return RequirementSet(tuple(reqs))
    except ValueError as exc:
        raise BankError(f"{where}: {exc}") from None


def _instantiate_answer(
    template: QuestionTemplate, bank: QuestionBank, ns: dict, where: str
) -> AnswerSpec:
    raw = template.answer_raw
    kind = raw.get("kind")
    try:
        if kind == "fact":
            return FactSpec(
                canonical=str(raw["canonical"]),
                accepted_aliases=tuple(str(a) for a in raw.get("accepted_aliases", ())),
            )
        if kind == "numeric":
            oracle = raw["oracle"]
            fn_name = oracle["fn"]
            if fn_name not in _ORACLE_FUNCTIONS:
                raise BankError(f"{where}: unknown oracle function {fn_name!r}")
            fn, arg_names = _ORACLE_FUNCTIONS[fn_name]
            args = {}
            for name in arg_names:
                if name in oracle.get("args", {}):
                    args[name] = float(_resolve(oracle["args"][name], ns, where))
            try:
                value = fn(**args)
            except TypeError:
                missing = [a for a in arg_names if a not in args]
                raise BankError(
                    f"{where}: oracle {fn_name} missing argument(s): {', '.join(missing)}"
                ) from None
            except PhysicsDomainError as exc:
                raise BankError(f"{where}: oracle {fn_name}: {exc}") from None
            return NumericSpec(
                value=float(value), unit=str(raw["unit"]), rel_tol=float(raw.get("rel_tol", 0.02))
            )
        if kind == "structured":
            fields = []
            for f in raw["fields"]:
                fields.append(
                    FieldExpectation(
                        name=str(f["name"]),
                        kind=str(f.get("kind", "text")),
                        expected=_resolve(f["expected"], ns, where),
                        unit=f.get("unit"),
                        rel_tol=float(f.get("rel_tol", 0.02)),
                        aliases=tuple(str(a) for a in f.get("aliases", ())),
                        match=str(f.get("match", "contains")),
                    )
                )
            return StructuredSpec(fields=tuple(fields))
        if kind == "diagnosis":
            accepted = tuple(str(c) for c in raw["accepted_causes"])
            vocabulary = {k: tuple(v) for k, v in bank.cause_vocabulary.items()}
            extra = raw.get("extra_causes", {})
            vocabulary.update({str(k): tuple(str(p) for p in v) for k, v in extra.items()})
            return DiagnosisSpec(accepted_causes=accepted, vocabulary=vocabulary)
        if kind == "fix":
            context = bank.contexts.get(template.context_ref or "")
            if context is None or context.design is None:
                raise BankError(f"{where}: fix answers need a context with a base design")
            requirements = _requirements_from_raw(raw["requirements"], ns, where)
            patchable = tuple(raw.get("patchable_fields", tuple(DESIGN_FIELD_MAP)))
            for key in patchable:
                if key not in DESIGN_FIELD_MAP:
                    raise BankError(f"{where}: unknown patchable field {key!r}")
            loaded_rpm = raw.get("loaded_rpm")
            if loaded_rpm is not None:
                loaded_rpm = float(_resolve(loaded_rpm, ns, where))
            return FixSpec(
                base_design=context.design,
                environment=context.environment,
                requirements=requirements,
                failing_requirement_id=str(raw["failing_requirement"]),
                patchable_fields=patchable,
                reference_patch=dict(raw["reference_patch"]),
                ct_overrides=dict(bank.ct_overrides),
                loaded_rpm=loaded_rpm,
            )
        if kind == "design":
            grid_id = str(raw["grid"])
            if grid_id not in bank.grids:
                raise BankError(f"{where}: unknown grid {grid_id!r}")
            requirements = _requirements_from_raw(raw["requirements"], ns, where)
            defaults = dict(raw.get("defaults", {}))
            mtow = raw.get("mtow_kg")
            if mtow is None:
                mtow = defaults.get("mtow_kg")
            if mtow is None:
                raise BankError(f"{where}: design answers need mtow_kg (top-level or default)")
            mtow = float(_resolve(mtow, ns, where))
            defaults.setdefault("mtow_kg", mtow)
            env_raw = raw.get("environment")
            if env_raw is not None:
                environment = environment_from_bank(env_raw)
            elif template.context_ref is not None:
                environment = bank.contexts[template.context_ref].environment
            else:
                environment = Environment()
            try:
                reference = design_from_bank(raw["reference_design"], defaults)
            except (KeyError, ValueError, PhysicsDomainError) as exc:
                raise BankError(f"{where}: bad reference design: {exc}") from None
            return DesignSynthesisSpec(
                requirements=requirements,
                grid_id=grid_id,
                grid=bank.grids[grid_id],
                environment=environment,
                defaults=defaults,
                reference_design=reference,
                mtow=mtow,
            )
        if kind == "rubric":
            criteria = tuple(
                RubricCriterion(key=str(c["key"]), phrases=tuple(str(p) for p in c["phrases"]))
                for c in raw["criteria"]
            )
            return RubricSpec(criteria=criteria, pass_threshold=float(raw["pass_threshold"]))
    except BankError:
        raise
    except KeyError as exc:
        raise BankError(f"{where}: answer spec missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise BankError(f"{where}: invalid answer spec: {exc}") from None
    raise BankError(f"{where}: unknown answer kind {kind!r}")


def instantiate(template: QuestionTemplate, bank: QuestionBank) -> QuestionInstance:
    """Ground a template: render the prompt and compute the answer spec.

    Numeric ground truths are computed through the physics oracle here,
    never copied from the bank file.
    """
    where = f"template {template.id!r}"
    ns = _namespace(template, bank)
    prompt = _render(template.pattern, ns, where)
    spec = _instantiate_answer(template, bank, ns, where)
    provenance = {
        "template_id": template.id,
        "context": template.context_ref,
        "params": dict(template.params),
    }
    return QuestionInstance(
        id=template.id,
        level=template.level,
        tags=template.tags,
        prompt=prompt,
        answer_spec=spec,
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Loading


def _line_of(raw_text: Optional[str], token: str) -> Optional[int]:
    if raw_text is None:
        return None
    needle = f'"{token}"'
    for lineno, line in enumerate(raw_text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def load_bank(source: Union[str, Path, Mapping]) -> QuestionBank:
    """Parse and validate a bank document; reject the whole file on first error.

    ``source`` may be a path, a JSON string, or an already-parsed mapping.
    Every template is dry-run instantiated so that unknown tags, unbound
    placeholders, and oracle binding errors are caught at load time.
    """
    path: Optional[str] = None
    raw_text: Optional[str] = None
    if isinstance(source, Mapping):
        document = source
    else:
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
            path = str(source)
            raw_text = Path(source).read_text(encoding="utf-8")
        else:
            raw_text = str(source)
        try:
            document = json.loads(raw_text)
        except json.JSONDecodeError as exc:
            raise BankError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from None

    def fail(message: str, token: Optional[str] = None):
        raise BankError(message, path=path, line=_line_of(raw_text, token) if token else None)

    if not isinstance(document, Mapping):
        fail("bank document must be a JSON object")
    version = document.get("schema_version")
    if version is None:
        fail("missing mandatory schema_version")
    if version != SCHEMA_VERSION:
        fail(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")

    contexts: dict[str, DesignContext] = {}
    for ctx_id, raw in dict(document.get("contexts", {})).items():
        env = None
        try:
            env = environment_from_bank(raw.get("environment"))
            design = None
            if raw.get("design") is not None:
                design = design_from_bank(raw["design"])
        except KeyError as exc:
            fail(f"context {ctx_id!r}: unknown design field {exc.args[0]!r}", ctx_id)
        except (ValueError, PhysicsDomainError) as exc:
            fail(f"context {ctx_id!r}: {exc}", ctx_id)
        contexts[ctx_id] = DesignContext(
            id=ctx_id,
            summary=str(raw.get("summary", "")),
            design=design,
            design_raw=raw.get("design"),
            environment=env,
            environment_raw=raw.get("environment", {}),
        )

    grids_raw = dict(document.get("grids", {}))
    grids: dict[str, DesignGrid] = {}
    for grid_id, raw in grids_raw.items():
        try:
            grids[grid_id] = grid_from_dict(raw)
        except (KeyError, ValueError, TypeError) as exc:
            fail(f"grid {grid_id!r}: {exc}", grid_id)

    vocabulary = {
        str(k): tuple(str(p) for p in v)
        for k, v in dict(document.get("cause_vocabulary", {})).items()
    }
    ct_overrides = {str(k): float(v) for k, v in dict(document.get("ct_overrides", {})).items()}

    templates: list[QuestionTemplate] = []
    seen_ids: set[str] = set()
    for index, raw in enumerate(document.get("templates", [])):
        tid = raw.get("id")
        where = f"templates[{index}]" + (f" (id {tid!r})" if tid else "")
        if not tid:
            fail(f"{where}: missing id")
        if tid in seen_ids:
            fail(f"{where}: duplicate id", tid)
        seen_ids.add(tid)
        try:
            level = CognitionLevel.parse(raw["level"])
        except (KeyError, ValueError) as exc:
            fail(f"{where}: {exc}", tid)
        try:
            tags = TagSet.from_dict(raw["tags"])
        except KeyError as exc:
            fail(f"{where}: tags missing {exc.args[0]!r}", tid)
        except ValueError as exc:
            fail(f"{where}: {exc}", tid)
        if "pattern" not in raw:
            fail(f"{where}: missing pattern", tid)
        if not isinstance(raw.get("answer"), Mapping):
            fail(f"{where}: missing answer object", tid)
        templates.append(
            QuestionTemplate(
                id=str(tid),
                level=level,
                tags=tags,
                pattern=str(raw["pattern"]),
                answer_raw=dict(raw["answer"]),
                params=dict(raw.get("params", {})),
                context_ref=raw.get("context"),
                notes=str(raw.get("notes", "")),
            )
        )

    bank = QuestionBank(
        schema_version=int(version),
        contexts=contexts,
        grids_raw=grids_raw,
        grids=grids,
        cause_vocabulary=vocabulary,
        ct_overrides=ct_overrides,
        templates=tuple(templates),
    )

    # Dry-run instantiation: the whole file is rejected on the first error.
    for template in bank.templates:
        try:
            instantiate(template, bank)
        except BankError as exc:
            fail(str(exc), template.id)
    return bank


def shipped_bank_path() -> Path:
    """Path of the question bank distributed with the package."""
    return Path(__file__).parent / "data" / "bank.json"


def load_shipped_bank() -> QuestionBank:
    return load_bank(shipped_bank_path())


# ---------------------------------------------------------------------------
# Sampling


def _fisher_yates(items: list, rng: random.Random) -> list:
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.randrange(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def _stratified_quotas(levels: Sequence[int], populations: Mapping[int, int], n: int) -> dict:
    """Per-level quotas, as equal as possible (largest remainder, low levels first),
    then capacity-adjusted so each quota fits its level population."""
    count = len(levels)
    base, extra = divmod(n, count)
    quotas = {lvl: base + (1 if i < extra else 0) for i, lvl in enumerate(levels)}
    # Shift overflow from under-populated levels to levels with spare items.
    deficit = 0
    for lvl in levels:
        if quotas[lvl] > populations[lvl]:
            deficit += quotas[lvl] - populations[lvl]
            quotas[lvl] = populations[lvl]
    while deficit > 0:
        progressed = False
        for lvl in levels:
            if deficit == 0:
                break
            if quotas[lvl] < populations[lvl]:
                quotas[lvl] += 1
                deficit -= 1
                progressed = True
        if not progressed:  # total population < n; guarded by caller
            break
    return quotas


def sample(
    bank: QuestionBank,
    flt: TagFilter,
    n: int,
    mode: SampleMode | str,
    seed: int,
) -> list[QuestionInstance]:
    """Select and instantiate ``n`` questions matching the filter.

    Targeted: uniform without replacement, seeded.  Stratified: per-level
    quotas as equal as possible among matching levels, seeded within each
    level.  Curriculum: ascending level ordinal, ties broken by template
    id; the seed is unused.
    """
    mode = SampleMode.parse(mode)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    candidates = sorted(
        (t for t in bank.templates if matches(t.tags, t.level, flt)), key=lambda t: t.id
    )
    if n > len(candidates):
        raise SampleError(n, len(candidates))

    if mode is SampleMode.Targeted:
        rng = random.Random(seed)
        chosen = _fisher_yates(candidates, rng)[:n]
    elif mode is SampleMode.Stratified:
        rng = random.Random(seed)
        by_level: dict[int, list[QuestionTemplate]] = {}
        for t in candidates:
            by_level.setdefault(int(t.level), []).append(t)
        levels = sorted(by_level)
        quotas = _stratified_quotas(levels, {lvl: len(by_level[lvl]) for lvl in levels}, n)
        chosen = []
        for lvl in levels:
            chosen.extend(_fisher_yates(by_level[lvl], rng)[: quotas[lvl]])
    else:  # Curriculum
        chosen = sorted(candidates, key=lambda t: (int(t.level), t.id))[:n]

    return [instantiate(t, bank) for t in chosen]
