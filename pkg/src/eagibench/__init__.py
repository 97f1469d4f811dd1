"""eagibench: benchmark generation and automated scoring for
engineering-design AI agents, grounded in a propeller-motor matching
physics oracle."""

from .taxonomy import (
    CognitionLevel,
    ComplexityProfile,
    TagFilter,
    TagSet,
    level_profile,
    matches,
)
from .propulsion import (
    CT_DEFAULT,
    Design,
    Environment,
    PerformanceReport,
    PhysicsDomainError,
    Requirement,
    RequirementKind,
    RequirementSet,
    evaluate_design,
)
from .design_space import (
    DesignGrid,
    ObjectiveVector,
    dominates,
    enumerate_designs,
    feasible_set,
    pareto_front,
)
from .bank import (
    BankError,
    QuestionBank,
    QuestionInstance,
    QuestionTemplate,
    SampleError,
    SampleMode,
    instantiate,
    load_bank,
    load_shipped_bank,
    sample,
    shipped_bank_path,
)
from .scoring import Score, Verdict, extract, score_answer
from .harness import (
    EvaluationReport,
    OracleAgent,
    RemoteAgent,
    ReplayAgent,
    RunConfig,
    assign_competence_level,
    emit_report,
    report_from_json,
    run_evaluation,
)

__version__ = "0.1.0"

__all__ = [
    "CognitionLevel",
    "ComplexityProfile",
    "TagFilter",
    "TagSet",
    "level_profile",
    "matches",
    "CT_DEFAULT",
    "Design",
    "Environment",
    "PerformanceReport",
    "PhysicsDomainError",
    "Requirement",
    "RequirementKind",
    "RequirementSet",
    "evaluate_design",
    "DesignGrid",
    "ObjectiveVector",
    "dominates",
    "enumerate_designs",
    "feasible_set",
    "pareto_front",
    "BankError",
    "QuestionBank",
    "QuestionInstance",
    "QuestionTemplate",
    "SampleError",
    "SampleMode",
    "instantiate",
    "load_bank",
    "load_shipped_bank",
    "sample",
    "shipped_bank_path",
    "Score",
    "Verdict",
    "extract",
    "score_answer",
    "EvaluationReport",
    "OracleAgent",
    "RemoteAgent",
    "ReplayAgent",
    "RunConfig",
    "assign_competence_level",
    "emit_report",
    "report_from_json",
    "run_evaluation",
    "__version__",
]
