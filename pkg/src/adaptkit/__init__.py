"""adaptkit: a rule-driven context adaptation engine for assistance scenes.

A control loop monitors typed context features, evaluates named boolean
conditions over them, and executes/unexecutes adaptation rules against a
small 3D scene model, cascading update cycles until quiescence. Rule sets,
scenes, workflows, and scenarios are plain text files; replays are
deterministic and produce byte-exact traces for golden comparison.
"""

from .context import ChangeFlag, ContextCategory, ContextStore, FeatureId, load_state, save_state
from .dsl import (
    ActionCall,
    AdaptationCategory,
    ConditionDef,
    Diagnostic,
    RuleDef,
    RuleSet,
    eval_expr,
    parse_rules,
    pretty_print,
    validate,
)
from .engine import (
    DEFAULT_MAX_CASCADE_DEPTH,
    CycleReport,
    Engine,
    Trace,
    TraceEvent,
    init_engine,
)
from .errors import (
    ActionError,
    AdaptError,
    DecreasingTimestamp,
    DslSyntaxError,
    DuplicateFeatureInEvent,
    DuplicateId,
    DuplicateStep,
    EvaluationError,
    ExprTypeError,
    MalformedStateFile,
    NonQuiescent,
    ParseError,
    TypeMismatch,
    UnknownCategory,
    UnknownConditionRef,
    UnknownEffector,
    UnknownElement,
    UnknownFeature,
    UnknownProperty,
    UnknownStepRef,
    ValidationFailed,
)
from .scenario import Scenario, ScenarioEvent, Verdict, compare_traces, parse_scenario, run_scenario
from .scene import (
    DetailLevel,
    Modality,
    PropertyWrite,
    SceneElement,
    SceneModel,
    distance,
    face_user_yaw,
    parse_scene,
)
from .values import Vec3, values_equal
from .workflow import Workflow, WorkflowStep, advance, apply_step, parse_workflow

__version__ = "0.1.0"

__all__ = [
    "ActionCall",
    "ActionError",
    "AdaptError",
    "AdaptationCategory",
    "ChangeFlag",
    "ConditionDef",
    "ContextCategory",
    "ContextStore",
    "CycleReport",
    "DEFAULT_MAX_CASCADE_DEPTH",
    "DecreasingTimestamp",
    "DetailLevel",
    "Diagnostic",
    "DslSyntaxError",
    "DuplicateFeatureInEvent",
    "DuplicateId",
    "DuplicateStep",
    "Engine",
    "EvaluationError",
    "ExprTypeError",
    "FeatureId",
    "MalformedStateFile",
    "Modality",
    "NonQuiescent",
    "ParseError",
    "PropertyWrite",
    "RuleDef",
    "RuleSet",
    "Scenario",
    "ScenarioEvent",
    "SceneElement",
    "SceneModel",
    "Trace",
    "TraceEvent",
    "TypeMismatch",
    "UnknownCategory",
    "UnknownConditionRef",
    "UnknownEffector",
    "UnknownElement",
    "UnknownFeature",
    "UnknownProperty",
    "UnknownStepRef",
    "ValidationFailed",
    "Vec3",
    "Verdict",
    "Workflow",
    "WorkflowStep",
    "advance",
    "apply_step",
    "compare_traces",
    "distance",
    "eval_expr",
    "face_user_yaw",
    "init_engine",
    "load_state",
    "parse_rules",
    "parse_scenario",
    "parse_scene",
    "parse_workflow",
    "pretty_print",
    "run_scenario",
    "save_state",
    "validate",
    "values_equal",
]
