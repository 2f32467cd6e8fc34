"""Stream-parallel skeleton calculus toolkit.

Parse pipeline/farm skeleton programs, rewrite them into the
farm-of-sequential-composition normal form, predict service time and
resource usage with ideal cost models, and validate the normal-form
dominance on a deterministic discrete-event simulation of the
implementation templates.
"""

from .core import (
    Constant,
    Farm,
    LatencyDist,
    Normal,
    Pipe,
    Program,
    SeqComp,
    SeqProfile,
    SeqRef,
    Skeleton,
    Violation,
    equivalent,
    farm,
    fringe,
    normal_form,
    pipe,
    ref,
    seqcomp,
    validate,
)
from .costmodel import (
    BudgetTooSmall,
    DominanceReport,
    IdealPerf,
    SizingPolicy,
    efficiency,
    ideal_completion_time,
    ideal_pe_count,
    ideal_service_time,
    predict,
    theorem2_check,
)
from .dsl import ParseError, SourceSpan, UnknownName, format_expr, format_program, parse, parse_expr
from .rewrite import RewriteStep, RuleId, RuleNotApplicable, applicable, apply_rule, normalize_by_rewriting
from .simulator import (
    NonEquivalentForms,
    ProcessNetwork,
    SimReport,
    Workload,
    build_network,
    pregenerate_workload,
    simulate,
    sweep,
)

__version__ = "0.1.0"
