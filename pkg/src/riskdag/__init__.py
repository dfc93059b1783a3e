"""Bowtie-to-Bayesian-network runtime risk engine.

Pipeline: transform a Bowtie into a typed DAG with an explicit safe state,
elicit conditional probabilities through structure-derived questionnaires,
aggregate answers with noise analysis, then answer evidence and
do-intervention queries on the parameterized model.
"""

from .graph import (
    CycleError,
    Endpoint,
    Finding,
    GraphError,
    NodeKind,
    NotifyTarget,
    RiskDag,
    RiskNode,
    SAFE_STATE,
    UnknownNodeError,
    ValidationReport,
    validate,
)
from .bowtie import (
    BowtieError,
    BowtieModel,
    EscalationEvent,
    Gate,
    MitigativeBarrier,
    ModelWarning,
    PreventiveBarrier,
    TransformReport,
    TransformResult,
    mark_activation,
    synthesize_gate_cpt,
    transform,
)
from .cpt import (
    Cpt,
    CptError,
    CptRow,
    ParentConfig,
    ROW_SUM_TOL,
    RowStatus,
    RowSumError,
    complete_last_state,
    enumerate_rows,
    validate_cpts,
)
from .questions import (
    Answer,
    AnswerLedger,
    CaptureError,
    QUICK_SET_SCALE,
    Question,
    StaleCptError,
    export_answers_csv,
    generate_questions,
    import_answers_csv,
    question_id,
    quick_set,
    render_question_text,
)
from .estimators import (
    DEFAULT_KAPPA,
    ESTIMATORS,
    EstimatorConfig,
    EstimatorError,
    MaterializeReport,
    NoDataError,
    QuestionOverride,
    QuestionSummary,
    estimate_anchored_average,
    estimate_balanced_average,
    estimate_cautious_average,
    estimate_equal_average,
    estimate_expert_consensus,
    estimate_latest_answer,
    estimate_middle_value,
    half_life_weights,
    materialize_cpts,
    summarize_question,
)
from .inference import (
    ContradictionError,
    EvidenceSet,
    IncompleteCptError,
    InferenceError,
    PosteriorTable,
    joint_brute_force,
    posterior,
    prior_marginals,
)
from .causal import (
    CausalError,
    IndependenceStatement,
    Intervention,
    InterventionRanking,
    RankEntry,
    backdoor_sets,
    d_connected_trails,
    d_separated,
    do_transform,
    frontdoor_check,
    interventional_posterior,
    is_backdoor_set,
    local_independencies,
    rank_interventions,
)
from .model_io import ModelDocument, ModelIOError, export_xml, import_xml

__version__ = "0.1.0"
