"""Synthetic infant RSV severity cohorts and Bayesian ridge regression."""

from .cohort import (
    TABLES,
    Cohort,
    GenerationConfig,
    LabeledSample,
    PatientRecord,
    Sex,
    WeightTables,
    acceptable_weight,
    apply_variance,
    generate,
    read_dataset,
    sample_record,
    severity,
    severity_index,
    write_dataset,
)
from .errors import DegenerateTargetError, ParseError, SingularMatrixError, ValidationError
from .evalharness import (
    EvalReport,
    ExperimentReport,
    SplitSpec,
    emit_report,
    evaluate,
    mse,
    nmse,
    r2,
    run_experiment,
    train_test_split,
)
from .ridge import (
    RidgeConfig,
    RidgeModel,
    StratifiedModel,
    fit,
    fit_stratified,
    predict,
    predict_with_std,
    solve_posterior,
)
from .rng import SplitMix64
from .triage import TriagePlan, assign, build_plan

__version__ = "0.1.0"
