"""Search engine for generalized n-player CHSH games.

Computes the best classical and best quantum winning probabilities of games
defined by Boolean winning conditions f(questions) = g(answers) over a
library of shared entangled states, and sweeps the parametric four-qubit
entanglement families.
"""

from .boolfn import (
    ANSWER_VARS,
    QUESTION_VARS,
    GameEquation,
    ParseError,
    ReducedSpace,
    TruthTable,
    canonical_representative,
    format_minterms,
    input_negation_variants,
    parse_expression,
    parse_table,
    reduce_function_space,
    relevant_variables,
    to_truth_table,
)
from .quantum import (
    FAMILY_PARAM_NAMES,
    FamilyId,
    QuantumStrategy,
    StateVector,
    UnitaryParams,
    apply_strategy,
    build_unitary,
    make_family_state,
    make_named_state,
    outcome_distribution,
    parse_state_literal,
    random_family_params,
    win_probability,
)
from .search import (
    DEFAULT_SEED,
    GAP_THRESHOLD,
    ClassicalStrategy,
    GameResult,
    OptimizerConfig,
    average_gap,
    classical_best,
    game_score,
    optimize_quantum,
    search_space,
    stratified_subsample,
)
from .sweep import FamilyReport, SweepAxis, SweepResult, SweepSpec, family_report, run_sweep

__version__ = "0.1.0"
