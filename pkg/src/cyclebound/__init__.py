"""Cycle bounds, cycle equation solving and exhaustive cycle search for the
shortcut Collatz map."""

from .algebra import (
    BoundPair,
    CycleCertificate,
    CycleEquationResult,
    ExponentSeq,
    VerificationReport,
    canonicalize_cycle,
    check_admissible,
    cycle_equation_solve,
    expand_fk,
    horizon,
    max_bound,
    min_bound,
    verify_certificate,
)
from .maps import Step, Trajectory, Variant, collatz_step, inverse_step, iterate, shortcut_step, v2
from .search import (
    CheckpointMismatch,
    SearchConfig,
    SearchReport,
    run,
    search_exponent_sequences,
    search_negative_cycles,
    search_positive_cycles,
)

__version__ = "0.1.0"
