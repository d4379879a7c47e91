"""Data-side toolkit for depth-curriculum AMR parsing experiments.

Provides PENMAN graph handling, pointer-token linearization, depth-based
sub-graph extraction, curriculum bucket and schedule construction, and
Smatch scoring with fine-grained breakdowns.
"""

__version__ = "0.1.0"

from .graph import (  # noqa: F401
    AmrGraph,
    DanglingReference,
    DuplicateVariable,
    EmptyGraph,
    InvalidDepth,
    PenmanError,
    Triple,
    UnbalancedParens,
    Violation,
    parse_penman,
    serialize_penman,
    validate,
)
