"""Simulation lab for HB+ authentication under localized key-memory faults."""

from .analytics import (
    LeakageReport,
    SurfaceGrid,
    binary_entropy,
    entropy,
    exact_bit_error,
    leakage_report,
    mutual_information,
    p_error,
    single_query_error_prob,
    surface,
)
from .attack import AttackConfig, AttackResult, break_hb_plus, majority_decide
from .faultsim import FaultableTag, KeyMemory, flip, reset, run_auth_with_faulted_key
from .hbcore import (
    AuthTranscript,
    KeyPair,
    ProtocolParams,
    RandomSource,
    RoundRecord,
    authenticate,
    inner_product,
    p_false_accept,
    p_false_reject,
    reader_expect,
    tag_respond,
)

__version__ = "0.1.0"
