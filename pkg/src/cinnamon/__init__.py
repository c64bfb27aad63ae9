"""Confidential, INtegral aNd Authentic on-board coMmunicatiON.

A toolkit for securing classic CAN frames end to end: Chaskey MAC plus
SPECK64/128 encryption in a MAC-then-encrypt pipeline, configurable
security profiles, monotonic-counter freshness, a deterministic bus
simulator with ECU nodes and a re-authentication gateway, and an attack
harness that measures what each configuration actually mitigates.
"""

from . import attacks, bench, chaskey, codec, errors, freshness, profiles, sim, speck
from .bench import BenchReport, run_bench
from .codec import (
    CanFrame,
    assemble_authenticated,
    extract_payload_unauthenticated,
    format_candump_line,
    parse_candump_line,
    secure_frame,
    split_secured,
    verify_frame,
)
from .freshness import (
    FreshnessState,
    commit_fv,
    next_fv,
    reconstruct_fvv,
    truncate_fv,
)
from .keystore import ChannelKeys, KeyStore
from .profiles import (
    FrameLayout,
    SecurityProfile,
    builtin_profile_1,
    builtin_profile_secoc_baseline,
    load_profile,
    serialize_profile,
    validate_profile,
    with_freshness,
)
from .sim import Bus, BusEvent, Decision, EcuNode, Scenario, TraceLog, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "Bus",
    "BusEvent",
    "CanFrame",
    "ChannelKeys",
    "Decision",
    "EcuNode",
    "FrameLayout",
    "FreshnessState",
    "KeyStore",
    "Scenario",
    "SecurityProfile",
    "TraceLog",
    "assemble_authenticated",
    "attacks",
    "bench",
    "builtin_profile_1",
    "builtin_profile_secoc_baseline",
    "chaskey",
    "codec",
    "commit_fv",
    "errors",
    "extract_payload_unauthenticated",
    "format_candump_line",
    "freshness",
    "load_profile",
    "next_fv",
    "parse_candump_line",
    "profiles",
    "reconstruct_fvv",
    "run_bench",
    "run_scenario",
    "secure_frame",
    "serialize_profile",
    "sim",
    "speck",
    "split_secured",
    "truncate_fv",
    "validate_profile",
    "verify_frame",
    "with_freshness",
]
