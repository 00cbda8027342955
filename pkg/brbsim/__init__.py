"""
MIT License

Copyright (c) 2023-present japandotorg
"""

from .adversaries import AdversaryDescriptor, build_adversary
from .chains import Message, SignatureChain, View, choice, subchain, truncate, validate_chain
from .constants import VERSION
from .errors import BRBError
from .predicates import GCLPredicate, LSPPredicate, get_predicate, max_weight
from .protocol import Delivery, ProcessState, RoundOutput, final_round_decision
from .signatures import SigningOracle, create_chain, extend_chain, keygen
from .simulator import RunTrace, ScenarioConfig, Simulator, run
from .verification import PropertyReport, run_checks

__version__: str = VERSION
__author__: str = "japandotorg"

__all__ = (
    "AdversaryDescriptor",
    "BRBError",
    "Delivery",
    "GCLPredicate",
    "LSPPredicate",
    "Message",
    "ProcessState",
    "PropertyReport",
    "RoundOutput",
    "RunTrace",
    "ScenarioConfig",
    "SignatureChain",
    "SigningOracle",
    "Simulator",
    "View",
    "build_adversary",
    "choice",
    "create_chain",
    "extend_chain",
    "final_round_decision",
    "get_predicate",
    "keygen",
    "max_weight",
    "run",
    "run_checks",
    "subchain",
    "truncate",
    "validate_chain",
)
