"""
MIT License

Copyright (c) 2023-present japandotorg
"""

from typing import Any, Dict, Final, Literal, Tuple

__all__: Tuple[str, ...] = (
    "VERSION",
    "FORMAT_VERSION",
    "SIGNATURE_SIZE",
    "ID_SIZE",
    "LENGTH_SIZE",
    "PREDICATES",
    "MODES",
    "SCHEMES",
    "ADVERSARY_KINDS",
    "CHECKS",
    "DEFAULT_SCENARIO",
    "DEFAULT_MESSAGE",
    "FUZZ_MESSAGES",
    "CSV_HEADER",
    "EXIT_OK",
    "EXIT_VIOLATION",
    "EXIT_USAGE",
    "PredicateName",
    "Mode",
    "SchemeName",
    "AdversaryKind",
    "CheckName",
    "Verdict",
)


FORMAT_VERSION: Final[int] = 1


SIGNATURE_SIZE: Final[int] = 32
ID_SIZE: Final[int] = 4
LENGTH_SIZE: Final[int] = 4


PredicateName = Literal["lsp", "gcl"]
Mode = Literal["immediate", "delayed"]
SchemeName = Literal["digest", "ed25519"]
AdversaryKind = Literal[
    "honest",
    "silent",
    "crash",
    "equivocate",
    "late_reveal",
    "weight_forger",
    "fuzz",
]
CheckName = Literal[
    "brb",
    "latency",
    "conspicuity",
    "visibility",
    "t2",
    "liveness",
    "monotony",
]
Verdict = Literal["pass", "fail", "n/a"]


PREDICATES: Final[Tuple[PredicateName, ...]] = ("lsp", "gcl")
MODES: Final[Tuple[Mode, ...]] = ("immediate", "delayed")
SCHEMES: Final[Tuple[SchemeName, ...]] = ("digest", "ed25519")
ADVERSARY_KINDS: Final[Tuple[AdversaryKind, ...]] = (
    "honest",
    "silent",
    "crash",
    "equivocate",
    "late_reveal",
    "weight_forger",
    "fuzz",
)
CHECKS: Final[Tuple[CheckName, ...]] = (
    "brb",
    "latency",
    "conspicuity",
    "visibility",
    "t2",
    "liveness",
    "monotony",
)


DEFAULT_MESSAGE: Final[bytes] = b"m"
FUZZ_MESSAGES: Final[Tuple[bytes, bytes]] = (b"a", b"b")


DEFAULT_SCENARIO: Final[Dict[str, Any]] = {
    "sender": 1,
    "byzantine": [],
    "predicate": "gcl",
    "adversary": "honest",
    "message": DEFAULT_MESSAGE.hex(),
    "seed": 0,
    "mode": "immediate",
    "scheme": "digest",
}


CSV_HEADER: Final[Tuple[str, ...]] = (
    "n",
    "t",
    "c",
    "predicate",
    "adversary",
    "seed",
    "max_delivery_round",
    "metric1",
    "metric2",
    "brb_ok",
    "expected_round",
    "latency_ok",
)


EXIT_OK: Final[int] = 0
EXIT_VIOLATION: Final[int] = 1
EXIT_USAGE: Final[int] = 2


VERSION: Final[str] = "1.0.0"
