"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import logging
from abc import ABC, abstractmethod
from typing import ClassVar, Dict, FrozenSet, Optional, Tuple, Type

from .chains import Message, ProcessId, SignatureChain, View, set_of, subchain
from .errors import ConfigurationError

log: logging.Logger = logging.getLogger("seina.brbsim.predicates")

__all__: Tuple[str, ...] = (
    "Weight",
    "BackingSet",
    "backing_set",
    "exclusion_window",
    "wbp_lsp",
    "reveal_lsp",
    "wbp_gcl",
    "reveal_gcl",
    "max_weight",
    "PredicatePair",
    "LSPPredicate",
    "GCLPredicate",
    "PREDICATE_PAIRS",
    "get_predicate",
)


Weight = int
BackingSet = FrozenSet[ProcessId]


def backing_set(message: Message, view: View) -> BackingSet:
    """Signers at positions 1 and 2 over every chain for ``message``."""
    return set_of(subchain(chain, 1, 2) for chain in view.chains_for(message))


def exclusion_window(chain: SignatureChain, w: Weight, t: int) -> FrozenSet[ProcessId]:
    return set_of(subchain(chain, 3, t + 3 - w))


def wbp_lsp(message: Message, w: Weight, view: View) -> bool:
    return bool(view.chains_for(message))


def reveal_lsp(w: Weight, t: int) -> int:
    return t + 1


def wbp_gcl(message: Message, w: Weight, view: View, t: int) -> bool:
    """
    True when some chain for ``message`` leaves at least ``w`` members of the
    backing set outside its positions ``3 .. t + 3 - w``.
    """
    if w < 1:
        raise ValueError(f"Weights start at 1, got {w}.")
    chains = view.chains_for(message)
    backers = backing_set(message, view)
    if len(backers) < w:
        return False
    return any(len(backers - exclusion_window(chain, w, t)) >= w for chain in chains)


def reveal_gcl(w: Weight, t: int) -> int:
    return max(2, t + 3 - w)


def max_weight(pair: "PredicatePair", message: Message, view: View, n: int) -> Optional[Weight]:
    """Largest ``w`` in ``1..n`` the predicate grants ``message``, or ``None``."""
    for w in range(n, 0, -1):
        if pair.wbp(message, w, view):
            return w
    return None


class PredicatePair(ABC):
    """A weight-based predicate together with the round at which each weight becomes safe."""

    name: ClassVar[str]

    __slots__ = ("t",)

    def __init__(self, t: int) -> None:
        if t < 1:
            raise ConfigurationError(f"Predicates need t >= 1, got {t}.")
        self.t: int = t

    def __repr__(self) -> str:
        return f"<{type(self).__name__} t={self.t}>"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PredicatePair):
            return NotImplemented
        return type(self) is type(other) and self.t == other.t

    def __hash__(self) -> int:
        return hash((self.name, self.t))

    @abstractmethod
    def wbp(self, message: Message, w: Weight, view: View) -> bool:
        raise NotImplementedError()

    @abstractmethod
    def reveal_round(self, w: Weight) -> int:
        raise NotImplementedError()

    @abstractmethod
    def lambda_good(self, c: int) -> int:
        """Delivery round for every correct process when the sender is correct."""
        raise NotImplementedError()


class LSPPredicate(PredicatePair):
    name: ClassVar[str] = "lsp"

    __slots__ = ()

    def wbp(self, message: Message, w: Weight, view: View) -> bool:
        return wbp_lsp(message, w, view)

    def reveal_round(self, w: Weight) -> int:
        return reveal_lsp(w, self.t)

    def lambda_good(self, c: int) -> int:
        return self.t + 1


class GCLPredicate(PredicatePair):
    name: ClassVar[str] = "gcl"

    __slots__ = ()

    def wbp(self, message: Message, w: Weight, view: View) -> bool:
        return wbp_gcl(message, w, view, self.t)

    def reveal_round(self, w: Weight) -> int:
        return reveal_gcl(w, self.t)

    def lambda_good(self, c: int) -> int:
        return max(2, self.t + 3 - c)


PREDICATE_PAIRS: Dict[str, Type[PredicatePair]] = {
    LSPPredicate.name: LSPPredicate,
    GCLPredicate.name: GCLPredicate,
}


def get_predicate(name: str, t: int) -> PredicatePair:
    try:
        factory = PREDICATE_PAIRS[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown predicate {name!r}; expected one of {', '.join(PREDICATE_PAIRS)}."
        ) from None
    return factory(t)
