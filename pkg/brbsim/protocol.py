"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Mapping, NamedTuple, Optional, Tuple

from .chains import (
    Message,
    ProcessId,
    SignatureChain,
    Verifier,
    View,
    choice,
    validate_chain,
)
from .constants import MODES, Mode
from .errors import ConfigurationError, FilteredInputViolation, ProtocolViolation
from .predicates import PredicatePair, max_weight
from .signatures import SigningOracle, create_chain, extend_chain

log: logging.Logger = logging.getLogger("seina.brbsim.protocol")

__all__: Tuple[str, ...] = (
    "Delivery",
    "RoundOutput",
    "ProcessState",
    "final_round_decision",
)


class Delivery(NamedTuple):
    round: int
    message: Optional[Message]  # None when nothing was decidable


@dataclass(frozen=True)
class RoundOutput:
    outgoing: FrozenSet[SignatureChain] = frozenset()
    quit: bool = False
    delivery: Optional[Delivery] = None


def final_round_decision(view: View, pair: PredicatePair, n: int) -> Optional[Message]:
    """
    Decision taken at round ``t + 1`` when no early delivery happened: the
    smallest message among those reaching the highest weight, or ``None``.
    """
    weights: Dict[Message, int] = {}
    for message in view.messages():
        weight = max_weight(pair, message, view, n)
        if weight is not None:
            weights[message] = weight
    if not weights:
        return None
    top = max(weights.values())
    return choice(message for message in view.messages() if pair.wbp(message, top, view))


class ProcessState:
    """
    One correct process running the broadcast for a single sender.

    The engine calls :meth:`sender_start` once on the sender. Every other
    process gets ``begin_round(R)`` then ``end_round(R, chains)`` for
    ``R = 1 .. t + 1`` until a round output says ``quit``.
    """

    __slots__ = (
        "me",
        "sender",
        "t",
        "n",
        "pair",
        "mode",
        "_verifier",
        "_signer",
        "_view",
        "_to_bcast",
        "_delivered",
        "_delivery",
        "_pending",
        "_quit",
        "_round",
        "_computed",
    )

    def __init__(
        self,
        me: ProcessId,
        sender: ProcessId,
        t: int,
        n: int,
        pair: PredicatePair,
        verifier: Verifier,
        signer: SigningOracle,
        *,
        mode: Mode = "immediate",
    ) -> None:
        if t < 1 or n < 2 or t >= n:
            raise ConfigurationError(f"Need 1 <= t < n and n >= 2, got n={n}, t={t}.")
        if not 1 <= me <= n or not 1 <= sender <= n:
            raise ConfigurationError(f"Process ids must lie in 1..{n}.")
        if mode not in MODES:
            raise ConfigurationError(f"Unknown delivery mode {mode!r}.")
        if me not in signer:
            raise ConfigurationError(f"Process {me} was handed a signing oracle without its key.")
        self.me: ProcessId = me
        self.sender: ProcessId = sender
        self.t: int = t
        self.n: int = n
        self.pair: PredicatePair = pair
        self.mode: Mode = mode
        self._verifier: Verifier = verifier
        self._signer: SigningOracle = signer
        self._view: View = View()
        self._to_bcast: Dict[int, FrozenSet[SignatureChain]] = {}
        self._delivered: bool = False
        self._delivery: Optional[Delivery] = None
        self._pending: Optional[Tuple[Optional[Message]]] = None
        self._quit: bool = False
        self._round: int = 0
        self._computed: bool = False

    def __repr__(self) -> str:
        return (
            f"<ProcessState me={self.me} round={self._round} "
            f"delivered={self._delivered} quit={self._quit}>"
        )

    @property
    def is_sender(self) -> bool:
        return self.me == self.sender

    @property
    def view(self) -> View:
        return self._view

    @property
    def to_bcast(self) -> Mapping[int, FrozenSet[SignatureChain]]:
        return dict(self._to_bcast)

    @property
    def delivered(self) -> bool:
        return self._delivered

    @property
    def delivery(self) -> Optional[Delivery]:
        return self._delivery

    @property
    def has_quit(self) -> bool:
        return self._quit

    @property
    def round(self) -> int:
        return self._round

    def sender_start(self, message: Message) -> RoundOutput:
        if not self.is_sender:
            raise ProtocolViolation(f"Process {self.me} is not the sender.")
        if self._round:
            raise ProtocolViolation(f"Sender {self.me} already started the broadcast.")
        chain = create_chain(self._signer, message, self.me)
        self._round = 1
        self._delivered = True
        self._delivery = Delivery(1, message)
        self._quit = True
        log.debug("Sender %d broadcasts %s.", self.me, chain)
        return RoundOutput(frozenset({chain}), True, self._delivery)

    def begin_round(self, round: int) -> RoundOutput:
        self._ensure_running(round)
        if round != self._round + 1 or (self._round and not self._computed):
            raise ProtocolViolation(
                f"Process {self.me} cannot begin round {round} after round {self._round}."
            )
        self._round = round
        self._computed = False
        outgoing = self._to_bcast.get(round, frozenset()) if round >= 2 else frozenset()
        delivery: Optional[Delivery] = None
        if self._pending is not None:
            (message,) = self._pending
            self._pending = None
            delivery = self._record(round, message)
        if self._delivered:
            self._quit = True
        return RoundOutput(outgoing, self._quit, delivery)

    def end_round(self, round: int, received: Iterable[SignatureChain]) -> RoundOutput:
        self._ensure_running(round)
        if round != self._round or self._computed:
            raise ProtocolViolation(
                f"Process {self.me} cannot end round {round} while in round {self._round}."
            )
        chains = frozenset(received)
        for chain in chains:
            if not validate_chain(chain, self.sender, round, self._verifier):
                raise FilteredInputViolation(
                    f"Process {self.me} received {chain} at round {round} unfiltered."
                )
        self._computed = True
        self._view.update(chains)
        self._to_bcast[round + 1] = frozenset(
            extend_chain(self._signer, chain, self.me)
            for chain in self._view[round]
            if self.me not in chain.signers
        )
        last = round == self.t + 1
        delivery: Optional[Delivery] = None
        known = self._view.messages()
        if len(known) == 1:
            (message,) = known
            weight = max_weight(self.pair, message, self._view, self.n)
            if weight is not None and round >= self.pair.reveal_round(weight):
                log.debug(
                    "Process %d sees %s with weight %d at round %d.",
                    self.me,
                    message,
                    weight,
                    round,
                )
                delivery = self._decide(round, message, final=last)
        if not self._delivered and last:
            delivery = self._decide(round, final_round_decision(self._view, self.pair, self.n))
        if last:
            self._quit = True
        return RoundOutput(frozenset(), self._quit, delivery)

    def _ensure_running(self, round: int) -> None:
        if self.is_sender:
            raise ProtocolViolation(f"Sender {self.me} runs no rounds after the broadcast.")
        if self._quit:
            raise ProtocolViolation(f"Process {self.me} already quit.")
        if not 1 <= round <= self.t + 1:
            raise ProtocolViolation(f"Round {round} outside 1..{self.t + 1}.")

    def _decide(
        self, round: int, message: Optional[Message], *, final: bool = True
    ) -> Optional[Delivery]:
        self._delivered = True
        if self.mode == "delayed" and not final:
            self._pending = (message,)
            return None
        return self._record(round, message)

    def _record(self, round: int, message: Optional[Message]) -> Delivery:
        if self._delivery is not None:
            raise ProtocolViolation(f"Process {self.me} already delivered.")
        self._delivery = Delivery(round, message)
        log.debug("Process %d delivers %s at round %d.", self.me, message, round)
        return self._delivery
