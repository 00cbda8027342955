"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import dataclasses
import logging
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import (
    TYPE_CHECKING,
    Any,
    ClassVar,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Tuple,
    Type,
)

from .chains import Link, Message, ProcessId, SignatureChain, View, validate_chain
from .constants import ADVERSARY_KINDS, FUZZ_MESSAGES, AdversaryKind
from .converters import fuzzy_choice, parse_hex, parse_ids
from .errors import ConfigurationError
from .predicates import PredicatePair
from .protocol import ProcessState
from .signatures import SigningOracle

if TYPE_CHECKING:
    from .simulator import ScenarioConfig

log: logging.Logger = logging.getLogger("seina.brbsim.adversaries")

__all__: Tuple[str, ...] = (
    "Emission",
    "AdversaryDescriptor",
    "AdversaryContext",
    "Adversary",
    "HonestAdversary",
    "SilentAdversary",
    "CrashAdversary",
    "EquivocateAdversary",
    "LateRevealAdversary",
    "WeightForgerAdversary",
    "FuzzAdversary",
    "ADVERSARIES",
    "build_adversary",
)


Emission = Dict[ProcessId, Dict[ProcessId, FrozenSet[SignatureChain]]]


PARAMETERS: Dict[str, Tuple[str, ...]] = {
    "honest": (),
    "silent": (),
    "crash": ("process", "round"),
    "equivocate": ("m_a", "m_b", "partition"),
    "late_reveal": ("target_weight", "target_round", "victim", "m_a", "m_b"),
    "weight_forger": ("forged_weight", "m_a", "m_b"),
    "fuzz": ("seed", "m_a", "m_b"),
}

_BYTES_PARAMETERS: FrozenSet[str] = frozenset({"m_a", "m_b"})
_SET_PARAMETERS: FrozenSet[str] = frozenset({"partition"})


def _half(ids: Tuple[ProcessId, ...]) -> FrozenSet[ProcessId]:
    return frozenset(ids[: (len(ids) + 1) // 2])


@dataclass(frozen=True)
class AdversaryDescriptor:
    """
    What the Byzantine coalition does, written ``kind:key=value,...`` on the
    command line. Messages are hex, id sets use ``+`` (``partition=2+3``).
    """

    kind: AdversaryKind = "honest"
    process: Optional[int] = None
    round: Optional[int] = None
    m_a: bytes = FUZZ_MESSAGES[0]
    m_b: bytes = FUZZ_MESSAGES[1]
    partition: Optional[FrozenSet[int]] = None
    target_weight: Optional[int] = None
    target_round: Optional[int] = None
    victim: Optional[int] = None
    forged_weight: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ADVERSARY_KINDS:
            fuzzy_choice(self.kind, ADVERSARY_KINDS, "adversary")
        if self.partition is not None:
            object.__setattr__(self, "partition", frozenset(self.partition))
        unused = [
            field.name
            for field in dataclasses.fields(self)
            if field.name != "kind"
            and field.name not in PARAMETERS[self.kind]
            and getattr(self, field.name) != field.default
        ]
        if unused:
            raise ConfigurationError(f"{self.kind} takes no {', '.join(unused)} parameter.")

    def __str__(self) -> str:
        return self.to_string()

    @classmethod
    def parse(cls, text: str) -> "AdversaryDescriptor":
        kind, _, rest = text.strip().partition(":")
        kind = fuzzy_choice(kind.strip(), ADVERSARY_KINDS, "adversary")
        accepted = PARAMETERS[kind]
        params: Dict[str, Any] = {}
        for item in filter(None, (part.strip() for part in rest.split(","))):
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigurationError(f"Expected key=value in {item!r}.")
            if not accepted:
                raise ConfigurationError(f"{kind} takes no parameters.")
            key = fuzzy_choice(key.strip(), accepted, f"{kind} parameter")
            value = value.strip()
            if key in _BYTES_PARAMETERS:
                params[key] = parse_hex(value)
            elif key in _SET_PARAMETERS:
                params[key] = parse_ids(value)
            else:
                try:
                    params[key] = int(value)
                except ValueError:
                    raise ConfigurationError(f"{key} must be an integer, got {value!r}.") from None
        return cls(kind=kind, **params)

    def to_string(self) -> str:
        parts: List[str] = []
        defaults = {field.name: field.default for field in dataclasses.fields(self)}
        for key in PARAMETERS[self.kind]:
            value = getattr(self, key)
            if value == defaults[key]:
                continue
            if key in _BYTES_PARAMETERS:
                parts.append(f"{key}={value.hex()}")
            elif key in _SET_PARAMETERS:
                parts.append(f"{key}={'+'.join(str(pid) for pid in sorted(value))}")
            else:
                parts.append(f"{key}={value}")
        return self.kind + (":" + ",".join(parts) if parts else "")

    def validate(self, config: "ScenarioConfig") -> None:
        byzantine = config.byzantine
        correct = frozenset(config.correct)
        last = config.t + 1
        if self.kind == "crash":
            if self.process is None or self.process not in byzantine:
                raise ConfigurationError("crash needs process=<id> naming a Byzantine process.")
            if self.round is not None and not 1 <= self.round <= last:
                raise ConfigurationError(f"crash round must lie in 1..{last}.")
        elif self.kind == "equivocate":
            if config.sender not in byzantine:
                raise ConfigurationError("equivocate needs a Byzantine sender.")
            if self.partition is not None and not self.partition <= correct:
                raise ConfigurationError("equivocate partition must only hold correct ids.")
        elif self.kind == "late_reveal":
            if self.target_round is not None and not 1 <= self.target_round <= last:
                raise ConfigurationError(f"late_reveal target_round must lie in 1..{last}.")
            if self.target_weight is not None and not 1 <= self.target_weight <= last:
                raise ConfigurationError(f"late_reveal target_weight must lie in 1..{last}.")
            if self.victim is not None and (
                self.victim not in correct or self.victim == config.sender
            ):
                raise ConfigurationError("late_reveal victim must be a correct non-sender.")
        elif self.kind == "weight_forger":
            if self.forged_weight is not None and not 1 <= self.forged_weight <= last:
                raise ConfigurationError(f"weight_forger forged_weight must lie in 1..{last}.")
        if self.kind in ("equivocate", "late_reveal", "weight_forger", "fuzz"):
            if self.m_a == self.m_b:
                raise ConfigurationError(f"{self.kind} needs two distinct messages.")


@dataclass
class AdversaryContext:
    config: "ScenarioConfig"
    oracle: SigningOracle
    pair: PredicatePair


class Adversary(ABC):
    """
    Base class for Byzantine coalitions.

    Per round the engine calls :meth:`rush` with the chains correct processes
    address to Byzantine ids, then :meth:`emit`, then :meth:`observe` with the
    complete Byzantine inboxes.
    """

    kind: ClassVar[AdversaryKind]

    def __init__(self, descriptor: AdversaryDescriptor, ctx: AdversaryContext) -> None:
        self.descriptor: AdversaryDescriptor = descriptor
        self.ctx: AdversaryContext = ctx
        self.config: "ScenarioConfig" = ctx.config
        self.oracle: SigningOracle = ctx.oracle
        self.sender: ProcessId = ctx.config.sender
        self.byzantine: Tuple[ProcessId, ...] = tuple(sorted(ctx.config.byzantine))
        self.correct: Tuple[ProcessId, ...] = ctx.config.correct
        self.members: Tuple[ProcessId, ...] = ctx.config.members
        self.known: View = View()

    def __repr__(self) -> str:
        return f"<{type(self).__name__} byzantine={list(self.byzantine)}>"

    @property
    def sender_byzantine(self) -> bool:
        return self.sender in self.byzantine

    @property
    def coalition(self) -> Tuple[ProcessId, ...]:
        """Byzantine ids, the sender first when it belongs to them."""
        if not self.sender_byzantine:
            return self.byzantine
        return (self.sender,) + tuple(pid for pid in self.byzantine if pid != self.sender)

    def rush(self, round: int, inbound: Mapping[ProcessId, FrozenSet[SignatureChain]]) -> None:
        self._learn(round, (chain for chains in inbound.values() for chain in chains))

    def observe(self, round: int, inbox: Mapping[ProcessId, FrozenSet[SignatureChain]]) -> None:
        self._learn(round, (chain for chains in inbox.values() for chain in chains))

    @abstractmethod
    def emit(self, round: int) -> Emission:
        raise NotImplementedError()

    def _learn(self, round: int, chains: Iterable[SignatureChain]) -> None:
        for chain in chains:
            if validate_chain(chain, self.sender, round, self.oracle):
                self.known.add(chain)

    @staticmethod
    def _send(
        emission: Emission,
        source: ProcessId,
        targets: Iterable[ProcessId],
        chains: Iterable[SignatureChain],
    ) -> None:
        batch = frozenset(chains)
        if not batch:
            return
        outbox = emission.setdefault(source, {})
        for target in targets:
            outbox[target] = outbox.get(target, frozenset()) | batch

    def _forward(
        self, emission: Emission, round: int, *, exclude: Iterable[Message] = ()
    ) -> None:
        """Every non-sender Byzantine id signs and forwards what it saw last round."""
        if round < 2:
            return
        skipped = frozenset(exclude)
        pool = [chain for chain in self.known[round - 1] if chain.message not in skipped]
        released: List[SignatureChain] = []
        for pid in self.byzantine:
            if pid == self.sender:
                continue
            chains = [self.oracle.extend(chain, pid) for chain in pool if pid not in chain.signers]
            self._send(emission, pid, self.correct, chains)
            released.extend(chains)
        self.known.update(released)


class HonestAdversary(Adversary):
    """Byzantine ids that run the protocol like everybody else."""

    kind: ClassVar[AdversaryKind] = "honest"

    def __init__(self, descriptor: AdversaryDescriptor, ctx: AdversaryContext) -> None:
        super().__init__(descriptor, ctx)
        config = ctx.config
        self.states: Dict[ProcessId, ProcessState] = {
            pid: ProcessState(
                pid,
                config.sender,
                config.t,
                config.n,
                ctx.pair,
                self.oracle,
                self.oracle.restrict({pid}),
                mode=config.mode,
            )
            for pid in self.byzantine
        }
        self._computing: List[ProcessId] = []

    def _active(self, pid: ProcessId, round: int) -> bool:
        return True

    def emit(self, round: int) -> Emission:
        emission: Emission = {}
        self._computing = []
        for pid, state in sorted(self.states.items()):
            if state.has_quit or not self._active(pid, round):
                continue
            if state.is_sender:
                output = state.sender_start(Message(self.config.message))
            else:
                output = state.begin_round(round)
            self._send(emission, pid, self.members, output.outgoing)
            if not output.quit:
                self._computing.append(pid)
        return emission

    def observe(self, round: int, inbox: Mapping[ProcessId, FrozenSet[SignatureChain]]) -> None:
        super().observe(round, inbox)
        for pid in self._computing:
            accepted = [
                chain
                for chain in inbox.get(pid, frozenset())
                if validate_chain(chain, self.sender, round, self.oracle)
            ]
            self.states[pid].end_round(round, accepted)


class SilentAdversary(Adversary):
    kind: ClassVar[AdversaryKind] = "silent"

    def emit(self, round: int) -> Emission:
        return {}


class CrashAdversary(HonestAdversary):
    """Honest until ``round``, after which ``process`` neither sends nor computes."""

    kind: ClassVar[AdversaryKind] = "crash"

    def _active(self, pid: ProcessId, round: int) -> bool:
        crash_round = self.descriptor.round or 1
        return not (pid == self.descriptor.process and round >= crash_round)


class EquivocateAdversary(Adversary):
    kind: ClassVar[AdversaryKind] = "equivocate"

    def __init__(self, descriptor: AdversaryDescriptor, ctx: AdversaryContext) -> None:
        super().__init__(descriptor, ctx)
        if descriptor.partition is not None:
            self.group_a: FrozenSet[ProcessId] = descriptor.partition
        else:
            self.group_a = _half(self.correct)
        self.group_b: FrozenSet[ProcessId] = frozenset(self.correct) - self.group_a

    def emit(self, round: int) -> Emission:
        emission: Emission = {}
        if round == 1:
            halves = ((self.descriptor.m_a, self.group_a), (self.descriptor.m_b, self.group_b))
            for payload, group in halves:
                if not group:
                    continue
                chain = self.oracle.root(Message(payload), self.sender)
                self._send(emission, self.sender, sorted(group), {chain})
                self.known.add(chain)
            return emission
        self._forward(emission, round)
        return emission


class LateRevealAdversary(Adversary):
    """
    The sender publishes ``m_a`` and the coalition backs it, while a
    Byzantine-only chain for ``m_b`` goes to a single victim as late as its
    length allows.
    """

    kind: ClassVar[AdversaryKind] = "late_reveal"

    def __init__(self, descriptor: AdversaryDescriptor, ctx: AdversaryContext) -> None:
        super().__init__(descriptor, ctx)
        self.public: Message = Message(descriptor.m_a)
        self.hidden: Message = Message(descriptor.m_b)
        depth = min(len(self.coalition), self.config.t + 1)
        self.release_round: int = min(descriptor.target_round or depth, depth)
        weight = descriptor.target_weight or len(self.coalition)
        self.backers: Tuple[ProcessId, ...] = self.coalition[1:][: max(0, weight - 1)]
        non_senders = [pid for pid in self.correct if pid != self.sender]
        self.victim: Optional[ProcessId] = descriptor.victim or min(non_senders, default=None)

    def hidden_chains(self) -> List[SignatureChain]:
        root = self.oracle.root(self.hidden, self.sender)
        if self.release_round == 1:
            return [root]
        chains: List[SignatureChain] = []
        for backer in self.backers or self.coalition[1:2]:
            rest = [pid for pid in self.coalition if pid not in (self.sender, backer)]
            chain = self.oracle.extend(root, backer)
            for pid in rest[: self.release_round - 2]:
                chain = self.oracle.extend(chain, pid)
            if len(chain) == self.release_round:
                chains.append(chain)
        return chains

    def emit(self, round: int) -> Emission:
        emission: Emission = {}
        if not self.sender_byzantine:
            self._forward(emission, round)
            return emission
        if round == 1:
            chain = self.oracle.root(self.public, self.sender)
            self._send(emission, self.sender, self.correct, {chain})
            self.known.add(chain)
        self._forward(emission, round, exclude={self.hidden})
        if round == self.release_round and self.victim is not None:
            for chain in self.hidden_chains():
                self._send(emission, chain.last_signer, {self.victim}, {chain})
            log.debug("Released %s to process %d at round %d.", self.hidden, self.victim, round)
        return emission


class WeightForgerAdversary(Adversary):
    """
    Spend the coalition's signatures on backing ``m_b`` in round 2, shown to
    half of the correct processes only.
    """

    kind: ClassVar[AdversaryKind] = "weight_forger"

    def __init__(self, descriptor: AdversaryDescriptor, ctx: AdversaryContext) -> None:
        super().__init__(descriptor, ctx)
        self.public: Message = Message(descriptor.m_a)
        self.hidden: Message = Message(descriptor.m_b)
        weight = descriptor.forged_weight or len(self.coalition)
        self.backers: Tuple[ProcessId, ...] = self.coalition[1:][: max(0, weight - 1)]
        self.targets: FrozenSet[ProcessId] = _half(self.correct)

    def emit(self, round: int) -> Emission:
        emission: Emission = {}
        if not self.sender_byzantine:
            self._forward(emission, round)
            return emission
        if round == 1:
            chain = self.oracle.root(self.public, self.sender)
            self._send(emission, self.sender, self.correct, {chain})
            self.known.add(chain)
            return emission
        self._forward(emission, round, exclude={self.hidden})
        if round == 2:
            root = self.oracle.root(self.hidden, self.sender)
            for backer in self.backers:
                chain = self.oracle.extend(root, backer)
                self._send(emission, backer, sorted(self.targets), {chain})
        return emission


class FuzzAdversary(Adversary):
    """
    Seeded random emissions: valid extensions picked per recipient, plus the
    occasional chain the reception filter must drop.
    """

    kind: ClassVar[AdversaryKind] = "fuzz"

    max_candidates: ClassVar[int] = 12
    junk_rate: ClassVar[float] = 0.1

    def __init__(self, descriptor: AdversaryDescriptor, ctx: AdversaryContext) -> None:
        super().__init__(descriptor, ctx)
        seed = descriptor.seed if descriptor.seed is not None else ctx.config.seed
        self.rng: random.Random = random.Random(seed)
        self.messages: Tuple[Message, ...] = (Message(descriptor.m_a), Message(descriptor.m_b))

    def _candidates(self, round: int) -> List[SignatureChain]:
        if round == 1:
            if not self.sender_byzantine:
                return []
            return [self.oracle.root(message, self.sender) for message in self.messages]
        pool = sorted(self.known[round - 1], key=lambda chain: chain.sort_key)
        pairs = [
            (chain, pid) for chain in pool for pid in self.byzantine if pid not in chain.signers
        ]
        if len(pairs) > self.max_candidates:
            pairs = self.rng.sample(pairs, self.max_candidates)
        return [self.oracle.extend(chain, pid) for chain, pid in pairs]

    def _junk(self, round: int, candidates: List[SignatureChain]) -> Optional[SignatureChain]:
        pick = self.rng.randrange(3)
        if pick == 0 and candidates:
            chain = self.rng.choice(candidates)
            return self.oracle.append_unchecked(chain, chain.last_signer)
        if pick == 1 and candidates:
            chain = self.rng.choice(candidates)
            last = chain.links[-1]
            broken = bytes([last.signature[0] ^ 0xFF]) + last.signature[1:]
            return SignatureChain(chain.message, chain.links[:-1] + (Link(last.signer, broken),))
        stale = sorted(self.known[round - 1], key=lambda chain: chain.sort_key)
        return self.rng.choice(stale) if stale else None

    def emit(self, round: int) -> Emission:
        emission: Emission = {}
        if not self.byzantine:
            return emission
        candidates = self._candidates(round)
        released: List[SignatureChain] = []
        for target in self.correct:
            chosen = [chain for chain in candidates if self.rng.random() < 0.5]
            for chain in chosen:
                self._send(emission, chain.last_signer, {target}, {chain})
            released.extend(chosen)
            if self.rng.random() < self.junk_rate:
                junk = self._junk(round, candidates)
                if junk is not None:
                    self._send(emission, self.byzantine[0], {target}, {junk})
        self.known.update(released)
        return emission


ADVERSARIES: Dict[str, Type[Adversary]] = {
    cls.kind: cls
    for cls in (
        HonestAdversary,
        SilentAdversary,
        CrashAdversary,
        EquivocateAdversary,
        LateRevealAdversary,
        WeightForgerAdversary,
        FuzzAdversary,
    )
}


def build_adversary(descriptor: AdversaryDescriptor, ctx: AdversaryContext) -> Adversary:
    descriptor.validate(ctx.config)
    adversary = ADVERSARIES[descriptor.kind](descriptor, ctx)
    log.debug("Built %r from %s.", adversary, descriptor)
    return adversary
