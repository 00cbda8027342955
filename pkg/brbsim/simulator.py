"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import dataclasses
import functools
import json
import logging
from dataclasses import dataclass, field
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Set,
    Tuple,
    Union,
)

import arrow

from .adversaries import AdversaryContext, AdversaryDescriptor, build_adversary
from .chains import Message, ProcessId, SignatureChain, View, validate_chain
from .constants import (
    DEFAULT_MESSAGE,
    DEFAULT_SCENARIO,
    FORMAT_VERSION,
    MODES,
    PREDICATES,
    SCHEMES,
    VERSION,
    Mode,
    PredicateName,
    SchemeName,
)
from .converters import fuzzy_choice, parse_hex
from .errors import (
    AdversaryContractError,
    BRBError,
    ConfigurationError,
    MalformedTraceError,
)
from .predicates import PredicatePair, get_predicate
from .protocol import ProcessState
from .signatures import SignatureScheme, keygen
from .utils import format_ids, log_exceptions

log: logging.Logger = logging.getLogger("seina.brbsim.simulator")

__all__: Tuple[str, ...] = (
    "ScenarioConfig",
    "Metrics",
    "Send",
    "DeliveryRecord",
    "RoundRecord",
    "RunTrace",
    "Simulator",
    "run",
    "good_case_message_count",
    "good_case_signature_bound",
)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    t: int
    sender: ProcessId = 1
    byzantine: FrozenSet[ProcessId] = frozenset()
    predicate: PredicateName = "gcl"
    adversary: AdversaryDescriptor = field(default_factory=AdversaryDescriptor)
    message: bytes = DEFAULT_MESSAGE
    seed: int = 0
    mode: Mode = "immediate"
    scheme: SchemeName = "digest"

    def __post_init__(self) -> None:
        object.__setattr__(self, "byzantine", frozenset(self.byzantine))
        if isinstance(self.adversary, str):
            object.__setattr__(self, "adversary", AdversaryDescriptor.parse(self.adversary))

    def __str__(self) -> str:
        return (
            f"n={self.n} t={self.t} sender={self.sender} byzantine={format_ids(self.byzantine)} "
            f"predicate={self.predicate} adversary={self.adversary} seed={self.seed}"
        )

    @functools.cached_property
    def members(self) -> Tuple[ProcessId, ...]:
        return tuple(range(1, self.n + 1))

    @functools.cached_property
    def correct(self) -> Tuple[ProcessId, ...]:
        return tuple(pid for pid in self.members if pid not in self.byzantine)

    @property
    def c(self) -> int:
        return self.n - len(self.byzantine)

    @property
    def sender_correct(self) -> bool:
        return self.sender not in self.byzantine

    def validate(self) -> None:
        if self.n < 2:
            raise ConfigurationError(f"Need at least 2 processes, got n={self.n}.")
        if not 1 <= self.t < self.n:
            raise ConfigurationError(f"Need 1 <= t < n, got t={self.t} with n={self.n}.")
        if not 1 <= self.sender <= self.n:
            raise ConfigurationError(f"Sender {self.sender} is not in 1..{self.n}.")
        outside = sorted(pid for pid in self.byzantine if not 1 <= pid <= self.n)
        if outside:
            raise ConfigurationError(f"Byzantine ids {outside} are not in 1..{self.n}.")
        if len(self.byzantine) > self.t:
            raise ConfigurationError(
                f"{len(self.byzantine)} Byzantine processes exceed t={self.t}."
            )
        fuzzy_choice(self.predicate, PREDICATES, "predicate")
        fuzzy_choice(self.mode, MODES, "mode")
        fuzzy_choice(self.scheme, SCHEMES, "scheme")
        self.adversary.validate(self)

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "t": self.t,
            "sender": self.sender,
            "byzantine": sorted(self.byzantine),
            "predicate": self.predicate,
            "adversary": self.adversary.to_string(),
            "message": self.message.hex(),
            "seed": self.seed,
            "mode": self.mode,
            "scheme": self.scheme,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        known = ("n", "t", *DEFAULT_SCENARIO)
        for key in data:
            fuzzy_choice(key, known, "scenario key")
        merged = {**DEFAULT_SCENARIO, **data}
        missing = [key for key in ("n", "t") if merged.get(key) is None]
        if missing:
            raise ConfigurationError(f"Scenario is missing {', '.join(missing)}.")
        try:
            return cls(
                n=int(merged["n"]),
                t=int(merged["t"]),
                sender=int(merged["sender"]),
                byzantine=frozenset(int(pid) for pid in merged["byzantine"]),
                predicate=str(merged["predicate"]),
                adversary=AdversaryDescriptor.parse(str(merged["adversary"])),
                message=parse_hex(str(merged["message"])),
                seed=int(merged["seed"]),
                mode=str(merged["mode"]),
                scheme=str(merged["scheme"]),
            )
        except (TypeError, ValueError) as error:
            raise ConfigurationError(f"Malformed scenario: {error}") from error


@dataclass
class Metrics:
    correct_messages_sent: int = 0
    correct_signatures_sent: int = 0
    delivery_rounds: Dict[ProcessId, int] = field(default_factory=dict)
    rejected_chains: int = 0
    rounds_executed: int = 0

    @property
    def max_delivery_round(self) -> Optional[int]:
        return max(self.delivery_rounds.values(), default=None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "correct_messages_sent": self.correct_messages_sent,
            "correct_signatures_sent": self.correct_signatures_sent,
            "delivery_rounds": {str(pid): r for pid, r in sorted(self.delivery_rounds.items())},
            "rejected_chains": self.rejected_chains,
            "rounds_executed": self.rounds_executed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Metrics":
        return cls(
            correct_messages_sent=int(data["correct_messages_sent"]),
            correct_signatures_sent=int(data["correct_signatures_sent"]),
            delivery_rounds={int(pid): int(r) for pid, r in data["delivery_rounds"].items()},
            rejected_chains=int(data.get("rejected_chains", 0)),
            rounds_executed=int(data.get("rounds_executed", 0)),
        )


def _chain_list(chains: Iterable[SignatureChain]) -> List[Dict[str, Any]]:
    return [chain.to_dict() for chain in sorted(chains, key=lambda chain: chain.sort_key)]


def _chain_set(items: Iterable[Mapping[str, Any]]) -> FrozenSet[SignatureChain]:
    return frozenset(SignatureChain.from_dict(dict(item)) for item in items)


class Send(NamedTuple):
    source: ProcessId
    target: ProcessId
    chains: FrozenSet[SignatureChain]

    def to_dict(self) -> Dict[str, Any]:
        return {"from": self.source, "to": self.target, "chains": _chain_list(self.chains)}


class DeliveryRecord(NamedTuple):
    process: ProcessId
    round: int
    message: Optional[Message]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "process": self.process,
            "round": self.round,
            "message": None if self.message is None else self.message.hex,
        }


@dataclass
class RoundRecord:
    round: int
    sends: List[Send] = field(default_factory=list)
    received: Dict[ProcessId, FrozenSet[SignatureChain]] = field(default_factory=dict)
    deliveries: List[DeliveryRecord] = field(default_factory=list)
    quit: List[ProcessId] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "round": self.round,
            "sends": [send.to_dict() for send in self.sends],
            "received": {
                str(pid): _chain_list(chains) for pid, chains in sorted(self.received.items())
            },
            "deliveries": [delivery.to_dict() for delivery in self.deliveries],
            "quit": sorted(self.quit),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RoundRecord":
        return cls(
            round=int(data["round"]),
            sends=[
                Send(int(item["from"]), int(item["to"]), _chain_set(item["chains"]))
                for item in data["sends"]
            ],
            received={int(pid): _chain_set(items) for pid, items in data["received"].items()},
            deliveries=[
                DeliveryRecord(
                    int(item["process"]),
                    int(item["round"]),
                    None if item["message"] is None else Message.from_hex(item["message"]),
                )
                for item in data["deliveries"]
            ],
            quit=[int(pid) for pid in data.get("quit", [])],
        )


@dataclass
class RunTrace:
    """
    Everything one run produced. Only correct processes have ``received``
    entries and deliveries; ``sends`` also holds what the adversary emitted.
    """

    config: ScenarioConfig
    rounds: List[RoundRecord] = field(default_factory=list)
    metrics: Metrics = field(default_factory=Metrics)
    _views: Dict[ProcessId, Dict[int, View]] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    @property
    def deliveries(self) -> List[DeliveryRecord]:
        return [delivery for record in self.rounds for delivery in record.deliveries]

    @property
    def last_round(self) -> int:
        return self.rounds[-1].round if self.rounds else 0

    def record(self, round: int) -> Optional[RoundRecord]:
        for record in self.rounds:
            if record.round == round:
                return record
        return None

    def deliveries_of(self, pid: ProcessId) -> List[DeliveryRecord]:
        return [delivery for delivery in self.deliveries if delivery.process == pid]

    def delivery_of(self, pid: ProcessId) -> Optional[DeliveryRecord]:
        deliveries = self.deliveries_of(pid)
        return deliveries[0] if deliveries else None

    def executed(self, pid: ProcessId, round: int) -> bool:
        """Whether ``pid`` ran the computation step of ``round``."""
        record = self.record(round)
        return record is not None and pid in record.received

    def executed_rounds(self, pid: ProcessId) -> Tuple[int, ...]:
        return tuple(record.round for record in self.rounds if pid in record.received)

    def views(self, pid: ProcessId) -> Dict[int, View]:
        cached = self._views.get(pid)
        if cached is None:
            cached = {}
            view = View()
            for record in self.rounds:
                if pid not in record.received:
                    continue
                view.update(record.received[pid])
                cached[record.round] = view.copy()
            self._views[pid] = cached
        return cached

    def view_at(self, pid: ProcessId, round: int) -> Optional[View]:
        """The view ``pid`` held after computing ``round``, or ``None`` if it never did."""
        return self.views(pid).get(round)

    def to_dict(self, *, meta: bool = True) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "rounds": [record.to_dict() for record in self.rounds],
            "metrics": self.metrics.to_dict(),
        }
        if meta:
            document["meta"] = {
                "generated_at": arrow.utcnow().isoformat(),
                "generator": f"brbsim {VERSION}",
            }
        return document

    def to_json(self, *, meta: bool = True) -> str:
        return json.dumps(self.to_dict(meta=meta), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunTrace":
        if not isinstance(data, Mapping):
            raise MalformedTraceError("A trace document must be a JSON object.")
        version = data.get("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise MalformedTraceError(f"Unsupported trace format version {version!r}.")
        try:
            config = ScenarioConfig.from_dict(data["config"])
            config.validate()
            rounds = [RoundRecord.from_dict(item) for item in data["rounds"]]
            metrics = Metrics.from_dict(data["metrics"])
        except KeyError as error:
            raise MalformedTraceError(f"Trace is missing {error}.") from None
        except (BRBError, AttributeError, TypeError, ValueError) as error:
            if isinstance(error, MalformedTraceError):
                raise
            raise MalformedTraceError(f"Trace cannot be decoded: {error}") from error
        trace = cls(config, rounds, metrics)
        trace.check_consistency()
        return trace

    @classmethod
    def from_json(cls, text: Union[str, bytes]) -> "RunTrace":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as error:
            raise MalformedTraceError(f"Trace is not valid JSON: {error}") from error
        return cls.from_dict(data)

    def check_consistency(self) -> None:
        members = frozenset(self.config.members)
        last = self.config.t + 1
        for record in self.rounds:
            if not 1 <= record.round <= last:
                raise MalformedTraceError(f"Round {record.round} is outside 1..{last}.")
            for pid in record.received:
                if pid not in self.config.correct:
                    raise MalformedTraceError(f"Process {pid} is not a correct process.")
            for delivery in record.deliveries:
                if delivery.process not in members or delivery.round != record.round:
                    raise MalformedTraceError(f"Inconsistent delivery record {delivery}.")
            for send in record.sends:
                if send.source not in members or send.target not in members:
                    raise MalformedTraceError(f"Send {send.source}->{send.target} leaves 1..n.")


def good_case_message_count(n: int, t: int) -> int:
    """Messages correct processes send when every process is correct."""
    if t == 1:
        return n + n * (n - 1)
    return n + 2 * n * (n - 1)


def good_case_signature_bound(n: int, t: int) -> int:
    if t == 1:
        return n + 2 * n * (n - 1)
    return n + 2 * n * (n - 1) + 3 * n * (n - 1) * (n - 2)


class Simulator:
    """
    Lock-step engine: every round, collect what each process sends, hand it
    to every recipient, filter, then let correct processes compute.
    """

    def __init__(self, config: ScenarioConfig) -> None:
        config.validate()
        self.config: ScenarioConfig = config
        self.log: logging.LoggerAdapter = logging.LoggerAdapter(
            log, {"seed": config.seed, "predicate": config.predicate}
        )
        self.scheme: SignatureScheme = keygen(config.members, config.seed, scheme=config.scheme)
        self.pair: PredicatePair = get_predicate(config.predicate, config.t)
        self.states: Dict[ProcessId, ProcessState] = {
            pid: ProcessState(
                pid,
                config.sender,
                config.t,
                config.n,
                self.pair,
                self.scheme,
                self.scheme.oracle({pid}),
                mode=config.mode,
            )
            for pid in config.correct
        }
        self.adversary = build_adversary(
            config.adversary,
            AdversaryContext(config, self.scheme.oracle(config.byzantine), self.pair),
        )
        self._active: Set[ProcessId] = set(config.correct)
        self._metrics: Metrics = Metrics()
        self._rounds: List[RoundRecord] = []
        self._done: bool = False

    def __repr__(self) -> str:
        return f"<Simulator {self.config}>"

    @log_exceptions
    def run(self) -> RunTrace:
        if self._done:
            raise ConfigurationError("A simulator runs once; build a new one to replay.")
        self._done = True
        for round in range(1, self.config.t + 2):
            if not self._active:
                break
            self._rounds.append(self._step(round))
        self._metrics.rounds_executed = len(self._rounds)
        self.log.info(
            "Run finished after %d rounds: %d messages, %d signatures (%s).",
            len(self._rounds),
            self._metrics.correct_messages_sent,
            self._metrics.correct_signatures_sent,
            self.config,
        )
        return RunTrace(self.config, self._rounds, self._metrics)

    def _record_delivery(self, record: RoundRecord, pid: ProcessId, output: Any) -> None:
        if output.delivery is None:
            return
        delivery = DeliveryRecord(pid, output.delivery.round, output.delivery.message)
        record.deliveries.append(delivery)
        self._metrics.delivery_rounds[pid] = delivery.round

    def _step(self, round: int) -> RoundRecord:
        config = self.config
        record = RoundRecord(round)
        computing: List[ProcessId] = []
        for pid in sorted(self._active):
            state = self.states[pid]
            if state.is_sender:
                output = state.sender_start(Message(config.message))
            else:
                output = state.begin_round(round)
            self._record_delivery(record, pid, output)
            if output.outgoing:
                record.sends.extend(
                    Send(pid, target, output.outgoing) for target in config.members
                )
                self._metrics.correct_messages_sent += config.n
                self._metrics.correct_signatures_sent += config.n * sum(
                    len(chain) for chain in output.outgoing
                )
            if output.quit:
                record.quit.append(pid)
            else:
                computing.append(pid)

        inbound: Dict[ProcessId, Set[SignatureChain]] = {pid: set() for pid in config.byzantine}
        for send in record.sends:
            if send.target in inbound:
                inbound[send.target].update(send.chains)
        self.adversary.rush(round, {pid: frozenset(chains) for pid, chains in inbound.items()})
        emission = self.adversary.emit(round)
        for source in sorted(emission):
            if source not in config.byzantine:
                raise AdversaryContractError(
                    f"The adversary sent a message as correct process {source}.", process=source
                )
            for target, chains in sorted(emission[source].items()):
                if target not in config.members:
                    raise AdversaryContractError(
                        f"The adversary addressed unknown process {target}."
                    )
                if chains:
                    record.sends.append(Send(source, target, frozenset(chains)))

        inbox: Dict[ProcessId, Set[SignatureChain]] = {pid: set() for pid in config.members}
        for send in record.sends:
            inbox[send.target].update(send.chains)
        self.adversary.observe(
            round, {pid: frozenset(inbox[pid]) for pid in sorted(config.byzantine)}
        )

        for pid in computing:
            accepted = frozenset(
                chain
                for chain in inbox[pid]
                if validate_chain(chain, config.sender, round, self.scheme)
            )
            self._metrics.rejected_chains += len(inbox[pid]) - len(accepted)
            output = self.states[pid].end_round(round, accepted)
            record.received[pid] = accepted
            self._record_delivery(record, pid, output)
            if output.quit:
                record.quit.append(pid)

        self._active.difference_update(record.quit)
        self.log.debug(
            "Round %d: %d sends, %d computed, quit %s.",
            round,
            len(record.sends),
            len(computing),
            format_ids(record.quit),
        )
        return record


def run(config: ScenarioConfig) -> RunTrace:
    return Simulator(config).run()
