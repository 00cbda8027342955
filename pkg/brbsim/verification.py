"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from .chains import Message, ProcessId, SignatureChain, View, truncate
from .constants import CHECKS, FUZZ_MESSAGES, Verdict
from .converters import fuzzy_choice
from .errors import MalformedTraceError
from .predicates import PredicatePair, get_predicate
from .signatures import SignatureScheme, create_chain, extend_chain, keygen
from .simulator import RunTrace

log: logging.Logger = logging.getLogger("seina.brbsim.verification")

__all__: Tuple[str, ...] = (
    "Counterexample",
    "PropertyReport",
    "Observation",
    "check_brb",
    "check_latency",
    "check_monotony",
    "check_conspicuity",
    "check_final_visibility",
    "t2_accumulator",
    "check_t2_lemmas",
    "check_good_case_liveness",
    "observations",
    "random_view_pairs",
    "exhaustive_view_pairs",
    "trace_view_pairs",
    "run_checks",
)


MAX_COUNTEREXAMPLES: int = 5

ViewPair = Tuple[View, View]


def _label(message: Optional[Message]) -> Optional[str]:
    return None if message is None else str(message)


def _chains(view: Iterable[SignatureChain]) -> List[Dict[str, Any]]:
    return [chain.to_dict() for chain in view]


@dataclass
class Counterexample:
    property: str
    detail: str
    round: Optional[int] = None
    processes: Tuple[ProcessId, ...] = ()
    messages: Tuple[Optional[str], ...] = ()
    config: Optional[Dict[str, Any]] = None
    data: Dict[str, Any] = field(default_factory=dict)

    def __str__(self) -> str:
        where = f" at round {self.round}" if self.round is not None else ""
        return f"{self.property}{where}: {self.detail}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "property": self.property,
            "detail": self.detail,
            "round": self.round,
            "processes": list(self.processes),
            "messages": list(self.messages),
            "config": self.config,
            "data": self.data,
        }


@dataclass
class PropertyReport:
    name: str
    verdicts: Dict[str, Verdict] = field(default_factory=dict)
    counterexamples: List[Counterexample] = field(default_factory=list)

    def __repr__(self) -> str:
        return f"<PropertyReport {self.name} ok={self.ok} verdicts={self.verdicts}>"

    @property
    def ok(self) -> bool:
        return all(verdict != "fail" for verdict in self.verdicts.values())

    @property
    def failures(self) -> List[str]:
        return [name for name, verdict in self.verdicts.items() if verdict == "fail"]

    def passed(self, prop: str) -> None:
        if self.verdicts.get(prop) != "fail":
            self.verdicts[prop] = "pass"

    def not_applicable(self, prop: str) -> None:
        self.verdicts.setdefault(prop, "n/a")

    def failed(self, counterexample: Counterexample) -> None:
        self.verdicts[counterexample.property] = "fail"
        shown = sum(1 for item in self.counterexamples if item.property == counterexample.property)
        if shown < MAX_COUNTEREXAMPLES:
            self.counterexamples.append(counterexample)

    def merge(self, other: "PropertyReport") -> "PropertyReport":
        merged = PropertyReport(
            self.name if self.name == other.name else f"{self.name}+{other.name}",
            dict(self.verdicts),
            list(self.counterexamples),
        )
        for prop, verdict in other.verdicts.items():
            if verdict == "fail" or prop not in merged.verdicts:
                merged.verdicts[prop] = verdict
        merged.counterexamples.extend(other.counterexamples)
        return merged

    def rows(self) -> List[Tuple[str, str]]:
        return sorted(self.verdicts.items())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "ok": self.ok,
            "verdicts": dict(sorted(self.verdicts.items())),
            "counterexamples": [item.to_dict() for item in self.counterexamples],
        }


def _pair_for(trace: RunTrace, pair: Optional[PredicatePair]) -> PredicatePair:
    return pair if pair is not None else get_predicate(trace.config.predicate, trace.config.t)


def _non_senders(trace: RunTrace) -> Tuple[ProcessId, ...]:
    return tuple(pid for pid in trace.config.correct if pid != trace.config.sender)


def check_brb(trace: RunTrace) -> PropertyReport:
    config = trace.config
    replay = config.to_dict()
    report = PropertyReport("brb")
    correct = frozenset(config.correct)
    for delivery in trace.deliveries:
        if delivery.process not in correct:
            raise MalformedTraceError(
                f"Delivery recorded for non-correct process {delivery.process}."
            )

    first: Dict[ProcessId, Any] = {}
    for pid in config.correct:
        deliveries = trace.deliveries_of(pid)
        if len(deliveries) > 1:
            report.failed(
                Counterexample(
                    "no_duplication",
                    f"Process {pid} delivered {len(deliveries)} times.",
                    round=deliveries[1].round,
                    processes=(pid,),
                    messages=tuple(_label(item.message) for item in deliveries),
                    config=replay,
                )
            )
        if deliveries:
            first[pid] = deliveries[0]
    report.passed("no_duplication")

    if config.sender_correct:
        expected = Message(config.message)
        for pid, delivery in sorted(first.items()):
            if delivery.message is not None and delivery.message != expected:
                report.failed(
                    Counterexample(
                        "validity",
                        f"Process {pid} delivered {delivery.message} "
                        f"but the sender sent {expected}.",
                        round=delivery.round,
                        processes=(pid, config.sender),
                        messages=(_label(delivery.message), _label(expected)),
                        config=replay,
                    )
                )
        report.passed("validity")
        if config.sender in first:
            report.passed("local_delivery")
        else:
            report.failed(
                Counterexample(
                    "local_delivery",
                    f"Correct sender {config.sender} never delivered.",
                    processes=(config.sender,),
                    config=replay,
                )
            )
    else:
        report.not_applicable("validity")
        report.not_applicable("local_delivery")

    values: Dict[Optional[Message], ProcessId] = {}
    for pid, delivery in sorted(first.items()):
        values.setdefault(delivery.message, pid)
    if len(values) > 1:
        (a, pa), (b, pb) = sorted(
            values.items(), key=lambda item: (item[0] is not None, item[0] or Message(b""))
        )[:2]
        report.failed(
            Counterexample(
                "no_duplicity",
                f"Processes {pa} and {pb} delivered {_label(a)} and {_label(b)}.",
                round=max(first[pa].round, first[pb].round),
                processes=(pa, pb),
                messages=(_label(a), _label(b)),
                config=replay,
            )
        )
    report.passed("no_duplicity")

    missing = sorted(pid for pid in config.correct if pid not in first)
    if first and missing:
        report.failed(
            Counterexample(
                "global_delivery",
                f"Processes {missing} never delivered although {sorted(first)} did.",
                processes=tuple(missing),
                config=replay,
            )
        )
    report.passed("global_delivery")
    return report


def check_latency(trace: RunTrace, pair: Optional[PredicatePair] = None) -> PropertyReport:
    """Deliveries by ``t + 1``, and by ``lambda_good(c)`` when the sender is correct."""
    config = trace.config
    pair = _pair_for(trace, pair)
    report = PropertyReport("latency")
    last = config.t + 1
    for delivery in trace.deliveries:
        if delivery.round > last:
            report.failed(
                Counterexample(
                    "worst_case_bound",
                    f"Process {delivery.process} delivered after round {last}.",
                    round=delivery.round,
                    processes=(delivery.process,),
                    messages=(_label(delivery.message),),
                    config=config.to_dict(),
                )
            )
    silent = [pid for pid in config.correct if trace.delivery_of(pid) is None]
    if silent:
        report.failed(
            Counterexample(
                "worst_case_bound",
                f"Processes {silent} never delivered, not even the empty outcome.",
                round=last,
                processes=tuple(silent),
                config=config.to_dict(),
            )
        )
    report.passed("worst_case_bound")
    if not config.sender_correct:
        report.not_applicable("good_case_bound")
        return report
    bound = pair.lambda_good(config.c)
    if config.mode == "delayed":
        bound = min(bound + 1, last)
    for pid in _non_senders(trace):
        delivery = trace.delivery_of(pid)
        if delivery is None or delivery.round > bound:
            report.failed(
                Counterexample(
                    "good_case_bound",
                    f"Process {pid} delivered at {delivery.round if delivery else 'no round'}, "
                    f"expected by round {bound}.",
                    round=delivery.round if delivery else None,
                    processes=(pid,),
                    config=config.to_dict(),
                )
            )
    report.passed("good_case_bound")
    return report


def check_monotony(
    pair: PredicatePair,
    view_pairs: Iterable[ViewPair],
    samples: Optional[int] = None,
    *,
    n: int,
) -> PropertyReport:
    """
    Weight, view and revealing-round monotony plus local conspicuity over
    ``(view, larger_view)`` pairs, ``larger_view`` containing ``view``.
    """
    report = PropertyReport("monotony")
    for w in range(2, n + 1):
        if pair.reveal_round(w) > pair.reveal_round(w - 1):
            report.failed(
                Counterexample(
                    "reveal_monotony",
                    f"reveal_round({w}) = {pair.reveal_round(w)} exceeds "
                    f"reveal_round({w - 1}) = {pair.reveal_round(w - 1)}.",
                    data={"weights": [w - 1, w]},
                )
            )
    report.passed("reveal_monotony")

    absent = Message(b"\x00absent")
    pairs = itertools.islice(view_pairs, samples) if samples is not None else view_pairs
    checked = 0
    for view, larger in pairs:
        checked += 1
        if not view.issubset(larger):
            raise ValueError("View pairs must be ordered by inclusion.")
        data = {"view": _chains(view), "larger": _chains(larger)}
        for message in sorted(view.messages() | larger.messages() | {absent}):
            holds = {w: pair.wbp(message, w, view) for w in range(1, n + 1)}
            for w in range(2, n + 1):
                if holds[w] and not holds[w - 1]:
                    report.failed(
                        Counterexample(
                            "weight_monotony",
                            f"wbp({message}, {w}) holds but wbp({message}, {w - 1}) does not.",
                            messages=(str(message),),
                            data=data,
                        )
                    )
            for w, value in holds.items():
                if value and not pair.wbp(message, w, larger):
                    report.failed(
                        Counterexample(
                            "view_monotony",
                            f"wbp({message}, {w}) is lost on a larger view.",
                            messages=(str(message),),
                            data=data,
                        )
                    )
            if holds[1] != (message in view.messages()):
                report.failed(
                    Counterexample(
                        "local_conspicuity",
                        f"wbp({message}, 1) is {holds[1]} but {message} is "
                        f"{'' if message in view.messages() else 'not '}in the view.",
                        messages=(str(message),),
                        data=data,
                    )
                )
    for prop in ("weight_monotony", "view_monotony", "local_conspicuity"):
        report.passed(prop)
    log.debug("Checked %d view pairs for %r.", checked, pair)
    return report


Observation = Tuple[ProcessId, int, Message, int]


def observations(trace: RunTrace, pair: Optional[PredicatePair] = None) -> List[Observation]:
    """Every ``(process, round, message, weight)`` a correct non-sender saw the predicate grant."""
    pair = _pair_for(trace, pair)
    found: List[Observation] = []
    for pid in _non_senders(trace):
        for round, view in sorted(trace.views(pid).items()):
            for message in sorted(view.messages()):
                for w in range(1, trace.config.n + 1):
                    if pair.wbp(message, w, view):
                        found.append((pid, round, message, w))
    return found


def check_conspicuity(trace: RunTrace, pair: Optional[PredicatePair] = None) -> PropertyReport:
    config = trace.config
    pair = _pair_for(trace, pair)
    report = PropertyReport("conspicuity")
    last = config.t + 1
    seen: Set[Tuple[Message, int, ProcessId]] = set()
    for i, round, message, w in observations(trace, pair):
        reveal = pair.reveal_round(w)
        if reveal > last:
            continue
        for j in _non_senders(trace):
            if (message, reveal, j) in seen:
                continue
            seen.add((message, reveal, j))
            view = trace.view_at(j, reveal)
            if view is None or message in view.messages():
                continue
            report.failed(
                Counterexample(
                    "conspicuity",
                    f"Process {i} saw {message} with weight {w} at round {round}, "
                    f"but process {j} does not know it at round {reveal}.",
                    round=reveal,
                    processes=(i, j),
                    messages=(str(message),),
                    config=config.to_dict(),
                    data={"weight": w, "observed_at": round},
                )
            )
    report.passed("conspicuity")
    return report


def check_final_visibility(
    trace: RunTrace, pair: Optional[PredicatePair] = None
) -> PropertyReport:
    config = trace.config
    pair = _pair_for(trace, pair)
    report = PropertyReport("visibility")
    if config.sender_correct:
        report.not_applicable("final_visibility")
        return report
    last = config.t + 1
    finals = {
        pid: view
        for pid in _non_senders(trace)
        if (view := trace.view_at(pid, last)) is not None
    }
    seen: Set[Tuple[Message, int]] = set()
    for i, round, message, w in observations(trace, pair):
        if (message, w) in seen:
            continue
        seen.add((message, w))
        for j, view in sorted(finals.items()):
            if pair.wbp(message, w, view):
                continue
            report.failed(
                Counterexample(
                    "final_visibility",
                    f"Process {i} saw {message} with weight {w} at round {round}, "
                    f"but process {j} does not at round {last}.",
                    round=last,
                    processes=(i, j),
                    messages=(str(message),),
                    config=config.to_dict(),
                    data={"weight": w, "observed_at": round},
                )
            )
    report.passed("final_visibility")
    return report


def t2_accumulator(view: View, round: int) -> FrozenSet[SignatureChain]:
    """Length-2 prefixes of the chains of length ``2 .. round`` in ``view``."""
    if round < 1:
        raise ValueError(f"Rounds start at 1, got {round}.")
    return frozenset(truncate(chain, 2) for chain in view.between(2, round))


def _keys(chains: Iterable[SignatureChain]) -> FrozenSet[Any]:
    return frozenset(chain.key for chain in chains)


def check_t2_lemmas(trace: RunTrace) -> PropertyReport:
    config = trace.config
    report = PropertyReport("t2")
    last = config.t + 1
    processes = _non_senders(trace)
    for round in range(1, last):
        for i, j in itertools.product(processes, repeat=2):
            if i == j:
                continue
            before, after = trace.view_at(i, round), trace.view_at(j, round + 1)
            if before is None or after is None:
                continue
            missing = _keys(t2_accumulator(before, round)) - _keys(
                t2_accumulator(after, round + 1)
            )
            if missing:
                sample = sorted(missing, key=lambda key: (key[0].payload, key[1]))[0]
                report.failed(
                    Counterexample(
                        "t2_containment",
                        f"Process {i} holds prefix {sample[0]}:{':'.join(map(str, sample[1]))} "
                        f"at round {round} that process {j} lacks at round {round + 1}.",
                        round=round,
                        processes=(i, j),
                        messages=(str(sample[0]),),
                        config=config.to_dict(),
                    )
                )
    report.passed("t2_containment")

    if config.sender_correct:
        report.not_applicable("t2_equality")
        return report
    finals = {
        pid: _keys(t2_accumulator(view, last))
        for pid in processes
        if (view := trace.view_at(pid, last)) is not None
    }
    for (i, a), (j, b) in itertools.combinations(sorted(finals.items()), 2):
        if a != b:
            report.failed(
                Counterexample(
                    "t2_equality",
                    f"Processes {i} and {j} end round {last} with different length-2 prefixes.",
                    round=last,
                    processes=(i, j),
                    config=config.to_dict(),
                    data={"only_left": len(a - b), "only_right": len(b - a)},
                )
            )
    report.passed("t2_equality")
    return report


def check_good_case_liveness(
    trace: RunTrace, pair: Optional[PredicatePair] = None
) -> PropertyReport:
    config = trace.config
    pair = _pair_for(trace, pair)
    report = PropertyReport("liveness")
    if not config.sender_correct:
        report.not_applicable("good_case_liveness")
        return report
    message, c = Message(config.message), config.c
    if pair.reveal_round(c) != pair.lambda_good(c):
        report.failed(
            Counterexample(
                "good_case_liveness",
                f"reveal_round({c}) = {pair.reveal_round(c)} differs from "
                f"the good-case bound {pair.lambda_good(c)}.",
                config=config.to_dict(),
                data={"weight": c},
            )
        )
    for pid in _non_senders(trace):
        view = trace.view_at(pid, 2)
        if view is not None and pair.wbp(message, c, view):
            continue
        report.failed(
            Counterexample(
                "good_case_liveness",
                f"Process {pid} does not observe weight {c} for {message} at round 2.",
                round=2,
                processes=(pid,),
                messages=(str(message),),
                config=config.to_dict(),
                data={"weight": c},
            )
        )
    report.passed("good_case_liveness")
    return report


def _random_chain(
    scheme: SignatureScheme,
    rng: random.Random,
    message: Message,
    sender: ProcessId,
    others: Sequence[ProcessId],
    length: int,
) -> SignatureChain:
    chain = create_chain(scheme, message, sender)
    for pid in rng.sample(list(others), length - 1):
        chain = extend_chain(scheme, chain, pid)
    return chain


def random_view_pairs(
    n: int,
    t: int,
    seed: int,
    *,
    sender: ProcessId = 1,
    messages: Sequence[bytes] = FUZZ_MESSAGES,
    max_chains: int = 8,
) -> Iterator[ViewPair]:
    """Endless seeded ``(view, larger_view)`` pairs of well-formed chains from ``sender``."""
    scheme = keygen(range(1, n + 1), seed)
    rng = random.Random(seed)
    others = [pid for pid in range(1, n + 1) if pid != sender]
    depth = min(t + 1, n)
    while True:
        chains = [
            _random_chain(
                scheme,
                rng,
                Message(rng.choice(messages)),
                sender,
                others,
                rng.randint(1, depth),
            )
            for _ in range(rng.randint(0, max_chains))
        ]
        cut = rng.randint(0, len(chains))
        yield View(chains[:cut]), View(chains)


def exhaustive_view_pairs(
    n: int = 3, t: int = 1, *, sender: ProcessId = 1, messages: Sequence[bytes] = FUZZ_MESSAGES
) -> Iterator[ViewPair]:
    """
    Every ``view <= larger_view`` over all chains of length ``1 .. t + 1`` from
    ``sender``. ``n=3, t=1`` gives 6 chains and 729 pairs.
    """
    scheme = keygen(range(1, n + 1), 0)
    others = [pid for pid in range(1, n + 1) if pid != sender]
    universe: List[SignatureChain] = []
    for payload in messages:
        for length in range(1, min(t + 1, n) + 1):
            for rest in itertools.permutations(others, length - 1):
                chain = create_chain(scheme, Message(payload), sender)
                for pid in rest:
                    chain = extend_chain(scheme, chain, pid)
                universe.append(chain)
    for placement in itertools.product((0, 1, 2), repeat=len(universe)):
        view = [chain for chain, where in zip(universe, placement) if where == 2]
        larger = [chain for chain, where in zip(universe, placement) if where >= 1]
        yield View(view), View(larger)


def trace_view_pairs(trace: RunTrace) -> Iterator[ViewPair]:
    """Consecutive views of each correct process along a run."""
    for pid in trace.config.correct:
        views = [view for _, view in sorted(trace.views(pid).items())]
        yield from zip(views, views[1:])


def run_checks(
    trace: RunTrace, checks: Iterable[str] = CHECKS, pair: Optional[PredicatePair] = None
) -> PropertyReport:
    pair = _pair_for(trace, pair)
    report = PropertyReport("all")
    for name in checks:
        fuzzy_choice(name, CHECKS, "check")
        if name == "brb":
            result = check_brb(trace)
        elif name == "latency":
            result = check_latency(trace, pair)
        elif name == "conspicuity":
            result = check_conspicuity(trace, pair)
        elif name == "visibility":
            result = check_final_visibility(trace, pair)
        elif name == "t2":
            result = check_t2_lemmas(trace)
        elif name == "liveness":
            result = check_good_case_liveness(trace, pair)
        else:
            result = check_monotony(pair, trace_view_pairs(trace), n=trace.config.n)
        report = report.merge(result)
    report.name = "all"
    return report
