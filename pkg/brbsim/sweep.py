"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import (
    IO,
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
)

from .adversaries import AdversaryDescriptor
from .constants import CHECKS, CSV_HEADER
from .errors import BRBError, ConfigurationError
from .predicates import get_predicate
from .simulator import RunTrace, ScenarioConfig, run
from .verification import PropertyReport, check_brb, run_checks

log: logging.Logger = logging.getLogger("seina.brbsim.sweep")

T = TypeVar("T")
R = TypeVar("R")

__all__: Tuple[str, ...] = (
    "SweepSpec",
    "SweepRow",
    "CampaignResult",
    "pick_byzantine",
    "needs_byzantine_sender",
    "expected_round",
    "evaluate",
    "run_sweep",
    "write_csv",
    "campaign_configs",
    "run_campaign",
)


NEEDS_BYZANTINE_SENDER: FrozenSet[str] = frozenset(
    {"equivocate", "late_reveal", "weight_forger"}
)


def needs_byzantine_sender(descriptor: AdversaryDescriptor) -> bool:
    if descriptor.kind == "crash":
        return descriptor.process is None
    return descriptor.kind in NEEDS_BYZANTINE_SENDER


def pick_byzantine(
    n: int, count: int, sender: int = 1, *, include_sender: bool = False
) -> FrozenSet[int]:
    """
    ``count`` Byzantine ids: the sender first if asked for, then the highest
    remaining ids.
    """
    if count <= 0:
        return frozenset()
    chosen = [sender] if include_sender else []
    for pid in range(n, 0, -1):
        if len(chosen) >= count:
            break
        if pid != sender:
            chosen.append(pid)
    return frozenset(chosen)


def _bind(descriptor: AdversaryDescriptor, sender: int) -> AdversaryDescriptor:
    if descriptor.kind == "crash" and descriptor.process is None:
        return AdversaryDescriptor(kind="crash", process=sender, round=descriptor.round)
    return descriptor


@dataclass(frozen=True)
class SweepSpec:
    """A grid over ``n x t x byzantine count x predicate x adversary x seed``."""

    n: Tuple[int, ...]
    t: Tuple[int, ...]
    byzantine_counts: Tuple[int, ...] = (0,)
    predicates: Tuple[str, ...] = ("gcl",)
    adversaries: Tuple[str, ...] = ("silent",)
    seeds: Tuple[int, ...] = (0,)
    sender: int = 1
    mode: str = "immediate"
    scheme: str = "digest"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SweepSpec":
        def many(key: str, default: Sequence[Any] = ()) -> Sequence[Any]:
            value = data.get(key, default)
            return value if isinstance(value, (list, tuple)) else [value]

        def ints(key: str, default: Sequence[int] = ()) -> Tuple[int, ...]:
            return tuple(int(item) for item in many(key, default))

        try:
            return cls(
                n=ints("n"),
                t=ints("t"),
                byzantine_counts=ints("byzantine_counts", (0,)),
                predicates=tuple(str(item) for item in many("predicates", ("gcl",))),
                adversaries=tuple(str(item) for item in many("adversaries", ("silent",))),
                seeds=ints("seeds", (0,)),
                sender=int(data.get("sender", 1)),
                mode=str(data.get("mode", "immediate")),
                scheme=str(data.get("scheme", "digest")),
            )
        except (TypeError, ValueError) as error:
            raise ConfigurationError(f"Malformed sweep spec: {error}") from error

    def grid(self) -> List[ScenarioConfig]:
        configs: List[ScenarioConfig] = []
        points = itertools.product(
            self.n, self.t, self.byzantine_counts, self.predicates, self.adversaries, self.seeds
        )
        for n, t, count, predicate, adversary, seed in points:
            if not 1 <= t < n or count > t or self.sender > n:
                log.debug("Skipping grid point n=%d t=%d byzantine=%d.", n, t, count)
                continue
            descriptor = AdversaryDescriptor.parse(adversary)
            byzantine = pick_byzantine(
                n, count, self.sender, include_sender=needs_byzantine_sender(descriptor)
            )
            config = ScenarioConfig(
                n=n,
                t=t,
                sender=self.sender,
                byzantine=byzantine,
                predicate=predicate,
                adversary=_bind(descriptor, self.sender),
                seed=seed,
                mode=self.mode,
                scheme=self.scheme,
            )
            try:
                config.validate()
            except ConfigurationError as error:
                log.debug("Skipping grid point %s: %s", config, error)
                continue
            configs.append(config)
        return configs


@dataclass(frozen=True)
class SweepRow:
    n: int
    t: int
    c: int
    predicate: str
    adversary: str
    seed: int
    max_delivery_round: Optional[int]
    metric1: int
    metric2: int
    brb_ok: bool
    expected_round: int
    latency_ok: bool

    def as_csv_row(self) -> List[Any]:
        return [
            "" if value is None else str(value).lower() if isinstance(value, bool) else value
            for value in (getattr(self, name) for name in CSV_HEADER)
        ]


def expected_round(config: ScenarioConfig) -> int:
    """Latest delivery round the protocol promises for ``config``."""
    last = config.t + 1
    if not config.sender_correct:
        return last
    bound = get_predicate(config.predicate, config.t).lambda_good(config.c)
    if config.mode == "delayed":
        bound = min(bound + 1, last)
    return bound


def _exact(config: ScenarioConfig) -> bool:
    return config.sender_correct and (not config.byzantine or config.adversary.kind == "silent")


def _latest_non_sender(trace: RunTrace) -> Optional[int]:
    rounds = [
        delivery.round
        for delivery in trace.deliveries
        if delivery.process != trace.config.sender or not trace.config.sender_correct
    ]
    return max(rounds, default=None)


def evaluate(config: ScenarioConfig) -> SweepRow:
    trace = run(config)
    report = check_brb(trace)
    expected = expected_round(config)
    observed = trace.metrics.max_delivery_round
    latest = _latest_non_sender(trace)
    if latest is None or any(trace.delivery_of(pid) is None for pid in config.correct):
        latency_ok = False
    elif _exact(config):
        latency_ok = latest == expected
    else:
        latency_ok = latest <= expected
    return SweepRow(
        n=config.n,
        t=config.t,
        c=config.c,
        predicate=config.predicate,
        adversary=config.adversary.to_string(),
        seed=config.seed,
        max_delivery_round=observed,
        metric1=trace.metrics.correct_messages_sent,
        metric2=trace.metrics.correct_signatures_sent,
        brb_ok=report.ok,
        expected_round=expected,
        latency_ok=latency_ok,
    )


def _map(func: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items, chunksize=max(1, len(items) // (workers * 4))))


def run_sweep(spec: SweepSpec, *, workers: int = 1) -> List[SweepRow]:
    """Rows come back in grid order whatever the worker count."""
    configs = spec.grid()
    log.info("Sweeping %d grid points with %d workers.", len(configs), workers)
    return _map(evaluate, configs, workers)


def write_csv(rows: Iterable[SweepRow], stream: IO[str]) -> int:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    count = 0
    for row in rows:
        writer.writerow(row.as_csv_row())
        count += 1
    return count


@dataclass
class CampaignResult:
    config: ScenarioConfig
    report: PropertyReport
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.report.ok

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "report": self.report.to_dict(),
            "error": self.error,
        }


def campaign_configs(
    points: Iterable[Tuple[int, int]],
    seeds: Iterable[int],
    *,
    predicate: str = "gcl",
    mode: str = "immediate",
    sender: int = 1,
) -> List[ScenarioConfig]:
    """
    Every scripted adversary once per ``(n, t)`` point, plus one fuzz run per
    seed alternating between a Byzantine and a correct sender.
    """
    seeds = tuple(seeds)
    configs: List[ScenarioConfig] = []
    for n, t in points:
        with_sender = pick_byzantine(n, t, sender, include_sender=True)
        without_sender = pick_byzantine(n, t, sender)
        scripted: List[Tuple[str, FrozenSet[int]]] = [
            ("honest", without_sender),
            ("silent", without_sender),
            (f"crash:process={sender}", with_sender),
            ("equivocate", with_sender),
            ("late_reveal", with_sender),
            (f"late_reveal:target_round={max(1, t)}", with_sender),
            ("weight_forger", with_sender),
        ]
        for descriptor, byzantine in scripted:
            configs.append(
                ScenarioConfig(
                    n=n,
                    t=t,
                    sender=sender,
                    byzantine=byzantine,
                    predicate=predicate,
                    adversary=AdversaryDescriptor.parse(descriptor),
                    seed=seeds[0] if seeds else 0,
                    mode=mode,
                )
            )
        for index, seed in enumerate(seeds):
            configs.append(
                ScenarioConfig(
                    n=n,
                    t=t,
                    sender=sender,
                    byzantine=with_sender if index % 2 == 0 else without_sender,
                    predicate=predicate,
                    adversary=AdversaryDescriptor(kind="fuzz", seed=seed),
                    seed=seed,
                    mode=mode,
                )
            )
    return configs


def _campaign_one(job: Tuple[ScenarioConfig, Tuple[str, ...]]) -> CampaignResult:
    config, checks = job
    try:
        trace = run(config)
    except BRBError as error:
        failure = f"{type(error).__name__}: {error}"
        return CampaignResult(config, PropertyReport("all"), error=failure)
    return CampaignResult(config, run_checks(trace, checks))


def run_campaign(
    configs: Sequence[ScenarioConfig],
    checks: Sequence[str] = CHECKS,
    *,
    workers: int = 1,
) -> List[CampaignResult]:
    jobs = [(config, tuple(checks)) for config in configs]
    log.info("Running a campaign of %d scenarios.", len(jobs))
    return _map(_campaign_one, jobs, workers)
