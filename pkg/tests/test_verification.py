import pytest

from brbsim.chains import Message, View, set_of, subchain
from brbsim.errors import ConfigurationError, MalformedTraceError
from brbsim.predicates import GCLPredicate, LSPPredicate, backing_set
from brbsim.signatures import create_chain, extend_chain, keygen
from brbsim.simulator import DeliveryRecord, ScenarioConfig, run
from brbsim.verification import (
    Counterexample,
    PropertyReport,
    check_brb,
    check_conspicuity,
    check_final_visibility,
    check_good_case_liveness,
    check_latency,
    check_monotony,
    check_t2_lemmas,
    exhaustive_view_pairs,
    observations,
    random_view_pairs,
    run_checks,
    t2_accumulator,
    trace_view_pairs,
)

M = Message(b"m")


def inject(trace, pid, round, payload, *signers):
    """Pretend ``pid`` accepted one more chain at ``round``."""
    scheme = keygen(trace.config.members, trace.config.seed)
    chain = create_chain(scheme, Message(payload), signers[0])
    for signer in signers[1:]:
        chain = extend_chain(scheme, chain, signer)
    record = trace.record(round)
    record.received[pid] = record.received[pid] | {chain}
    return chain


def replace_delivery(trace, pid, **changes):
    for record in trace.rounds:
        record.deliveries = [
            delivery._replace(**changes) if delivery.process == pid else delivery
            for delivery in record.deliveries
        ]


def test_good_run_passes_everything(good_trace):
    report = run_checks(good_trace)
    assert report.ok, report.counterexamples
    assert report.name == "all"
    assert dict(report.rows()) == {
        "conspicuity": "pass",
        "final_visibility": "n/a",
        "global_delivery": "pass",
        "good_case_bound": "pass",
        "good_case_liveness": "pass",
        "local_conspicuity": "pass",
        "local_delivery": "pass",
        "no_duplication": "pass",
        "no_duplicity": "pass",
        "reveal_monotony": "pass",
        "t2_containment": "pass",
        "t2_equality": "n/a",
        "validity": "pass",
        "view_monotony": "pass",
        "weight_monotony": "pass",
        "worst_case_bound": "pass",
    }


@pytest.mark.parametrize(
    "changes",
    [
        {"byzantine": {1}, "adversary": "equivocate"},
        {"t": 2, "byzantine": {1}, "adversary": "crash:process=1"},
        {"n": 5, "t": 2, "byzantine": {1, 5}, "adversary": "late_reveal"},
        {"n": 7, "t": 4, "byzantine": {1, 5, 6, 7}, "adversary": "weight_forger"},
        {"n": 5, "t": 3, "byzantine": {1, 4, 5}, "adversary": "fuzz", "seed": 3},
        {"n": 5, "t": 3, "byzantine": {4, 5}, "adversary": "silent", "predicate": "lsp"},
        {"t": 3, "mode": "delayed"},
    ],
)
def test_adversarial_runs_pass(scenario, changes):
    report = run_checks(run(scenario(**changes)))
    assert report.ok, [str(item) for item in report.counterexamples]


def test_byzantine_sender_verdicts(scenario):
    report = run_checks(run(scenario(byzantine={1}, adversary="equivocate")))
    assert report.verdicts["validity"] == "n/a"
    assert report.verdicts["good_case_bound"] == "n/a"
    assert report.verdicts["good_case_liveness"] == "n/a"
    assert report.verdicts["final_visibility"] == "pass"
    assert report.verdicts["t2_equality"] == "pass"


def test_conflicting_deliveries(good_trace):
    replace_delivery(good_trace, 3, message=Message(b"x"))
    report = check_brb(good_trace)
    assert report.failures == ["validity", "no_duplicity"]
    duplicity = next(item for item in report.counterexamples if item.property == "no_duplicity")
    assert duplicity.processes == (1, 3)
    assert duplicity.messages == ("m", "x")
    assert str(duplicity).startswith("no_duplicity at round 2")
    assert ScenarioConfig.from_dict(duplicity.config) == good_trace.config


def test_duplicate_delivery(good_trace):
    good_trace.record(2).deliveries.append(DeliveryRecord(2, 2, M))
    report = check_brb(good_trace)
    assert report.failures == ["no_duplication"]
    assert report.counterexamples[0].processes == (2,)


def test_missing_delivery(good_trace):
    record = good_trace.record(2)
    record.deliveries = [delivery for delivery in record.deliveries if delivery.process != 4]
    assert check_brb(good_trace).failures == ["global_delivery"]
    report = check_latency(good_trace)
    assert report.failures == ["worst_case_bound", "good_case_bound"]
    assert report.counterexamples[0].processes == (4,)


def test_run_where_nobody_delivers(scenario):
    trace = run(scenario(byzantine={1}, adversary="silent"))
    assert run_checks(trace).ok
    for record in trace.rounds:
        record.deliveries = []
    assert check_brb(trace).ok
    report = check_latency(trace)
    assert report.failures == ["worst_case_bound"]
    (missing,) = report.counterexamples
    assert missing.processes == (2, 3, 4) and missing.round == 2
    assert not run_checks(trace).ok


def test_delivery_by_a_byzantine_process_is_malformed(scenario):
    trace = run(scenario(byzantine={4}, adversary="silent"))
    trace.record(2).deliveries.append(DeliveryRecord(4, 2, M))
    with pytest.raises(MalformedTraceError):
        check_brb(trace)


def test_late_delivery(scenario):
    trace = run(scenario(t=3))
    replace_delivery(trace, 2, round=3)
    report = check_latency(trace)
    assert report.failures == ["good_case_bound"]
    assert report.verdicts["worst_case_bound"] == "pass"
    replace_delivery(trace, 3, round=5)
    assert check_latency(trace).failures == ["worst_case_bound", "good_case_bound"]


def test_latency_uses_the_given_pair(scenario):
    trace = run(scenario(t=3))
    assert check_latency(trace, LSPPredicate(3)).ok
    assert run_checks(trace, ["latency"], LSPPredicate(3)).ok


def test_observations(good_trace):
    seen = observations(good_trace)
    assert (2, 1, M, 1) in seen
    assert (2, 2, M, 4) in seen
    assert (2, 2, M, 5) not in seen
    assert all(pid != 1 for pid, *_ in seen)


def test_conspicuity_violation(good_trace):
    inject(good_trace, 2, 2, b"x", 1, 3)
    report = check_conspicuity(good_trace)
    assert report.failures == ["conspicuity"]
    first = report.counterexamples[0]
    assert first.processes[0] == 2 and first.round == 2
    assert first.messages == ("x",)


def test_final_visibility_violation(scenario):
    config = scenario(byzantine={1}, adversary="equivocate")
    assert check_final_visibility(run(config)).ok
    trace = run(config)
    inject(trace, 2, 2, b"z", 1, 4)
    report = check_final_visibility(trace)
    assert report.failures == ["final_visibility"]
    assert {item.processes for item in report.counterexamples} == {(2, 3), (2, 4)}


def test_t2_containment_violation(scenario):
    config = scenario(n=5, t=3, byzantine={4, 5}, adversary="silent")
    assert check_t2_lemmas(run(config)).ok
    trace = run(config)
    inject(trace, 2, 2, b"m", 1, 5)
    report = check_t2_lemmas(trace)
    assert report.failures == ["t2_containment"]
    assert report.counterexamples[0].processes == (2, 3)
    assert "m:1:5" in report.counterexamples[0].detail


def test_t2_equality_violation(scenario):
    trace = run(scenario(byzantine={1}, adversary="equivocate"))
    inject(trace, 2, 2, b"z", 1, 3)
    report = check_t2_lemmas(trace)
    assert report.verdicts == {"t2_containment": "pass", "t2_equality": "fail"}


def test_liveness_violation(good_trace):
    good_trace.record(2).received[2] = frozenset()
    report = check_good_case_liveness(good_trace)
    assert report.failures == ["good_case_liveness"]
    assert report.counterexamples[0].processes == (2,)


def test_t2_accumulator(make_chain):
    view = View(
        [
            make_chain(b"m", 1),
            make_chain(b"m", 1, 2),
            make_chain(b"m", 1, 3, 2),
            make_chain(b"m", 1, 2, 3, 4),
        ]
    )
    assert t2_accumulator(view, 1) == frozenset()
    assert {str(chain) for chain in t2_accumulator(view, 3)} == {"m:1:2", "m:1:3"}
    assert t2_accumulator(view, 4) == t2_accumulator(view, 3)
    with pytest.raises(ValueError):
        t2_accumulator(view, 0)


class OffByOneWindow(GCLPredicate):
    """Starts the exclusion window at position 1 instead of 3."""

    def wbp(self, message, w, view):
        backers = backing_set(message, view)
        return any(
            len(backers - set_of(subchain(chain, 1, self.t + 3 - w))) >= w
            for chain in view.chains_for(message)
        )


class RisingReveal(GCLPredicate):
    def reveal_round(self, w):
        return w + 1


class ExactWeight(GCLPredicate):
    def wbp(self, message, w, view):
        return len(backing_set(message, view)) == w


class SingleChain(GCLPredicate):
    def wbp(self, message, w, view):
        return w == 1 and len(view.chains_for(message)) == 1


@pytest.mark.parametrize("pair", [GCLPredicate(1), LSPPredicate(1)], ids=repr)
def test_monotony_on_every_small_view(pair):
    report = check_monotony(pair, exhaustive_view_pairs(), n=3)
    assert report.ok, [str(item) for item in report.counterexamples]


@pytest.mark.parametrize("pair", [GCLPredicate(3), LSPPredicate(3)], ids=repr)
def test_monotony_on_random_views(pair):
    report = check_monotony(pair, random_view_pairs(5, 3, seed=1), samples=300, n=5)
    assert report.ok, [str(item) for item in report.counterexamples]


def test_exhaustive_view_pairs():
    pairs = list(exhaustive_view_pairs())
    assert len(pairs) == 729
    assert all(view.issubset(larger) for view, larger in pairs)
    assert max(len(larger) for _, larger in pairs) == 6


@pytest.mark.parametrize(
    "pair, broken",
    [
        (OffByOneWindow(1), "local_conspicuity"),
        (RisingReveal(1), "reveal_monotony"),
        (ExactWeight(1), "weight_monotony"),
        (SingleChain(1), "view_monotony"),
    ],
    ids=lambda value: value if isinstance(value, str) else type(value).__name__,
)
def test_monotony_catches_broken_predicates(pair, broken):
    report = check_monotony(pair, exhaustive_view_pairs(), n=3)
    assert broken in report.failures
    assert 0 < len(report.counterexamples) <= 4 * 5


def test_monotony_needs_inclusion(make_chain):
    with pytest.raises(ValueError):
        check_monotony(GCLPredicate(1), [(View([make_chain(b"m", 1)]), View())], n=4)


def test_trace_view_pairs(scenario):
    trace = run(scenario(t=3, byzantine={4}, adversary="silent"))
    pairs = list(trace_view_pairs(trace))
    assert len(pairs) == 4
    assert all(view.issubset(larger) for view, larger in pairs)


def test_run_checks_selection(good_trace):
    report = run_checks(good_trace, ["t2"])
    assert report.verdicts == {"t2_containment": "pass", "t2_equality": "n/a"}
    with pytest.raises(ConfigurationError, match="Did you mean 'liveness'"):
        run_checks(good_trace, ["liveliness"])


def test_report_keeps_the_first_counterexamples():
    report = PropertyReport("demo")
    for index in range(8):
        report.failed(Counterexample("agreement", str(index)))
    report.passed("agreement")
    report.not_applicable("agreement")
    assert report.verdicts == {"agreement": "fail"}
    assert [item.detail for item in report.counterexamples] == ["0", "1", "2", "3", "4"]
    assert not report.ok
    assert report.to_dict()["ok"] is False


def test_report_merge():
    left = PropertyReport("a", {"x": "pass", "y": "n/a"})
    right = PropertyReport("b", {"x": "fail", "z": "pass"}, [Counterexample("x", "broken")])
    merged = left.merge(right)
    assert merged.name == "a+b"
    assert merged.rows() == [("x", "fail"), ("y", "n/a"), ("z", "pass")]
    assert merged.failures == ["x"]
    assert len(merged.counterexamples) == 1
    assert left.verdicts == {"x": "pass", "y": "n/a"}
