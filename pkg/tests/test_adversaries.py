import pytest

from brbsim.adversaries import (
    ADVERSARIES,
    AdversaryContext,
    AdversaryDescriptor,
    EquivocateAdversary,
    LateRevealAdversary,
    build_adversary,
)
from brbsim.chains import Message
from brbsim.constants import ADVERSARY_KINDS
from brbsim.errors import ConfigurationError
from brbsim.predicates import GCLPredicate
from brbsim.signatures import keygen
from brbsim.simulator import run

A, B = Message(b"a"), Message(b"b")


def outcome(trace):
    return {
        pid: (record.round, record.message)
        for pid in trace.config.correct
        if (record := trace.delivery_of(pid)) is not None
    }


def test_every_kind_is_registered():
    assert tuple(ADVERSARIES) == ADVERSARY_KINDS


@pytest.mark.parametrize(
    "text, expected",
    [
        ("honest", AdversaryDescriptor()),
        ("silent", AdversaryDescriptor("silent")),
        ("crash:process=2,round=3", AdversaryDescriptor("crash", process=2, round=3)),
        (
            " equivocate : m_a=0x6869, partition=2+3 ",
            AdversaryDescriptor("equivocate", m_a=b"hi", partition=frozenset({2, 3})),
        ),
        ("weight_forger:forged_weight=3", AdversaryDescriptor("weight_forger", forged_weight=3)),
    ],
)
def test_descriptor_parsing(text, expected):
    descriptor = AdversaryDescriptor.parse(text)
    assert descriptor == expected
    assert AdversaryDescriptor.parse(descriptor.to_string()) == descriptor


def test_descriptor_rendering():
    assert str(AdversaryDescriptor()) == "honest"
    assert AdversaryDescriptor("crash", process=4).to_string() == "crash:process=4"
    descriptor = AdversaryDescriptor("equivocate", m_b=b"z", partition=frozenset({4, 2}))
    rendered = descriptor.to_string()
    assert rendered == "equivocate:m_b=7a,partition=2+4"


@pytest.mark.parametrize(
    "text, match",
    [
        ("silnet", "Did you mean 'silent'"),
        ("crash:proces=2", "Did you mean 'process'"),
        ("silent:round=1", "silent takes no parameters"),
        ("crash:process", "Expected key=value"),
        ("crash:process=two", "must be an integer"),
        ("equivocate:m_a=xyz", "not a hex string"),
        ("equivocate:partition=2-", "Cannot read"),
    ],
)
def test_descriptor_errors(text, match):
    with pytest.raises(ConfigurationError, match=match):
        AdversaryDescriptor.parse(text)


def test_descriptor_rejects_foreign_parameters():
    with pytest.raises(ConfigurationError, match="silent takes no process parameter"):
        AdversaryDescriptor("silent", process=2)
    with pytest.raises(ConfigurationError):
        AdversaryDescriptor("bribe")


@pytest.mark.parametrize(
    "changes",
    [
        {"byzantine": {4}, "adversary": "crash"},
        {"byzantine": {4}, "adversary": "crash:process=3"},
        {"byzantine": {4}, "adversary": "crash:process=4,round=5"},
        {"byzantine": {4}, "adversary": "equivocate"},
        {"byzantine": {1}, "adversary": "equivocate:partition=1+2"},
        {"byzantine": {1}, "adversary": "equivocate:m_a=62"},
        {"byzantine": {1}, "adversary": "late_reveal:victim=1"},
        {"byzantine": {1}, "adversary": "late_reveal:target_round=3"},
        {"byzantine": {1}, "adversary": "weight_forger:forged_weight=9"},
    ],
)
def test_descriptor_validation(scenario, changes):
    with pytest.raises(ConfigurationError):
        scenario(**changes).validate()


def test_build_adversary_validates(scenario, scheme):
    config = scenario(byzantine={4})
    ctx = AdversaryContext(config, scheme.oracle({4}), GCLPredicate(1))
    with pytest.raises(ConfigurationError):
        build_adversary(AdversaryDescriptor("equivocate"), ctx)


def test_honest_byzantine_sender_is_harmless(scenario):
    trace = run(scenario(byzantine={1}))
    assert outcome(trace) == {pid: (2, Message(b"m")) for pid in (2, 3, 4)}


def test_silent_is_a_crash_before_round_one(scenario):
    silent = run(scenario(t=2, byzantine={3}, adversary="silent"))
    crashed = run(scenario(t=2, byzantine={3}, adversary="crash:process=3"))
    assert [record.to_dict() for record in silent.rounds] == [
        record.to_dict() for record in crashed.rounds
    ]


def test_crash_round(scenario):
    # process 4 still forwards m:1:4 when it crashes at round 3
    late = run(scenario(t=3, byzantine={4}, adversary="crash:process=4,round=3"))
    assert {round for round, _ in outcome(late).values()} == {1, 2}
    early = run(scenario(t=3, byzantine={4}, adversary="crash:process=4,round=2"))
    assert {round for round, _ in outcome(early).values()} == {1, 3}


def test_equivocation_still_agrees(scenario):
    trace = run(scenario(byzantine={1}, adversary="equivocate"))
    first = trace.record(1)
    assert {str(chain) for chain in first.received[2]} == {"a:1"}
    assert {str(chain) for chain in first.received[3]} == {"a:1"}
    assert {str(chain) for chain in first.received[4]} == {"b:1"}
    assert outcome(trace) == {2: (2, A), 3: (2, A), 4: (2, A)}


def test_equivocation_partition(scenario, scheme):
    config = scenario(byzantine={1}, adversary="equivocate:partition=2+3+4")
    adversary = EquivocateAdversary(
        config.adversary, AdversaryContext(config, scheme.oracle({1}), GCLPredicate(1))
    )
    assert adversary.group_a == {2, 3, 4} and adversary.group_b == frozenset()
    assert outcome(run(config)) == {2: (2, A), 3: (2, A), 4: (2, A)}


def test_late_reveal_defers_the_victim(scenario):
    trace = run(scenario(n=5, t=2, byzantine={1, 5}, adversary="late_reveal"))
    assert trace.view_at(2, 2).messages() == {A, B}
    assert trace.view_at(3, 2).messages() == {A}
    assert outcome(trace) == {2: (3, A), 3: (2, A), 4: (2, A)}


def test_late_reveal_release_round(scenario):
    config = scenario(n=7, t=4, byzantine={1, 5, 6, 7}, adversary="late_reveal:target_round=2")
    oracle = keygen(config.members, config.seed).oracle(config.byzantine)
    adversary = LateRevealAdversary(
        config.adversary, AdversaryContext(config, oracle, GCLPredicate(4))
    )
    assert adversary.release_round == 2
    assert adversary.victim == 2
    hidden = sorted(str(chain) for chain in adversary.hidden_chains())
    assert hidden == ["b:1:5", "b:1:6", "b:1:7"]
    trace = run(config)
    assert B in trace.view_at(2, 2).messages()
    assert outcome(trace) == {2: (5, A), 3: (2, A), 4: (2, A)}


def test_weight_forger_targets_half(scenario):
    trace = run(scenario(n=7, t=4, byzantine={1, 5, 6, 7}, adversary="weight_forger"))
    assert B in trace.view_at(2, 2).messages()
    assert B not in trace.view_at(4, 2).messages()
    assert outcome(trace) == {2: (5, A), 3: (5, A), 4: (2, A)}


def test_forwarding_fallback_with_correct_sender(scenario):
    for kind in ("late_reveal", "weight_forger"):
        trace = run(scenario(n=5, t=2, byzantine={4, 5}, adversary=kind))
        assert {message for _, message in outcome(trace).values()} == {Message(b"m")}
        assert all(record.round == 2 for record in map(trace.delivery_of, (2, 3)))


def test_fuzz_is_seeded(scenario):
    config = scenario(n=5, t=2, byzantine={1, 5}, adversary="fuzz", seed=9)
    assert run(config).to_json(meta=False) == run(config).to_json(meta=False)
