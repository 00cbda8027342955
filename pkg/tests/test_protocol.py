import pytest

from brbsim.chains import Message, View, validate_chain
from brbsim.errors import ConfigurationError, FilteredInputViolation, ProtocolViolation
from brbsim.predicates import GCLPredicate, LSPPredicate, get_predicate
from brbsim.protocol import Delivery, ProcessState, final_round_decision

M = Message(b"m")


@pytest.fixture
def state(scheme):
    def build(me, *, t=3, n=4, predicate="gcl", mode="immediate"):
        return ProcessState(
            me, 1, t, n, get_predicate(predicate, t), scheme, scheme.oracle({me}), mode=mode
        )

    return build


def test_sender_start(state, scheme):
    sender = state(1)
    output = sender.sender_start(M)
    (chain,) = output.outgoing
    assert str(chain) == "m:1"
    assert validate_chain(chain, 1, 1, scheme)
    assert output.quit
    assert output.delivery == Delivery(1, M)
    assert sender.delivered and sender.has_quit
    with pytest.raises(ProtocolViolation):
        sender.sender_start(M)
    with pytest.raises(ProtocolViolation):
        sender.begin_round(1)


def test_only_the_sender_starts(state):
    with pytest.raises(ProtocolViolation):
        state(2).sender_start(M)


@pytest.mark.parametrize(
    "kwargs",
    [{"t": 0}, {"t": 4}, {"n": 1, "t": 1}, {"mode": "eventually"}],
)
def test_bad_configuration(state, kwargs):
    with pytest.raises(ConfigurationError):
        state(2, **kwargs)


def test_foreign_oracle_is_rejected(scheme):
    with pytest.raises(ConfigurationError):
        ProcessState(2, 1, 3, 4, GCLPredicate(3), scheme, scheme.oracle({3}))


def test_non_sender_is_silent_in_round_one(state):
    output = state(2).begin_round(1)
    assert output.outgoing == frozenset()
    assert not output.quit
    assert output.delivery is None


def test_rounds_run_in_order(state, make_chain):
    process = state(2)
    with pytest.raises(ProtocolViolation):
        process.begin_round(2)
    with pytest.raises(ProtocolViolation):
        process.end_round(1, ())
    process.begin_round(1)
    with pytest.raises(ProtocolViolation):
        process.begin_round(2)
    process.end_round(1, {make_chain(b"m", 1)})
    with pytest.raises(ProtocolViolation):
        process.end_round(1, ())
    with pytest.raises(ProtocolViolation):
        state(2, t=1).begin_round(3)


def test_unfiltered_input_is_a_violation(state, make_chain):
    process = state(2)
    process.begin_round(1)
    with pytest.raises(FilteredInputViolation):
        process.end_round(1, {make_chain(b"m", 1, 3)})
    other = state(3)
    other.begin_round(1)
    with pytest.raises(FilteredInputViolation):
        other.end_round(1, {make_chain(b"m", 2)})


def test_good_case_delivers_in_round_two(state, make_chain):
    process = state(2)
    process.begin_round(1)
    output = process.end_round(1, {make_chain(b"m", 1)})
    assert output.delivery is None and not output.quit
    assert {str(chain) for chain in process.to_bcast[2]} == {"m:1:2"}

    assert {str(chain) for chain in process.begin_round(2).outgoing} == {"m:1:2"}
    received = {make_chain(b"m", 1, pid) for pid in (2, 3, 4)}
    output = process.end_round(2, received)
    assert output.delivery == Delivery(2, M)
    assert not output.quit
    assert process.delivered

    final = process.begin_round(3)
    assert {str(chain) for chain in final.outgoing} == {"m:1:3:2", "m:1:4:2"}
    assert final.quit and final.delivery is None
    with pytest.raises(ProtocolViolation):
        process.end_round(3, ())


def test_delayed_mode_delivers_one_round_later(state, make_chain):
    process = state(2, mode="delayed")
    process.begin_round(1)
    process.end_round(1, {make_chain(b"m", 1)})
    process.begin_round(2)
    output = process.end_round(2, {make_chain(b"m", 1, pid) for pid in (2, 3, 4)})
    assert output.delivery is None
    assert process.delivered and process.delivery is None
    final = process.begin_round(3)
    assert final.delivery == Delivery(3, M)
    assert final.quit
    assert len(final.outgoing) == 2


def test_delayed_mode_still_decides_in_the_last_round(state, make_chain):
    process = state(2, t=1, mode="delayed")
    process.begin_round(1)
    process.end_round(1, {make_chain(b"m", 1)})
    process.begin_round(2)
    output = process.end_round(2, {make_chain(b"m", 1, pid) for pid in (2, 3, 4)})
    assert output.delivery == Delivery(2, M)
    assert output.quit


def test_lsp_waits_for_the_last_round(state, make_chain):
    process = state(2, predicate="lsp")
    process.begin_round(1)
    process.end_round(1, {make_chain(b"m", 1)})
    process.begin_round(2)
    assert process.end_round(2, {make_chain(b"m", 1, pid) for pid in (2, 3, 4)}).delivery is None
    process.begin_round(3)
    assert process.end_round(3, {make_chain(b"m", 1, 3, 4)}).delivery is None
    process.begin_round(4)
    output = process.end_round(4, ())
    assert output.delivery == Delivery(4, M)
    assert output.quit


def test_nothing_received_delivers_none(state):
    process = state(2, t=1)
    process.begin_round(1)
    process.end_round(1, ())
    process.begin_round(2)
    output = process.end_round(2, ())
    assert output.delivery == Delivery(2, None)
    assert output.quit


def test_two_known_messages_defer_to_the_last_round(state, make_chain):
    process = state(2, t=1)
    process.begin_round(1)
    assert process.end_round(1, {make_chain(b"b", 1), make_chain(b"a", 1)}).delivery is None
    assert {str(chain) for chain in process.begin_round(2).outgoing} == {"a:1:2", "b:1:2"}
    output = process.end_round(2, {make_chain(b"a", 1, 2), make_chain(b"b", 1, 2)})
    assert output.delivery == Delivery(2, Message(b"a"))


def test_own_chains_are_not_forwarded_again(state, make_chain):
    process = state(3)
    process.begin_round(1)
    process.end_round(1, {make_chain(b"m", 1)})
    process.begin_round(2)
    process.end_round(2, {make_chain(b"m", 1, 3), make_chain(b"m", 1, 4)})
    assert {str(chain) for chain in process.to_bcast[3]} == {"m:1:4:3"}


def test_state_machine_is_deterministic(state, make_chain):
    outputs = []
    for _ in range(2):
        process = state(4)
        process.begin_round(1)
        first = process.end_round(1, {make_chain(b"m", 1)})
        second = process.begin_round(2)
        outputs.append((first, second, process.view == View([make_chain(b"m", 1)])))
    assert outputs[0] == outputs[1]


def test_final_round_decision(make_chain):
    pair, lsp = GCLPredicate(1), LSPPredicate(1)
    assert final_round_decision(View(), pair, 4) is None
    only_m = View([make_chain(b"m", 1), make_chain(b"m", 1, 3)])
    assert final_round_decision(only_m, pair, 4) == M
    tied = View([make_chain(b"b", 1, 2), make_chain(b"a", 1, 3)])
    assert final_round_decision(tied, pair, 4) == Message(b"a")
    assert final_round_decision(tied, lsp, 4) == Message(b"a")
    heavier_b = View([make_chain(b"a", 1), make_chain(b"b", 1, 2), make_chain(b"b", 1, 3)])
    assert final_round_decision(heavier_b, pair, 4) == Message(b"b")
    assert final_round_decision(heavier_b, lsp, 4) == Message(b"a")
