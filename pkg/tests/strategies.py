from typing import List, Sequence, Tuple

from hypothesis import strategies as st

from brbsim.chains import Message, SignatureChain, View
from brbsim.constants import FUZZ_MESSAGES
from brbsim.signatures import create_chain, extend_chain, keygen

MAX_PROCESSES: int = 7

SCHEME = keygen(range(1, MAX_PROCESSES + 1), 11)

signer_sequences = st.lists(st.integers(min_value=1, max_value=20), unique=True, max_size=10)


@st.composite
def chains(
    draw: st.DrawFn,
    n: int = 5,
    max_length: int = 5,
    sender: int = 1,
    messages: Sequence[bytes] = FUZZ_MESSAGES,
) -> SignatureChain:
    payload = draw(st.sampled_from(messages))
    others = draw(st.permutations([pid for pid in range(1, n + 1) if pid != sender]))
    length = draw(st.integers(min_value=1, max_value=min(max_length, n)))
    chain = create_chain(SCHEME, Message(payload), sender)
    for pid in others[: length - 1]:
        chain = extend_chain(SCHEME, chain, pid)
    return chain


@st.composite
def views(draw: st.DrawFn, n: int = 5, t: int = 3, max_chains: int = 8) -> View:
    items: List[SignatureChain] = draw(
        st.lists(chains(n=n, max_length=t + 1), max_size=max_chains)
    )
    return View(items)


@st.composite
def view_pairs(draw: st.DrawFn, n: int = 5, t: int = 3) -> Tuple[View, View]:
    base = draw(st.lists(chains(n=n, max_length=t + 1), max_size=6))
    extra = draw(st.lists(chains(n=n, max_length=t + 1), min_size=1, max_size=3))
    return View(base), View(base + extra)
