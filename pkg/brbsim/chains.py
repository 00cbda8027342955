"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import functools
import logging
import struct
from dataclasses import dataclass
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Protocol,
    Sequence,
    Tuple,
    Union,
)

from .constants import ID_SIZE, LENGTH_SIZE
from .errors import InvalidChainError
from .utils import render_payload

log: logging.Logger = logging.getLogger("seina.brbsim.chains")

__all__: Tuple[str, ...] = (
    "ProcessId",
    "Message",
    "Link",
    "SignatureChain",
    "ChainKey",
    "Verifier",
    "View",
    "signing_content",
    "message_of",
    "messages_of",
    "set_of",
    "subchain",
    "truncate",
    "truncate_all",
    "choice",
    "validate_chain",
    "is_well_formed",
)


ProcessId = int


def _u32(value: int) -> bytes:
    return struct.pack(">I", value)


@dataclass(frozen=True, order=True)
class Message:
    payload: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.payload, bytes):
            raise TypeError(f"Message payload must be bytes, not {type(self.payload).__name__}.")

    def __str__(self) -> str:
        return render_payload(self.payload)

    @property
    def hex(self) -> str:
        return self.payload.hex()

    @classmethod
    def from_hex(cls, value: str) -> "Message":
        return cls(bytes.fromhex(value))

    def encode(self) -> bytes:
        return _u32(len(self.payload)) + self.payload


class Link(NamedTuple):
    signer: ProcessId
    signature: bytes

    def encode(self) -> bytes:
        return _u32(self.signer) + _u32(len(self.signature)) + self.signature


def signing_content(
    message: Message, links_before: Sequence[Link], signer: ProcessId
) -> bytes:
    """
    The bytes the ``len(links_before) + 1``-th signature covers: the payload,
    every earlier link with its signature, then the new signer's id.
    """
    return b"".join(
        (message.encode(), *(link.encode() for link in links_before), _u32(signer))
    )


ChainKey = Tuple[Message, Tuple[ProcessId, ...]]


@dataclass(frozen=True)
class SignatureChain:
    message: Message
    links: Tuple[Link, ...]

    def __post_init__(self) -> None:
        links = tuple(Link(int(signer), bytes(signature)) for signer, signature in self.links)
        if not links:
            raise InvalidChainError("A signature chain needs at least one link.")
        object.__setattr__(self, "links", links)

    def __len__(self) -> int:
        return len(self.links)

    def __str__(self) -> str:
        return ":".join((str(self.message), *(str(signer) for signer in self.signers)))

    def __repr__(self) -> str:
        return f"<SignatureChain {self}>"

    @functools.cached_property
    def signers(self) -> Tuple[ProcessId, ...]:
        return tuple(link.signer for link in self.links)

    @property
    def signatures(self) -> Tuple[bytes, ...]:
        return tuple(link.signature for link in self.links)

    @property
    def sender(self) -> ProcessId:
        return self.links[0].signer

    @property
    def last_signer(self) -> ProcessId:
        return self.links[-1].signer

    @property
    def key(self) -> ChainKey:
        return (self.message, self.signers)

    @property
    def sort_key(self) -> Tuple[int, bytes, Tuple[ProcessId, ...], Tuple[bytes, ...]]:
        return (len(self), self.message.payload, self.signers, self.signatures)

    def signing_content(self, k: int) -> bytes:
        if not 1 <= k <= len(self):
            raise IndexError(f"Chain {self} has no position {k}.")
        return signing_content(self.message, self.links[: k - 1], self.links[k - 1].signer)

    def serialize(self) -> bytes:
        return b"".join((self.message.encode(), *(link.encode() for link in self.links)))

    @classmethod
    def deserialize(cls, data: bytes) -> "SignatureChain":
        try:
            (size,) = struct.unpack_from(">I", data, 0)
            offset = LENGTH_SIZE + size
            payload = data[LENGTH_SIZE:offset]
            if len(payload) != size:
                raise InvalidChainError("Truncated payload.")
            links: List[Link] = []
            while offset < len(data):
                signer, length = struct.unpack_from(">II", data, offset)
                offset += ID_SIZE + LENGTH_SIZE
                signature = data[offset : offset + length]
                if len(signature) != length:
                    raise InvalidChainError("Truncated signature.")
                offset += length
                links.append(Link(signer, signature))
        except struct.error as error:
            raise InvalidChainError(f"Malformed chain encoding: {error}") from error
        return cls(Message(payload), tuple(links))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chain": str(self),
            "payload": self.message.hex,
            "signers": list(self.signers),
            "sigs": [signature.hex() for signature in self.signatures],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SignatureChain":
        try:
            signers = [int(signer) for signer in data["signers"]]
            sigs = [bytes.fromhex(sig) for sig in data["sigs"]]
            message = Message.from_hex(data["payload"])
        except (KeyError, TypeError, ValueError) as error:
            raise InvalidChainError(f"Malformed chain document: {error!r}") from error
        if len(signers) != len(sigs):
            raise InvalidChainError("Signer and signature counts differ.")
        return cls(message, tuple(Link(s, sig) for s, sig in zip(signers, sigs)))


class Verifier(Protocol):
    def verify(self, signer: ProcessId, content: bytes, signature: bytes) -> bool:
        ...


def message_of(chain: SignatureChain) -> Message:
    return chain.message


def messages_of(chains: Iterable[SignatureChain]) -> FrozenSet[Message]:
    return frozenset(chain.message for chain in chains)


SignerSource = Union[SignatureChain, Sequence[ProcessId], Iterable[Any]]


def set_of(items: SignerSource) -> FrozenSet[ProcessId]:
    """
    Signers of a chain, the ids of a sequence, or the union over an iterable
    of chains and sequences.
    """
    if isinstance(items, SignatureChain):
        return frozenset(items.signers)
    result: set = set()
    for item in items:
        if isinstance(item, int):
            result.add(item)
        elif isinstance(item, SignatureChain):
            result.update(item.signers)
        else:
            result.update(set_of(item))
    return frozenset(result)


def subchain(
    seq: Union[SignatureChain, Sequence[ProcessId]], k1: int, k2: int
) -> Tuple[ProcessId, ...]:
    """
    Positions ``k1`` through ``min(len, k2)`` of a signer sequence, 1-based and
    inclusive. Empty when ``k2 < k1``.
    """
    if k1 < 1:
        raise ValueError(f"subchain start must be at least 1, got {k1}.")
    signers = seq.signers if isinstance(seq, SignatureChain) else tuple(seq)
    end = max(0, min(len(signers), k2))
    if k1 - 1 >= end:
        return ()
    return tuple(signers[k1 - 1 : end])


def truncate(chain: SignatureChain, k: int) -> SignatureChain:
    if k < 1:
        raise ValueError(f"Cannot truncate a chain to {k} links.")
    if len(chain) <= k:
        return chain
    return SignatureChain(chain.message, chain.links[:k])


def truncate_all(chains: Iterable[SignatureChain], k: int) -> FrozenSet[SignatureChain]:
    return frozenset(truncate(chain, k) for chain in chains)


def choice(messages: Iterable[Message]) -> Optional[Message]:
    """Deterministic pick: the byte-wise smallest message, or ``None`` for none."""
    return min(messages, default=None)


def is_well_formed(chain: SignatureChain, sender: ProcessId, verifier: Verifier) -> bool:
    """Every check of :func:`validate_chain` except the round/length match."""
    signers = chain.signers
    if signers[0] != sender:
        return False
    if len(set(signers)) != len(signers):
        return False
    content = bytearray(chain.message.encode())
    for link in chain.links:
        if not verifier.verify(link.signer, bytes(content + _u32(link.signer)), link.signature):
            return False
        content += link.encode()
    return True


def validate_chain(
    chain: SignatureChain, sender: ProcessId, round: int, verifier: Verifier
) -> bool:
    if round < 1:
        raise ValueError(f"Rounds start at 1, got {round}.")
    if len(chain) != round:
        return False
    return is_well_formed(chain, sender, verifier)


class View:
    """
    The set of chains a process has accepted, deduplicated on
    ``(message, signers)`` and indexed by chain length and by message.
    """

    __slots__ = ("_chains", "_by_length", "_by_message")

    def __init__(self, chains: Iterable[SignatureChain] = ()) -> None:
        self._chains: Dict[ChainKey, SignatureChain] = {}
        self._by_length: Dict[int, Dict[ChainKey, SignatureChain]] = {}
        self._by_message: Dict[Message, Dict[ChainKey, SignatureChain]] = {}
        self.update(chains)

    def __repr__(self) -> str:
        return "<View {" + ", ".join(str(chain) for chain in self) + "}>"

    def __len__(self) -> int:
        return len(self._chains)

    def __bool__(self) -> bool:
        return bool(self._chains)

    def __iter__(self) -> Iterator[SignatureChain]:
        return iter(sorted(self._chains.values(), key=lambda chain: chain.sort_key))

    def __contains__(self, chain: object) -> bool:
        return isinstance(chain, SignatureChain) and chain.key in self._chains

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, View):
            return NotImplemented
        return self._chains.keys() == other._chains.keys()

    __hash__ = None  # type: ignore[assignment]

    def __getitem__(self, length: int) -> FrozenSet[SignatureChain]:
        return frozenset(self._by_length.get(length, {}).values())

    def add(self, chain: SignatureChain) -> bool:
        key = chain.key
        if key in self._chains:
            return False
        self._chains[key] = chain
        self._by_length.setdefault(len(chain), {})[key] = chain
        self._by_message.setdefault(chain.message, {})[key] = chain
        return True

    def update(self, chains: Iterable[SignatureChain]) -> int:
        return sum(self.add(chain) for chain in chains)

    def at(self, length: int) -> FrozenSet[SignatureChain]:
        return self[length]

    def between(self, low: int, high: int) -> FrozenSet[SignatureChain]:
        return frozenset(
            chain
            for length in range(max(1, low), high + 1)
            for chain in self._by_length.get(length, {}).values()
        )

    def chains_for(self, message: Message) -> Tuple[SignatureChain, ...]:
        chains = self._by_message.get(message, {}).values()
        return tuple(sorted(chains, key=lambda chain: chain.sort_key))

    def messages(self) -> FrozenSet[Message]:
        return frozenset(self._by_message)

    @property
    def max_length(self) -> int:
        return max(self._by_length, default=0)

    def issubset(self, other: "View") -> bool:
        return self._chains.keys() <= other._chains.keys()

    def copy(self) -> "View":
        return View(self._chains.values())
