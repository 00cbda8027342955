"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import hashlib
import hmac
import logging
from abc import ABC, abstractmethod
from typing import (
    TYPE_CHECKING,
    Any,
    ClassVar,
    Dict,
    FrozenSet,
    Iterable,
    Mapping,
    NamedTuple,
    Protocol,
    Tuple,
    Type,
)

from .chains import Link, Message, ProcessId, SignatureChain, signing_content
from .constants import SIGNATURE_SIZE, SchemeName
from .errors import (
    AcyclicityViolation,
    AdversaryContractError,
    ConfigurationError,
    UnknownSignerError,
)

if TYPE_CHECKING:
    from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

log: logging.Logger = logging.getLogger("seina.brbsim.signatures")

__all__: Tuple[str, ...] = (
    "Key",
    "Signer",
    "SignatureScheme",
    "DigestScheme",
    "Ed25519Scheme",
    "SigningOracle",
    "SCHEME_TYPES",
    "keygen",
    "sign",
    "verify",
    "create_chain",
    "extend_chain",
)


class Key(NamedTuple):
    secret: bytes
    token: bytes


class Signer(Protocol):
    def sign(self, signer: ProcessId, content: bytes) -> bytes:
        ...


class SignatureScheme(ABC):
    """
    A fixed key registry shared by every process of a run.

    Signing needs the secret of the signing id; verification is public.
    """

    name: ClassVar[str]

    def __init__(self, keys: Mapping[ProcessId, Key]) -> None:
        self._keys: Dict[ProcessId, Key] = dict(keys)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} ids={sorted(self._keys)}>"

    def __contains__(self, pid: object) -> bool:
        return pid in self._keys

    @property
    def ids(self) -> FrozenSet[ProcessId]:
        return frozenset(self._keys)

    def token(self, pid: ProcessId) -> bytes:
        try:
            return self._keys[pid].token
        except KeyError:
            raise UnknownSignerError(pid) from None

    def secret(self, pid: ProcessId) -> bytes:
        try:
            return self._keys[pid].secret
        except KeyError:
            raise UnknownSignerError(pid) from None

    def sign(self, signer: ProcessId, content: bytes) -> bytes:
        return self._sign(signer, self.secret(signer), content)

    def verify(self, signer: ProcessId, content: bytes, signature: bytes) -> bool:
        key = self._keys.get(signer)
        if key is None:
            return False
        return self._verify(signer, key, content, signature)

    def oracle(self, allowed: Iterable[ProcessId]) -> "SigningOracle":
        return SigningOracle(self, allowed)

    @classmethod
    @abstractmethod
    def derive(cls, secret: bytes) -> Key:
        raise NotImplementedError()

    @abstractmethod
    def _sign(self, signer: ProcessId, secret: bytes, content: bytes) -> bytes:
        raise NotImplementedError()

    @abstractmethod
    def _verify(self, signer: ProcessId, key: Key, content: bytes, signature: bytes) -> bool:
        raise NotImplementedError()


class DigestScheme(SignatureScheme):
    """
    Ideal signatures as keyed BLAKE2b tags. Only the registry can check them,
    which is the whole point of a simulated PKI.
    """

    name: ClassVar[str] = "digest"

    @classmethod
    def derive(cls, secret: bytes) -> Key:
        token = hashlib.blake2b(secret, digest_size=16, person=b"brbsim-token").digest()
        return Key(secret, token)

    def _sign(self, signer: ProcessId, secret: bytes, content: bytes) -> bytes:
        return hashlib.blake2b(content, key=secret, digest_size=SIGNATURE_SIZE).digest()

    def _verify(self, signer: ProcessId, key: Key, content: bytes, signature: bytes) -> bool:
        expected = hashlib.blake2b(content, key=key.secret, digest_size=SIGNATURE_SIZE).digest()
        return hmac.compare_digest(expected, signature)


class Ed25519Scheme(SignatureScheme):
    name: ClassVar[str] = "ed25519"

    def __init__(self, keys: Mapping[ProcessId, Key]) -> None:
        super().__init__(keys)
        self._private: Dict[ProcessId, "Ed25519PrivateKey"] = {}

    @staticmethod
    def _backend() -> Any:
        try:
            from cryptography.hazmat.primitives.asymmetric import ed25519
        except ImportError as error:
            raise ConfigurationError(
                "The ed25519 scheme needs the 'cryptography' package "
                "(pip install brbsim[ed25519])."
            ) from error
        return ed25519

    @classmethod
    def derive(cls, secret: bytes) -> Key:
        from cryptography.hazmat.primitives import serialization

        private = cls._backend().Ed25519PrivateKey.from_private_bytes(secret)
        token = private.public_key().public_bytes(
            encoding=serialization.Encoding.Raw, format=serialization.PublicFormat.Raw
        )
        return Key(secret, token)

    def _sign(self, signer: ProcessId, secret: bytes, content: bytes) -> bytes:
        private = self._private.get(signer)
        if private is None:
            private = self._backend().Ed25519PrivateKey.from_private_bytes(secret)
            self._private[signer] = private
        return private.sign(content)

    def _verify(self, signer: ProcessId, key: Key, content: bytes, signature: bytes) -> bool:
        from cryptography.exceptions import InvalidSignature

        public = self._backend().Ed25519PublicKey.from_public_bytes(key.token)
        try:
            public.verify(signature, content)
        except InvalidSignature:
            return False
        return True


SCHEME_TYPES: Dict[str, Type[SignatureScheme]] = {
    DigestScheme.name: DigestScheme,
    Ed25519Scheme.name: Ed25519Scheme,
}


def _secret_for(seed: int, pid: ProcessId) -> bytes:
    material = seed.to_bytes(16, "big", signed=True) + pid.to_bytes(8, "big")
    return hashlib.blake2b(material, digest_size=32, person=b"brbsim-keygen").digest()


def keygen(
    ids: Iterable[ProcessId], seed: int, *, scheme: SchemeName = "digest"
) -> SignatureScheme:
    members = list(ids)
    if not members:
        raise ConfigurationError("Cannot generate keys for an empty id set.")
    if len(set(members)) != len(members):
        raise ConfigurationError(f"Duplicate process ids in {members}.")
    if any(pid < 1 for pid in members):
        raise ConfigurationError(f"Process ids start at 1, got {sorted(members)}.")
    try:
        factory = SCHEME_TYPES[scheme]
    except KeyError:
        raise ConfigurationError(f"Unknown signature scheme {scheme!r}.") from None
    log.debug("Generating %s keys for %d processes (seed=%d).", scheme, len(members), seed)
    return factory({pid: factory.derive(_secret_for(seed, pid)) for pid in sorted(members)})


def sign(scheme: Signer, signer: ProcessId, content: bytes) -> bytes:
    return scheme.sign(signer, content)


def verify(scheme: SignatureScheme, signer: ProcessId, content: bytes, signature: bytes) -> bool:
    return scheme.verify(signer, content, signature)


def create_chain(scheme: Signer, message: Message, sender: ProcessId) -> SignatureChain:
    signature = scheme.sign(sender, signing_content(message, (), sender))
    return SignatureChain(message, (Link(sender, signature),))


def _append(scheme: Signer, chain: SignatureChain, signer: ProcessId) -> SignatureChain:
    signature = scheme.sign(signer, signing_content(chain.message, chain.links, signer))
    return SignatureChain(chain.message, chain.links + (Link(signer, signature),))


def extend_chain(scheme: Signer, chain: SignatureChain, signer: ProcessId) -> SignatureChain:
    if signer in chain.signers:
        raise AcyclicityViolation(signer, str(chain))
    return _append(scheme, chain, signer)


class SigningOracle:
    """
    Signing access restricted to a fixed set of ids.

    Correct processes get an oracle over their own id, the adversary one over
    the Byzantine ids. Asking for any other id is a contract violation.
    """

    __slots__ = ("_scheme", "_allowed")

    def __init__(self, scheme: SignatureScheme, allowed: Iterable[ProcessId]) -> None:
        self._scheme: SignatureScheme = scheme
        self._allowed: FrozenSet[ProcessId] = frozenset(allowed)
        unknown = self._allowed - scheme.ids
        if unknown:
            raise UnknownSignerError(min(unknown))

    def __repr__(self) -> str:
        return f"<SigningOracle allowed={sorted(self._allowed)}>"

    def __contains__(self, pid: object) -> bool:
        return pid in self._allowed

    @property
    def allowed(self) -> FrozenSet[ProcessId]:
        return self._allowed

    def _check(self, signer: ProcessId) -> None:
        if signer not in self._allowed:
            log.debug("Refused signature for process %d (allowed: %s).", signer, self._allowed)
            raise AdversaryContractError(
                f"Signing as process {signer} is outside this oracle's key set.",
                process=signer,
            )

    def sign(self, signer: ProcessId, content: bytes) -> bytes:
        self._check(signer)
        return self._scheme.sign(signer, content)

    def verify(self, signer: ProcessId, content: bytes, signature: bytes) -> bool:
        return self._scheme.verify(signer, content, signature)

    def secret(self, pid: ProcessId) -> bytes:
        self._check(pid)
        return self._scheme.secret(pid)

    def restrict(self, ids: Iterable[ProcessId]) -> "SigningOracle":
        return SigningOracle(self._scheme, self._allowed & frozenset(ids))

    def root(self, message: Message, sender: ProcessId) -> SignatureChain:
        return create_chain(self, message, sender)

    def extend(self, chain: SignatureChain, signer: ProcessId) -> SignatureChain:
        return extend_chain(self, chain, signer)

    def append_unchecked(self, chain: SignatureChain, signer: ProcessId) -> SignatureChain:
        """Sign onto ``chain`` even if ``signer`` is already in it. Such chains never validate."""
        return _append(self, chain, signer)
