"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import functools
import logging
import string
from typing import Callable, Iterable, Tuple, TypeVar

from typing_extensions import ParamSpec

P = ParamSpec("P")
T = TypeVar("T")

log: logging.Logger = logging.getLogger("seina.brbsim.utils")

__all__: Tuple[str, ...] = (
    "log_exceptions",
    "render_payload",
    "truncate_text",
    "format_ids",
)


_PRINTABLE: frozenset = frozenset(
    (string.ascii_letters + string.digits + string.punctuation).replace(":", "").encode()
)


def log_exceptions(func: Callable[P, T]) -> Callable[P, T]:
    @functools.wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        try:
            return func(*args, **kwargs)
        except Exception:
            log.exception("Exception in function %s", func.__name__)
            raise

    return wrapper


def truncate_text(text: str, max: int = 32) -> str:
    if len(text) > max:
        return text[: max - 3] + "..."
    return text


def render_payload(payload: bytes) -> str:
    """
    Printable payloads render as-is, everything else as ``0x``-prefixed hex.
    Colons are never printed raw so ``m:1:2`` stays unambiguous.
    """
    if payload and all(byte in _PRINTABLE for byte in payload) and not payload.startswith(b"0x"):
        return payload.decode("ascii")
    return "0x" + payload.hex()


def format_ids(ids: Iterable[int]) -> str:
    return ",".join(str(pid) for pid in sorted(ids)) or "-"
