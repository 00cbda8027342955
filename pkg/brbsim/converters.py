"""
MIT License

Copyright (c) 2023-present japandotorg
"""

import argparse
import json
import logging
import re
from pathlib import Path
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple, TypeVar

from rapidfuzz import fuzz, process

from .constants import CHECKS
from .errors import ConfigurationError

log: logging.Logger = logging.getLogger("seina.brbsim.converters")

T = TypeVar("T")

__all__: Tuple[str, ...] = (
    "suggest",
    "fuzzy_choice",
    "parse_int_list",
    "parse_ids",
    "parse_hex",
    "parse_points",
    "parse_checks",
    "load_document",
    "argtype",
)


_RANGE_RE: re.Pattern = re.compile(r"^\s*(-?\d+)\s*(?:-\s*(-?\d+)\s*)?$")


def suggest(value: str, choices: Iterable[str]) -> Optional[str]:
    match = process.extractOne(value, list(choices), scorer=fuzz.QRatio, score_cutoff=50)
    return match[0] if match else None


def fuzzy_choice(value: str, choices: Iterable[str], what: str) -> str:
    options = list(choices)
    if value in options:
        return value
    hint = suggest(value, options)
    message = f"Unknown {what} {value!r}."
    if hint is not None:
        message += f" Did you mean {hint!r}?"
    else:
        message += f" Expected one of: {', '.join(options)}."
    raise ConfigurationError(message)


def parse_int_list(text: str) -> Tuple[int, ...]:
    """
    ``"1,2,5"``, ``"3-8"`` or a mix of both, also with ``+`` as separator.
    Ranges are inclusive. Order of first appearance is kept.
    """
    values: List[int] = []
    for part in re.split(r"[,+]", text):
        if not part.strip():
            continue
        match = _RANGE_RE.match(part)
        if match is None:
            raise ConfigurationError(f"Cannot read {part.strip()!r} as an integer or range.")
        low = int(match.group(1))
        high = int(match.group(2)) if match.group(2) is not None else low
        if high < low:
            raise ConfigurationError(f"Empty range {part.strip()!r}.")
        values.extend(value for value in range(low, high + 1) if value not in values)
    return tuple(values)


def parse_ids(text: str) -> FrozenSet[int]:
    return frozenset(parse_int_list(text))


def parse_hex(text: str) -> bytes:
    value = text[2:] if text.lower().startswith("0x") else text
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise ConfigurationError(f"{text!r} is not a hex string.") from None


def parse_points(text: str) -> Tuple[Tuple[int, int], ...]:
    """``"4x1,7x4"`` into ``((4, 1), (7, 4))``."""
    points: List[Tuple[int, int]] = []
    for part in filter(None, (item.strip() for item in text.split(","))):
        match = re.fullmatch(r"(\d+)\s*[xX]\s*(\d+)", part)
        if match is None:
            raise ConfigurationError(f"Expected NxT, got {part!r}.")
        points.append((int(match.group(1)), int(match.group(2))))
    return tuple(points)


def parse_checks(text: str) -> Tuple[str, ...]:
    names = [name.strip() for name in text.split(",") if name.strip()]
    if not names or names == ["all"]:
        return CHECKS
    return tuple(fuzzy_choice(name, CHECKS, "check") for name in names)


def load_document(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = json.load(file)
    except FileNotFoundError:
        raise ConfigurationError(f"No such file: {path}.") from None
    except json.JSONDecodeError as error:
        raise ConfigurationError(f"{path} is not valid JSON: {error}") from error
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must hold a JSON object.")
    return data


def argtype(converter: Callable[[str], T]) -> Callable[[str], T]:
    """Adapt a converter for ``argparse`` so bad values exit with a usage error."""

    def convert(argument: str) -> T:
        try:
            return converter(argument)
        except ConfigurationError as error:
            raise argparse.ArgumentTypeError(str(error)) from None

    convert.__name__ = converter.__name__
    return convert
