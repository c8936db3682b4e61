"""Input validation utilities."""

import json
from collections.abc import Sequence

from src.utils.exceptions import ArgumentError


def validate_k_list(k_list: Sequence[int]) -> list[int]:
    """
    Validate grid sizes for a sweep.

    Args:
        k_list: Grid side lengths

    Returns:
        The sizes as ints

    Raises:
        ArgumentError: list is empty or some k is below 1
    """
    if not k_list:
        raise ArgumentError("k list is empty")
    bad = [k for k in k_list if int(k) < 1]
    if bad:
        raise ArgumentError(f"grid sizes must be at least 1, got {bad}")
    return [int(k) for k in k_list]


def validate_seed(seed: int) -> int:
    # Seeds are 64-bit unsigned
    if not 0 <= seed < 2**64:
        raise ArgumentError(f"seed must be in [0, 2**64), got {seed}")
    return seed


def parse_override_value(raw: str):
    """JSON value when it parses, the raw string otherwise."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_overrides(tokens: Sequence[str]) -> dict[str, object]:
    """
    Turn ["--train.lr", "0.01", ...] into {"train.lr": 0.01, ...}.

    Raises:
        ArgumentError: a key has no value or does not look like --section.key
    """
    overrides: dict[str, object] = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or "." not in token:
            raise ArgumentError(f"unrecognised argument {token!r}; overrides use --section.key value")
        if "=" in token:
            key, raw = token[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ArgumentError(f"override {token} has no value")
            key, raw = token[2:], tokens[i + 1]
            i += 2
        overrides[key] = parse_override_value(raw)
    return overrides
