from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class Policy(enum.Enum):
    DIRECT_MAPPED = "dm"
    LRU = "lru"


@dataclass(frozen=True)
class CacheConfig:
    """Cache geometry: ``2**sets_log2`` sets of ``assoc`` lines of ``2**line_log2`` bytes."""

    sets_log2: int
    line_log2: int
    assoc: int = 1
    policy: Policy = Policy.DIRECT_MAPPED

    def __post_init__(self) -> None:
        if self.sets_log2 < 0 or self.line_log2 < 0 or self.assoc < 1:
            raise ValueError("cache parameters must be non-negative and assoc >= 1")
        if self.policy is Policy.DIRECT_MAPPED and self.assoc != 1:
            raise ValueError("a direct-mapped cache has associativity 1")

    @property
    def num_sets(self) -> int:
        return 1 << self.sets_log2

    @property
    def line_size(self) -> int:
        return 1 << self.line_log2

    @property
    def size(self) -> int:
        return self.num_sets * self.line_size * self.assoc

    def check_width(self, addr_width: int) -> None:
        if self.sets_log2 + self.line_log2 > addr_width:
            raise ValueError(
                f"S + B = {self.sets_log2 + self.line_log2} exceeds address width {addr_width}"
            )

    def set_of(self, addr: int) -> int:
        return (addr >> self.line_log2) & (self.num_sets - 1)

    def tag_of(self, addr: int) -> int:
        return addr >> (self.line_log2 + self.sets_log2)

    @classmethod
    def from_sizes(cls, total: int, line: int, assoc: int = 1,
                   policy: Policy | None = None) -> "CacheConfig":
        if policy is None:
            policy = Policy.DIRECT_MAPPED if assoc == 1 else Policy.LRU
        for name, v in (("total size", total), ("line size", line), ("associativity", assoc)):
            if v < 1:
                raise ValueError(f"{name} must be positive")
        if line & (line - 1):
            raise ValueError(f"line size {line} is not a power of two")
        if total % (line * assoc):
            raise ValueError(f"{total} bytes is not a multiple of line size x associativity")
        sets = total // (line * assoc)
        if sets & (sets - 1):
            raise ValueError(f"number of sets {sets} is not a power of two")
        return cls(sets.bit_length() - 1, line.bit_length() - 1, assoc, policy)

    def describe(self) -> str:
        kind = "direct-mapped" if self.policy is Policy.DIRECT_MAPPED else f"{self.assoc}-way LRU"
        return (f"{format_size(self.size)} {kind}, {format_size(self.line_size)} lines, "
                f"{self.num_sets} sets (S={self.sets_log2}, B={self.line_log2})")

    def to_spec(self) -> str:
        suffix = ":lru" if self.policy is Policy.LRU else ""
        return f"{format_size(self.size)}/{format_size(self.line_size)}/{self.assoc}{suffix}"


_SIZE_RE = re.compile(r"^\s*(\d+)\s*(B|KB|K|MB|M)?\s*$", re.IGNORECASE)
_UNITS = {None: 1, "b": 1, "k": 1024, "kb": 1024, "m": 1 << 20, "mb": 1 << 20}


def parse_size(text: str) -> int:
    m = _SIZE_RE.match(text)
    if not m:
        raise ValueError(f"bad size {text!r}")
    unit = m.group(2).lower() if m.group(2) else None
    return int(m.group(1)) * _UNITS[unit]


def format_size(n: int) -> str:
    if n >= 1024 and n % 1024 == 0:
        return f"{n // 1024}KB"
    return f"{n}B"


def parse_cache_spec(text: str) -> CacheConfig:
    """Parse ``<total>/<line>/<assoc>[:lru]``, e.g. ``512B/32B/1`` or ``1KB/32B/2:lru``."""
    body, _, suffix = text.partition(":")
    if suffix and suffix.lower() != "lru":
        raise ValueError(f"unknown replacement policy {suffix!r}")
    parts = body.split("/")
    if len(parts) != 3:
        raise ValueError(f"cache spec {text!r} must look like <total>/<line>/<assoc>[:lru]")
    total, line = parse_size(parts[0]), parse_size(parts[1])
    try:
        assoc = int(parts[2])
    except ValueError:
        raise ValueError(f"bad associativity {parts[2]!r}") from None
    policy = Policy.LRU if suffix or assoc > 1 else Policy.DIRECT_MAPPED
    return CacheConfig.from_sizes(total, line, assoc, policy)
