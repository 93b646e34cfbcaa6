"""Attacker observers and the constraints they impose on a path's miss variables."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

from . import expr as E
from .cache_model import miss_var
from .simulate import ConcreteTrace
from .symexec import PathRecord


class ObserverKind(enum.Enum):
    MISS_COUNT = "count"
    SEQUENCE = "seq"


@dataclass(frozen=True)
class Observer:
    kind: ObserverKind
    positions: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is ObserverKind.SEQUENCE:
            if not self.positions:
                raise ValueError("a sequence observer needs at least one position")
            if any(p < 1 for p in self.positions):
                raise ValueError("positions are 1-based")
            if any(a >= b for a, b in zip(self.positions, self.positions[1:])):
                raise ValueError("positions must be strictly increasing")
        elif self.positions:
            raise ValueError("a miss-count observer takes no positions")

    @classmethod
    def miss_count(cls) -> "Observer":
        return cls(ObserverKind.MISS_COUNT)

    @classmethod
    def sequence(cls, positions: Sequence[int]) -> "Observer":
        return cls(ObserverKind.SEQUENCE, tuple(positions))

    @classmethod
    def full_sequence(cls, n: int) -> "Observer":
        """Every position of an ``n``-access trace."""
        return cls.sequence(range(1, n + 1))

    def describe(self) -> str:
        if self.kind is ObserverKind.MISS_COUNT:
            return "count"
        return "seq:" + ",".join(map(str, self.positions))


@dataclass(frozen=True)
class Observation:
    observer: Observer
    value: Union[int, tuple[int, ...]]

    def __post_init__(self) -> None:
        if self.observer.kind is ObserverKind.MISS_COUNT:
            if not isinstance(self.value, int) or self.value < 0:
                raise ValueError("a miss count is a non-negative integer")
        else:
            bits = tuple(self.value)
            if len(bits) != len(self.observer.positions) or any(b not in (0, 1) for b in bits):
                raise ValueError(f"expected {len(self.observer.positions)} bits of 0/1")
            object.__setattr__(self, "value", bits)

    def describe(self) -> str:
        if isinstance(self.value, int):
            return str(self.value)
        return ",".join(map(str, self.value))


def parse_observer(text: str) -> Observer:
    """``count``, ``seq:1,2,3``; ``seq:all`` needs a trace length and is handled by the caller."""
    if text == "count":
        return Observer.miss_count()
    if text.startswith("seq:"):
        try:
            return Observer.sequence([int(p) for p in text[4:].split(",")])
        except ValueError:
            raise ValueError(f"bad position list in {text!r}") from None
    raise ValueError(f"unknown observer {text!r}; use count or seq:<positions>")


def parse_observation(observer: Observer, text: str) -> Observation:
    try:
        if observer.kind is ObserverKind.MISS_COUNT:
            return Observation(observer, int(text))
        return Observation(observer, tuple(int(b) for b in text.split(",")))
    except ValueError as exc:
        raise ValueError(f"observation {text!r} does not fit observer {observer.describe()}: {exc}") from None


def observe(trace: ConcreteTrace, observer: Observer) -> Observation:
    misses = trace.misses
    if observer.kind is ObserverKind.MISS_COUNT:
        return Observation(observer, sum(misses))
    if observer.positions[-1] > len(misses):
        raise IndexError(f"position {observer.positions[-1]} beyond trace of length {len(misses)}")
    return Observation(observer, tuple(misses[p - 1] for p in observer.positions))


def constrain(observation: Observation, path: PathRecord) -> E.Constraint:
    """Constraint over the path's miss variables; false if a position exceeds the trace."""
    n = path.n_e
    obs = observation.observer
    if obs.kind is ObserverKind.MISS_COUNT:
        vars_ = tuple(miss_var(i) for i in range(1, n + 1))
        return E.PbSum(vars_, "eq", observation.value)
    if obs.positions[-1] > n:
        return E.FALSE
    return E.conj(*(E.VarEq(miss_var(p), b) for p, b in zip(obs.positions, observation.value)))
