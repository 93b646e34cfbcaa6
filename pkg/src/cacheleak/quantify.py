"""Leak quantification from per-path cache models and one observation.

The input is cut into ``K`` equal big-endian segments. For every segment
value ``v`` the predicate ``segment_i = v`` is checked against the
disjunction over paths of ``gamma_e & observation_e``; an unsatisfiable
check refutes the value, i.e. the observation reveals the segment is not
``v``. With ``U_i`` refuted values in segment ``i`` the number of inputs the
observation rules out is at least ``2**N - prod(2**(N/K) - U_i)``.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from . import expr as E
from .cache_model import SymbolicCacheModel, build_model, prune
from .cacheconfig import CacheConfig
from .observers import Observation, constrain
from .program import MiniProgram
from .solver import CapExceeded, EnumerateBackend, SolverError, Verdict
from .symexec import explore

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


class Mode(enum.Enum):
    EXACT = "exact"
    BOUNDED = "bounded"


class Status(enum.Enum):
    REFUTED = "refuted"
    CONSISTENT = "consistent"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class QuantifyConfig:
    n_bits: int
    k: int = 1
    mode: Mode = Mode.EXACT
    prune: bool = True
    batched: bool = True

    def __post_init__(self) -> None:
        if self.k < 1 or self.n_bits < 0:
            raise ValueError("K must be positive and N non-negative")
        if self.n_bits % self.k:
            raise ValueError(f"K={self.k} does not divide N={self.n_bits}")

    @property
    def width(self) -> int:
        return self.n_bits // self.k


@dataclass(frozen=True)
class Predicate:
    segment: int  # 1-based
    value: int
    width: int

    @property
    def start(self) -> int:
        return (self.segment - 1) * self.width

    @property
    def constraint(self) -> E.SegmentEq:
        return E.segment_eq(self.start, self.width, self.value)

    def holds(self, data: Sequence[int]) -> bool:
        return E.segment_value(data, self.start, self.width) == self.value


def gen_predicates(cfg: QuantifyConfig) -> list[Predicate]:
    w = cfg.width
    return [Predicate(i, v, w) for i in range(1, cfg.k + 1) for v in range(1 << w)]


def observed_models(models: Sequence[SymbolicCacheModel],
                    observation: Observation) -> list[E.Constraint]:
    """Per-path ``gamma_e & observation_e``."""
    return [E.conj(m.gamma, constrain(observation, m.path)) for m in models]


def _fold(verdicts: Sequence[Verdict]) -> Status:
    if any(v is Verdict.SAT for v in verdicts):
        return Status.CONSISTENT
    if all(v is Verdict.UNSAT for v in verdicts):
        return Status.REFUTED
    return Status.UNKNOWN


def check_predicate(models: Sequence[SymbolicCacheModel], observation: Observation,
                    pred: Predicate, backend) -> Status:
    verdicts = []
    for c in observed_models(models, observation):
        try:
            v = backend.check_sat(E.conj(c, pred.constraint)).verdict
        except SolverError as exc:
            log.warning("predicate %s: %s", pred, exc)
            v = Verdict.UNKNOWN
        verdicts.append(v)
        if v is Verdict.SAT:
            break
    return _fold(verdicts)


def check_all(models: Sequence[SymbolicCacheModel], observation: Observation,
              cfg: QuantifyConfig, backend) -> dict[Predicate, Status]:
    """Status of every predicate.

    With the enumeration backend and ``cfg.batched`` each path is swept once
    and the per-segment values of its satisfying inputs are read off;
    otherwise each predicate is a separate query (batched per path when the
    backend offers ``check_many``).
    """
    preds = gen_predicates(cfg)
    formulas = observed_models(models, observation)
    n_bytes = cfg.n_bits // 8
    if cfg.batched and isinstance(backend, EnumerateBackend) and cfg.n_bits <= backend.cap \
            and cfg.n_bits % 8 == 0:
        seen = [[False] * (1 << cfg.width) for _ in range(cfg.k)]
        for f in formulas:
            for i, present in enumerate(backend.consistent_segments(f, n_bytes, cfg.k)):
                for v in present.nonzero()[0]:
                    seen[i][int(v)] = True
        return {p: Status.CONSISTENT if seen[p.segment - 1][p.value] else Status.REFUTED
                for p in preds}
    if hasattr(backend, "check_many"):
        per_path = []
        for f in formulas:
            try:
                per_path.append([r.verdict for r in backend.check_many(f, [p.constraint for p in preds])])
            except SolverError as exc:
                log.warning("batched predicate check failed: %s", exc)
                per_path.append([Verdict.UNKNOWN] * len(preds))
        return {p: _fold([col[j] for col in per_path]) for j, p in enumerate(preds)}
    return {p: check_predicate(models, observation, p, backend) for p in preds}


def leak_lower_bound(refuted: Sequence[int], cfg: QuantifyConfig) -> int:
    """``2**N - prod(2**(N/K) - U_i)``."""
    if len(refuted) != cfg.k:
        raise ValueError(f"expected {cfg.k} segment counts, got {len(refuted)}")
    size = 1 << cfg.width
    if any(not 0 <= u <= size for u in refuted):
        raise ValueError(f"segment counts must lie in [0, {size}]")
    return (1 << cfg.n_bits) - math.prod(size - u for u in refuted)


def partial_bound(covered: int, refuted: Sequence[int], cfg: QuantifyConfig) -> int:
    """``max(0, covered - prod(2**(N/K) - U_i))`` for inputs covered by explored paths."""
    size = 1 << cfg.width
    return max(0, covered - math.prod(size - u for u in refuted))


def _counter(backend) -> EnumerateBackend:
    return backend if isinstance(backend, EnumerateBackend) else EnumerateBackend()


def leak_exact(models: Sequence[SymbolicCacheModel], observation: Observation, backend,
               cfg: QuantifyConfig) -> int:
    """``2**N`` minus the number of inputs realizing the observation on some path."""
    if cfg.n_bits % 8:
        raise ValueError("exact counting needs a whole number of input bytes")
    f = E.disj(*observed_models(models, observation))
    return (1 << cfg.n_bits) - _counter(backend).count_models(f, cfg.n_bits // 8)


def leak_partial(models: Sequence[SymbolicCacheModel], refuted: Sequence[int], backend,
                 cfg: QuantifyConfig) -> int:
    """Bound for an incomplete set of explored paths; 0 if no path was explored."""
    if not models:
        return 0
    covered = _counter(backend).count_models(E.disj(*(m.path.pc for m in models)), cfg.n_bits // 8)
    return partial_bound(covered, refuted, cfg)


@dataclass
class SegmentSummary:
    segment: int
    refuted: int
    consistent: int
    unknown: int
    values: int


@dataclass
class LeakReport:
    program: str
    input_bits: int
    cache: CacheConfig
    observation: Observation
    cfg: QuantifyConfig
    backend: str
    paths: int
    exhausted: bool
    realizable: Optional[bool]
    segments: list[SegmentSummary]
    refuted: list[tuple[int, int]]
    consistent: list[tuple[int, int]]
    unknown: list[tuple[int, int]]
    lower_bound: int
    exact: Optional[int] = None
    partial: Optional[int] = None
    pruned: dict[int, dict[int, int]] = field(default_factory=dict)
    atoms: dict[int, int] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def refuted_counts(self) -> list[int]:
        return [s.refuted for s in self.segments]

    def to_dict(self) -> dict:
        c = self.cache
        return {
            "schema_version": SCHEMA_VERSION,
            "program": self.program,
            "input_bits": self.input_bits,
            "cache": {"spec": c.to_spec(), "description": c.describe(), "sets_log2": c.sets_log2,
                      "line_log2": c.line_log2, "assoc": c.assoc, "policy": c.policy.value},
            "observer": self.observation.observer.describe(),
            "observation": self.observation.describe(),
            "quantify": {"K": self.cfg.k, "segment_bits": self.cfg.width, "mode": self.cfg.mode.value,
                         "prune": self.cfg.prune},
            "backend": self.backend,
            "exploration": {"paths": self.paths, "exhausted": self.exhausted},
            "realizable": self.realizable,
            "notes": self.notes(),
            "segments": [{"segment": s.segment, "refuted": s.refuted, "consistent": s.consistent,
                          "unknown": s.unknown,
                          "eliminated": f"{s.refuted} of {s.values}"} for s in self.segments],
            "refuted": [list(p) for p in self.refuted],
            "consistent": [list(p) for p in self.consistent],
            "unknown": [list(p) for p in self.unknown],
            "lower_bound": self.lower_bound,
            "exact": self.exact,
            "partial_bound": self.partial,
            "pruned": {str(k): {str(i): v for i, v in sorted(f.items())}
                       for k, f in sorted(self.pruned.items())},
            "atoms": {str(k): v for k, v in sorted(self.atoms.items())},
            "errors": list(self.errors),
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
        }

    def notes(self) -> list[str]:
        out = []
        if self.realizable is False:
            out.append("observation unrealizable")
        if not self.exhausted:
            out.append("exploration incomplete: lower_bound covers explored paths only, see partial_bound")
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class SchemaError(ValueError):
    pass


def load_report(text: str) -> dict:
    """Parse a serialized report, rejecting unknown major schema versions."""
    data = json.loads(text)
    version = str(data.get("schema_version", ""))
    major = version.split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise SchemaError(f"unsupported report schema version {version!r}")
    return data


@contextmanager
def _timed(timings: dict[str, float], phase: str) -> Iterator[None]:
    t0 = time.perf_counter()
    try:
        yield
    finally:
        timings[phase] = timings.get(phase, 0.0) + time.perf_counter() - t0


def quantify(program: MiniProgram, cache: CacheConfig, observation: Observation,
             cfg: QuantifyConfig, backend=None, max_paths: int = 10_000,
             max_steps: int = 100_000) -> LeakReport:
    """Explore, model, optionally prune, check every predicate and aggregate.

    ``backend`` defaults to an :class:`EnumerateBackend`.
    """
    if backend is None:
        backend = EnumerateBackend()
    if cfg.n_bits != program.input_bits:
        raise ValueError(f"N={cfg.n_bits} but the program reads {program.input_bits} input bits")
    cache.check_width(program.addr_width)
    timings: dict[str, float] = {}
    errors: list[str] = []
    with _timed(timings, "explore"):
        result = explore(program, backend, max_paths, max_steps)
    with _timed(timings, "model"):
        models = [build_model(p, cache) for p in result.paths]
    if cfg.prune:
        with _timed(timings, "prune"):
            models = [prune(m, backend) for m in models]
    with _timed(timings, "predicates"):
        status = check_all(models, observation, cfg, backend)
    with _timed(timings, "realizable"):
        verdicts = []
        for f in observed_models(models, observation):
            try:
                verdicts.append(backend.check_sat(f).verdict)
            except SolverError as exc:
                errors.append(f"realizability: {exc}")
                verdicts.append(Verdict.UNKNOWN)
        folded = _fold(verdicts) if verdicts else Status.REFUTED
        realizable = None if folded is Status.UNKNOWN else folded is Status.CONSISTENT

    segments = []
    for i in range(1, cfg.k + 1):
        counts = {s: 0 for s in Status}
        for p, s in status.items():
            if p.segment == i:
                counts[s] += 1
        segments.append(SegmentSummary(i, counts[Status.REFUTED], counts[Status.CONSISTENT],
                                       counts[Status.UNKNOWN], 1 << cfg.width))
    by = {s: sorted((p.segment, p.value) for p, st in status.items() if st is s) for s in Status}
    refuted_counts = [s.refuted for s in segments]
    report = LeakReport(
        program=program.name, input_bits=program.input_bits, cache=cache, observation=observation,
        cfg=cfg, backend=type(backend).__name__, paths=len(result.paths), exhausted=result.exhausted,
        realizable=realizable, segments=segments, refuted=by[Status.REFUTED],
        consistent=by[Status.CONSISTENT], unknown=by[Status.UNKNOWN],
        lower_bound=leak_lower_bound(refuted_counts, cfg),
        pruned={m.path.path_id: dict(m.fixed) for m in models},
        atoms={m.path.path_id: m.atom_count() for m in models},
        errors=errors, timings=timings)
    if cfg.mode is Mode.EXACT and not result.exhausted:
        errors.append("exact count skipped: exploration incomplete")
    elif cfg.mode is Mode.EXACT:
        with _timed(timings, "exact"):
            try:
                report.exact = leak_exact(models, observation, backend, cfg)
            except (CapExceeded, ValueError) as exc:
                errors.append(f"exact count: {exc}")
    if not result.exhausted:
        with _timed(timings, "partial"):
            try:
                report.partial = leak_partial(models, refuted_counts, backend, cfg)
            except (CapExceeded, ValueError) as exc:
                errors.append(f"partial bound: {exc}")
    return report
