"""Command-line front end: ``cacheleak analyze | hist | export-smt | paths``."""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import expr as E
from .cache_model import build_model, prune
from .cacheconfig import CacheConfig, parse_cache_spec
from .observers import Observation, Observer, constrain, observe, parse_observation, parse_observer
from .program import BUNDLED, MiniProgram, ProgramError, bundled, load_program
from .quantify import Mode, Predicate, QuantifyConfig, quantify
from .simulate import SimulationFault, histogram, histogram_csv, simulate
from .solver import (BackendConfig, BackendKind, SolverError, emit_smtlib, make_backend)
from .symexec import explore

log = logging.getLogger("cacheleak")


class ConfigError(Exception):
    pass


def resolve_program(arg: str) -> MiniProgram:
    path = Path(arg)
    if path.exists():
        return load_program(path)
    stem = arg[:-5] if arg.endswith(".prog") else arg
    if stem in BUNDLED and path.parent == Path("."):
        return bundled(stem)
    raise ConfigError(f"cannot read program {arg!r} (bundled: {', '.join(BUNDLED)})")


def _backend(args) -> object:
    kind = BackendKind(args.backend)
    cmd = tuple(shlex.split(args.smt_cmd)) if args.smt_cmd else None
    if kind is BackendKind.SMT and cmd is None:
        cmd = ("z3", "-in")
    return make_backend(BackendConfig(kind, args.cap, args.timeout, cmd))


def _observation(args, prog: MiniProgram, cache: CacheConfig) -> Observation:
    if (args.obs is None) == (args.input is None):
        raise ConfigError("give exactly one of --obs or --input")
    trace = simulate(prog, _parse_int(args.input), cache) if args.input is not None else None
    if args.observer == "seq:all":
        n = len(trace) if trace is not None else len(args.obs.split(","))
        if n == 0:
            raise ConfigError("seq:all needs at least one access")
        observer = Observer.full_sequence(n)
    else:
        observer = parse_observer(args.observer)
    if trace is not None:
        return observe(trace, observer)
    return parse_observation(observer, args.obs)


def _parse_int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ConfigError(f"bad integer {text!r}") from None


def _write(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)


def cmd_analyze(args) -> int:
    prog = resolve_program(args.program)
    cache = parse_cache_spec(args.cache)
    obs = _observation(args, prog, cache)
    cfg = QuantifyConfig(prog.input_bits, args.K, Mode(args.mode), prune=not args.no_prune)
    report = quantify(prog, cache, obs, cfg, _backend(args), args.max_paths, args.max_steps)
    _write(args, report.to_json())
    return 0


def cmd_hist(args) -> int:
    prog = resolve_program(args.program)
    cache = parse_cache_spec(args.cache)
    if args.sample is not None and args.rng_seed is None:
        raise ConfigError("--sample needs --rng-seed")
    if args.sample is None and not args.full:
        raise ConfigError("give --full or --sample N --rng-seed S")
    if args.sample is not None and args.full:
        raise ConfigError("--full and --sample are exclusive")
    _write(args, histogram_csv(histogram(prog, cache, args.sample, args.rng_seed, args.cap)))
    return 0


def _parse_predicate(text: str, n_bits: int, k: int) -> Predicate:
    try:
        seg, val = (int(x, 0) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"predicate must look like <segment>:<value>, got {text!r}") from None
    cfg = QuantifyConfig(n_bits, k)
    if not 1 <= seg <= k or not 0 <= val < 1 << cfg.width:
        raise ConfigError(f"predicate {text!r} out of range for N={n_bits}, K={k}")
    return Predicate(seg, val, cfg.width)


def cmd_export_smt(args) -> int:
    prog = resolve_program(args.program)
    cache = parse_cache_spec(args.cache)
    backend = _backend(args)
    paths = explore(prog, backend, args.max_paths, args.max_steps).paths
    obs = _observation(args, prog, cache) if args.target != "gamma" else None
    pred = None
    if args.target == "pred":
        if args.predicate is None:
            raise ConfigError("--target pred needs --predicate <segment>:<value>")
        pred = _parse_predicate(args.predicate, prog.input_bits, args.K)
    scripts = []
    for p in paths:
        m = build_model(p, cache)
        if not args.no_prune:
            m = prune(m, backend)
        parts = [m.gamma]
        if obs is not None:
            parts.append(constrain(obs, p))
        if pred is not None:
            parts.append(pred.constraint)
        scripts.append((p.path_id, emit_smtlib(E.conj(*parts))))
    if args.out in (None, "-"):
        for pid, text in scripts:
            sys.stdout.write(f"; path {pid}\n{text}")
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for pid, text in scripts:
            (out / f"{prog.name}_path{pid}_{args.target}.smt2").write_text(text)
    return 0


def cmd_paths(args) -> int:
    prog = resolve_program(args.program)
    res = explore(prog, _backend(args), args.max_paths, args.max_steps)
    doc = {
        "program": prog.name,
        "exhausted": res.exhausted,
        "paths": [{
            "path_id": p.path_id,
            "pc": E.show(p.pc),
            "trace": [{"index": t.index, "sid": t.instr_id, "object": t.obj,
                       "address": E.show(t.sigma)} for t in p.trace],
        } for p in res.paths],
    }
    _write(args, json.dumps(doc, indent=2) + "\n")
    return 0


def _common(p: argparse.ArgumentParser, cache: bool = True) -> None:
    p.add_argument("program", help="program file or bundled name (fig2a, fig2b, fig2c, toysbox)")
    if cache:
        p.add_argument("--cache", default="512B/32B/1", help="<total>/<line>/<assoc>[:lru]")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--cap", type=int, default=24, help="enumeration input-bit cap")


def _solver_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=["enumerate", "smt"], default="enumerate")
    p.add_argument("--smt-cmd", help="external solver command (default: z3 -in)")
    p.add_argument("--timeout", type=float, default=60.0, help="seconds per external query")
    p.add_argument("--max-paths", type=int, default=10_000)
    p.add_argument("--max-steps", type=int, default=100_000)


def _obs_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--observer", default="count", help="count | seq:1,2,3 | seq:all")
    p.add_argument("--obs", help="observation: miss count or comma-separated bits")
    p.add_argument("--input", help="derive the observation by simulating this input")
    p.add_argument("--K", type=int, default=1, help="number of input segments")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cacheleak", description="Cache side-channel leak quantification")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="quantify the leak of one observation")
    _common(a)
    _solver_opts(a)
    _obs_opts(a)
    a.add_argument("--mode", choices=["exact", "bounded"], default="exact")
    a.add_argument("--no-prune", action="store_true")
    a.set_defaults(func=cmd_analyze)

    h = sub.add_parser("hist", help="miss-count histogram over inputs (CSV)")
    _common(h)
    h.add_argument("--full", action="store_true")
    h.add_argument("--sample", type=int)
    h.add_argument("--rng-seed", type=int)
    h.set_defaults(func=cmd_hist)

    e = sub.add_parser("export-smt", help="write SMT-LIB scripts, one per path")
    _common(e)
    _solver_opts(e)
    _obs_opts(e)
    e.add_argument("--target", choices=["gamma", "obs", "pred"], default="gamma",
                   help="gamma, gamma & observation, or gamma & observation & predicate")
    e.add_argument("--predicate", help="<segment>:<value> for --target pred")
    e.add_argument("--no-prune", action="store_true")
    e.set_defaults(func=cmd_export_smt)

    pa = sub.add_parser("paths", help="dump explored paths")
    _common(pa, cache=False)
    _solver_opts(pa)
    pa.set_defaults(func=cmd_paths)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ProgramError, ValueError, IndexError, OSError) as exc:
        print(f"cacheleak: error: {exc}", file=sys.stderr)
        return 2
    except (SimulationFault, SolverError) as exc:
        print(f"cacheleak: runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
