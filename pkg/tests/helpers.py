"""Shared test utilities: random program generator and independent oracles."""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from cacheleak import expr as E
from cacheleak.cacheconfig import CacheConfig, Policy
from cacheleak.program import MiniProgram, parse_program
from cacheleak.simulate import input_bytes, simulate

DM512 = CacheConfig.from_sizes(512, 32, 1)

CRITERION5_CONFIGS = [
    CacheConfig.from_sizes(512, 16, 1),
    CacheConfig.from_sizes(512, 32, 1),
    CacheConfig.from_sizes(1024, 16, 2, Policy.LRU),
    CacheConfig.from_sizes(1024, 32, 2, Policy.LRU),
    CacheConfig.from_sizes(2048, 16, 4, Policy.LRU),
    CacheConfig.from_sizes(2048, 32, 4, Policy.LRU),
]


# ---------------------------------------------------------------------------
# Random programs
# ---------------------------------------------------------------------------

_SIZES = (16, 32, 64, 128, 256)


class _Gen:
    def __init__(self, rng: random.Random, n_bytes: int, max_accesses: int, max_branches: int):
        self.rng = rng
        self.n_bytes = n_bytes
        self.accesses_left = max_accesses
        self.branches_left = max_branches
        self.arrays: list[tuple[str, int, int, bool]] = []
        self.lines: list[str] = []
        self.reg_count = 0

    def layout(self) -> None:
        base = 0
        for idx in range(self.rng.randint(1, 3)):
            size = self.rng.choice(_SIZES)
            base += self.rng.choice((0, 1, 16, 33, 200, 512))
            init = self.rng.random() < 0.4
            self.arrays.append((f"a{idx}", base, size, init))
            decl = f"array a{idx} : {size} @ {base:#x}"
            if init:
                vals = ", ".join(str(self.rng.randrange(256)) for _ in range(size))
                decl += f" = {{ {vals} }}"
            self.lines.append(decl + ";")
            base += size

    def expr(self, regs: Sequence[str], depth: int = 0) -> str:
        r = self.rng.random()
        leaves = [f"k[{i}]" for i in range(self.n_bytes)] + list(regs)
        if depth >= 2 or r < 0.4:
            if self.rng.random() < 0.2:
                return str(self.rng.randrange(256))
            return self.rng.choice(leaves)
        op = self.rng.choice(["+", "-", "^", "&", "|", ">>", "<<", "*"])
        rhs = str(self.rng.randrange(1, 6)) if op in (">>", "<<", "*") else self.expr(regs, depth + 1)
        return f"({self.expr(regs, depth + 1)} {op} {rhs})"

    def cond(self, regs: Sequence[str]) -> str:
        op = self.rng.choice(["<", "<=", ">", ">=", "==", "!="])
        lhs = self.expr(regs)
        if self.rng.random() < 0.5:
            lhs = f"({lhs} & 255)"
        return f"{lhs} {op} {self.rng.randrange(256)}"

    def block(self, regs: list[str], indent: str, budget: int) -> list[str]:
        out = []
        regs = list(regs)
        for _ in range(budget):
            r = self.rng.random()
            if r < 0.15 and self.branches_left > 0 and self.accesses_left > 1:
                self.branches_left -= 1
                out.append(f"{indent}if ({self.cond(regs)}) {{")
                out += self.block(regs, indent + "    ", self.rng.randint(1, 3))
                out.append(f"{indent}}} else {{")
                out += self.block(regs, indent + "    ", self.rng.randint(0, 3))
                out.append(f"{indent}}}")
            elif r < 0.3:
                name = f"r{self.reg_count}"
                self.reg_count += 1
                out.append(f"{indent}reg {name} = {self.expr(regs)};")
                regs.append(name)
            elif self.accesses_left > 0:
                self.accesses_left -= 1
                name, _, size, init = self.rng.choice(self.arrays)
                idx = f"({self.expr(regs)}) & {size - 1}"
                kind = self.rng.random()
                if kind < 0.2:
                    out.append(f"{indent}store {name}[{idx}];")
                elif kind < 0.4 and init:
                    tgt = f"r{self.reg_count}"
                    self.reg_count += 1
                    out.append(f"{indent}load {tgt} = {name}[{idx}];")
                    # only visible afterwards in this block; branches never leak it
                    regs.append(tgt)
                else:
                    out.append(f"{indent}load {name}[{idx}];")
        return out


def random_program_text(seed: int, n_bytes: int | None = None, max_accesses: int = 12,
                        max_branches: int = 3) -> str:
    rng = random.Random(seed)
    if n_bytes is None:
        n_bytes = rng.choice((1, 1, 2))
    g = _Gen(rng, n_bytes, max_accesses, max_branches)
    g.lines = [f"program rnd{seed};", "width 32;", f"input k : {n_bytes} bytes;"]
    g.layout()
    g.lines += g.block([], "", rng.randint(2, 14))
    return "\n".join(g.lines) + "\n"


def random_program(seed: int, **kw) -> MiniProgram:
    return parse_program(random_program_text(seed, **kw), name=f"rnd{seed}")


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def reuse_distance_misses(addresses: Sequence[int], config: CacheConfig) -> tuple[int, ...]:
    """LRU outcome from reuse distances: an access hits iff its block was seen
    before and fewer than ``assoc`` other blocks of its set were touched since."""
    out = []
    blocks = [a >> config.line_log2 for a in addresses]
    for i, b in enumerate(blocks):
        prev = [j for j in range(i) if blocks[j] == b]
        if not prev:
            out.append(1)
            continue
        s = config.set_of(addresses[i])
        between = {blocks[j] for j in range(prev[-1] + 1, i)
                   if config.set_of(addresses[j]) == s and blocks[j] != b}
        out.append(1 if len(between) >= config.assoc else 0)
    return tuple(out)


def all_inputs(n_bytes: int):
    return range(1 << (8 * n_bytes))


def sim_observation_inputs(program: MiniProgram, config: CacheConfig, pred) -> set[int]:
    """Inputs whose simulated trace satisfies ``pred(trace)``."""
    return {v for v in all_inputs(program.input_bytes) if pred(simulate(program, v, config))}


def brute_count(c: E.Constraint, n_bytes: int) -> int:
    """Inputs for which some 0/1 assignment satisfies ``c``, by plain evaluation."""
    vars_ = sorted(E.free_vars(c))
    total = 0
    for v in all_inputs(n_bytes):
        data = input_bytes(v, n_bytes)
        for bits in itertools.product((0, 1), repeat=len(vars_)):
            if E.evaluate(c, data, dict(zip(vars_, bits))):
                total += 1
                break
    return total


def straight_line_program(n: int) -> MiniProgram:
    """``n`` loads with input-dependent addresses and no branches."""
    lines = ["program straight;", "input k : 2 bytes;", "array t : 256 @ 0x000;"]
    for i in range(n):
        lines.append(f"load t[(k[{i % 2}] + {i}) & 255];")
    return parse_program("\n".join(lines) + "\n", name="straight")
