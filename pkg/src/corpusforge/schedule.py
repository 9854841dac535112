"""Stage-based data scheduling: turn per-(source, lang) token inventories
into ordered shard-slice manifests, plus the training-run arithmetic
(warmup/cosine learning rate, tokens per step).

Planning is allocation, not sampling: each stage takes
budget * mix[source] * lang_mix[lang] tokens from a per-pair cursor, so the
realized source mix equals the requested mix up to doc-rounding and stages
can never overlap.  The seed only shuffles the interleave order.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from corpusforge.errors import InsufficientTokens, MixInfeasible, StepOutOfRange

RATIO_TOL = 1e-9
BUDGET_TOL = 0.01  # relative
MIX_TOL = 0.02  # absolute
PRIMARY_MASS_MIN = 0.90


@dataclass
class StageSpec:
    name: str
    token_budget: int
    mix: dict  # source -> ratio
    lang_mix: dict  # lang -> ratio
    complexity_rank: int
    # Declared primary sets backing the >=90% primary-mass rule; None skips
    # the check for hand-built specs that do not declare them.
    primary_sources: Optional[list] = None
    primary_langs: Optional[list] = None


@dataclass
class StagePlan:
    stages: list
    total_tokens: int

    @classmethod
    def from_specs(cls, specs: Iterable[StageSpec]) -> "StagePlan":
        specs = list(specs)
        return cls(stages=specs, total_tokens=sum(s.token_budget for s in specs))


@dataclass
class InventoryEntry:
    source: str
    lang: str
    tokens: int
    docs: int
    docs_per_shard: int = 50_000
    path_template: str = "{source}-{lang}-{shard:05d}.jsonl"

    def shard_path(self, shard: int) -> str:
        return self.path_template.format(source=self.source, lang=self.lang, shard=shard)


@dataclass
class ManifestEntry:
    path: str
    start_doc: int  # within-shard, inclusive
    end_doc: int  # within-shard, exclusive
    est_tokens: int
    source: str
    lang: str

    def to_dict(self):
        return {
            "path": self.path,
            "start_doc": self.start_doc,
            "end_doc": self.end_doc,
            "est_tokens": self.est_tokens,
            "source": self.source,
            "lang": self.lang,
        }


@dataclass
class Manifest:
    stage_name: str
    entries: list
    realized_mix: dict

    @property
    def est_tokens(self) -> int:
        return sum(e.est_tokens for e in self.entries)

    def to_dict(self):
        return {
            "stage_name": self.stage_name,
            "est_tokens": self.est_tokens,
            "realized_mix": {k: self.realized_mix[k] for k in sorted(self.realized_mix)},
            "entries": [e.to_dict() for e in self.entries],
        }


def validate_plan(plan: StagePlan) -> list:
    """Violations as data; empty list means the plan is sound."""
    violations = []
    ranks = [s.complexity_rank for s in plan.stages]
    if any(b < a for a, b in zip(ranks, ranks[1:])):
        violations.append("complexity_not_monotone")
    for spec in plan.stages:
        if spec.token_budget <= 0:
            violations.append(f"{spec.name}:budget_not_positive")
        if abs(sum(spec.mix.values()) - 1.0) > RATIO_TOL:
            violations.append(f"{spec.name}:mix_not_normalized")
        if abs(sum(spec.lang_mix.values()) - 1.0) > RATIO_TOL:
            violations.append(f"{spec.name}:lang_mix_not_normalized")
        if spec.primary_sources is not None:
            mass = sum(spec.mix.get(s, 0.0) for s in spec.primary_sources)
            if mass < PRIMARY_MASS_MIN:
                violations.append(f"{spec.name}:primary_mass_below_0.90")
        if spec.primary_langs is not None:
            mass = sum(spec.lang_mix.get(l, 0.0) for l in spec.primary_langs)
            if mass < PRIMARY_MASS_MIN:
                violations.append(f"{spec.name}:primary_lang_mass_below_0.90")
    if plan.total_tokens != sum(s.token_budget for s in plan.stages):
        violations.append("total_tokens_mismatch")
    return violations


def _stage_alloc(spec: StageSpec) -> dict:
    alloc = {}
    for source, m in spec.mix.items():
        for lang, lm in spec.lang_mix.items():
            need = spec.token_budget * m * lm
            if need > 0.0:
                alloc[(source, lang)] = need
    return alloc


def _slice_entries(entry: InventoryEntry, start: int, count: int, avg: float) -> list:
    """Split a doc range into per-shard manifest entries."""
    out = []
    pos = start
    remaining = count
    while remaining > 0:
        shard = pos // entry.docs_per_shard
        offset = pos % entry.docs_per_shard
        take = min(remaining, entry.docs_per_shard - offset)
        out.append(ManifestEntry(
            path=entry.shard_path(shard),
            start_doc=offset,
            end_doc=offset + take,
            est_tokens=round(take * avg),
            source=entry.source,
            lang=entry.lang,
        ))
        pos += take
        remaining -= take
    return out


def plan_stages(inventory: Iterable[InventoryEntry], specs: list, seed: int) -> list:
    """One Manifest per StageSpec; raises instead of emitting a bad plan."""
    inv = {}
    for e in inventory:
        if (e.source, e.lang) in inv:
            raise ValueError(f"duplicate inventory entry ({e.source}, {e.lang})")
        inv[(e.source, e.lang)] = e

    for spec in specs:
        if spec.token_budget <= 0:
            raise MixInfeasible(f"{spec.name}: token_budget must be positive")
        if abs(sum(spec.mix.values()) - 1.0) > RATIO_TOL:
            raise MixInfeasible(f"{spec.name}: source mix does not sum to 1")
        if abs(sum(spec.lang_mix.values()) - 1.0) > RATIO_TOL:
            raise MixInfeasible(f"{spec.name}: lang mix does not sum to 1")

    cursors = {key: 0 for key in inv}
    manifests = []
    for spec in specs:
        alloc = _stage_alloc(spec)
        rng = random.Random(f"{seed}:{spec.name}")
        segment_lists = []
        source_tokens: dict = {source: 0 for source in spec.mix}
        for key in sorted(alloc):
            need = alloc[key]
            entry = inv.get(key)
            if entry is None or entry.tokens <= 0 or entry.docs <= 0:
                raise InsufficientTokens(key[0], key[1], math.ceil(need), 0)
            avg = entry.tokens / entry.docs
            docs_needed = round(need / avg)
            available = entry.docs - cursors[key]
            if docs_needed > available:
                raise InsufficientTokens(
                    key[0], key[1], math.ceil(need), round(available * avg)
                )
            if docs_needed == 0:
                continue
            segments = _slice_entries(entry, cursors[key], docs_needed, avg)
            cursors[key] += docs_needed
            segment_lists.append(segments)
            source_tokens[key[0]] += sum(s.est_tokens for s in segments)

        rng.shuffle(segment_lists)
        entries = []
        while segment_lists:  # round-robin interleave, one segment per turn
            segment_lists = [lst for lst in segment_lists if lst]
            for lst in segment_lists:
                if lst:
                    entries.append(lst.pop(0))

        total_est = sum(e.est_tokens for e in entries)
        if total_est == 0:
            raise MixInfeasible(f"{spec.name}: allocation produced no documents")
        if abs(total_est - spec.token_budget) > BUDGET_TOL * spec.token_budget:
            raise MixInfeasible(
                f"{spec.name}: doc granularity misses budget by "
                f"{total_est - spec.token_budget} tokens (> {BUDGET_TOL:.0%})"
            )
        realized = {source: t / total_est for source, t in source_tokens.items()}
        for source, ratio in spec.mix.items():
            if abs(realized.get(source, 0.0) - ratio) > MIX_TOL:
                raise MixInfeasible(
                    f"{spec.name}: source {source} realized {realized.get(source, 0.0):.4f} "
                    f"vs requested {ratio:.4f}"
                )
        manifests.append(Manifest(stage_name=spec.name, entries=entries, realized_mix=realized))
    return manifests


@dataclass
class LrSchedule:
    warmup_steps: int
    peak_lr: float
    final_lr: float
    total_steps: int

    def __post_init__(self):
        if not 0 < self.final_lr <= self.peak_lr:
            raise ValueError("need 0 < final_lr <= peak_lr")
        if not 0 <= self.warmup_steps < self.total_steps:
            raise ValueError("need 0 <= warmup_steps < total_steps")


def lr_at_step(s: int, sched: LrSchedule) -> float:
    if not 0 <= s <= sched.total_steps:
        raise StepOutOfRange(f"step {s} outside [0, {sched.total_steps}]")
    if s <= sched.warmup_steps:
        if sched.warmup_steps == 0:
            return sched.peak_lr
        # peak * (s / warmup) is exact at the boundary; (peak * s) / warmup
        # is not, and the boundary value is load-bearing.
        return sched.peak_lr * (s / sched.warmup_steps)
    progress = (s - sched.warmup_steps) / (sched.total_steps - sched.warmup_steps)
    return sched.final_lr + (sched.peak_lr - sched.final_lr) * (1.0 + math.cos(math.pi * progress)) / 2.0


def tokens_per_step(batch_size: int, seq_len: int) -> int:
    if batch_size <= 0 or seq_len <= 0:
        raise ValueError("batch_size and seq_len must be positive")
    return batch_size * seq_len


def three_stage_preset(scale: float = 1.0) -> list:
    """Three-stage curriculum totalling 2,000 billion tokens at scale 1.0:
    600B of mostly web/news in English+Chinese, then 500B adding textbooks
    and academic text, then 900B adding source code.  Mix numbers are
    declared defaults chosen to keep each stage's primary mass above 90%.
    """
    def b(billions: float) -> int:
        return round(billions * 1e9 * scale)

    return [
        StageSpec(
            name="early",
            token_budget=b(600),
            mix={"web": 0.62, "news": 0.30, "books": 0.04, "academic": 0.02, "code": 0.02},
            lang_mix={"en": 0.60, "zh": 0.32, "ja": 0.04, "ko": 0.02, "other": 0.02},
            complexity_rank=1,
            primary_sources=["web", "news"],
            primary_langs=["en", "zh"],
        ),
        StageSpec(
            name="middle",
            token_budget=b(500),
            mix={"web": 0.42, "news": 0.25, "books": 0.15, "academic": 0.12, "code": 0.06},
            lang_mix={"en": 0.50, "zh": 0.34, "ja": 0.06, "ko": 0.03, "other": 0.07},
            complexity_rank=2,
            primary_sources=["web", "news", "books", "academic"],
            primary_langs=["en", "zh", "other"],
        ),
        StageSpec(
            name="final",
            token_budget=b(900),
            mix={"web": 0.33, "news": 0.20, "books": 0.17, "academic": 0.15, "code": 0.15},
            lang_mix={"en": 0.48, "zh": 0.35, "ja": 0.06, "ko": 0.03, "other": 0.08},
            complexity_rank=3,
            primary_sources=["web", "news", "books", "academic", "code"],
            primary_langs=["en", "zh", "other"],
        ),
    ]
