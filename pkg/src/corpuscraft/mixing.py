"""Language-mixing weights and deterministic emission schedules.

Three ways to turn per-language corpus sizes into sampling weights:

* proportional: weight equals corpus share;
* temperature: proportional shares raised to ``1/t`` and renormalized,
  flattening toward uniform as ``t`` grows;
* capped fair share: ascending corpus-size sweep that gives every language
  the remaining budget divided by the languages left, capped at its corpus
  size times the repeat ceiling.

A schedule realizes per-stage target weights as a concrete document
emission order using a deficit rule: at every step the next emission goes
to the language (and within it, the source) whose accumulated entitlement
most exceeds what it has received, with ties broken alphabetically. This
keeps every realized share within one document's tokens of its target and
is fully deterministic.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .documents import CorpusManifest, stream_documents
from .errors import ConfigError, DataError
from .jsonio import iter_jsonl, read_json, write_json, write_jsonl

__all__ = [
    "proportional_weights",
    "temperature_weights",
    "unimax_budgets",
    "StageSpec",
    "MixPlan",
    "Emission",
    "MixSchedule",
    "resolve_targets",
    "build_schedule",
    "schedule_stats",
    "doc_lengths_from_corpus",
]


def _validate_weights(weights: Mapping[str, float], where: str) -> None:
    if not weights:
        raise ConfigError(f"{where}: empty weight set")
    total = 0.0
    for lang, weight in weights.items():
        if weight < 0:
            raise ConfigError(f"{where}: negative weight for {lang!r}")
        total += weight
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"{where}: weights sum to {total!r}, expected 1")


def proportional_weights(lang_tokens: Mapping[str, int]) -> dict[str, float]:
    """Each language's share of the total token count."""
    total = sum(lang_tokens.values())
    if total <= 0:
        raise DataError("corpus has no tokens to derive proportions from")
    return {lang: count / total for lang, count in sorted(lang_tokens.items())}


def temperature_weights(
    weights: Mapping[str, float], temperature: float
) -> dict[str, float]:
    """Flatten *weights* by exponent ``1/temperature`` and renormalize.

    ``temperature=1`` returns the input unchanged; larger temperatures move
    the result toward uniform over the languages with positive weight.
    Zero weights stay zero.
    """
    if temperature <= 0:
        raise ConfigError("temperature must be positive")
    if temperature == 1.0:
        return dict(weights)
    powered = {
        lang: (weight ** (1.0 / temperature) if weight > 0 else 0.0)
        for lang, weight in weights.items()
    }
    total = sum(powered.values())
    if total <= 0:
        raise DataError("all weights are zero")
    return {lang: value / total for lang, value in sorted(powered.items())}


def _unimax_exact(
    lang_tokens: Mapping[str, int], budget: int, max_repeats: int
) -> dict[str, Fraction]:
    if budget < 0:
        raise ConfigError("budget must be non-negative")
    if max_repeats < 1:
        raise ConfigError("max_repeats must be at least 1")
    if not lang_tokens:
        raise ConfigError("no languages to allocate")
    for lang, count in lang_tokens.items():
        if count < 0:
            raise DataError(f"negative token count for {lang!r}")
    ascending = sorted(lang_tokens.items(), key=lambda item: (item[1], item[0]))
    remaining = Fraction(budget)
    out: dict[str, Fraction] = {}
    for position, (lang, count) in enumerate(ascending):
        left = len(ascending) - position
        fair = remaining / left
        alloc = min(Fraction(count) * max_repeats, fair)
        out[lang] = alloc
        remaining -= alloc
    return out


def unimax_budgets(
    lang_tokens: Mapping[str, int], budget: int, max_repeats: int = 6
) -> dict[str, float]:
    """Per-language token budgets under the capped fair-share rule.

    Languages are visited from smallest corpus to largest; each receives
    the lesser of its corpus size times *max_repeats* and an equal split of
    the budget still unassigned. Computed in exact rational arithmetic and
    converted to float at the end, so equal inputs give equal outputs on
    every platform. The total equals ``min(budget, sum(n * max_repeats))``.
    """
    exact = _unimax_exact(lang_tokens, budget, max_repeats)
    return {lang: float(value) for lang, value in sorted(exact.items())}


_TARGET_MODES = ("explicit", "proportional", "temperature", "unimax", "pinned")


@dataclass
class StageSpec:
    """One stage of a mixing plan.

    ``target`` configures the stage's language weights:

    * ``{"mode": "explicit", "weights": {...}}`` uses the weights as given;
    * ``{"mode": "proportional"}`` uses corpus shares;
    * ``{"mode": "temperature", "temperature": t}`` flattens corpus shares;
    * ``{"mode": "unimax", "max_repeats": r}`` normalizes the capped
      fair-share allocation of this stage's budget;
    * ``{"mode": "pinned", "pins": {...}, "base": {...}}`` fixes the pinned
      languages' shares and distributes the remainder over the other
      languages according to the base mode.

    ``ramp_tokens`` linearly interpolates from the previous stage's target
    over the first that many tokens of this stage; 0 switches abruptly.
    ``source_overrides`` reweights the sources inside every language that
    has at least one source named in it; unnamed sources of such a language
    get weight 0. Languages with no named source split proportionally.
    """

    token_budget: int
    target: dict[str, Any]
    source_overrides: dict[str, float] | None = None
    ramp_tokens: int = 0

    def __post_init__(self) -> None:
        if self.token_budget < 1:
            raise ConfigError("stage token_budget must be positive")
        if self.ramp_tokens < 0:
            raise ConfigError("ramp_tokens must be non-negative")
        mode = self.target.get("mode")
        if mode not in _TARGET_MODES:
            raise ConfigError(f"unknown stage target mode {mode!r}")
        if mode == "explicit":
            _validate_weights(self.target.get("weights", {}), "stage target")
        if mode == "temperature" and self.target.get("temperature", 0) <= 0:
            raise ConfigError("stage temperature must be positive")
        if mode == "pinned":
            pins = self.target.get("pins", {})
            if not pins:
                raise ConfigError("pinned stage target needs at least one pin")
            pinned_total = sum(pins.values())
            if any(share < 0 for share in pins.values()) or pinned_total > 1.0 + 1e-9:
                raise ConfigError("pinned shares must be non-negative and sum to at most 1")
            base_mode = self.target.get("base", {"mode": "proportional"}).get("mode")
            if base_mode not in ("proportional", "temperature"):
                raise ConfigError(f"unsupported pin base mode {base_mode!r}")
        if self.source_overrides is not None:
            if not self.source_overrides:
                raise ConfigError("source_overrides must not be empty when given")
            if any(weight < 0 for weight in self.source_overrides.values()):
                raise ConfigError("source override weights must be non-negative")


@dataclass
class MixPlan:
    stages: list[StageSpec]
    max_repeats: int = 6
    seed: int | None = None
    shuffle_within_language: bool = False

    def __post_init__(self) -> None:
        if not self.stages:
            raise ConfigError("a mixing plan needs at least one stage")
        if self.max_repeats < 1:
            raise ConfigError("max_repeats must be at least 1")

    @classmethod
    def from_json(cls, path: str | Path) -> "MixPlan":
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: mixing plan must be a JSON object")
        try:
            stages = [
                StageSpec(
                    token_budget=int(stage["token_budget"]),
                    target=stage["target"],
                    source_overrides=stage.get("source_overrides"),
                    ramp_tokens=int(stage.get("ramp_tokens", 0)),
                )
                for stage in raw["stages"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: malformed stage: {exc}") from exc
        return cls(
            stages=stages,
            max_repeats=int(raw.get("max_repeats", 6)),
            seed=raw.get("seed"),
            shuffle_within_language=bool(raw.get("shuffle_within_language", False)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "stages": [
                {
                    "token_budget": stage.token_budget,
                    "target": stage.target,
                    "source_overrides": stage.source_overrides,
                    "ramp_tokens": stage.ramp_tokens,
                }
                for stage in self.stages
            ],
            "max_repeats": self.max_repeats,
            "seed": self.seed,
            "shuffle_within_language": self.shuffle_within_language,
        }


def resolve_targets(plan: MixPlan, manifest: CorpusManifest) -> list[dict[str, float]]:
    """Materialize every stage's language weights against *manifest*."""
    lang_tokens = manifest.lang_tokens()
    if not lang_tokens:
        raise DataError("manifest has no known-language tokens")
    targets = []
    for index, stage in enumerate(plan.stages):
        where = f"stage {index}"
        mode = stage.target["mode"]
        if mode == "explicit":
            weights = dict(stage.target["weights"])
            for lang in weights:
                if weights[lang] > 0 and lang not in lang_tokens:
                    raise ConfigError(f"{where}: language {lang!r} not in manifest")
        elif mode == "proportional":
            weights = proportional_weights(lang_tokens)
        elif mode == "temperature":
            weights = temperature_weights(
                proportional_weights(lang_tokens), stage.target["temperature"]
            )
        elif mode == "unimax":
            repeats = int(stage.target.get("max_repeats", plan.max_repeats))
            budgets = unimax_budgets(lang_tokens, stage.token_budget, repeats)
            total = sum(budgets.values())
            if total <= 0:
                raise DataError(f"{where}: capped fair-share allocation is empty")
            weights = {lang: value / total for lang, value in budgets.items()}
        else:  # pinned
            pins = dict(stage.target["pins"])
            for lang in pins:
                if lang not in lang_tokens:
                    raise ConfigError(f"{where}: pinned language {lang!r} not in manifest")
            rest_langs = {
                lang: count for lang, count in lang_tokens.items() if lang not in pins
            }
            rest_share = 1.0 - sum(pins.values())
            weights = dict(pins)
            if rest_langs and rest_share > 0:
                base_cfg = stage.target.get("base", {"mode": "proportional"})
                base = proportional_weights(rest_langs)
                if base_cfg.get("mode") == "temperature":
                    base = temperature_weights(base, base_cfg["temperature"])
                for lang, weight in base.items():
                    weights[lang] = rest_share * weight
        _validate_weights(weights, where)
        targets.append({lang: w for lang, w in sorted(weights.items()) if w > 0})
    return targets


@dataclass
class Emission:
    stage: int
    lang: str
    source: str
    doc_index: int
    tokens: int


@dataclass
class MixSchedule:
    emissions: list[Emission]
    stage_tokens: list[int]
    shortfalls: list[int]

    def to_jsonl(self, path: str | Path) -> int:
        return write_jsonl(
            path,
            (
                {
                    "stage": e.stage,
                    "lang": e.lang,
                    "source": e.source,
                    "doc_index": e.doc_index,
                    "tokens": e.tokens,
                }
                for e in self.emissions
            ),
        )

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "MixSchedule":
        emissions = []
        for lineno, record in iter_jsonl(path):
            try:
                emissions.append(
                    Emission(
                        stage=int(record["stage"]),
                        lang=record["lang"],
                        source=record["source"],
                        doc_index=int(record["doc_index"]),
                        tokens=int(record["tokens"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed emission: {exc}") from exc
        stages = max((e.stage for e in emissions), default=-1) + 1
        totals = [0] * stages
        for e in emissions:
            totals[e.stage] += e.tokens
        return cls(emissions=emissions, stage_tokens=totals, shortfalls=[0] * stages)


class _SourceState:
    """Cursor and repeat tracking for one (language, source) document list."""

    __slots__ = ("name", "lengths", "order", "cursor", "passes", "total")

    def __init__(self, name: str, lengths: Sequence[int], order: Sequence[int]) -> None:
        self.name = name
        self.lengths = list(lengths)
        # Zero-length documents are skipped: emitting them would never
        # advance a stage toward its budget.
        self.order = [index for index in order if lengths[index] > 0]
        self.cursor = 0
        self.passes = 0
        self.total = sum(lengths)

    def exhausted(self, max_repeats: int) -> bool:
        return self.passes >= max_repeats or not self.order

    def take(self) -> tuple[int, int]:
        index = self.order[self.cursor]
        tokens = self.lengths[index]
        self.cursor += 1
        if self.cursor >= len(self.order):
            self.cursor = 0
            self.passes += 1
        return index, tokens


def _source_weights(
    sources: dict[str, _SourceState], overrides: dict[str, float] | None
) -> dict[str, float]:
    live = {name: state for name, state in sources.items() if state.lengths}
    if not live:
        return {}
    if overrides and any(name in overrides for name in live):
        weights = {name: overrides.get(name, 0.0) for name in live}
    else:
        weights = {name: float(state.total) for name, state in live.items()}
    total = sum(weights.values())
    if total <= 0:
        weights = {name: 1.0 for name in live}
        total = float(len(live))
    return {name: weight / total for name, weight in sorted(weights.items())}


def doc_lengths_from_corpus(
    manifest: CorpusManifest,
) -> dict[tuple[str, str], list[int]]:
    """Read per-document token counts for every manifest entry.

    Every document must carry a ``token_count``; the lists follow file
    order, paths in sorted order when an entry spans several files.
    """
    lengths: dict[tuple[str, str], list[int]] = {}
    for entry in manifest.entries:
        bucket = lengths.setdefault((entry.lang, entry.source), [])
        for path in sorted(entry.path.split(";")):
            for doc in stream_documents(path):
                if (doc.lang, doc.source) != (entry.lang, entry.source):
                    continue
                if doc.token_count is None:
                    raise DataError(
                        f"document {doc.id!r} has no token_count; tokenize the corpus first"
                    )
                bucket.append(doc.token_count)
    return lengths


def _shuffled_order(
    count: int, seed: int | None, lang: str, source: str, shuffle: bool
) -> list[int]:
    order = list(range(count))
    if shuffle and seed is not None:
        random.Random(f"{seed}:{lang}:{source}").shuffle(order)
    return order


def build_schedule(
    plan: MixPlan,
    manifest: CorpusManifest,
    doc_lengths: Mapping[tuple[str, str], Sequence[int]] | None = None,
) -> MixSchedule:
    """Emit documents stage by stage until every stage budget is met.

    Repeat ceilings and document cursors are shared across stages: a
    document consumed in stage 1 stays consumed in stage 2, and no source
    is traversed more than ``plan.max_repeats`` times over the whole
    schedule. When a language runs out mid-stage the remaining targets are
    renormalized and the deficit bookkeeping restarts for the rest of the
    stage; if everything runs out, the stage records globally how many
    tokens it fell short.
    """
    if doc_lengths is None:
        doc_lengths = doc_lengths_from_corpus(manifest)
    targets = resolve_targets(plan, manifest)

    lang_sources: dict[str, dict[str, _SourceState]] = {}
    for (lang, source), lengths in sorted(doc_lengths.items()):
        if any(length < 0 for length in lengths):
            raise DataError(f"negative document length under {lang}/{source}")
        order = _shuffled_order(
            len(lengths), plan.seed, lang, source, plan.shuffle_within_language
        )
        lang_sources.setdefault(lang, {})[source] = _SourceState(source, lengths, order)

    for index, target in enumerate(targets):
        for lang in target:
            if lang not in lang_sources or not any(
                state.order for state in lang_sources[lang].values()
            ):
                raise ConfigError(
                    f"stage {index}: language {lang!r} has no documents to draw from"
                )

    emissions: list[Emission] = []
    stage_totals: list[int] = []
    shortfalls: list[int] = []

    def live_langs(target: Mapping[str, float]) -> list[str]:
        out = []
        for lang, weight in target.items():
            if weight <= 0:
                continue
            states = lang_sources.get(lang, {})
            if any(not s.exhausted(plan.max_repeats) for s in states.values()):
                out.append(lang)
        return out

    for stage_index, stage in enumerate(plan.stages):
        target = targets[stage_index]
        prev_target = targets[stage_index - 1] if stage_index > 0 else target
        stage_emitted = 0

        alive = live_langs(target)
        credit = {lang: 0.0 for lang in alive}
        given = {lang: 0 for lang in alive}
        source_credit: dict[str, dict[str, float]] = {}
        source_given: dict[str, dict[str, int]] = {}

        def reset_segment() -> None:
            credit.clear()
            given.clear()
            for lang in alive:
                credit[lang] = 0.0
                given[lang] = 0
            source_credit.clear()
            source_given.clear()

        reset_segment()

        while stage_emitted < stage.token_budget:
            if not alive:
                break
            # Effective target: renormalized over live languages, with an
            # optional linear ramp from the previous stage's target.
            base = {lang: target[lang] for lang in alive}
            norm = sum(base.values())
            q = {lang: weight / norm for lang, weight in base.items()}
            if stage.ramp_tokens > 0 and stage_emitted < stage.ramp_tokens:
                frac = stage_emitted / stage.ramp_tokens
                mixed = {
                    lang: (1.0 - frac) * prev_target.get(lang, 0.0) + frac * q[lang]
                    for lang in alive
                }
                norm = sum(mixed.values())
                if norm > 0:
                    q = {lang: weight / norm for lang, weight in mixed.items()}

            lang = min(alive, key=lambda l: (given[l] - credit[l], l))

            states = lang_sources[lang]
            usable = {
                name: state
                for name, state in states.items()
                if not state.exhausted(plan.max_repeats)
            }
            sweights = _source_weights(usable, stage.source_overrides)
            positive = {name: w for name, w in sweights.items() if w > 0}
            if not positive:
                positive = {name: 1.0 / len(usable) for name in sorted(usable)}
            scredit = source_credit.setdefault(lang, {})
            sgiven = source_given.setdefault(lang, {})
            for name in positive:
                scredit.setdefault(name, 0.0)
                sgiven.setdefault(name, 0)
            source = min(positive, key=lambda s: (sgiven[s] - scredit[s], s))
            state = states[source]

            doc_index, tokens = state.take()
            emissions.append(
                Emission(
                    stage=stage_index,
                    lang=lang,
                    source=source,
                    doc_index=doc_index,
                    tokens=tokens,
                )
            )
            stage_emitted += tokens
            given[lang] += tokens
            for name, weight in q.items():
                credit[name] += weight * tokens
            sgiven[source] += tokens
            for name, weight in positive.items():
                scredit[name] += weight * tokens

            if state.exhausted(plan.max_repeats):
                still_alive = live_langs(target)
                if set(still_alive) != set(alive):
                    alive = still_alive
                    reset_segment()
                else:
                    # A source died but its language lives on; restart the
                    # language's internal source bookkeeping.
                    source_credit.pop(lang, None)
                    source_given.pop(lang, None)

        stage_totals.append(stage_emitted)
        shortfalls.append(max(0, stage.token_budget - stage_emitted))

    return MixSchedule(
        emissions=emissions, stage_tokens=stage_totals, shortfalls=shortfalls
    )


def schedule_stats(
    schedule: MixSchedule, emissions: Iterable[Emission] | None = None
) -> dict[str, Any]:
    """Realized token shares per stage and overall.

    Pass *emissions* to restrict the accounting to a slice, for example the
    tail of a stage after a language ran out.
    """
    rows = list(emissions) if emissions is not None else schedule.emissions
    stages: dict[int, dict[str, Any]] = {}
    overall_tokens = 0
    overall_langs: dict[str, int] = {}
    overall_sources: dict[str, int] = {}
    for emission in rows:
        bucket = stages.setdefault(
            emission.stage, {"tokens": 0, "languages": {}, "sources": {}}
        )
        bucket["tokens"] += emission.tokens
        bucket["languages"][emission.lang] = (
            bucket["languages"].get(emission.lang, 0) + emission.tokens
        )
        bucket["sources"][emission.source] = (
            bucket["sources"].get(emission.source, 0) + emission.tokens
        )
        overall_tokens += emission.tokens
        overall_langs[emission.lang] = overall_langs.get(emission.lang, 0) + emission.tokens
        overall_sources[emission.source] = (
            overall_sources.get(emission.source, 0) + emission.tokens
        )

    def shares(counts: dict[str, int], total: int) -> dict[str, float]:
        return {key: value / total for key, value in sorted(counts.items())} if total else {}

    return {
        "stages": [
            {
                "stage": index,
                "tokens": bucket["tokens"],
                "languages": shares(bucket["languages"], bucket["tokens"]),
                "sources": shares(bucket["sources"], bucket["tokens"]),
            }
            for index, bucket in sorted(stages.items())
        ],
        "overall": {
            "tokens": overall_tokens,
            "languages": shares(overall_langs, overall_tokens),
            "sources": shares(overall_sources, overall_tokens),
        },
    }


def save_resolved_plan(
    path: str | Path, plan: MixPlan, targets: list[dict[str, float]]
) -> None:
    """Write the plan with materialized per-stage weights for inspection."""
    payload = plan.to_dict()
    for stage, target in zip(payload["stages"], targets):
        stage["resolved_weights"] = target
    write_json(path, payload)
