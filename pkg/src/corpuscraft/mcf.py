"""Multiple-choice question rendering and chat-dataset mixture assembly.

A multiple-choice item (question, four options, gold index) renders under
one of 18 presentation formats: three index styles (A-D, a-d, 1-4), three
separators (period, parenthesis, comma), and two answer styles (the bare
index, or the index plus the option text). Format choice per item and the
option order are driven by a small deterministic mixing function of the
seed, so renders reproduce bit-for-bit on any platform, and every
rendered item parses back to its gold option.

Mixture assembly merges several chat datasets by taking a fixed-size
prefix of each, shuffling the union with a seeded generator, and
reporting per-dataset counts and fractions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError, DataError
from .jsonio import iter_jsonl, read_json, write_json, write_jsonl

__all__ = [
    "INDEX_STYLES",
    "SEPARATORS",
    "ANSWER_STYLES",
    "ALL_FORMATS",
    "FormatSpec",
    "McfItem",
    "sample_format",
    "shuffle_options",
    "render_mcf",
    "parse_rendered",
    "read_mcf_items",
    "MixtureComponent",
    "MixturePlan",
    "MixtureReport",
    "plan_report",
    "assemble_sft_mixture",
]

INDEX_STYLES = ("upper", "lower", "numeric")
SEPARATORS = (".", ")", ",")
ANSWER_STYLES = ("index", "index_text")

_N_OPTIONS = 4
_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class FormatSpec:
    index_style: str
    separator: str
    answer_style: str

    def __post_init__(self) -> None:
        if self.index_style not in INDEX_STYLES:
            raise ConfigError(f"unknown index style {self.index_style!r}")
        if self.separator not in SEPARATORS:
            raise ConfigError(f"unknown separator {self.separator!r}")
        if self.answer_style not in ANSWER_STYLES:
            raise ConfigError(f"unknown answer style {self.answer_style!r}")

    def label(self, position: int) -> str:
        if not 0 <= position < _N_OPTIONS:
            raise ConfigError(f"option position {position} out of range")
        if self.index_style == "upper":
            return "ABCD"[position]
        if self.index_style == "lower":
            return "abcd"[position]
        return str(position + 1)

    def position(self, label: str) -> int:
        try:
            if self.index_style == "upper":
                return "ABCD".index(label)
            if self.index_style == "lower":
                return "abcd".index(label)
            return ["1", "2", "3", "4"].index(label)
        except ValueError:
            raise DataError(f"label {label!r} invalid for style {self.index_style!r}") from None


# Fixed enumeration order: index style varies slowest, answer style fastest.
ALL_FORMATS: tuple[FormatSpec, ...] = tuple(
    FormatSpec(index_style, separator, answer_style)
    for index_style in INDEX_STYLES
    for separator in SEPARATORS
    for answer_style in ANSWER_STYLES
)


@dataclass
class McfItem:
    question: str
    options: list[str]
    gold_index: int
    source_id: str = ""

    def __post_init__(self) -> None:
        if len(self.options) != _N_OPTIONS:
            raise DataError(
                f"item {self.source_id!r}: expected {_N_OPTIONS} options, "
                f"found {len(self.options)}"
            )
        if len(set(self.options)) != _N_OPTIONS:
            raise DataError(f"item {self.source_id!r}: options must be distinct")
        if not 0 <= self.gold_index < _N_OPTIONS:
            raise DataError(f"item {self.source_id!r}: gold_index out of range")
        if not self.question.strip():
            raise DataError(f"item {self.source_id!r}: question is empty")


def _splitmix64(value: int) -> int:
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & _MASK64
    return value ^ (value >> 31)


def sample_format(seed: int, item_index: int) -> FormatSpec:
    """Pick one of the 18 formats, uniformly and platform-independently."""
    if item_index < 0:
        raise ConfigError("item_index must be non-negative")
    mixed = _splitmix64((seed & _MASK64) ^ _splitmix64(item_index & _MASK64))
    return ALL_FORMATS[mixed % len(ALL_FORMATS)]


def shuffle_options(item: McfItem, seed: int, item_index: int = 0) -> McfItem:
    """Reorder the options with a seeded permutation, tracking the gold."""
    state = _splitmix64((seed & _MASK64) ^ _splitmix64((item_index + 0x5851) & _MASK64))
    perm = list(range(_N_OPTIONS))
    for position in range(_N_OPTIONS - 1, 0, -1):
        state = _splitmix64(state)
        swap = state % (position + 1)
        perm[position], perm[swap] = perm[swap], perm[position]
    options = [item.options[perm[position]] for position in range(_N_OPTIONS)]
    return replace(item, options=options, gold_index=perm.index(item.gold_index))


def render_mcf(item: McfItem, spec: FormatSpec) -> tuple[str, str]:
    """Return the prompt and the expected answer string."""
    lines = [item.question]
    for position, option in enumerate(item.options):
        lines.append(f"{spec.label(position)}{spec.separator} {option}")
    prompt = "\n".join(lines)
    gold_label = spec.label(item.gold_index)
    if spec.answer_style == "index":
        answer = gold_label
    else:
        answer = f"{gold_label}{spec.separator} {item.options[item.gold_index]}"
    return prompt, answer


def parse_rendered(prompt: str, answer: str, spec: FormatSpec) -> int:
    """Recover the gold option position from a rendered pair.

    Raises a data error when the prompt does not carry four well-formed
    option lines or the answer does not match them under *spec*.
    """
    lines = prompt.split("\n")
    if len(lines) < _N_OPTIONS + 1:
        raise DataError("prompt has fewer lines than a question plus four options")
    options = []
    for position, line in enumerate(lines[-_N_OPTIONS:]):
        want = f"{spec.label(position)}{spec.separator} "
        if not line.startswith(want):
            raise DataError(f"option line {line!r} does not start with {want!r}")
        options.append(line[len(want):])
    if spec.answer_style == "index":
        return spec.position(answer)
    label, sep, text = answer.partition(spec.separator + " ")
    if not sep:
        raise DataError(f"answer {answer!r} lacks the {spec.separator!r} separator")
    position = spec.position(label)
    if options[position] != text:
        raise DataError("answer text does not match the option at its label")
    return position


def read_mcf_items(path: str | Path) -> list[McfItem]:
    items = []
    for lineno, record in iter_jsonl(path):
        try:
            items.append(
                McfItem(
                    question=record["question"],
                    options=list(record["options"]),
                    gold_index=int(record["gold_index"]),
                    source_id=str(record.get("id", f"line{lineno}")),
                )
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: malformed item: {exc}") from exc
    return items


@dataclass
class MixtureComponent:
    name: str
    path: str
    requested_count: int
    language: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("mixture component needs a name")
        if self.requested_count < 1:
            raise ConfigError(f"component {self.name!r}: requested_count must be positive")


@dataclass
class MixturePlan:
    components: list[MixtureComponent]
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.components:
            raise ConfigError("mixture plan has no components")
        names = [component.name for component in self.components]
        if len(set(names)) != len(names):
            raise ConfigError("mixture component names must be unique")

    @classmethod
    def from_json(cls, path: str | Path) -> "MixturePlan":
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: mixture plan must be a JSON object")
        try:
            components = [
                MixtureComponent(
                    name=entry["name"],
                    path=entry.get("path", ""),
                    requested_count=int(entry["count"]),
                    language=entry.get("language", ""),
                )
                for entry in raw["datasets"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: malformed mixture component: {exc}") from exc
        return cls(components=components, seed=int(raw.get("seed", 0)))


@dataclass
class MixtureReport:
    total: int
    per_dataset: list[dict[str, Any]]

    def fraction(self, name: str) -> float:
        for entry in self.per_dataset:
            if entry["name"] == name:
                return entry["fraction"]
        raise DataError(f"no dataset named {name!r} in the report")

    def to_dict(self) -> dict[str, Any]:
        return {"total": self.total, "datasets": self.per_dataset}

    def save(self, path: str | Path) -> None:
        write_json(path, self.to_dict())


def plan_report(plan: MixturePlan) -> MixtureReport:
    """Requested counts and fractions, before touching any files."""
    total = sum(component.requested_count for component in plan.components)
    return MixtureReport(
        total=total,
        per_dataset=[
            {
                "name": component.name,
                "language": component.language,
                "count": component.requested_count,
                "fraction": component.requested_count / total,
            }
            for component in plan.components
        ],
    )


_CHAT_KEY_MAPS = (
    ("system", "user", "assistant"),
    (None, "prompt", "answer"),
    (None, "prompt", "response"),
    (None, "question", "answer"),
    (None, "instruction", "response"),
    (None, "instruction", "output"),
)


def _to_chat(record: Any, where: str) -> dict[str, str]:
    if not isinstance(record, dict):
        raise DataError(f"{where}: chat record must be a JSON object")
    for system_key, user_key, assistant_key in _CHAT_KEY_MAPS:
        if user_key in record and assistant_key in record:
            return {
                "system": str(record.get(system_key, "") or "") if system_key else "",
                "user": str(record[user_key]),
                "assistant": str(record[assistant_key]),
            }
    raise DataError(f"{where}: record has no recognizable prompt/response fields")


def assemble_sft_mixture(
    plan: MixturePlan, out_path: str | Path
) -> MixtureReport:
    """Merge dataset prefixes into one shuffled chat file.

    Each component must supply at least its requested count of records; a
    shortfall is a data error naming the dataset. Records are normalized
    to ``{system, user, assistant, dataset}`` and the merged order comes
    from a seeded shuffle, so equal plans give byte-identical output.
    """
    merged: list[dict[str, str]] = []
    per_dataset = []
    for component in plan.components:
        taken = 0
        for lineno, record in iter_jsonl(component.path):
            if taken >= component.requested_count:
                break
            chat = _to_chat(record, f"{component.path}:{lineno}")
            chat["dataset"] = component.name
            merged.append(chat)
            taken += 1
        if taken < component.requested_count:
            raise DataError(
                f"dataset {component.name!r} has only {taken} records, "
                f"requested {component.requested_count}"
            )
        per_dataset.append(
            {
                "name": component.name,
                "language": component.language,
                "count": taken,
                "fraction": 0.0,
            }
        )
    total = len(merged)
    for entry in per_dataset:
        entry["fraction"] = entry["count"] / total
    order = list(range(total))
    random.Random(plan.seed).shuffle(order)
    write_jsonl(out_path, (merged[index] for index in order))
    return MixtureReport(total=total, per_dataset=per_dataset)
