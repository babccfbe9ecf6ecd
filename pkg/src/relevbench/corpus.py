"""Data model and ingestion: instances, pair expansion, splits, subsampling.

An instance is one command prompt plus exactly four candidate papers, one per
relevance category.  For supervised learning each instance is expanded into
four (prompt, paper, rank) pairs sharing a group id.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

# Category order fixes candidate_index: most_relevant is candidate 0.
CATEGORIES = (
    "most_relevant",
    "second_most_relevant",
    "second_least_relevant",
    "least_relevant",
)

# Ordinal rank per category: 3 = most relevant ... 0 = least relevant.
CATEGORY_RANK = {
    "most_relevant": 3,
    "second_most_relevant": 2,
    "second_least_relevant": 1,
    "least_relevant": 0,
}

RANKS = (0, 1, 2, 3)


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus data."""


@dataclass(frozen=True)
class CandidatePaper:
    title: str
    abstract: str = ""
    related_work: str = ""

    def __post_init__(self):
        if not self.title:
            raise CorpusError("candidate paper title must be non-empty")
        if not (self.abstract or self.related_work):
            raise CorpusError(
                "candidate paper needs at least one of abstract/related_work"
            )

    @property
    def text(self) -> str:
        """Serialized pair text: title, abstract, related work, newline-joined."""
        return "\n".join([self.title, self.abstract, self.related_work])


@dataclass(frozen=True)
class Instance:
    instance_id: str
    prompt: str
    candidates: tuple[CandidatePaper, CandidatePaper, CandidatePaper, CandidatePaper]

    def __post_init__(self):
        if not self.prompt:
            raise CorpusError(f"instance {self.instance_id!r}: prompt must be non-empty")
        if len(self.candidates) != 4:
            raise CorpusError(
                f"instance {self.instance_id!r}: expected 4 candidates, "
                f"got {len(self.candidates)}"
            )

    def candidate(self, category: str) -> CandidatePaper:
        return self.candidates[CATEGORIES.index(category)]


@dataclass(frozen=True)
class PairRecord:
    group_id: str
    candidate_index: int
    prompt: str
    paper_text: str
    rank: int

    def __post_init__(self):
        if self.rank not in RANKS:
            raise CorpusError(f"rank must be in 0..3, got {self.rank}")
        if not 0 <= self.candidate_index <= 3:
            raise CorpusError(f"candidate_index must be in 0..3, got {self.candidate_index}")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise CorpusError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


def parse_instances(source) -> tuple[list[Instance], list[str]]:
    """Parse line-delimited JSON records into instances.

    Accepts a text stream or iterable of lines.  Each line is one record with
    fields ``id``, ``prompt``, and the four category objects.  Malformed
    records are rejected and reported with their 1-based line number in the
    returned diagnostics list.  A duplicate instance id is a hard error.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    instances: list[Instance] = []
    diagnostics: list[str] = []
    seen: set[str] = set()
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            instance = _instance_from_record(record)
        except (json.JSONDecodeError, KeyError, TypeError, CorpusError) as exc:
            diagnostics.append(f"line {lineno}: {exc}")
            continue
        if instance.instance_id in seen:
            raise CorpusError(
                f"line {lineno}: duplicate instance id {instance.instance_id!r}"
            )
        seen.add(instance.instance_id)
        instances.append(instance)
    return instances, diagnostics


def _instance_from_record(record: dict) -> Instance:
    if "id" not in record:
        raise CorpusError("missing field 'id'")
    if "prompt" not in record:
        raise CorpusError("missing field 'prompt'")
    candidates = []
    for category in CATEGORIES:
        if category not in record:
            raise CorpusError(f"missing category field {category!r}")
        obj = record[category]
        candidates.append(
            CandidatePaper(
                title=obj.get("title", ""),
                abstract=obj.get("abstract", ""),
                related_work=obj.get("related_work", ""),
            )
        )
    return Instance(
        instance_id=str(record["id"]),
        prompt=record["prompt"],
        candidates=tuple(candidates),
    )


def serialize_instances(instances: list[Instance], stream) -> None:
    """Write instances back out in the line-delimited JSON format."""
    for inst in instances:
        record = {"id": inst.instance_id, "prompt": inst.prompt}
        for category, cand in zip(CATEGORIES, inst.candidates):
            record[category] = {
                "title": cand.title,
                "abstract": cand.abstract,
                "related_work": cand.related_work,
            }
        stream.write(json.dumps(record, sort_keys=True) + "\n")


def expand_pairs(instances: list[Instance]) -> list[PairRecord]:
    """Expand each instance into 4 pair records with ranks {3,2,1,0}."""
    pairs = []
    for inst in instances:
        for idx, (category, cand) in enumerate(zip(CATEGORIES, inst.candidates)):
            pairs.append(
                PairRecord(
                    group_id=inst.instance_id,
                    candidate_index=idx,
                    prompt=inst.prompt,
                    paper_text=cand.text,
                    rank=CATEGORY_RANK[category],
                )
            )
    return pairs


def parse_pairs_csv(source) -> list[PairRecord]:
    """Parse the pre-expanded pair-level CSV format.

    Columns: group_id, candidate_index, prompt, paper_text, rank.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader(source)
    required = {"group_id", "candidate_index", "prompt", "paper_text", "rank"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise CorpusError(f"pair CSV must have columns {sorted(required)}")
    pairs = []
    for row in reader:
        pairs.append(
            PairRecord(
                group_id=row["group_id"],
                candidate_index=int(row["candidate_index"]),
                prompt=row["prompt"],
                paper_text=row["paper_text"],
                rank=int(row["rank"]),
            )
        )
    return pairs


def write_pairs_csv(pairs: list[PairRecord], stream) -> None:
    writer = csv.writer(stream)
    writer.writerow(["group_id", "candidate_index", "prompt", "paper_text", "rank"])
    for p in pairs:
        writer.writerow([p.group_id, p.candidate_index, p.prompt, p.paper_text, p.rank])


def split_group_ids(group_ids, spec: SplitSpec) -> tuple[set[str], set[str]]:
    """Deterministic group-granular partition of ids into train/test.

    Ids are sorted before shuffling so the split is independent of input
    order; |train| = round(train_fraction * N).
    """
    ordered = sorted(set(group_ids))
    if len(ordered) < 2:
        raise CorpusError("need at least 2 groups to split")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(len(ordered))
    n_train = round(spec.train_fraction * len(ordered))
    train = {ordered[i] for i in perm[:n_train]}
    test = {ordered[i] for i in perm[n_train:]}
    return train, test


def split_instances(
    instances: list[Instance], spec: SplitSpec
) -> tuple[list[Instance], list[Instance]]:
    """Deterministic instance-granular train/test split.

    All four pairs of an instance land on the same side.
    """
    train_ids, _ = split_group_ids([inst.instance_id for inst in instances], spec)
    ordered = sorted(instances, key=lambda inst: inst.instance_id)
    train = [inst for inst in ordered if inst.instance_id in train_ids]
    test = [inst for inst in ordered if inst.instance_id not in train_ids]
    return train, test


def subsample_group_ids(group_ids, n_pairs: int, seed: int) -> set[str]:
    """Uniform group subsample covering about n_pairs pairs.

    Rounds up to ceil(n_pairs / 4) whole groups; the realized pair count is
    4x the returned group count.
    """
    ordered = sorted(set(group_ids))
    n_groups = -(-n_pairs // 4)
    if n_groups > len(ordered):
        raise CorpusError(
            f"requested {n_pairs} pairs ({n_groups} groups) but only "
            f"{len(ordered)} groups available"
        )
    if n_groups == len(ordered):
        return set(ordered)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(ordered), size=n_groups, replace=False)
    return {ordered[i] for i in chosen}


def subsample(instances: list[Instance], n_pairs: int, seed: int) -> list[Instance]:
    """Uniform subsample of whole instances covering about n_pairs pairs."""
    keep = subsample_group_ids([inst.instance_id for inst in instances], n_pairs, seed)
    ordered = sorted(instances, key=lambda inst: inst.instance_id)
    return [inst for inst in ordered if inst.instance_id in keep]


def load_instances(path) -> list[Instance]:
    """Load instances from a JSONL file, raising on any malformed record."""
    with open(path, "r", encoding="utf-8") as fh:
        instances, diagnostics = parse_instances(fh)
    if diagnostics:
        raise CorpusError(
            f"{path}: {len(diagnostics)} malformed record(s); first: {diagnostics[0]}"
        )
    return instances
