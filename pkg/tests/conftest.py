import json

import numpy as np
import pytest

from relevbench.corpus import CATEGORIES, CATEGORY_RANK

NOISE_WORDS = [f"word{i}" for i in range(60)]


def synthetic_record(instance_id: str, rng: np.random.Generator) -> dict:
    """One instance whose thermometer bits are linearly separable in
    builtin-vectorizer space: bit k is flagged by the token sig<k>."""
    prompt = "write a systematic survey about " + " ".join(
        rng.choice(NOISE_WORDS, size=6)
    )
    record = {"id": instance_id, "prompt": prompt}
    for category in CATEGORIES:
        rank = CATEGORY_RANK[category]
        signal = " ".join(
            f"sig{k}" for k in range(3) if rank > k for _ in range(4)
        )
        noise = " ".join(rng.choice(NOISE_WORDS, size=8))
        record[category] = {
            "title": f"paper {instance_id} rank {rank}",
            "abstract": (signal + " " + noise).strip(),
            "related_work": " ".join(rng.choice(NOISE_WORDS, size=5)),
        }
    return record


def synthetic_jsonl(n_instances: int, seed: int = 0) -> str:
    rng = np.random.default_rng(seed)
    lines = [
        json.dumps(synthetic_record(f"inst{i:04d}", rng))
        for i in range(n_instances)
    ]
    return "\n".join(lines) + "\n"


@pytest.fixture
def small_dataset(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text(synthetic_jsonl(40, seed=1), encoding="utf-8")
    return path


@pytest.fixture
def desk_dataset(tmp_path):
    path = tmp_path / "desk.jsonl"
    path.write_text(synthetic_jsonl(200, seed=2), encoding="utf-8")
    return path


def brute_force_tau(pred, true):
    """O(n^2) pair-enumeration oracle for (C - D) / (C + D)."""
    n = len(pred)
    conc = disc = 0
    for i in range(n):
        for j in range(i + 1, n):
            dp = np.sign(pred[i] - pred[j])
            dt = np.sign(true[i] - true[j])
            if dp == 0 or dt == 0:
                continue
            if dp == dt:
                conc += 1
            else:
                disc += 1
    if conc + disc == 0:
        return 0.0, conc, disc
    return (conc - disc) / (conc + disc), conc, disc


def confusion_matrix_f1(pred, true, cls):
    """Direct confusion-matrix arithmetic oracle for one-vs-rest F1."""
    tp = sum(1 for p, t in zip(pred, true) if p == cls and t == cls)
    fp = sum(1 for p, t in zip(pred, true) if p == cls and t != cls)
    fn = sum(1 for p, t in zip(pred, true) if p != cls and t == cls)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)
