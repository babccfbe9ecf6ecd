import io
import json

import pytest

from relevbench import corpus
from relevbench.corpus import CorpusError, SplitSpec

from conftest import synthetic_jsonl


def test_parse_valid_stream():
    text = synthetic_jsonl(3)
    instances, diagnostics = corpus.parse_instances(text)
    assert len(instances) == 3
    assert diagnostics == []


def test_parse_appendix_style_record():
    record = {
        "id": "covid-example",
        "prompt": "Write a systematic survey or overview about conspiracy "
                  "beliefs related to the COVID-19 pandemic.",
        "most_relevant": {
            "title": "The Determinants of Conspiracy Beliefs",
            "abstract": "An overwhelming flood of misinformation ...",
            "related_work": "The COVID-19 pandemic has given rise ...",
        },
        "second_most_relevant": {
            "title": "The science of fake news",
            "abstract": "Addressing fake news requires ...",
            "related_work": "Addressing the issue of fake news ...",
        },
        "second_least_relevant": {
            "title": "Subsidy strategy of pharmaceutical e-commerce",
            "abstract": "With the development of economic globalization ...",
            "related_work": "Previous research has extensively examined ...",
        },
        "least_relevant": {
            "title": "Pedagogy in Cyberspace",
            "abstract": "This article elaborates a model ...",
            "related_work": "The concept of thought and language ...",
        },
    }
    instances, diagnostics = corpus.parse_instances(json.dumps(record))
    assert len(instances) == 1
    assert diagnostics == []
    inst = instances[0]
    assert inst.candidate("most_relevant").title.startswith("The Determinants")


def test_parse_empty_stream():
    instances, diagnostics = corpus.parse_instances("")
    assert instances == []
    assert diagnostics == []


def test_parse_missing_category_rejected_with_line_number():
    records = [json.loads(line) for line in synthetic_jsonl(2).splitlines()]
    del records[1]["least_relevant"]
    text = "\n".join(json.dumps(r) for r in records)
    instances, diagnostics = corpus.parse_instances(text)
    assert len(instances) == 1
    assert len(diagnostics) == 1
    assert diagnostics[0].startswith("line 2:")
    assert "least_relevant" in diagnostics[0]


def test_duplicate_id_hard_error():
    line = synthetic_jsonl(1).strip()
    with pytest.raises(CorpusError, match="duplicate"):
        corpus.parse_instances(line + "\n" + line)


def test_roundtrip():
    instances, _ = corpus.parse_instances(synthetic_jsonl(5, seed=3))
    buf = io.StringIO()
    corpus.serialize_instances(instances, buf)
    again, diagnostics = corpus.parse_instances(buf.getvalue())
    assert diagnostics == []
    assert again == instances


def test_expand_pairs_counts_and_ranks():
    instances, _ = corpus.parse_instances(synthetic_jsonl(2))
    pairs = corpus.expand_pairs(instances)
    assert len(pairs) == 8
    for inst in instances:
        group = [p for p in pairs if p.group_id == inst.instance_id]
        assert sorted(p.rank for p in group) == [0, 1, 2, 3]
    # 2 pairs per rank overall
    for rank in range(4):
        assert sum(1 for p in pairs if p.rank == rank) == 2


def test_expand_assigns_most_rank3():
    instances, _ = corpus.parse_instances(synthetic_jsonl(1))
    pairs = corpus.expand_pairs(instances)
    by_index = {p.candidate_index: p for p in pairs}
    assert by_index[0].rank == 3   # most_relevant
    assert by_index[3].rank == 0   # least_relevant


def test_pair_text_serialization():
    instances, _ = corpus.parse_instances(synthetic_jsonl(1))
    cand = instances[0].candidates[0]
    assert cand.text == cand.title + "\n" + cand.abstract + "\n" + cand.related_work


def test_split_is_instance_granular_partition():
    instances, _ = corpus.parse_instances(synthetic_jsonl(25, seed=4))
    train, test = corpus.split_instances(instances, SplitSpec(0.8, seed=11))
    assert len(train) == 20 and len(test) == 5
    train_ids = {i.instance_id for i in train}
    test_ids = {i.instance_id for i in test}
    assert train_ids.isdisjoint(test_ids)
    assert train_ids | test_ids == {i.instance_id for i in instances}
    pairs = corpus.expand_pairs(instances)
    for p in pairs:
        assert (p.group_id in train_ids) != (p.group_id in test_ids)


def test_split_deterministic_and_order_independent():
    instances, _ = corpus.parse_instances(synthetic_jsonl(12, seed=5))
    spec = SplitSpec(0.75, seed=9)
    a = corpus.split_instances(instances, spec)
    b = corpus.split_instances(list(reversed(instances)), spec)
    assert a == b


def test_split_fraction_bounds():
    with pytest.raises(CorpusError):
        SplitSpec(1.0)
    with pytest.raises(CorpusError):
        SplitSpec(0.0)


def test_subsample_rounding():
    instances, _ = corpus.parse_instances(synthetic_jsonl(30, seed=6))
    sub = corpus.subsample(instances, 78, seed=0)
    assert len(sub) == 20          # 78 pairs rounds up to 20 whole instances
    sub = corpus.subsample(instances, 120, seed=0)
    assert len(sub) == 30
    assert set(sub) == set(instances)   # full size is the identity


def test_subsample_paper_size():
    ids = [f"g{i}" for i in range(2000)]
    keep = corpus.subsample_group_ids(ids, 5032, seed=0)
    assert len(keep) == 1258


def test_subsample_too_large():
    instances, _ = corpus.parse_instances(synthetic_jsonl(3))
    with pytest.raises(CorpusError):
        corpus.subsample(instances, 16, seed=0)


def test_pairs_csv_roundtrip():
    instances, _ = corpus.parse_instances(synthetic_jsonl(4, seed=7))
    pairs = corpus.expand_pairs(instances)
    buf = io.StringIO()
    corpus.write_pairs_csv(pairs, buf)
    buf.seek(0)
    again = corpus.parse_pairs_csv(buf)
    assert again == pairs
