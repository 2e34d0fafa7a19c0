import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shiftdial.postproc import Dialogue, GeneratorMeta, finalize_dialogue, read_dialogues, strip_speaker_prefix
from shiftdial.qgen import QATurn, RawDialogue, SourceKind

P, R = SourceKind.PASSAGE_SENTENCE, SourceKind.RELATION_SENTENCE


@pytest.mark.parametrize("raw, clean", [
    ("A: Who is she?", "Who is she?"),
    ("Who is she?", "Who is she?"),
    ("A: A: odd", "A: odd"),
    ("B:   What now?", "What now?"),
    ("A:What?", "What?"),
    ("  Is A: B a ratio?  ", "Is A: B a ratio?"),
    ("C: not a speaker", "C: not a speaker"),
])
def test_strip_speaker_prefix(raw, clean):
    assert strip_speaker_prefix(raw) == clean


def raw_dialogue(questions=("Who is X?", "A: What is macOS?", "Why?")):
    turns = (
        QATurn(questions[0], "X is a thing.", 1, False, P),
        QATurn(questions[1], "X relates to macOS.", 2, True, R),
        QATurn(questions[2], "macOS is an OS.", 2, False, P),
    )
    return RawDialogue(turns, ("X", "macOS"), "w1")


META = GeneratorMeta("stub", None, 42)


def test_finalize_labels_and_prefix():
    d = finalize_dialogue(raw_dialogue(), META)
    assert d.segment_labels == (0, 1, 1)
    assert d.turns[1].question == "What is macOS?"
    assert d.meta == META
    assert len(d.id) == 16


def test_finalize_id_is_deterministic_and_content_based():
    a = finalize_dialogue(raw_dialogue(), META)
    b = finalize_dialogue(raw_dialogue(), META)
    assert a.id == b.id
    c = finalize_dialogue(raw_dialogue(("Who is X?", "What is macOS?", "How?")), META)
    assert c.id != a.id
    assert finalize_dialogue(raw_dialogue(), GeneratorMeta("stub", None, 43)).id != a.id


def test_jsonl_schema_roundtrip():
    d = finalize_dialogue(raw_dialogue(), META)
    rec = json.loads(d.to_json())
    assert list(rec) == ["id", "entities", "turns", "segment_labels", "meta"]
    assert list(rec["turns"][0]) == ["question", "answer", "topic_index", "is_topic_shift", "source_kind"]
    assert rec["meta"] == {"generator": "stub", "model": None, "seed": 42}
    assert rec["turns"][1]["source_kind"] == "RelationSentence"
    (back,) = read_dialogues([d.to_json()])
    assert back == d


def test_read_dialogues_reports_line():
    with pytest.raises(ValueError, match="line 2"):
        list(read_dialogues(["", '{"id": "x"}']))


def test_dialogue_label_mismatch_rejected():
    d = finalize_dialogue(raw_dialogue(), META)
    with pytest.raises(ValueError):
        Dialogue(d.id, d.turns, d.entities, (0, 0, 1), d.meta)


questions = st.text(alphabet=st.sampled_from(list("AB: ?xyz")), max_size=20)


@given(q=questions)
def test_stripping_twice_only_matters_for_stacked_tags(q):
    once = strip_speaker_prefix(q)
    if not once.startswith(("A:", "B:")):
        assert strip_speaker_prefix(once) == once


@given(body=st.lists(questions.filter(lambda q: not q.lstrip().startswith(("A:", "B:"))),
                     min_size=3, max_size=3),
       tags=st.lists(st.sampled_from(["", "A: ", "B:", "A:  "]), min_size=3, max_size=3))
def test_finalize_is_idempotent_on_its_output(body, tags):
    raw = raw_dialogue(tuple(t + q for t, q in zip(tags, body)))
    first = finalize_dialogue(raw, META)
    again = finalize_dialogue(RawDialogue(first.turns, first.entities, "w1"), META)
    assert again == first
    labels = first.segment_labels
    assert labels[0] == 0 and all(0 <= b - a <= 1 for a, b in zip(labels, labels[1:]))
