import io
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from skelhar.dataset import (
    JOINT,
    LABEL_INDEX,
    LABELS,
    LINE_TOKENS,
    MIRROR_PERMUTATION,
    N_JOINTS,
    Cad60Warning,
    Corpus,
    EmptyCorpusError,
    MalformedLineError,
    UnknownSubjectError,
    generate_synthetic_corpus,
    iter_loso,
    load_cache,
    load_corpus,
    parse_cad60_skeleton_file,
    save_cache,
    scene_labels,
    scene_subset,
    scenes_for_label,
    split_loso,
    synthetic_templates,
)


def cad60_line(frame_id, positions, confidence=None):
    """Write one raw line the way the CAD-60 distribution lays it out."""
    confidence = np.ones(N_JOINTS) if confidence is None else confidence
    parts = [str(frame_id)]
    for j in range(N_JOINTS):
        if j < 11:
            parts += ["0.5"] * 9 + ["1"]
        parts += [repr(float(v)) for v in positions[j]] + [repr(float(confidence[j]))]
    return ",".join(parts) + ","


def cad60_text(frames, end=True):
    lines = [cad60_line(i + 1, p) for i, p in enumerate(frames)]
    if end:
        lines.append("END")
    return "\n".join(lines) + "\n"


def write_subject(folder, recordings):
    folder.mkdir(parents=True)
    index = []
    for rec_id, label, frames in recordings:
        (folder / f"{rec_id}.txt").write_text(cad60_text(frames))
        index.append(f"{rec_id},{label},")
    (folder / "activityLabel.txt").write_text("\n".join(index) + "\nEND\n")


def test_line_layout_has_171_values():
    assert LINE_TOKENS == 171
    assert len(cad60_line(1, np.zeros((15, 3))).split(",")) == 172  # trailing comma


def test_zero_line_parses_to_zero_frame():
    frames = parse_cad60_skeleton_file(cad60_text([np.zeros((15, 3))]))
    assert len(frames) == 1
    assert frames[0].frame_index == 1
    assert np.all(frames[0].positions == 0)
    assert len(frames[0].joints) == 15


def test_three_lines_plus_end():
    rng = np.random.default_rng(0)
    frames = parse_cad60_skeleton_file(cad60_text(rng.normal(size=(3, 15, 3))).encode())
    assert [f.frame_index for f in frames] == [1, 2, 3]


def test_positions_taken_verbatim_and_orientation_dropped():
    rng = np.random.default_rng(1)
    pos = np.round(rng.normal(0, 500, (15, 3)), 3)
    conf = rng.integers(0, 2, 15).astype(float)
    text = cad60_line(7, pos, conf) + "\nEND\n"
    (frame,) = parse_cad60_skeleton_file(io.StringIO(text))
    assert frame.frame_index == 7
    np.testing.assert_array_equal(frame.positions, pos)
    np.testing.assert_array_equal(frame.confidence, conf)


def test_frame_count_matches_line_count():
    rng = np.random.default_rng(2)
    text = cad60_text(rng.normal(size=(37, 15, 3)))
    data_lines = sum(1 for line in text.splitlines() if line.strip() and line.strip() != "END")
    assert len(parse_cad60_skeleton_file(text)) == data_lines


def test_wrong_token_count_rejects_file():
    good = cad60_line(1, np.zeros((15, 3)))
    bad = ",".join(good.split(",")[:-5]) + ","
    with pytest.raises(MalformedLineError):
        parse_cad60_skeleton_file(good + "\n" + bad + "\nEND\n")


def test_missing_end_warns_but_keeps_frames():
    text = cad60_text([np.zeros((15, 3))] * 2, end=False)
    with pytest.warns(Cad60Warning):
        frames = parse_cad60_skeleton_file(text)
    assert len(frames) == 2


def test_scene_table_bathroom_and_office():
    names = {LABELS[i] for i in scene_labels("bathroom")}
    assert names == {"brushing teeth", "rinsing mouth with water", "wearing contact lenses"}
    assert len(scene_labels("office")) == 4
    with_optional = {LABELS[i] for i in scene_labels("bathroom", include_optional=True)}
    assert with_optional == names | {"random", "still"}


def test_drinking_water_belongs_to_several_scenes():
    assert set(scenes_for_label(LABEL_INDEX["drinking water"])) == {"bedroom", "kitchen", "livingroom", "office"}


def test_every_label_has_a_scene():
    for i in range(len(LABELS)):
        assert scenes_for_label(i)


def test_mirror_permutation_swaps_sides():
    assert MIRROR_PERMUTATION[JOINT["left_hand"]] == JOINT["right_hand"]
    assert MIRROR_PERMUTATION[JOINT["head"]] == JOINT["head"]
    np.testing.assert_array_equal(MIRROR_PERMUTATION[MIRROR_PERMUTATION], np.arange(15))


def test_load_corpus_from_raw_tree(tmp_path):
    rng = np.random.default_rng(3)
    for s in (1, 2, 3, 4):
        write_subject(
            tmp_path / f"data{s}",
            [
                (f"{s}00", "brushing teeth", rng.normal(size=(4, 15, 3))),
                (f"{s}01", "drinking water", rng.normal(size=(5, 15, 3))),
            ],
        )
    corpus = load_corpus(tmp_path)
    assert corpus.subjects == (1, 2, 3, 4)
    assert corpus.provenance == "cad60_raw"
    assert corpus.n_frames == 4 * 9
    drink = [r for r in corpus if r.label == LABEL_INDEX["drinking water"]][0]
    assert len(drink.scenes) == 4


def test_load_corpus_three_subjects_warns(tmp_path):
    for s in (1, 2, 4):
        write_subject(tmp_path / f"data{s}", [(f"{s}00", "still", np.zeros((3, 15, 3)))])
    with pytest.warns(Cad60Warning, match="missing"):
        corpus = load_corpus(tmp_path)
    assert corpus.subjects == (1, 2, 4)


def test_unknown_label_is_skipped_with_diagnostic(tmp_path):
    write_subject(tmp_path / "data1", [("100", "juggling", np.zeros((3, 15, 3))), ("101", "still", np.zeros((3, 15, 3)))])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        corpus = load_corpus(tmp_path)
    assert len(corpus) == 1
    assert any("juggling" in str(w.message) for w in caught)


def test_empty_directory_is_fatal(tmp_path):
    with pytest.raises(EmptyCorpusError):
        load_corpus(tmp_path)


def test_cache_round_trip(tmp_path):
    corpus = generate_synthetic_corpus(5, 3, 4, 12)
    save_cache(corpus, tmp_path)
    back = load_corpus(tmp_path)
    assert back == corpus
    assert load_cache(tmp_path) == corpus


def test_raw_then_cache_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    write_subject(tmp_path / "raw" / "data2", [("200", "cooking (stirring)", np.round(rng.normal(0, 400, (6, 15, 3)), 3))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", Cad60Warning)
        raw = load_corpus(tmp_path / "raw")
    save_cache(raw, tmp_path / "cache")
    assert load_corpus(tmp_path / "cache") == raw


def test_synthetic_is_deterministic():
    a = generate_synthetic_corpus(7, 4, 3, 60)
    b = generate_synthetic_corpus(7, 4, 3, 60)
    assert a == b
    assert all(x.positions.tobytes() == y.positions.tobytes() for x, y in zip(a, b))
    assert generate_synthetic_corpus(8, 4, 3, 60) != a


def test_synthetic_shape():
    corpus = generate_synthetic_corpus(7, 4, 3, 60)
    assert corpus.subjects == (1, 2, 3, 4)
    assert len(corpus.labels) == 3
    assert all(len(r) == 60 and r.positions.shape[1:] == (15, 3) for r in corpus)
    assert corpus.provenance == "synthetic"


def test_synthetic_templates_are_distinct():
    tpl = synthetic_templates(7, 6)
    d = np.linalg.norm(tpl[:, None] - tpl[None], axis=-1)
    assert d[~np.eye(6, dtype=bool)].min() > 0


@pytest.mark.parametrize("args", [(7, 1, 3, 60), (7, 4, 1, 60), (7, 4, 3, 11), (7, 5, 3, 60), (7, 4, 15, 60)])
def test_synthetic_rejects_bad_counts(args):
    with pytest.raises(ValueError):
        generate_synthetic_corpus(*args)


def test_split_loso_partition():
    corpus = generate_synthetic_corpus(7, 4, 3, 12)
    split = split_loso(corpus, 2)
    assert split.train.subjects == (1, 3, 4)
    assert split.test.subjects == (2,)
    assert len(split.train) + len(split.test) == len(corpus)
    ids = [r.recording_id for s in iter_loso(corpus) for r in s.test]
    assert sorted(ids) == sorted(r.recording_id for r in corpus)


def test_split_loso_unknown_subject():
    corpus = generate_synthetic_corpus(7, 2, 3, 12)
    with pytest.raises(UnknownSubjectError):
        split_loso(corpus, 4)


def test_scene_subset_bedroom_and_idempotent():
    corpus = generate_synthetic_corpus(1, 2, 14, 12)
    bedroom = scene_subset(corpus, "bedroom", include_optional=True)
    allowed = {"talking on the phone", "drinking water", "opening pill container", "random", "still"}
    assert {LABELS[i] for i in bedroom.labels} <= allowed
    assert scene_subset(bedroom, "bedroom", True) == bedroom
    assert len(scene_subset(corpus, "office").labels) == 4
    for scene in ("bathroom", "bedroom", "kitchen", "livingroom", "office"):
        assert 3 <= len(scene_subset(corpus, scene, True).labels) <= 6


@given(
    arrays(np.float64, (3, 15, 3), elements=st.floats(-5000, 5000, allow_nan=False).map(lambda v: round(v, 3))),
)
def test_parse_is_faithful_for_any_positions(frames):
    parsed = parse_cad60_skeleton_file(cad60_text(frames))
    assert all(len(f.joints) == 15 for f in parsed)
    np.testing.assert_array_equal(np.array([f.positions for f in parsed]), frames)


@given(st.integers(0, 2**31), st.integers(2, 4), st.integers(2, 14))
def test_synthetic_frames_have_15_joints(seed, subjects, classes):
    corpus = generate_synthetic_corpus(seed, subjects, classes, 12)
    assert len(corpus) == subjects * classes
    assert all(f.positions.shape == (15, 3) for r in corpus for f in r.frames[:2])


def test_corpus_rejects_foreign_subject():
    rec = generate_synthetic_corpus(7, 2, 2, 12).recordings[0]
    with pytest.raises(ValueError):
        Corpus((rec.__class__(rec.recording_id, 5, rec.scenes, rec.label, rec.positions, rec.confidence, rec.frame_indices),))
