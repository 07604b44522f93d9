from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wikichurn.cohort import EditorRecord, Label
from wikichurn.errors import EmbeddingMissing, EmptyWindow, GroupUnavailable, LexiconMissing
from wikichurn.features.activity import activity_features, quality_features, revert_rate
from wikichurn.features.empath import N_CATEGORIES, LexiconPack, empath_features
from wikichurn.features.encoder import DIM, FileEncoder, HashingEncoder, bucket_and_sign, token_hash
from wikichurn.features.matrix import (
    FeatureVector,
    Normalization,
    assemble_matrix,
    column_names,
    common_words_for,
    design_matrix,
    featurize_record,
    parse_groups,
    read_features,
    write_feature_csv,
    write_features,
)
from wikichurn.features.text import (
    TAGSET,
    SuffixTagger,
    clean_profile_text,
    common_vocabulary,
    content_tokens,
    is_english,
    pos_features,
    pos_frequencies,
)
from wikichurn.ingest.types import EditEvent, PageRef

DAY = 86400


def ev(ts, ns=0, delta=0, minor=False, dmg=None, gf=None):
    return EditEvent("A", PageRef("P", ns), ts, delta, minor, dmg, gf)


class TestActivity:
    def test_hand_computed_window(self):
        edits = [
            ev(1 * DAY, 0, 100, False, 0.9, 0.2),
            ev(2 * DAY, 1, -40, False, 0.1, 0.8),
            ev(3 * DAY, 4, 10, True, None, None),
            ev(4 * DAY, 5, -6, True, 0.5, 0.6),
            ev(62 * DAY, 0, 300, False, 0.2, 1.0),
        ]
        f = activity_features(edits)
        assert (f.f1_ns0, f.f2_ns1, f.f3_ns4, f.f4_ns5) == (2, 1, 1, 1)
        assert (f.f5_major, f.f6_minor) == (3, 2)
        assert f.f7_add_major == 200.0
        assert f.f8_del_major == 40.0
        assert f.f9_add_minor == 10.0
        assert f.f10_del_minor == 6.0
        assert f.f11_span_months == pytest.approx(61 / 30.44, abs=1e-12)
        assert f.f12_ores_mean == pytest.approx((0.2 + 0.8 + 0.6 + 1.0) / 4)
        assert (f.f13_goodfaith_count, f.f14_damaging_count) == (2, 2)

    def test_single_edit(self):
        f = activity_features([ev(DAY, 0, -5)])
        assert f.f11_span_months == 0.0
        assert f.f7_add_major == 0.0 and f.f8_del_major == 5.0
        assert f.f12_ores_mean == 0.0

    def test_empty_window(self):
        with pytest.raises(EmptyWindow):
            activity_features([])

    @settings(max_examples=80, deadline=None)
    @given(st.lists(
        st.tuples(st.integers(1, 10**9), st.sampled_from([0, 1, 4, 5]), st.integers(-500, 500), st.booleans()),
        min_size=1, max_size=50,
    ))
    def test_invariants(self, rows):
        edits = [ev(t, ns, d, m) for t, ns, d, m in rows]
        f = activity_features(edits)
        assert f.f1_ns0 + f.f2_ns1 + f.f3_ns4 + f.f4_ns5 == len(edits)
        assert f.f5_major + f.f6_minor == len(edits)
        assert min(f.f7_add_major, f.f8_del_major, f.f9_add_minor, f.f10_del_minor, f.f11_span_months) >= 0
        assert activity_features(list(reversed(edits))) == f


class TestQuality:
    def test_revert_rate(self):
        assert revert_rate([2, 0, 1]) == 1.0
        assert revert_rate([]) == 0.0

    def test_quality_from_record(self):
        r = EditorRecord("a", Label.ACTIVE, 1.0, admin_score=12.5, revert_counts=[1, 2])
        q = quality_features(r)
        assert (q.f15_revert_rate, q.f16_admin_score) == (1.5, 12.5)


class TestText:
    def test_cleaning(self):
        raw = "{{User en}}\n'''Hello!''' I edit [[Physics|physics]] articles.<!-- hidden -->\nSee http://example.org"
        assert clean_profile_text(raw) == ["hello!", "i edit physics articles.", "see"]

    def test_markup_only(self):
        assert clean_profile_text('<div class="box">{{Babel|en}}</div>') == []
        assert clean_profile_text("") == []

    def test_external_link_label_kept(self):
        assert clean_profile_text("Visit [http://x.org my site] today.") == ["visit my site today."]

    def test_content_tokens(self):
        toks = content_tokens(["the cats were running quickly xqzvw"])
        assert toks == [["cats", "running", "quickly"]]
        assert content_tokens(["xqzvw"], use_dictionary=False) == [["xqzvw"]]

    def test_dictionary_inflections(self):
        assert is_english("running") and is_english("studies")
        assert not is_english("xqzvw")

    def test_tagger(self):
        t = SuffixTagger()
        assert t.tag(["quickly", "happiness", "running", "42"]) == ["RB", "NN", "VBG", "CD"]
        assert set(t.tag(["the", "zzz", "editor's"])) <= set(TAGSET)

    def test_pos_frequencies_sum(self):
        f = pos_frequencies([("a", "NN"), ("b", "NN"), ("c", "VB"), ("d", "JJ")], frozenset({"d"}))
        assert f["NN"] == pytest.approx(2 / 3)
        assert sum(f.values()) == pytest.approx(1.0)
        assert set(f) == set(TAGSET)

    def test_pos_features_empty(self):
        assert all(v == 0.0 for v in pos_features([], SuffixTagger()).values())

    def test_common_vocabulary(self):
        assert common_vocabulary([{"a", "b"}, {"c"}], [{"b", "c", "d"}]) == {"b", "c"}


class TestEmpath:
    def test_shipped_pack(self):
        pack = LexiconPack.load()
        assert len(pack.categories) == N_CATEGORIES
        assert "joy" in pack.categories

    def test_scores_average_sentences(self, tmp_path):
        cats = [f"c{i}" for i in range(N_CATEGORIES)]
        (tmp_path / "manifest").write_text("\n".join(cats))
        for c in cats:
            (tmp_path / f"{c}.txt").write_text("")
        (tmp_path / "c0.txt").write_text("happy\nglad\n")
        pack = LexiconPack.load(tmp_path)
        scores = empath_features(["happy happy sad day", "glad", "..."], pack)
        assert scores[0] == pytest.approx((2 / 4 + 1) / 2)
        assert scores[1:].sum() == 0

    def test_missing_pack(self, tmp_path):
        with pytest.raises(LexiconMissing):
            LexiconPack.load(tmp_path)

    def test_short_manifest(self, tmp_path):
        (tmp_path / "manifest").write_text("joy\n")
        with pytest.raises(LexiconMissing):
            LexiconPack.load(tmp_path)


class TestEncoder:
    def test_hash_definition(self):
        import hashlib

        digest = hashlib.blake2b(b"wiki", digest_size=8).digest()
        h = int.from_bytes(digest, "little")
        assert token_hash("wiki") == h
        assert bucket_and_sign("wiki") == (h % DIM, -1 if h >= 2**63 else 1)

    def test_unit_norm_and_determinism(self):
        enc = HashingEncoder()
        v = enc.encode("a", "i write about birds and birds")
        assert v.shape == (DIM,)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.array_equal(v, enc.encode("b", "i write about birds and birds"))
        assert not enc.encode("a", "").any()

    def test_file_encoder(self, tmp_path):
        p = tmp_path / "emb.ndjson"
        p.write_text(json.dumps({"editor": "a", "vector": [0.5] * DIM}) + "\n")
        enc = FileEncoder(p)
        assert enc.encode("a", "").sum() == pytest.approx(DIM / 2)
        with pytest.raises(EmbeddingMissing):
            enc.encode("b", "")

    def test_file_encoder_shape(self, tmp_path):
        p = tmp_path / "emb.ndjson"
        p.write_text(json.dumps({"editor": "a", "vector": [0.5] * 3}) + "\n")
        with pytest.raises(ValueError):
            FileEncoder(p)


def make_vector(name, label, admin, revert, tokens=(), sv=None):
    f = activity_features([ev(DAY, 0, 10), ev(2 * DAY, 1, -3, True)])
    return FeatureVector(
        editor=name, label=label, g1=f, pos_tokens=list(tokens),
        empath=np.zeros(N_CATEGORIES), sentence_vec=sv,
        admin_score=admin, revert_rate=revert,
        lexicon_categories=tuple(f"c{i}" for i in range(N_CATEGORIES)),
    )


class TestMatrix:
    def test_parse_groups(self):
        assert parse_groups("g5, g1,G4") == ("G1", "G4", "G5")
        with pytest.raises(ValueError):
            parse_groups("g9")
        with pytest.raises(ValueError):
            parse_groups("")

    def test_column_layout(self):
        names = column_names(("G1", "G2", "G3", "G4", "G5"), [f"c{i}" for i in range(N_CATEGORIES)])
        assert len(names) == 14 + len(TAGSET) + N_CATEGORIES + DIM + 2
        assert names[0] == "g1.f1_ns0" and names[-2:] == ["g4.admin_score", "g5.revert_rate"]

    def test_normalization_unclipped(self):
        norm = Normalization.fit(np.array([[2.0, 7.0], [6.0, 7.0]]))
        out = norm.transform(np.array([[8.0, 9.0], [2.0, 7.0]]))
        assert out[0, 0] == pytest.approx(1.5)
        assert out[1, 0] == 0.0
        assert (out[:, 1] == 0.0).all()

    def test_normalization_width_check(self):
        with pytest.raises(ValueError):
            Normalization.fit(np.ones((2, 2))).transform(np.ones((2, 3)))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3), min_size=1, max_size=20))
    def test_training_rows_land_in_unit_interval(self, rows):
        X = np.array(rows)
        Z = Normalization.fit(X).transform(X)
        assert Z.min() >= 0.0 and Z.max() <= 1.0 + 1e-12

    def test_common_words_removed_from_g2(self):
        a = make_vector("a", "missing", 1, 0, [("wiki", "NN"), ("love", "VB")])
        b = make_vector("b", "active", 2, 1, [("wiki", "NN"), ("edit", "VB")])
        common = common_words_for([a, b])
        assert common == {"wiki"}
        row = a.block("G2", common)
        assert row[TAGSET.index("VB")] == 1.0 and row[TAGSET.index("NN")] == 0.0

    def test_g3_unavailable(self):
        with pytest.raises(GroupUnavailable):
            design_matrix([make_vector("a", "active", 1, 0)], ["G3"])

    def test_design_and_assemble(self):
        vs = [make_vector("a", "missing", 2, 0.5), make_vector("b", "active", 6, 1.5), make_vector("c", "unlabeled", 8, 1.0)]
        X, y, names = design_matrix(vs, ["G4", "G5"])
        assert names == ["g4.admin_score", "g5.revert_rate"]
        assert y.tolist() == [1, 0, -1]
        Z, _, norm, _ = assemble_matrix(vs[:2], ["G4", "G5"])
        assert Z.tolist() == [[0.0, 0.0], [1.0, 1.0]]
        Zc, *_ = assemble_matrix(vs[2:], ["G4", "G5"], normalization=norm)
        assert Zc[0].tolist() == pytest.approx([1.5, 0.5])

    def test_io_round_trip(self, tmp_path):
        vs = [make_vector("a", "missing", 2, 0.5, [("wiki", "NN")], sv=np.arange(DIM) / DIM)]
        write_features(tmp_path / "f.ndjson", vs, header={"seed": 1})
        back = read_features(tmp_path / "f.ndjson")
        assert back[0].to_dict() == vs[0].to_dict()
        write_feature_csv(tmp_path / "f.csv", vs, preamble="# x\n")
        lines = (tmp_path / "f.csv").read_text().splitlines()
        assert lines[0] == "# x"
        assert lines[1].startswith("editor,g1.f1_ns0") and lines[1].endswith(",label")
        assert lines[2].startswith("a,1,1,")


def test_featurize_record(mini_source):
    from wikichurn.cohort import enrich_records

    base = EditorRecord("E1", Label.MISSING, 1.0)
    (r,), _ = enrich_records(mini_source, [base])
    v = featurize_record(r, SuffixTagger(), LexiconPack.load(), HashingEncoder())
    assert v.g1.f1_ns0 + v.g1.f2_ns1 + v.g1.f3_ns4 + v.g1.f4_ns5 == 50
    assert v.admin_score == pytest.approx(734.38)
    assert v.revert_rate == 1.0
    assert [t for t, _ in v.pos_tokens] == ["hello", "edit", "physics", "articles", "see"]
    assert np.linalg.norm(v.sentence_vec) == pytest.approx(1.0)
