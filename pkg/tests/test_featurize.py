import math

import numpy as np
import pytest

from topicrec.corpus import Corpus, LabelVocab, RepoRecord
from topicrec.errors import DataError
from topicrec.featurize import build_vocab, load_term_vocab, save_term_vocab, tfidf


def _corpus(texts):
    vocab = LabelVocab(("t0",))
    recs = tuple(RepoRecord(f"r{i}", t, frozenset()) for i, t in enumerate(texts))
    return Corpus(vocab, recs)


class TestBuildVocab:
    def test_all_terms_kept(self):
        tv = build_vocab(_corpus(["a b", "b c"]), min_df=1)
        assert tv.terms == ("a", "b", "c")

    def test_min_df_filter(self):
        tv = build_vocab(_corpus(["a b", "b c"]), min_df=2)
        assert tv.terms == ("b",)

    def test_idf_of_ubiquitous_term_is_one(self):
        tv = build_vocab(_corpus(["t x", "t y"]), min_df=1)
        i = tv.terms.index("t")
        assert tv.idf[i] == pytest.approx(math.log(3 / 3) + 1, abs=1e-15)

    def test_idf_formula(self):
        tv = build_vocab(_corpus(["a b", "b c", "c d"]), min_df=1)
        for term, df in zip(tv.terms, tv.df):
            expected = math.log((1 + 3) / (1 + df)) + 1
            assert tv.idf[tv.terms.index(term)] == pytest.approx(expected, abs=1e-12)

    def test_max_features_keeps_highest_df_ties_lexicographic(self):
        tv = build_vocab(_corpus(["a b c", "b c d", "c"]), min_df=1, max_features=2)
        # df: c=3, b=2, a=1, d=1 -> keep c and b, ids in lexicographic order
        assert tv.terms == ("b", "c")

    def test_df_counts_documents_not_occurrences(self):
        tv = build_vocab(_corpus(["a a a", "a b"]), min_df=1)
        assert tv.df[tv.terms.index("a")] == 2

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            build_vocab(_corpus([]), min_df=1)

    def test_bad_min_df_rejected(self):
        with pytest.raises(ValueError):
            build_vocab(_corpus(["a"]), min_df=0)


class TestTfidf:
    @pytest.fixture
    def tv(self):
        return build_vocab(_corpus(["a b", "a b"]), min_df=1)  # idf(a)=idf(b)=1

    def test_empty_text(self, tv):
        vec = tfidf("", tv)
        assert vec.nnz == 0

    def test_single_token_unit_vector(self, tv):
        vec = tfidf("a", tv)
        assert vec.indices.tolist() == [tv.terms.index("a")]
        np.testing.assert_allclose(vec.values, [1.0], atol=1e-12)

    def test_hand_computed_counts(self, tv):
        vec = tfidf("b b a", tv)
        np.testing.assert_allclose(vec.values, [1 / math.sqrt(5), 2 / math.sqrt(5)], atol=1e-12)
        assert vec.indices.tolist() == sorted(vec.indices.tolist())

    def test_oov_ignored(self, tv):
        assert tfidf("zzz qqq", tv).nnz == 0
        vec = tfidf("a zzz", tv)
        np.testing.assert_allclose(vec.values, [1.0], atol=1e-12)

    def test_token_order_irrelevant(self, tv):
        a = tfidf("a b b", tv)
        b = tfidf("b a b", tv)
        assert a.indices.tolist() == b.indices.tolist()
        np.testing.assert_allclose(a.values, b.values, atol=0)

    def test_norm_is_zero_or_one(self, tv):
        for text in ("", "a", "a b b", "zzz"):
            vec = tfidf(text, tv)
            norm = float(np.sqrt((vec.values**2).sum()))
            assert norm == pytest.approx(0.0, abs=1e-9) or norm == pytest.approx(1.0, abs=1e-9)

    def test_values_finite_positive(self, tv):
        vec = tfidf("a a b", tv)
        assert np.all(np.isfinite(vec.values)) and np.all(vec.values > 0)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        tv = build_vocab(_corpus(["alpha beta", "beta gamma", "gamma beta"]), min_df=1)
        path = tmp_path / "terms.tsv"
        save_term_vocab(tv, path)
        loaded = load_term_vocab(path)
        assert loaded.terms == tv.terms
        assert loaded.df.tolist() == tv.df.tolist()
        np.testing.assert_array_equal(loaded.idf, tv.idf)
        assert (loaded.n_docs, loaded.min_df, loaded.max_features) == (
            tv.n_docs,
            tv.min_df,
            tv.max_features,
        )

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "terms.tsv"
        path.write_text("a\t1\t1.0\n")
        with pytest.raises(DataError):
            load_term_vocab(path)
