import hashlib
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afdforge.features import (
    FunctionWordFilter,
    SparseVector,
    Stemmer,
    TfidfVectorizer,
    Vocabulary,
    build_vocabulary,
    filter_function_words,
    load_function_words,
    stem,
    tfidf_matrix,
    tfidf_vector,
)

FUNCTION_WORDS_SHA256 = "0dd74379b5b9a86ab3e12efba2211bfe45d513daebdfe449f4e78d401bbabf5c"


@pytest.mark.parametrize(
    "word, expected",
    [("sources", "sourc"), ("vanity", "vaniti"), ("keep", "keep"), ("deletion", "delet"), ("WPNPA", "WPNPA")],
)
def test_stem_examples(word, expected):
    assert stem(word) == expected


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=14))
def test_stem_idempotent(word):
    assert stem(stem(word)) == stem(word)


def test_vocabulary_counts():
    vocab = build_vocabulary([["a", "b"], ["b"]], [1, 0])
    assert vocab.n_documents == 2
    assert dict(zip(vocab.terms, vocab.df)) == {"a": 1, "b": 2}
    assert list(vocab.tf_pos) == [1, 1] and list(vocab.tf_neg) == [0, 1]


def test_empty_vocabulary():
    vocab = build_vocabulary([])
    assert vocab.n_documents == 0 and len(vocab) == 0
    with pytest.raises(ValueError):
        tfidf_vector(["a"], vocab)
    with pytest.raises(ValueError):
        vocab.idf()


def test_short_words_not_pruned():
    assert "i" in build_vocabulary([["i", "a"], ["b"]])


def test_vocabulary_tsv_round_trip():
    vocab = build_vocabulary([["a", "b", "b"], ["b", "c"]], [1, 0])
    back = Vocabulary.from_tsv(vocab.to_tsv())
    assert back.terms == vocab.terms and back.n_documents == 2
    assert np.array_equal(back.df, vocab.df) and np.array_equal(back.tf_pos, vocab.tf_pos)


def test_tfidf_examples():
    vocab = build_vocabulary([["a", "b"], ["b"]])
    vec = tfidf_vector(["a", "a", "b"], vocab)
    # b is in every document, so only a remains: tf 2, N/df = 2.
    assert vec.indices == (vocab.index["a"],)
    assert vec.weights[0] == pytest.approx(2 * math.log(2), abs=1e-12)
    assert tfidf_vector([], vocab) == SparseVector((), ())
    assert tfidf_vector(["zzz"], vocab) == SparseVector((), ())


_docs = st.lists(st.lists(st.sampled_from("abcde"), max_size=6), min_size=1, max_size=6)


@given(_docs, st.lists(st.sampled_from("abcdez"), max_size=8))
def test_tfidf_laws(docs, query):
    vocab = build_vocabulary(docs)
    vec = tfidf_vector(query, vocab)
    weights = dict(zip(vec.indices, vec.weights))
    for term, i in vocab.index.items():
        tf = query.count(term)
        w = weights.get(i, 0.0)
        assert w >= 0
        assert (w == 0) == (tf == 0 or vocab.df[i] == vocab.n_documents)
        if tf:
            # One more occurrence never lowers the weight.
            more = tfidf_vector(query + [term], vocab)
            assert dict(zip(more.indices, more.weights)).get(i, 0.0) >= w
    dense = tfidf_matrix([query], vocab).toarray()[0]
    assert np.allclose(dense, vec.to_dense(len(vocab)))


def test_sparse_vector_validation():
    with pytest.raises(ValueError):
        SparseVector((2, 1), (1.0, 1.0))
    with pytest.raises(ValueError):
        SparseVector((1,), (0.0,))


def test_function_word_list_is_pinned():
    data = resources.files("afdforge").joinpath("data/function_words.txt").read_bytes()
    assert hashlib.sha256(data).hexdigest() == FUNCTION_WORDS_SHA256


def test_function_word_filter_examples(tmp_path):
    words = load_function_words()
    assert filter_function_words(["you", "are", "an", "idiot"], words) == ["you", "are", "an"]
    assert filter_function_words([], words) == []
    with pytest.raises(ValueError):
        filter_function_words(["you"], [])
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(ValueError):
        load_function_words(str(empty))


@given(st.lists(st.sampled_from(["you", "I", "idiot", "the", "keep", "would", "WPNPA", "of"]), max_size=12))
def test_function_word_filter_laws(tokens):
    words = load_function_words()
    out = filter_function_words(tokens, words)
    it = iter(tokens)
    assert all(t in it for t in out)  # subsequence
    assert filter_function_words(out, words) == out


def test_estimators():
    docs = [["you", "are", "sources"], ["keep", "the", "article"]]
    filtered = FunctionWordFilter().fit_transform(docs)
    assert filtered == [["you", "are"], ["the"]]
    assert Stemmer().fit_transform(docs)[0] == ["you", "are", "sourc"]
    vec = TfidfVectorizer().fit(docs, [1, 0])
    assert list(vec.get_feature_names_out()) == sorted({t for d in docs for t in d})
    assert vec.transform(docs).shape == (2, 6)
    with pytest.raises(TypeError):
        TfidfVectorizer().fit("not tokens")
