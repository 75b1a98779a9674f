import math

import numpy as np
import oracles
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afdforge.classifiers import NBModel, TfidfNaiveBayes, predict_nb, train_nb
from afdforge.features import SparseVector, build_vocabulary, count_matrix, tfidf_vector


def _fit(docs, labels, delta=1.0):
    vocab = build_vocabulary(docs, labels)
    return train_nb(count_matrix(docs, vocab), labels, vocab, delta)


def test_two_document_example():
    model = _fit([["you", "idiot"], ["keep", "article"]], [1, 0])
    you = model.vocabulary.index["you"]
    assert math.exp(model.log_prob[1, you]) == pytest.approx(1 / 3, abs=1e-15)
    assert math.exp(model.log_prob[0, you]) == pytest.approx(1 / 6, abs=1e-15)
    assert np.allclose(np.exp(model.log_prior), [0.5, 0.5])
    cls, (s0, s1) = predict_nb(model, tfidf_vector(["you"], model.vocabulary))
    assert cls == 1 and s1 > s0


def test_unseen_word_probability_is_positive():
    model = _fit([["a", "a", "b"], ["c"]], [1, 0])
    for k, tokens in ((1, 3), (0, 1)):
        # A term never seen in class k still gets delta / (tokens_k + delta |V|).
        absent = [i for i, t in enumerate(model.vocabulary.terms) if (t == "c") == (k == 1)][0]
        assert math.exp(model.log_prob[k, absent]) == pytest.approx(1 / (tokens + 3))


def test_empty_vector_uses_priors_with_tie_to_zero():
    model = _fit([["a"], ["b"]], [1, 0])
    assert predict_nb(model, SparseVector((), ()))[0] == 0
    skewed = _fit([["a"], ["b"], ["c"]], [1, 1, 0])
    assert predict_nb(skewed, SparseVector((), ()))[0] == 1


def test_empty_class_is_an_error():
    with pytest.raises(ValueError):
        _fit([["a"], ["b"]], [1, 1])
    with pytest.raises(ValueError):
        _fit([["a"], ["b"]], [1, 0], delta=0)


_docs = st.lists(st.lists(st.sampled_from("abcdef"), max_size=5), min_size=2, max_size=6)


@given(_docs, st.data())
def test_matches_oracle_and_normalizes(docs, data):
    labels = [0, 1] + data.draw(st.lists(st.integers(0, 1), min_size=len(docs) - 2, max_size=len(docs) - 2))
    delta = data.draw(st.sampled_from([0.25, 1.0, 3.0]))
    model = _fit(docs, labels, delta)
    for k in (0, 1) if len(model.vocabulary) else ():
        assert abs(math.fsum(model.probabilities(k)) - 1) < 1e-9
    query = data.draw(st.lists(st.sampled_from("abcdefz"), max_size=6))
    cls, (s0, s1) = predict_nb(model, tfidf_vector(query, model.vocabulary))
    o0, o1 = oracles.nb_scores(docs, labels, query, delta)
    assert abs(s0 - o0) < 1e-12 and abs(s1 - o1) < 1e-12
    assert cls == oracles.nb_argmax(o0, o1)


@given(_docs, st.lists(st.sampled_from("abcdef"), max_size=6), st.floats(0.1, 10), st.floats(-5, 5))
def test_argmax_invariances(docs, query, scale, shift):
    labels = [i % 2 for i in range(len(docs))]
    model = _fit(docs, labels)
    vec = tfidf_vector(query, model.vocabulary)
    base = predict_nb(model, vec)
    gap = base[1][1] - base[1][0]
    if abs(gap) < 1e-9:
        return
    # Equal priors: scaling the vector keeps the argmax.
    if len(docs) % 2 == 0:
        scaled = SparseVector(vec.indices, tuple(w * scale for w in vec.weights))
        assert predict_nb(model, scaled)[0] == base[0]
    # Adding a constant to every log-probability of both classes moves both scores equally.
    shifted = NBModel(model.vocabulary, model.log_prior, model.log_prob + shift, model.delta)
    assert predict_nb(shifted, vec)[0] == base[0]


def test_estimator_and_tsv_round_trip():
    docs = [["you", "idiot"], ["keep", "article"], ["you", "keep"]]
    est = TfidfNaiveBayes(delta=0.5).fit(docs, [1, 0, 1])
    assert list(est.predict([["you"], ["article"]])) == [1, 0]
    scores = est.predict_log_scores(docs)
    assert np.allclose(est.decision_function(docs), scores[:, 1] - scores[:, 0])
    back = NBModel.from_tsv(est.model_.to_tsv(), est.model_.vocabulary)
    assert np.array_equal(back.log_prob, est.model_.log_prob) and back.delta == 0.5
