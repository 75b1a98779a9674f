from collections import Counter

from builders import history
from hypothesis import given
from hypothesis import strategies as st

from afdforge.authorship import (
    RawPost,
    align_lines,
    attribute_tokens,
    extract_posts,
    lcs_pairs,
    tokenize,
)


def _new_tokens(hist, index):
    rev = hist.revisions[index]
    return [t.token for t in attribute_tokens(hist)[index] if t.origin_revision == rev.revision_id]


def test_single_revision_credits_its_author():
    hist = history("P", [("X", "Delete not notable\nper nom")])
    (tokens,) = attribute_tokens(hist)
    assert [t.token for t in tokens] == ["Delete", "not", "notable", "per", "nom"]
    assert {t.origin_author for t in tokens} == {"X"}
    assert [t.position for t in tokens] == list(range(5))


def test_exact_revert_gets_no_tokens():
    base = "Nomination text here\n* Keep sources exist"
    hist = history("P", [("A", base), ("192.0.2.9", "lol page blanked"), ("R", base)])
    assert _new_tokens(hist, 2) == []
    restored = attribute_tokens(hist)[2]
    assert {t.origin_author for t in restored} == {"A"}
    assert [p.author for p in extract_posts(hist)] == ["A"]


def test_partial_vandalism_revert_restores_origins():
    base = "Nomination text here\n* Keep sources exist"
    hist = history("P", [("A", base), ("B", base + "\n* Delete spam"), ("C", base + "\n* Delete spam XXXX"), ("R", base)])
    assert _new_tokens(hist, 3) == []


def test_moved_sentence_stays_with_its_author():
    s1 = "The subject fails the general notability guideline entirely."
    s2 = "Keep per the sources found by others."
    hist = history("P", [("X", s1), ("Z", s1 + "\n" + s2), ("Y", s2 + "\n" + s1)])
    moved = attribute_tokens(hist)[2][len(s2.split()):]
    assert [t.token for t in moved] == s1.split()
    assert {t.origin_author for t in moved} == {"X"}
    assert _new_tokens(hist, 2) == []


def test_moved_run_within_line_keeps_origin():
    # A moved run of at least six tokens is recognized even inside edited lines.
    old = "alpha beta gamma delta epsilon zeta eta theta said the nominator"
    new = "the nominator said alpha beta gamma delta epsilon zeta eta theta"
    hist = history("P", [("X", old), ("Y", new)])
    moved = attribute_tokens(hist)[1]
    greek = [t for t in moved if t.token in "alpha beta gamma delta epsilon zeta eta theta".split()]
    assert {t.origin_author for t in greek} == {"X"}


def test_added_reply_is_the_post():
    hist = history("P", [("A", "Nomination"), ("B", "Nomination\n* delete as per nom")])
    (post_a, post_b) = extract_posts(hist)
    assert post_b.raw_tokens == ["*", "delete", "as", "per", "nom"]
    assert post_b.author == "B" and post_b.revision_id == 2


def test_bot_and_anonymous_revisions_yield_no_post():
    hist = history("P", [("A", "Nomination"), ("SineBot", "Nomination\nunsigned comment"), ("10.1.1.1", "Nomination x")])
    assert [p.author for p in extract_posts(hist)] == ["A"]


def test_empty_revision_yields_nothing():
    hist = history("P", [("A", ""), ("B", "")])
    assert attribute_tokens(hist) == [[], []]
    assert extract_posts(hist) == []


def test_raw_post_round_trip():
    (post,) = extract_posts(history("P", [("A", "some words")]))
    assert RawPost.from_dict(post.to_dict()) == post


def test_lcs_pairs_is_a_common_subsequence():
    a = "a b c a b".split()
    b = "b a c b".split()
    pairs = lcs_pairs(a, b)
    assert len(pairs) == 3
    assert all(a[i] == b[j] for i, j in pairs)
    assert pairs == sorted(pairs) and len({j for _, j in pairs}) == len(pairs)


def test_align_lines_pairs_identical_lines_first():
    old = [["x", "y"], ["p", "q", "r"]]
    new = [["p", "q", "r"], ["x", "y"]]
    pairs = align_lines(old, new)
    # Flattened indices: old p,q,r are 2..4, new p,q,r are 0..2.
    assert {(2, 0), (3, 1), (4, 2), (0, 3), (1, 4)} == set(pairs)


_words = st.sampled_from(["keep", "delete", "per", "nom", "notable", "sources", "*", "the"])
_line = st.lists(_words, min_size=0, max_size=6).map(" ".join)
_text = st.lists(_line, min_size=0, max_size=5).map("\n".join)
_authors = st.sampled_from(["A", "B", "C"])


@given(st.lists(st.tuples(_authors, _text), min_size=1, max_size=6))
def test_conservation_and_positions(revisions):
    hist = history("P", revisions)
    attributed = attribute_tokens(hist)
    for rev, tokens in zip(hist.revisions, attributed):
        # Every token of every revision is accounted for, in order, by exactly one origin.
        assert [t.token for t in tokens] == tokenize(rev.full_text)
        assert [t.position for t in tokens] == list(range(len(tokens)))
    # Replay: origins of the latest revision are revisions that exist and come no later.
    ids = {r.revision_id: r.author for r in hist.revisions}
    last_id = hist.revisions[-1].revision_id
    for t in attributed[-1]:
        assert t.origin_revision in ids and t.origin_revision <= last_id
        assert ids[t.origin_revision] == t.origin_author
    # Per origin, the surviving contribution never exceeds what that revision introduced.
    surviving = Counter((t.origin_revision, t.token) for t in attributed[-1])
    introduced = Counter()
    for rev, tokens in zip(hist.revisions, attributed):
        introduced.update((rev.revision_id, t.token) for t in tokens if t.origin_revision == rev.revision_id)
    assert not surviving - introduced


@given(st.lists(st.tuples(_authors, _text), min_size=1, max_size=6))
def test_attribution_is_deterministic(revisions):
    assert attribute_tokens(history("P", revisions)) == attribute_tokens(history("P", list(revisions)))


@given(st.lists(st.tuples(_authors, _text), min_size=1, max_size=5), st.data())
def test_exact_revert_introduces_nothing(revisions, data):
    target = data.draw(st.integers(0, len(revisions) - 1))
    hist = history("P", revisions + [("Reverter", revisions[target][1])])
    assert _new_tokens(hist, len(revisions)) == []
