import io
from datetime import timedelta

import oracles
import pytest
from builders import at, clean
from hypothesis import given
from hypothesis import strategies as st

from afdforge.corpus import (
    LabeledPost,
    MergedPost,
    balance_sample,
    delta_distribution,
    label_posts,
    merge_all,
    read_corpus,
    read_jsonl,
    relabel,
    sliding_window_merge,
    write_histogram_csv,
    write_jsonl,
)
from afdforge.ingest import BlockEvent

DAY = timedelta(days=1)


def _block(user, when):
    return BlockEvent(when, user, "Admin", 1, "attacks")


def test_block_within_timeframe_is_disruptive():
    (p,) = label_posts([clean("U", at(0), 1)], [_block("U", at(hours=20))], DAY)
    assert p.label == 1 and p.delta == timedelta(hours=20) and p.block_time == at(hours=20)


def test_never_blocked_is_constructive_without_delta():
    (p,) = label_posts([clean("U", at(0), 1)], [_block("V", at(hours=1))], DAY)
    assert p.label == 0 and p.delta is None


def test_only_nearest_later_block_counts():
    blocks = [_block("U", at(days=2)), _block("U", at(hours=26))]
    (p,) = label_posts([clean("U", at(0), 1)], blocks, DAY)
    assert p.label == 0 and p.delta == timedelta(hours=26)


def test_block_at_post_time_is_not_later():
    (p,) = label_posts([clean("U", at(0), 1)], [_block("U", at(0))], DAY)
    assert p.label == 0 and p.delta is None


_posts = st.lists(
    st.tuples(st.sampled_from("abc"), st.integers(0, 240)), min_size=0, max_size=15
).map(lambda xs: [clean(a, at(hours=h), i) for i, (a, h) in enumerate(xs)])
_blocks = st.lists(st.tuples(st.sampled_from("abcd"), st.integers(0, 260)), max_size=6).map(
    lambda xs: [_block(a, at(hours=h)) for a, h in xs]
)


@given(_posts, _blocks, st.lists(st.integers(0, 120), min_size=1, max_size=5))
def test_labels_match_oracle_and_are_monotone(posts, blocks, hours):
    frames = sorted(timedelta(hours=h) for h in hours)
    counts = []
    for tf in frames:
        labeled = label_posts(posts, blocks, tf)
        assert [p.label for p in labeled] == oracles.brute_labels(posts, blocks, tf)
        assert relabel(label_posts(posts, blocks, DAY), tf) == labeled
        counts.append(sum(p.label for p in labeled))
    assert counts == sorted(counts)


def test_sweep_fixture_blocks_two_days_after_posts():
    posts = [clean(f"u{i}", at(days=i), i) for i in range(5)] + [clean("nice", at(0), 99)]
    blocks = [_block(f"u{i}", at(days=i + 2)) for i in range(5)]
    for hours, expected in ((13, 0), (24, 0), (36, 0), (47, 0), (48, 5), (72, 5)):
        assert sum(p.label for p in label_posts(posts, blocks, timedelta(hours=hours))) == expected


# --- sliding window ------------------------------------------------------------


def test_single_post_window():
    (lp,) = label_posts([clean("U", at(0), 7, ["hi"])], [], DAY)
    (m,) = sliding_window_merge([lp], DAY)
    assert m.member_post_ids == [7] and m.tokens == ["hi"] and m.label == 0


def test_two_posts_two_days_apart_stay_apart():
    labeled = label_posts([clean("U", at(0), 1), clean("U", at(days=2), 2)], [], DAY)
    assert [m.member_post_ids for m in sliding_window_merge(labeled, DAY)] == [[1], [2]]


def test_window_rejects_several_authors_and_merge_all_groups():
    labeled = label_posts([clean("A", at(0), 1), clean("B", at(1), 2), clean("A", at(2), 3)], [], DAY)
    with pytest.raises(ValueError):
        sliding_window_merge(labeled, DAY)
    merged = merge_all(labeled, DAY)
    assert [(m.author, m.member_post_ids) for m in merged] == [("A", [1, 3]), ("A", [3]), ("B", [2])]


def test_empty_input():
    assert sliding_window_merge([], DAY) == []
    assert merge_all([], DAY) == []


@given(
    st.lists(st.integers(0, 96), min_size=1, max_size=12, unique=True),
    st.lists(st.integers(0, 110), max_size=4),
    st.integers(1, 72),
)
def test_window_safety_and_oracle(hours, block_hours, window_hours):
    posts = [clean("U", at(hours=h), i, [f"t{i}"]) for i, h in enumerate(sorted(hours))]
    labeled = label_posts(posts, [_block("U", at(hours=b)) for b in block_hours], DAY)
    window = timedelta(hours=window_hours)
    merged = sliding_window_merge(labeled, window)
    by_id = {p.post.revision_id: p for p in labeled}
    expected = oracles.brute_windows(
        [p.timestamp for p in labeled], [p.disruptive for p in labeled], [p.block_time for p in labeled], window
    )
    assert [m.member_post_ids for m in merged] == expected
    assert len(merged) == len(labeled)
    assert {i for m in merged for i in m.member_post_ids} == set(by_id)
    for m in merged:
        members = [by_id[i] for i in m.member_post_ids]
        if not m.disruptive:
            assert not any(p.disruptive for p in members)
        else:
            assert members[-1].disruptive
        assert m.tokens == [t for p in members for t in p.tokens]


# --- balancing -----------------------------------------------------------------


def _mixed(n_pos=3, n_neg=10):
    posts = [clean("bad", at(hours=i), i) for i in range(n_pos)] + [
        clean(f"good{i}", at(hours=50 - i), 100 + i) for i in range(n_neg)
    ]
    return label_posts(posts, [_block("bad", at(hours=n_pos))], DAY)


def test_random_balance_is_reproducible():
    posts = _mixed()
    a = balance_sample(posts, "random", seed=1)
    assert sum(p.label for p in a) == 3 and len(a) == 6
    assert a == balance_sample(posts, "random", seed=1)


def test_chronological_balance_takes_oldest():
    chosen = balance_sample(_mixed(), "chronological")
    negatives = [p.post.revision_id for p in chosen if p.label == 0]
    assert sorted(negatives) == [107, 108, 109]  # written at hours 41..43


def test_different_seeds_share_disruptive_set():
    posts = _mixed()
    sets = [balance_sample(posts, "random", seed=s) for s in range(6)]
    assert len({tuple(p.post.revision_id for p in s if p.label) for s in sets}) == 1
    assert len({tuple(p.post.revision_id for p in s if not p.label) for s in sets}) > 1


def test_too_few_constructive_posts():
    with pytest.raises(ValueError):
        balance_sample(_mixed(5, 2))
    with pytest.raises(ValueError):
        balance_sample(_mixed(), "alphabetical")


@given(st.integers(0, 8), st.integers(0, 12), st.integers(0, 1000), st.sampled_from(["random", "chronological"]))
def test_balance_law(n_pos, n_neg, seed, strategy):
    posts = _mixed(n_pos, n_neg) if n_pos else label_posts([clean("g", at(hours=i), i) for i in range(n_neg)], [], DAY)
    if n_pos > n_neg:
        with pytest.raises(ValueError):
            balance_sample(posts, strategy, seed)
        return
    out = balance_sample(posts, strategy, seed)
    assert sum(p.label for p in out) == len(out) - sum(p.label for p in out) == n_pos
    # Input order is preserved.
    assert out == [p for p in posts if p in out]


# --- delta histogram -----------------------------------------------------------


def test_one_post_five_hours_before_block():
    rows = delta_distribution([clean("U", at(0), 1)], [_block("U", at(hours=5))], timedelta(hours=12), timedelta(hours=1))
    assert dict(rows)[5 * 3600] == 1 and sum(c for _, c in rows) == 1


def test_unblocked_author_contributes_nothing():
    rows = delta_distribution([clean("U", at(0), 1)], [], timedelta(hours=12), timedelta(hours=1))
    assert sum(c for _, c in rows) == 0 and len(rows) == 12


@given(_posts, _blocks, st.integers(1, 12))
def test_delta_histogram_matches_oracle(posts, blocks, bucket_hours):
    horizon, bucket = timedelta(days=4), timedelta(hours=bucket_hours)
    assert delta_distribution(posts, blocks, horizon, bucket) == oracles.brute_deltas(posts, blocks, horizon, bucket)


def test_histogram_csv():
    buf = io.StringIO()
    write_histogram_csv([(0, 2), (3600, 1)], buf)
    assert buf.getvalue() == "bucket_start_seconds,count\n0,2\n3600,1\n"


# --- serialization ---------------------------------------------------------------


def test_jsonl_round_trip():
    labeled = _mixed(2, 3)
    merged = merge_all(labeled, DAY)
    for records, kind in ((labeled, LabeledPost), (merged, MergedPost)):
        buf = io.StringIO()
        write_jsonl(records, buf)
        buf.seek(0)
        assert read_jsonl(buf, kind) == records
        buf.seek(0)
        assert read_corpus(buf) == records
