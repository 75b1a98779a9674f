import bz2
import gzip
import io
import tracemalloc

import pytest
from builders import AFD, at, block_log_xml, dump_xml, logitem_xml
from hypothesis import given
from hypothesis import strategies as st

from afdforge.ingest import (
    BlockEvent,
    BlockLogStats,
    DumpParseError,
    PageHistory,
    Revision,
    TruncatedDumpError,
    is_afd_title,
    open_maybe_compressed,
    parse_block_log,
    stream_afd_pages,
    write_block_tsv,
)


def _pages(data: bytes, prefix=AFD):
    return list(stream_afd_pages(io.BytesIO(data), prefix))


def test_afd_page_is_yielded_and_log_page_skipped():
    data = dump_xml(
        [
            (AFD + "Foo", [(1, at(0), "Alice", "Delete per nom")]),
            (AFD + "Log/2005 May 1", [(2, at(1), "Bob", "{{" + AFD + "Foo}}")]),
            ("Talk:Foo", [(3, at(2), "Carol", "hi")]),
        ]
    )
    pages = _pages(data)
    assert [p.title for p in pages] == [AFD + "Foo"]
    rev = pages[0].revisions[0]
    assert (rev.revision_id, rev.author, rev.full_text) == (1, "Alice", "Delete per nom")


def test_empty_dump_gives_empty_iterator():
    assert _pages(dump_xml([])) == []


def test_revisions_sorted_chronologically_and_ip_kept_as_author():
    data = dump_xml([(AFD + "Foo", [(5, at(3), "B", "later"), (4, at(1), "192.0.2.7", "earlier")])])
    (page,) = _pages(data)
    assert [r.revision_id for r in page.revisions] == [4, 5]
    assert page.revisions[0].author == "192.0.2.7"


def test_deleted_contributor_has_no_author():
    (page,) = _pages(dump_xml([(AFD + "Foo", [(1, at(0), None, "text")])]))
    assert page.revisions[0].author is None


def test_markup_text_is_unescaped():
    (page,) = _pages(dump_xml([(AFD + "Foo", [(1, at(0), "A", "<b>x</b> & [[y]]")])]))
    assert page.revisions[0].full_text == "<b>x</b> & [[y]]"


def test_prefix_is_case_sensitive():
    assert is_afd_title(AFD + "Foo")
    assert not is_afd_title("wikipedia:Articles for deletion/Foo")
    assert not is_afd_title(AFD + "Log/2015 June 1")


_title_chars = st.sampled_from(list("Wikpedia:Artcls fortn/LogXx"))


@given(st.lists(st.text(_title_chars, min_size=1, max_size=40), max_size=8), st.booleans())
def test_no_yielded_title_violates_prefix(titles, add_real):
    if add_real:
        titles = titles + [AFD + "Real"]
    data = dump_xml([(t, [(i + 1, at(i), "A", "x")]) for i, t in enumerate(titles) if t.strip()])
    expected = [t for t in titles if t.strip() and is_afd_title(t)]
    got = [p.title for p in _pages(data)]
    assert got == expected
    assert all(t.startswith(AFD) and not t.startswith(AFD + "Log/") for t in got)


def test_custom_prefix():
    data = dump_xml([("Wikipedia:Miscellany for deletion/Foo", [(1, at(0), "A", "x")])])
    assert len(_pages(data, "Wikipedia:Miscellany for deletion/")) == 1


def test_malformed_xml_reports_byte_offset():
    good = dump_xml([(AFD + "Foo", [(1, at(0), "A", "x")])])
    cut = good.index(b"</mediawiki>")
    bad = good[:cut] + b"<page><title>oops</titel></page>" + good[cut:]
    with pytest.raises(DumpParseError) as info:
        _pages(bad)
    assert not isinstance(info.value, TruncatedDumpError)
    expected = bad.index(b"</titel>")
    assert expected <= info.value.offset <= expected + 2
    assert str(info.value.offset) in str(info.value)


def test_truncated_stream_yields_complete_pages_first():
    data = dump_xml([(AFD + f"P{i}", [(i + 1, at(i), "A", "text " * 50)]) for i in range(3)])
    cut = data.index(b"<page>", data.index(b"P1")) + 40  # inside the third page
    seen = []
    with pytest.raises(TruncatedDumpError) as info:
        for page in stream_afd_pages(io.BytesIO(data[:cut])):
            seen.append(page.title)
    assert seen == [AFD + "P0", AFD + "P1"]
    assert info.value.pages_yielded == 2
    assert info.value.offset > 0


def _peak(data: bytes) -> int:
    stream = io.BytesIO(data)
    tracemalloc.start()
    try:
        for _ in stream_afd_pages(stream):
            pass
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def test_memory_bounded_by_largest_page():
    huge_text = "word " * 40_000  # ~200 kB per revision
    huge = (AFD + "Huge", [(i, at(i), "A", huge_text + str(i)) for i in range(1, 11)])  # ~2 MB page

    def small(n):
        return [(AFD + f"S{i}", [(1000 + i, at(i), "B", "keep per nom")]) for i in range(n)]

    few = dump_xml([huge] + small(50))
    many = dump_xml(small(1500) + [huge] + small(1500))
    peak_few, peak_many = _peak(few), _peak(many)
    page_bytes = 10 * len(huge_text)
    assert peak_many < 3 * page_bytes
    # Tripling the number of pages around the huge one does not move the peak much.
    assert peak_many < 1.5 * peak_few


def test_skipped_pages_are_not_buffered():
    def with_talk_page(size):
        text = "spam " * size
        return dump_xml([("Talk:Big", [(1, at(0), "A", text)]), (AFD + "Foo", [(2, at(1), "B", "x")])])

    small, large = _peak(with_talk_page(200_000)), _peak(with_talk_page(800_000))
    # The skipped page grows by 3 MB; the reader's peak stays at its chunk overhead.
    assert large < small + 200_000
    assert large < 1_000_000


def test_compressed_inputs(tmp_path):
    data = dump_xml([(AFD + "Foo", [(1, at(0), "A", "x")])])
    for name, opener in (("d.xml.bz2", bz2.open), ("d.xml.gz", gzip.open), ("d.xml", open)):
        path = tmp_path / name
        with opener(path, "wb") as fh:
            fh.write(data)
        with open_maybe_compressed(str(path)) as fh:
            assert [p.title for p in stream_afd_pages(fh)] == [AFD + "Foo"]


def test_page_history_round_trip_and_title_required():
    page = PageHistory(AFD + "Foo", [Revision(1, at(0), "A", "x y")])
    assert PageHistory.from_dict(page.to_dict()) == page
    with pytest.raises(ValueError):
        PageHistory("", [])


# --- block log -----------------------------------------------------------------


def test_block_entry_fields_copied():
    (event,) = parse_block_log(block_log_xml([logitem_xml(at(0), "Alice", "Bob", "personal attacks")]))
    assert event == BlockEvent(at(0), "Alice", "Bob", 9, "personal attacks")


def test_empty_comment_is_retained():
    (event,) = parse_block_log(block_log_xml([logitem_xml(at(0), "Alice", comment="")]))
    assert event.comment == ""


def test_three_entries_with_unblock_give_two_events():
    stats = BlockLogStats()
    events = parse_block_log(
        block_log_xml(
            [
                logitem_xml(at(0), "A", comment="attacks"),
                logitem_xml(at(1), "A", comment="ok now", action="unblock"),
                logitem_xml(at(2), "B", comment="harassment"),
            ]
        ),
        stats,
    )
    assert [e.blocked_user for e in events] == ["A", "B"]
    assert (stats.records, stats.emitted, stats.skipped, stats.rejected) == (3, 2, 1, 0)


def test_missing_timestamp_rejected_and_unknown_action_skipped():
    stats = BlockLogStats()
    events = parse_block_log(
        block_log_xml(
            [
                logitem_xml(None, "A"),
                logitem_xml(at(0), "B", action="frobnicate"),
                logitem_xml(at(0), "C", kind="delete", action="delete"),
                logitem_xml(at(1), "D"),
            ]
        ),
        stats,
    )
    assert [e.blocked_user for e in events] == ["D"]
    assert (stats.records, stats.emitted, stats.skipped, stats.rejected) == (4, 1, 2, 1)


@given(
    st.lists(
        st.tuples(
            st.booleans(),
            st.sampled_from(["block", "unblock", "reblock", "weird"]),
            st.sampled_from(["block", "delete"]),
            st.sampled_from(["Ann", "Ben", "10.0.0.1"]),
        ),
        max_size=12,
    )
)
def test_block_log_counts_add_up(items):
    stats = BlockLogStats()
    xml = block_log_xml(
        [logitem_xml(at(i) if has_ts else None, user, action=action, kind=kind)
         for i, (has_ts, action, kind, user) in enumerate(items)]
    )
    events = parse_block_log(xml, stats)
    assert len(events) == stats.emitted
    assert stats.emitted + stats.skipped + stats.rejected == stats.records == len(items)


@given(
    st.lists(
        st.tuples(
            st.text(min_size=1, max_size=10).filter(lambda s: s.strip() and s == s.strip() and "\r" not in s),
            st.text(max_size=20).filter(lambda s: "\r" not in s),
        ),
        max_size=6,
    )
)
def test_block_tsv_round_trip(rows):
    events = [BlockEvent(at(i), user, "Adm\tin", 3, comment) for i, (user, comment) in enumerate(rows)]
    buf = io.StringIO()
    write_block_tsv(events, buf)
    assert parse_block_log(buf.getvalue()) == events


def test_tsv_bad_line_rejected():
    stats = BlockLogStats()
    events = parse_block_log("2015-06-01T00:00:00Z\tA\tAdm\t1\tx\nnot a timestamp\tB\tAdm\t1\n", stats)
    assert len(events) == 1
    assert (stats.records, stats.rejected) == (2, 1)
