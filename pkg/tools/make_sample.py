"""Regenerate the bundled synthetic mini-dump and block log (deterministic)."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone
from pathlib import Path
from xml.sax.saxutils import escape

OUT = Path(__file__).resolve().parents[1] / "src" / "afdforge" / "data" / "sample"
START = datetime(2015, 5, 1, 8, 0, tzinfo=timezone.utc)
PREFIX = "Wikipedia:Articles for deletion/"

CONSTRUCTIVE = [
    "I think the article has enough independent sources to meet the notability guideline",
    "I could not find any reliable coverage in books or newspapers so I lean towards deletion",
    "Keep per nom, the subject passes the general notability guideline in my view",
    "I added two sources from national newspapers and I believe this addresses the concerns",
    "Merge into the parent article since most of the content is already covered there",
    "I searched the archives and found several reviews which I have now cited",
    "Weak keep, I agree the sourcing is thin but it can be improved with some effort",
    "Delete as per nom, I was unable to verify any of the claims made in the article",
    "I would support a redirect to the list article as a reasonable compromise",
    "The band released two albums on a major label which I think satisfies the music guideline",
]
DISRUPTIVE = [
    "You clearly have no idea what you are talking about and you should stop editing",
    "Are you serious? You people delete everything you do not personally like",
    "You obviously did not even read the article, stop wasting everyone's time with your nonsense",
    "Your nomination is a joke and you know it, see [[WP:NPA]] before you lecture me",
    "You and your friends keep harassing me, this whole process is rigged and you know it",
    "Why do you keep reverting me? Your edits are vandalism and you are a hypocrite",
    "Nobody cares about your opinion, you are just here to destroy content",
    "You must be joking, your argument makes no sense at all and you ignore every source",
]


def sig(user: str, ts: datetime) -> str:
    stamp = f"{ts:%H:%M}, {ts.day} {ts:%B %Y} (UTC)"
    return f"[[User:{user}|{user}]] ([[User talk:{user}|talk]]) {stamp}"


class Page:
    def __init__(self, title: str, subject: str):
        self.title = title
        self.subject = subject
        self.text = ""
        self.revisions: list[tuple[int, datetime, str | None, str | None, str]] = []

    def save(self, rev_id: int, ts: datetime, user: str | None, ip: str | None = None) -> None:
        self.revisions.append((rev_id, ts, user, ip, self.text))


def build() -> tuple[list[Page], list[tuple]]:
    rng = random.Random(20150501)
    rev_id = iter(range(1001, 10_000))
    subjects = ["Foo Fighters Tribute Band", "Acme Widget Corp", "John Q Example", "Zyx Software", "Lorem Ipsum Festival", "Obscure Village Hall"]
    pages = [Page(PREFIX + s, s) for s in subjects]
    nominators = ["Alice", "Bob", "Carol", "Dave", "Erin", "Frank"]
    regulars = ["Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace", "Heidi", "Oscar"]

    # Nominations, one per page on the first morning.
    for k, page in enumerate(pages):
        ts = START + timedelta(hours=2 * k)
        user = nominators[k]
        page.text = (
            f"==={page.subject}===\n"
            f":{{{{la|{page.subject}}}}} – (View AfD) (View log)\n"
            f"Non-notable subject, I could not find significant coverage. {sig(user, ts)}\n"
            "<small>NOTE: This debate has been included in the list of deletion discussions.</small>\n"
        )
        page.save(next(rev_id), ts, user)

    def comment(page: Page, ts: datetime, user: str, text: str) -> None:
        vote = rng.choice(["'''Keep'''", "'''Delete'''", "'''Comment'''"])
        page.text += f"*{vote} {text}. {sig(user, ts)}\n"
        page.save(next(rev_id), ts, user)

    # Scripted disruptive posts shortly before the blocks.
    mallory = [
        (START + timedelta(days=1, hours=12), 0),
        (START + timedelta(days=1, hours=18), 1),
        (START + timedelta(days=2, hours=1), 2),
        (START + timedelta(days=6, hours=23), 3),
        (START + timedelta(days=7, hours=9), 4),
    ]
    trent = [
        (START + timedelta(hours=20), 0),
        (START + timedelta(days=4, hours=4), 1),
        (START + timedelta(days=4, hours=10), 5),
        (START + timedelta(days=5), 2),
    ]
    for ts, k in mallory:
        comment(pages[k], ts, "Mallory", DISRUPTIVE[(k + 3) % len(DISRUPTIVE)])
    for ts, k in trent:
        comment(pages[k], ts, "Trent", DISRUPTIVE[(k + 1) % len(DISRUPTIVE)])

    # Constructive discussion spread over a week.
    for n in range(26):
        ts = START + timedelta(hours=5 + 6.5 * n, minutes=rng.randrange(60))
        page = pages[n % len(pages)]
        comment(page, ts, regulars[(n * 7) % len(regulars)], CONSTRUCTIVE[n % len(CONSTRUCTIVE)])

    for page in pages:
        page.revisions.sort(key=lambda r: r[1])

    # Re-render texts in time order so every revision extends its predecessor.
    for page in pages:
        current = page.revisions[0][4]
        rebuilt = [page.revisions[0]]
        for rid, ts, user, ip, text in page.revisions[1:]:
            current += text.rstrip("\n").split("\n")[-1] + "\n"
            rebuilt.append((rid, ts, user, ip, current))
        page.revisions = rebuilt

    # Page 2: vandalism by an IP, then an exact revert.
    p = pages[1]
    rid, ts, user, ip, text = p.revisions[3]
    vandal_ts = ts + timedelta(minutes=10)
    revert_ts = ts + timedelta(minutes=20)
    p.revisions.insert(4, (next(rev_id), vandal_ts, None, "203.0.113.5", "lol this page is stupid"))
    # Later revisions were rendered from the pre-vandalism text, so they extend the revert.
    p.revisions.insert(5, (next(rev_id), revert_ts, "Heidi", None, text))

    # Page 3: Grace moves the nomination sentence below the discussion.
    p = pages[2]
    last = p.revisions[-1]
    lines = last[4].rstrip("\n").split("\n")
    moved = lines[:2] + lines[3:] + [lines[2]]
    p.revisions.append((next(rev_id), last[1] + timedelta(hours=1), "Grace", None, "\n".join(moved) + "\n"))

    # Page 4: SineBot signs an unsigned comment; a new user adds an unsigned remark.
    p = pages[3]
    last = p.revisions[-1]
    t1 = last[1] + timedelta(minutes=30)
    unsigned = last[4] + "*'''Keep''' I think this deserves a second look\n"
    p.revisions.append((next(rev_id), t1, "Ivan", None, unsigned))
    signed = unsigned.rstrip("\n") + " <!-- Template:Unsigned --> {{unsigned|Ivan}}\n"
    p.revisions.append((next(rev_id), t1 + timedelta(minutes=1), "SineBot", None, signed))

    # Closing notices on two pages.
    for p in (pages[0], pages[4]):
        last = p.revisions[-1]
        closer = "Dave"
        ts = last[1] + timedelta(hours=3)
        closed = (
            "{{subst:afd top}} The following discussion is an archived debate of the proposed deletion of the article below. "
            "Please do not modify it.\nThe result was keep. " + sig(closer, ts) + "\n" + last[4]
            + "The above discussion is preserved as an archive of the debate. Please do not modify it.\n"
        )
        p.revisions.append((next(rev_id), ts, closer, None, closed))

    blocks = [
        (START + timedelta(days=2, hours=4), "Mallory", "Zed", 42, "personal attacks"),
        (START + timedelta(days=3), "Mallory", "Zed", 42, "unblock: agreed to behave", "unblock"),
        (START + timedelta(days=5, hours=6), "Trent", "Yara", 77, "Harassment of other editors"),
        (START + timedelta(days=3, hours=2), "203.0.113.5", "Yara", 77, "vandalism"),
        (START + timedelta(days=4), "Oscar", "Zed", 42, "malfunctioning bot"),
        (START + timedelta(days=7, hours=20), "Mallory", "Zed", 42, "legal threats, see [[WP:NLT]]"),
    ]
    return pages, blocks


def render_dump(pages: list[Page]) -> str:
    out = [
        '<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10" xml:lang="en">',
        "  <siteinfo><sitename>Wikipedia</sitename></siteinfo>",
    ]
    page_id = 1

    def page_xml(title, revisions):
        nonlocal page_id
        out.append("  <page>")
        out.append(f"    <title>{escape(title)}</title>")
        out.append("    <ns>4</ns>" if title.startswith("Wikipedia:") else "    <ns>1</ns>")
        out.append(f"    <id>{page_id}</id>")
        page_id += 1
        for rid, ts, user, ip, text in revisions:
            out.append("    <revision>")
            out.append(f"      <id>{rid}</id>")
            out.append(f"      <timestamp>{ts:%Y-%m-%dT%H:%M:%SZ}</timestamp>")
            if user is not None:
                out.append(f"      <contributor><username>{escape(user)}</username><id>{100 + sum(map(ord, user))}</id></contributor>")
            else:
                out.append(f"      <contributor><ip>{ip}</ip></contributor>")
            out.append(f'      <text xml:space="preserve">{escape(text)}</text>')
            out.append("    </revision>")
        out.append("  </page>")

    page_xml("Talk:Acme Widget Corp", [(9001, START, "Alice", None, "Is this company notable? ~~~~")])
    log_text = "\n".join(f"{{{{{p.title}}}}}" for p in pages)
    page_xml(PREFIX + "Log/2015 May 1", [(9002, START + timedelta(hours=12), "Bob", None, log_text)])
    for p in pages:
        page_xml(p.title, p.revisions)
    out.append("</mediawiki>")
    return "\n".join(out) + "\n"


def render_blocks(blocks) -> str:
    out = ['<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10">']
    for n, b in enumerate(blocks):
        ts, user, admin, admin_id, comment = b[:5]
        action = b[5] if len(b) > 5 else "block"
        out += [
            "  <logitem>",
            f"    <id>{500 + n}</id>",
            f"    <timestamp>{ts:%Y-%m-%dT%H:%M:%SZ}</timestamp>",
            f"    <contributor><username>{admin}</username><id>{admin_id}</id></contributor>",
            f"    <comment>{escape(comment)}</comment>",
            "    <type>block</type>",
            f"    <action>{action}</action>",
            f"    <logtitle>User:{escape(user)}</logtitle>",
            "  </logitem>",
        ]
    out.append("</mediawiki>")
    return "\n".join(out) + "\n"


CONFIG = """\
# Pipeline configuration for the bundled sample (paths relative to this file).
dump = dump.xml
block_log = blocks.xml
timeframe = 1d
window = 1d
folds = 3
sampling = stratified
features = full-text
classifiers = nb,lm,svm
seed = 7
timeframes = 13h,1d,2d
horizon = 3d
bucket = 6h
"""


def main() -> None:
    pages, blocks = build()
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "dump.xml").write_text(render_dump(pages), encoding="utf-8")
    (OUT / "blocks.xml").write_text(render_blocks(blocks), encoding="utf-8")
    (OUT / "pipeline.conf").write_text(CONFIG, encoding="utf-8")
    n = sum(len(p.revisions) for p in pages)
    print(f"{len(pages)} AfD pages, {n} revisions, {len(blocks)} block log entries")


if __name__ == "__main__":
    main()
