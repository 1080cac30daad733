"""Markdown research-report parser.

Turns raw report text into a structured view: sections, in-text citations,
reference entries, tables, and claim units (sentences with their attached
citation keys). Parsing is total: any Unicode text yields a ParsedReport,
degenerate input just yields empty structure lists.

All recorded spans are (start, end) offsets into the raw text; the substring
``raw[start:end]`` is exactly the recorded region.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import urlsplit, urlunsplit

Span = tuple[int, int]

NUMBERED = "numbered-bracket"
BARE_URL = "bare-url"
MD_LINK = "markdown-link"

REFERENCE_TITLES = frozenset({"references", "bibliography", "sources", "key citations"})

_HEADING_RE = re.compile(r"^(#{1,6})\s+(.*?)\s*#*\s*$")
_BOLD_LINE_RE = re.compile(r"^\s*\*\*([^*].*?)\*\*\s*$")
_FENCE_RE = re.compile(r"^\s*(```|~~~)")
_MD_LINK_RE = re.compile(r"(!?)\[([^\]\n]*)\]\(([^)\n]*)\)")
_NUM_CITE_RE = re.compile(r"\[\s*(\d+(?:\s*,\s*\d+)*)\s*\](?!\()")
_URL_RE = re.compile(r"https?://[^\s<>\"'\]\[{}]+", re.IGNORECASE)
_BULLET_RE = re.compile(r"^(\s*)(?:[-*+]|\d+[.)])\s+")
_REF_NUMBER_RE = re.compile(r"^\s*(?:[-*+]\s+)?(?:\[(\d+)\]|(\d+)[.)])\s*")
_TABLE_SEP_RE = re.compile(r"^\s*\|?\s*:?-{2,}:?\s*(\|\s*:?-{2,}:?\s*)*\|?\s*$")
_SENT_END_CHARS = ".!?"


@dataclass(frozen=True)
class Section:
    level: int
    title: str
    title_span: Span
    body_span: Span


@dataclass(frozen=True)
class InlineCitation:
    kind: str  # NUMBERED | BARE_URL | MD_LINK
    key: int | str  # bracket number, or normalized URL
    span: Span


@dataclass(frozen=True)
class ReferenceEntry:
    number: int | None
    label: str
    url: str | None  # normalized
    span: Span


@dataclass(frozen=True)
class ReferenceSection:
    title_span: Span
    entries: tuple[ReferenceEntry, ...]
    body_span: Span


@dataclass(frozen=True)
class TableBlock:
    span: Span
    syntactically_valid: bool
    n_rows: int
    n_cols: int


@dataclass(frozen=True)
class ClaimUnit:
    span: Span
    attached_keys: tuple[int | str, ...]


@dataclass(frozen=True)
class UnresolvedKey:
    """A numbered citation key with no usable reference entry behind it."""

    number: int


@dataclass(frozen=True)
class ParsedReport:
    raw: str
    sections: tuple[Section, ...] = ()
    inline_citations: tuple[InlineCitation, ...] = ()
    reference_sections: tuple[ReferenceSection, ...] = ()
    tables: tuple[TableBlock, ...] = ()
    claim_units: tuple[ClaimUnit, ...] = ()
    bold_pseudo_headings: tuple[Span, ...] = ()

    def span_text(self, span: Span) -> str:
        return self.raw[span[0] : span[1]]

    def reference_entries(self) -> list[ReferenceEntry]:
        return [e for sec in self.reference_sections for e in sec.entries]

    def reference_url_by_number(self) -> dict[int, str | None]:
        """First reference entry wins when a number is listed twice."""
        mapping: dict[int, str | None] = {}
        for entry in self.reference_entries():
            if entry.number is not None and entry.number not in mapping:
                mapping[entry.number] = entry.url
        return mapping


def normalize_url(url: str) -> str | None:
    """Canonicalize an absolute http(s) URL, or return None if malformed.

    Scheme and host are lowercased, the fragment is stripped, and an empty
    path becomes "/"; everything else is byte-preserved.
    """
    try:
        parts = urlsplit(url.strip())
    except ValueError:
        return None
    if parts.scheme.lower() not in ("http", "https") or not parts.netloc:
        return None
    netloc = parts.netloc
    if "@" in netloc:
        userinfo, _, hostport = netloc.rpartition("@")
        netloc = f"{userinfo}@{hostport.lower()}"
    else:
        netloc = netloc.lower()
    path = parts.path or "/"
    return urlunsplit((parts.scheme.lower(), netloc, path, parts.query, ""))


@dataclass
class _Line:
    start: int
    end: int  # end of line content, excluding the newline
    text: str
    in_fence: bool = False
    is_heading: bool = False
    in_table: bool = False
    in_reference: bool = False


def _split_lines(raw: str) -> list[_Line]:
    lines: list[_Line] = []
    pos = 0
    for piece in raw.splitlines(keepends=True):
        content = piece.rstrip("\n").rstrip("\r")
        lines.append(_Line(start=pos, end=pos + len(content), text=content))
        pos += len(piece)
    return lines


def _mark_fences(lines: list[_Line]) -> None:
    fence: str | None = None
    for line in lines:
        match = _FENCE_RE.match(line.text)
        if fence is None and match:
            fence = match.group(1)
            line.in_fence = True
        elif fence is not None:
            line.in_fence = True
            if match and match.group(1) == fence:
                fence = None


def _parse_sections(raw: str, lines: list[_Line]) -> list[Section]:
    headings: list[tuple[int, int, str, Span]] = []  # (line idx, level, title, title span)
    for idx, line in enumerate(lines):
        if line.in_fence:
            continue
        match = _HEADING_RE.match(line.text)
        if match:
            line.is_heading = True
            title = match.group(2)
            offset = line.start + line.text.index(title) if title else line.end
            headings.append((idx, len(match.group(1)), title, (offset, offset + len(title))))
    sections = []
    for n, (idx, level, title, title_span) in enumerate(headings):
        body_start = lines[idx].end + 1 if lines[idx].end < len(raw) else len(raw)
        body_start = min(body_start, len(raw))
        if n + 1 < len(headings):
            body_end = lines[headings[n + 1][0]].start
        else:
            body_end = len(raw)
        sections.append(Section(level, title, title_span, (body_start, max(body_start, body_end))))
    return sections


def _parse_tables(raw: str, lines: list[_Line]) -> list[TableBlock]:
    def cells(text: str) -> list[str]:
        parts = re.split(r"(?<!\\)\|", text)
        if parts and not parts[0].strip():
            parts = parts[1:]
        if parts and not parts[-1].strip():
            parts = parts[:-1]
        return [p.strip() for p in parts]

    tables = []
    idx = 0
    while idx < len(lines):
        line = lines[idx]
        if line.in_fence or line.is_heading or "|" not in line.text or not line.text.strip():
            idx += 1
            continue
        run_start = idx
        while (
            idx < len(lines)
            and "|" in lines[idx].text
            and lines[idx].text.strip()
            and not lines[idx].in_fence
            and not lines[idx].is_heading
        ):
            idx += 1
        run = lines[run_start:idx]
        if len(run) < 2:
            continue
        for member in run:
            member.in_table = True
        has_separator = bool(_TABLE_SEP_RE.match(run[1].text))
        counts = [len(cells(member.text)) for member in run if not _TABLE_SEP_RE.match(member.text)]
        n_cols = counts[0] if counts else 0
        valid = has_separator and bool(counts) and all(c == n_cols for c in counts)
        tables.append(
            TableBlock(
                span=(run[0].start, run[-1].end),
                syntactically_valid=valid,
                n_rows=len(counts),
                n_cols=n_cols,
            )
        )
    return tables


def _is_reference_title(title: str) -> bool:
    return title.strip().rstrip(":").strip().lower() in REFERENCE_TITLES


def _parse_reference_entry(raw: str, line: _Line) -> ReferenceEntry | None:
    text = line.text
    number = None
    rest_offset = 0
    num_match = _REF_NUMBER_RE.match(text)
    if num_match and (num_match.group(1) or num_match.group(2)):
        number = int(num_match.group(1) or num_match.group(2))
        rest_offset = num_match.end()
    rest = text[rest_offset:]

    url: str | None = None
    label = rest
    link_match = _MD_LINK_RE.search(rest)
    if link_match and not link_match.group(1):
        candidate = normalize_url(link_match.group(3).split()[0] if link_match.group(3).split() else "")
        if candidate:
            url = candidate
            label = link_match.group(2).strip() or rest
    if url is None:
        url_match = _URL_RE.search(rest)
        if url_match:
            url = normalize_url(url_match.group(0).rstrip(".,;:!?"))
            label = (rest[: url_match.start()] + rest[url_match.end() :]).strip()

    if number is None and url is None:
        return None
    label = label.strip().strip("-*+ ").strip()
    label = re.sub(r"[\s:]+$", "", label)
    if not label:
        label = url or text.strip()
    return ReferenceEntry(number=number, label=label, url=url, span=(line.start, line.end))


def _parse_reference_sections(
    raw: str, lines: list[_Line], sections: list[Section]
) -> list[ReferenceSection]:
    ref_sections = []
    for section in sections:
        if not _is_reference_title(section.title):
            continue
        entries = []
        for line in lines:
            if line.start >= section.body_span[0] and line.end <= section.body_span[1]:
                line.in_reference = True
                if line.is_heading or line.in_fence or not line.text.strip():
                    continue
                entry = _parse_reference_entry(raw, line)
                if entry is not None:
                    entries.append(entry)
        ref_sections.append(
            ReferenceSection(
                title_span=section.title_span,
                entries=tuple(entries),
                body_span=section.body_span,
            )
        )
    return ref_sections


def _masked_intervals(lines: list[_Line], sections: list[Section]) -> list[Span]:
    """Regions where in-text citation tokens must not be collected."""
    intervals = [
        (line.start, line.end) for line in lines if line.in_fence or line.in_reference
    ]
    for section in sections:
        if _is_reference_title(section.title):
            intervals.append(section.title_span)
    return intervals


def _inside(pos: int, intervals: list[Span]) -> bool:
    return any(start <= pos < end for start, end in intervals)


def _collect_citations(raw: str, masked: list[Span]) -> list[InlineCitation]:
    citations: list[InlineCitation] = []
    link_spans: list[Span] = []

    for match in _MD_LINK_RE.finditer(raw):
        if _inside(match.start(), masked):
            continue
        link_spans.append((match.start(), match.end()))
        if match.group(1):  # image, not a citation
            continue
        target = match.group(3).split()
        url = normalize_url(target[0]) if target else None
        if url:
            citations.append(InlineCitation(MD_LINK, url, (match.start(), match.end())))

    def overlaps_link(start: int, end: int) -> bool:
        return any(s < end and start < e for s, e in link_spans)

    for match in _NUM_CITE_RE.finditer(raw):
        if _inside(match.start(), masked) or overlaps_link(match.start(), match.end()):
            continue
        for piece in match.group(1).split(","):
            key = int(piece.strip())
            if key >= 1:
                citations.append(InlineCitation(NUMBERED, key, (match.start(), match.end())))

    for match in _URL_RE.finditer(raw):
        if _inside(match.start(), masked) or overlaps_link(match.start(), match.end()):
            continue
        token = match.group(0).rstrip(".,;:!?")
        url = normalize_url(token)
        if url:
            citations.append(InlineCitation(BARE_URL, url, (match.start(), match.start() + len(token))))

    citations.sort(key=lambda c: c.span[0])
    return citations


def _sub_paragraphs(raw: str, lines: list[_Line]) -> list[Span]:
    """Plain-text regions eligible for claim extraction, one per prose block.

    Headings, fences, tables, and reference-section bodies are skipped;
    each list item is its own block so bullet claims do not merge.
    """
    blocks: list[Span] = []
    current: list[_Line] = []

    def flush() -> None:
        if current:
            blocks.append((current[0].start, current[-1].end))
            current.clear()

    for line in lines:
        skip = line.in_fence or line.is_heading or line.in_table or line.in_reference
        blank = not line.text.strip()
        if skip or blank:
            flush()
            continue
        if _BULLET_RE.match(line.text) and current:
            flush()
        current.append(line)
    flush()
    return blocks


def _segment_claims(
    raw: str, block: Span, citations: list[InlineCitation]
) -> list[ClaimUnit]:
    start, end = block
    bullet = _BULLET_RE.match(raw[start:end])
    if bullet:
        start += bullet.end()
    if start >= end:
        return []

    token_spans = sorted({c.span for c in citations if start <= c.span[0] and c.span[1] <= end})

    def in_token(pos: int) -> Span | None:
        for span in token_spans:
            if span[0] <= pos < span[1]:
                return span
        return None

    # Sentence cut points: terminal punctuation at bracket depth 0, outside
    # citation tokens, followed by whitespace or end of block.
    cuts: list[int] = []
    depth = 0
    pos = start
    while pos < end:
        token = in_token(pos)
        if token:
            pos = token[1]
            continue
        char = raw[pos]
        if char in "([{":
            depth += 1
        elif char in ")]}":
            depth = max(0, depth - 1)
        elif char in _SENT_END_CHARS and depth == 0:
            run_end = pos + 1
            while run_end < end and raw[run_end] in _SENT_END_CHARS:
                run_end += 1
            if run_end >= end or raw[run_end].isspace():
                cuts.append(run_end)
                pos = run_end
                continue
        pos += 1

    # A pure-citation tail after the last cut is a paragraph-end cluster that
    # backfills the uncited sentences of this block.
    tail_start = cuts[-1] if cuts else start
    tail = raw[tail_start:end]
    tail_is_cluster = bool(token_spans) and bool(tail.strip()) and not re.sub(
        r"[\s.,;:]+", "", _strip_tokens(tail, tail_start, token_spans)
    )

    boundaries = list(cuts)
    if not tail_is_cluster and tail.strip():
        boundaries.append(end)

    claims: list[ClaimUnit] = []
    sent_start = start
    for boundary in boundaries:
        # Pull post-period citation tokens into the preceding sentence unless
        # they form the paragraph-end cluster.
        sent_end = boundary
        probe = boundary
        while True:
            while probe < end and raw[probe].isspace():
                probe += 1
            token = in_token(probe)
            if token is None or (tail_is_cluster and token[0] >= tail_start):
                break
            probe = token[1]
            sent_end = probe
        span = _trimmed(raw, sent_start, sent_end)
        if span and _has_claim_text(raw, span, token_spans):
            keys = _keys_within(span, citations)
            claims.append(ClaimUnit(span=span, attached_keys=keys))
        sent_start = sent_end

    if tail_is_cluster and claims:
        cluster_keys = _keys_within((tail_start, end), citations)
        uncited = {i for i, claim in enumerate(claims) if not claim.attached_keys}
        targets = uncited or {len(claims) - 1}
        claims = [
            ClaimUnit(span=claim.span, attached_keys=cluster_keys) if i in targets else claim
            for i, claim in enumerate(claims)
        ]
    return claims


def _strip_tokens(text: str, offset: int, token_spans: list[Span]) -> str:
    chars = list(text)
    for span_start, span_end in token_spans:
        for pos in range(max(span_start, offset), min(span_end, offset + len(text))):
            chars[pos - offset] = " "
    return "".join(chars)


def _trimmed(raw: str, start: int, end: int) -> Span | None:
    while start < end and raw[start].isspace():
        start += 1
    while end > start and raw[end - 1].isspace():
        end -= 1
    return (start, end) if start < end else None


def _has_claim_text(raw: str, span: Span, token_spans: list[Span]) -> bool:
    stripped = _strip_tokens(raw[span[0] : span[1]], span[0], token_spans)
    return any(ch.isalnum() for ch in stripped)


def _keys_within(span: Span, citations: list[InlineCitation]) -> tuple[int | str, ...]:
    keys: list[int | str] = []
    for citation in citations:
        if span[0] <= citation.span[0] and citation.span[1] <= span[1]:
            if citation.key not in keys:
                keys.append(citation.key)
    return tuple(keys)


def parse_report(text: str) -> ParsedReport:
    """Parse report text into its structured view. Never raises on content."""
    lines = _split_lines(text)
    _mark_fences(lines)
    sections = _parse_sections(text, lines)
    tables = _parse_tables(text, lines)
    reference_sections = _parse_reference_sections(text, lines, sections)
    masked = _masked_intervals(lines, sections)
    citations = _collect_citations(text, masked)

    bold_headings = tuple(
        (line.start, line.end)
        for line in lines
        if not line.in_fence
        and not line.in_table
        and not line.in_reference
        and _BOLD_LINE_RE.match(line.text)
    )

    claims: list[ClaimUnit] = []
    for block in _sub_paragraphs(text, lines):
        claims.extend(_segment_claims(text, block, citations))

    return ParsedReport(
        raw=text,
        sections=tuple(sections),
        inline_citations=tuple(citations),
        reference_sections=tuple(reference_sections),
        tables=tuple(tables),
        claim_units=tuple(claims),
        bold_pseudo_headings=bold_headings,
    )


def extract_claim_citation_pairs(
    report: ParsedReport,
) -> list[tuple[ClaimUnit, list[str | UnresolvedKey]]]:
    """Resolve each cited claim to the URLs backing it.

    Numbered keys resolve through the reference list; a number with no entry,
    or whose entry has no usable URL, is kept as an UnresolvedKey marker so
    the citation verifier can count it as an invalid link.
    """
    by_number = report.reference_url_by_number()
    pairs: list[tuple[ClaimUnit, list[str | UnresolvedKey]]] = []
    for claim in report.claim_units:
        if not claim.attached_keys:
            continue
        resolved: list[str | UnresolvedKey] = []
        for key in claim.attached_keys:
            if isinstance(key, int):
                url = by_number.get(key)
                target: str | UnresolvedKey = url if url else UnresolvedKey(key)
            else:
                target = key
            if target not in resolved:
                resolved.append(target)
        pairs.append((claim, resolved))
    return pairs
