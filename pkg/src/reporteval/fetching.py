"""Web retrieval for citation verification: cached, polite, replayable.

Each distinct normalized URL is fetched over the network at most once per
run; results land in a content-addressed cache keyed by the normalized URL,
so a later run (or an ``--offline`` run) replays the same bytes. Network
failures are encoded in the result status, never raised past the fetcher.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urlsplit

import requests

from .parsing import normalize_url

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_HTTP_ERROR = "http-error"
STATUS_TIMEOUT = "timeout"
STATUS_DNS_FAILURE = "dns-failure"
STATUS_TLS_FAILURE = "tls-failure"


class OfflineCacheMiss(Exception):
    """Offline mode was requested but the URL is not in the cache."""


@dataclass(frozen=True)
class FetchPolicy:
    timeout: float = 30.0
    max_redirects: int = 10
    cache_dir: str | Path | None = None
    user_agent: str = "reporteval/0.1"
    offline: bool = False
    url_rewrites: dict[str, str] = field(default_factory=dict)
    max_concurrency: int = 8
    per_host_concurrency: int = 2
    paywall_unverifiable: bool = False  # 402/403 become "unverifiable" instead of invalid
    respect_robots: bool = False  # adds one robots.txt request per host when enabled
    prefix_words: int = 500


@dataclass(frozen=True)
class FetchResult:
    requested_url: str
    final_url: str
    status: str
    status_code: int | None = None
    detail: str = ""
    title: str = ""
    content_text: str = ""
    content_prefix: str = ""
    fetched_at: str = ""
    unverifiable: bool = False

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_record(self) -> dict:
        return {
            "requested_url": self.requested_url,
            "final_url": self.final_url,
            "status": self.status,
            "status_code": self.status_code,
            "detail": self.detail,
            "title": self.title,
            "content_text": self.content_text,
            "content_prefix": self.content_prefix,
            "fetched_at": self.fetched_at,
            "unverifiable": self.unverifiable,
        }

    @classmethod
    def from_record(cls, record: dict) -> FetchResult:
        return cls(**record)


class _TextExtractor(HTMLParser):
    """Readable-text extraction: headings, paragraphs, list items, table cells."""

    _SKIP = {"script", "style", "noscript", "template"}
    _BLOCK = {
        "p", "div", "section", "article", "li", "tr", "br", "ul", "ol",
        "table", "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "pre",
    }

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.title = ""
        self._chunks: list[str] = []
        self._skip_depth = 0
        self._in_title = False

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1
        elif tag == "title":
            self._in_title = True
        elif tag in self._BLOCK:
            self._chunks.append("\n")
        elif tag in ("td", "th"):
            self._chunks.append(" ")

    def handle_endtag(self, tag):
        if tag in self._SKIP:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag == "title":
            self._in_title = False
        elif tag in self._BLOCK:
            self._chunks.append("\n")

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_title:
            self.title += data
        else:
            self._chunks.append(data)

    def text(self) -> str:
        lines = []
        for raw_line in "".join(self._chunks).splitlines():
            line = " ".join(raw_line.split())
            if line:
                lines.append(line)
        return "\n".join(lines)


def extract_readable_text(html: str) -> tuple[str, str]:
    """Return (title, readable text) for an HTML document."""
    parser = _TextExtractor()
    try:
        parser.feed(html)
        parser.close()
    except Exception as exc:  # malformed markup must not kill the run
        logger.warning("HTML extraction error: %s", exc)
    return " ".join(parser.title.split()), parser.text()


def word_prefix(text: str, max_words: int) -> str:
    """The shortest string prefix of ``text`` containing ``max_words`` words."""
    count = 0
    in_word = False
    for pos, char in enumerate(text):
        if char.isspace():
            in_word = False
        elif not in_word:
            in_word = True
            count += 1
            if count > max_words:
                return text[:pos].rstrip()
    return text


class Fetcher:
    """Cached URL fetcher with global and per-host concurrency caps."""

    def __init__(self, policy: FetchPolicy, session: requests.Session | None = None):
        self.policy = policy
        self._session = session or requests.Session()
        self._session.max_redirects = policy.max_redirects
        self._memo: dict[str, FetchResult] = {}
        self._lock = threading.Lock()
        self._url_locks: dict[str, threading.Lock] = {}
        self._host_limits: dict[str, threading.BoundedSemaphore] = {}
        self._robots: dict[str, object] = {}
        self._global_limit = threading.BoundedSemaphore(policy.max_concurrency)
        self.network_requests = 0
        self.cache_hits = 0

    # -- cache ---------------------------------------------------------------

    def _cache_path(self, url: str) -> Path | None:
        if self.policy.cache_dir is None:
            return None
        digest = hashlib.sha256(url.encode("utf-8")).hexdigest()
        return Path(self.policy.cache_dir) / "fetch" / f"{digest}.json"

    def _cache_load(self, url: str) -> FetchResult | None:
        path = self._cache_path(url)
        if path is None or not path.exists():
            return None
        try:
            return FetchResult.from_record(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            logger.warning("unreadable fetch cache entry %s: %s", path, exc)
            return None

    def _cache_store(self, url: str, result: FetchResult) -> None:
        path = self._cache_path(url)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(result.to_record(), ensure_ascii=False, indent=2), encoding="utf-8")
        os.replace(tmp, path)

    # -- politeness ----------------------------------------------------------

    def _host_limit(self, url: str) -> threading.BoundedSemaphore:
        host = urlsplit(url).netloc
        with self._lock:
            if host not in self._host_limits:
                self._host_limits[host] = threading.BoundedSemaphore(
                    self.policy.per_host_concurrency
                )
            return self._host_limits[host]

    def _url_lock(self, url: str) -> threading.Lock:
        with self._lock:
            if url not in self._url_locks:
                self._url_locks[url] = threading.Lock()
            return self._url_locks[url]

    # -- fetching ------------------------------------------------------------

    def fetch(self, url: str) -> FetchResult:
        """Fetch a normalized URL, serving repeats from cache."""
        normalized = normalize_url(url)
        if normalized is None:
            return FetchResult(
                requested_url=url,
                final_url=url,
                status=STATUS_DNS_FAILURE,
                detail="URL failed normalization",
            )
        with self._url_lock(normalized):
            with self._lock:
                if normalized in self._memo:
                    self.cache_hits += 1
                    return self._memo[normalized]
            cached = self._cache_load(normalized)
            if cached is not None:
                with self._lock:
                    self._memo[normalized] = cached
                    self.cache_hits += 1
                return cached
            if self.policy.offline:
                raise OfflineCacheMiss(f"offline mode: {normalized} is not in the fetch cache")
            result = self._fetch_network(normalized)
            self._cache_store(normalized, result)
            with self._lock:
                self._memo[normalized] = result
            return result

    def _request_url(self, url: str) -> str:
        for prefix, replacement in self.policy.url_rewrites.items():
            if url.startswith(prefix):
                return replacement + url[len(prefix) :]
        return url

    def _robots_allows(self, request_url: str) -> bool:
        from urllib.robotparser import RobotFileParser

        host = urlsplit(request_url)
        base = f"{host.scheme}://{host.netloc}"
        with self._lock:
            parser = self._robots.get(base)
        if parser is None:
            parser = RobotFileParser()
            try:
                response = self._session.get(
                    f"{base}/robots.txt",
                    headers={"User-Agent": self.policy.user_agent},
                    timeout=self.policy.timeout,
                )
                if response.status_code < 400:
                    parser.parse(response.text.splitlines())
                else:
                    parser.allow_all = True
            except requests.exceptions.RequestException:
                parser.allow_all = True
            with self._lock:
                self._robots[base] = parser
        return parser.can_fetch(self.policy.user_agent, request_url)

    def _fetch_network(self, url: str) -> FetchResult:
        request_url = self._request_url(url)
        headers = {"User-Agent": self.policy.user_agent}
        fetched_at = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        if self.policy.respect_robots and not self._robots_allows(request_url):
            return FetchResult(
                requested_url=url,
                final_url=url,
                status=STATUS_HTTP_ERROR,
                detail="disallowed by robots.txt",
                fetched_at=fetched_at,
                unverifiable=self.policy.paywall_unverifiable,
            )
        with self._lock:
            self.network_requests += 1
        try:
            with self._global_limit, self._host_limit(request_url):
                response = self._session.get(
                    request_url, headers=headers, timeout=self.policy.timeout
                )
        except requests.exceptions.SSLError as exc:
            return FetchResult(url, url, STATUS_TLS_FAILURE, detail=str(exc), fetched_at=fetched_at)
        except requests.exceptions.Timeout as exc:
            return FetchResult(url, url, STATUS_TIMEOUT, detail=str(exc), fetched_at=fetched_at)
        except requests.exceptions.TooManyRedirects as exc:
            return FetchResult(
                url, url, STATUS_HTTP_ERROR, detail=f"redirect limit exceeded: {exc}",
                fetched_at=fetched_at,
            )
        except requests.exceptions.RequestException as exc:
            # Connection-level failures (DNS, refused, reset) are all dead links.
            return FetchResult(url, url, STATUS_DNS_FAILURE, detail=str(exc), fetched_at=fetched_at)

        final_url = normalize_url(response.url) or url
        if response.status_code >= 400:
            unverifiable = self.policy.paywall_unverifiable and response.status_code in (402, 403)
            return FetchResult(
                requested_url=url,
                final_url=final_url,
                status=STATUS_HTTP_ERROR,
                status_code=response.status_code,
                detail=f"HTTP {response.status_code}",
                fetched_at=fetched_at,
                unverifiable=unverifiable,
            )

        content_type = response.headers.get("Content-Type", "").split(";")[0].strip().lower()
        if content_type == "text/html" or (not content_type and response.text.lstrip().startswith("<")):
            title, text = extract_readable_text(response.text)
        elif content_type.startswith("text/") or content_type in ("application/json", ""):
            title, text = "", response.text.strip()
        else:
            title, text = "", f"[unreadable content type: {content_type}]"
        if not text:
            return FetchResult(
                requested_url=url,
                final_url=final_url,
                status=STATUS_HTTP_ERROR,
                status_code=response.status_code,
                detail="page has no readable text",
                fetched_at=fetched_at,
            )
        return FetchResult(
            requested_url=url,
            final_url=final_url,
            status=STATUS_OK,
            status_code=response.status_code,
            title=title,
            content_text=text,
            content_prefix=word_prefix(text, self.policy.prefix_words),
            fetched_at=fetched_at,
        )
