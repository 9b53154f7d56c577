"""HTTP publishing of the dataset: dereferenceable per-concept descriptions
with content negotiation, a query endpoint, browsable HTML pages, and
whole-dataset downloads.

The server owns one frozen expanded graph (plus the master for its dump)
and never mutates it; handlers are stateless, so any number of requests
may run concurrently. Concept URIs answer directly with 200 rather than
through 303 redirects.
"""

from __future__ import annotations

import html
import logging
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, unquote, urlsplit

from .build import DEFAULT_CONFIG, SchemeConfig, default_prefix_map
from .query import evaluate, parse_query, results_to_json
from .rdf import SKOS, Graph, Iri, Literal, Term
from .serialize import split_per_concept, to_ntriples, to_rdfxml, to_turtle

log = logging.getLogger(__name__)

CONTENT_TYPES = {
    "rdf": "application/rdf+xml",
    "ttl": "text/turtle",
    "nt": "application/n-triples",
    "html": "text/html",
}
# Negotiation order: the first type of the Accept header that we support
# wins; these are the supported values.
SUPPORTED_TYPES = ("application/rdf+xml", "text/turtle", "application/n-triples", "text/html")
WILDCARDS = {
    "*/*": "application/rdf+xml",
    "application/*": "application/rdf+xml",
    "text/*": "text/turtle",
}


@dataclass(slots=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    path_prefix: str = "/resources/MSC/2010/"
    dump_dir: Optional[str] = None
    scheme: SchemeConfig = field(default_factory=lambda: DEFAULT_CONFIG)

    def __post_init__(self) -> None:
        if not self.path_prefix.startswith("/") or not self.path_prefix.endswith("/"):
            raise ValueError(f"path prefix must start and end with '/': {self.path_prefix!r}")


def negotiate(accept_header: Optional[str], extension: Optional[str]) -> Optional[str]:
    """Pick the response content type: extension wins, then the first
    supported entry of the Accept header, then text/html by default.
    Returns None for an Accept header we cannot satisfy (406)."""
    if extension:
        return CONTENT_TYPES.get(extension)
    if accept_header is None or not accept_header.strip():
        return "text/html"
    for entry in accept_header.split(","):
        media = entry.split(";", 1)[0].strip().lower()
        if media in SUPPORTED_TYPES:
            return media
        if media in WILDCARDS:
            return WILDCARDS[media]
    return None


class DatasetServer(ThreadingHTTPServer):
    daemon_threads = False

    def __init__(self, master: Graph, expanded: Graph, config: Optional[ServerConfig] = None):
        self.config = config or ServerConfig()
        self.master = master.freeze()
        self.expanded = expanded.freeze()
        self.prefix_map = dict(expanded.prefixes) or default_prefix_map(self.config.scheme)
        self.slices = split_per_concept(self.expanded)
        for piece in self.slices.values():
            piece.prefixes.update(self.prefix_map)
            piece.freeze()
        if self.config.dump_dir:
            write_dumps(self.master, self.expanded, Path(self.config.dump_dir))
        super().__init__((self.config.host, self.config.port), _Handler)

    @property
    def base_url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def run_in_thread(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


def write_dumps(master: Graph, expanded: Graph, directory: Path) -> list[Path]:
    """Write the whole-dataset download files: msc2010.{nt,ttl,rdf} for the
    master and msc2010-expanded.{nt,ttl,rdf} for the expanded graph."""
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for stem, graph in (("msc2010", master), ("msc2010-expanded", expanded)):
        for ext, writer in (("nt", to_ntriples), ("ttl", to_turtle), ("rdf", to_rdfxml)):
            path = directory / f"{stem}.{ext}"
            path.write_text(writer(graph), encoding="utf-8")
            written.append(path)
    return written


class _Handler(BaseHTTPRequestHandler):
    server: DatasetServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)

    # -- plumbing -------------------------------------------------------

    def _send(self, status: int, content_type: str, body: str) -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _not_found(self, what: str = "resource") -> None:
        self._send(404, "text/plain", f"{what} not found\n")

    # -- routes ----------------------------------------------------------

    def do_GET(self) -> None:
        url = urlsplit(self.path)
        path = unquote(url.path)
        if path == "/health":
            self._send(200, "text/plain", "ok")
            return
        if path == "/sparql":
            params = parse_qs(url.query)
            values = params.get("query")
            if not values:
                self._send(400, "text/plain", "missing 'query' parameter\n")
                return
            self._answer_query(values[0])
            return
        if path.startswith("/dump."):
            self._dump(path[len("/dump."):])
            return
        prefix = self.server.config.path_prefix
        if path.startswith(prefix):
            self._concept(path[len(prefix):])
            return
        self._not_found()

    def do_POST(self) -> None:
        url = urlsplit(self.path)
        if url.path != "/sparql":
            self._not_found()
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length).decode("utf-8")
        content_type = (self.headers.get("Content-Type") or "").split(";")[0].strip().lower()
        if content_type == "application/x-www-form-urlencoded":
            values = parse_qs(body).get("query")
            if not values:
                self._send(400, "text/plain", "missing 'query' parameter\n")
                return
            query_text = values[0]
        else:
            query_text = body
        if not query_text.strip():
            self._send(400, "text/plain", "missing 'query' parameter\n")
            return
        self._answer_query(query_text)

    def _answer_query(self, query_text: str) -> None:
        try:
            query = parse_query(query_text)
        except ValueError as exc:
            self._send(400, "text/plain", f"query error: {exc}\n")
            return
        table = evaluate(self.server.expanded, query)
        self._send(200, "application/sparql-results+json", results_to_json(table))

    def _dump(self, extension: str) -> None:
        if extension == "master.nt":
            self._send(200, "application/n-triples", to_ntriples(self.server.master))
            return
        if extension == "nt":
            self._send(200, "application/n-triples", to_ntriples(self.server.expanded))
        elif extension == "ttl":
            self._send(200, "text/turtle", to_turtle(self.server.expanded, self.server.prefix_map))
        elif extension == "rdf":
            self._send(200, "application/rdf+xml", to_rdfxml(self.server.expanded, self.server.prefix_map))
        else:
            self._not_found("dump format")

    def _concept(self, rest: str) -> None:
        if "/" in rest or not rest:
            self._not_found()
            return
        code, dot, extension = rest.partition(".")
        if dot and extension not in CONTENT_TYPES:
            self._not_found()
            return
        piece = self.server.slices.get(code)
        if piece is None:
            self._not_found(f"class {code}")
            return
        content_type = negotiate(self.headers.get("Accept"), extension if dot else None)
        if content_type is None:
            self._send(406, "text/plain", "supported types: " + ", ".join(SUPPORTED_TYPES) + "\n")
            return
        if content_type == "application/rdf+xml":
            self._send(200, content_type, to_rdfxml(piece))
        elif content_type == "text/turtle":
            self._send(200, content_type, to_turtle(piece))
        elif content_type == "application/n-triples":
            self._send(200, content_type, to_ntriples(piece))
        else:
            self._send(200, "text/html", self._render_html(code, piece))

    # -- HTML rendering ---------------------------------------------------

    def _render_html(self, code: str, piece: Graph) -> str:
        prefix = self.server.config.path_prefix
        concept = Iri(self.server.config.scheme.base_iri + code)

        def code_of(term: Term) -> Optional[str]:
            if isinstance(term, Iri) and term.value.startswith(self.server.config.scheme.base_iri):
                return term.value[len(self.server.config.scheme.base_iri):]
            return None

        def links(predicate: Iri) -> list[str]:
            out = []
            for t in sorted(piece.match_iter(concept, predicate, None), key=lambda t: t.object.nt()):
                target = code_of(t.object)
                if target is not None:
                    out.append(f'<a href="{prefix}{html.escape(target)}.html">{html.escape(target)}</a>')
                elif isinstance(t.object, Iri):
                    out.append(f'<a href="{html.escape(t.object.value)}">{html.escape(t.object.value)}</a>')
            return out

        labels = [
            t.object
            for t in piece.match_iter(concept, SKOS.prefLabel, None)
            if isinstance(t.object, Literal)
        ]
        labels.sort(key=lambda lit: (lit.language or "", lit.lexical))
        notes = [
            t.object.lexical
            for t in piece.match_iter(concept, SKOS.note, None)
            if isinstance(t.object, Literal)
        ]
        title = next((lit.lexical for lit in labels if lit.language == "en"), code)

        parts = [
            "<!DOCTYPE html>",
            '<html lang="en"><head><meta charset="utf-8">',
            f"<title>{html.escape(code)} – {html.escape(title)}</title></head><body>",
            f"<h1>{html.escape(code)} – {html.escape(title)}</h1>",
            f"<p>Notation: <code>{html.escape(code)}</code></p>",
        ]
        if labels:
            items = "".join(
                f"<li>{html.escape(lit.lexical)} <em>({html.escape(lit.language or 'und')})</em></li>"
                for lit in labels
            )
            parts.append(f"<h2>Labels</h2><ul>{items}</ul>")
        for heading, predicate in (
            ("Broader", SKOS.broader),
            ("Narrower", SKOS.narrower),
            ("Related", SKOS.related),
        ):
            targets = links(predicate)
            if targets:
                parts.append(f"<h2>{heading}</h2><ul>" + "".join(f"<li>{a}</li>" for a in targets) + "</ul>")
        if notes:
            parts.append("<h2>Notes</h2><ul>" + "".join(f"<li>{html.escape(n)}</li>" for n in sorted(notes)) + "</ul>")
        alternates = " | ".join(
            f'<a href="{prefix}{html.escape(code)}.{ext}">{ext}</a>' for ext in ("rdf", "ttl", "nt")
        )
        parts.append(f"<p>Data: {alternates}</p>")
        parts.append("</body></html>")
        return "\n".join(parts) + "\n"


def load_server_config(text: str) -> tuple[ServerConfig, dict[str, str]]:
    """Parse `key = value` lines; returns the config plus the raw map (the
    caller resolves data paths)."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        raw[key.strip()] = value.strip()
    scheme = SchemeConfig(base_iri=raw["base"]) if "base" in raw else DEFAULT_CONFIG
    config = ServerConfig(
        host=raw.get("bind", "127.0.0.1"),
        port=int(raw.get("port", "8080")),
        path_prefix=raw.get("prefix", "/resources/MSC/2010/"),
        dump_dir=raw.get("dump-dir"),
        scheme=scheme,
    )
    return config, raw
