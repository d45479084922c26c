"""Caching analysis service.

``POST /analyze`` takes ``{"packagename": str, "packageversion": int}``.
A stored report for the same key and dataset fingerprint is returned as
is; otherwise the app is acquired from the store, analyzed, persisted and
returned. The body is always the canonical report JSON, so every success
for one key is byte-identical; whether it came from the cache is reported
in the ``X-Cache`` header (``hit`` or ``miss``).

Concurrent first requests for one key share a single acquisition.
"""

import datetime
import json
import logging
import os
import shutil
import signal
import sqlite3
import tempfile
import threading
from concurrent.futures import Future
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .appstore import acquire, unpack_archive
from .errors import (
    AnalysisFailure,
    AppNotFound,
    BundleError,
    NotFree,
    PrivacyAnalysisError,
    StorageUnavailable,
    StoreError,
)
from .pipeline import analyze_bundle, parse_report, serialize_report
from .scanner import PACKAGE_NAME_RE, open_bundle

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalysisRequest:
    packagename: str
    packageversion: int

    @classmethod
    def parse(cls, payload):
        """Validate a decoded JSON body; raise ValueError with a reason."""
        if not isinstance(payload, dict):
            raise ValueError("request body must be a JSON object")
        name = payload.get("packagename")
        version = payload.get("packageversion")
        if not isinstance(name, str) or not PACKAGE_NAME_RE.match(name):
            raise ValueError("packagename must be a reverse-domain package name")
        if isinstance(version, bool) or not isinstance(version, int) or version < 0:
            raise ValueError("packageversion must be a non-negative integer")
        return cls(name, version)

    @property
    def key(self):
        return (self.packagename, self.packageversion)


@dataclass(frozen=True)
class CacheRecord:
    key: tuple
    body: bytes
    stored_at: str
    dataset_fingerprint: str

    @property
    def report(self):
        return parse_report(self.body)


class ReportCache:
    """On-disk report store (a single SQLite file)."""

    def __init__(self, path):
        self.path = os.fspath(path)
        try:
            os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)
            self._db = sqlite3.connect(self.path, check_same_thread=False)
            self._db.execute("PRAGMA journal_mode=WAL")
            self._db.execute(
                "CREATE TABLE IF NOT EXISTS reports ("
                " packagename TEXT NOT NULL,"
                " packageversion INTEGER NOT NULL,"
                " fingerprint TEXT NOT NULL,"
                " body BLOB NOT NULL,"
                " stored_at TEXT NOT NULL,"
                " PRIMARY KEY (packagename, packageversion, fingerprint))"
            )
            self._db.commit()
        except (OSError, sqlite3.Error) as exc:
            raise StorageUnavailable(f"cannot open cache at {self.path}: {exc}") from exc
        self._lock = threading.Lock()

    def persist(self, record):
        name, version = record.key
        try:
            with self._lock:
                self._db.execute(
                    "INSERT OR REPLACE INTO reports VALUES (?, ?, ?, ?, ?)",
                    (name, version, record.dataset_fingerprint, record.body, record.stored_at),
                )
                self._db.commit()
        except sqlite3.Error as exc:
            raise StorageUnavailable(str(exc)) from exc

    def lookup(self, key, fingerprint):
        try:
            with self._lock:
                row = self._db.execute(
                    "SELECT body, stored_at FROM reports"
                    " WHERE packagename = ? AND packageversion = ? AND fingerprint = ?",
                    (key[0], key[1], fingerprint),
                ).fetchone()
        except sqlite3.Error as exc:
            raise StorageUnavailable(str(exc)) from exc
        if row is None:
            return None
        return CacheRecord(tuple(key), bytes(row[0]), row[1], fingerprint)

    def close(self):
        with self._lock:
            self._db.close()


def error_payload(code, message, phase=None):
    err = {"code": code, "message": message}
    if phase:
        err["phase"] = phase
    return (json.dumps({"error": err}, sort_keys=True) + "\n").encode("utf-8")


@dataclass
class Response:
    status: int
    body: bytes
    cached: bool = False


class AnalysisService:
    """Request handling independent of the HTTP transport."""

    def __init__(self, dataset, backend, data_dir, credentials, *, workers=4, scan_workers=None):
        self.dataset = dataset
        self.fingerprint = dataset.fingerprint
        self.backend = backend
        self.credentials = credentials
        self.data_dir = os.fspath(data_dir)
        os.makedirs(self.data_dir, exist_ok=True)
        self.cache = ReportCache(os.path.join(self.data_dir, "reports.sqlite3"))
        self.scan_workers = scan_workers
        self._slots = threading.BoundedSemaphore(max(1, workers))
        self._lock = threading.Lock()
        self._inflight = {}
        self.acquisitions = 0
        self.analyses = 0
        self.cache_hits = 0

    def handle(self, raw_body):
        try:
            payload = json.loads(raw_body or b"")
            req = AnalysisRequest.parse(payload)
        except ValueError as exc:
            return Response(400, error_payload("bad_request", str(exc)))
        return self.handle_analyze(req)

    def handle_analyze(self, req):
        try:
            record = self.cache.lookup(req.key, self.fingerprint)
            if record is not None:
                with self._lock:
                    self.cache_hits += 1
                return Response(200, record.body, cached=True)
            return Response(200, self._single_flight(req))
        except AppNotFound as exc:
            return Response(404, error_payload(exc.code, str(exc), exc.phase))
        except NotFree as exc:
            return Response(422, error_payload(exc.code, str(exc), exc.phase))
        except StoreError as exc:
            return Response(502, error_payload(exc.code, str(exc), exc.phase))
        except AnalysisFailure as exc:
            return Response(500, error_payload("analysis_failure", str(exc), exc.stage))
        except StorageUnavailable as exc:
            return Response(500, error_payload("storage_unavailable", str(exc), "persist"))
        except PrivacyAnalysisError as exc:
            return Response(500, error_payload("analysis_failure", str(exc), "analysis"))

    def _single_flight(self, req):
        with self._lock:
            future = self._inflight.get(req.key)
            leader = future is None
            if leader:
                future = self._inflight[req.key] = Future()
        if not leader:
            return future.result()
        try:
            # a previous leader may have persisted between our lookup and now
            record = self.cache.lookup(req.key, self.fingerprint)
            body = record.body if record is not None else self._acquire_and_analyze(req)
            future.set_result(body)
            return body
        except BaseException as exc:
            future.set_exception(exc)
            raise
        finally:
            with self._lock:
                del self._inflight[req.key]

    def _acquire_and_analyze(self, req):
        with self._slots:
            with self._lock:
                self.acquisitions += 1
            outcome = acquire(self.backend, self.credentials, req.packagename, req.packageversion)
            workdir = tempfile.mkdtemp(prefix="bundle-", dir=self.data_dir)
            try:
                try:
                    unpack_archive(outcome.bundle_archive, workdir)
                    bundle = open_bundle(workdir, req.packagename, req.packageversion)
                except (BundleError, OSError, ValueError) as exc:
                    raise AnalysisFailure("unpack", exc) from exc
                with self._lock:
                    self.analyses += 1
                report = analyze_bundle(bundle, self.dataset, workers=self.scan_workers)
            finally:
                shutil.rmtree(workdir, ignore_errors=True)
            body = serialize_report(report)
            self.cache.persist(CacheRecord(
                req.key, body,
                datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
                self.fingerprint,
            ))
            log.info("analyzed %s v%s: score %s", req.packagename, req.packageversion, report.final_score)
            return body

    def close(self):
        self.cache.close()


class _Handler(BaseHTTPRequestHandler):
    service = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.info("%s " + fmt, self.address_string(), *args)

    def _send(self, status, body, content_type="application/json", cached=None):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        if cached is not None:
            self.send_header("X-Cache", "hit" if cached else "miss")
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/healthz":
            return self._send(200, b"ok", "text/plain")
        self._send(404, error_payload("not_found", self.path))

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length)
        if self.path != "/analyze":
            return self._send(404, error_payload("not_found", self.path))
        resp = self.service.handle(body)
        self._send(resp.status, resp.body, cached=resp.cached if resp.status == 200 else None)


def make_server(service, host="127.0.0.1", port=0):
    handler = type("AnalyzeHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    # non-daemon handler threads so server_close() waits for in-flight analyses
    server.daemon_threads = False
    server.block_on_close = True
    return server


def serve(service, host="127.0.0.1", port=8080, ready=None):
    """Serve until SIGTERM/SIGINT, then finish in-flight requests and return."""
    server = make_server(service, host, port)

    def on_signal(signum, _frame):
        log.info("received signal %s, shutting down", signum)
        threading.Thread(target=server.shutdown, daemon=True).start()

    previous = {sig: signal.signal(sig, on_signal) for sig in (signal.SIGTERM, signal.SIGINT)}
    try:
        if ready is not None:
            ready(server)
        server.serve_forever()
    finally:
        server.server_close()
        service.close()
        for sig, handler in previous.items():
            signal.signal(sig, handler)
    return 0
