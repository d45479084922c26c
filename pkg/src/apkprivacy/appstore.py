"""Application acquisition: a six-phase download flow over a pluggable store.

Phases, in order:

1. ``auth``       exchange account credentials for session tokens
2. ``details``    look up the listing for (package, version code)
3. ``free_check`` refuse anything that is not free
4. ``purchase``   obtain a download token (free apps are still "bought")
5. ``delivery``   exchange the download token for file locators
6. ``download``   fetch the application data, skipping expansion files

Two backends ship with the package: :class:`FixtureStore`, reading a local
directory, and :class:`HttpStore`, a client for the loopback JSON protocol
served by :func:`make_store_server`.
"""

import io
import json
import logging
import os
import secrets
import threading
import urllib.error
import urllib.parse
import urllib.request
import zipfile
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import (
    AppNotFound,
    AuthFailed,
    DeliveryFailed,
    DownloadFailed,
    NotAuthenticated,
    NotFree,
    PurchaseFailed,
    StoreError,
    TransportError,
)

log = logging.getLogger(__name__)

EXPANSION_SUFFIX = ".obb"
SUCCESS = "Success"
PHASES = ("auth", "details", "free_check", "purchase", "delivery", "download")


@dataclass(frozen=True)
class Credentials:
    account: str
    secret: str = field(repr=False)


@dataclass
class StoreSession:
    credentials: Credentials
    tokens: tuple = ()

    @property
    def authenticated(self):
        return bool(self.tokens)


@dataclass(frozen=True)
class AppListing:
    package_name: str
    version_code: int
    offer: str = "free"          # "free" or "paid"
    price: str = None
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def is_free(self):
        return self.offer == "free"


@dataclass(frozen=True)
class AcquisitionOutcome:
    package_name: str
    version_code: int
    bundle_archive: bytes = field(repr=False)
    skipped_expansions: int = 0


def credentials_from_env(environ=None, config_path=None):
    """Read store credentials from ``PQS_STORE_ACCOUNT``/``PQS_STORE_SECRET``
    or from a JSON config file with ``account`` and ``secret`` keys.

    Secrets are never taken from the command line.
    """
    environ = os.environ if environ is None else environ
    config_path = config_path or environ.get("PQS_STORE_CONFIG")
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        return Credentials(cfg["account"], cfg["secret"])
    account = environ.get("PQS_STORE_ACCOUNT")
    secret = environ.get("PQS_STORE_SECRET")
    if account is None or secret is None:
        raise AuthFailed("no store credentials: set PQS_STORE_ACCOUNT and PQS_STORE_SECRET "
                         "or PQS_STORE_CONFIG")
    return Credentials(account, secret)


class StoreBackend:
    """Endpoint-level interface a store must provide.

    Each method corresponds to one remote call. Implementations raise the
    phase-specific :mod:`apkprivacy.errors` store exceptions, or
    :class:`TransportError` when the store cannot be reached.
    """

    def auth(self, account, secret):
        raise NotImplementedError

    def details(self, tokens, package_name, version_code):
        raise NotImplementedError

    def purchase(self, tokens, package_name, version_code):
        raise NotImplementedError

    def delivery(self, tokens, package_name, version_code, download_token):
        raise NotImplementedError

    def download(self, tokens, locator):
        raise NotImplementedError


def _listing_from_json(entry):
    offer = entry.get("offer", "free")
    price = entry.get("price")
    if isinstance(offer, dict):
        price = offer.get("price")
        offer = offer.get("type", "free")
    return AppListing(entry["package_name"], int(entry["version_code"]), str(offer).lower(),
                      price, dict(entry.get("metadata", {})))


class FixtureStore(StoreBackend):
    """Store backed by a directory::

        <store>/catalog.json
        <store>/blobs/<package>-<version>.zip
        <store>/blobs/<expansion>.obb          (optional)

    ``catalog.json`` holds ``accounts`` (account/secret pairs) and ``apps``
    (package_name, version_code, offer, metadata, expansions). Every call is
    appended to ``call_log`` as ``(phase, package_name)``.
    """

    def __init__(self, root):
        self.root = os.fspath(root)
        path = os.path.join(self.root, "catalog.json")
        try:
            with open(path, encoding="utf-8") as fh:
                self.catalog = json.load(fh)
        except FileNotFoundError:
            raise TransportError(f"fixture store has no catalog: {path}") from None
        self.call_log = []
        self._lock = threading.Lock()
        self._sessions = set()
        self._download_tokens = {}
        self._apps = {}
        for entry in self.catalog.get("apps", []):
            listing = _listing_from_json(entry)
            self._apps[(listing.package_name, listing.version_code)] = (listing, entry)

    def _log(self, phase, package_name=None):
        with self._lock:
            self.call_log.append((phase, package_name))

    def _check(self, tokens):
        if not tokens or not any(t in self._sessions for t in tokens):
            raise NotAuthenticated("session token is not valid")

    def auth(self, account, secret):
        self._log("auth")
        for acct in self.catalog.get("accounts", []):
            if acct.get("account") == account and acct.get("secret") == secret:
                token = secrets.token_hex(8)
                with self._lock:
                    self._sessions.add(token)
                return [token]
        raise AuthFailed("invalid account or secret")

    def details(self, tokens, package_name, version_code):
        self._log("details", package_name)
        self._check(tokens)
        found = self._apps.get((package_name, int(version_code)))
        if found is None:
            raise AppNotFound(f"{package_name} version {version_code} is not in the store")
        return found[0]

    def purchase(self, tokens, package_name, version_code):
        self._log("purchase", package_name)
        self._check(tokens)
        found = self._apps.get((package_name, int(version_code)))
        if found is None or not found[0].is_free or found[1].get("fail") == "purchase":
            raise PurchaseFailed(f"no download token for {package_name}")
        token = secrets.token_hex(8)
        with self._lock:
            self._download_tokens[token] = (package_name, int(version_code))
        return token

    def delivery(self, tokens, package_name, version_code, download_token):
        self._log("delivery", package_name)
        self._check(tokens)
        with self._lock:
            granted = self._download_tokens.get(download_token)
        listing, entry = self._apps.get((package_name, int(version_code)), (None, {}))
        if granted != (package_name, int(version_code)) or entry.get("fail") == "delivery":
            raise DeliveryFailed(f"download token rejected for {package_name}")
        files = [{"name": "app", "locator": f"blobs/{package_name}-{version_code}.zip"}]
        files += [{"name": name, "locator": f"blobs/{name}"} for name in entry.get("expansions", [])]
        return {"files": files}

    def download(self, tokens, locator):
        self._log("download", locator)
        self._check(tokens)
        path = os.path.normpath(os.path.join(self.root, locator))
        if not path.startswith(os.path.join(self.root, "blobs") + os.sep):
            raise DownloadFailed(f"locator outside store: {locator}")
        try:
            with open(path, "rb") as fh:
                return fh.read()
        except OSError as exc:
            raise DownloadFailed(f"cannot read {locator}: {exc.strerror}") from None

    def phases(self):
        return [phase for phase, _ in self.call_log]


def authenticate(backend, credentials):
    try:
        tokens = tuple(backend.auth(credentials.account, credentials.secret))
    except StoreError:
        raise
    except OSError as exc:
        raise TransportError(str(exc)) from exc
    if not tokens:
        raise AuthFailed("store returned no tokens")
    return StoreSession(credentials, tokens)


def _strip_expansions(archive):
    """Drop ``.obb`` members from a zip archive; return (bytes, names dropped)."""
    try:
        src = zipfile.ZipFile(io.BytesIO(archive))
    except zipfile.BadZipFile:
        return archive, []
    dropped = [i.filename for i in src.infolist() if i.filename.lower().endswith(EXPANSION_SUFFIX)]
    if not dropped:
        return archive, []
    out = io.BytesIO()
    with zipfile.ZipFile(out, "w", zipfile.ZIP_DEFLATED) as dst:
        for info in src.infolist():
            if info.filename not in dropped:
                dst.writestr(info, src.read(info))
    return out.getvalue(), dropped


def fetch_app(backend, session, package_name, version_code, *, status=None, retries=0):
    """Run phases 2 to 6 for an authenticated session.

    ``status`` is called with each phase name as it starts and with
    ``"Success"`` once the archive is assembled. Transport errors are
    retried up to ``retries`` times per call; phase failures never are.
    """
    if not session.authenticated:
        raise NotAuthenticated("fetch_app needs an authenticated session")
    tokens = session.tokens
    emit = status or (lambda _msg: None)

    def call(fn, *args):
        for attempt in range(retries + 1):
            try:
                return fn(*args)
            except TransportError:
                if attempt == retries:
                    raise
                log.info("transport error in %s, retrying (%d/%d)", fn.__name__, attempt + 1, retries)

    emit("details")
    listing = call(backend.details, tokens, package_name, version_code)

    emit("free_check")
    if not listing.is_free:
        price = f" (price {listing.price})" if listing.price else ""
        raise NotFree(f"{package_name} is not free{price}; not available for analysis")

    emit("purchase")
    download_token = call(backend.purchase, tokens, package_name, version_code)
    if not download_token:
        raise PurchaseFailed(f"no download token for {package_name}")

    emit("delivery")
    delivery = call(backend.delivery, tokens, package_name, version_code, download_token)
    files = delivery.get("files") if isinstance(delivery, dict) else None
    if not files:
        raise DeliveryFailed(f"no download locator for {package_name}")

    emit("download")
    skipped = set()
    archive = None
    for entry in files:
        name = entry.get("name", "")
        if name.lower().endswith(EXPANSION_SUFFIX):
            skipped.add(name)
            continue
        if archive is not None:
            raise DownloadFailed(f"more than one application payload offered for {package_name}")
        archive = call(backend.download, tokens, entry["locator"])
    if not archive:
        raise DownloadFailed(f"empty application payload for {package_name}")
    archive, dropped = _strip_expansions(archive)
    skipped.update(dropped)

    emit(SUCCESS)
    return AcquisitionOutcome(package_name, int(version_code), archive, len(skipped))


def acquire(backend, credentials, package_name, version_code, **kwargs):
    """Authenticate and fetch in one call."""
    session = authenticate(backend, credentials)
    return fetch_app(backend, session, package_name, version_code, **kwargs)


def unpack_archive(archive, dest):
    """Extract a bundle zip into ``dest``, refusing paths that escape it."""
    dest = os.path.abspath(dest)
    with zipfile.ZipFile(io.BytesIO(archive)) as zf:
        for info in zf.infolist():
            target = os.path.abspath(os.path.join(dest, info.filename))
            if target != dest and not target.startswith(dest + os.sep):
                raise DownloadFailed(f"archive member escapes bundle: {info.filename}")
        zf.extractall(dest)
    return dest


def zip_bundle(bundle_root):
    """Zip a bundle directory deterministically (sorted names, fixed timestamps)."""
    out = io.BytesIO()
    with zipfile.ZipFile(out, "w", zipfile.ZIP_DEFLATED) as zf:
        entries = []
        for dirpath, _dirs, files in os.walk(bundle_root):
            for name in files:
                full = os.path.join(dirpath, name)
                entries.append((os.path.relpath(full, bundle_root).replace(os.sep, "/"), full))
        for rel, full in sorted(entries):
            info = zipfile.ZipInfo(rel, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            with open(full, "rb") as fh:
                zf.writestr(info, fh.read())
    return out.getvalue()


def build_fixture_store(root, apps, accounts=(("tester@example.com", "s3cret"),)):
    """Create a fixture store directory.

    ``apps`` is a list of dicts with ``package_name``, ``version_code``,
    ``bundle`` (directory to zip, optional for unavailable payloads),
    ``offer`` and optionally ``expansions`` (names of .obb files).
    """
    os.makedirs(os.path.join(root, "blobs"), exist_ok=True)
    catalog = {"accounts": [{"account": a, "secret": s} for a, s in accounts], "apps": []}
    for app in apps:
        entry = {k: v for k, v in app.items() if k != "bundle"}
        entry.setdefault("offer", "free")
        entry.setdefault("metadata", {"description": f"fixture listing for {app['package_name']}"})
        catalog["apps"].append(entry)
        if app.get("bundle"):
            blob = os.path.join(root, "blobs", f"{app['package_name']}-{app['version_code']}.zip")
            with open(blob, "wb") as fh:
                fh.write(zip_bundle(app["bundle"]))
        for name in app.get("expansions", ()):
            with open(os.path.join(root, "blobs", name), "wb") as fh:
                fh.write(b"OBB\0" + name.encode())
    with open(os.path.join(root, "catalog.json"), "w", encoding="utf-8") as fh:
        json.dump(catalog, fh, indent=2, sort_keys=True)
    return root


# -- loopback HTTP protocol ------------------------------------------------

_ERROR_TYPES = {cls.code: cls for cls in (AppNotFound, AuthFailed, DeliveryFailed, DownloadFailed,
                                          NotAuthenticated, NotFree, PurchaseFailed)}


class HttpStore(StoreBackend):
    """Client for the loopback store protocol.

    Endpoints: ``POST /auth``, ``GET /details``, ``POST /purchase``,
    ``GET /delivery``, ``GET /blob``. Bodies are JSON except ``/blob``,
    which returns raw bytes. Tokens travel as ``Authorization: Bearer``.
    """

    def __init__(self, base_url, timeout=10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _request(self, method, path, tokens=None, params=None, body=None, raw=False):
        url = self.base_url + path
        if params:
            url += "?" + urllib.parse.urlencode(params)
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(url, data=data, method=method)
        if data is not None:
            req.add_header("Content-Type", "application/json")
        if tokens:
            req.add_header("Authorization", "Bearer " + tokens[0])
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            try:
                err = json.loads(exc.read() or b"{}").get("error", {})
            except ValueError:
                err = {}
            cls = _ERROR_TYPES.get(err.get("code"), StoreError)
            raise cls(err.get("message", f"store returned HTTP {exc.code}")) from None
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"store unreachable at {self.base_url}: {exc}") from None
        return payload if raw else json.loads(payload)

    def auth(self, account, secret):
        return self._request("POST", "/auth", body={"account": account, "secret": secret})["tokens"]

    def details(self, tokens, package_name, version_code):
        data = self._request("GET", "/details", tokens, {"doc": package_name, "vc": version_code})
        return _listing_from_json(data)

    def purchase(self, tokens, package_name, version_code):
        data = self._request("POST", "/purchase", tokens, body={"doc": package_name, "vc": version_code})
        return data.get("download_token")

    def delivery(self, tokens, package_name, version_code, download_token):
        return self._request("GET", "/delivery", tokens,
                             {"doc": package_name, "vc": version_code, "dtok": download_token})

    def download(self, tokens, locator):
        return self._request("GET", "/blob", tokens, {"locator": locator}, raw=True)


class _StoreHandler(BaseHTTPRequestHandler):
    backend = None

    def log_message(self, fmt, *args):
        log.debug("store: " + fmt, *args)

    def _send(self, status, payload, content_type="application/json"):
        body = payload if isinstance(payload, bytes) else json.dumps(payload, sort_keys=True).encode()
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _tokens(self):
        auth = self.headers.get("Authorization", "")
        return [auth[7:]] if auth.startswith("Bearer ") else []

    def _body(self):
        length = int(self.headers.get("Content-Length") or 0)
        return json.loads(self.rfile.read(length) or b"{}")

    def _dispatch(self, method):
        url = urllib.parse.urlparse(self.path)
        q = {k: v[0] for k, v in urllib.parse.parse_qs(url.query).items()}
        b = self.backend
        try:
            if method == "POST" and url.path == "/auth":
                body = self._body()
                return self._send(200, {"tokens": list(b.auth(body.get("account"), body.get("secret")))})
            if method == "GET" and url.path == "/details":
                listing = b.details(self._tokens(), q.get("doc"), int(q.get("vc", -1)))
                return self._send(200, {"package_name": listing.package_name,
                                        "version_code": listing.version_code,
                                        "offer": {"type": listing.offer, "price": listing.price},
                                        "metadata": listing.metadata})
            if method == "POST" and url.path == "/purchase":
                body = self._body()
                return self._send(200, {"download_token": b.purchase(self._tokens(), body.get("doc"),
                                                                     int(body.get("vc", -1)))})
            if method == "GET" and url.path == "/delivery":
                return self._send(200, b.delivery(self._tokens(), q.get("doc"), int(q.get("vc", -1)),
                                                  q.get("dtok")))
            if method == "GET" and url.path == "/blob":
                return self._send(200, b.download(self._tokens(), q.get("locator", "")),
                                  "application/octet-stream")
        except StoreError as exc:
            status = {"app_not_found": 404, "auth_failed": 401, "not_authenticated": 401}.get(exc.code, 409)
            return self._send(status, {"error": {"code": exc.code, "message": str(exc)}})
        except (ValueError, TypeError) as exc:
            return self._send(400, {"error": {"code": "bad_request", "message": str(exc)}})
        self._send(404, {"error": {"code": "no_such_endpoint", "message": url.path}})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def make_store_server(backend, host="127.0.0.1", port=0):
    """HTTP server exposing ``backend`` over the loopback protocol.

    Call ``serve_forever()`` (typically in a thread) and ``shutdown()``.
    """
    handler = type("StoreHandler", (_StoreHandler,), {"backend": backend})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def open_store(spec):
    """Backend from a path (fixture store) or an ``http(s)://`` URL."""
    spec = os.fspath(spec)
    if spec.startswith(("http://", "https://")):
        return HttpStore(spec)
    return FixtureStore(spec)
