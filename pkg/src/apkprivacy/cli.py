"""Command-line interface.

Exit codes: 0 ok, 2 usage, 3 invalid bundle, 4 invalid dataset,
5 analysis failure, 6 store or service refused the request (4xx),
7 service error (5xx), 8 store or service unreachable, 1 server start failure.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
import urllib.error
import urllib.request

from . import appstore
from .dataset import load_dataset, load_vocabulary, seed_dataset_path, validate_dataset, VOCABULARY_FILE
from .errors import (
    AnalysisFailure,
    BundleError,
    DatasetError,
    DecompilerFailed,
    DecompilerMissing,
    PrivacyAnalysisError,
    StoreError,
    TransportError,
)
from .pipeline import DEFAULT_DECOMPILER, analyze_bundle, decompile_apk, serialize_report
from .scanner import open_bundle

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUNDLE = 3
EXIT_DATASET = 4
EXIT_ANALYSIS = 5
EXIT_REFUSED = 6
EXIT_SERVICE = 7
EXIT_UNREACHABLE = 8
EXIT_SERVE = 1

log = logging.getLogger("apkprivacy")


def _fail(code, kind, exc, **extra):
    payload = {"error": {"code": kind, "message": str(exc), **extra}}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _dataset_dir(args):
    return args.dataset or os.environ.get("PQS_DATASET_DIR") or seed_dataset_path()


def _write(data):
    sys.stdout.buffer.write(data)
    sys.stdout.flush()


def cmd_analyze(args):
    try:
        dataset = load_dataset(_dataset_dir(args))
    except DatasetError as exc:
        return _fail(EXIT_DATASET, "dataset_invalid", exc)

    with tempfile.TemporaryDirectory(prefix="apkprivacy-") as tmp:
        try:
            if os.path.isfile(args.path):
                bundle = decompile_apk(args.path, tmp, args.decompiler.split(),
                                       package_name=args.package, version_code=args.version_code)
            else:
                bundle = open_bundle(args.path, args.package, args.version_code)
        except (BundleError, FileNotFoundError) as exc:
            return _fail(EXIT_BUNDLE, "bundle_invalid", exc)
        except (DecompilerMissing, DecompilerFailed) as exc:
            return _fail(EXIT_ANALYSIS, "decompiler", exc, stage="decompile")

        try:
            report = analyze_bundle(bundle, dataset, workers=args.workers, require_sources=args.strict)
        except AnalysisFailure as exc:
            return _fail(EXIT_ANALYSIS, "analysis_failure", exc, stage=exc.stage)
    _write(serialize_report(report, args.format))
    return EXIT_OK


def cmd_dataset_validate(args):
    path = args.dataset_dir or _dataset_dir(args)
    try:
        dataset = load_dataset(path, validate=False)
    except DatasetError as exc:
        return _fail(EXIT_DATASET, type(exc).__name__, exc)
    vocab_path = os.path.join(path, VOCABULARY_FILE)
    vocabulary = load_vocabulary(vocab_path) if os.path.isfile(vocab_path) else None
    report = validate_dataset(dataset, vocabulary)
    summary = {
        "dataset": os.path.abspath(path),
        "methods": len(dataset.methods),
        "permissions": len(dataset.permissions),
        "method_weight_total": dataset.method_weight_total,
        "permission_weight_total": dataset.permission_weight_total,
        "fingerprint": dataset.fingerprint,
        "errors": report.errors,
        "warnings": report.warnings,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_DATASET


def _store_spec(args):
    spec = args.store or os.environ.get("PQS_STORE")
    if not spec:
        raise SystemExit(_fail(EXIT_USAGE, "usage", "no store configured (--store or PQS_STORE)"))
    return spec


def cmd_fetch(args):
    try:
        credentials = appstore.credentials_from_env(config_path=args.store_config)
        backend = appstore.open_store(_store_spec(args))
        outcome = appstore.acquire(backend, credentials, args.packagename, args.packageversion,
                                   status=lambda msg: print(msg, file=sys.stderr))
    except TransportError as exc:
        return _fail(EXIT_UNREACHABLE, exc.code, exc, phase=exc.phase)
    except StoreError as exc:
        return _fail(EXIT_REFUSED, exc.code, exc, phase=exc.phase)
    if args.unpack:
        appstore.unpack_archive(outcome.bundle_archive, args.unpack)
    out = args.output or f"{args.packagename}-{args.packageversion}.zip"
    with open(out, "wb") as fh:
        fh.write(outcome.bundle_archive)
    print(json.dumps({"archive": out, "bytes": len(outcome.bundle_archive),
                      "skipped_expansions": outcome.skipped_expansions}, sort_keys=True))
    return EXIT_OK


def cmd_serve(args):
    from .server import AnalysisService, serve

    try:
        dataset = load_dataset(_dataset_dir(args))
    except DatasetError as exc:
        return _fail(EXIT_DATASET, "dataset_invalid", exc)
    try:
        credentials = appstore.credentials_from_env(config_path=args.store_config)
        backend = appstore.open_store(_store_spec(args))
    except StoreError as exc:
        return _fail(EXIT_USAGE, exc.code, exc)
    data_dir = args.data_dir or os.environ.get("PQS_DATA_DIR") or "pqs-data"
    try:
        service = AnalysisService(dataset, backend, data_dir, credentials, workers=args.workers)
    except PrivacyAnalysisError as exc:
        return _fail(EXIT_SERVE, "storage_unavailable", exc)

    def ready(server):
        host, port = server.server_address[:2]
        print(f"listening on http://{host}:{port}", file=sys.stderr, flush=True)

    try:
        return serve(service, args.host, args.port, ready=ready)
    except OSError as exc:
        service.close()
        return _fail(EXIT_SERVE, "bind_failed", f"cannot listen on {args.host}:{args.port}: {exc.strerror}")


def cmd_request(args):
    body = json.dumps({"packagename": args.packagename, "packageversion": args.packageversion}).encode()
    req = urllib.request.Request(args.server.rstrip("/") + "/analyze", data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=args.timeout) as resp:
            _write(resp.read())
            return EXIT_OK
    except urllib.error.HTTPError as exc:
        sys.stdout.buffer.write(exc.read())
        sys.stdout.flush()
        return EXIT_REFUSED if 400 <= exc.code < 500 else EXIT_SERVICE
    except (urllib.error.URLError, OSError) as exc:
        return _fail(EXIT_UNREACHABLE, "service_unreachable", getattr(exc, "reason", exc))


def build_parser():
    parser = argparse.ArgumentParser(prog="apkprivacy",
                                     description="Privacy scoring for decompiled Android apps.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def dataset_flag(p):
        p.add_argument("--dataset", "--dataset-dir", dest="dataset",
                       help="dataset directory (default: $PQS_DATASET_DIR or the bundled seed)")

    p = sub.add_parser("analyze", help="score a decompiled bundle directory or an APK")
    p.add_argument("path", help="bundle directory (resources/ + sources/) or .apk file")
    dataset_flag(p)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--package", help="override the manifest package name")
    p.add_argument("--version-code", type=int, help="override the manifest version code")
    p.add_argument("--workers", type=int, default=None, help="parallel file scanners")
    p.add_argument("--strict", action="store_true", help="fail when the source tree is empty")
    p.add_argument("--decompiler", default=" ".join(DEFAULT_DECOMPILER),
                   help="argv template for APK input; {apk} and {out} are substituted")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dataset", help="dataset tools")
    dsub = p.add_subparsers(dest="dataset_command", required=True)
    v = dsub.add_parser("validate", help="check dataset invariants")
    v.add_argument("dataset_dir", nargs="?")
    dataset_flag(v)
    v.set_defaults(func=cmd_dataset_validate)

    p = sub.add_parser("serve", help="run the caching analysis service")
    dataset_flag(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--store", help="fixture store directory or loopback store URL ($PQS_STORE)")
    p.add_argument("--store-config", help="JSON file with store account/secret")
    p.add_argument("--data-dir", help="cache directory ($PQS_DATA_DIR)")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("request", help="ask a running service for a report")
    p.add_argument("packagename")
    p.add_argument("packageversion", type=int)
    p.add_argument("--server", default="http://127.0.0.1:8080")
    p.add_argument("--timeout", type=float, default=300.0)
    p.set_defaults(func=cmd_request)

    p = sub.add_parser("fetch", help="acquire an app from a store without analyzing it")
    p.add_argument("packagename")
    p.add_argument("packageversion", type=int)
    p.add_argument("--store", help="fixture store directory or loopback store URL ($PQS_STORE)")
    p.add_argument("--store-config", help="JSON file with store account/secret")
    p.add_argument("-o", "--output", help="archive path (default <package>-<version>.zip)")
    p.add_argument("--unpack", help="also extract the bundle into this directory")
    p.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
