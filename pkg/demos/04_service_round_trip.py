# coding: utf-8

# # The caching service against a local fixture store
#
# A fixture store is a directory with a catalog and zipped bundles. The
# service acquires an app from it on the first request, stores the report
# in SQLite, and answers later requests from the store.

import json
import os
import tempfile
import threading
import urllib.request

from apkprivacy import load_seed_dataset
from apkprivacy.appstore import Credentials, FixtureStore, build_fixture_store
from apkprivacy.server import AnalysisService, make_server

HERE = os.path.dirname(os.path.abspath(__file__))
work = tempfile.mkdtemp(prefix="svc-")
store_dir = build_fixture_store(os.path.join(work, "store"), [
    {"package_name": "com.example.sample", "version_code": 7,
     "bundle": os.path.join(HERE, "..", "fixtures", "sample_app")},
    {"package_name": "com.example.paid", "version_code": 1, "offer": "paid", "price": "2.49",
     "bundle": os.path.join(HERE, "..", "fixtures", "empty")},
], accounts=[("demo@example.com", "demo")])

service = AnalysisService(load_seed_dataset(), FixtureStore(store_dir), os.path.join(work, "data"),
                          Credentials("demo@example.com", "demo"))
server = make_server(service)
thread = threading.Thread(target=server.serve_forever)
thread.start()
url = "http://%s:%d/analyze" % server.server_address[:2]


def ask(name, version):
    body = json.dumps({"packagename": name, "packageversion": version}).encode()
    try:
        with urllib.request.urlopen(urllib.request.Request(url, data=body, method="POST")) as resp:
            return resp.status, resp.headers["X-Cache"], resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, None, exc.read()


# First request: acquire and analyze. Second: served from the cache, same bytes.

s1, c1, b1 = ask("com.example.sample", 7)
s2, c2, b2 = ask("com.example.sample", 7)
print(s1, c1, json.loads(b1)["breakdown"]["final_score"])
print(s2, c2, b1 == b2, "acquisitions:", service.acquisitions)


# Paid apps are refused before anything is bought.

print(ask("com.example.paid", 1))

server.shutdown()
server.server_close()
thread.join()
service.close()
