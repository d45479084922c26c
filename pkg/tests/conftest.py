import os

import pytest

from apkprivacy import load_seed_dataset

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(ROOT, "fixtures")
GOLDEN = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if call.when != "call" and not (call.when == "setup" and call.excinfo is not None):
        return
    number, title = marker.args
    passed = call.excinfo is None
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def seed():
    return load_seed_dataset()


@pytest.fixture
def fixture_path():
    return lambda name: os.path.join(FIXTURES, name)


STORE_ACCOUNT = ("tester@example.com", "s3cret")


def make_store(root):
    """Fixture store: sample (free), dangerous (free, two .obb), a paid app."""
    from apkprivacy.appstore import build_fixture_store

    return build_fixture_store(str(root), [
        {"package_name": "com.example.sample", "version_code": 7,
         "bundle": os.path.join(FIXTURES, "sample_app")},
        {"package_name": "com.example.dangerous", "version_code": 1,
         "bundle": os.path.join(FIXTURES, "dangerous"),
         "expansions": ["main.1.com.example.dangerous.obb", "patch.1.com.example.dangerous.obb"]},
        {"package_name": "com.example.paid", "version_code": 3, "offer": "paid", "price": "1.99",
         "bundle": os.path.join(FIXTURES, "empty")},
        {"package_name": "com.example.broken", "version_code": 2, "fail": "delivery",
         "bundle": os.path.join(FIXTURES, "empty")},
    ], accounts=[STORE_ACCOUNT])


@pytest.fixture
def store_dir(tmp_path):
    return make_store(tmp_path / "store")


@pytest.fixture
def credentials():
    from apkprivacy.appstore import Credentials

    return Credentials(*STORE_ACCOUNT)
