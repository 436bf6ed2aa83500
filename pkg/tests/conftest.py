import os

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SGCOMBI_LONG"):
        return
    skip = pytest.mark.skip(reason="set SGCOMBI_LONG=1 to run")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.split("-")[0].rstrip("abc")), k)):
        terminalreporter.write_line(RESULTS[key])
