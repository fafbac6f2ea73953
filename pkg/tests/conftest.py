import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sunar.testkit import build_fixture_suite


@pytest.fixture(scope="session")
def e2e_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("e2e-suite")
    return build_fixture_suite("e2e-2hop", out)


@pytest.fixture(scope="session")
def wqa_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("wqa-suite")
    return build_fixture_suite("wqa-exemplars", out)


@pytest.fixture(scope="session")
def table7_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("table7-suite")
    return build_fixture_suite("qualitative-table7", out)


@pytest.fixture(scope="session")
def asu_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("asu-suite")
    return build_fixture_suite("asu-distractor", out)
