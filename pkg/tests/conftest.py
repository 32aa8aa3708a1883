from __future__ import annotations

import pytest

from util import fixture_run_and_triage


@pytest.fixture
def fixture_run():
    run, _, _ = fixture_run_and_triage()
    return run


@pytest.fixture
def fixture_triage():
    _, triage, _ = fixture_run_and_triage()
    return triage


@pytest.fixture
def fixture_findings():
    _, _, by_name = fixture_run_and_triage()
    return by_name
