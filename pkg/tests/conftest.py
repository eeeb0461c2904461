import pytest
import tempfile
from pathlib import Path

from libs.logic import Universe, Var
from libs.merge import MergeConfig
from tests.test_utils import problem_text


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def ab_universe():
    """Universe over a and b."""
    return Universe((Var("a"), Var("b")))


@pytest.fixture
def write_problem(temp_dir):
    """Write a problem file and return its path."""
    def _write(*bases, name="problem.kb", **sections):
        path = temp_dir / name
        path.write_text(problem_text(*bases, **sections), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def contradiction_file(write_problem):
    """Two bases that contradict each other on a."""
    return write_problem("a", "!a")


@pytest.fixture
def failure_file(write_problem):
    """Both bases deny something while the upper bound asserts x1."""
    return write_problem("!x1", "!x2", upper="x1")


@pytest.fixture
def equal_config():
    """Renaming-only configuration where every correction is equally likely."""
    return MergeConfig(ranking="equal", candidate_kinds=frozenset({"renaming"}))
