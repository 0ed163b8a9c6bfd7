import pytest


@pytest.fixture
def report(capsys):
    """Print a line to the real terminal even under capture."""
    def _report(line):
        with capsys.disabled():
            print(line)
    return _report
