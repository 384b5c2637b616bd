import pytest

from tbtrg import corpus
from tbtrg.engines.sequential import build_sequential
from tbtrg.parser import parse_net_text


@pytest.fixture(scope="session")
def models():
    return {name: corpus.load(name) for name in corpus.CORPUS}


@pytest.fixture(scope="session")
def seq_builds(models):
    return {name: build_sequential(net, s) for name, (net, s) in models.items()}


@pytest.fixture
def one_step():
    return parse_net_text(
        "places: p, q\ntransition t: p -> q; min: tok(p,1)+1; max: tok(p,1)+2\nmarking: p = {A}\n", "one.tbn"
    )


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, ok, detail)``."""

    def record(number: int, ok: bool, detail: str) -> str:
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        _CRITERIA[number] = line
        print(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
