import pytest

from selfsim import builtin
from selfsim.config import BUILTINS, config_from_dict
from selfsim.substitution import spectral_data


def fibonacci_config():
    """a -> ab, b -> a with self-similar (irrational) lengths."""
    return config_from_dict({
        "name": "fib", "dimension": 1, "expansion": None,
        "prototiles": [{"id": 1, "extent": [1], "label": "a"}, {"id": 2, "extent": [1], "label": "b"}],
        "rules": [{"parent": 1, "children": [{"type": 1}, {"type": 2}]},
                  {"parent": 2, "children": [{"type": 1}]}],
    })


@pytest.fixture(scope="session")
def subs():
    return {name: builtin(name) for name in BUILTINS}


@pytest.fixture(scope="session")
def spectra(subs):
    return {name: spectral_data(s) for name, s in subs.items()}


@pytest.fixture(scope="session")
def fib():
    return fibonacci_config().to_substitution()


@pytest.fixture(params=BUILTINS)
def name(request):
    return request.param


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
