import numpy as np
import pytest

from grpsubset.design import GroupedProblem


def random_problem(seed, n=40, n_groups=6, size=3, task="square", rho=0.0, signal=2):
    """Disjoint equal-size groups, the first ``signal`` of them active."""
    rng = np.random.default_rng(seed)
    p = n_groups * size
    Z = rng.standard_normal((n, p))
    if rho:
        Z = np.sqrt(1 - rho) * Z + np.sqrt(rho) * rng.standard_normal((n, 1))
    beta = np.zeros(p)
    beta[: signal * size] = rng.uniform(0.5, 1.5, signal * size) * rng.choice([-1, 1], signal * size)
    eta = Z @ beta
    if task == "logistic":
        y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
    else:
        y = eta + 0.5 * rng.standard_normal(n)
    groups = [list(range(k * size, (k + 1) * size)) for k in range(n_groups)]
    return GroupedProblem(Z, y, groups, task)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = pytest.StashKey[dict]()


class Verdict:
    """Records one acceptance criterion's outcome for the summary."""

    def __init__(self, store: dict, number: int, title: str):
        self.store, self.number, self.title = store, number, title

    def check(self, ok: bool, detail: str) -> None:
        self.store[self.number] = (self.title, bool(ok), detail)
        assert ok, f"criterion {self.number} ({self.title}): {detail}"


@pytest.fixture
def verdict(request):
    store = request.config.stash.setdefault(_VERDICTS, {})
    number, title = request.node.get_closest_marker("criterion").args
    v = Verdict(store, number, title)
    yield v
    store.setdefault(number, (title, False, "errored before a verdict"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_VERDICTS, {})
    if not store:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(store):
        title, ok, detail = store[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}: {detail}")
