import pytest

from evortex import CartesianGrid, make_context

# Filled by tests/test_acceptance.py; printed once at the end of the session.
ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def ctx():
    """Paraxial Landau context: w_m = sqrt(2), |Omega| = 1, E_perp / E <= 0.01."""
    return make_context(2.0, 2000.0)


@pytest.fixture(scope="session")
def ctx_neg():
    return make_context(-2.0, 2000.0)


@pytest.fixture(scope="session")
def free_ctx():
    return make_context(0.0, 0.5)


@pytest.fixture(scope="session")
def landau_grid(ctx):
    return CartesianGrid(256, 256, 5 * ctx.w_m)


@pytest.fixture
def record():
    """record(num, title, ok, detail) stores one acceptance line."""
    def _record(num, title, ok, detail):
        ACCEPTANCE_RESULTS[num] = (title, bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        title, ok, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{num:2d}] {title}: {detail}")
