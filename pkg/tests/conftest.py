import pytest

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and (rep.when == "call" or rep.failed):
        if rep.when == "call" or item.name not in _ACCEPTANCE:
            _ACCEPTANCE[item.name] = (rep.passed, dict(item.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        ok, props = _ACCEPTANCE[name]
        crit = name.split("_")[1].lstrip("c").lstrip("0")
        label = " ".join(name.split("_")[2:])
        figures = " ".join(f"{k}={v}" for k, v in props.items())
        tr.write_line(f"{'PASS' if ok else 'FAIL'} C{crit} {label}: {figures}")
