import pytest

_RESULTS: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    cid, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _RESULTS[cid] = ("PASS" if rep.passed else "FAIL", text)


def _key(cid: str):
    num = "".join(ch for ch in cid if ch.isdigit())
    return int(num), cid


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_RESULTS, key=_key):
        status, text = _RESULTS[cid]
        tr.write_line(f"{status}  {cid:<4} {text}")
    n_pass = sum(s == "PASS" for s, _ in _RESULTS.values())
    tr.write_line(f"{n_pass}/{len(_RESULTS)} criteria pass")
