import pytest

# acceptance verdicts, printed together at the end of the session
_VERDICTS: dict[int, str] = {}
_EXPECTED: dict[int, str] = {}


def pytest_collection_finish(session):
    for item in session.items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _EXPECTED[mark.args[0]] = mark.args[1]


@pytest.fixture
def verdict(request):
    """Record a pass/fail line for the criterion of the calling test."""
    mark = request.node.get_closest_marker("criterion")
    num, title = mark.args

    def record(checks: dict[str, bool], detail: str = "") -> bool:
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}: {title}"
        if detail:
            line += f" [{detail}]"
        if failed:
            line += f" failed checks: {', '.join(failed)}"
        _VERDICTS[num] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _EXPECTED:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_EXPECTED):
        line = _VERDICTS.get(num, f"criterion {num:>2} FAIL: {_EXPECTED[num]} [no verdict reached]")
        terminalreporter.write_line(line)
