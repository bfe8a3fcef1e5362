"""Repo-level test wiring: acceptance summary plus optional adapter suite.

Tests marked @pytest.mark.acceptance(n, "title") are the numbered
top-level gate; the summary prints one PASS/FAIL line per criterion
after the run so the gate is auditable at a glance. The hooks live here,
above both test trees, so criteria from either package land in one table.
"""

# the scoring package must stay testable on its own: skip collecting the
# adapter suite when the adapters distribution is not installed
collect_ignore_glob = []
try:
    import camscore_adapters  # noqa: F401
except ImportError:
    collect_ignore_glob.append("adapters/*")

_ACCEPTANCE: dict[str, tuple[int, str]] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(n, title): numbered top-level acceptance criterion",
    )


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            n = int(mark.args[0])
            title = str(mark.args[1]) if len(mark.args) > 1 else item.name
            _ACCEPTANCE[item.nodeid] = (n, title)


def pytest_runtest_logreport(report):
    if report.nodeid not in _ACCEPTANCE:
        return
    if report.when == "call":
        _OUTCOMES[report.nodeid] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        # setup error or skip counts against the criterion
        _OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid, (n, title) in sorted(_ACCEPTANCE.items(), key=lambda kv: kv[1][0]):
        outcome = _OUTCOMES.get(nodeid, "not run")
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {word}  {title}")
