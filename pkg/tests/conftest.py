import re

CRITERIA = {
    1: "free spectrum closed form",
    2: "van Hove reproduction",
    3: "cat fidelity without A^2 at zero bias",
    4: "product-state fidelity without A^2 at nonzero bias",
    5: "A^2 renormalization identity",
    6: "cat-likeness with A^2 at nonzero bias",
    7: "crossing vs avoided crossing",
    8: "norm-resolvent trend",
    9: "parameter formulas",
    10: "parity",
}
_outcomes: dict[int, list[str]] = {}
_pattern = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")


def pytest_runtest_logreport(report):
    m = _pattern.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(int(m.group(1)), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k, name in CRITERIA.items():
        got = _outcomes.get(k)
        if got is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(o == "passed" for o in got) else "FAIL"
        terminalreporter.write_line(f"criterion {k:2d} {status:7s} {name}")
