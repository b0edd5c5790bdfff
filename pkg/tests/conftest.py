from collections import defaultdict

import pytest

CRITERIA = {
    1: "basis fidelity (2M+N-1)/(M(N+1)), 2<=N<=5, 1<=M<=6, tol 1e-12",
    2: "A block spectrum and N*lambda_max, N<=4, M<=5, tol 1e-10",
    3: "isometry U^dag U = I incl. N' in {1,2,3}, tol 1e-12",
    4: "universality spread over 200 random inputs < 1e-10",
    5: "N'->M basis fidelity formula, tol 1e-12",
    6: "learning inequality, strict for N>=2, M>N'>=2",
    7: "fourth moments within 3 SE, A entries within 5 SE, 1e5 samples",
    8: "1e3 random machines per (N,M) never beat F_max + 1e-9",
    9: "fmax strictly decreasing in N up to 64, |fmax - 1/M| < 2/N",
    10: "transition elements vs tensor expansion, N,M<=3, tol 1e-12",
}

_outcomes: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[mark.args[0]].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k, title in CRITERIA.items():
        results = _outcomes.get(k)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"[{status:7}] {k:2}. {title} ({len(results or [])} cases)")
