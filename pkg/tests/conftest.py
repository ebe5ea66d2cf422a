ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


def record_criterion(number: int, status: str, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((f"criterion {number}", status, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(ACCEPTANCE_RESULTS):
        line = f"{name}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
