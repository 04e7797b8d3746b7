import re
from collections import defaultdict

import pytest

from jcosc import DeviceParams

# ---------------------------------------------------------------------------
# acceptance-criteria summary: tests named test_criterion_NN* register one
# status line each; a compact table is printed after the run so the overall
# verdict per criterion is visible without scrolling the -v listing.

_CRIT_PAT = re.compile(r"test_criterion_(\d{2})")
_acceptance = defaultdict(list)


@pytest.fixture
def crit(record_property):
    """Attach a human-readable detail string to an acceptance test."""

    def _note(detail: str) -> None:
        record_property("detail", detail)

    return _note


def pytest_runtest_logreport(report):
    m = _CRIT_PAT.search(report.nodeid)
    if not m:
        return
    if report.when == "setup" and not report.passed:
        status = "SKIP" if report.skipped else "ERROR"
        _acceptance[int(m.group(1))].append(
            (report.nodeid.rsplit("::", 1)[-1], status, "", report.duration))
        return
    if report.when != "call":
        return
    if hasattr(report, "wasxfail"):
        status = "XFAIL" if report.skipped else "XPASS"
    elif report.passed:
        status = "PASS"
    elif report.failed:
        status = "FAIL"
    else:
        status = "SKIP"
    detail = dict(report.user_properties).get("detail", "")
    _acceptance[int(m.group(1))].append(
        (report.nodeid.rsplit("::", 1)[-1], status, detail, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for num in sorted(_acceptance):
        parts = _acceptance[num]
        statuses = {s for _, s, _, _ in parts}
        if statuses & {"FAIL", "XPASS", "ERROR"}:
            overall = "FAIL"
        elif statuses == {"SKIP"}:
            overall = "SKIP"
        elif "XFAIL" in statuses:
            overall = "PASS (literal sub-check xfails as documented)"
        else:
            overall = "PASS"
        tw.write_line(f"CRITERION {num:2d}: {overall}")
        for name, status, detail, dur in parts:
            line = f"    {status:<5} {name} [{dur:.1f}s]"
            if detail:
                line += f" — {detail}"
            tw.write_line(line)


@pytest.fixture
def base_device() -> DeviceParams:
    # Workhorse parameter set used throughout: strong-dispersive bad-cavity
    # regime, qubit 1 GHz below the cavity, drive at the bare cavity frequency.
    return DeviceParams(
        cavity_freq=9.07,
        qubit_freq=8.07,
        coupling=0.2,
        cavity_decay=0.001,
        drive_amp=0.0,
        drive_freq=9.07,
    )


@pytest.fixture
def mirror_device(base_device) -> DeviceParams:
    # Same magnitudes with the qubit 1 GHz *above* the cavity (delta > 0).
    return base_device.replace(qubit_freq=10.07)
