"""Prints one PASS/FAIL line per acceptance criterion after the run."""

CRITERIA = {
    "test_c01": "1  gradient correctness (analytic vs central differences)",
    "test_c02": "2  per-timestep score decomposition identity",
    "test_c03": "3  Chinatown NV-GRU32 best-of-3-seeds test accuracy >= 94%",
    "test_c04": "4  Wine and UMD NV-GRU32 test accuracy >= 95%",
    "test_c05": "5  head ordering: per-timestep readout >= last-state readout",
    "test_c06": "6  zeroing top-5 positive timesteps drops accuracy >= 20 pts",
    "test_c07": "7  zeroing negative timesteps never costs the class > 2 pts",
    "test_c08": "8  initialization properties (orthogonal/identity/determinism)",
    "test_c09": "9  bidirectional reversal duality is exact",
    "test_c10": "10 checkpoint round-trip predictions are bit-exact",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            key = name.split("[")[0][:8]
            if key in CRITERIA:
                prior = outcomes.get(key)
                outcomes[key] = "FAIL" if (status != "passed" or prior == "FAIL") else "PASS"
    if not outcomes:
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for key in sorted(CRITERIA):
        if key in outcomes:
            tw.write_line(f"{outcomes[key]}  criterion {CRITERIA[key]}")
