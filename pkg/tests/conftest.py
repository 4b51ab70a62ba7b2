import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if rep.when == "call" and "criterion" in props:
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL", props.get("seconds")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict, secs in sorted(lines, key=lambda l: int(l[0].split()[0].split("-")[1])):
            extra = f" ({secs:.2f} s)" if secs is not None else ""
            terminalreporter.write_line(f"{verdict} {name}{extra}")
