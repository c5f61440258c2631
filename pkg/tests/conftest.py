import pytest

from abtubes.config import default_config


@pytest.fixture
def single_cfg():
    return default_config("single_particle")


@pytest.fixture
def small_pair_cfg():
    """Two-particle config on a 128x128 grid; wider induced packet to stay resolved."""
    return default_config("two_particle").with_updates(
        grid={"n_points": 128},
        packets={"induced_width_fraction": 0.25},
        fringes={"tilt": 2.0},
    )


def pytest_terminal_summary(terminalreporter, config):
    import sys

    acc = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    if acc is None or not any(acc.OUTCOMES.values()):
        return
    terminalreporter.section("acceptance criteria")
    for number, title in acc.CRITERIA.items():
        checks = acc.OUTCOMES[number]
        if not checks:
            status, detail = "NOT RUN", ""
        else:
            failed = [c for c in checks if not c[1]]
            status = "FAIL" if failed else "PASS"
            detail = "; ".join(f"{n}: {d}" for n, _, d in failed) or f"{len(checks)} checks"
        terminalreporter.write_line(f"criterion {number}: {status} - {title} ({detail})")
