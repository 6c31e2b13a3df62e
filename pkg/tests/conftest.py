import pytest

from curiesnap.config import parse_config
from curiesnap.engine import simulate

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def baseline_cfg():
    return parse_config()


@pytest.fixture(scope="session")
def baseline_run(baseline_cfg):
    """Two thermal periods (400 s) of the default device at dt = 1e-4 s."""
    cfg = baseline_cfg
    return simulate(cfg.sim_config(), cfg.lumped_params(), cfg.geometry, cfg.magnet, cfg.material, cfg.profile())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
