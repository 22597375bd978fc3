import numpy as np
import pytest

from reevrp.model import CostModel, FleetParams, Instance

USD = 10**8  # cost units per USD
TENTH = 100_000  # 0.1 USD/mile in micro-USD/mile


def two_customer(m_hybrid=1, m_conventional=1, capacity=2, ev_range=10_000, bev=False, q=(1, 1)):
    """Depot 10 miles from each customer, customers 5 miles apart, symmetric."""
    d = np.array(
        [
            [0, 1000, 1000, 0],
            [1000, 0, 500, 1000],
            [1000, 500, 0, 1000],
            [0, 1000, 1000, 0],
        ]
    )
    t = d * 36 // 10  # 10 mph
    fleet = FleetParams(m_hybrid, m_conventional, capacity, 10**6, ev_range)
    cost = CostModel(TENTH, 2 * TENTH, 4 * TENTH, bev_mode=bev)
    return Instance(2, np.array([0, *q, 0]), np.zeros(4, dtype=np.int64), d, t, fleet, cost)


@pytest.fixture
def tiny():
    return two_customer()


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
