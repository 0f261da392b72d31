import math
from collections import OrderedDict

import numpy as np
import pytest

from ris_energy.channel import ChannelScenario
from ris_energy.energy import TransmissionPlan
from ris_energy.units import db_to_linear

SIGMA2_DB = -123.9
B = 100e6

# criterion id -> list of (check, passed, detail), filled by test_acceptance.py
ACCEPTANCE: "OrderedDict[int, list]" = OrderedDict()


def default_scenario(rho_db=-110.0, M=1024) -> ChannelScenario:
    return ChannelScenario.from_db(rho_db, -60.0, -80.0, M, SIGMA2_DB, B)


def default_plan(L=200, K=2, gamma_p_db=20.0, p_circuit=0.01) -> TransmissionPlan:
    return TransmissionPlan(L=L, gamma_d=db_to_linear(20.0), gamma_p=db_to_linear(gamma_p_db), p_circuit=p_circuit, K=K)


def fig3_scenario(rho_db=-95.0) -> ChannelScenario:
    return ChannelScenario.from_db(rho_db, -80.0, -60.0, 1024, SIGMA2_DB, B)


def fig3_data_power() -> float:
    """P_data giving a transmit SNR P_data / sigma^2 of 104 dB."""
    return db_to_linear(SIGMA2_DB) * db_to_linear(104.0)


def random_scenario(rng: np.random.Generator, M=None) -> ChannelScenario:
    M = M or int(2 ** rng.integers(0, 11))
    return ChannelScenario.from_db(
        rng.uniform(-130, -80), rng.uniform(-70, -50), rng.uniform(-90, -70), M, SIGMA2_DB, B
    )


def random_plan(rng: np.random.Generator, K=math.inf, p_circuit=0.0) -> TransmissionPlan:
    return TransmissionPlan(
        L=float(10 ** rng.uniform(1, 5)),
        gamma_d=db_to_linear(rng.uniform(0, 30)),
        gamma_p=db_to_linear(rng.uniform(10, 30)),
        p_circuit=p_circuit,
        K=K,
    )


@pytest.fixture
def scenario():
    return default_scenario()


@pytest.fixture
def record():
    """record(criterion, check, passed, detail) for the acceptance summary."""

    def _record(criterion: int, check: str, passed: bool, detail: str = ""):
        ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
        print(f"criterion {criterion} [{check}]: {'PASS' if passed else 'FAIL'} {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[criterion]
        ok = all(p for _, p, _ in checks)
        parts = "; ".join(f"{name} {'ok' if p else 'FAILED'}{': ' + d if d else ''}" for name, p, d in checks)
        tr.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  ({parts})")
