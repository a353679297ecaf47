import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgerase.errors import InvalidRateError
from kgerase.reward import GAMMA, RewardParams, p_schedule, privacy_only_reward, reward

# closed forms evaluated with mpmath at 40 digits
HALF_E_MINUS_2 = 0.06766764161830634594699974748624220170382
E_MINUS_20 = 2.061153622438557827965940380155820976376e-09


def test_reward_examples():
    assert reward(1, 0, 20) == 1.0
    for r in (0.0, 0.3, 1.0):
        for p in (1, 20, 40):
            assert reward(0, r, p) == 0.0
    assert abs(reward(0.5, 0.1, 20) - HALF_E_MINUS_2) < 1e-12


def test_privacy_only_reward():
    assert privacy_only_reward(0, 30) == 1.0
    assert math.isclose(privacy_only_reward(1, 20), E_MINUS_20, rel_tol=1e-12)


@pytest.mark.parametrize("args", [(1.1, 0, 20), (-0.1, 0, 20), (0.5, 1.01, 20), (0.5, float("nan"), 20)])
def test_invalid_rates(args):
    with pytest.raises(InvalidRateError):
        reward(*args)


rate = st.floats(0, 1, allow_nan=False)


@given(rate, rate)
def test_reward_factorizes(r_pub, r_pri):
    assert reward(r_pub, r_pri, 20) == r_pub * privacy_only_reward(r_pri, 20)
    assert privacy_only_reward(r_pri, 20) == reward(1, r_pri, 20)


@pytest.mark.parametrize(
    "iteration, p", [(0, 20), (349, 20), (350, 25), (699, 25), (700, 30), (1050, 35), (1400, 40), (10_000, 40), (10**6, 40)]
)
def test_schedule(iteration, p):
    assert p_schedule(iteration) == p


def test_schedule_is_stepwise_non_decreasing():
    values = [p_schedule(i) for i in range(0, 3000)]
    assert all(a <= b for a, b in zip(values, values[1:]))
    for start in range(0, 3000, 350):
        assert len(set(values[start:start + 350])) == 1


def test_params_validation():
    with pytest.raises(ValueError):
        RewardParams(p_init=50, p_max=40)
    with pytest.raises(ValueError):
        RewardParams(step_interval=0)
    assert p_schedule(10, RewardParams(1, 1, 5, 3)) == 3
    assert GAMMA == 0.99
