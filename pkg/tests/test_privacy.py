import pytest

from cpsfe.privacy import (
    SCENARIOS,
    PrivacyVerdict,
    byte_ztest,
    check_scenarios,
    privacy_smoke,
    smoke,
)


def test_scenario_classes_share_outputs():
    out = check_scenarios()
    for name in ("gind", "lut", "garbled"):
        for role in "AB":
            assert out[(name, role, 0)] == out[(name, role, 1)]


@pytest.mark.parametrize("name", ["gind", "lut", "garbled"])
def test_secure_scenarios_pass(name):
    v = privacy_smoke(name, 200)
    assert v.verdict == "pass", v.to_dict()


def test_leaky_scenario_fails():
    v = privacy_smoke("leaky-gind", 200)
    assert v.verdict == "fail"
    assert v.failures


def test_too_few_trials_is_inconclusive():
    assert privacy_smoke("gind", 0).verdict == "inconclusive"
    assert privacy_smoke("gind", 1).verdict == "inconclusive"


def test_unknown_scenario():
    with pytest.raises(ValueError):
        privacy_smoke("nope", 10)
    assert set(SCENARIOS) == {"gind", "lut", "garbled", "leaky-gind"}


def test_byte_ztest():
    same = [bytes([i % 7, 3]) for i in range(50)]
    bad, worst = byte_ztest(same, list(reversed(same)))
    assert bad == [] and worst < 1
    shifted = [bytes([i % 7, 4]) for i in range(50)]
    bad, worst = byte_ztest(same, shifted)
    assert bad == [1] and worst == float("inf")
    bad, worst = byte_ztest([b"ab"], [b"abc"])
    assert bad == [-1]


def test_smoke_with_length_leak():
    def run(role, cls, seed):
        return {"A": [b"x" * (1 + cls)], "B": [b"y"]}

    v = smoke(run, 10)
    assert v.verdict == "fail" and v.failures == {"A": [-1]}
    d = v.to_dict()
    assert d["verdict"] == "fail" and d["trials"] == 10
    assert isinstance(PrivacyVerdict("pass", 2).to_dict()["failures"], dict)
