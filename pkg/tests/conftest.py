import json

import pytest

from poisonring import DeviationModel, EvalContext, PoisonPolicy


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {'PASS' if report.passed else 'FAIL'}: {name}")


def make_policy(kind="offset", magnitude=1, rate=None, uses=None, infectious=False):
    return PoisonPolicy(
        DeviationModel(kind, magnitude), rate=rate, uses=uses, infectious=infectious
    )


@pytest.fixture
def ctx():
    return EvalContext()


@pytest.fixture
def scenario_file(tmp_path):
    """Write a scenario dict to a temp JSON file and return its path."""

    def write(obj, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj), encoding="utf-8")
        return str(path)

    return write


def base_scenario_obj(**overrides):
    obj = {"ring": {"node_count": 5, "k_states": 5, "rounds": 10}, "seed": 0}
    obj.update(overrides)
    return obj


def poison_injection_obj(node=0, at_round=0, effect="deterministic", lifetime="always",
                         infectious=True, kind="offset", magnitude=1):
    return {
        "kind": "poison",
        "node": node,
        "at_round": at_round,
        "policy": {
            "effect": effect,
            "lifetime": lifetime,
            "infectious": infectious,
            "deviation": {"kind": kind, "magnitude": magnitude},
        },
    }
