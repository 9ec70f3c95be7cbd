import json

import numpy as np
import pytest

from relcorr.corpus import CASES, Expected, dumps, expected_set, replay, replay_all
from relcorr.space import Space, VarDecl


def test_expected_set_projects_over_other_variables():
    sp = Space("P", (VarDecl("a", "int", 0, 3), VarDecl("b", "int", -1, 1)))
    got = expected_set(sp, Expected(("a",), lambda a: a % 2 == 0))
    assert len(got) == 2 * 3
    assert got.values_of("a") == {0, 2}


@pytest.mark.parametrize("name", ["fig2", "projection", "cube", "sqrt", "strings"])
def test_replay_cases(name):
    rep = replay(name, n=300, seed=1)
    assert rep["ok"], [k for k, v in rep["checks"].items() if not v]
    assert rep["case"] == name


def test_report_is_plain_json():
    rep = replay_all(["fig2", "projection"], n=100)
    text = dumps(rep)
    assert json.loads(text)["ok"] is True
    assert text == dumps(json.loads(text))


def test_dumps_numpy_values():
    text = dumps({"a": np.int64(3), "b": np.float64(0.5), "c": np.bool_(True), "d": {2, 1}})
    assert json.loads(text) == {"a": 3, "b": 0.5, "c": True, "d": [1, 2]}
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_cases_have_sources():
    for case in CASES.values():
        assert f"spec {case.spec} on" in case.source()
