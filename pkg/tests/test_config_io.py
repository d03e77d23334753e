import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortexlab import io as vio
from vortexlab.config import ConfigError, ProblemConfig
from vortexlab.flow.pde import FlowState
from vortexlab.group_action import TorusAction
from vortexlab.loopspace import random_path


def test_defaults_validate():
    cfg = ProblemConfig.from_dict({})
    assert cfg.nt == 64 and cfg.action.is_circle() and cfg.hamiltonian is None
    assert len(cfg.config_hash) == 64


@pytest.mark.parametrize("given,key", [
    ({"grid": {"nt": 4}}, "grid.nt"),
    ({"grid": {"ds": 1.0}}, "grid.ds"),
    ({"system": {"kind": "yang_mills"}}, "system.kind"),
    ({"solver": {"scheme": "leapfrog"}}, "solver.scheme"),
    ({"hamiltonian": {"kind": "bump"}}, "hamiltonian.amplitude"),
    ({"hamiltonian": {"kind": "bump", "amplitude": 1, "radius": 1, "colour": 2}}, "hamiltonian.colour"),
    ({"nonsense": 1}, "nonsense"),
    ({"action": {"A": [[1]], "tau": [0.0, 1.0]}}, "action"),
    ({"system": {"epsilon": 1.0}}, "system.epsilon"),
])
def test_invalid_config_names_key(given, key):
    with pytest.raises(ConfigError) as err:
        ProblemConfig.from_dict(given)
    assert err.value.key == key
    assert key in str(err.value)


def test_hash_depends_on_content_only():
    a = ProblemConfig.from_dict({"solver": {"seed": 3}, "grid": {"nt": 32}})
    b = ProblemConfig.from_dict({"grid": {"nt": 32}, "solver": {"seed": 3}})
    assert a.config_hash == b.config_hash
    assert a.config_hash != ProblemConfig.from_dict({"solver": {"seed": 4}, "grid": {"nt": 32}}).config_hash


def test_bump_config_builds_hamiltonian():
    cfg = ProblemConfig.from_dict({"hamiltonian": {"kind": "bump", "amplitude": 0.5, "radius": 1.0,
                                                   "center": [[0.2, 0.1]], "modulation": 0.3}})
    H = cfg.hamiltonian
    assert not H.invariant
    assert H.support_radius == pytest.approx(1.0 + abs(0.2 + 0.1j))


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_json_floats_roundtrip_exactly(xs):
    assert json.loads(vio.dumps({"x": xs}))["x"] == xs


def test_path_roundtrip_csv_and_json(tmp_path, rng):
    act = TorusAction(np.array([[1, 0], [1, 1], [0, 1]]), [-1.0, -1.0])
    p = random_path(act, 16, rng)
    vio.write_path_csv(tmp_path / "p.csv", p)
    q = vio.read_path_csv(tmp_path / "p.csv")
    assert np.array_equal(p.v, q.v) and np.array_equal(p.eta, q.eta)
    vio.write_json(tmp_path / "p.json", {"path": vio.path_to_dict(p)})
    r = vio.load_path(tmp_path / "p.json")
    assert np.array_equal(p.v, r.v) and np.array_equal(p.eta, r.eta)


def test_snapshot_roundtrip_and_hash_check(tmp_path, rng):
    p = random_path(TorusAction.circle(), 8, rng)
    st_ = FlowState(p, 0.25, 250, 1.5, [(0.0, 1.0), (0.25, 0.5)])
    d = json.loads(vio.dumps(vio.snapshot_dict(st_, "abc")))
    back = vio.state_from_snapshot(d, "abc")
    assert back.s == 0.25 and back.step_index == 250 and back.residual_log == st_.residual_log
    assert np.array_equal(back.path.v, p.v)
    with pytest.raises(ValueError):
        vio.state_from_snapshot(d, "other")


def test_atomic_write_leaves_no_temp(tmp_path):
    vio.write_json(tmp_path / "a" / "b.json", {"k": 1})
    assert [f.name for f in (tmp_path / "a").iterdir()] == ["b.json"]


def test_malformed_path_file(tmp_path):
    (tmp_path / "bad.csv").write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        vio.read_path_csv(tmp_path / "bad.csv")
