import numpy as np
import pytest

import ocpvars as ov
from ocpvars import Q, variable


@pytest.fixture(scope="module")
def multirotor():
    position = variable("position", 3)
    orientation = variable("orientation", Q)
    linear_velocity = variable("linear_velocity", 3)
    angular_velocity = variable("angular_velocity", 3)
    rotor_speed = variable("rotor_speed", 1)
    x = variable("x")(position, orientation, linear_velocity, angular_velocity)
    X = variable("X")(ov.replicate(31, x))
    u = variable("u")(ov.replicate(4, rotor_speed))
    U = variable("U")(ov.replicate(30, u))
    return ov.build(variable("decision_variables")(X, U))


def test_sizes_and_indices(multirotor):
    dv = multirotor
    assert dv.size == 523
    assert dv("X").size == 403
    assert dv("U").offset == 403
    assert dv("X", "x", 1, "linear_velocity").offset == 20
    assert dv("U", "u", 1, "rotor_speed", 1).offset == 403 + 5
    assert dv("rotor_speed", 2, 3) == dv("U", "u", 2, "rotor_speed", 3)
    assert dv("rotor_speed", 2, 3).chain == "U/u[2]/rotor_speed[3]"


def test_errors_map_to_python_exceptions(multirotor):
    with pytest.raises(ov.Error):
        multirotor("nope")
    with pytest.raises(ov.Error):
        multirotor("x", 31)
    a = variable("a")(variable("value", 1))
    b = variable("b")(variable("value", 1))
    with pytest.raises(ov.AmbiguityError):
        ov.build(variable("top")(a, b))("value")


def test_eager_and_lazy_maps_alias_memory(multirotor):
    vars_ = ov.VariableMap(multirotor)
    vars_.get("X")[:] = 0.0
    for k in range(31):
        vars_.get("orientation", k)[:] = [0, 0, 0, 1]
    assert vars_.buffer.sum() == 31.0
    assert list(vars_.buffer[3:7]) == [0, 0, 0, 1]

    underlying = np.zeros(multirotor.size)
    lvars = ov.VariableLazyMap(multirotor, underlying)
    lvars.get("rotor_speed", 1, 1)[0] = 3.5
    assert underlying[408] == 3.5
    with pytest.raises(TypeError):
        ov.VariableLazyMap(multirotor, np.zeros(multirotor.size, dtype=np.float32))
    with pytest.raises(ov.Error):
        ov.VariableLazyMap(multirotor, np.zeros(10))


def test_quat_step_and_dynamics():
    q = np.array([0.0, 0.0, 0.0, 1.0])
    q = ov.quat_step(q, np.array([0.0, 0.0, np.pi]), 1.0)
    assert np.allclose(q, [0, 0, 1, 0], atol=1e-12)

    params = ov.QuadrotorParams()
    hover = np.full(4, params.hover_rotor_speed())
    state = np.zeros(13)
    state[6] = 1.0
    lin, ang = ov.quadrotor_rates(state, hover, params)
    assert np.allclose(lin, 0.0, atol=1e-12) and np.allclose(ang, 0.0, atol=1e-12)
    nxt = ov.quadrotor_step(state, hover, 0.05)
    assert np.allclose(nxt, state, atol=1e-12)

    J = ov.quadrotor_step_jacobian(state, hover, 0.05)
    assert J.shape == (13, 17)
    h = 1e-6
    fd = np.empty_like(J)
    point = np.concatenate([state, hover])
    for j in range(17):
        e = np.zeros(17)
        e[j] = h
        fd[:, j] = (ov.quadrotor_step((point + e)[:13], (point + e)[13:], 0.05)
                    - ov.quadrotor_step((point - e)[:13], (point - e)[13:], 0.05)) / (2 * h)
    assert np.linalg.norm(J - fd) / max(np.linalg.norm(fd), 1.0) < 1e-5


def test_hover_offset_solve():
    inst = ov.make_quadrotor_instance([1.0, 0.0, 0.0], horizon=30, dt=0.05)
    sol, report = ov.solve(inst, ov.initial_guess(inst))
    assert report["converged"]
    assert report["final_max_defect"] < 1e-6
    merit = report["merit"]
    assert all(b <= a for a, b in zip(merit, merit[1:]))
    states, inputs = ov.trajectory(inst, sol)
    assert states.shape == (31, 13) and inputs.shape == (30, 4)
    assert np.linalg.norm(states[-1, :3]) < 1e-3
    assert np.allclose(np.linalg.norm(states[:, 3:7], axis=1), 1.0, atol=1e-9)

    lazy_sol, _ = ov.solve(inst, ov.initial_guess(inst), flavor="lazy")
    assert np.array_equal(sol, lazy_sol)

    back = ov.OcpInstance.deserialize(inst.serialize())
    assert back.horizon == 30 and back.model == "quadrotor"


def test_paper_assertions_and_demo():
    rows = ov.run_paper_assertions()
    assert len(rows) >= 14 and all(passed for *_, passed in rows)
    faulty = [name for name, _, _, passed in ov.run_paper_assertions(inject_fault=True) if not passed]
    assert faulty == ["X(x, 1, linear_velocity).Index"]

    samples, summary = ov.run_quadrotor_demo(steps=20, initial_position=[0.0, 0.0, 0.0])
    assert not summary["failed"]
    assert samples.shape == (21, 18)
    hover = ov.QuadrotorParams().hover_rotor_speed()
    assert np.allclose(samples[:, 14:], hover, atol=1e-6)
