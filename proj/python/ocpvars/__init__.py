"""Variable hierarchies over flat buffers, rigid-body dynamics and a Gauss-Newton SQP."""

from ._core import (
    AmbiguityError,
    Error,
    Expr,
    Hierarchy,
    Kind,
    OcpInstance,
    QuadrotorParams,
    ResolvedVariable,
    VariableLazyMap,
    VariableMap,
    bind,
    build,
    concat,
    initial_guess,
    leaf,
    make_quadrotor_instance,
    quadrotor_rates,
    quadrotor_step,
    quadrotor_step_jacobian,
    quat_step,
    replicate,
    run_paper_assertions,
    run_quadrotor_demo,
    solve,
    trajectory,
)

Q = Kind.quaternion()


def variable(name, kind=None):
    """Leaf when `kind` is given (1 scalar, n vector, Q quaternion), else a named binder.

    >>> x = variable("x")(variable("position", 3), variable("orientation", Q))
    """
    if kind is None:
        def binder(*parts):
            return bind(name, parts[0] if len(parts) == 1 else concat(list(parts)))
        return binder
    if isinstance(kind, Kind):
        return leaf(name, kind)
    return leaf(name, Kind.scalar() if kind == 1 else Kind.vector(int(kind)))


__all__ = [n for n in dir() if not n.startswith("_")]
