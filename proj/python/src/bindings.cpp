#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <string>
#include <variant>
#include <vector>

#include "ocpvars/bench.hpp"
#include "ocpvars/derivatives.hpp"
#include "ocpvars/dynamics.hpp"
#include "ocpvars/error.hpp"
#include "ocpvars/expr.hpp"
#include "ocpvars/hierarchy.hpp"
#include "ocpvars/query.hpp"
#include "ocpvars/sqp.hpp"
#include "ocpvars/varmap.hpp"

namespace py = pybind11;
using namespace ocpvars;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Query to_query(const py::args& args) {
  std::vector<QueryToken> tokens;
  for (const auto& a : args) {
    if (py::isinstance<py::str>(a)) {
      tokens.emplace_back(a.cast<std::string>());
    } else {
      tokens.emplace_back(a.cast<long long>());
    }
  }
  return Query(std::move(tokens));
}

std::vector<double> to_vector(const Array& a) { return std::vector<double>(a.data(), a.data() + a.size()); }

// Copies `v` into a fresh 1-d array (no base handle, so numpy owns a copy).
py::array_t<double> from_vector(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

// Numpy array aliasing `view`; `owner` keeps the backing storage alive.
py::array alias(const View<double>& view, py::handle owner) {
  return py::array_t<double>({static_cast<py::ssize_t>(view.size())}, {static_cast<py::ssize_t>(sizeof(double))},
                             view.data(), owner);
}

std::vector<double> state_vector(const RigidBodyState<double>& x) {
  std::vector<double> s(kStateSize);
  pack_state<double>(x, s);
  return s;
}

RigidBodyState<double> state_from(const Array& a) { return unpack_state<double>(to_vector(a)); }

Eigen::Vector3d vec3(const std::vector<double>& v) {
  if (v.size() != 3) throw Error(ErrorCode::kSizeMismatch, "expected 3 values");
  return {v[0], v[1], v[2]};
}

Integrator integrator_from(const std::string& name) {
  if (name == "semi-implicit-euler") return Integrator::kSemiImplicitEuler;
  if (name == "rk4") return Integrator::kRk4;
  throw Error(ErrorCode::kValidation, "unknown integrator '" + name + "'");
}

// Lazy map that also keeps the numpy buffer it borrows alive.
struct PyLazyMap {
  PyLazyMap(Hierarchy h, py::array_t<double, 0> array)
      : array_(std::move(array)),
        map_(std::move(h), std::span<double>(array_.mutable_data(), static_cast<std::size_t>(array_.size()))) {}

  py::array_t<double, 0> array_;  // no forcecast: writes must reach the caller's array
  LazyMap<double> map_;
};

py::dict report_dict(const SqpReport& r) {
  py::dict d;
  d["termination"] = to_string(r.termination);
  d["converged"] = converged(r.termination);
  d["iterations"] = r.iterations;
  d["merit"] = r.merit;
  d["merit_before"] = r.merit_before;
  d["max_defect"] = r.max_defect;
  d["stationarity"] = r.stationarity;
  d["step_norm"] = r.step_norm;
  d["step_length"] = r.step_length;
  d["active_bounds"] = r.active_bounds;
  d["second_order_corrections"] = r.second_order_corrections;
  d["initial_max_defect"] = r.initial_max_defect;
  d["final_cost"] = r.final_cost;
  d["final_max_defect"] = r.final_max_defect;
  d["penalty"] = r.penalty;
  d["regularization"] = r.regularization;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Variable hierarchies over flat buffers, rigid-body dynamics and a Gauss-Newton SQP";

  // Translators run newest first, so the ambiguity subclass wins over Error.
  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<AmbiguityError>(m, "AmbiguityError", error.ptr());

  // --- variables -----------------------------------------------------------
  py::class_<Kind>(m, "Kind")
      .def_static("scalar", &Kind::scalar)
      .def_static("vector", &Kind::vector, py::arg("n"))
      .def_static("quaternion", &Kind::quaternion)
      .def_static("branch", &Kind::branch)
      .def_property_readonly("is_leaf", &Kind::is_leaf)
      .def_property_readonly("leaf_size", &Kind::leaf_size)
      .def("__eq__", [](const Kind& a, const Kind& b) { return a == b; })
      .def("__hash__", [](const Kind& k) { return std::hash<std::string>{}(k.to_string()); })
      .def("__repr__", &Kind::to_string);

  py::class_<VariableExpr>(m, "Expr")
      .def_property_readonly("name", &VariableExpr::name)
      .def("__repr__", [](const VariableExpr& e) { return "<Expr " + (e.is_named() ? e.name() : "(unnamed)") + ">"; });

  m.def("leaf", &leaf, py::arg("name"), py::arg("kind"));
  m.def("concat", &concat, py::arg("parts"));
  m.def("replicate", &replicate, py::arg("count"), py::arg("expr"));
  m.def("bind", &bind, py::arg("name"), py::arg("expr"));

  py::class_<ResolvedVariable>(m, "ResolvedVariable")
      .def_readonly("offset", &ResolvedVariable::offset)
      .def_readonly("size", &ResolvedVariable::size)
      .def_readonly("kind", &ResolvedVariable::kind)
      .def_property_readonly("chain", &ResolvedVariable::chain_string)
      .def("__eq__", [](const ResolvedVariable& a, const ResolvedVariable& b) { return a == b; })
      .def("__repr__", [](const ResolvedVariable& r) {
        return "<ResolvedVariable " + r.chain_string() + " @" + std::to_string(r.offset) + " size " +
               std::to_string(r.size) + ">";
      });

  py::class_<Hierarchy>(m, "Hierarchy")
      .def_property_readonly("name", &Hierarchy::name)
      .def_property_readonly("size", &Hierarchy::size)
      .def_property_readonly("kind", &Hierarchy::kind)
      .def_property_readonly("children",
                             [](const Hierarchy& h) {
                               py::list out;
                               for (const auto& c : h.children()) {
                                 py::dict d;
                                 d["name"] = c.name;
                                 d["kind"] = c.kind;
                                 d["size"] = c.size;
                                 d["count"] = c.count;
                                 d["replicated"] = c.replicated;
                                 d["offset"] = c.offset;
                                 out.append(d);
                               }
                               return out;
                             })
      .def("resolve", [](const Hierarchy& h, const py::args& args) { return resolve(h, to_query(args)); })
      .def("__call__", [](const Hierarchy& h, const py::args& args) { return resolve(h, to_query(args)); })
      .def("pretty", &pretty_print)
      .def("__len__", &Hierarchy::size)
      .def("__repr__", [](const Hierarchy& h) {
        return "<Hierarchy " + h.name() + " size " + std::to_string(h.size()) + ">";
      });

  m.def("build", &build, py::arg("expr"));

  py::class_<EagerMap<double>>(m, "VariableMap")
      .def(py::init<Hierarchy>(), py::arg("hierarchy"))
      .def_property_readonly("hierarchy", &EagerMap<double>::hierarchy)
      .def_property_readonly("buffer",
                             [](py::object self) {
                               auto& map = self.cast<EagerMap<double>&>();
                               return alias(map.root(), self);
                             })
      .def("get",
           [](py::object self, const py::args& args) {
             auto& map = self.cast<EagerMap<double>&>();
             return alias(map.get(to_query(args)), self);
           })
      .def("__len__", &EagerMap<double>::size);

  py::class_<PyLazyMap>(m, "VariableLazyMap")
      .def(py::init([](const Hierarchy& h, const py::array& buffer) {
             // Refuse anything that would need a converted copy: writes must
             // land in the caller's array.
             if (!buffer.dtype().is(py::dtype::of<double>())) throw py::type_error("buffer must be float64");
             if (!(buffer.flags() & py::array::c_style) || !buffer.writeable() || buffer.ndim() != 1) {
               throw Error(ErrorCode::kValidation, "buffer must be a writeable, contiguous 1-d float64 array");
             }
             return std::make_unique<PyLazyMap>(h, py::reinterpret_borrow<py::array_t<double, 0>>(buffer));
           }),
           py::arg("hierarchy"), py::arg("buffer"))
      .def_property_readonly("buffer", [](const PyLazyMap& m) { return m.array_; })
      .def("get",
           [](py::object self, const py::args& args) {
             auto& lazy = self.cast<PyLazyMap&>();
             return alias(lazy.map_.get(to_query(args)), lazy.array_);
           })
      .def("__len__", [](const PyLazyMap& m) { return m.map_.size(); });

  // --- dynamics ------------------------------------------------------------
  py::class_<QuadrotorParams>(m, "QuadrotorParams")
      .def(py::init<>())
      .def_readwrite("mass", &QuadrotorParams::mass)
      .def_property(
          "inertia", [](const QuadrotorParams& p) { return std::vector<double>{p.inertia[0], p.inertia[1], p.inertia[2]}; },
          [](QuadrotorParams& p, const std::vector<double>& v) { p.inertia = vec3(v); })
      .def_readwrite("thrust_coefficient", &QuadrotorParams::thrust_coefficient)
      .def_readwrite("drag_coefficient", &QuadrotorParams::drag_coefficient)
      .def_readwrite("arm_length", &QuadrotorParams::arm_length)
      .def_readwrite("gravity", &QuadrotorParams::gravity)
      .def("hover_rotor_speed", &QuadrotorParams::hover_rotor_speed)
      .def("validate", &QuadrotorParams::validate);

  m.def(
      "quat_step",
      [](const Array& q, const Array& w, double dt) {
        const auto qv = to_vector(q), wv = to_vector(w);
        if (qv.size() != 4 || wv.size() != 3) throw Error(ErrorCode::kSizeMismatch, "quat_step takes q[4], w[3]");
        const Quat<double> out = quat_step(Quat<double>(qv[3], qv[0], qv[1], qv[2]), Vec3<double>(wv[0], wv[1], wv[2]), dt);
        return from_vector({out.x(), out.y(), out.z(), out.w()});
      },
      py::arg("q"), py::arg("w"), py::arg("dt"), "q * Exp(w dt), quaternions stored (x, y, z, w)");

  m.def(
      "quadrotor_rates",
      [](const Array& state, const Array& u, const QuadrotorParams& p) {
        const auto uv = to_vector(u);
        const auto r = quadrotor_dynamics<double>(state_from(state), uv, p);
        return py::make_tuple(from_vector({r.linear_acceleration[0], r.linear_acceleration[1], r.linear_acceleration[2]}),
                              from_vector({r.angular_acceleration[0], r.angular_acceleration[1], r.angular_acceleration[2]}));
      },
      py::arg("state"), py::arg("rotor_speeds"), py::arg("params") = QuadrotorParams{});

  m.def(
      "quadrotor_step",
      [](const Array& state, const Array& u, double dt, const QuadrotorParams& p, const std::string& integrator) {
        const auto uv = to_vector(u);
        return from_vector(state_vector(
            integrate_step<double>(state_from(state), uv, dt, QuadrotorModel{p}, integrator_from(integrator))));
      },
      py::arg("state"), py::arg("rotor_speeds"), py::arg("dt"), py::arg("params") = QuadrotorParams{},
      py::arg("integrator") = "semi-implicit-euler");

  m.def(
      "quadrotor_step_jacobian",
      [](const Array& state, const Array& u, double dt, const QuadrotorParams& p) {
        const QuadrotorModel model{p};
        const DiffFunction f(kStateSize + 4, kStateSize, [model, dt](auto in, auto out) {
          pack_state(integrate_step(unpack_state(in.first(kStateSize)), in.subspan(kStateSize), dt, model), out);
        });
        std::vector<double> at = to_vector(state);
        const auto uv = to_vector(u);
        at.insert(at.end(), uv.begin(), uv.end());
        const Eigen::MatrixXd j = jacobian(f, at);
        py::array_t<double> out({j.rows(), j.cols()});
        auto view = out.mutable_unchecked<2>();
        for (Eigen::Index r = 0; r < j.rows(); ++r) {
          for (Eigen::Index c = 0; c < j.cols(); ++c) view(r, c) = j(r, c);
        }
        return out;
      },
      py::arg("state"), py::arg("rotor_speeds"), py::arg("dt"), py::arg("params") = QuadrotorParams{},
      "Forward-mode Jacobian of one semi-implicit Euler step w.r.t. (state, rotor speeds)");

  // --- optimal control -----------------------------------------------------
  py::class_<OcpInstance>(m, "OcpInstance")
      .def_readonly("horizon", &OcpInstance::horizon)
      .def_readonly("dt", &OcpInstance::dt)
      .def_readonly("decision", &OcpInstance::decision)
      .def_readonly("parameters", &OcpInstance::parameters)
      .def_property_readonly("model", &OcpInstance::model_name)
      .def("serialize", &serialize_instance)
      .def_static("deserialize", &deserialize_instance, py::arg("text"));

  m.def(
      "make_quadrotor_instance",
      [](const std::vector<double>& initial_position, const std::vector<double>& target, std::size_t horizon,
         double dt, const QuadrotorParams& p) {
        RigidBodyState<double> x0;
        x0.position = vec3(initial_position);
        x0.orientation.setIdentity();
        x0.linear_velocity.setZero();
        x0.angular_velocity.setZero();
        return make_quadrotor_instance(p, horizon, dt, x0, vec3(target));
      },
      py::arg("initial_position"), py::arg("target") = std::vector<double>{0, 0, 0}, py::arg("horizon") = 30,
      py::arg("dt") = 0.05, py::arg("params") = QuadrotorParams{});

  m.def("initial_guess", [](const OcpInstance& inst) { return from_vector(initial_guess(inst)); });

  m.def(
      "solve",
      [](const OcpInstance& inst, const Array& guess, const std::string& flavor, int max_iterations) {
        SqpOptions options;
        if (flavor == "eager") options.flavor = MapFlavor::kEager;
        else if (flavor == "lazy") options.flavor = MapFlavor::kLazy;
        else throw Error(ErrorCode::kValidation, "flavor must be 'eager' or 'lazy'");
        options.max_iterations = max_iterations;
        const auto g = to_vector(guess);
        SqpResult r;
        {
          py::gil_scoped_release release;
          r = solve(inst, g, options);
        }
        return py::make_tuple(from_vector(r.solution), report_dict(r.report));
      },
      py::arg("instance"), py::arg("guess"), py::arg("flavor") = "eager", py::arg("max_iterations") = 50,
      "Returns (solution, report)");

  m.def(
      "trajectory",
      [](const OcpInstance& inst, const Array& solution) {
        const Trajectory t = unpack_trajectory(inst, to_vector(solution));
        const auto m_in = static_cast<py::ssize_t>(inst.input_size());
        py::array_t<double> states({static_cast<py::ssize_t>(t.states.size()), static_cast<py::ssize_t>(kStateSize)});
        py::array_t<double> inputs({static_cast<py::ssize_t>(t.inputs.size()), m_in});
        auto s = states.mutable_unchecked<2>();
        auto u = inputs.mutable_unchecked<2>();
        for (std::size_t k = 0; k < t.states.size(); ++k) {
          const auto v = state_vector(t.states[k]);
          for (std::size_t i = 0; i < kStateSize; ++i) s(static_cast<py::ssize_t>(k), static_cast<py::ssize_t>(i)) = v[i];
        }
        for (std::size_t k = 0; k < t.inputs.size(); ++k) {
          for (py::ssize_t i = 0; i < m_in; ++i) u(static_cast<py::ssize_t>(k), i) = t.inputs[k][i];
        }
        return py::make_tuple(states, inputs);
      },
      py::arg("instance"), py::arg("solution"), "Returns (states[N+1, 13], inputs[N, m])");

  // --- harness -------------------------------------------------------------
  m.def(
      "run_paper_assertions",
      [](bool inject_fault) {
        const auto report = run_paper_assertions(inject_fault);
        py::list rows;
        for (const auto& r : report.records) rows.append(py::make_tuple(r.name, r.expected, r.actual, r.passed));
        return rows;
      },
      py::arg("inject_fault") = false, "List of (name, expected, actual, passed)");

  m.def(
      "run_quadrotor_demo",
      [](std::size_t steps, std::size_t horizon, double dt, const std::vector<double>& initial_position,
         const std::vector<double>& target, const QuadrotorParams& p) {
        DemoConfig c;
        c.params = p;
        c.steps = steps;
        c.horizon = horizon;
        c.dt = dt;
        c.initial_position = vec3(initial_position);
        c.target = vec3(target);
        DemoResult r;
        {
          py::gil_scoped_release release;
          r = run_quadrotor_demo(c);
        }
        py::array_t<double> rows({static_cast<py::ssize_t>(r.samples.size()), py::ssize_t{18}});
        auto v = rows.mutable_unchecked<2>();
        for (std::size_t k = 0; k < r.samples.size(); ++k) {
          const auto& s = r.samples[k];
          const auto x = state_vector(s.state);
          const auto row = static_cast<py::ssize_t>(k);
          v(row, 0) = s.t;
          for (std::size_t i = 0; i < kStateSize; ++i) v(row, static_cast<py::ssize_t>(1 + i)) = x[i];
          for (Eigen::Index i = 0; i < 4; ++i) v(row, 14 + i) = s.input[i];
        }
        py::dict summary;
        summary["solves"] = r.summary.solves;
        summary["total_iterations"] = r.summary.total_iterations;
        summary["max_iterations"] = r.summary.max_iterations;
        summary["worst_final_defect"] = r.summary.worst_final_defect;
        summary["terminal_position_error"] = r.summary.terminal_position_error;
        summary["max_quaternion_norm_error"] = r.summary.max_quaternion_norm_error;
        summary["failed"] = r.summary.failed;
        summary["failure"] = r.summary.failure;
        return py::make_tuple(rows, summary);
      },
      py::arg("steps") = 200, py::arg("horizon") = 30, py::arg("dt") = 0.05,
      py::arg("initial_position") = std::vector<double>{1, 0, 0}, py::arg("target") = std::vector<double>{0, 0, 0},
      py::arg("params") = QuadrotorParams{},
      "Closed-loop run; returns (samples[steps+1, 18] as t, state, inputs; summary)");
}
