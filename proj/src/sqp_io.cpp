#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "ocpvars/sqp.hpp"

namespace ocpvars {

namespace {

constexpr const char* kInstanceFormat = "ocpvars-instance-1";
constexpr const char* kResultFormat = "ocpvars-result-1";

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class Range>
std::string list(const Range& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ' ';
    out += number(static_cast<double>(v));
  }
  return out;
}

std::string list(const Eigen::VectorXd& v) { return list(std::vector<double>(v.data(), v.data() + v.size())); }

double parse_number(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kValidation, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string token;
  while (in >> token) out.push_back(parse_number(token));
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Document {
  std::map<std::string, std::string> header;
  std::vector<double> values;

  const std::string& at(const std::string& key) const {
    const auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorCode::kValidation, "missing key '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return parse_number(at(key)); }
  std::size_t count(const std::string& key) const {
    const double v = num(key);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw Error(ErrorCode::kValidation, "'" + key + "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
  }
};

Document parse_document(const std::string& text, const char* format, const char* count_key) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  bool body = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!body) {
      if (line == "---") {
        body = true;
        continue;
      }
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kValidation, "header line without '=': " + line);
      doc.header[line.substr(0, eq)] = line.substr(eq + 1);
    } else if (!line.empty()) {
      doc.values.push_back(parse_number(line));
    }
  }
  if (!body) throw Error(ErrorCode::kValidation, "missing '---' separator");
  if (doc.at("format") != format) throw Error(ErrorCode::kValidation, "unexpected format '" + doc.at("format") + "'");
  if (doc.values.size() != doc.count(count_key)) {
    throw Error(ErrorCode::kValidation, "body holds " + std::to_string(doc.values.size()) + " values, header says " +
                                            doc.at(count_key));
  }
  return doc;
}

std::string integrator_name(Integrator i) { return i == Integrator::kRk4 ? "rk4" : "semi-implicit-euler"; }

Termination termination_from(const std::string& s) {
  for (Termination t : {Termination::kKktTolerance, Termination::kFeasibleStationary, Termination::kStepTolerance,
                        Termination::kIterationLimit, Termination::kLineSearchFailure}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::kValidation, "unknown termination '" + s + "'");
}

}  // namespace

std::string serialize_instance(const OcpInstance& inst) {
  std::ostringstream out;
  out << "format=" << kInstanceFormat << '\n';
  out << "model=" << inst.model_name() << '\n';
  out << "horizon=" << inst.horizon << '\n';
  out << "dt=" << number(inst.dt) << '\n';
  out << "integrator=" << integrator_name(inst.integrator) << '\n';
  if (const auto* q = std::get_if<QuadrotorModel>(&inst.model)) {
    std::istringstream kv(to_key_values(q->params));
    std::string line;
    while (std::getline(kv, line)) {
      const auto eq = line.find(" = ");
      out << "quadrotor." << line.substr(0, eq) << '=' << line.substr(eq + 3) << '\n';
    }
  } else {
    const SrbdParams& p = std::get<SrbdModel>(inst.model).params;
    out << "srbd.mass=" << number(p.mass) << '\n';
    out << "srbd.inertia=" << list(Eigen::VectorXd(p.inertia)) << '\n';
    out << "srbd.gravity=" << number(p.gravity) << '\n';
    out << "srbd.contact=" << list(p.contact) << '\n';
  }
  out << "weights.state=" << list(inst.weights.state) << '\n';
  out << "weights.terminal=" << list(inst.weights.terminal) << '\n';
  out << "weights.input=" << list(inst.weights.input) << '\n';
  out << "input_lower=" << list(inst.input_lower) << '\n';
  out << "input_upper=" << list(inst.input_upper) << '\n';
  out << "parameters=" << inst.parameter_values.size() << '\n';
  out << "---\n";
  for (double v : inst.parameter_values) out << number(v) << '\n';
  return out.str();
}

OcpInstance deserialize_instance(const std::string& text) {
  const Document doc = parse_document(text, kInstanceFormat, "parameters");
  DynamicsModel parsed_model;
  const std::string& model = doc.at("model");
  if (model == "quadrotor") {
    std::vector<std::pair<std::string, double>> entries;
    for (const auto& [key, value] : doc.header) {
      if (key.rfind("quadrotor.", 0) == 0) entries.emplace_back(key.substr(10), parse_number(value));
    }
    parsed_model = QuadrotorModel{quadrotor_params_from(entries)};
  } else if (model == "srbd") {
    SrbdParams p;
    p.mass = doc.num("srbd.mass");
    const auto inertia = parse_list(doc.at("srbd.inertia"));
    if (inertia.size() != 3) throw Error(ErrorCode::kValidation, "srbd.inertia needs 3 values");
    p.inertia = Eigen::Vector3d(inertia[0], inertia[1], inertia[2]);
    p.gravity = doc.num("srbd.gravity");
    p.contact.clear();
    for (double c : parse_list(doc.at("srbd.contact"))) p.contact.push_back(static_cast<int>(c));
    p.validate();
    parsed_model = SrbdModel{p};
  } else {
    throw Error(ErrorCode::kValidation, "unknown model '" + model + "'");
  }
  const std::size_t horizon = doc.count("horizon");
  if (horizon == 0) throw Error(ErrorCode::kValidation, "horizon must be at least 1");
  OcpInstance inst(parsed_model, horizon, doc.num("dt"));
  const std::string& integrator = doc.at("integrator");
  if (integrator == "rk4") inst.integrator = Integrator::kRk4;
  else if (integrator == "semi-implicit-euler") inst.integrator = Integrator::kSemiImplicitEuler;
  else throw Error(ErrorCode::kValidation, "unknown integrator '" + integrator + "'");
  inst.parameter_values = doc.values;
  inst.weights.state = to_vector(parse_list(doc.at("weights.state")));
  inst.weights.terminal = to_vector(parse_list(doc.at("weights.terminal")));
  inst.weights.input = to_vector(parse_list(doc.at("weights.input")));
  inst.input_lower = to_vector(parse_list(doc.at("input_lower")));
  inst.input_upper = to_vector(parse_list(doc.at("input_upper")));
  inst.validate();
  return inst;
}

std::string serialize_result(const SqpResult& result) {
  const SqpReport& r = result.report;
  std::ostringstream out;
  out << "format=" << kResultFormat << '\n';
  out << "termination=" << to_string(r.termination) << '\n';
  out << "iterations=" << r.iterations << '\n';
  out << "second_order_corrections=" << r.second_order_corrections << '\n';
  out << "initial_max_defect=" << number(r.initial_max_defect) << '\n';
  out << "final_cost=" << number(r.final_cost) << '\n';
  out << "final_max_defect=" << number(r.final_max_defect) << '\n';
  out << "penalty=" << number(r.penalty) << '\n';
  out << "regularization=" << number(r.regularization) << '\n';
  out << "merit=" << list(r.merit) << '\n';
  out << "merit_before=" << list(r.merit_before) << '\n';
  out << "max_defect=" << list(r.max_defect) << '\n';
  out << "stationarity=" << list(r.stationarity) << '\n';
  out << "step_norm=" << list(r.step_norm) << '\n';
  out << "step_length=" << list(r.step_length) << '\n';
  out << "active_bounds=" << list(r.active_bounds) << '\n';
  out << "solution=" << result.solution.size() << '\n';
  out << "---\n";
  for (double v : result.solution) out << number(v) << '\n';
  return out.str();
}

SqpResult deserialize_result(const std::string& text) {
  const Document doc = parse_document(text, kResultFormat, "solution");
  SqpResult result;
  SqpReport& r = result.report;
  r.termination = termination_from(doc.at("termination"));
  r.iterations = static_cast<int>(doc.count("iterations"));
  r.second_order_corrections = static_cast<int>(doc.count("second_order_corrections"));
  r.initial_max_defect = doc.num("initial_max_defect");
  r.final_cost = doc.num("final_cost");
  r.final_max_defect = doc.num("final_max_defect");
  r.penalty = doc.num("penalty");
  r.regularization = doc.num("regularization");
  r.merit = parse_list(doc.at("merit"));
  r.merit_before = parse_list(doc.at("merit_before"));
  r.max_defect = parse_list(doc.at("max_defect"));
  r.stationarity = parse_list(doc.at("stationarity"));
  r.step_norm = parse_list(doc.at("step_norm"));
  r.step_length = parse_list(doc.at("step_length"));
  for (double v : parse_list(doc.at("active_bounds"))) r.active_bounds.push_back(static_cast<std::size_t>(v));
  result.solution = doc.values;
  return result;
}

}  // namespace ocpvars
