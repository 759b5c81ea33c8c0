#include "ocpvars/dynamics.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ocpvars {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kValidation, std::string(what) + " must be positive and finite");
  }
}

}  // namespace

void QuadrotorParams::validate() const {
  require_positive(mass, "mass");
  for (int i = 0; i < 3; ++i) require_positive(inertia[i], "inertia");
  require_positive(thrust_coefficient, "thrust_coefficient");
  require_positive(drag_coefficient, "drag_coefficient");
  require_positive(arm_length, "arm_length");
  require_positive(gravity, "gravity");
}

void SrbdParams::validate() const {
  require_positive(mass, "mass");
  for (int i = 0; i < 3; ++i) require_positive(inertia[i], "inertia");
  require_positive(gravity, "gravity");
  if (contact.empty()) throw Error(ErrorCode::kValidation, "srbd needs at least one leg");
  for (int c : contact) {
    if (c != 0 && c != 1) throw Error(ErrorCode::kValidation, "contact flags are 0 or 1");
  }
}

std::vector<std::pair<std::string, double>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, double>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kValidation, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    double parsed = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (key.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
      throw Error(ErrorCode::kValidation, "line " + std::to_string(line_no) + ": bad entry '" + body + "'");
    }
    out.emplace_back(key, parsed);
  }
  return out;
}

std::vector<std::pair<std::string, double>> read_key_values(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream text;
  text << file.rdbuf();
  return parse_key_values(text.str());
}

QuadrotorParams quadrotor_params_from(const std::vector<std::pair<std::string, double>>& entries) {
  QuadrotorParams p;
  for (const auto& [key, value] : entries) {
    if (key == "mass") p.mass = value;
    else if (key == "inertia_x") p.inertia.x() = value;
    else if (key == "inertia_y") p.inertia.y() = value;
    else if (key == "inertia_z") p.inertia.z() = value;
    else if (key == "thrust_coefficient") p.thrust_coefficient = value;
    else if (key == "drag_coefficient") p.drag_coefficient = value;
    else if (key == "arm_length") p.arm_length = value;
    else if (key == "gravity") p.gravity = value;
    else throw Error(ErrorCode::kValidation, "unknown quadrotor parameter '" + key + "'");
  }
  p.validate();
  return p;
}

std::string to_key_values(const QuadrotorParams& p) {
  char buf[64];
  std::string out;
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += key;
    out += " = ";
    out += buf;
    out += '\n';
  };
  put("mass", p.mass);
  put("inertia_x", p.inertia.x());
  put("inertia_y", p.inertia.y());
  put("inertia_z", p.inertia.z());
  put("thrust_coefficient", p.thrust_coefficient);
  put("drag_coefficient", p.drag_coefficient);
  put("arm_length", p.arm_length);
  put("gravity", p.gravity);
  return out;
}

}  // namespace ocpvars
