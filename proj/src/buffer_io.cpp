#include "ocpvars/buffer_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "ocpvars/error.hpp"

namespace ocpvars {

namespace {

constexpr std::size_t kScalarWidth = sizeof(double);

std::string header_text(const Hierarchy& hierarchy, std::size_t length) {
  std::ostringstream out;
  out << "scalar_width=" << kScalarWidth << '\n'
      << "length=" << length << '\n'
      << "hierarchy:\n"
      << pretty_print(hierarchy);
  return out.str();
}

}  // namespace

std::filesystem::path header_path(const std::filesystem::path& path) {
  std::filesystem::path out = path;
  out += ".header";
  return out;
}

void write_buffer(const std::filesystem::path& path, const Hierarchy& hierarchy,
                  std::span<const double> values) {
  if (values.size() != hierarchy.size()) {
    throw Error(ErrorCode::kSizeMismatch, "buffer length " + std::to_string(values.size()) +
                                              " for hierarchy of size " + std::to_string(hierarchy.size()));
  }
  std::ofstream data(path, std::ios::binary);
  if (!data) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[kScalarWidth];
    for (std::size_t i = 0; i < kScalarWidth; ++i) {
      bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    }
    data.write(bytes, kScalarWidth);
  }
  std::ofstream header(header_path(path));
  header << header_text(hierarchy, values.size());
  if (!data || !header) {
    throw Error(ErrorCode::kIo, "failed writing " + path.string());
  }
}

std::vector<double> read_buffer(const std::filesystem::path& path, const Hierarchy& hierarchy) {
  std::ifstream header(header_path(path));
  if (!header) {
    throw Error(ErrorCode::kIo, "cannot open " + header_path(path).string());
  }
  std::stringstream text;
  text << header.rdbuf();
  if (text.str() != header_text(hierarchy, hierarchy.size())) {
    throw Error(ErrorCode::kSizeMismatch, "header of " + path.string() + " does not match the hierarchy");
  }

  std::ifstream data(path, std::ios::binary);
  if (!data) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  std::vector<double> values(hierarchy.size());
  for (double& v : values) {
    unsigned char bytes[kScalarWidth];
    if (!data.read(reinterpret_cast<char*>(bytes), kScalarWidth)) {
      throw Error(ErrorCode::kSizeMismatch, path.string() + " is shorter than its header states");
    }
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < kScalarWidth; ++i) {
      bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    v = std::bit_cast<double>(bits);
  }
  if (data.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kSizeMismatch, path.string() + " is longer than its header states");
  }
  return values;
}

}  // namespace ocpvars
