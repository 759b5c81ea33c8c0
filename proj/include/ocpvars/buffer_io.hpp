#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ocpvars/hierarchy.hpp"

namespace ocpvars {

/// Writes `values` as little-endian binary doubles to `path` and a text
/// sidecar `path.header` holding the scalar width, the length and the
/// hierarchy listing.
void write_buffer(const std::filesystem::path& path, const Hierarchy& hierarchy,
                  std::span<const double> values);

// Reads a dump written by write_buffer and checks it against `hierarchy`.
std::vector<double> read_buffer(const std::filesystem::path& path, const Hierarchy& hierarchy);

std::filesystem::path header_path(const std::filesystem::path& path);

}  // namespace ocpvars
