#pragma once

// Flat `section.key = value` configuration files. Blank lines and lines starting
// with '#' are ignored. Writing a config prints every key, so a written file
// (or a run manifest, which shares the format) reproduces the run exactly.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "poselab/harness.hpp"

namespace poselab::config {

using Entries = std::vector<std::pair<std::string, std::string>>;

Entries parse(std::istream& in);
Entries read_file(const std::filesystem::path& path);

/// Set one key. Throws ConfigError for unknown keys or unparsable values.
void apply(harness::ExperimentConfig& config, const std::string& key, const std::string& value);

/// Representation taken from `overrides`, else `file`, else discrete; its
/// defaults are then overlaid with `file` and finally `overrides`. Keys under
/// `artifact.` and `manifest.` are informational and skipped.
harness::ExperimentConfig resolve(const Entries& file, const Entries& overrides);

void write(std::ostream& out, const harness::ExperimentConfig& config);

/// Keys whose value is a single number (sweepable).
std::vector<std::string> numeric_keys();

/// Short sweep alias (k, delta, lambda, views, lr, ...) or full numeric key to
/// the full key; empty if unknown.
std::string key_for_axis(const std::string& axis);
std::vector<std::string> axis_aliases();

std::string format_real(double v);

}  // namespace poselab::config
