#pragma once

// Command-line front end: gen-data, train, eval, sweep, report, selfcheck.
// Exit status: 0 success, 1 validation or runtime failure, 2 usage/configuration error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace poselab::cli {

int run(int argc, const char* const* argv);
/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace poselab::cli
