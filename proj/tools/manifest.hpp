#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "scenario.hpp"

namespace qfd::app {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes <output>/manifest.json: command, config echo, applied defaults,
/// seed, thread count, library versions, timestamp, wall clock and a
/// checksum per output file.
void write_manifest(const Scenario& sc, const RunResult& r, const std::string& command, double wall_seconds);

/// Prints a summary of an artifact directory and re-verifies every listed
/// checksum. Returns false if the manifest is missing or a file changed.
bool describe_artifacts(const std::filesystem::path& dir, std::ostream& os);

}  // namespace qfd::app
