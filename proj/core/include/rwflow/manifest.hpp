#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rwflow {

//! Writes `content` to a sibling temporary file and renames it over `path`,
//! creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string version_string();

//! ISO-8601 UTC timestamp with second resolution.
std::string utc_timestamp(std::chrono::system_clock::time_point when);

//! Record of one experiment invocation. `configuration` is an INI document
//! holding every resolved flag; the metadata is rendered as `#` comments so
//! the file can be passed straight back to `--config`.
struct ExperimentManifest
{
  std::string experiment;
  std::string configuration;
  std::vector<std::uint64_t> seeds;
  std::string version = version_string();
  std::string started;
  std::string finished;
  std::vector<std::filesystem::path> outputs;

  std::string render() const;
};

//! Writes `<dir>/<experiment>_manifest.ini` atomically and returns its path.
std::filesystem::path write_manifest(const ExperimentManifest& manifest, const std::filesystem::path& dir);

} // namespace rwflow
