#include "rwflow/manifest.hpp"

#include <atomic>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#ifndef RWFLOW_VERSION
#define RWFLOW_VERSION "unknown"
#endif

namespace rwflow {

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
  static std::atomic<unsigned> counter{ 0 };
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os)
      throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string version_string()
{
  return RWFLOW_VERSION;
}

std::string utc_timestamp(std::chrono::system_clock::time_point when)
{
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string ExperimentManifest::render() const
{
  std::ostringstream os;
  os << "# rwflow experiment manifest\n";
  os << "# experiment: " << experiment << '\n';
  os << "# version: " << version << '\n';
  os << "# started: " << started << '\n';
  os << "# finished: " << finished << '\n';
  os << "# seeds:";
  for (auto s : seeds)
    os << ' ' << s;
  os << '\n';
  os << "# outputs:";
  for (const auto& p : outputs)
    os << ' ' << p.string();
  os << '\n';
  os << configuration;
  if (!configuration.empty() && configuration.back() != '\n')
    os << '\n';
  return os.str();
}

std::filesystem::path write_manifest(const ExperimentManifest& manifest, const std::filesystem::path& dir)
{
  const auto path = dir / (manifest.experiment + "_manifest.ini");
  write_file_atomic(path, manifest.render());
  return path;
}

} // namespace rwflow
