#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int rwflow(const std::string& args)
{
  const std::string cmd = std::string(RWFLOW_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("rwflow_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

} // namespace

TEST_CASE("usage errors exit with code 2")
{
  const auto dir = scratch("usage");
  CHECK(rwflow("--out-dir " + dir.string() + " sample --target banana --n 8 --steps 2") == 2);
  CHECK(rwflow("sample --no-such-flag") == 2);
  CHECK(rwflow("sample --method langevin") == 2);
  CHECK(rwflow("sample --tau -1") == 2);
  CHECK(rwflow("") == 2);
  CHECK(rwflow("bandwidth-sweep --methods svgd") == 2);
  CHECK(!fs::exists(dir));
}

TEST_CASE("sample writes metrics, positions and a manifest")
{
  const auto dir = scratch("sample");
  REQUIRE(rwflow("sample --target gaussian --dim 2 --method kdrw_fft --n 256 --steps 1000 --tau 0.05 --seed 1 "
                 "--deterministic --out-dir " +
                 dir.string()) == 0);
  CHECK(fs::exists(dir / "sample.csv"));
  CHECK(fs::exists(dir / "sample_positions.csv"));
  CHECK(fs::exists(dir / "sample_manifest.ini"));
  const std::string manifest = slurp(dir / "sample_manifest.ini");
  CHECK(manifest.find("# seeds: 1") != std::string::npos);
  CHECK(manifest.find("method=\"kdrw_fft\"") != std::string::npos);
  CHECK(manifest.find("convergence.") == std::string::npos);
}

TEST_CASE("rerunning from a manifest reproduces the CSVs")
{
  const auto dir = scratch("rerun");
  REQUIRE(rwflow("--deterministic --seed 7 --out-dir " + dir.string() +
                 " sample --target banana --dim 3 --method rrw_fft --n 64 --steps 300 --tau 0.02 "
                 "--metrics mmd2_T var_per_coord --record-every 50") == 0);
  const std::string metrics = slurp(dir / "sample.csv");
  const std::string positions = slurp(dir / "sample_positions.csv");
  fs::copy_file(dir / "sample_manifest.ini", dir / "saved.ini");
  fs::remove(dir / "sample.csv");
  fs::remove(dir / "sample_positions.csv");
  REQUIRE(rwflow("--config " + (dir / "saved.ini").string()) == 0);
  CHECK(slurp(dir / "sample.csv") == metrics);
  CHECK(slurp(dir / "sample_positions.csv") == positions);

  // Flags on the command line override the file.
  REQUIRE(rwflow("--config " + (dir / "saved.ini").string() + " --seed 8") == 0);
  CHECK(slurp(dir / "sample_positions.csv") != positions);
}

TEST_CASE("continuum1d accepts its documented flags")
{
  const auto dir = scratch("continuum");
  REQUIRE(rwflow("--out-dir " + dir.string() +
                 " continuum1d --kernel-bandwidth 0.3 --eps 0.001 --tau 0.005 --h 0.02 --steps 20 --out trace.csv") == 0);
  std::ifstream in(dir / "trace.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,kl,dissipation,balance_residual,mass");
  CHECK(fs::exists(dir / "continuum1d_manifest.ini"));
}

TEST_CASE("runtime failures exit with code 1")
{
  const auto dir = scratch("abort");
  CHECK(rwflow("--out-dir " + dir.string() +
               " sample --n 16 --steps 5 --bandwidth 0.0001 --fft-max-grid 64") == 1);
  CHECK(rwflow("--out-dir " + dir.string() + " continuum1d --tau 50 --steps 2") == 1);
}

TEST_CASE("manifests with unset list options replay")
{
  const auto dir = scratch("sweep_replay");
  REQUIRE(rwflow("--deterministic --out-dir " + dir.string() +
                 " bandwidth-sweep --n 64 --b-min 0.2 --b-max 1 --b-count 2 --steps 50 --trials 1 --iid-trials 2") ==
          0);
  const std::string manifest = slurp(dir / "bandwidth_sweep_manifest.ini");
  CHECK(manifest.find("{}") == std::string::npos);
  const std::string first = slurp(dir / "bandwidth_sweep.csv");
  fs::remove(dir / "bandwidth_sweep.csv");
  REQUIRE(rwflow("--config " + (dir / "bandwidth_sweep_manifest.ini").string()) == 0);
  CHECK(slurp(dir / "bandwidth_sweep.csv") == first);
}
