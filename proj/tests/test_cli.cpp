#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

// Runs the CLI with `args`, returning its exit status; stdout goes to `out`.
int run(const std::string& args, const fs::path& out = "/dev/null") {
  const std::string cmd = std::string("\"") + HETCOV_CLI + "\" " + args + " > \"" + out.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("usage and configuration errors map to distinct exit codes") {
  const auto dir = test_support::scratch_dir("cli_errors");
  CHECK(run("") == 64);
  CHECK(run("frobnicate") == 64);
  CHECK(run("--version") == 0);
  CHECK(run("estimate -d " + q(dir / "missing.json") + " -o " + q(dir / "e.bin")) == 4);
  CHECK(run("estimate --solver magic -d " + q(dir / "missing.json")) == 3);
  CHECK(run("--set estimate.bogus=1 estimate") == 3);
  std::ofstream(dir / "bad.json") << "{\"simulate\": {\"n\": -5}}";
  CHECK(run("-c " + q(dir / "bad.json") + " simulate -o " + q(dir / "ds.json")) == 3);
  std::ofstream(dir / "junk.bin") << "not a container";
  std::ofstream(dir / "junk.json") << "{}";
  CHECK(run("analyze -d " + q(dir / "junk.json") + " -e " + q(dir / "junk.bin")) == 5);
}

TEST_CASE("end-to-end run, determinism and version checks") {
  const auto dir = test_support::scratch_dir("cli_run");
  const std::string common = "--deterministic --cache-dir " + q(dir / "cache") + " ";
  REQUIRE(run(common + "simulate --n 2000 --N 33 --N-res 9 --K 6 --snr-het 0.5 --seed 8 -o " + q(dir / "ds.json")) == 0);
  CHECK(fs::exists(dir / "ds.f32"));
  CHECK(fs::exists(dir / "ds.truth.bin"));

  const auto ds_meta = nlohmann::json::parse(slurp(dir / "ds.json"));
  CHECK(ds_meta.contains("format_version"));
  CHECK(ds_meta.contains("config_hash"));

  REQUIRE(run(common + "estimate -d " + q(dir / "ds.json") + " -o " + q(dir / "a.bin"), dir / "a.out") == 0);
  REQUIRE(run(common + "estimate -d " + q(dir / "ds.json") + " -o " + q(dir / "b.bin")) == 0);
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
  const auto summary = nlohmann::json::parse(slurp(dir / "a.out"));
  CHECK(summary["rank_estimate"] == 1);
  CHECK(!summary.contains("seconds"));

  const std::string ana = common + "analyze -d " + q(dir / "ds.json") + " -e " + q(dir / "a.bin") + " --truth " +
                          q(dir / "ds.truth.bin") + " --volumes-dir " + q(dir / "vols");
  REQUIRE(run(ana + " -o " + q(dir / "r.json") + " --coordinates " + q(dir / "c.csv")) == 0);
  REQUIRE(run(ana + " -o " + q(dir / "r2.json") + " --coordinates " + q(dir / "c2.csv")) == 0);
  CHECK(slurp(dir / "c.csv") == slurp(dir / "c2.csv"));
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(report["format_version"] == 1);
  CHECK(report["C"] == 2);
  const std::string csv = slurp(dir / "c.csv");
  CHECK(csv.rfind("image,re_alpha1,im_alpha1,residual,flagged,true_label,format_version,config_hash\n", 0) == 0);

  REQUIRE(run(common + "analyze --classes 3 -d " + q(dir / "ds.json") + " -e " + q(dir / "a.bin") + " -o " +
              q(dir / "r3.json") + " --coordinates " + q(dir / "c3.csv") + " --volumes-dir " + q(dir / "vols3")) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "r3.json"))["C"] == 3);

  REQUIRE(run(common + "report -r " + q(dir / "r.json") + " --truth " + q(dir / "ds.truth.bin") + " -o " +
              q(dir / "tables")) == 0);
  REQUIRE(run(common + "plot-data -r " + q(dir / "r.json") + " --truth " + q(dir / "ds.truth.bin") + " -o " +
              q(dir / "tables")) == 0);
  for (const char* f : {"alpha_scatter.csv", "mp_reference.csv", "plot_data.json"})
    CHECK_MESSAGE(fs::exists(dir / "tables" / "plot_data" / f), f);
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(dir / "tables"))
    if (e.path().extension() == ".csv") {
      ++csvs;
      const std::string text = slurp(e.path());
      const std::string header = text.substr(0, text.find('\n'));
      CHECK_MESSAGE(header.find("format_version,config_hash") != std::string::npos, e.path());
    }
  CHECK(csvs > 0);

  // A dataset from a future format version is refused with the format code.
  auto bumped = ds_meta;
  bumped["format_version"] = 2;
  std::ofstream(dir / "v2.json") << bumped.dump();
  fs::copy_file(dir / "ds.f32", dir / "v2.f32");
  CHECK(run(common + "estimate -d " + q(dir / "v2.json") + " -o " + q(dir / "v2.bin")) == 5);

  // The report from a different estimate refuses a mismatched dataset.
  REQUIRE(run(common + "simulate --n 300 --N 33 --N-res 9 --K 6 --seed 9 -o " + q(dir / "other.json")) == 0);
  CHECK(run(common + "analyze -d " + q(dir / "other.json") + " -e " + q(dir / "a.bin") + " -o " +
            q(dir / "x.json")) == 5);
}
