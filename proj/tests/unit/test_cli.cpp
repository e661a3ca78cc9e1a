#include <doctest.h>

#include <unistd.h>

#include "cli_harness.hpp"

using testing::run_cli;
using testing::snapshot;
namespace fs = std::filesystem;

namespace {

// generate -> partition into ./shards, small enough to be quick
fs::path prepared(const std::string& name) {
  const auto dir = testing::fresh_dir(name);
  REQUIRE(run_cli(dir, {"generate", "--scaffolds", "20", "--per-scaffold", "25", "--seed", "7", "-o", "d.tsv"}).code == 0);
  REQUIRE(run_cli(dir, {"partition", "--input", "d.tsv", "--clients", "5", "--seed", "7", "--out-dir", "shards"}).code == 0);
  return dir;
}

}  // namespace

TEST_CASE("generate, partition and run populate the results directory") {
  const auto dir = prepared("fedmol_cli_smoke");
  for (int c = 0; c < 5; ++c) CHECK(fs::exists(dir / "shards" / ("d.client" + std::to_string(c) + ".tsv")));
  const auto r = run_cli(dir, {"run", "--shards-dir", "shards", "--method", "fed-kmeans", "--k", "5", "--rounds", "3"});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  const auto files = snapshot(dir / "results");
  CHECK(files.size() == 8);  // 5 clients, aggregate, clusters, config
  bool found = false;
  for (const auto& [path, text] : files)
    if (path.starts_with("d/fed-kmeans/") && path.ends_with("aggregate.csv")) found = true;
  CHECK(found);
}

TEST_CASE("FEDMOL_RESULTS_DIR overrides the output root") {
  const auto dir = prepared("fedmol_cli_env");
  const auto r = run_cli(dir, {"run", "--shards-dir", "shards", "--method", "fed-lsh"},
                         {{"FEDMOL_RESULTS_DIR", (dir / "elsewhere").string()}});
  CHECK(r.code == 0);
  CHECK(!fs::exists(dir / "results"));
  CHECK(!snapshot(dir / "elsewhere").empty());
}

TEST_CASE("run twice with the same seed gives identical files") {
  const auto dir = prepared("fedmol_cli_twice");
  const std::vector<std::string> args{"run", "--input", "d.tsv", "--method", "fed-pca-kmeans", "--seed", "3"};
  REQUIRE(run_cli(dir, args, {{"FEDMOL_RESULTS_DIR", "a"}}).code == 0);
  REQUIRE(run_cli(dir, args, {{"FEDMOL_RESULTS_DIR", "b"}}).code == 0);
  CHECK(snapshot(dir / "a") == snapshot(dir / "b"));
}

TEST_CASE("failures are one machine-parsable line and leave no output") {
  const auto dir = testing::fresh_dir("fedmol_cli_fail");
  const auto missing = run_cli(dir, {"run", "--input", "nope.tsv", "--method", "fed-kmeans"});
  CHECK(missing.code != 0);
  CHECK(missing.err.starts_with("error: dataset: "));
  CHECK(std::count(missing.err.begin(), missing.err.end(), '\n') == 1);
  CHECK(!fs::exists(dir / "results"));

  const auto part = run_cli(dir, {"partition", "--input", "nope.tsv", "--out-dir", "shards"});
  CHECK(part.code != 0);
  CHECK(!fs::exists(dir / "shards"));

  const auto flag = run_cli(dir, {"run", "--bogus"});
  CHECK(flag.code == 2);
  CHECK(flag.err.starts_with("error: usage: "));
  CHECK(flag.err.find("--method") != std::string::npos);

  const auto grid = run_cli(dir, {"run", "--input", "nope.tsv", "--k", "7"});
  CHECK(grid.code == 3);
  CHECK(grid.err.starts_with("error: config: "));

  CHECK(run_cli(dir, {}).code == 2);
  CHECK(run_cli(dir, {"--help"}).code == 0);
}

TEST_CASE("only client-scoped commands print molecule ids, and only their client's") {
  const auto dir = prepared("fedmol_cli_privacy");
  const auto run = run_cli(dir, {"run", "--shards-dir", "shards", "--method", "fed-kmeans"});
  CHECK(run.code == 0);
  CHECK(run.out.find("mol_") == std::string::npos);

  const auto proj = run_cli(dir, {"project", "--shards-dir", "shards", "--client", "2"});
  REQUIRE(proj.code == 0);
  CHECK(proj.out.starts_with("mol_id,pc1,pc2,pc3,cluster\n"));
  const auto shard = testing::read_file(dir / "shards" / "d.client2.tsv");
  std::istringstream lines(proj.out);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    const auto id = line.substr(0, line.find(','));
    CHECK(shard.find("\n" + id + "\t") != std::string::npos);
  }
  CHECK(rows == std::count(shard.begin(), shard.end(), '\n') - 2);

  const auto ex = run_cli(dir, {"explain", "--shards-dir", "shards", "--client", "1", "--trees", "20", "--out-dir", "ex"});
  CHECK(ex.code == 0);
  CHECK(ex.out.find("mol_") == std::string::npos);
  CHECK(fs::exists(dir / "ex" / "client1_importance.csv"));
  CHECK(run_cli(dir, {"explain", "--shards-dir", "shards", "--client", "9"}).code == 3);
}

TEST_CASE("grid and report") {
  const auto dir = prepared("fedmol_cli_grid");
  {
    std::ofstream cfg(dir / "grid.cfg");
    cfg << "dataset = d\nshards_dir = shards\nmethod = fed-kmeans, fed-lsh\nk = 5, 10\nn_he = 16, 32\n";
  }
  const auto g = run_cli(dir, {"grid", "--config", "grid.cfg"});
  CHECK(g.code == 0);
  CHECK(g.out.find("best fed-kmeans ") != std::string::npos);
  CHECK(g.out.find("best fed-lsh ") != std::string::npos);
  CHECK(fs::exists(dir / "results" / "grid" / "summary.csv"));
  const auto r = run_cli(dir, {"report", "--out-dir", "report"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "report" / "report_long.csv"));
  CHECK(fs::exists(dir / "report" / "report_clusters.csv"));
}
