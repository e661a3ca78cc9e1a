#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "fedmol/report.hpp"
#include "fedmol/synthetic.hpp"

using namespace fedmol;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("value formatting") {
  CHECK(format_value(std::nullopt) == "NA");
  CHECK(format_value(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_value(0.5) == "0.5");
  CHECK(format_value(1.0) == "1");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_value(x)) == x);
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("per-cluster rows and report assembly") {
  SyntheticSpec spec{10, 10, 8, 4, 128, 2};
  const auto ds = generate_synthetic(spec);
  FederatedData data{ds.manifest, soft_split(ds.records, PartitionConfig{5, 0.9, 50.0, 2})};
  auto cfg = ExperimentConfig::defaults_for(Method::fed_kmeans, 5);
  cfg.dataset = "toy";
  const auto res = run_experiment(cfg, data);

  const auto clusters = cluster_rows(res);
  std::size_t fed_rows = 0, total_size = 0;
  for (const auto& r : clusters) {
    CHECK(r.sf_icf >= 0.0);
    CHECK(r.sf_icf <= 1.0 + 1e-12);
    CHECK(r.kld >= 0.0);
    if (r.setting == "federated") {
      ++fed_rows;
      total_size += r.size;
    }
  }
  CHECK(total_size == ds.records.size());
  std::size_t expected = 0;
  for (const auto& a : res.federated.assignments) expected += static_cast<std::size_t>(a.n_clusters());
  CHECK(fed_rows == expected);

  const auto rows = compare_federated_centralized(cfg, data);
  bool has_random = false, has_mean = false;
  for (const auto& r : rows) {
    has_random |= r.setting == "random";
    has_mean |= r.client == "mean";
  }
  CHECK(has_random);
  CHECK(has_mean);

  const auto root = fs::temp_directory_path() / "fedmol_test_report";
  fs::remove_all(root);
  persist(res, root);
  auto lsh_cfg = ExperimentConfig::defaults_for(Method::fed_lsh, 5);
  lsh_cfg.dataset = "toy";
  lsh_cfg.n_he = 8;
  persist(run_experiment(lsh_cfg, data), root);
  const auto rep = assemble_report(root, root / "out");
  CHECK(rep.experiments == 2);
  const auto long_csv = slurp(rep.long_format);
  CHECK(long_csv.starts_with(std::string(kReportHeader) + "\n"));
  CHECK(long_csv.find(",fed-lsh,") != std::string::npos);
  CHECK(long_csv.find(",fed-kmeans,") != std::string::npos);
  const auto cl = slurp(rep.clusters);
  CHECK(cl.starts_with(std::string(kClusterHeader) + "\n"));
  CHECK(count_lines(cl) > 10);
  // re-assembling gives identical bytes
  const auto again = assemble_report(root, root / "out2");
  CHECK(slurp(again.long_format) == long_csv);
  CHECK_THROWS(assemble_report(root / "missing", root / "out3"));
}
